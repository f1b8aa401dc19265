//! Rooted trees with feature-labelled edges and labelled tips.
//!
//! A [`RawTree`] is the unchecked description (what the problem file holds);
//! [`LabeledTree`] is the validated arborescence every other module consumes.
//! Internal node ids carry no meaning: identity, topology and ordering are all
//! driven by tip labels.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("invalid feature schema: {0}")]
    InvalidSchema(String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("cycle detected through node `{0}`")]
    CycleDetected(String),
    #[error("node `{0}` has more than one parent")]
    MultipleParents(String),
    #[error("node `{0}` is not reachable from the root")]
    UnreachableNode(String),
    #[error("terminal node `{0}` has a child")]
    TerminalHasChild(String),
    #[error("internal node `{0}` has no children")]
    InternalWithoutChildren(String),
    #[error("edge {from}→{to} has {found} features, schema declares {expected}")]
    FeatureArityMismatch { from: String, to: String, expected: usize, found: usize },
    #[error("edge {from}→{to} has a non-finite feature value")]
    NonFiniteFeature { from: String, to: String },
    #[error("node `{0}` is not a terminal")]
    NotATerminal(String),
    #[error("both tips are `{0}`")]
    SameTip(String),
    #[error("the root is a terminal; there is nothing to binarize")]
    RootIsTerminal,
    #[error("relabelling produces duplicate node id `{0}`")]
    LabelCollision(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combinator {
    Additive,
    Multiplicative,
}

impl Combinator {
    pub fn neutral<S: Scalar>(self) -> S {
        match self {
            Combinator::Additive => S::zero(),
            Combinator::Multiplicative => S::one(),
        }
    }

    pub fn combine<S: Scalar>(self, a: S, b: S) -> S {
        match self {
            Combinator::Additive => a + b,
            Combinator::Multiplicative => a * b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub combinator: Combinator,
}

/// Ordered edge-feature declarations; its length is the feature arity `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Feature>", into = "Vec<Feature>")]
pub struct FeatureSchema {
    features: Vec<Feature>,
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>) -> Result<Self, TreeError> {
        let mut seen = HashSet::new();
        for f in &features {
            if f.name.is_empty() {
                return Err(TreeError::InvalidSchema("feature name is empty".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(TreeError::InvalidSchema(format!("feature `{}` declared twice", f.name)));
            }
        }
        Ok(Self { features })
    }

    /// Single-feature schema, the common case for mazes and decision trees.
    pub fn single(name: &str, combinator: Combinator) -> Self {
        Self { features: vec![Feature { name: name.to_string(), combinator }] }
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn arity(&self) -> usize {
        self.features.len()
    }

    pub fn combinator(&self, index: usize) -> Combinator {
        self.features[index].combinator
    }
}

impl TryFrom<Vec<Feature>> for FeatureSchema {
    type Error = TreeError;

    fn try_from(features: Vec<Feature>) -> Result<Self, TreeError> {
        Self::new(features)
    }
}

impl From<FeatureSchema> for Vec<Feature> {
    fn from(schema: FeatureSchema) -> Self {
        schema.features
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RawNode<S> {
    pub id: String,
    pub terminal: bool,
    #[serde(default)]
    pub labels: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RawEdge<S> {
    pub from: String,
    pub to: String,
    pub features: Vec<S>,
}

/// Unvalidated tree description.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTree<S> {
    pub schema: FeatureSchema,
    pub root: String,
    pub nodes: Vec<RawNode<S>>,
    pub edges: Vec<RawEdge<S>>,
}

impl<S: Scalar> RawTree<S> {
    /// Builds a description from an edge list; nodes without outgoing edges become terminals.
    pub fn from_edges(schema: FeatureSchema, root: &str, edges: &[(&str, &str, &[f64])]) -> Self {
        let mut order: Vec<&str> = vec![root];
        let mut has_child = HashSet::new();
        for &(from, to, _) in edges {
            has_child.insert(from);
            for id in [from, to] {
                if !order.contains(&id) {
                    order.push(id);
                }
            }
        }
        let nodes = order
            .iter()
            .map(|&id| RawNode { id: id.to_string(), terminal: !has_child.contains(id), labels: Vec::new() })
            .collect();
        let edges = edges
            .iter()
            .map(|&(from, to, f)| RawEdge {
                from: from.to_string(),
                to: to.to_string(),
                features: f.iter().map(|&x| S::lit(x)).collect(),
            })
            .collect();
        Self { schema, root: root.to_string(), nodes, edges }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Internal,
    Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<S> {
    pub id: String,
    pub kind: NodeKind,
    pub labels: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<S> {
    pub parent: usize,
    pub child: usize,
    pub features: Vec<S>,
}

/// Checks every arborescence invariant of a raw description.
pub fn validate<S: Scalar>(raw: &RawTree<S>) -> Result<(), TreeError> {
    Indexed::build(raw).map(|_| ())
}

struct Indexed {
    lookup: HashMap<String, usize>,
    ends: Vec<(usize, usize)>,
    parent_edge: Vec<Option<usize>>,
    child_edges: Vec<Vec<usize>>,
    root: usize,
}

impl Indexed {
    fn build<S: Scalar>(raw: &RawTree<S>) -> Result<Self, TreeError> {
        let mut lookup = HashMap::with_capacity(raw.nodes.len());
        for (i, n) in raw.nodes.iter().enumerate() {
            if lookup.insert(n.id.clone(), i).is_some() {
                return Err(TreeError::DuplicateNode(n.id.clone()));
            }
        }
        let find = |id: &str| lookup.get(id).copied().ok_or_else(|| TreeError::UnknownNode(id.to_string()));
        let root = find(&raw.root)?;
        let mut ends = Vec::with_capacity(raw.edges.len());
        for e in &raw.edges {
            ends.push((find(&e.from)?, find(&e.to)?));
        }

        let n = raw.nodes.len();
        let mut child_edges = vec![Vec::new(); n];
        for (k, &(p, _)) in ends.iter().enumerate() {
            child_edges[p].push(k);
        }

        // Directed cycle search, three colours.
        let mut colour = vec![0u8; n];
        for start in 0..n {
            if colour[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            colour[start] = 1;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if let Some(&k) = child_edges[node].get(*next) {
                    *next += 1;
                    let c = ends[k].1;
                    match colour[c] {
                        0 => {
                            colour[c] = 1;
                            stack.push((c, 0));
                        }
                        1 => return Err(TreeError::CycleDetected(raw.nodes[c].id.clone())),
                        _ => {}
                    }
                } else {
                    colour[node] = 2;
                    stack.pop();
                }
            }
        }

        let mut parent_edge = vec![None; n];
        for (k, &(_, c)) in ends.iter().enumerate() {
            if parent_edge[c].replace(k).is_some() {
                return Err(TreeError::MultipleParents(raw.nodes[c].id.clone()));
            }
        }

        let mut reached = vec![false; n];
        let mut stack = vec![root];
        reached[root] = true;
        while let Some(u) = stack.pop() {
            for &k in &child_edges[u] {
                let c = ends[k].1;
                if !reached[c] {
                    reached[c] = true;
                    stack.push(c);
                }
            }
        }
        if let Some(i) = reached.iter().position(|r| !r) {
            return Err(TreeError::UnreachableNode(raw.nodes[i].id.clone()));
        }

        for (i, node) in raw.nodes.iter().enumerate() {
            match (node.terminal, child_edges[i].is_empty()) {
                (true, false) => return Err(TreeError::TerminalHasChild(node.id.clone())),
                (false, true) => return Err(TreeError::InternalWithoutChildren(node.id.clone())),
                _ => {}
            }
        }

        let m = raw.schema.arity();
        for e in &raw.edges {
            if e.features.len() != m {
                return Err(TreeError::FeatureArityMismatch {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    expected: m,
                    found: e.features.len(),
                });
            }
            if e.features.iter().any(|x| !x.is_finite()) {
                return Err(TreeError::NonFiniteFeature { from: e.from.clone(), to: e.to.clone() });
            }
        }

        Ok(Self { lookup, ends, parent_edge, child_edges, root })
    }
}

/// Validated rooted tree. Immutable once built.
#[derive(Debug, Clone)]
pub struct LabeledTree<S> {
    schema: FeatureSchema,
    root: usize,
    nodes: Vec<Node<S>>,
    edges: Vec<Edge<S>>,
    parent_edge: Vec<Option<usize>>,
    child_edges: Vec<Vec<usize>>,
    lookup: HashMap<String, usize>,
}

impl<S: Scalar> LabeledTree<S> {
    pub fn new(raw: RawTree<S>) -> Result<Self, TreeError> {
        let ix = Indexed::build(&raw)?;
        let nodes = raw
            .nodes
            .into_iter()
            .map(|n| Node {
                id: n.id,
                kind: if n.terminal { NodeKind::Terminal } else { NodeKind::Internal },
                labels: n.labels,
            })
            .collect();
        let edges = raw
            .edges
            .into_iter()
            .zip(&ix.ends)
            .map(|(e, &(parent, child))| Edge { parent, child, features: e.features })
            .collect();
        Ok(Self {
            schema: raw.schema,
            root: ix.root,
            nodes,
            edges,
            parent_edge: ix.parent_edge,
            child_edges: ix.child_edges,
            lookup: ix.lookup,
        })
    }

    pub fn to_raw(&self) -> RawTree<S> {
        RawTree {
            schema: self.schema.clone(),
            root: self.nodes[self.root].id.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| RawNode { id: n.id.clone(), terminal: n.kind == NodeKind::Terminal, labels: n.labels.clone() })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| RawEdge {
                    from: self.nodes[e.parent].id.clone(),
                    to: self.nodes[e.child].id.clone(),
                    features: e.features.clone(),
                })
                .collect(),
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn feature_arity(&self) -> usize {
        self.schema.arity()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[Node<S>] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &Node<S> {
        &self.nodes[index]
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> &Edge<S> {
        &self.edges[index]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.nodes[index].id
    }

    pub fn is_terminal(&self, index: usize) -> bool {
        self.nodes[index].kind == NodeKind::Terminal
    }

    pub fn parent_edge(&self, node: usize) -> Option<usize> {
        self.parent_edge[node]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent_edge[node].map(|k| self.edges[k].parent)
    }

    /// Outgoing edges in declaration order.
    pub fn child_edges(&self, node: usize) -> &[usize] {
        &self.child_edges[node]
    }

    /// `parent→child` rendering of an edge.
    pub fn edge_label(&self, edge: usize) -> String {
        let e = &self.edges[edge];
        format!("{}→{}", self.nodes[e.parent].id, self.nodes[e.child].id)
    }

    /// Terminal node indices in declaration order.
    pub fn tips(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.is_terminal(i)).collect()
    }

    pub fn tip_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Terminal).count()
    }

    /// Tip labels in ascending order.
    pub fn tip_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.tips().into_iter().map(|i| self.nodes[i].id.clone()).collect();
        labels.sort();
        labels
    }

    pub fn depth(&self, mut node: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent(node) {
            node = p;
            d += 1;
        }
        d
    }

    /// Looks up a node id and requires it to be a terminal.
    pub fn terminal_index(&self, id: &str) -> Result<usize, TreeError> {
        match self.node_index(id) {
            Some(i) if self.is_terminal(i) => Ok(i),
            Some(_) => Err(TreeError::NotATerminal(id.to_string())),
            None => Err(TreeError::UnknownNode(id.to_string())),
        }
    }

    /// Nodes in preorder following declaration order.
    fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            out.push(u);
            for &k in self.child_edges[u].iter().rev() {
                stack.push(self.edges[k].child);
            }
        }
        out
    }

    /// Smallest tip label below (or at) every node.
    fn min_tip_labels(&self) -> Vec<&str> {
        let mut min: Vec<Option<&str>> = vec![None; self.nodes.len()];
        for &u in self.preorder().iter().rev() {
            if self.is_terminal(u) {
                min[u] = Some(self.nodes[u].id.as_str());
            }
            if let (Some(p), Some(label)) = (self.parent(u), min[u]) {
                if min[p].is_none_or(|cur| label < cur) {
                    min[p] = Some(label);
                }
            }
        }
        min.into_iter().map(|m| m.expect("every subtree holds a tip")).collect()
    }

    /// Child nodes of `node`, ordered by the smallest tip label in their subtree.
    pub fn sorted_children(&self, node: usize) -> Vec<usize> {
        let min = self.min_tip_labels();
        self.sorted_children_with(node, &min)
    }

    fn sorted_children_with(&self, node: usize, min: &[&str]) -> Vec<usize> {
        let mut kids: Vec<usize> = self.child_edges[node].iter().map(|&k| self.edges[k].child).collect();
        kids.sort_by(|&a, &b| min[a].cmp(min[b]));
        kids
    }

    /// Sorted tip labels below each node.
    pub fn clusters(&self) -> Vec<Vec<String>> {
        let mut below: Vec<Vec<String>> = vec![Vec::new(); self.nodes.len()];
        for &u in self.preorder().iter().rev() {
            if self.is_terminal(u) {
                below[u].push(self.nodes[u].id.clone());
            }
            below[u].sort();
            if let Some(p) = self.parent(u) {
                let mine = below[u].clone();
                below[p].extend(mine);
            }
        }
        below
    }

    /// Every edge keyed by the tip set it separates plus its rank among edges
    /// with the same tip set (counted from the root). Unique per edge.
    pub fn edge_keys(&self) -> Vec<(Vec<String>, usize)> {
        let clusters = self.clusters();
        let mut keys = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let cluster = clusters[e.child].clone();
            let mut rank = 0;
            let mut up = self.parent_edge[e.parent];
            while let Some(j) = up {
                if clusters[self.edges[j].child] == cluster {
                    rank += 1;
                } else {
                    break;
                }
                up = self.parent_edge[self.edges[j].parent];
            }
            keys.push((cluster, rank));
        }
        keys
    }

    /// Every internal node has exactly two children, except that the root may have one.
    pub fn is_binary(&self) -> bool {
        (0..self.nodes.len()).all(|u| match self.child_edges[u].len() {
            0 => self.is_terminal(u),
            1 => u == self.root,
            2 => true,
            _ => false,
        })
    }

    /// Renames tips through `map` (unmapped tips keep their label).
    pub fn relabel_tips(&self, map: &BTreeMap<String, String>) -> Result<Self, TreeError> {
        let mut raw = self.to_raw();
        let renamed: HashMap<&str, &str> = self
            .tips()
            .into_iter()
            .filter_map(|t| map.get(&self.nodes[t].id).map(|to| (self.nodes[t].id.as_str(), to.as_str())))
            .collect();
        let rename = |id: &mut String| {
            if let Some(&to) = renamed.get(id.as_str()) {
                *id = to.to_string();
            }
        };
        for n in &mut raw.nodes {
            rename(&mut n.id);
        }
        for e in &mut raw.edges {
            rename(&mut e.to);
        }
        let mut seen = HashSet::new();
        for n in &raw.nodes {
            if !seen.insert(n.id.as_str()) {
                return Err(TreeError::LabelCollision(n.id.clone()));
            }
        }
        Self::new(raw)
    }

    /// Applies `f` to every edge feature vector.
    pub fn map_features(&self, mut f: impl FnMut(usize, S) -> S) -> Result<Self, TreeError> {
        let mut raw = self.to_raw();
        for e in &mut raw.edges {
            for (l, x) in e.features.iter_mut().enumerate() {
                *x = f(l, *x);
            }
        }
        Self::new(raw)
    }
}

/// Deepest common ancestor of two distinct tips.
pub fn mrca<S: Scalar>(tree: &LabeledTree<S>, tip_i: &str, tip_j: &str) -> Result<usize, TreeError> {
    let i = tree.terminal_index(tip_i)?;
    let j = tree.terminal_index(tip_j)?;
    if i == j {
        return Err(TreeError::SameTip(tip_i.to_string()));
    }
    Ok(mrca_index(tree, i, j))
}

pub(crate) fn mrca_index<S: Scalar>(tree: &LabeledTree<S>, i: usize, j: usize) -> usize {
    let mut ancestors = HashSet::new();
    let mut u = Some(i);
    while let Some(x) = u {
        ancestors.insert(x);
        u = tree.parent(x);
    }
    let mut v = j;
    while !ancestors.contains(&v) {
        v = tree.parent(v).expect("root is a common ancestor");
    }
    v
}

fn internal_clusters<S: Scalar>(tree: &LabeledTree<S>) -> Vec<Vec<String>> {
    let clusters = tree.clusters();
    let mut out: Vec<Vec<String>> =
        tree.edges().iter().filter(|e| !tree.is_terminal(e.child)).map(|e| clusters[e.child].clone()).collect();
    out.sort();
    out
}

/// Same tip set and the same multiset of tip clusters cut off by internal edges.
pub fn same_topology<S: Scalar>(a: &LabeledTree<S>, b: &LabeledTree<S>) -> bool {
    a.tip_labels() == b.tip_labels() && internal_clusters(a) == internal_clusters(b)
}

/// Same topology and identical feature vectors on corresponding edges.
pub fn tree_equal<S: Scalar>(a: &LabeledTree<S>, b: &LabeledTree<S>) -> bool {
    if a.feature_arity() != b.feature_arity() || a.edges().len() != b.edges().len() || !same_topology(a, b) {
        return false;
    }
    let keyed = |t: &LabeledTree<S>| -> BTreeMap<(Vec<String>, usize), Vec<S>> {
        t.edge_keys().into_iter().zip(t.edges()).map(|(k, e)| (k, e.features.clone())).collect()
    };
    keyed(a) == keyed(b)
}

/// Edge indices in canonical preorder: children visited by ascending smallest tip label.
pub fn canonical_edge_order<S: Scalar>(tree: &LabeledTree<S>) -> Vec<usize> {
    let min = tree.min_tip_labels();
    let mut out = Vec::with_capacity(tree.edges().len());
    let mut stack = vec![tree.root()];
    while let Some(u) = stack.pop() {
        if let Some(k) = tree.parent_edge(u) {
            out.push(k);
        }
        for c in tree.sorted_children_with(u, &min).into_iter().rev() {
            stack.push(c);
        }
    }
    out
}

/// Converts to a binary tree: unary chains are merged per combinator, wider
/// branchings become a left-leaning chain of auxiliary nodes whose inserted
/// edges carry the neutral element. A unary root is kept.
pub fn binarize<S: Scalar>(tree: &LabeledTree<S>) -> Result<LabeledTree<S>, TreeError> {
    if tree.is_terminal(tree.root()) {
        return Err(TreeError::RootIsTerminal);
    }
    let schema = tree.schema().clone();
    let min = tree.min_tip_labels();
    let neutral: Vec<S> = schema.features().iter().map(|f| f.combinator.neutral()).collect();
    let mut taken: BTreeSet<String> = tree.nodes().iter().map(|n| n.id.clone()).collect();
    let mut used: Vec<bool> = vec![false; tree.nodes().len()];
    let mut extra_nodes: Vec<RawNode<S>> = Vec::new();
    let mut edges: Vec<RawEdge<S>> = Vec::new();

    // Follows a unary chain downwards starting with edge `k`.
    let collapse = |k: usize| -> (usize, Vec<S>) {
        let mut feats = tree.edge(k).features.clone();
        let mut node = tree.edge(k).child;
        while !tree.is_terminal(node) && tree.child_edges(node).len() == 1 {
            let next = tree.child_edges(node)[0];
            for (l, x) in feats.iter_mut().enumerate() {
                *x = schema.combinator(l).combine(*x, tree.edge(next).features[l]);
            }
            node = tree.edge(next).child;
        }
        (node, feats)
    };

    used[tree.root()] = true;
    let mut stack = vec![tree.root()];
    while let Some(u) = stack.pop() {
        let mut kids: Vec<(usize, Vec<S>)> = tree.child_edges(u).iter().map(|&k| collapse(k)).collect();
        kids.sort_by(|a, b| min[a.0].cmp(min[b.0]));
        for (c, _) in &kids {
            used[*c] = true;
            stack.push(*c);
        }
        let mut parent = tree.id(u).to_string();
        let mut rest = kids.as_slice();
        while rest.len() > 2 {
            let (c, f) = &rest[0];
            edges.push(RawEdge { from: parent.clone(), to: tree.id(*c).to_string(), features: f.clone() });
            let aux = fresh_id(&mut taken, tree.id(u));
            extra_nodes.push(RawNode { id: aux.clone(), terminal: false, labels: Vec::new() });
            edges.push(RawEdge { from: parent, to: aux.clone(), features: neutral.clone() });
            parent = aux;
            rest = &rest[1..];
        }
        for (c, f) in rest {
            edges.push(RawEdge { from: parent.clone(), to: tree.id(*c).to_string(), features: f.clone() });
        }
    }

    let mut nodes: Vec<RawNode<S>> = tree
        .nodes()
        .iter()
        .enumerate()
        .filter(|(i, _)| used[*i])
        .map(|(_, n)| RawNode { id: n.id.clone(), terminal: n.kind == NodeKind::Terminal, labels: n.labels.clone() })
        .collect();
    nodes.extend(extra_nodes);
    LabeledTree::new(RawTree { schema, root: tree.id(tree.root()).to_string(), nodes, edges })
}

fn fresh_id(taken: &mut BTreeSet<String>, base: &str) -> String {
    let mut n = 1usize;
    loop {
        let candidate = format!("{base}+{n}");
        if taken.insert(candidate.clone()) {
            return candidate;
        }
        n += 1;
    }
}
