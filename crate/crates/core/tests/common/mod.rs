//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::PathBuf;
use std::rc::Rc;

use arbor::{
    Combinator, Feature, FeatureSchema, LabeledTree, ProblemFile, ProblemKind, RawEdge, RawNode, RawTree, TreeProblem,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn load_problem(name: &str) -> TreeProblem<f64> {
    serde_json::from_str::<ProblemFile<f64>>(&read_fixture(name)).unwrap().into_problem(name, false).unwrap()
}

pub fn four_tip() -> LabeledTree<f64> {
    load_problem("four_tip.json").tree().clone()
}

/// The four-tip tree with every sibling list reversed.
pub fn four_tip_mirrored() -> LabeledTree<f64> {
    let mut raw = four_tip().to_raw();
    raw.edges.reverse();
    raw.nodes.reverse();
    let root = raw.nodes.iter().position(|n| n.id == raw.root).unwrap();
    raw.nodes.swap(0, root);
    LabeledTree::new(raw).unwrap()
}

pub fn tips(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("t{i:02}")).collect()
}

pub fn additive_schema(m: usize) -> FeatureSchema {
    FeatureSchema::new((0..m).map(|l| Feature { name: format!("f{l}"), combinator: Combinator::Additive }).collect())
        .unwrap()
}

pub fn probability_schema() -> FeatureSchema {
    FeatureSchema::single("p", Combinator::Multiplicative)
}

/// Builds a raw tree from nested edges, numbering internal nodes `n1, n2, …` under root `n0`.
struct Builder<'a, R: Rng> {
    rng: &'a mut R,
    features: &'a mut dyn FnMut(&mut R) -> Vec<f64>,
    nodes: Vec<RawNode<f64>>,
    edges: Vec<RawEdge<f64>>,
    next: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn internal(&mut self) -> String {
        let id = format!("n{}", self.next);
        self.next += 1;
        self.nodes.push(RawNode { id: id.clone(), terminal: false, labels: vec![] });
        id
    }

    fn edge(&mut self, from: &str, to: &str) {
        let features = (self.features)(self.rng);
        self.edges.push(RawEdge { from: from.into(), to: to.into(), features });
    }

    fn topo(&mut self, parent: &str, t: &Topo, tips: &[String]) {
        match t {
            Topo::Leaf(i) => {
                self.nodes.push(RawNode { id: tips[*i].clone(), terminal: true, labels: vec![] });
                self.edge(parent, &tips[*i]);
            }
            Topo::Node(l, r) => {
                let v = self.internal();
                self.edge(parent, &v);
                self.topo(&v, l, tips);
                self.topo(&v, r, tips);
            }
        }
    }
}

/// Rooted binary topology over tip indices.
#[derive(Debug, Clone)]
pub enum Topo {
    Leaf(usize),
    Node(Rc<Topo>, Rc<Topo>),
}

impl Topo {
    pub fn leaves(&self) -> usize {
        match self {
            Topo::Leaf(_) => 1,
            Topo::Node(l, r) => l.leaves() + r.leaves(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Topo::Leaf(_) => 0,
            Topo::Node(l, r) => 1 + l.height().max(r.height()),
        }
    }

    /// Every way of attaching leaf `new` to an edge of `self` (or above its root).
    fn insertions(&self, new: usize) -> Vec<Topo> {
        let mut out = vec![Topo::Node(Rc::new(self.clone()), Rc::new(Topo::Leaf(new)))];
        if let Topo::Node(l, r) = self {
            for li in l.insertions(new) {
                out.push(Topo::Node(Rc::new(li), r.clone()));
            }
            for ri in r.insertions(new) {
                out.push(Topo::Node(l.clone(), Rc::new(ri)));
            }
        }
        out
    }

    /// Renumbers leaves left to right.
    fn number(&self, next: &mut usize) -> Topo {
        match self {
            Topo::Leaf(_) => {
                *next += 1;
                Topo::Leaf(*next - 1)
            }
            Topo::Node(l, r) => Topo::Node(Rc::new(l.number(next)), Rc::new(r.number(next))),
        }
    }
}

/// All `(2k-3)!!` rooted binary topologies over `k ≥ 2` labelled tips.
pub fn all_topologies(k: usize) -> Vec<Topo> {
    let mut current = vec![Topo::Leaf(0)];
    for new in 1..k {
        current = current.iter().flat_map(|t| t.insertions(new)).collect();
    }
    current
}

/// All rooted binary shapes (up to isomorphism) of height at most `h`, leaves numbered left to right.
pub fn binary_shapes(h: usize) -> Vec<Topo> {
    let mut shapes = vec![Topo::Leaf(0)];
    for _ in 0..h {
        let prev = shapes.clone();
        shapes = vec![Topo::Leaf(0)];
        for i in 0..prev.len() {
            for j in i..prev.len() {
                shapes.push(Topo::Node(Rc::new(prev[i].clone()), Rc::new(prev[j].clone())));
            }
        }
    }
    shapes.into_iter().map(|s| s.number(&mut 0)).collect()
}

/// Raw tree for a topology whose root is binary; features drawn from `features`.
pub fn topo_to_raw<R: Rng>(
    rng: &mut R,
    topo: &Topo,
    tips: &[String],
    schema: FeatureSchema,
    features: &mut dyn FnMut(&mut R) -> Vec<f64>,
) -> RawTree<f64> {
    let mut b = Builder { rng, features, nodes: Vec::new(), edges: Vec::new(), next: 1 };
    b.nodes.push(RawNode { id: "n0".into(), terminal: false, labels: vec![] });
    match topo {
        Topo::Leaf(_) => panic!("a lone tip cannot be a tree"),
        Topo::Node(l, r) => {
            b.topo("n0", l, tips);
            b.topo("n0", r, tips);
        }
    }
    RawTree { schema, root: "n0".into(), nodes: b.nodes, edges: b.edges }
}

/// Uniformly random split-based binary topology over `k` tips.
pub fn random_topo<R: Rng>(rng: &mut R, k: usize) -> Topo {
    let mut idx: Vec<usize> = (0..k).collect();
    idx.shuffle(rng);
    fn split<R: Rng>(rng: &mut R, idx: &[usize]) -> Topo {
        if idx.len() == 1 {
            return Topo::Leaf(idx[0]);
        }
        let cut = rng.gen_range(1..idx.len());
        Topo::Node(Rc::new(split(rng, &idx[..cut])), Rc::new(split(rng, &idx[cut..])))
    }
    split(rng, &idx)
}

pub fn random_lengths<R: Rng>(m: usize) -> impl FnMut(&mut R) -> Vec<f64> {
    move |rng: &mut R| (0..m).map(|_| rng.gen_range(0.1..5.0)).collect()
}

pub fn random_tree<R: Rng>(rng: &mut R, k: usize, m: usize) -> LabeledTree<f64> {
    let topo = random_topo(rng, k);
    LabeledTree::new(topo_to_raw(rng, &topo, &tips(k), additive_schema(m), &mut random_lengths(m))).unwrap()
}

pub fn random_decision<R: Rng>(rng: &mut R, k: usize) -> TreeProblem<f64> {
    let topo = random_topo(rng, k);
    let raw = topo_to_raw(rng, &topo, &tips(k), probability_schema(), &mut |r: &mut R| vec![r.gen_range(0.05..1.0)]);
    TreeProblem::new("decision", ProblemKind::Decision, LabeledTree::new(raw).unwrap(), false).unwrap()
}

pub fn random_permutation<R: Rng>(rng: &mut R, labels: &[String]) -> BTreeMap<String, String> {
    let mut shuffled = labels.to_vec();
    shuffled.shuffle(rng);
    labels.iter().cloned().zip(shuffled).collect()
}

/// Best tip by brute-force enumeration of root-to-tip probability products.
pub fn most_probable_tip(raw: &RawTree<f64>) -> String {
    let mut best: Option<(f64, String)> = None;
    let mut stack = vec![(raw.root.clone(), 1.0)];
    while let Some((u, p)) = stack.pop() {
        let node = raw.nodes.iter().find(|n| n.id == u).unwrap();
        if node.terminal {
            if best.as_ref().is_none_or(|(b, _)| p > *b) {
                best = Some((p, u));
            }
            continue;
        }
        for e in raw.edges.iter().filter(|e| e.from == u) {
            stack.push((e.to.clone(), p * e.features[0]));
        }
    }
    best.unwrap().1
}

/// Random simply connected open region grown cell by cell (each new cell touches exactly one open cell).
pub fn random_grown_maze<R: Rng>(rng: &mut R, max_w: usize, max_h: usize) -> String {
    let w = rng.gen_range(2..=max_w);
    let h = rng.gen_range(2..=max_h);
    let mut open = vec![vec![false; w]; h];
    let start = (rng.gen_range(0..h), rng.gen_range(0..w));
    open[start.0][start.1] = true;
    let target = rng.gen_range(2..=w * h);
    let mut count = 1;
    while count < target {
        let candidates: Vec<(usize, usize)> = (0..h)
            .flat_map(|r| (0..w).map(move |c| (r, c)))
            .filter(|&(r, c)| !open[r][c] && neighbours(r, c, w, h).iter().filter(|&&(a, b)| open[a][b]).count() == 1)
            .collect();
        let Some(&(r, c)) = candidates.choose(rng) else { break };
        open[r][c] = true;
        count += 1;
    }
    place_markers(rng, &open)
}

/// Classic perfect maze on a `(2a+1) × (2b+1)` grid by randomized depth-first search.
/// Needs `a * b >= 2`.
pub fn random_perfect_maze<R: Rng>(rng: &mut R, a: usize, b: usize) -> String {
    let (h, w) = (2 * a + 1, 2 * b + 1);
    let mut open = vec![vec![false; w]; h];
    let mut seen = vec![vec![false; b]; a];
    let mut stack = vec![(rng.gen_range(0..a), rng.gen_range(0..b))];
    seen[stack[0].0][stack[0].1] = true;
    open[2 * stack[0].0 + 1][2 * stack[0].1 + 1] = true;
    while let Some(&(r, c)) = stack.last() {
        let mut next: Vec<(usize, usize)> = Vec::new();
        if r > 0 {
            next.push((r - 1, c));
        }
        if c > 0 {
            next.push((r, c - 1));
        }
        if r + 1 < a {
            next.push((r + 1, c));
        }
        if c + 1 < b {
            next.push((r, c + 1));
        }
        next.retain(|&(x, y)| !seen[x][y]);
        match next.choose(rng) {
            Some(&(x, y)) => {
                seen[x][y] = true;
                open[2 * x + 1][2 * y + 1] = true;
                open[r + x + 1][c + y + 1] = true;
                stack.push((x, y));
            }
            None => {
                stack.pop();
            }
        }
    }
    place_markers(rng, &open)
}

fn neighbours(r: usize, c: usize, w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if r > 0 {
        out.push((r - 1, c));
    }
    if c > 0 {
        out.push((r, c - 1));
    }
    if r + 1 < h {
        out.push((r + 1, c));
    }
    if c + 1 < w {
        out.push((r, c + 1));
    }
    out
}

fn place_markers<R: Rng>(rng: &mut R, open: &[Vec<bool>]) -> String {
    let cells: Vec<(usize, usize)> =
        (0..open.len()).flat_map(|r| (0..open[0].len()).map(move |c| (r, c))).filter(|&(r, c)| open[r][c]).collect();
    let picked: Vec<&(usize, usize)> = cells.choose_multiple(rng, 2).collect();
    let (s, g) = (*picked[0], *picked[1]);
    let mut text = String::new();
    for (r, row) in open.iter().enumerate() {
        for (c, &o) in row.iter().enumerate() {
            text.push(if (r, c) == s {
                'S'
            } else if (r, c) == g {
                'G'
            } else if o {
                '.'
            } else {
                '#'
            });
        }
        text.push('\n');
    }
    text
}

/// Opens a wall cell touching two or more open cells, creating a loop, if one exists.
pub fn add_loop<R: Rng>(rng: &mut R, text: &str) -> Option<String> {
    let grid: Vec<Vec<char>> = text.lines().map(|l| l.chars().collect()).collect();
    let (h, w) = (grid.len(), grid[0].len());
    let walls: Vec<(usize, usize)> = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .filter(|&(r, c)| {
            grid[r][c] == '#' && neighbours(r, c, w, h).iter().filter(|&&(a, b)| grid[a][b] != '#').count() >= 2
        })
        .collect();
    let &(r, c) = walls.choose(rng)?;
    let mut grid = grid;
    grid[r][c] = '.';
    Some(grid.iter().map(|row| row.iter().collect::<String>() + "\n").collect())
}

/// Grid shortest path between the `S` and `G` cells, as (row, col) cells including both ends.
pub fn bfs_path(text: &str) -> Vec<(usize, usize)> {
    let grid: Vec<Vec<char>> = text.lines().map(|l| l.trim_end_matches('\r').chars().collect()).collect();
    let (h, w) = (grid.len(), grid[0].len());
    let find = |ch: char| (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).find(|&(r, c)| grid[r][c] == ch).unwrap();
    let (s, g) = (find('S'), find('G'));
    let mut prev: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    let mut queue = VecDeque::from([s]);
    let mut seen = vec![vec![false; w]; h];
    seen[s.0][s.1] = true;
    while let Some(u) = queue.pop_front() {
        if u == g {
            break;
        }
        for v in neighbours(u.0, u.1, w, h) {
            if grid[v.0][v.1] != '#' && !seen[v.0][v.1] {
                seen[v.0][v.1] = true;
                prev.insert(v, u);
                queue.push_back(v);
            }
        }
    }
    let mut path = vec![g];
    while let Some(&p) = prev.get(path.last().unwrap()) {
        path.push(p);
    }
    path.reverse();
    assert_eq!(path[0], s, "goal unreachable");
    path
}

/// Sum of feature-0 values over the marked edges of a solution.
pub fn marked_length(tree: &LabeledTree<f64>, bits: &[u8]) -> f64 {
    arbor::canonical_edge_order(tree)
        .iter()
        .zip(bits)
        .filter(|(_, &b)| b == 1)
        .map(|(&k, _)| tree.edge(k).features[0])
        .sum()
}
