//! Characteristic matrix of a binary tree and its weighted row combination.
//!
//! Row 0 holds, for every tip pair, the number of edges from the root to the
//! pair's most recent common ancestor, and 1 for every pendant column. Row
//! `l + 1` holds feature `l` of the edge entering the common ancestor (0 when
//! that ancestor is the root) and, in the pendant block, feature `l` of the
//! edge entering the tip.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::tree::{mrca_index, LabeledTree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharacteristicError {
    #[error("characteristic matrix needs at least two tips, found {0}")]
    FewerThanTwoTips(usize),
    #[error("tree is not binary (node `{0}`); binarize it first")]
    NotBinary(String),
    #[error("weight vector has length {found}, matrix has {expected} rows")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

/// Column tag of the characteristic matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColumnTag {
    TipPair(String, String),
    Pendant(String),
}

impl fmt::Display for ColumnTag {
    /// Single-character labels are concatenated (`ab`, `p_a`); longer ones use `a:b`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnTag::TipPair(i, j) if i.chars().count() == 1 && j.chars().count() == 1 => write!(f, "{i}{j}"),
            ColumnTag::TipPair(i, j) => write!(f, "{i}:{j}"),
            ColumnTag::Pendant(i) => write!(f, "p_{i}"),
        }
    }
}

impl Serialize for ColumnTag {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        s.collect_str(self)
    }
}

/// Column tags for `k` sorted tip labels: all pairs `i < j`, then all pendants.
pub fn column_index(tip_labels: &[String]) -> Vec<ColumnTag> {
    let k = tip_labels.len();
    let mut cols = Vec::with_capacity(k * (k - 1) / 2 + k);
    for i in 0..k {
        for j in i + 1..k {
            cols.push(ColumnTag::TipPair(tip_labels[i].clone(), tip_labels[j].clone()));
        }
    }
    cols.extend(tip_labels.iter().cloned().map(ColumnTag::Pendant));
    cols
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicMatrix<S> {
    entries: Matrix<S>,
    columns: Vec<ColumnTag>,
    tip_labels: Vec<String>,
    source_id: String,
}

impl<S: Scalar> CharacteristicMatrix<S> {
    /// Wraps raw entries. Used for matrices produced by morphisms and in tests.
    pub fn from_parts(entries: Matrix<S>, tip_labels: Vec<String>, source_id: impl Into<String>) -> Self {
        let columns = column_index(&tip_labels);
        assert_eq!(entries.cols(), columns.len(), "entry width does not match tip count");
        Self { entries, columns, tip_labels, source_id: source_id.into() }
    }

    pub fn with_source(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn entries(&self) -> &Matrix<S> {
        &self.entries
    }

    pub fn columns(&self) -> &[ColumnTag] {
        &self.columns
    }

    pub fn tip_labels(&self) -> &[String] {
        &self.tip_labels
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// Number of columns, `C(k,2) + k`.
    pub fn width(&self) -> usize {
        self.entries.cols()
    }

    /// Number of rows, `m + 1`.
    pub fn height(&self) -> usize {
        self.entries.rows()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        out.push('\n');
        for i in 0..self.height() {
            let row: Vec<String> = self.entries.row(i).iter().map(|x| x.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Convex weights over the `m + 1` matrix rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricWeights<S> {
    lambda: Vec<S>,
}

impl<S: Scalar> MetricWeights<S> {
    pub fn new(lambda: Vec<S>) -> Result<Self, CharacteristicError> {
        if lambda.is_empty() {
            return Err(CharacteristicError::InvalidWeights("no weights given".into()));
        }
        if let Some(x) = lambda.iter().find(|&&x| !(x >= S::zero() && x <= S::one())) {
            return Err(CharacteristicError::InvalidWeights(format!("weight {x} outside [0, 1]")));
        }
        let sum: S = lambda.iter().copied().sum();
        if (sum - S::one()).abs() > S::weight_sum_tolerance() {
            return Err(CharacteristicError::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { lambda })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        let w = S::one() / S::lit(len as f64);
        Self { lambda: vec![w; len] }
    }

    /// All weight on row `index`.
    pub fn unit(len: usize, index: usize) -> Self {
        assert!(index < len);
        let mut lambda = vec![S::zero(); len];
        lambda[index] = S::one();
        Self { lambda }
    }

    pub fn as_slice(&self) -> &[S] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

pub fn characteristic_matrix<S: Scalar>(tree: &LabeledTree<S>) -> Result<CharacteristicMatrix<S>, CharacteristicError> {
    if let Some(u) = (0..tree.nodes().len()).find(|&u| match tree.child_edges(u).len() {
        0 | 2 => false,
        1 => u != tree.root(),
        _ => true,
    }) {
        return Err(CharacteristicError::NotBinary(tree.id(u).to_string()));
    }
    let mut tips: Vec<usize> = tree.tips();
    if tips.len() < 2 {
        return Err(CharacteristicError::FewerThanTwoTips(tips.len()));
    }
    tips.sort_by(|&a, &b| tree.id(a).cmp(tree.id(b)));
    let tip_labels: Vec<String> = tips.iter().map(|&t| tree.id(t).to_string()).collect();
    let m = tree.feature_arity();
    let k = tips.len();
    if m + 1 >= k * (k - 1) / 2 + k {
        log::warn!("characteristic matrix has {} rows but only {} columns", m + 1, k * (k - 1) / 2 + k);
    }

    let columns = column_index(&tip_labels);
    let mut entries = Matrix::zeros(m + 1, columns.len());
    let mut col = 0;
    for i in 0..k {
        for j in i + 1..k {
            let anc = mrca_index(tree, tips[i], tips[j]);
            entries[(0, col)] = S::lit(tree.depth(anc) as f64);
            if let Some(e) = tree.parent_edge(anc) {
                for (l, &x) in tree.edge(e).features.iter().enumerate() {
                    entries[(l + 1, col)] = x;
                }
            }
            col += 1;
        }
    }
    for &t in &tips {
        entries[(0, col)] = S::one();
        let e = tree.parent_edge(t).expect("a tip is never the root when k >= 2");
        for (l, &x) in tree.edge(e).features.iter().enumerate() {
            entries[(l + 1, col)] = x;
        }
        col += 1;
    }
    Ok(CharacteristicMatrix { entries, columns, tip_labels, source_id: String::new() })
}

/// The weighted row combination `λ M`.
pub fn phi<S: Scalar>(m: &CharacteristicMatrix<S>, w: &MetricWeights<S>) -> Result<Vec<S>, CharacteristicError> {
    if w.len() != m.height() {
        return Err(CharacteristicError::DimensionMismatch { expected: m.height(), found: w.len() });
    }
    Ok(m.entries.left_mul_vec(w.as_slice()))
}
