mod common;

use arbor::{
    binarize, canonical_edge_order, mrca, same_topology, tree_equal, Combinator, LabeledTree, RawTree, TreeError,
};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn length() -> arbor::FeatureSchema {
    additive_schema(1)
}

fn build(edges: &[(&str, &str, &[f64])]) -> Result<LabeledTree<f64>, TreeError> {
    LabeledTree::new(RawTree::<f64>::from_edges(length(), "r", edges))
}

#[test]
fn rejects_structural_violations() {
    assert!(matches!(
        build(&[("r", "a", &[1.0]), ("r", "b", &[1.0]), ("a", "b", &[1.0])]),
        Err(TreeError::MultipleParents(id)) if id == "b"
    ));
    assert!(matches!(
        build(&[("r", "a", &[1.0, 2.0]), ("r", "b", &[1.0])]),
        Err(TreeError::FeatureArityMismatch { .. })
    ));
    assert!(matches!(build(&[("r", "a", &[f64::NAN]), ("r", "b", &[1.0])]), Err(TreeError::NonFiniteFeature { .. })));

    let mut raw = RawTree::<f64>::from_edges(length(), "r", &[("r", "a", &[1.0]), ("r", "b", &[1.0])]);
    raw.nodes.push(raw.nodes[1].clone());
    assert!(matches!(LabeledTree::new(raw), Err(TreeError::DuplicateNode(_))));

    let mut raw = RawTree::<f64>::from_edges(length(), "r", &[("r", "a", &[1.0]), ("a", "b", &[1.0])]);
    raw.nodes.iter_mut().find(|n| n.id == "a").unwrap().terminal = true;
    assert!(matches!(LabeledTree::new(raw), Err(TreeError::TerminalHasChild(id)) if id == "a"));

    let mut raw = RawTree::<f64>::from_edges(length(), "r", &[("r", "a", &[1.0]), ("r", "b", &[1.0])]);
    raw.edges[0].to = "zz".into();
    assert!(matches!(LabeledTree::new(raw), Err(TreeError::UnknownNode(_))));
}

#[test]
fn cycle_is_reported() {
    let raw = RawTree::<f64>::from_edges(
        length(),
        "r",
        &[("r", "a", &[1.0]), ("x", "y", &[1.0]), ("y", "x", &[1.0]), ("a", "b", &[1.0])],
    );
    let err = LabeledTree::new(raw).unwrap_err();
    assert!(matches!(err, TreeError::CycleDetected(_) | TreeError::UnreachableNode(_)), "{err:?}");
}

#[test]
fn mrca_of_four_tip_pairs() {
    let t = four_tip();
    let id = |a: &str, b: &str| t.id(mrca(&t, a, b).unwrap()).to_string();
    assert_eq!(id("a", "b"), "β");
    assert_eq!(id("c", "d"), "α");
    assert_eq!(id("a", "c"), "r");
    assert_eq!(id("b", "d"), "r");
    assert!(matches!(mrca(&t, "a", "a"), Err(TreeError::SameTip(_))));
    assert!(matches!(mrca(&t, "a", "β"), Err(TreeError::NotATerminal(_))));
}

#[test]
fn sibling_order_is_not_structure() {
    let (t, u) = (four_tip(), four_tip_mirrored());
    assert!(same_topology(&t, &u));
    assert!(tree_equal(&t, &u));
    let labels = |x: &LabeledTree<f64>| canonical_edge_order(x).iter().map(|&e| x.edge_label(e)).collect::<Vec<_>>();
    assert_eq!(labels(&t), labels(&u));

    let mut raw = t.to_raw();
    raw.edges[1].features[0] += 1.0;
    let changed = LabeledTree::new(raw).unwrap();
    assert!(same_topology(&t, &changed));
    assert!(!tree_equal(&t, &changed));
}

#[test]
fn different_splits_are_different_topologies() {
    let t = four_tip();
    let swapped = t
        .relabel_tips(&[("b", "c"), ("c", "b")].iter().map(|&(x, y)| (x.to_string(), y.to_string())).collect())
        .unwrap();
    assert!(!same_topology(&t, &swapped));
}

#[test]
fn binarize_resolves_multifurcation_with_neutral_edges() {
    let t = build(&[("r", "a", &[1.0]), ("r", "b", &[2.0]), ("r", "c", &[3.0]), ("r", "d", &[4.0])]).unwrap();
    assert!(!t.is_binary());
    let b = binarize(&t).unwrap();
    assert!(b.is_binary());
    assert_eq!(b.tip_labels(), t.tip_labels());
    for tip in ["a", "b", "c", "d"] {
        let mut node = b.terminal_index(tip).unwrap();
        let mut total = 0.0;
        while let Some(e) = b.parent_edge(node) {
            total += b.edge(e).features[0];
            node = b.parent(node).unwrap();
        }
        let expected = t.edge(t.parent_edge(t.terminal_index(tip).unwrap()).unwrap()).features[0];
        assert_eq!(total, expected, "root-to-{tip} length");
    }
    assert!(tree_equal(&binarize(&b).unwrap(), &b));
}

#[test]
fn multiplicative_neutral_is_one() {
    assert_eq!(Combinator::Multiplicative.neutral::<f64>(), 1.0);
    assert_eq!(Combinator::Additive.neutral::<f64>(), 0.0);
    assert_eq!(Combinator::Multiplicative.combine(0.5, 0.4), 0.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_order_ignores_input_order(seed in any::<u64>(), k in 2usize..9) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(&mut rng, k, 2);
        let mut raw = t.to_raw();
        raw.edges.shuffle(&mut rng);
        raw.nodes[1..].shuffle(&mut rng);
        let u = LabeledTree::new(raw).unwrap();
        prop_assert!(tree_equal(&t, &u));
        let keys = |x: &LabeledTree<f64>| canonical_edge_order(x).iter().map(|&e| x.edge_label(e)).collect::<Vec<_>>();
        prop_assert_eq!(keys(&t), keys(&u));
        let sorted = |x: &LabeledTree<f64>| {
            let mut c = x.clusters();
            c.sort();
            c
        };
        prop_assert_eq!(sorted(&t), sorted(&u));
    }

    #[test]
    fn raw_round_trip_is_lossless(seed in any::<u64>(), k in 2usize..9) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(&mut rng, k, 3);
        let u = LabeledTree::new(t.to_raw()).unwrap();
        prop_assert!(tree_equal(&t, &u));
        prop_assert_eq!(t.tip_count(), k);
        prop_assert_eq!(t.edges().len(), 2 * k - 2);
    }
}
