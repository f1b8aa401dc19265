mod common;

use std::collections::BTreeMap;

use arbor::{
    encode_path, functor_commute_check, match_tips, maze_to_tree, parse_maze, solve, transfer_solution, tree_distance,
    LabeledTree, LibraryError, MetricWeights, ProblemKind, ProblemLibrary, ProblemTransform, TransferError,
    TreeProblem,
};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn problem(id: &str, tree: LabeledTree<f64>) -> TreeProblem<f64> {
    TreeProblem::new(id, ProblemKind::Generic, tree, false).unwrap()
}

fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|&(a, b)| (a.to_string(), b.to_string())).collect()
}

#[test]
fn relabelled_problem_receives_the_mapped_path() {
    let p = load_problem("decision3.json");
    let relabel = map(&[("w1", "z"), ("w2", "y"), ("w3", "x1")]);
    let q = ProblemTransform::RelabelTips(relabel.clone()).apply(&p).unwrap().with_id("q");
    let s = solve(&p).unwrap();
    let moved = transfer_solution(&p, &s, &q).unwrap();
    assert_eq!(moved.terminal.as_deref(), Some("z"));
    assert_eq!(moved.problem_id, "q");
    assert!(moved.same_path(&solve(&q).unwrap()));
    assert_eq!(match_tips(&p, &q).unwrap(), relabel);
}

#[test]
fn transfer_needs_matching_shapes() {
    let mut rng = rng(51);
    let a = problem("a", random_tree(&mut rng, 5, 1));
    let b = loop {
        let t = problem("b", random_tree(&mut rng, 5, 1));
        if match_tips(&a, &t).is_none() {
            break t;
        }
    };
    let s = encode_path(a.tree(), "t00").unwrap();
    assert!(matches!(transfer_solution(&a, &s, &b), Err(TransferError::NoCorrespondence { .. })));
    let bad = arbor::Solution::from_bits(vec![0; s.len()]).unwrap();
    assert!(matches!(transfer_solution(&a, &bad, &a), Err(TransferError::InvalidSourceSolution(_))));
}

#[test]
fn invalid_transforms_are_rejected() {
    let p = load_problem("decision3.json");
    assert!(matches!(ProblemTransform::PowerWeights(0.0).apply(&p), Err(TransferError::InvalidTransform(_))));
    assert!(matches!(ProblemTransform::PowerWeights(-1.0).apply(&p), Err(TransferError::InvalidTransform(_))));
    assert!(matches!(ProblemTransform::ScaleLengths(-2.0).apply(&p), Err(TransferError::InvalidTransform(_))));
    assert!(ProblemTransform::Identity.apply(&p).is_ok());
}

#[test]
fn transfers_compose() {
    let mut rng = rng(52);
    for _ in 0..30 {
        let k = rng.gen_range(3..8);
        let p = random_decision(&mut rng, k).with_id("p");
        let f = ProblemTransform::RelabelTips(random_permutation(&mut rng, &p.tree().tip_labels()));
        let q = f.apply(&p).unwrap().with_id("q");
        let g = ProblemTransform::PowerWeights(rng.gen_range(0.3..3.0));
        let r = g.apply(&q).unwrap().with_id("r");
        let s = solve(&p).unwrap();
        let two_steps = transfer_solution(&q, &transfer_solution(&p, &s, &q).unwrap(), &r).unwrap();
        let direct = transfer_solution(&p, &s, &r).unwrap();
        assert!(two_steps.same_path(&direct));
        assert_eq!(two_steps.problem_id, "r");
    }
}

#[test]
fn maze_solutions_survive_rescaling() {
    let p = maze_to_tree::<f64>(&parse_maze(&read_fixture("desk_maze.txt")).unwrap()).unwrap();
    for c in [0.1, 1.0, 7.5] {
        assert!(functor_commute_check(&p, &ProblemTransform::ScaleLengths(c)).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decision_squares_commute(seed in any::<u64>(), k in 2usize..9, alpha in 0.1f64..6.0) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = random_decision(&mut rng, k);
        let perm = ProblemTransform::RelabelTips(random_permutation(&mut rng, &p.tree().tip_labels()));
        prop_assert!(functor_commute_check(&p, &perm).unwrap());
        prop_assert!(functor_commute_check(&p, &ProblemTransform::PowerWeights(alpha)).unwrap());
    }
}

#[test]
fn library_round_trip_and_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let mut lib = ProblemLibrary::open(dir.path()).unwrap();
    assert!(lib.is_empty());
    let base = problem("four_tip", four_tip());
    let mut raw = four_tip().to_raw();
    for e in raw.edges.iter_mut() {
        e.features[0] += 10.0;
    }
    let far = problem("shifted", LabeledTree::new(raw).unwrap());
    let solution = encode_path(base.tree(), "c").unwrap().with_problem_id("four_tip");
    lib.add(&base, Some(&solution), vec!["demo".into()]).unwrap();
    lib.add(&far, None, vec![]).unwrap();
    assert!(matches!(lib.add(&base, None, vec![]), Err(LibraryError::DuplicateId(_))));
    assert!(matches!(lib.add(&base.clone().with_id("../x"), None, vec![]), Err(LibraryError::InvalidId(_))));
    let anonymous = lib.add(&base.clone().with_id(""), None, vec![]).unwrap();
    assert!(anonymous.starts_with('p'));

    let reopened = ProblemLibrary::open(dir.path()).unwrap();
    assert_eq!(reopened.len(), 3);
    let rec = reopened.load::<f64>("four_tip").unwrap();
    assert_eq!(rec.metadata.tags, ["demo"]);
    assert_eq!(rec.solution.as_ref(), Some(&solution));
    assert!(arbor::tree_equal(rec.problem.tree(), base.tree()));
    assert!(matches!(reopened.load::<f64>("missing"), Err(LibraryError::UnknownId(_))));

    let query = problem("query", four_tip_mirrored());
    let w = MetricWeights::uniform(2);
    let ranked = reopened.nearest_problems(&query, &w, 5).unwrap();
    assert_eq!(ranked.len(), 3);
    assert_eq!(ranked[0].1, 0.0);
    assert_eq!(ranked[2].0, "shifted");
    assert_eq!(ranked[2].1, tree_distance(far.tree(), query.tree(), &w).unwrap());

    let outcome = reopened.transfer_from_nearest(&query, &w).unwrap().unwrap();
    assert_eq!(outcome.source_id, "four_tip");
    assert_eq!(outcome.solution.terminal.as_deref(), Some("c"));
    assert_eq!(outcome.solution.problem_id, "query");
}

#[test]
fn library_rejects_inconsistent_solution() {
    let dir = tempfile::tempdir().unwrap();
    let mut lib = ProblemLibrary::open(dir.path()).unwrap();
    let p = problem("four_tip", four_tip());
    let wrong = arbor::Solution::from_bits(vec![1; 6]).unwrap();
    assert!(matches!(lib.add(&p, Some(&wrong), vec![]), Err(LibraryError::InconsistentSolution { .. })));
    assert!(lib.is_empty());
}

#[test]
fn nearest_agrees_with_distance_on_relabelled_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let mut lib = ProblemLibrary::open(dir.path()).unwrap();
    let mut rng = rng(53);
    let query = random_decision(&mut rng, 5).with_id("query");
    let mut expected = Vec::new();
    for i in 0..6 {
        let alpha = rng.gen_range(0.5..2.0);
        let perm = random_permutation(&mut rng, &query.tree().tip_labels());
        let t = ProblemTransform::Compose(vec![
            ProblemTransform::RelabelTips(perm.clone()),
            ProblemTransform::PowerWeights(alpha),
        ]);
        let cand = t.apply(&query).unwrap().with_id(format!("c{i}"));
        let back: BTreeMap<String, String> = perm.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        let aligned = cand.tree().relabel_tips(&back).unwrap();
        let w = MetricWeights::uniform(2);
        expected.push((format!("c{i}"), tree_distance(&aligned, query.tree(), &w).unwrap()));
        lib.add(&cand, None, vec![]).unwrap();
    }
    expected.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let ranked = lib.nearest_problems(&query, &MetricWeights::uniform(2), 10).unwrap();
    assert_eq!(ranked.len(), expected.len());
    for (got, want) in ranked.iter().zip(&expected) {
        assert_eq!(got.0, want.0);
        assert!((got.1 - want.1).abs() < 1e-12);
    }
}
