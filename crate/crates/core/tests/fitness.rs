use survgp_core::data::{stratified_shuffle_splits, SurvivalDataset};
use survgp_core::estimators::{Cohort, StepFunction};
use survgp_core::expr::{active_size, evaluate, parse_expression, Genotype, MultiGenotype};
use survgp_core::fitness::{evolved_fitness, gfc_fitness, Evaluator, FitnessConfig, MemoryCache};
use survgp_core::metrics::integrated_brier_per_patient;
use survgp_core::tree::{decode_evolved, greedy_induce, Node};
use survgp_core::xor::{generate_xor_survival, XorParams};

fn xor_data(n: usize, seed: u64) -> SurvivalDataset {
    generate_xor_survival(&XorParams {
        n,
        seed,
        ..Default::default()
    })
    .unwrap()
    .dataset
}

fn g(s: &str, depth: usize) -> Genotype {
    parse_expression(s, depth, &[]).unwrap()
}

fn min_leaf(n: usize) -> usize {
    ((0.02 * n as f64).ceil() as usize).max(1)
}

fn ibs_of(
    train: &SurvivalDataset,
    test: &SurvivalDataset,
    predict: impl Fn(&[f64]) -> StepFunction,
) -> f64 {
    let curves: Vec<StepFunction> = (0..test.n()).map(|i| predict(test.row(i))).collect();
    let refs: Vec<&StepFunction> = curves.iter().collect();
    integrated_brier_per_patient(
        &refs,
        Cohort::new(train.times(), train.events()).unwrap(),
        Cohort::new(test.times(), test.events()).unwrap(),
    )
    .unwrap()
}

#[test]
fn evolved_fitness_matches_row_wise_decoding() {
    let data = xor_data(800, 1);
    let plan = stratified_shuffle_splits(data.events(), 5, 0.2, 9).unwrap();
    let candidates = [
        ["(x0 <= 0.6)", "(x1 <= 0)", "(x1 <= 0)"],
        [
            "(((x0^2) + (x1^2)) <= 0.6)",
            "((x0 * x1) <= 0)",
            "((x0 * x1) <= 0)",
        ],
        ["(x0 <= -1.5)", "(x1 <= 0)", "x0"],
        ["1", "x0", "x1"],
    ];
    for exprs in candidates {
        let mg = MultiGenotype::new(exprs.iter().map(|s| g(s, 3)).collect(), true);
        let fit = evolved_fitness(&mg, &data, &plan).unwrap();
        for (s, (train, test)) in plan.pairs.iter().enumerate() {
            let tr = data.select(train).unwrap();
            let te = data.select(test).unwrap();
            // pruning on every split uses the whole cohort's minimum leaf size
            let tree = decode_evolved(&mg, &tr, min_leaf(data.n())).unwrap();
            let want = ibs_of(&tr, &te, |row| tree.predict_survival(row).clone());
            assert!(
                (fit.per_split[s] - want).abs() < 1e-12,
                "{exprs:?} split {s}: {} vs {want}",
                fit.per_split[s]
            );
        }
        let full = decode_evolved(&mg, &data, min_leaf(data.n())).unwrap();
        let complexity: usize = full
            .split_positions()
            .iter()
            .map(|&p| active_size(&mg.trees[p]))
            .sum();
        assert_eq!(fit.complexity as usize, complexity, "{exprs:?}");
    }
}

#[test]
fn split_pruned_on_the_cohort_does_not_help_any_split() {
    // 9 of 100 patients sit left of x0 <= 0: below the cohort minimum of 10,
    // above the 8 a training part of 80 would allow
    let n = 100;
    let x0: Vec<f64> = (0..n).map(|i| if i < 9 { -1.0 } else { 1.0 }).collect();
    let times: Vec<f64> = (0..n)
        .map(|i| {
            if i < 9 {
                0.1 + i as f64 * 0.01
            } else {
                1.0 + i as f64
            }
        })
        .collect();
    let events = vec![true; n];
    let data = SurvivalDataset::new(vec!["x0".into()], x0, times, events).unwrap();
    let plan = stratified_shuffle_splits(data.events(), 3, 0.2, 4).unwrap();
    let cfg = FitnessConfig {
        min_leaf_fraction: 0.1,
        ..FitnessConfig::evolved()
    };
    let ev = Evaluator::new(&data, &plan, cfg).unwrap();
    let split = ev
        .evaluate(&MultiGenotype::new(
            vec![g("(x0 <= 0)", 2), g("0", 2), g("0", 2)],
            true,
        ))
        .unwrap();
    let leaf = ev
        .evaluate(&MultiGenotype::new(
            vec![g("0", 2), g("0", 2), g("0", 2)],
            true,
        ))
        .unwrap();
    assert_eq!(split.complexity, 0);
    assert_eq!(split.per_split, leaf.per_split);
}

#[test]
fn constant_root_collapses_to_one_leaf_with_zero_complexity() {
    let data = xor_data(400, 2);
    let plan = stratified_shuffle_splits(data.events(), 5, 0.2, 1).unwrap();
    let mg = MultiGenotype::new(vec![g("1", 2), g("(x0 <= 0)", 2), g("(x1 <= 0)", 2)], true);
    let fit = evolved_fitness(&mg, &data, &plan).unwrap();
    assert_eq!(fit.complexity, 0);
}

#[test]
fn greedy_fitness_matches_independent_induction() {
    let data = xor_data(800, 3);
    let plan = stratified_shuffle_splits(data.events(), 5, 0.2, 4).unwrap();
    for binary in [false, true] {
        let feats = vec![
            g("((x0^2) + (x1^2))", 2),
            g("(x0 * x1)", 2),
            g("(x0 - x1)", 2),
        ];
        let mg = MultiGenotype::new(feats.clone(), binary);
        let fit = gfc_fitness(&mg, &data, &plan, 2, binary).unwrap();
        let value = |f: &Genotype, row: &[f64]| {
            let v = evaluate(f, row);
            if binary {
                f64::from(u8::from(v > 0.0))
            } else {
                v
            }
        };
        let mut used = [false; 3];
        for (s, (train, test)) in plan.pairs.iter().enumerate() {
            let tr = data.select(train).unwrap();
            let te = data.select(test).unwrap();
            let cols: Vec<Vec<f64>> = feats
                .iter()
                .map(|f| (0..tr.n()).map(|i| value(f, tr.row(i))).collect())
                .collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let tree = greedy_induce(tr.times(), tr.events(), &refs, 2, min_leaf(tr.n())).unwrap();
            for p in tree.split_positions() {
                if let Some(Node::Split(survgp_core::tree::SplitRule::Threshold {
                    feature, ..
                })) = tree.node(p)
                {
                    used[*feature] = true;
                }
            }
            let want = ibs_of(&tr, &te, |row| {
                let fv: Vec<f64> = feats.iter().map(|f| value(f, row)).collect();
                tree.predict_survival(&fv).clone()
            });
            assert!(
                (fit.per_split[s] - want).abs() < 1e-12,
                "binary={binary} split {s}"
            );
        }
        let complexity: usize = (0..3)
            .filter(|&j| used[j])
            .map(|j| active_size(&feats[j]))
            .sum();
        assert_eq!(fit.complexity as usize, complexity);
    }
}

#[test]
fn duplicate_features_count_once() {
    let data = xor_data(600, 5);
    let plan = stratified_shuffle_splits(data.events(), 5, 0.2, 2).unwrap();
    let a = MultiGenotype::new(vec![g("(x0 * x1)", 1), g("(x1 * x0)", 1)], false);
    let b = MultiGenotype::new(vec![g("(x0 * x1)", 1)], false);
    let fa = gfc_fitness(&a, &data, &plan, 2, false).unwrap();
    let fb = gfc_fitness(&b, &data, &plan, 2, false).unwrap();
    assert_eq!(fa.complexity, 3);
    assert_eq!(fa, fb);
}

#[test]
fn cache_is_transparent() {
    let data = xor_data(500, 6);
    let plan = stratified_shuffle_splits(data.events(), 5, 0.2, 3).unwrap();
    let mg = MultiGenotype::new(
        vec![g("(x0 <= 0.6)", 2), g("(x1 <= 0)", 2), g("(x1 <= 0)", 2)],
        true,
    );
    // same partition, different expressions
    let twin = MultiGenotype::new(
        vec![
            g("(x0 <= 0.6)", 2),
            g("(x1 <= 0)", 2),
            g("(NOT (0 <= x1))", 2),
        ],
        true,
    );
    let plain = Evaluator::new(&data, &plan, FitnessConfig::evolved()).unwrap();
    let cached = Evaluator::new(&data, &plan, FitnessConfig::evolved())
        .unwrap()
        .with_cache(Box::new(MemoryCache::default()));
    let first = cached.evaluate(&mg).unwrap();
    let second = cached.evaluate(&mg).unwrap();
    assert_eq!(first, second);
    assert_eq!(first, plain.evaluate(&mg).unwrap());
    assert_eq!(cached.cache_hits(), 1);
    let t = cached.evaluate(&twin).unwrap();
    assert_eq!(cached.cache_hits(), 2);
    assert_eq!(cached.evaluations(), 3);
    assert_eq!(t.per_split, first.per_split);
    assert_eq!(t.complexity, first.complexity + 1);
}

#[test]
fn rejects_mismatched_individuals() {
    let data = xor_data(200, 7);
    let plan = stratified_shuffle_splits(data.events(), 3, 0.2, 3).unwrap();
    let two = MultiGenotype::new(vec![g("x0", 1), g("x1", 1)], true);
    assert!(evolved_fitness(&two, &data, &plan).is_err());
    let bad_var = MultiGenotype::new(vec![g("x5", 1)], false);
    assert!(gfc_fitness(&bad_var, &data, &plan, 2, false).is_err());
}
