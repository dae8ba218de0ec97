//! Evolves a depth-2 survival tree on the synthetic XOR problem and compares
//! the archive against the ground-truth tree on held-out data.
//!
//! Usage: `cargo run --release -p survgp-core --example xor -- [seed] [population] [generations] [clusters] [fi]`

use std::time::Instant;

use survgp_core::data::stratified_shuffle_splits;
use survgp_core::estimators::{Cohort, StepFunction};
use survgp_core::evolution::{run, RunConfig};
use survgp_core::expr::{parse_expression, MultiGenotype, OperatorSet};
use survgp_core::fitness::FitnessMode;
use survgp_core::metrics::integrated_brier_per_patient;
use survgp_core::tree::{decode_evolved, SurvivalTree};
use survgp_core::xor::{generate_xor_survival, XorParams};

fn test_ibs(
    tree: &SurvivalTree,
    train: &survgp_core::data::SurvivalDataset,
    test: &survgp_core::data::SurvivalDataset,
) -> f64 {
    let curves: Vec<&StepFunction> = (0..test.n())
        .map(|i| tree.predict_survival(test.row(i)))
        .collect();
    integrated_brier_per_patient(
        &curves,
        Cohort::new(train.times(), train.events()).unwrap(),
        Cohort::new(test.times(), test.events()).unwrap(),
    )
    .unwrap()
}

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let population: usize = args.next().map_or(1024, |s| s.parse().expect("population"));
    let generations: usize = args.next().map_or(50, |s| s.parse().expect("generations"));
    let clusters: usize = args.next().map_or(1, |s| s.parse().expect("clusters"));
    let fi: usize = args
        .next()
        .map_or(0, |s| s.parse().expect("forced improvement"));

    let gen = |s: u64| {
        generate_xor_survival(&XorParams {
            n: 5000,
            seed: s,
            ..Default::default()
        })
        .unwrap()
        .dataset
    };
    let train = gen(2 * seed);
    let test = gen(2 * seed + 1);
    let plan = stratified_shuffle_splits(train.events(), 1, 0.2, seed).unwrap();
    let cfg = RunConfig {
        mode: FitnessMode::Evolved,
        population_size: population,
        template_depth: 3,
        trees: 3,
        tree_depth: 2,
        operators: OperatorSet::xor_engineered(),
        max_generations: generations,
        stagnation_window: generations,
        clusters,
        forced_improvement_after: (fi > 0).then_some(fi),
        seed,
        ..Default::default()
    };
    let min_leaf = (0.02 * train.n() as f64).ceil() as usize;
    let disk = parse_expression("(((x0^2) + (x1^2)) <= 0.6)", 3, &[]).unwrap();
    let prod = parse_expression("((x0 * x1) <= 0)", 3, &[]).unwrap();
    let gt_mg = MultiGenotype::new(vec![disk, prod.clone(), prod], true);
    let gt_tree = decode_evolved(&gt_mg, &train, min_leaf).unwrap();
    let gt_fit = survgp_core::fitness::evolved_fitness(&gt_mg, &train, &plan).unwrap();
    println!(
        "ground truth: complexity {} fitness {:.5} test {:.5}",
        gt_fit.complexity,
        gt_fit.ibs_iqm,
        test_ibs(&gt_tree, &train, &test)
    );
    if population == 0 {
        return;
    }
    let start = Instant::now();
    let result = run(&cfg, &train, &plan).unwrap();
    println!(
        "{} generations ({}) in {:.1?}, {} evaluations",
        result.trace.len() - 1,
        result.termination.as_str(),
        start.elapsed(),
        result.trace.last().unwrap().evaluations
    );

    for row in result.trace.iter().step_by(10) {
        println!(
            "  generation {:3}  hypervolume {:.6}  archive {}",
            row.generation, row.hypervolume, row.archive_size
        );
    }
    let mut best = f64::INFINITY;
    for m in &result.archive {
        let tree = decode_evolved(&m.mg, &train, min_leaf).unwrap();
        let exprs: Vec<String> = tree
            .split_positions()
            .iter()
            .map(|&p| survgp_core::expr::to_expression_string(&m.mg.trees[p]))
            .collect();
        let ibs = test_ibs(&tree, &train, &test);
        best = best.min(ibs);
        println!(
            "complexity {:3}  fitness {:.5}  test {:.5}  {}",
            m.fitness.complexity,
            m.fitness.ibs_iqm,
            ibs,
            exprs.join(" | ")
        );
    }
    println!("best test IBS {best:.5}");
}
