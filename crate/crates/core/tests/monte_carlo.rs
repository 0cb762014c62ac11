mod common;

use common::{er, rng};
use ldpcount::analysis::{quatr_exact_variance, theoretical_mse, trial_statistics};
use ldpcount::graph::three_step_counts;
use ldpcount::harness::{run_trials, EstimatorConfig};
use ldpcount::matrix::multiply;
use ldpcount::nam::{gnam, square};
use ldpcount::projection::{graph_projection, project_all};
use ldpcount::{
    Algorithm, EstimatorParams, Graph, MatMulStrategy, Mechanism, MechanismKind, SeedStream,
    StageMask,
};

fn stage1(alg: Algorithm, mech: MechanismKind) -> EstimatorConfig {
    let params = EstimatorParams::defaults(1.0)
        .with_mask(StageMask::STAGE1)
        .with_mechanism(mech);
    EstimatorConfig::with_params(alg, 1.0, params)
}

#[test]
fn quadrangle_variance_matches_exact_formula() {
    let g = er(20, 0.3, 21);
    for mech in [MechanismKind::WarnerRr, MechanismKind::Laplace] {
        let report = run_trials(&g, &stage1(Algorithm::QuaTr, mech), 10_000, 5).unwrap();
        let s2 = Mechanism::new(mech, 1.0).unwrap().entry_variance().sigma2();
        let ratio = report.stats.mse / quatr_exact_variance(&g, s2);
        assert!((ratio - 1.0).abs() < 0.06, "{mech}: {ratio}");
    }
}

#[test]
fn laplace_stage1_matches_closed_forms() {
    let g = er(25, 0.3, 22);
    for alg in [Algorithm::TriOr, Algorithm::TriTr, Algorithm::TriMtr] {
        let report = run_trials(&g, &stage1(alg, MechanismKind::Laplace), 10_000, 6).unwrap();
        let ratio = report.stats.mse / report.theoretical_mse.unwrap();
        assert!((ratio - 1.0).abs() < 0.1, "{alg}: {ratio}");
    }
}

#[test]
fn cube_diagonal_is_unbiased() {
    let g = er(10, 0.4, 23);
    let c = three_step_counts(&g);
    let trials = 10_000;
    for mech in [Mechanism::rr(1.0).unwrap(), Mechanism::laplace(1.0).unwrap()] {
        let mut sums = [0.0; 10];
        let mut sq = [0.0; 10];
        for t in 0..trials {
            let nam = gnam(&g, mech, &SeedStream::new(7).trial(t));
            let b = square(&nam, MatMulStrategy::Naive);
            let cube = multiply(&b, nam.entries(), MatMulStrategy::Naive);
            for i in 0..10 {
                sums[i] += cube.get(i, i);
                sq[i] += cube.get(i, i).powi(2);
            }
        }
        for i in 0..10 {
            let k = trials as f64;
            let mean = sums[i] / k;
            let se = ((sq[i] / k - mean * mean) / k).sqrt();
            let z = (mean - c.get(i, i) as f64).abs() / se;
            assert!(z < 4.5, "{:?} node {i}: z = {z}", mech.kind());
        }
    }
}

#[test]
fn projected_degree_offset() {
    let nbrs: Vec<u32> = (1..31).collect();
    let mut r = rng(24);
    let exact = graph_projection(0, 40, &nbrs, f64::INFINITY, 20, &mut r).unwrap();
    assert_eq!(exact.noisy_degree - 20, 30);
    // with continuous noise the floor costs half a unit on average
    let draws = 20_000;
    let mean: f64 = (0..draws)
        .map(|_| graph_projection(0, 40, &nbrs, 2.0, 20, &mut r).unwrap().noisy_degree as f64 - 20.0)
        .sum::<f64>()
        / draws as f64;
    assert!((mean - 29.5).abs() < 0.05, "{mean}");
}

#[test]
fn projected_two_star_is_close_to_unbiased_for_high_degrees() {
    let g = er(300, 0.2, 25);
    let truth = ldpcount::graph::exact_count(&g, ldpcount::SubgraphKind::TwoStar) as f64;
    let samples: Vec<f64> = (0..500)
        .map(|t| {
            ldpcount::estimators::two_star(&g, 1.0, 20, &SeedStream::new(26).trial(t))
                .unwrap()
                .value
        })
        .collect();
    let stats = trial_statistics(&samples, truth).unwrap();
    // flooring subtracts a roughly uniform fraction F from d + L, which
    // shifts each term by about -(2d-1)/2 + 1/3
    let floor_bias = -2.0 * g.edge_count() as f64 + 5.0 / 6.0 * g.node_count() as f64;
    let z = (stats.mean - truth - floor_bias).abs() / stats.std_error;
    assert!(z < 4.0, "z = {z}");
    let theory = theoretical_mse(Algorithm::TwoStar, &g, 0.0, Some(1.0)).unwrap().value;
    assert!(stats.variance < 1.2 * theory);
}

#[test]
fn projection_removes_only_when_needed() {
    let g = Graph::star(200);
    let mut removals = 0;
    for seed in 0..20 {
        let p = project_all(&g, 1.0, 0, &SeedStream::new(seed)).unwrap();
        for (u, v) in p.views.iter().enumerate() {
            let d = g.degree(u);
            assert_eq!(v.removed, d.saturating_sub(v.noisy_degree));
            assert_eq!(v.neighbors.len(), d.min(v.noisy_degree));
        }
        removals += p.users_with_removals();
    }
    assert!(removals > 0);
    let p = project_all(&g, 1.0, 20, &SeedStream::new(0)).unwrap();
    assert_eq!(p.users_with_removals(), 0);
}

#[test]
fn clamp_exceedance_below_twice_beta() {
    for (n, pr, seed) in [(150, 0.1, 31u64), (300, 0.03, 32)] {
        let g = er(n, pr, seed);
        for mech in [MechanismKind::WarnerRr, MechanismKind::Laplace] {
            for alg in [Algorithm::TriTr, Algorithm::TriMtr, Algorithm::QuaTr] {
                let params = EstimatorParams::defaults(2.0)
                    .with_mask(StageMask::STAGE3)
                    .with_mechanism(mech);
                let report =
                    run_trials(&g, &EstimatorConfig::with_params(alg, 2.0, params), 10, seed).unwrap();
                assert!(report.clamp.rate() < 0.02, "{alg} {mech}: {}", report.clamp.rate());
            }
        }
    }
}

#[test]
fn second_noise_adds_variance_only() {
    let g = er(60, 0.2, 33);
    let truth = ldpcount::graph::exact_count(&g, ldpcount::SubgraphKind::Triangle) as f64;
    let s3 = EstimatorParams::defaults(2.0).with_mask(StageMask::STAGE3);
    let s4 = EstimatorParams::defaults(2.0);
    let r3 = run_trials(&g, &EstimatorConfig::with_params(Algorithm::TriMtr, 2.0, s3), 400, 1).unwrap();
    let r4 = run_trials(&g, &EstimatorConfig::with_params(Algorithm::TriMtr, 2.0, s4), 400, 1).unwrap();
    assert!(r4.stats.variance > r3.stats.variance);
    assert!((r4.stats.mean - r3.stats.mean).abs() < 4.0 * r4.stats.std_error + 0.05 * truth);
}
