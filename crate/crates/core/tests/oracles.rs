mod common;

use common::er;
use ldpcount::analysis::{confusion_matrix, tradeoff_curve, AttackStrategy};
use ldpcount::estimators::{clamp, delta_f, tri_mtr_local_sum, ClampStats};
use ldpcount::graph::{
    exact_count, exact_count_bruteforce, parse_edge_list_str, three_step_counts, two_step_counts,
};
use ldpcount::matrix::multiply;
use ldpcount::mechanisms::normal_quantile;
use ldpcount::{
    Algorithm, BudgetSplit, DenseMatrix, EstimatorParams, Graph, MatMulStrategy, Mechanism,
    MechanismKind, SeedStream, StageMask, SubgraphKind,
};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn adjacency(g: &Graph) -> DenseMatrix {
    DenseMatrix::from_fn(g.node_count(), |i, j| g.has_edge(i, j) as u8 as f64)
}

fn small_graph() -> impl Strategy<Value = Graph> {
    (2usize..14, 0.0f64..1.0, any::<u64>()).prop_map(|(n, p, seed)| er(n, p, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_counts_match_enumeration(g in small_graph()) {
        for kind in SubgraphKind::ALL {
            prop_assert_eq!(exact_count(&g, kind), exact_count_bruteforce(&g, kind).unwrap());
        }
    }

    #[test]
    fn quadrangles_from_dense_powers(g in small_graph()) {
        let a = adjacency(&g);
        let a2 = multiply(&a, &a, MatMulStrategy::Naive);
        let tr4 = multiply(&a2, &a2, MatMulStrategy::Naive).trace();
        let m = g.edge_count() as f64;
        let pairs: f64 = g.degrees().iter().map(|&d| (d * d.saturating_sub(1) / 2) as f64).sum();
        let c4 = (tr4 - 2.0 * m - 4.0 * pairs) / 8.0;
        prop_assert_eq!(exact_count(&g, SubgraphKind::Quadrangle) as f64, c4);
        let tr3 = multiply(&a2, &a, MatMulStrategy::Naive).trace();
        prop_assert_eq!(exact_count(&g, SubgraphKind::Triangle) as f64, tr3 / 6.0);
    }

    #[test]
    fn count_matrices_match_dense(g in small_graph()) {
        let a = adjacency(&g);
        let a2 = multiply(&a, &a, MatMulStrategy::Naive);
        let a3 = multiply(&a2, &a, MatMulStrategy::Naive);
        let (b, c) = (two_step_counts(&g), three_step_counts(&g));
        for i in 0..g.node_count() {
            for j in 0..g.node_count() {
                prop_assert_eq!(b.get(i, j) as f64, a2.get(i, j));
                prop_assert_eq!(c.get(i, j) as f64, a3.get(i, j));
            }
        }
    }

    #[test]
    fn edge_list_round_trip(g in small_graph()) {
        prop_assume!(g.edge_count() > 0);
        let parsed = parse_edge_list_str(&g.to_edge_list()).unwrap();
        prop_assert_eq!(parsed.graph.edge_count(), g.edge_count());
        for kind in SubgraphKind::ALL {
            prop_assert_eq!(exact_count(&parsed.graph, kind), exact_count(&g, kind));
        }
    }

    #[test]
    fn download_cost_and_budget_formulas(n in 3usize..=50, p in 0.05f64..0.9, seed in any::<u64>(), eps in 0.1f64..3.0) {
        let g = er(n, p, seed);
        let params = EstimatorParams::defaults(eps);
        let seeds = SeedStream::new(seed);
        let n = n as u64;
        for alg in Algorithm::ALL {
            let est = params.run(alg, &g, &seeds).unwrap();
            let want = match alg {
                Algorithm::TriTr | Algorithm::QuaTr => 8 * n * n,
                Algorithm::TriMtr => 8 * n,
                Algorithm::TriOr | Algorithm::TwoStar => 0,
            };
            prop_assert_eq!(est.download_bytes, want);
            let budget = if alg == Algorithm::TwoStar { params.split.eps0 } else { eps };
            prop_assert!((est.ledger.total() - budget).abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_estimators_are_exact(g in small_graph(), seed in any::<u64>()) {
        let inf = f64::INFINITY;
        let params = EstimatorParams {
            split: BudgetSplit::new(inf, inf, inf),
            ..EstimatorParams::defaults(1.0)
        };
        for mask in StageMask::STAGES {
            let p = params.with_mask(mask);
            for alg in Algorithm::ALL {
                let est = p.run(alg, &g, &SeedStream::new(seed)).unwrap();
                prop_assert!((est.value - exact_count(&g, alg.target()) as f64).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn clamp_is_bounded(x in -1e6f64..1e6, k in 0.0f64..1e3) {
        let c = clamp(x, k);
        prop_assert!(c.abs() <= k);
        if x.abs() <= k {
            prop_assert_eq!(c, x);
        }
    }

    #[test]
    fn modified_sum_moves_by_at_most_delta_f(g in small_graph(), seed in any::<u64>(), u in 0usize..14, k in 0usize..14) {
        let n = g.node_count();
        prop_assume!(u < n && k < n && u != k);
        let mech = Mechanism::rr(0.8).unwrap();
        let nam = ldpcount::nam::gnam(&g, mech, &SeedStream::new(seed));
        let b = ldpcount::nam::square(&nam, MatMulStrategy::Naive);
        let before = g.neighbors(u).to_vec();
        let mut after = before.clone();
        match after.binary_search(&(k as u32)) {
            Ok(pos) => { after.remove(pos); }
            Err(pos) => after.insert(pos, k as u32),
        }
        let df = delta_f(Algorithm::TriMtr, before.len() + 20, n + 20, n, mech.entry_variance().sigma2(), 0.01, 20).unwrap();
        let mut st = ClampStats::default();
        let change = tri_mtr_local_sum(b.row(u), &after, Some(df), &mut st)
            - tri_mtr_local_sum(b.row(u), &before, Some(df), &mut st);
        prop_assert!(change.abs() <= df * (1.0 + 1e-12));
    }

    #[test]
    fn delta_f_monotone(d in 0usize..200, extra in 1usize..50, n in 3usize..500, s2 in 0.01f64..10.0) {
        for alg in [Algorithm::TriTr, Algorithm::TriMtr, Algorithm::QuaTr] {
            let lo = delta_f(alg, d, d + 20 + extra, n, s2, 0.01, 20).unwrap();
            let hi = delta_f(alg, d + extra, d + 20 + extra, n, s2, 0.01, 20).unwrap();
            prop_assert!(hi >= lo);
            let loose = delta_f(alg, d, d + 20 + extra, n, s2, 0.1, 20).unwrap();
            prop_assert!(loose <= lo);
        }
    }

    #[test]
    fn attack_identities(eps in 0.01f64..5.0, p in 0.0001f64..0.9999) {
        let a = confusion_matrix(AttackStrategy::Rr, eps, p).unwrap();
        let b = confusion_matrix(AttackStrategy::LapKappa1, eps, p).unwrap();
        let c = confusion_matrix(AttackStrategy::LapKappa2, eps, p).unwrap();
        prop_assert!((a.precision - b.precision).abs() < 1e-12);
        prop_assert!(c.recall > b.recall);
        for pt in [a, b, c] {
            let cells = pt.true_positive + pt.false_negative + pt.false_positive + pt.true_negative;
            prop_assert!((cells - 1.0).abs() < 1e-12);
            for v in [pt.type1, pt.type2, pt.precision, pt.recall] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn tradeoff_curves_ordered(eps in 0.05f64..4.0) {
        let rr = tradeoff_curve(&Mechanism::rr(eps).unwrap(), 200).unwrap();
        let lap = tradeoff_curve(&Mechanism::laplace(eps).unwrap(), 200).unwrap();
        for curve in [&rr, &lap] {
            prop_assert_eq!(curve[0], (0.0, 1.0));
            prop_assert_eq!(*curve.last().unwrap(), (1.0, 0.0));
            prop_assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
        }
        prop_assert!(rr.iter().zip(&lap).all(|(r, l)| r.1 <= l.1 + 1e-12));
    }
}

#[test]
fn normal_quantile_matches_statrs() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    for k in 1..1000 {
        let p = k as f64 / 1000.0;
        let ours = normal_quantile(p).unwrap();
        let theirs = normal.inverse_cdf(p);
        assert!((ours - theirs).abs() < 1e-9, "p={p}: {ours} vs {theirs}");
    }
    for p in [1e-10, 1e-6, 1e-4, 0.999_999] {
        assert!((normal_quantile(p).unwrap() - normal.inverse_cdf(p)).abs() < 1e-7);
    }
}

#[test]
fn frozen_reference_values() {
    assert!((normal_quantile(0.99).unwrap() - 2.326_347_874_040_840_8).abs() < 1e-12);
    assert!((normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
    let df = delta_f(Algorithm::TriTr, 25, 30, 100, 0.9206, 0.01, 20).unwrap();
    // python: NormalDist().inv_cdf(0.99) * sqrt(25 * 0.9206) + 25
    assert!((df - 36.160_409_953_523_91).abs() < 1e-9);
    let s2 = Mechanism::rr(1.0).unwrap().entry_variance().sigma2();
    assert!((s2 - 0.920_673_594).abs() < 1e-9);
    assert_eq!(Mechanism::laplace(1.0).unwrap().entry_variance().sigma2(), 2.0);
    assert_eq!(
        Mechanism::new(MechanismKind::Laplace, 2.0).unwrap().entry_variance().sigma2(),
        0.5
    );
}

#[test]
fn small_graph_counts() {
    let k4 = Graph::complete(4);
    assert_eq!(exact_count(&k4, SubgraphKind::Triangle), 4);
    assert_eq!(exact_count(&k4, SubgraphKind::Quadrangle), 3);
    assert_eq!(exact_count(&k4, SubgraphKind::TwoStar), 24);
    assert_eq!(exact_count(&Graph::cycle(4), SubgraphKind::Quadrangle), 1);
    assert_eq!(exact_count(&Graph::path(3), SubgraphKind::TwoStar), 2);
    assert_eq!(exact_count(&Graph::star(5), SubgraphKind::TwoStar), 20);
}
