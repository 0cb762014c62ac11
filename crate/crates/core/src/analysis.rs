//! Closed-form error formulas, attack analysis and trial statistics.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::error::{check_budget, Error, Result};
use crate::estimators::{delta_f, Algorithm, BudgetSplit};
use crate::graph::{exact_count, two_step_counts, Graph, SubgraphKind};
use crate::mechanisms::{
    entry_variance, laplace_cdf, laplace_unchecked, rr_keep_probability, Mechanism, MechanismKind,
};

/// Closed-form MSE with its named terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalMse {
    pub estimator: Algorithm,
    pub terms: Vec<(&'static str, f64)>,
    pub value: f64,
}

impl TheoreticalMse {
    fn new(estimator: Algorithm, terms: Vec<(&'static str, f64)>) -> Self {
        let value = terms.iter().map(|(_, v)| v).sum();
        Self {
            estimator,
            terms,
            value,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

/// `Σ_{i<j} b_ij²` with `b = A²`, streamed row by row.
pub fn sum_b_squared(g: &Graph) -> f64 {
    let n = g.node_count();
    let mut row = vec![0i64; n];
    let mut total = 0.0;
    for i in 0..n {
        g.two_step_row(i, &mut row);
        total += row[i + 1..].iter().map(|&b| (b * b) as f64).sum::<f64>();
    }
    total
}

/// `Σ_{i<j} c_ij²` with `c = A³`.
pub fn sum_c_squared(g: &Graph) -> f64 {
    let n = g.node_count();
    let b = two_step_counts(g);
    let mut c = vec![0i64; n];
    let mut total = 0.0;
    for i in 0..n {
        c.iter_mut().for_each(|x| *x = 0);
        for &k in g.neighbors(i) {
            for (cv, bv) in c.iter_mut().zip(b.row(k as usize)) {
                *cv += bv;
            }
        }
        total += c[i + 1..].iter().map(|&x| (x as f64).powi(2)).sum::<f64>();
    }
    total
}

/// Closed-form MSE of the unclamped (Stage 1) estimators; `eps0` is the
/// degree budget and is required for 2-stars.
pub fn theoretical_mse(
    estimator: Algorithm,
    g: &Graph,
    sigma2: f64,
    eps0: Option<f64>,
) -> Result<TheoreticalMse> {
    let n = g.node_count() as f64;
    let m = g.edge_count() as f64;
    let s2 = sigma2;
    let s4 = s2 * s2;
    let terms = match estimator {
        Algorithm::TriOr => vec![
            ("sigma2", s2 * sum_b_squared(g)),
            ("sigma4", s4 * (n - 2.0).max(0.0) * m),
            ("sigma6", s4 * s2 * n * (n - 1.0) * (n - 2.0) / 6.0),
        ],
        Algorithm::TriTr => vec![("sigma2", s2 * sum_b_squared(g) / 9.0)],
        Algorithm::TriMtr => vec![
            ("sigma2", 4.0 * s2 * sum_b_squared(g) / 9.0),
            ("sigma4", s4 * (n - 2.0).max(0.0) * m / 9.0),
        ],
        Algorithm::QuaTr => vec![
            ("sigma2", s2 * sum_c_squared(g) / 4.0),
            ("sigma4", (n - 2.0).max(0.0) * s4 * sum_b_squared(g) / 16.0),
        ],
        Algorithm::TwoStar => {
            let e0 = eps0.ok_or_else(|| {
                Error::InvalidParameter("2-star MSE needs the degree budget".into())
            })?;
            let e0 = check_budget(e0)?;
            let e2 = e0 * e0;
            let sum_d2: f64 = g.degrees().iter().map(|&d| (d * d) as f64).sum();
            // the first two terms together are 8/ε₀² Σ d(d-1) ≥ 0
            vec![
                ("degree", 8.0 * sum_d2 / e2 - 16.0 * m / e2),
                ("eps0^-2", 2.0 * n / e2),
                ("eps0^-4", 20.0 * n / (e2 * e2)),
            ]
        }
    };
    Ok(TheoreticalMse::new(estimator, terms))
}

/// Exact variance of the unclamped two-round quadrangle estimator:
/// `(1/16)σ² Σ_{x<y} (2c_xy - a_xy(d_x + d_y))² + (1/16)(n-2)σ⁴ Σ_{x<y} b_xy²`.
///
/// Each noisy entry `â_xy` enters the estimator both through user sums
/// where `x` or `y` is an endpoint of the pair and through the `b̂` products,
/// which is where the `a_xy(d_x + d_y)` correction comes from.
pub fn quatr_exact_variance(g: &Graph, sigma2: f64) -> f64 {
    let n = g.node_count();
    let b = two_step_counts(g);
    let deg = g.degrees();
    let mut c = vec![0i64; n];
    let mut lin = 0.0;
    for x in 0..n {
        c.iter_mut().for_each(|v| *v = 0);
        for &k in g.neighbors(x) {
            for (cv, bv) in c.iter_mut().zip(b.row(k as usize)) {
                *cv += bv;
            }
        }
        for y in x + 1..n {
            let a = g.has_edge(x, y) as i64;
            let w = 2 * c[y] - a * (deg[x] + deg[y]) as i64;
            lin += (w as f64).powi(2);
        }
    }
    let n2 = (n as f64 - 2.0).max(0.0);
    (sigma2 * lin + n2 * sigma2 * sigma2 * sum_b_squared(g)) / 16.0
}

/// Attacker strategies against one perturbed bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackStrategy {
    /// Take the randomized-response output at face value.
    Rr,
    /// Threshold the Laplace output at `κ₁ = 1`.
    LapKappa1,
    /// Threshold the Laplace output at `κ₂ = 0.5`.
    LapKappa2,
}

impl AttackStrategy {
    pub const ALL: [AttackStrategy; 3] = [Self::Rr, Self::LapKappa1, Self::LapKappa2];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rr => "rr",
            Self::LapKappa1 => "lap-k1",
            Self::LapKappa2 => "lap-k2",
        }
    }

    pub fn threshold(self) -> Option<f64> {
        match self {
            Self::Rr => None,
            Self::LapKappa1 => Some(1.0),
            Self::LapKappa2 => Some(0.5),
        }
    }
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rr" => Ok(Self::Rr),
            "lap-k1" | "lap-kappa1" => Ok(Self::LapKappa1),
            "lap-k2" | "lap-kappa2" => Ok(Self::LapKappa2),
            other => Err(Error::InvalidParameter(format!("unknown attack `{other}`"))),
        }
    }
}

/// Joint cell probabilities of (true bit, attacker guess) plus the derived
/// error rates. `H₀` is "the edge exists": type I error is guessing 0 on a
/// true edge, type II is guessing 1 on a non-edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackPoint {
    pub true_positive: f64,
    pub false_negative: f64,
    pub false_positive: f64,
    pub true_negative: f64,
    pub type1: f64,
    pub type2: f64,
    pub precision: f64,
    pub recall: f64,
}

impl AttackPoint {
    fn from_cells(tp: f64, fneg: f64, fp: f64, tn: f64) -> Self {
        let ratio = |a: f64, b: f64| if a + b > 0.0 { a / (a + b) } else { 0.0 };
        Self {
            true_positive: tp,
            false_negative: fneg,
            false_positive: fp,
            true_negative: tn,
            type1: ratio(fneg, tp),
            type2: ratio(fp, tn),
            precision: ratio(tp, fp),
            recall: ratio(tp, fneg),
        }
    }
}

fn check_density(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(Error::InvalidParameter(format!("edge density must lie in (0, 1), got {p}")))
    }
}

/// Probability that the attacker guesses "edge" given the true bit.
fn guess_one_probability(strategy: AttackStrategy, eps: f64, bit: bool) -> f64 {
    match strategy.threshold() {
        None => {
            let keep = rr_keep_probability(eps);
            if bit {
                keep
            } else {
                1.0 - keep
            }
        }
        Some(kappa) => {
            let x = if bit { 1.0 } else { 0.0 };
            1.0 - laplace_cdf(kappa - x, 1.0 / eps)
        }
    }
}

/// Exact confusion matrix of one attack at edge density `p`.
pub fn confusion_matrix(strategy: AttackStrategy, eps: f64, p: f64) -> Result<AttackPoint> {
    let eps = check_budget(eps)?;
    let p = check_density(p)?;
    let hit = guess_one_probability(strategy, eps, true);
    let false_alarm = guess_one_probability(strategy, eps, false);
    Ok(AttackPoint::from_cells(
        p * hit,
        p * (1.0 - hit),
        (1.0 - p) * false_alarm,
        (1.0 - p) * (1.0 - false_alarm),
    ))
}

/// Monte-Carlo version of [`confusion_matrix`] over `draws` random bits.
pub fn simulate_attack<R: RngCore + ?Sized>(
    strategy: AttackStrategy,
    eps: f64,
    p: f64,
    draws: u64,
    rng: &mut R,
) -> Result<AttackPoint> {
    let eps = check_budget(eps)?;
    let p = check_density(p)?;
    if draws == 0 {
        return Err(Error::InvalidParameter("draws must be positive".into()));
    }
    let keep = rr_keep_probability(eps);
    let mut cells = [0u64; 4];
    for _ in 0..draws {
        let bit = rng.random_bool(p);
        let guess = match strategy.threshold() {
            None => bit == rng.random_bool(keep),
            Some(kappa) => {
                let y = bit as u8 as f64 + laplace_unchecked(1.0 / eps, rng);
                y > kappa
            }
        };
        let idx = match (bit, guess) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        cells[idx] += 1;
    }
    let f = |c: u64| c as f64 / draws as f64;
    Ok(AttackPoint::from_cells(f(cells[0]), f(cells[1]), f(cells[2]), f(cells[3])))
}

/// Smallest type II error reachable at type I error `t` against randomized
/// response: the segments `(0,1)-(q,q)-(1,0)` with `q = 1/(1+e^ε)`.
pub fn rr_type2_at(eps: f64, t: f64) -> f64 {
    let q = 1.0 - rr_keep_probability(eps);
    let t = t.clamp(0.0, 1.0);
    if q <= 0.0 {
        return if t == 0.0 { 1.0 } else { 0.0 };
    }
    if t <= q {
        1.0 - t * (1.0 - q) / q
    } else {
        q * (1.0 - t) / (1.0 - q)
    }
}

/// Laplace quantile at scale `b`.
pub fn laplace_quantile(u: f64, b: f64) -> f64 {
    if u < 0.5 {
        b * (2.0 * u).ln()
    } else {
        -b * (2.0 - 2.0 * u).ln()
    }
}

/// Type II error of the threshold test `1 + Lap(1/ε) ≤ κ` at type I error
/// `t`, i.e. with `κ = 1 + F⁻¹(t)`.
pub fn laplace_type2_at(eps: f64, t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    if t == 0.0 {
        return 1.0;
    }
    if t == 1.0 {
        return 0.0;
    }
    let b = 1.0 / eps;
    let kappa = 1.0 + laplace_quantile(t, b);
    1.0 - laplace_cdf(kappa, b)
}

/// Errors of the Laplace threshold test at threshold `κ`.
pub fn laplace_errors_at_threshold(eps: f64, kappa: f64) -> (f64, f64) {
    let b = 1.0 / eps;
    (laplace_cdf(kappa - 1.0, b), 1.0 - laplace_cdf(kappa, b))
}

/// Trade-off curve on `resolution` evenly spaced type I errors in `[0, 1]`.
pub fn tradeoff_curve(mech: &Mechanism, resolution: usize) -> Result<Vec<(f64, f64)>> {
    let eps = check_budget(mech.epsilon())?;
    if resolution < 2 {
        return Err(Error::InvalidParameter("resolution must be at least 2".into()));
    }
    Ok((0..resolution)
        .map(|k| {
            let t = k as f64 / (resolution - 1) as f64;
            let t2 = match mech.kind() {
                MechanismKind::WarnerRr => rr_type2_at(eps, t),
                MechanismKind::Laplace => laplace_type2_at(eps, t),
            };
            (t, t2)
        })
        .collect())
}

/// Per-entry variance of both mechanisms at `eps`, for variance plots.
pub fn variance_comparison(eps: f64) -> Result<(f64, f64)> {
    let rr = entry_variance(&Mechanism::rr(eps)?).sigma2();
    let lap = entry_variance(&Mechanism::laplace(eps)?).sigma2();
    Ok((rr, lap))
}

/// Summary statistics of a batch of estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub trials: usize,
    pub truth: f64,
    pub mean: f64,
    pub mse: f64,
    /// Sample variance (`n - 1` denominator); zero for one sample.
    pub variance: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// `None` when the true count is zero.
    pub mean_re: Option<f64>,
    pub median_re: Option<f64>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

pub fn trial_statistics(samples: &[f64], truth: f64) -> Result<TrialStats> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    let mse = samples.iter().map(|s| (s - truth).powi(2)).sum::<f64>() / k;
    let variance = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let (mean_re, median_re) = if truth != 0.0 {
        let re: Vec<f64> = samples.iter().map(|s| (s - truth).abs() / truth.abs()).collect();
        (Some(re.iter().sum::<f64>() / k), median(&re))
    } else {
        (None, None)
    };
    Ok(TrialStats {
        trials: samples.len(),
        truth,
        mean,
        mse,
        variance,
        std_error: (variance / k).sqrt(),
        mean_re,
        median_re,
    })
}

/// Shapes of the relative-error bounds for the two-round triangle
/// estimators on one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ReBoundReport {
    pub n: usize,
    pub average_degree: f64,
    pub triangles: u64,
    /// `1/(ε₁d)`, `1/(ε₁ε₂√n d^1.5)`, `1/(ε₂√n d)`.
    pub tri_tr_terms: [f64; 3],
    /// `1/(ε₁d)`, `1/(ε₁²d^1.5)`, `1/(ε₁²ε₂d²)`, `1/(ε₂√n d)`.
    pub tri_mtr_terms: [f64; 4],
    /// False when the graph has no triangles and RE is undefined.
    pub defined: bool,
}

impl ReBoundReport {
    pub fn tri_tr_bound(&self) -> f64 {
        self.tri_tr_terms.iter().sum()
    }

    pub fn tri_mtr_bound(&self) -> f64 {
        self.tri_mtr_terms.iter().sum()
    }
}

pub fn re_bound_check(g: &Graph, split: &BudgetSplit) -> ReBoundReport {
    let n = g.node_count();
    let d = g.average_degree();
    let (e1, e2) = (split.eps1, split.eps2);
    let rn = (n as f64).sqrt();
    let triangles = exact_count(g, SubgraphKind::Triangle);
    ReBoundReport {
        n,
        average_degree: d,
        triangles,
        tri_tr_terms: [
            1.0 / (e1 * d),
            1.0 / (e1 * e2 * rn * d.powf(1.5)),
            1.0 / (e2 * rn * d),
        ],
        tri_mtr_terms: [
            1.0 / (e1 * d),
            1.0 / (e1 * e1 * d.powf(1.5)),
            1.0 / (e1 * e1 * e2 * d * d),
            1.0 / (e2 * rn * d),
        ],
        defined: triangles > 0,
    }
}

/// Relative-error contribution of the second-round Laplace noise alone,
/// `sqrt(Σ_u 2(Δf_u/ε₂)²) / (k · T)` with `k = 6` for triangles, taking the
/// noisy degrees at their typical value `d_u + α`. `None` without triangles.
pub fn second_noise_re(
    g: &Graph,
    algorithm: Algorithm,
    split: &BudgetSplit,
    mechanism: MechanismKind,
    alpha: usize,
    beta: f64,
) -> Result<Option<f64>> {
    let truth = exact_count(g, algorithm.target()) as f64;
    if truth == 0.0 {
        return Ok(None);
    }
    let sigma2 = Mechanism::new(mechanism, split.eps1)?.entry_variance().sigma2();
    let n = g.node_count();
    let noisy: Vec<usize> = g.degrees().iter().map(|d| d + alpha).collect();
    let dmax = noisy.iter().copied().max().unwrap_or(alpha);
    let mut var = 0.0;
    for &d in &noisy {
        let df = delta_f(algorithm, d, dmax, n, sigma2, beta, alpha)?;
        var += 2.0 * (df / split.eps2).powi(2);
    }
    // TriTR doubles its upload, so its noise is scaled by 2
    let scale = match algorithm {
        Algorithm::TriTr => 2.0 / 6.0,
        Algorithm::TriMtr => 1.0 / 6.0,
        Algorithm::QuaTr => 2.0 / 8.0,
        other => return Err(Error::Unsupported(format!("{other} has no second round"))),
    };
    Ok(Some(scale * var.sqrt() / truth))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}
