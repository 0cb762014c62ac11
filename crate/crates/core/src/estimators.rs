//! Private triangle, quadrangle and 2-star estimators.
//!
//! All two-round estimators share one pipeline: optional graph projection
//! (budget `ε₀`), the one-round protocol on the (projected) rows (budget
//! `ε₁`), then a second round in which each user computes a local sum from
//! downloaded noisy data, clamps each per-neighbor term to `±Δf_u`, adds
//! `Lap(Δf_u/ε₂)` and uploads. [`StageMask`] switches the pieces on and off
//! for ablation runs.
//!
//! Pair sums run over the lower triangle of the user's neighbor set
//! (`j < i`) and are doubled on upload, so that the uploaded value estimates
//! the ordered-pair sum.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{check_budget, Error, Result};
use crate::graph::Graph;
use crate::matrix::{DenseMatrix, MatMulStrategy};
use crate::mechanisms::{laplace_unchecked, normal_quantile, Mechanism, MechanismKind};
use crate::nam::{gnam_rows, square, trace_cube};
use crate::projection::project_all;
use crate::protocol::{measure_cost, BudgetLedger, CostMeter, RunTrace, ENTRY_BYTES};
use crate::rng::{SeedStream, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    TriOr,
    TriTr,
    TriMtr,
    QuaTr,
    TwoStar,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Self::TriOr,
        Self::TriTr,
        Self::TriMtr,
        Self::QuaTr,
        Self::TwoStar,
    ];
    pub const TWO_ROUND: [Algorithm; 3] = [Self::TriTr, Self::TriMtr, Self::QuaTr];

    pub fn name(self) -> &'static str {
        match self {
            Self::TriOr => "trior",
            Self::TriTr => "tritr",
            Self::TriMtr => "trimtr",
            Self::QuaTr => "quatr",
            Self::TwoStar => "2star",
        }
    }

    pub fn target(self) -> crate::graph::SubgraphKind {
        use crate::graph::SubgraphKind;
        match self {
            Self::TriOr | Self::TriTr | Self::TriMtr => SubgraphKind::Triangle,
            Self::QuaTr => SubgraphKind::Quadrangle,
            Self::TwoStar => SubgraphKind::TwoStar,
        }
    }

    pub fn is_two_round(self) -> bool {
        Self::TWO_ROUND.contains(&self)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "trior" => Ok(Self::TriOr),
            "tritr" => Ok(Self::TriTr),
            "trimtr" => Ok(Self::TriMtr),
            "quatr" => Ok(Self::QuaTr),
            "2star" | "twostar" | "two-star" => Ok(Self::TwoStar),
            other => Err(Error::InvalidParameter(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Budget parts: projection `ε₀`, one-round protocol `ε₁`, second round
/// `ε₂`, and `ε₃` for a second estimator's second round in joint runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSplit {
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl BudgetSplit {
    pub fn new(eps0: f64, eps1: f64, eps2: f64) -> Self {
        Self {
            eps0,
            eps1,
            eps2,
            eps3: 0.0,
        }
    }

    /// Default 10% / 80% / 10% allocation of a total budget.
    pub fn from_total(eps: f64) -> Self {
        Self::new(0.1 * eps, 0.8 * eps, 0.1 * eps)
    }

    pub fn with_eps3(mut self, eps3: f64) -> Self {
        self.eps3 = eps3;
        self
    }

    /// Sum of all four parts.
    pub fn total(&self) -> f64 {
        self.eps0 + self.eps1 + self.eps2 + self.eps3
    }

    pub fn validate(&self) -> Result<()> {
        for e in [self.eps0, self.eps1, self.eps2, self.eps3] {
            if e.is_nan() || e < 0.0 {
                return Err(Error::InvalidBudget(e));
            }
        }
        Ok(())
    }
}

/// Which parts of the two-round pipeline are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StageMask {
    /// Run the one-round protocol with `ε₁` instead of the whole budget.
    pub reduce_eps1: bool,
    /// Project the graph (and clamp with `Δf_u`) before the first round.
    pub apply_projection: bool,
    /// Add `Lap(Δf_u/ε₂)` to the second-round uploads.
    pub add_second_noise: bool,
}

impl StageMask {
    pub const STAGE1: Self = Self::new(false, false, false);
    pub const STAGE2: Self = Self::new(true, false, false);
    pub const STAGE3: Self = Self::new(true, true, false);
    pub const STAGE4: Self = Self::new(true, true, true);
    pub const STAGES: [Self; 4] = [Self::STAGE1, Self::STAGE2, Self::STAGE3, Self::STAGE4];

    pub const fn new(reduce_eps1: bool, apply_projection: bool, add_second_noise: bool) -> Self {
        Self {
            reduce_eps1,
            apply_projection,
            add_second_noise,
        }
    }

    pub fn full() -> Self {
        Self::STAGE4
    }

    pub fn stage_number(&self) -> Option<usize> {
        Self::STAGES.iter().position(|s| s == self).map(|i| i + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.add_second_noise && !self.apply_projection {
            return Err(Error::InvalidParameter(
                "second-round noise needs the noisy degrees from projection".into(),
            ));
        }
        Ok(())
    }
}

impl Default for StageMask {
    fn default() -> Self {
        Self::full()
    }
}

impl FromStr for StageMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "stage1" => Ok(Self::STAGE1),
            "2" | "stage2" => Ok(Self::STAGE2),
            "3" | "stage3" => Ok(Self::STAGE3),
            "4" | "stage4" | "full" => Ok(Self::STAGE4),
            other => Err(Error::InvalidParameter(format!("unknown stage `{other}`"))),
        }
    }
}

impl fmt::Display for StageMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage_number() {
            Some(k) => write!(f, "{k}"),
            None => write!(
                f,
                "custom({},{},{})",
                self.reduce_eps1, self.apply_projection, self.add_second_noise
            ),
        }
    }
}

/// Everything an estimator run needs besides the graph and the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorParams {
    pub split: BudgetSplit,
    pub alpha: usize,
    pub beta: f64,
    pub mechanism: MechanismKind,
    pub strategy: MatMulStrategy,
    pub mask: StageMask,
}

impl EstimatorParams {
    /// `α = 20`, `β = 0.01`, 10/80/10 split, randomized response, full
    /// pipeline.
    pub fn defaults(eps: f64) -> Self {
        Self {
            split: BudgetSplit::from_total(eps),
            alpha: 20,
            beta: 0.01,
            mechanism: MechanismKind::WarnerRr,
            strategy: MatMulStrategy::default(),
            mask: StageMask::full(),
        }
    }

    pub fn with_mask(mut self, mask: StageMask) -> Self {
        self.mask = mask;
        self
    }

    pub fn with_mechanism(mut self, mechanism: MechanismKind) -> Self {
        self.mechanism = mechanism;
        self
    }

    /// Runs `algorithm`. The one-round triangle estimator spends
    /// `ε₀ + ε₁ + ε₂` on its single round; 2-stars spend `ε₀`.
    pub fn run(&self, algorithm: Algorithm, g: &Graph, seeds: &SeedStream) -> Result<Estimate> {
        match algorithm {
            Algorithm::TriOr => tri_or(
                g,
                self.split.eps0 + self.split.eps1 + self.split.eps2,
                self.mechanism,
                self.strategy,
                seeds,
            ),
            Algorithm::TriTr => tri_tr(g, self, seeds),
            Algorithm::TriMtr => tri_mtr(g, self, seeds),
            Algorithm::QuaTr => qua_tr(g, self, seeds),
            Algorithm::TwoStar => two_star(g, self.split.eps0, self.alpha, seeds),
        }
    }
}

/// How many per-neighbor terms hit the clamp.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClampStats {
    pub terms: u64,
    pub clamped: u64,
}

impl ClampStats {
    pub fn merge(self, other: ClampStats) -> ClampStats {
        ClampStats {
            terms: self.terms + other.terms,
            clamped: self.clamped + other.clamped,
        }
    }

    pub fn rate(&self) -> f64 {
        if self.terms == 0 {
            0.0
        } else {
            self.clamped as f64 / self.terms as f64
        }
    }
}

/// Output of one estimator run.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub value: f64,
    pub download_bytes: u64,
    pub ledger: BudgetLedger,
    pub trace: RunTrace,
    pub clamp: ClampStats,
}

impl Estimate {
    fn finish(value: f64, ledger: BudgetLedger, trace: RunTrace, clamp: ClampStats) -> Self {
        let download_bytes = measure_cost(&trace).cost_dl;
        Self {
            value,
            download_bytes,
            ledger,
            trace,
            clamp,
        }
    }

    pub fn cost(&self) -> CostMeter {
        measure_cost(&self.trace)
    }
}

/// `clamp(x, κ) = max(min(x, κ), -κ)`.
#[inline]
pub fn clamp(x: f64, kappa: f64) -> f64 {
    x.min(kappa).max(-kappa)
}

#[inline]
fn clamp_counted(x: f64, kappa: Option<f64>, stats: &mut ClampStats) -> f64 {
    match kappa {
        None => x,
        Some(k) => {
            stats.terms += 1;
            if x > k || x < -k {
                stats.clamped += 1;
            }
            clamp(x, k)
        }
    }
}

/// Per-user sensitivity bound of the second-round randomizer.
///
/// `noisy_dmax` is the largest noisy degree the collector saw; the
/// quadrangle bound uses `noisy_dmax - α` in place of the true maximum
/// degree. The result is floored at zero.
pub fn delta_f(
    algorithm: Algorithm,
    noisy_degree: usize,
    noisy_dmax: usize,
    n: usize,
    sigma2: f64,
    beta: f64,
    alpha: usize,
) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0, 1), got {beta}")));
    }
    let z = normal_quantile(1.0 - beta)?;
    let d = noisy_degree as f64;
    let n2 = (n as f64 - 2.0).max(0.0);
    let s4 = sigma2 * sigma2;
    let v = match algorithm {
        Algorithm::TriTr => z * (d * sigma2).sqrt() + d,
        Algorithm::TriMtr => z * (n2 * s4 + (d + noisy_dmax as f64) * sigma2).sqrt() + d,
        Algorithm::QuaTr => {
            let dmax = noisy_dmax.saturating_sub(alpha) as f64;
            z * (d * (2.0 * dmax * sigma2 + n2 * s4)).sqrt() + d * (dmax - 1.0)
        }
        other => {
            return Err(Error::Unsupported(format!("{other} has no second-round sensitivity")))
        }
    };
    Ok(v.max(0.0))
}

/// `Σ_{i∈Nei} clamp(Σ_{j∈Nei, j<i} â_ij, Δf)` for sorted neighbors.
pub fn tri_tr_local_sum(
    a_hat: &DenseMatrix,
    neighbors: &[u32],
    delta_f: Option<f64>,
    stats: &mut ClampStats,
) -> f64 {
    let mut sum = 0.0;
    for (pos, &i) in neighbors.iter().enumerate() {
        let row = a_hat.row(i as usize);
        let inner: f64 = neighbors[..pos].iter().map(|&j| row[j as usize]).sum();
        sum += clamp_counted(inner, delta_f, stats);
    }
    sum
}

/// `Σ_{i∈Nei} clamp(b̂_iu, Δf)`; `b_col` is column `u` of `B̂`.
pub fn tri_mtr_local_sum(
    b_col: &[f64],
    neighbors: &[u32],
    delta_f: Option<f64>,
    stats: &mut ClampStats,
) -> f64 {
    neighbors
        .iter()
        .map(|&i| clamp_counted(b_col[i as usize], delta_f, stats))
        .sum()
}

/// `Σ_{i∈Nei} clamp(Σ_{j∈Nei, j<i} (b̂_ij - 1), Δf)` for sorted neighbors.
pub fn qua_tr_local_sum(
    b_hat: &DenseMatrix,
    neighbors: &[u32],
    delta_f: Option<f64>,
    stats: &mut ClampStats,
) -> f64 {
    let mut sum = 0.0;
    for (pos, &i) in neighbors.iter().enumerate() {
        let row = b_hat.row(i as usize);
        let inner: f64 = neighbors[..pos].iter().map(|&j| row[j as usize] - 1.0).sum();
        sum += clamp_counted(inner, delta_f, stats);
    }
    sum
}

/// One-round triangle estimate `tr(Â³)/6`.
pub fn tri_or(
    g: &Graph,
    eps: f64,
    mechanism: MechanismKind,
    strategy: MatMulStrategy,
    seeds: &SeedStream,
) -> Result<Estimate> {
    let mech = Mechanism::new(mechanism, eps)?;
    let mut trace = RunTrace::new(g.node_count());
    let (nam, _) = gnam_rows(g.rows(), mech, seeds, Some(&mut trace));
    let mut ledger = BudgetLedger::new();
    ledger.charge("gnam", eps);
    let value = trace_cube(&nam, strategy) / 6.0;
    Ok(Estimate::finish(value, ledger, trace, ClampStats::default()))
}

/// Shared first round of the two-round estimators.
struct FirstRound {
    a_hat: DenseMatrix,
    sigma2: f64,
    neighbors: Vec<Vec<u32>>,
    noisy: Option<(Vec<usize>, usize)>,
    ledger: BudgetLedger,
    trace: RunTrace,
}

fn first_round(g: &Graph, params: &EstimatorParams, seeds: &SeedStream) -> Result<FirstRound> {
    params.split.validate()?;
    params.mask.validate()?;
    if !(params.beta > 0.0 && params.beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (0, 1), got {}",
            params.beta
        )));
    }
    let split = params.split;
    let eps1 = if params.mask.reduce_eps1 {
        split.eps1
    } else {
        split.eps0 + split.eps1 + split.eps2
    };
    let mech = Mechanism::new(params.mechanism, eps1)?;
    let n = g.node_count();
    let mut ledger = BudgetLedger::new();
    let mut trace = RunTrace::new(n);

    let (rows, neighbors, noisy) = if params.mask.apply_projection {
        let proj = project_all(g, check_budget(split.eps0)?, params.alpha, seeds)?;
        ledger.charge("projection", split.eps0);
        for u in 0..n {
            trace.upload(1, "projection", u, ENTRY_BYTES, split.eps0);
        }
        let neighbors = (0..n).map(|u| proj.neighbors(u).to_vec()).collect();
        let noisy = Some((proj.noisy_degrees(), proj.max_noisy_degree));
        (proj.rows(), neighbors, noisy)
    } else {
        let neighbors = (0..n).map(|u| g.neighbors(u).to_vec()).collect();
        (g.rows().to_vec(), neighbors, None)
    };

    let (nam, _) = gnam_rows(&rows, mech, seeds, Some(&mut trace));
    ledger.charge("gnam", eps1);
    let sigma2 = nam.sigma2().sigma2();
    Ok(FirstRound {
        a_hat: nam.into_entries(),
        sigma2,
        neighbors,
        noisy,
        ledger,
        trace,
    })
}

/// Per-user second-round bookkeeping shared by the estimators.
struct SecondRound<'a> {
    algorithm: Algorithm,
    params: &'a EstimatorParams,
    n: usize,
    sigma2: f64,
    noisy: Option<&'a (Vec<usize>, usize)>,
    eps2: f64,
    stage: Stage,
}

impl SecondRound<'_> {
    fn delta_f(&self, u: usize) -> Result<Option<f64>> {
        match self.noisy {
            None => Ok(None),
            Some((degrees, dmax)) => Ok(Some(delta_f(
                self.algorithm,
                degrees[u],
                *dmax,
                self.n,
                self.sigma2,
                self.params.beta,
                self.params.alpha,
            )?)),
        }
    }

    fn noise(&self, u: usize, delta_f: Option<f64>, seeds: &SeedStream) -> f64 {
        match delta_f {
            Some(df) if self.params.mask.add_second_noise && df > 0.0 && self.eps2.is_finite() => {
                let mut rng = seeds.user(self.stage, u);
                laplace_unchecked(df / self.eps2, &mut rng)
            }
            _ => 0.0,
        }
    }

    /// Runs `local` for every user and returns the uploads in user order.
    fn uploads<F>(&self, seeds: &SeedStream, local: F) -> Result<(Vec<f64>, ClampStats)>
    where
        F: Fn(usize, Option<f64>, &mut ClampStats) -> f64 + Sync,
    {
        if self.params.mask.add_second_noise {
            check_budget(self.eps2)?;
        }
        let results = (0..self.n)
            .into_par_iter()
            .map(|u| {
                let df = self.delta_f(u)?;
                let mut stats = ClampStats::default();
                let sum = local(u, df, &mut stats);
                Ok((sum + self.noise(u, df, seeds), stats))
            })
            .collect::<Result<Vec<_>>>()?;
        let stats = results
            .iter()
            .fold(ClampStats::default(), |acc, (_, s)| acc.merge(*s));
        Ok((results.into_iter().map(|(v, _)| v).collect(), stats))
    }
}

fn charge_second_round(ledger: &mut BudgetLedger, mask: StageMask, label: &str, eps: f64) {
    if mask.add_second_noise {
        ledger.charge(label, eps);
    }
}

/// Two-round triangle estimate from full-matrix downloads.
pub fn tri_tr(g: &Graph, params: &EstimatorParams, seeds: &SeedStream) -> Result<Estimate> {
    let FirstRound {
        a_hat,
        sigma2,
        neighbors,
        noisy,
        mut ledger,
        mut trace,
    } = first_round(g, params, seeds)?;
    let n = g.node_count();
    let round = SecondRound {
        algorithm: Algorithm::TriTr,
        params,
        n,
        sigma2,
        noisy: noisy.as_ref(),
        eps2: params.split.eps2,
        stage: Stage::SecondRound,
    };
    let (sums, clamp) = round.uploads(seeds, |u, df, stats| {
        tri_tr_local_sum(&a_hat, &neighbors[u], df, stats)
    })?;
    for u in 0..n {
        trace.download(2, "a_hat", u, (n * n) as u64 * ENTRY_BYTES);
        trace.upload(2, "t_hat", u, ENTRY_BYTES, params.split.eps2);
    }
    charge_second_round(&mut ledger, params.mask, "second-round", params.split.eps2);
    let total: f64 = sums.iter().map(|s| 2.0 * s).sum();
    Ok(Estimate::finish(total / 6.0, ledger, trace, clamp))
}

/// Two-round triangle estimate from one column of `B̂ = Â²` per user.
pub fn tri_mtr(g: &Graph, params: &EstimatorParams, seeds: &SeedStream) -> Result<Estimate> {
    let FirstRound {
        a_hat,
        sigma2,
        neighbors,
        noisy,
        mut ledger,
        mut trace,
    } = first_round(g, params, seeds)?;
    let n = g.node_count();
    let b_hat = crate::matrix::multiply(&a_hat, &a_hat, params.strategy);
    let round = SecondRound {
        algorithm: Algorithm::TriMtr,
        params,
        n,
        sigma2,
        noisy: noisy.as_ref(),
        eps2: params.split.eps2,
        stage: Stage::SecondRound,
    };
    // B̂ is symmetric, so column u is row u
    let (sums, clamp) = round.uploads(seeds, |u, df, stats| {
        tri_mtr_local_sum(b_hat.row(u), &neighbors[u], df, stats)
    })?;
    for u in 0..n {
        trace.download(2, "b_hat_column", u, n as u64 * ENTRY_BYTES);
        trace.upload(2, "t_hat", u, ENTRY_BYTES, params.split.eps2);
    }
    charge_second_round(&mut ledger, params.mask, "second-round", params.split.eps2);
    let total: f64 = sums.iter().sum();
    Ok(Estimate::finish(total / 6.0, ledger, trace, clamp))
}

/// Two-round quadrangle estimate from full `B̂` downloads.
pub fn qua_tr(g: &Graph, params: &EstimatorParams, seeds: &SeedStream) -> Result<Estimate> {
    let FirstRound {
        a_hat,
        sigma2,
        neighbors,
        noisy,
        mut ledger,
        mut trace,
    } = first_round(g, params, seeds)?;
    let n = g.node_count();
    let b_hat = crate::matrix::multiply(&a_hat, &a_hat, params.strategy);
    let round = SecondRound {
        algorithm: Algorithm::QuaTr,
        params,
        n,
        sigma2,
        noisy: noisy.as_ref(),
        eps2: params.split.eps2,
        stage: Stage::SecondRound,
    };
    let (sums, clamp) = round.uploads(seeds, |u, df, stats| {
        qua_tr_local_sum(&b_hat, &neighbors[u], df, stats)
    })?;
    for u in 0..n {
        trace.download(2, "b_hat", u, (n * n) as u64 * ENTRY_BYTES);
        trace.upload(2, "q_hat", u, ENTRY_BYTES, params.split.eps2);
    }
    charge_second_round(&mut ledger, params.mask, "second-round", params.split.eps2);
    let total: f64 = sums.iter().map(|s| 2.0 * s).sum();
    Ok(Estimate::finish(total / 8.0, ledger, trace, clamp))
}

/// 2-star estimate `Σ_u [(d̃_u-α)(d̃_u-α-1) - 2/ε₀²]` from projected degrees.
pub fn two_star(g: &Graph, eps0: f64, alpha: usize, seeds: &SeedStream) -> Result<Estimate> {
    let eps0 = check_budget(eps0)?;
    let proj = project_all(g, eps0, alpha, seeds)?;
    let n = g.node_count();
    let mut trace = RunTrace::new(n);
    for u in 0..n {
        trace.upload(1, "projection", u, ENTRY_BYTES, eps0);
    }
    let mut ledger = BudgetLedger::new();
    ledger.charge("projection", eps0);
    let value = two_star_from_degrees(&proj.noisy_degrees(), alpha, eps0);
    Ok(Estimate::finish(value, ledger, trace, ClampStats::default()))
}

fn two_star_from_degrees(noisy: &[usize], alpha: usize, eps0: f64) -> f64 {
    let correction = 2.0 / (eps0 * eps0);
    noisy
        .iter()
        .map(|&d| {
            let x = d as f64 - alpha as f64;
            x * (x - 1.0) - correction
        })
        .sum()
}

/// Unbiased 2-star estimate on raw noisy degrees `d̂ = d + Lap(1/ε₀)`
/// (no flooring, no offset, no clamping at zero).
pub fn two_star_unclamped(g: &Graph, eps0: f64, seeds: &SeedStream) -> Result<f64> {
    let eps0 = check_budget(eps0)?;
    let correction = 2.0 / (eps0 * eps0);
    let values: Vec<f64> = (0..g.node_count())
        .into_par_iter()
        .map(|u| {
            let d = g.degree(u) as f64;
            let noisy = if eps0.is_infinite() {
                d
            } else {
                d + laplace_unchecked(1.0 / eps0, &mut seeds.user(Stage::Degree, u))
            };
            noisy * (noisy - 1.0) - correction
        })
        .collect();
    Ok(values.iter().sum())
}

/// Triangle estimator used inside a joint run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JointTriangle {
    /// Neighbor entries of `B̂`, already part of the `B̂` download.
    #[default]
    Modified,
    /// Pair sums over `Â`, which adds a download of `Â`.
    PairSum,
}

/// Triangle, quadrangle and 2-star estimates from one shared run.
#[derive(Debug, Clone)]
pub struct JointEstimate {
    pub triangle: f64,
    pub quadrangle: f64,
    pub two_star: f64,
    pub download_bytes: u64,
    pub ledger: BudgetLedger,
    pub trace: RunTrace,
}

/// One projection, one noisy matrix, one `B̂` download; the triangle
/// upload spends `ε₂` and the quadrangle upload `ε₃`.
pub fn joint_estimate(
    g: &Graph,
    params: &EstimatorParams,
    triangle_style: JointTriangle,
    seeds: &SeedStream,
) -> Result<JointEstimate> {
    let split = params.split;
    for e in [split.eps0, split.eps1, split.eps2, split.eps3] {
        check_budget(e)?;
    }
    let params = EstimatorParams {
        mask: StageMask::full(),
        ..*params
    };
    let FirstRound {
        a_hat,
        sigma2,
        neighbors,
        noisy,
        mut ledger,
        mut trace,
    } = first_round(g, &params, seeds)?;
    let n = g.node_count();
    let (degrees, _) = noisy.as_ref().expect("full pipeline projects");
    let two_star = two_star_from_degrees(degrees, params.alpha, split.eps0);

    let b_hat = crate::matrix::multiply(&a_hat, &a_hat, params.strategy);
    let tri_alg = match triangle_style {
        JointTriangle::Modified => Algorithm::TriMtr,
        JointTriangle::PairSum => Algorithm::TriTr,
    };
    let tri_round = SecondRound {
        algorithm: tri_alg,
        params: &params,
        n,
        sigma2,
        noisy: noisy.as_ref(),
        eps2: split.eps2,
        stage: Stage::SecondRound,
    };
    let (tri_sums, _) = tri_round.uploads(seeds, |u, df, stats| match triangle_style {
        JointTriangle::Modified => tri_mtr_local_sum(b_hat.row(u), &neighbors[u], df, stats),
        JointTriangle::PairSum => tri_tr_local_sum(&a_hat, &neighbors[u], df, stats),
    })?;
    let qua_round = SecondRound {
        algorithm: Algorithm::QuaTr,
        params: &params,
        n,
        sigma2,
        noisy: noisy.as_ref(),
        eps2: split.eps3,
        stage: Stage::SecondRoundAux,
    };
    let (qua_sums, _) = qua_round.uploads(seeds, |u, df, stats| {
        qua_tr_local_sum(&b_hat, &neighbors[u], df, stats)
    })?;

    for u in 0..n {
        trace.download(2, "b_hat", u, (n * n) as u64 * ENTRY_BYTES);
        if triangle_style == JointTriangle::PairSum {
            trace.download(2, "a_hat", u, (n * n) as u64 * ENTRY_BYTES);
        }
        trace.upload(2, "t_hat", u, ENTRY_BYTES, split.eps2);
        trace.upload(2, "q_hat", u, ENTRY_BYTES, split.eps3);
    }
    ledger.charge("second-round-triangle", split.eps2);
    ledger.charge("second-round-quadrangle", split.eps3);

    let triangle = match triangle_style {
        JointTriangle::Modified => tri_sums.iter().sum::<f64>() / 6.0,
        JointTriangle::PairSum => tri_sums.iter().map(|s| 2.0 * s).sum::<f64>() / 6.0,
    };
    let quadrangle = qua_sums.iter().map(|s| 2.0 * s).sum::<f64>() / 8.0;
    let download_bytes = measure_cost(&trace).cost_dl;
    Ok(JointEstimate {
        triangle,
        quadrangle,
        two_star,
        download_bytes,
        ledger,
        trace,
    })
}

/// `B̂` for callers that want to inspect the collector's matrix directly.
pub fn collector_square(a_hat: &crate::nam::NoisyAdjacencyMatrix, strategy: MatMulStrategy) -> DenseMatrix {
    square(a_hat, strategy)
}
