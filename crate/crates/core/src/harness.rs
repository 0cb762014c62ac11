//! Trial batches, report rows and parameter sweeps.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{theoretical_mse, trial_statistics, TrialStats};
use crate::error::{Error, Result};
use crate::estimators::{
    joint_estimate, Algorithm, ClampStats, EstimatorParams, JointEstimate, JointTriangle, StageMask,
};
use crate::graph::{exact_count, Graph};
use crate::mechanisms::Mechanism;
use crate::protocol::{BudgetLedger, CostMeter};
use crate::rng::SeedStream;

/// One estimator with its parameters and the total budget it is reported
/// under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub params: EstimatorParams,
}

impl EstimatorConfig {
    /// Default parameters for total budget `eps`.
    pub fn new(algorithm: Algorithm, eps: f64) -> Self {
        Self {
            algorithm,
            epsilon: eps,
            params: EstimatorParams::defaults(eps),
        }
    }

    pub fn with_params(algorithm: Algorithm, epsilon: f64, params: EstimatorParams) -> Self {
        Self {
            algorithm,
            epsilon,
            params,
        }
    }

    /// Closed-form MSE when one applies: the one-round estimator, the
    /// two-round estimators without projection, and 2-stars.
    pub fn theoretical_mse(&self, g: &Graph) -> Result<Option<f64>> {
        let p = &self.params;
        let eps1 = if p.mask.reduce_eps1 {
            p.split.eps1
        } else {
            p.split.eps0 + p.split.eps1 + p.split.eps2
        };
        let value = match self.algorithm {
            Algorithm::TriOr => {
                let eps = p.split.eps0 + p.split.eps1 + p.split.eps2;
                let s2 = Mechanism::new(p.mechanism, eps)?.entry_variance().sigma2();
                Some(theoretical_mse(Algorithm::TriOr, g, s2, None)?.value)
            }
            Algorithm::TwoStar => {
                Some(theoretical_mse(Algorithm::TwoStar, g, 0.0, Some(p.split.eps0))?.value)
            }
            alg if !p.mask.apply_projection => {
                let s2 = Mechanism::new(p.mechanism, eps1)?.entry_variance().sigma2();
                Some(theoretical_mse(alg, g, s2, None)?.value)
            }
            _ => None,
        };
        Ok(value)
    }
}

/// Outcome of a trial batch.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub config: EstimatorConfig,
    pub seed: u64,
    pub samples: Vec<f64>,
    pub stats: TrialStats,
    pub theoretical_mse: Option<f64>,
    /// Download cost and ledger of trial 0; both are the same for every
    /// trial.
    pub cost: CostMeter,
    pub ledger: BudgetLedger,
    pub clamp: ClampStats,
    pub seconds: f64,
}

/// Runs `trials` independent repetitions with seeds derived from `seed`.
pub fn run_trials(g: &Graph, config: &EstimatorConfig, trials: usize, seed: u64) -> Result<TrialReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let truth = exact_count(g, config.algorithm.target()) as f64;
    let base = SeedStream::new(seed);
    let start = Instant::now();
    let runs = (0..trials)
        .into_par_iter()
        .map(|t| {
            config
                .params
                .run(config.algorithm, g, &base.trial(t))
                .map_err(|e| Error::Trial {
                    trial: t,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let seconds = start.elapsed().as_secs_f64();
    let samples: Vec<f64> = runs.iter().map(|e| e.value).collect();
    let clamp = runs
        .iter()
        .fold(ClampStats::default(), |acc, e| acc.merge(e.clamp));
    let first = &runs[0];
    Ok(TrialReport {
        config: *config,
        seed,
        stats: trial_statistics(&samples, truth)?,
        theoretical_mse: config.theoretical_mse(g)?,
        cost: first.cost(),
        ledger: first.ledger.clone(),
        clamp,
        seconds,
        samples,
    })
}

/// Independent joint runs, one per trial seed.
pub fn joint_trials(
    g: &Graph,
    params: &EstimatorParams,
    style: JointTriangle,
    trials: usize,
    seed: u64,
) -> Result<Vec<JointEstimate>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let base = SeedStream::new(seed);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            joint_estimate(g, params, style, &base.trial(t)).map_err(|e| Error::Trial {
                trial: t,
                source: Box::new(e),
            })
        })
        .collect()
}

/// `points` evenly spaced budgets from `lo` to `hi` inclusive.
pub fn epsilon_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// The default 12-point grid over `[0.1, 2]`.
pub fn default_epsilon_grid() -> Vec<f64> {
    epsilon_grid(0.1, 2.0, 12)
}

/// Column names of the estimate CSV, in order.
pub const REPORT_COLUMNS: [&str; 15] = [
    "seed",
    "estimator",
    "mechanism",
    "stage",
    "epsilon",
    "trials",
    "truth",
    "mean",
    "median_re",
    "mean_re",
    "empirical_mse",
    "theoretical_mse",
    "cost_dl_bytes",
    "ledger_total",
    "seconds",
];

pub fn report_header() -> String {
    REPORT_COLUMNS.join(",")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrialReport {
    /// One CSV row. The `seconds` field is left empty unless `timing` is
    /// set, so that untimed output is reproducible byte for byte.
    pub fn csv_row(&self, timing: bool) -> String {
        let c = &self.config;
        let mut row = String::new();
        write!(
            row,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
            self.seed,
            c.algorithm,
            c.params.mechanism,
            c.params.mask,
            c.epsilon,
            self.stats.trials,
            self.stats.truth,
            self.stats.mean,
            opt(self.stats.median_re),
            opt(self.stats.mean_re),
            self.stats.mse,
            opt(self.theoretical_mse),
            self.cost.cost_dl,
            self.ledger.total(),
        )
        .expect("writing to a String");
        if timing {
            write!(row, "{}", self.seconds).expect("writing to a String");
        }
        row
    }
}

/// Header plus one row per report, LF-terminated.
pub fn reports_to_csv(reports: &[TrialReport], timing: bool) -> String {
    let mut out = report_header();
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row(timing));
        out.push('\n');
    }
    out
}

/// Runs one configuration per budget in `grid`.
pub fn epsilon_sweep(
    g: &Graph,
    algorithm: Algorithm,
    template: &EstimatorParams,
    grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialReport>> {
    grid.iter()
        .map(|&eps| {
            let params = EstimatorParams {
                split: scaled_split(template, eps),
                ..*template
            };
            run_trials(g, &EstimatorConfig::with_params(algorithm, eps, params), trials, seed)
        })
        .collect()
}

/// The template's split proportions applied to total budget `eps`.
fn scaled_split(template: &EstimatorParams, eps: f64) -> crate::estimators::BudgetSplit {
    let s = template.split;
    let total = s.eps0 + s.eps1 + s.eps2;
    let k = if total > 0.0 { eps / total } else { 0.0 };
    crate::estimators::BudgetSplit::new(s.eps0 * k, s.eps1 * k, s.eps2 * k)
}

/// Four ablation stages of one two-round estimator at each budget.
pub fn stage_sweep(
    g: &Graph,
    algorithm: Algorithm,
    template: &EstimatorParams,
    grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialReport>> {
    if !algorithm.is_two_round() {
        return Err(Error::Unsupported(format!("{algorithm} has no stages")));
    }
    let mut out = Vec::new();
    for mask in StageMask::STAGES {
        out.extend(epsilon_sweep(g, algorithm, &template.with_mask(mask), grid, trials, seed)?);
    }
    Ok(out)
}

/// One point of a density trend: `G(n, p)` and the median relative error.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendPoint {
    pub p: f64,
    pub average_degree: f64,
    pub median_re: Option<f64>,
}

/// Median relative error of `algorithm` on one `G(n, p)` sample per
/// density.
pub fn density_trend(
    n: usize,
    densities: &[f64],
    config: &EstimatorConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrendPoint>> {
    densities
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let g = Graph::erdos_renyi(n, p, &mut rng);
            let report = run_trials(&g, config, trials, seed)?;
            Ok(TrendPoint {
                p,
                average_degree: g.average_degree(),
                median_re: report.stats.median_re,
            })
        })
        .collect()
}
