//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use ldpcount::harness::default_epsilon_grid;
use ldpcount::harness::epsilon_grid;
use ldpcount::{Algorithm, BudgetSplit, EstimatorParams, MatMulStrategy, MechanismKind, StageMask};

/// Graphs above this many nodes need `large = true` before any dense
/// matrix is allocated.
pub const LARGE_GRAPH_NODES: usize = 8000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub estimators: Vec<Algorithm>,
    pub mechanisms: Vec<MechanismKind>,
    pub epsilon: f64,
    /// Fractions of `epsilon` for projection, first round, second round.
    pub split: [f64; 3],
    /// Fraction of `epsilon` for the quadrangle upload in joint runs.
    pub eps3: f64,
    pub alpha: usize,
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
    pub stage: StageMask,
    /// `(lo, hi, points)`; `None` means the single budget `epsilon`, or the
    /// default grid in figure mode.
    pub eps_grid: Option<(f64, f64, usize)>,
    pub figure: bool,
    pub output: Option<PathBuf>,
    pub matmul: MatMulStrategy,
    pub timing: bool,
    pub large: bool,
    /// Report `max(0, estimate)` instead of the raw, unbiased value.
    pub nonneg: bool,
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            dataset: None,
            estimators: Algorithm::ALL.to_vec(),
            mechanisms: vec![MechanismKind::WarnerRr],
            epsilon: 1.0,
            split: [0.1, 0.8, 0.1],
            eps3: 0.1,
            alpha: 20,
            beta: 0.01,
            trials: 20,
            seed,
            stage: StageMask::full(),
            eps_grid: None,
            figure: false,
            output: None,
            matmul: MatMulStrategy::default(),
            timing: false,
            large: false,
            nonneg: false,
        }
    }

    /// Sets one key; the error names the key and the offending value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        let bad = |what: &str| format!("{key}: {what} (got `{value}`)");
        match key {
            "dataset" => {
                self.dataset = if value.is_empty() { None } else { Some(PathBuf::from(value)) }
            }
            "estimators" | "estimator" => {
                self.estimators = if value == "all" {
                    Algorithm::ALL.to_vec()
                } else {
                    value
                        .split(',')
                        .map(|s| s.trim().parse::<Algorithm>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| bad(&e.to_string()))?
                };
            }
            "mechanism" => {
                self.mechanisms = if value == "both" {
                    vec![MechanismKind::WarnerRr, MechanismKind::Laplace]
                } else {
                    vec![value.parse().map_err(|e: ldpcount::Error| bad(&e.to_string()))?]
                };
            }
            "epsilon" => self.epsilon = positive(value).ok_or_else(|| bad("expected a positive number"))?,
            "split" => {
                let parts: Vec<f64> = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("expected three comma-separated numbers"))?;
                if parts.len() != 3 || parts.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
                    return Err(bad("expected three positive fractions"));
                }
                self.split = [parts[0], parts[1], parts[2]];
            }
            "eps3" => self.eps3 = positive(value).ok_or_else(|| bad("expected a positive number"))?,
            "alpha" => self.alpha = value.parse().map_err(|_| bad("expected a non-negative integer"))?,
            "beta" => {
                let b: f64 = value.parse().map_err(|_| bad("expected a number"))?;
                if !(b > 0.0 && b < 1.0) {
                    return Err(bad("must lie strictly between 0 and 1"));
                }
                self.beta = b;
            }
            "trials" => {
                let t: usize = value.parse().map_err(|_| bad("expected a positive integer"))?;
                if t == 0 {
                    return Err(bad("must be at least 1"));
                }
                self.trials = t;
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an unsigned integer"))?,
            "stage" => self.stage = value.parse().map_err(|_| bad("expected 1, 2, 3 or 4"))?,
            "eps_grid" => {
                if value.is_empty() || value == "none" {
                    self.eps_grid = None;
                } else {
                    let parts: Vec<&str> = value.split(':').collect();
                    let parsed = match parts.as_slice() {
                        [lo, hi, k] => match (positive(lo), positive(hi), k.parse::<usize>()) {
                            (Some(lo), Some(hi), Ok(k)) if k >= 1 && lo <= hi => Some((lo, hi, k)),
                            _ => None,
                        },
                        _ => None,
                    };
                    self.eps_grid = Some(parsed.ok_or_else(|| bad("expected lo:hi:points with 0 < lo <= hi"))?);
                }
            }
            "figure" => self.figure = boolean(value).ok_or_else(|| bad("expected true or false"))?,
            "output" => {
                self.output = if value.is_empty() { None } else { Some(PathBuf::from(value)) }
            }
            "matmul" => self.matmul = value.parse().map_err(|e: ldpcount::Error| bad(&e.to_string()))?,
            "timing" => self.timing = boolean(value).ok_or_else(|| bad("expected true or false"))?,
            "large" => self.large = boolean(value).ok_or_else(|| bad("expected true or false"))?,
            "nonneg" => self.nonneg = boolean(value).ok_or_else(|| bad("expected true or false"))?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment. Returns every
    /// problem found instead of stopping at the first.
    pub fn apply_text(&mut self, text: &str) -> Vec<String> {
        let mut errors = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = self.set(k.trim(), v) {
                        errors.push(format!("line {}: {e}", no + 1));
                    }
                }
                None => errors.push(format!("line {}: expected `key = value`", no + 1)),
            }
        }
        errors
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let list = |v: Vec<String>| v.join(",");
        let mut put = |k: &str, v: String| {
            writeln!(out, "{k} = {v}").expect("writing to a String");
        };
        put(
            "dataset",
            self.dataset.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        put("estimators", list(self.estimators.iter().map(|a| a.to_string()).collect()));
        put(
            "mechanism",
            if self.mechanisms.len() == 2 {
                "both".into()
            } else {
                self.mechanisms[0].to_string()
            },
        );
        put("epsilon", self.epsilon.to_string());
        put("split", list(self.split.iter().map(|x| x.to_string()).collect()));
        put("eps3", self.eps3.to_string());
        put("alpha", self.alpha.to_string());
        put("beta", self.beta.to_string());
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        put("stage", self.stage.to_string());
        put(
            "eps_grid",
            self.eps_grid
                .map(|(lo, hi, k)| format!("{lo}:{hi}:{k}"))
                .unwrap_or_else(|| "none".into()),
        );
        put("figure", self.figure.to_string());
        put(
            "output",
            self.output.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        put("matmul", self.matmul.to_string());
        put("timing", self.timing.to_string());
        put("large", self.large.to_string());
        put("nonneg", self.nonneg.to_string());
        out
    }

    /// Budgets to run: the explicit grid, else the default grid in figure
    /// mode, else just `epsilon`.
    pub fn grid(&self) -> Vec<f64> {
        match (self.eps_grid, self.figure) {
            (Some((lo, hi, k)), _) => epsilon_grid(lo, hi, k),
            (None, true) => default_epsilon_grid(),
            (None, false) => vec![self.epsilon],
        }
    }

    /// Parameters at total budget `eps` for `mechanism`.
    pub fn params(&self, eps: f64, mechanism: MechanismKind) -> EstimatorParams {
        let [f0, f1, f2] = self.split;
        let total = f0 + f1 + f2;
        EstimatorParams {
            split: BudgetSplit::new(eps * f0 / total, eps * f1 / total, eps * f2 / total),
            alpha: self.alpha,
            beta: self.beta,
            mechanism,
            strategy: self.matmul,
            mask: self.stage,
        }
    }

    /// Cross-field checks that single keys cannot catch.
    pub fn validate(&self, need_dataset: bool) -> Vec<String> {
        let mut errors = Vec::new();
        if need_dataset && self.dataset.is_none() {
            errors.push("dataset: no edge list given (use --dataset or `dataset =`)".into());
        }
        if let Err(e) = self.stage.validate() {
            errors.push(format!("stage: {e}"));
        }
        if self.estimators.is_empty() {
            errors.push("estimators: empty list".into());
        }
        errors
    }
}

fn positive(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite() && *x > 0.0)
}

fn boolean(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let mut c = ExperimentConfig::new(7);
        let errors = c.apply_text(
            "dataset = g.txt\nestimators = trimtr,quatr\nmechanism = both\nsplit = 0.2,0.6,0.2\n\
             eps_grid = 0.5:2:4\nstage = 3\nmatmul = blocked:32\n# comment\n\ntiming = yes\n",
        );
        assert!(errors.is_empty(), "{errors:?}");
        let mut d = ExperimentConfig::new(0);
        assert!(d.apply_text(&c.to_text()).is_empty());
        assert_eq!(c, d);
        assert_eq!(c.to_text().lines().count(), 18);
    }

    #[test]
    fn collects_every_error() {
        let mut c = ExperimentConfig::new(0);
        let errors = c.apply_text("epsilon = -1\nbeta = 2\nwhat = 3\nnonsense\ntrials = 0\n");
        assert_eq!(errors.len(), 5, "{errors:?}");
        assert!(errors[0].starts_with("line 1: epsilon"));
    }

    #[test]
    fn grids() {
        let mut c = ExperimentConfig::new(0);
        assert_eq!(c.grid(), vec![1.0]);
        c.figure = true;
        assert_eq!(c.grid().len(), 12);
        c.set("eps_grid", "1:2:3").unwrap();
        assert_eq!(c.grid(), vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn params_scale_split() {
        let c = ExperimentConfig::new(0);
        let p = c.params(2.0, MechanismKind::Laplace);
        assert!((p.split.eps1 - 1.6).abs() < 1e-12);
        assert_eq!(p.mechanism, MechanismKind::Laplace);
    }

    #[test]
    fn second_noise_without_projection_is_rejected() {
        let mut c = ExperimentConfig::new(0);
        c.stage = StageMask::new(true, false, true);
        assert_eq!(c.validate(false).len(), 1);
        assert_eq!(c.validate(true).len(), 2);
    }
}
