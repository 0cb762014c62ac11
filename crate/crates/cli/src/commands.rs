//! Subcommand bodies. Every CSV written here has a header row, LF line
//! endings and the seed in its first column.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ldpcount::analysis::{
    confusion_matrix, laplace_errors_at_threshold, simulate_attack, tradeoff_curve, trial_statistics,
    variance_comparison, AttackPoint, AttackStrategy,
};
use ldpcount::estimators::JointTriangle;
use ldpcount::graph::{exact_count, read_edge_list};
use ldpcount::harness::{epsilon_grid, joint_trials, report_header, run_trials, EstimatorConfig, TrialReport};
use ldpcount::mechanisms::rr_keep_probability;
use ldpcount::rng::Stage;
use ldpcount::{Algorithm, Graph, Mechanism, MechanismKind, SeedStream, SubgraphKind};

use crate::config::{ExperimentConfig, LARGE_GRAPH_NODES};
use crate::Failure;

/// Reads an edge list. A missing or unreadable file is a usage error; a
/// malformed one is a runtime error.
fn load(path: &Path) -> Result<Graph, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(vec![format!("{}: no such file", path.display())]));
    }
    let parsed = read_edge_list(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parsed.graph)
}

/// Loads the dataset and enforces the size guard when any selected
/// estimator needs dense `n × n` matrices.
fn load_dataset(cfg: &ExperimentConfig, dense: bool) -> Result<Graph, Failure> {
    let path = cfg.dataset.as_deref().expect("validated before running");
    let g = load(path)?;
    if dense && g.node_count() > LARGE_GRAPH_NODES && !cfg.large {
        let gib = (g.node_count() as f64).powi(2) * 8.0 / (1u64 << 30) as f64;
        return Err(Failure::Usage(vec![format!(
            "{}: {} nodes needs dense matrices of about {gib:.1} GiB each; pass --large to proceed",
            path.display(),
            g.node_count()
        )]));
    }
    Ok(g)
}

fn needs_dense(estimators: &[Algorithm]) -> bool {
    estimators.iter().any(|&a| a != Algorithm::TwoStar)
}

pub fn count_exact(path: &Path, kinds: &[SubgraphKind]) -> Result<(), Failure> {
    let g = load(path)?;
    if let [kind] = kinds {
        println!("{}", exact_count(&g, *kind));
    } else {
        let mut out = String::from("kind,count\n");
        for &kind in kinds {
            writeln!(out, "{kind},{}", exact_count(&g, kind)).expect("writing to a String");
        }
        print!("{out}");
    }
    Ok(())
}

/// Replaces negative samples with zero and recomputes the statistics.
fn clip_negative(report: &mut TrialReport) -> Result<(), Failure> {
    for s in &mut report.samples {
        *s = s.max(0.0);
    }
    report.stats = trial_statistics(&report.samples, report.stats.truth)?;
    Ok(())
}

/// Writes `<prefix>_<name>.csv` files into the output directory, or every
/// table to stdout under one header.
fn emit(cfg: &ExperimentConfig, prefix: &str, header: &str, tables: &[(String, Vec<String>)]) -> Result<(), Failure> {
    match &cfg.output {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, rows) in tables {
                let path = dir.join(format!("{prefix}_{name}.csv"));
                write_csv(&path, header, rows)?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut out = format!("{header}\n");
            for (_, rows) in tables {
                for r in rows {
                    out.push_str(r);
                    out.push('\n');
                }
            }
            print!("{out}");
        }
    }
    Ok(())
}

fn write_csv(path: &PathBuf, header: &str, rows: &[String]) -> Result<(), Failure> {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn report_rows(reports: &[TrialReport], timing: bool) -> Vec<String> {
    reports.iter().map(|r| r.csv_row(timing)).collect()
}

pub fn estimate(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let g = load_dataset(cfg, needs_dense(&cfg.estimators))?;
    let mut tables = Vec::new();
    for &alg in &cfg.estimators {
        let mut reports = Vec::new();
        for &mech in &cfg.mechanisms {
            for eps in cfg.grid() {
                let config = EstimatorConfig::with_params(alg, eps, cfg.params(eps, mech));
                let mut report = run_trials(&g, &config, cfg.trials, cfg.seed)?;
                if cfg.nonneg {
                    clip_negative(&mut report)?;
                }
                reports.push(report);
            }
        }
        tables.push((alg.to_string(), report_rows(&reports, cfg.timing)));
    }
    emit(cfg, "estimate", &report_header(), &tables)
}

pub fn stage_sweep(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let one_round: Vec<String> = cfg
        .estimators
        .iter()
        .filter(|a| !a.is_two_round())
        .map(|a| format!("estimators: {a} has no stages; choose from tritr, trimtr, quatr"))
        .collect();
    if !one_round.is_empty() {
        return Err(Failure::Usage(one_round));
    }
    let g = load_dataset(cfg, true)?;
    let mut tables = Vec::new();
    for &alg in &cfg.estimators {
        let mut reports = Vec::new();
        for &mech in &cfg.mechanisms {
            let template = cfg.params(1.0, mech);
            for mut report in ldpcount::harness::stage_sweep(&g, alg, &template, &cfg.grid(), cfg.trials, cfg.seed)? {
                if cfg.nonneg {
                    clip_negative(&mut report)?;
                }
                reports.push(report);
            }
        }
        tables.push((alg.to_string(), report_rows(&reports, cfg.timing)));
    }
    emit(cfg, "stage_sweep", &report_header(), &tables)
}

pub const JOINT_COLUMNS: &str =
    "seed,triangle_style,mechanism,epsilon,eps3,trials,kind,truth,mean,median_re,mean_re,empirical_mse,cost_dl_bytes,ledger_total";

pub fn joint(cfg: &ExperimentConfig, style: JointTriangle) -> Result<(), Failure> {
    let g = load_dataset(cfg, true)?;
    let style_name = match style {
        JointTriangle::Modified => "modified",
        JointTriangle::PairSum => "pair-sum",
    };
    let total: f64 = cfg.split.iter().sum();
    let mut rows = Vec::new();
    for &mech in &cfg.mechanisms {
        for eps in cfg.grid() {
            let mut params = cfg.params(eps, mech);
            let eps3 = eps * cfg.eps3 / total;
            params.split = params.split.with_eps3(eps3);
            let runs = joint_trials(&g, &params, style, cfg.trials, cfg.seed)?;
            let first = &runs[0];
            let cost = ldpcount::protocol::measure_cost(&first.trace).cost_dl;
            for kind in SubgraphKind::ALL {
                let mut samples: Vec<f64> = runs
                    .iter()
                    .map(|e| match kind {
                        SubgraphKind::Triangle => e.triangle,
                        SubgraphKind::Quadrangle => e.quadrangle,
                        SubgraphKind::TwoStar => e.two_star,
                    })
                    .collect();
                if cfg.nonneg {
                    samples.iter_mut().for_each(|s| *s = s.max(0.0));
                }
                let s = trial_statistics(&samples, exact_count(&g, kind) as f64)?;
                rows.push(format!(
                    "{},{style_name},{mech},{eps},{eps3},{},{kind},{},{},{},{},{},{cost},{}",
                    cfg.seed,
                    s.trials,
                    s.truth,
                    s.mean,
                    opt(s.median_re),
                    opt(s.mean_re),
                    s.mse,
                    first.ledger.total(),
                ));
            }
        }
    }
    emit(cfg, "joint", JOINT_COLUMNS, &[("estimates".into(), rows)])
}

pub const COST_COLUMNS: &str = "seed,estimator,n,epsilon,cost_dl_bytes,kb,kib,mb,mib";

/// Runs each estimator once and reports its measured download volume.
pub fn cost(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let g = load_dataset(cfg, needs_dense(&cfg.estimators))?;
    let params = cfg.params(cfg.epsilon, cfg.mechanisms[0]);
    let seeds = SeedStream::new(cfg.seed);
    let mut rows = Vec::new();
    for &alg in &cfg.estimators {
        let c = params.run(alg, &g, &seeds)?.cost();
        rows.push(format!(
            "{},{alg},{},{},{},{},{},{},{}",
            cfg.seed,
            g.node_count(),
            cfg.epsilon,
            c.cost_dl,
            c.kb(),
            c.kib(),
            c.mb(),
            c.mib()
        ));
    }
    emit(cfg, "cost", COST_COLUMNS, &[("estimators".into(), rows)])
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackSeries {
    Tradeoff,
    Confusion,
    Variance,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackPlan {
    pub seed: u64,
    pub eps: Vec<f64>,
    pub p: Vec<f64>,
    pub resolution: usize,
    pub draws: usize,
    pub output: Option<PathBuf>,
    pub series: AttackSeries,
}

fn parse_list(name: &str, text: &str, ok: impl Fn(f64) -> bool, errors: &mut Vec<String>) -> Vec<f64> {
    let values: Option<Vec<f64>> = match text.split(':').collect::<Vec<_>>().as_slice() {
        [lo, hi, k] => match (lo.parse::<f64>(), hi.parse::<f64>(), k.parse::<usize>()) {
            (Ok(lo), Ok(hi), Ok(k)) if k >= 1 && lo <= hi => Some(epsilon_grid(lo, hi, k)),
            _ => None,
        },
        _ => text.split(',').map(|s| s.trim().parse::<f64>().ok()).collect(),
    };
    match values {
        Some(v) if !v.is_empty() && v.iter().all(|&x| ok(x)) => v,
        _ => {
            errors.push(format!("--{name}: invalid grid `{text}`"));
            Vec::new()
        }
    }
}

impl AttackPlan {
    pub fn parse(
        seed: u64,
        eps: &str,
        p: &str,
        resolution: usize,
        draws: usize,
        output: Option<PathBuf>,
        series: AttackSeries,
    ) -> Result<Self, Vec<String>> {
        let mut errors = Vec::new();
        let eps = parse_list("eps", eps, |x| x.is_finite() && x > 0.0, &mut errors);
        let p = parse_list("p", p, |x| x > 0.0 && x < 1.0, &mut errors);
        if resolution < 2 {
            errors.push(format!("--resolution: must be at least 2 (got {resolution})"));
        }
        if errors.is_empty() {
            Ok(Self {
                seed,
                eps,
                p,
                resolution,
                draws,
                output,
                series,
            })
        } else {
            Err(errors)
        }
    }
}

pub const TRADEOFF_COLUMNS: &str = "seed,mechanism,epsilon,point,type1,type2";
pub const CONFUSION_COLUMNS: &str = "seed,strategy,epsilon,p,true_positive,false_negative,false_positive,true_negative,type1,type2,precision,recall,mc_type1,mc_type2";
pub const VARIANCE_COLUMNS: &str = "seed,epsilon,sigma2_rr,sigma2_laplace,twice_sigma2_rr";

fn tradeoff_rows(plan: &AttackPlan) -> Result<Vec<String>, Failure> {
    let mut rows = Vec::new();
    for &eps in &plan.eps {
        for mech in [Mechanism::rr(eps)?, Mechanism::laplace(eps)?] {
            for (t1, t2) in tradeoff_curve(&mech, plan.resolution)? {
                rows.push(format!("{},{},{eps},grid,{t1},{t2}", plan.seed, mech.kind()));
            }
            let marks = match mech.kind() {
                MechanismKind::WarnerRr => {
                    let q = 1.0 - rr_keep_probability(eps);
                    vec![("inflection", q, q)]
                }
                MechanismKind::Laplace => {
                    let (a1, b1) = laplace_errors_at_threshold(eps, 1.0);
                    let (a2, b2) = laplace_errors_at_threshold(eps, 0.5);
                    vec![("kappa1", a1, b1), ("kappa2", a2, b2)]
                }
            };
            for (name, t1, t2) in marks {
                rows.push(format!("{},{},{eps},{name},{t1},{t2}", plan.seed, mech.kind()));
            }
        }
    }
    Ok(rows)
}

fn confusion_rows(plan: &AttackPlan) -> Result<Vec<String>, Failure> {
    let mut rows = Vec::new();
    let base = SeedStream::new(plan.seed);
    let mut k = 0;
    for &eps in &plan.eps {
        for &p in &plan.p {
            for strategy in AttackStrategy::ALL {
                let a = confusion_matrix(strategy, eps, p)?;
                let mc = if plan.draws > 0 {
                    let mut rng = base.trial(k).stage(Stage::Attack);
                    let m: AttackPoint = simulate_attack(strategy, eps, p, plan.draws as u64, &mut rng)?;
                    (m.type1.to_string(), m.type2.to_string())
                } else {
                    (String::new(), String::new())
                };
                k += 1;
                rows.push(format!(
                    "{},{strategy},{eps},{p},{},{},{},{},{},{},{},{},{},{}",
                    plan.seed,
                    a.true_positive,
                    a.false_negative,
                    a.false_positive,
                    a.true_negative,
                    a.type1,
                    a.type2,
                    a.precision,
                    a.recall,
                    mc.0,
                    mc.1
                ));
            }
        }
    }
    Ok(rows)
}

fn variance_rows(plan: &AttackPlan) -> Result<Vec<String>, Failure> {
    plan.eps
        .iter()
        .map(|&eps| {
            let (rr, lap) = variance_comparison(eps)?;
            Ok(format!("{},{eps},{rr},{lap},{}", plan.seed, 2.0 * rr))
        })
        .collect()
}

pub fn attack(plan: &AttackPlan) -> Result<(), Failure> {
    let mut tables: Vec<(&str, &str, Vec<String>)> = Vec::new();
    let all = plan.series == AttackSeries::All;
    if all || plan.series == AttackSeries::Tradeoff {
        tables.push(("tradeoff", TRADEOFF_COLUMNS, tradeoff_rows(plan)?));
    }
    if all || plan.series == AttackSeries::Confusion {
        tables.push(("confusion", CONFUSION_COLUMNS, confusion_rows(plan)?));
    }
    if all || plan.series == AttackSeries::Variance {
        tables.push(("variance", VARIANCE_COLUMNS, variance_rows(plan)?));
    }
    match &plan.output {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, header, rows) in &tables {
                let path = dir.join(format!("{name}.csv"));
                write_csv(&path, header, rows)?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            // several tables on stdout are separated by one blank line
            let mut out = String::new();
            for (i, (_, header, rows)) in tables.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                writeln!(out, "{header}").expect("writing to a String");
                for r in rows {
                    writeln!(out, "{r}").expect("writing to a String");
                }
            }
            print!("{out}");
        }
    }
    Ok(())
}
