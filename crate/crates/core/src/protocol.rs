//! Message trace, download accounting and the privacy budget ledger of one
//! simulated protocol run.
//!
//! Users are loop iterations, not sockets. Every message a user sends or
//! receives is appended to a [`RunTrace`]; [`measure_cost`] derives the
//! download cost from it as the maximum over users of the bytes received
//! across all rounds.

use std::fmt;

/// Bytes per transmitted matrix entry (`f64`).
pub const ENTRY_BYTES: u64 = 8;

/// Append-only list of `(stage, ε)` charges. Under sequential composition
/// the guarantee of the whole run is the sum of the charges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BudgetLedger {
    charges: Vec<(String, f64)>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, stage: impl Into<String>, epsilon: f64) {
        debug_assert!(epsilon >= 0.0);
        self.charges.push((stage.into(), epsilon));
    }

    pub fn charges(&self) -> &[(String, f64)] {
        &self.charges
    }

    pub fn total(&self) -> f64 {
        self.charges.iter().map(|(_, e)| e).sum()
    }
}

impl fmt::Display for BudgetLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .charges
            .iter()
            .map(|(s, e)| format!("{s}={e}"))
            .collect();
        write!(f, "{} (total {})", parts.join(" + "), self.total())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Upload,
    Download,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based protocol round.
    pub round: usize,
    pub stage: &'static str,
    pub user: usize,
    pub direction: Direction,
    pub bytes: u64,
    /// Budget spent by this message (0 for downloads).
    pub epsilon: f64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::Upload => "up",
            Direction::Download => "down",
        };
        write!(
            f,
            "round={} stage={} user={} dir={} bytes={} eps={}",
            self.round, self.stage, self.user, dir, self.bytes, self.epsilon
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    users: usize,
    records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new(users: usize) -> Self {
        Self {
            users,
            records: Vec::new(),
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn upload(&mut self, round: usize, stage: &'static str, user: usize, bytes: u64, epsilon: f64) {
        self.records.push(TraceRecord {
            round,
            stage,
            user,
            direction: Direction::Upload,
            bytes,
            epsilon,
        });
    }

    pub fn download(&mut self, round: usize, stage: &'static str, user: usize, bytes: u64) {
        self.records.push(TraceRecord {
            round,
            stage,
            user,
            direction: Direction::Download,
            bytes,
            epsilon: 0.0,
        });
    }

    pub fn rounds(&self) -> usize {
        self.records.iter().map(|r| r.round).max().unwrap_or(0)
    }

    /// One line per record.
    pub fn to_lines(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }
}

/// Per-user download volume by round and the resulting `Cost_DL`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostMeter {
    /// `per_user_download[user][round - 1]`, in bytes.
    pub per_user_download: Vec<Vec<u64>>,
    pub cost_dl: u64,
}

impl CostMeter {
    pub fn kib(&self) -> f64 {
        self.cost_dl as f64 / 1024.0
    }

    pub fn mib(&self) -> f64 {
        self.cost_dl as f64 / (1024.0 * 1024.0)
    }

    pub fn kb(&self) -> f64 {
        self.cost_dl as f64 / 1e3
    }

    pub fn mb(&self) -> f64 {
        self.cost_dl as f64 / 1e6
    }
}

/// `Cost_DL = max_i Σ_j |M_i^j|` over the download records of a trace.
pub fn measure_cost(trace: &RunTrace) -> CostMeter {
    let rounds = trace.rounds();
    let mut per_user = vec![vec![0u64; rounds]; trace.users()];
    for r in trace.records() {
        if r.direction == Direction::Download {
            per_user[r.user][r.round - 1] += r.bytes;
        }
    }
    let cost_dl = per_user
        .iter()
        .map(|rounds| rounds.iter().sum::<u64>())
        .max()
        .unwrap_or(0);
    CostMeter {
        per_user_download: per_user,
        cost_dl,
    }
}
