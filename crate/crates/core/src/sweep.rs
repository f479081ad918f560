//! Parallel `(PR, df)` grid sweeps labelled by threshold-crossing counts.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{detect_crossings, settle, History, SettleOptions, SolverOptions};
use crate::model::{ModelParams, NetState};
use crate::stimulus::{df_to_d, Stimulus};

/// Environment variable capping the number of worker threads (0 = all).
pub const THREADS_ENV: &str = "STREAMWAVE_THREADS";

/// Why a cell has no percept.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FailReason {
    /// No crossings and mean activity at or below `θ`.
    Quiescent,
    /// The integration produced a non-finite state.
    Diverged,
    /// A crossing count with no percept (1, or more than 4).
    Count(u32),
    /// Any other error.
    Error,
}

/// Percept read off the crossing counts of the final period.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PerceptLabel {
    /// Four crossings.
    Int,
    /// Three crossings.
    Bis,
    /// Two crossings.
    Seg,
    /// Two crossings with both units staying near threshold throughout.
    ApH,
    /// No crossings, mean activity above `θ`.
    Sat,
    Failed(FailReason),
}

impl fmt::Display for PerceptLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerceptLabel::Int => f.write_str("INT"),
            PerceptLabel::Bis => f.write_str("BIS"),
            PerceptLabel::Seg => f.write_str("SEG"),
            PerceptLabel::ApH => f.write_str("AP_H"),
            PerceptLabel::Sat => f.write_str("SAT"),
            PerceptLabel::Failed(FailReason::Quiescent) => f.write_str("FAILED:quiescent"),
            PerceptLabel::Failed(FailReason::Diverged) => f.write_str("FAILED:diverged"),
            PerceptLabel::Failed(FailReason::Count(n)) => write!(f, "FAILED:n={n}"),
            PerceptLabel::Failed(FailReason::Error) => f.write_str("FAILED:error"),
        }
    }
}

impl FromStr for PerceptLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "INT" => PerceptLabel::Int,
            "BIS" => PerceptLabel::Bis,
            "SEG" => PerceptLabel::Seg,
            "AP_H" => PerceptLabel::ApH,
            "SAT" => PerceptLabel::Sat,
            "FAILED:quiescent" => PerceptLabel::Failed(FailReason::Quiescent),
            "FAILED:diverged" => PerceptLabel::Failed(FailReason::Diverged),
            "FAILED:error" => PerceptLabel::Failed(FailReason::Error),
            _ => {
                let n = s
                    .strip_prefix("FAILED:n=")
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| Error::Domain(format!("unknown percept label `{s}`")))?;
                PerceptLabel::Failed(FailReason::Count(n))
            }
        })
    }
}

impl Serialize for PerceptLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PerceptLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl PerceptLabel {
    pub fn is_failed(&self) -> bool {
        matches!(self, PerceptLabel::Failed(_))
    }
}

/// Maps crossing counts and activity levels to a percept.
///
/// `min_u` holds the minima of `u_A`, `u_B` over the period; two crossings
/// with both minima above `ap_h_ratio * θ` count as high-activity
/// anti-phase rather than segregation.
pub fn percept_from_crossings(n_a: u32, n_b: u32, mean_u: f64, min_u: (f64, f64), theta: f64, ap_h_ratio: f64) -> PerceptLabel {
    match n_a + n_b {
        4 => PerceptLabel::Int,
        3 => PerceptLabel::Bis,
        2 if min_u.0 > ap_h_ratio * theta && min_u.1 > ap_h_ratio * theta => PerceptLabel::ApH,
        2 => PerceptLabel::Seg,
        0 if mean_u > theta => PerceptLabel::Sat,
        0 => PerceptLabel::Failed(FailReason::Quiescent),
        n => PerceptLabel::Failed(FailReason::Count(n)),
    }
}

/// Uniform grid axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub pr_min: f64,
    pub pr_max: f64,
    pub df_min: f64,
    pub df_max: f64,
    /// Points per axis.
    pub l: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { pr_min: 1.0, pr_max: 40.0, df_min: 0.0, df_max: 1.0, l: 98 }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::invalid("l", format!("need at least 2 points per axis, got {}", self.l)));
        }
        if !(self.pr_min > 0.0 && self.pr_max > self.pr_min) {
            return Err(Error::invalid("pr_min", format!("bad rate range [{}, {}]", self.pr_min, self.pr_max)));
        }
        if !(0.0 <= self.df_min && self.df_min < self.df_max && self.df_max <= 1.0) {
            return Err(Error::invalid("df_min", format!("bad df range [{}, {}]", self.df_min, self.df_max)));
        }
        Ok(())
    }

    pub fn axes(&self) -> Axes {
        Axes { pr: linspace(self.pr_min, self.pr_max, self.l), df: linspace(self.df_min, self.df_max, self.l) }
    }
}

/// Explicit axis coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axes {
    pub pr: Vec<f64>,
    pub df: Vec<f64>,
}

impl Axes {
    /// Keeps only the rate columns inside `[lo, hi]`.
    pub fn restrict_pr(mut self, lo: f64, hi: f64) -> Self {
        self.pr.retain(|&pr| pr >= lo && pr <= hi);
        self
    }
}

/// Simulation settings for each cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub solver: SolverOptions,
    pub settle: SettleOptions,
    /// Constant initial history.
    pub history: NetState,
    pub ap_h_ratio: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            solver: SolverOptions::default(),
            settle: SettleOptions::default(),
            history: NetState::new(1.0, 0.0, 1.0, 0.0),
            ap_h_ratio: 0.9,
        }
    }
}

/// One grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub pr_hz: f64,
    pub df: f64,
    pub n_a: Option<u32>,
    pub n_b: Option<u32>,
    pub n: Option<u32>,
    pub label: PerceptLabel,
    pub residual: Option<f64>,
}

/// Sweep results, row-major with the rate varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Axes,
    pub cells: Vec<Cell>,
}

impl SweepGrid {
    pub fn cell(&self, i_pr: usize, i_df: usize) -> &Cell {
        &self.cells[i_df * self.axes.pr.len() + i_pr]
    }
}

/// Simulates one cell.
pub fn run_cell(p: &ModelParams, base: &Stimulus, pr: f64, df: f64, opts: &SimOptions) -> Cell {
    let failed = |reason| Cell { pr_hz: pr, df, n_a: None, n_b: None, n: None, label: PerceptLabel::Failed(reason), residual: None };
    let stim = base.with_pr(pr).with_df(df);
    let d = match df_to_d(stim.c, df, stim.m) {
        Ok(d) => d,
        Err(_) => return failed(FailReason::Error),
    };
    let settled = match settle(p, &stim, d, History::Constant(opts.history), &opts.solver, &opts.settle) {
        Ok(s) => s,
        Err(Error::Diverged { .. }) => return failed(FailReason::Diverged),
        Err(_) => return failed(FailReason::Error),
    };
    let window = settled.last_period();
    let counts = detect_crossings(&settled.traj, p.theta, window);
    let stats = settled.traj.activity_stats(window.0, window.1);
    let (Ok(counts), Ok(stats)) = (counts, stats) else {
        return failed(FailReason::Error);
    };
    let label = percept_from_crossings(counts.n_a, counts.n_b, stats.mean_u, (stats.min_ua, stats.min_ub), p.theta, opts.ap_h_ratio);
    Cell {
        pr_hz: pr,
        df,
        n_a: Some(counts.n_a),
        n_b: Some(counts.n_b),
        n: Some(counts.n()),
        label,
        residual: Some(settled.residual),
    }
}

/// Thread count from the environment, `None` meaning all cores.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?;
            Ok((n > 0).then_some(n))
        }
    }
}

/// Runs every cell. Cells are independent, so the result does not depend on
/// the thread count. `threads = None` uses all cores.
pub fn run_sweep(p: &ModelParams, base: &Stimulus, axes: &Axes, opts: &SimOptions, threads: Option<usize>) -> Result<SweepGrid> {
    p.validate()?;
    base.validate()?;
    if axes.pr.is_empty() || axes.df.is_empty() {
        return Err(Error::invalid("l", "grid has no cells"));
    }
    for &pr in &axes.pr {
        base.with_pr(pr).validate()?;
    }
    let jobs: Vec<(f64, f64)> = axes.df.iter().flat_map(|&df| axes.pr.iter().map(move |&pr| (pr, df))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells = pool.install(|| jobs.par_iter().map(|&(pr, df)| run_cell(p, base, pr, df, opts)).collect());
    Ok(SweepGrid { axes: axes.clone(), cells })
}

/// CSV with a leading `# config: <json>` line and one row per cell.
pub fn emit_csv(grid: &SweepGrid, config: &serde_json::Value) -> Result<String> {
    let mut out = format!("# config: {}\n", serde_json::to_string(config)?);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for c in &grid.cells {
        w.serialize(c)?;
    }
    if grid.cells.is_empty() {
        w.write_record(["pr_hz", "df", "n_a", "n_b", "n", "label", "residual"])?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    Ok(out)
}

/// Parses the output of [`emit_csv`] back into cells.
pub fn parse_csv(text: &str) -> Result<Vec<Cell>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.deserialize().map(|c| c.map_err(Error::from)).collect()
}
