//! Command-line front end: JSON config files with flat flag overrides, and
//! one handler per subcommand.
//!
//! Every artifact embeds the fully resolved configuration, so a run can be
//! reproduced from its outputs alone.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundaries::{sample_boundaries, FissionVariant};
use crate::classifier::{classify, conjugacy_classes, enumerate_valid_matrices, EnumKind, RegimeChoice};
use crate::error::{Error, Result};
use crate::fast_subsystem::{basin_label, separatrix, BasinLabel};
use crate::integrator::{
    check_dt, check_periodicity, crossing_events, detect_crossings, integrate, History, SettleOptions, SolverOptions,
};
use crate::model::{Gain, ModelParams, NetState};
use crate::stimulus::{df_to_d, InputKind, Stimulus};
use crate::svg::{self, BasinSample};
use crate::sweep::{self, percept_from_crossings, GridSpec, SimOptions};

/// Workflow to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Integrate one parameter point; writes trajectory.csv and events.json.
    Simulate,
    /// Classify the periodic states at one point; prints JSON.
    Classify,
    /// Simulate a (PR, df) grid; writes sweep.csv, sweep.svg and manifest.json.
    Sweep,
    /// Sample the closed-form percept boundaries; writes boundaries.csv and boundaries.svg.
    Boundaries,
    /// Label fast-subsystem basins around a saddle; writes basin.csv and basin.svg.
    Basin,
    /// Enumerate admissible state matrices and conjugacy classes; prints JSON.
    Enumerate,
}

/// Gain nonlinearity selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainKind {
    Sigmoid,
    Heaviside,
}

/// Input waveform selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputShape {
    Smooth,
    Square,
}

/// Parses a flag value with the same spelling as the config file.
fn parse_serde<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Run configuration. Every key is optional in the file and as a flag; flags
/// win over the file, and unset keys take the listed defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    pub command: Option<Command>,
    /// Mutual excitation a [default: 2]
    #[arg(long, global = true)]
    pub a: Option<f64>,
    /// Inhibition strength b [default: 2.8]
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// On-frequency input c [default: 5.5]
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Off-frequency input d; overrides the value derived from df (not used by sweep)
    #[arg(long = "d", global = true)]
    pub d: Option<f64>,
    /// Threshold θ [default: 0.5]
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Fast time constant τ in s [default: 0.025]
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Inhibitory decay τ_i in s [default: 0.25]
    #[arg(long, global = true)]
    pub tau_i: Option<f64>,
    /// Inhibitory delay D in s (config key "D") [default: 0.015]
    #[arg(long = "delay", visible_alias = "D", global = true)]
    #[serde(rename = "D")]
    pub delay: Option<f64>,
    /// Exponent of the df -> d map [default: 6]
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// Tone duration TD in s [default: 0.022]
    #[arg(long, global = true)]
    pub td: Option<f64>,
    /// Presentation rate in Hz, TR = 1/pr [default: 10]
    #[arg(long, global = true)]
    pub pr: Option<f64>,
    /// Normalised frequency difference in [0, 1] [default: 0]
    #[arg(long, global = true)]
    pub df: Option<f64>,
    /// Sigmoid slope λ, also used for the smooth input [default: 30]
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Gain: sigmoid or heaviside [default: sigmoid]
    #[arg(long, global = true, value_parser = parse_serde::<GainKind>)]
    pub gain: Option<GainKind>,
    /// Input waveform: smooth or square [default: smooth]
    #[arg(long, global = true, value_parser = parse_serde::<InputShape>)]
    pub input: Option<InputShape>,
    /// RK4 step in s [default: min(τ, D, TD)/20]
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Transient length in stimulus periods, doubled once if not converged [default: 30]
    #[arg(long, global = true)]
    pub transient_periods: Option<u32>,
    /// Periodicity residual that triggers the longer transient [default: 1e-3]
    #[arg(long, global = true)]
    pub residual_tol: Option<f64>,
    /// Simulation end time in s [default: 20 stimulus periods]
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    /// Constant initial history u_A,u_B,s_A,s_B [default: 1,0,1,0]
    #[arg(long, global = true, value_delimiter = ',')]
    pub history: Option<Vec<f64>>,
    /// Grid points per axis [default: 98]
    #[arg(long, global = true)]
    pub l: Option<usize>,
    /// Lowest presentation rate of the grid in Hz [default: 1]
    #[arg(long, global = true)]
    pub pr_min: Option<f64>,
    /// Highest presentation rate of the grid in Hz [default: 40]
    #[arg(long, global = true)]
    pub pr_max: Option<f64>,
    /// Lowest df of the grid [default: 0]
    #[arg(long, global = true)]
    pub df_min: Option<f64>,
    /// Highest df of the grid [default: 1]
    #[arg(long, global = true)]
    pub df_max: Option<f64>,
    /// Output directory [default: .]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Table set for classify: auto, short or long [default: auto]
    #[arg(long, global = true, value_parser = parse_serde::<RegimeChoice>)]
    pub regime: Option<RegimeChoice>,
    /// Matrix family for enumerate: sm, sc or lm [default: all three]
    #[arg(long, global = true, value_parser = parse_serde::<EnumKind>)]
    pub kind: Option<EnumKind>,
    /// Saddle u_A coordinate for basin [default: 0.7]
    #[arg(long, global = true)]
    pub s1: Option<f64>,
    /// Saddle u_B coordinate for basin [default: 0.4]
    #[arg(long, global = true)]
    pub s2: Option<f64>,
    /// Basin samples per axis [default: 101]
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Minimum of both units, relative to θ, above which two crossings count as AP_H [default: 0.9]
    #[arg(long, global = true)]
    pub ap_h_ratio: Option<f64>,
    /// Worker threads for sweep, 0 = all cores [default: $STREAMWAVE_THREADS or all]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Fission curve decay time: tone (2TR-TD) or delay (2TR-D) [default: tone]
    #[arg(long, global = true, value_parser = parse_serde::<FissionVariant>)]
    pub fission_variant: Option<FissionVariant>,
    /// Samples per boundary curve [default: 200]
    #[arg(long, global = true)]
    pub n: Option<usize>,
}

/// Top-level arguments.
#[derive(Debug, Parser)]
#[command(name = "streamwave", version, about = "Periodic states and percept maps of a delayed-inhibition two-unit network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: RunConfig,
}

/// Merges a config file (if any), flag overrides and an explicit command.
pub fn parse_config(file_text: Option<&str>, overrides: &RunConfig, command: Option<Command>) -> Result<RunConfig> {
    let mut merged = match file_text {
        Some(text) => match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(map)) => map,
            Ok(_) => return Err(Error::Config("config must be a JSON object".into())),
            Err(e) => return Err(Error::Config(format!("malformed config: {e}"))),
        },
        None => serde_json::Map::new(),
    };
    if let Value::Object(flags) = serde_json::to_value(overrides)? {
        merged.extend(flags.into_iter().filter(|(_, v)| !v.is_null()));
    }
    if let Some(c) = command {
        merged.insert("command".into(), serde_json::to_value(c)?);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Error::Config(format!("config: {e}")))
}

/// Configuration with every default filled in and every value checked.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub command: Command,
    pub model: ModelParams,
    pub stimulus: Stimulus,
    /// Off-frequency input at the configured df (or the explicit override).
    pub d: f64,
    pub sim: SimOptions,
    pub t_end: f64,
    pub grid: GridSpec,
    pub out: PathBuf,
    pub regime: RegimeChoice,
    pub kind: Option<EnumKind>,
    pub s1: f64,
    pub s2: f64,
    pub resolution: usize,
    pub threads: Option<usize>,
    pub fission_variant: FissionVariant,
    pub n: usize,
}

fn positive(field: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(field, format!("must be positive, got {v}")))
    }
}

/// Fills defaults and validates every field.
pub fn resolve(cfg: &RunConfig) -> Result<Resolved> {
    let command = cfg.command.ok_or_else(|| Error::Config("no command given".into()))?;
    let lambda = cfg.lambda.unwrap_or(30.0);
    let gain = match cfg.gain.unwrap_or(GainKind::Sigmoid) {
        GainKind::Sigmoid => Gain::Sigmoid { lambda },
        GainKind::Heaviside => Gain::Heaviside,
    };
    let model = ModelParams {
        a: cfg.a.unwrap_or(2.0),
        b: cfg.b.unwrap_or(2.8),
        theta: cfg.theta.unwrap_or(0.5),
        tau: cfg.tau.unwrap_or(0.025),
        tau_i: cfg.tau_i.unwrap_or(0.25),
        delay: cfg.delay.unwrap_or(0.015),
        gain,
    };
    model.validate()?;
    positive("lambda", lambda)?;
    let pr = positive("pr", cfg.pr.unwrap_or(10.0))?;
    let stimulus = Stimulus {
        td: cfg.td.unwrap_or(0.022),
        tr: 1.0 / pr,
        c: cfg.c.unwrap_or(5.5),
        df: cfg.df.unwrap_or(0.0),
        m: cfg.m.unwrap_or(6),
    };
    stimulus.validate()?;
    let d = match cfg.d {
        Some(d) if d.is_finite() && d >= 0.0 => d,
        Some(d) => return Err(Error::invalid("d", format!("must be non-negative, got {d}"))),
        None => df_to_d(stimulus.c, stimulus.df, stimulus.m)?,
    };
    let input = match cfg.input.unwrap_or(InputShape::Smooth) {
        InputShape::Smooth => InputKind::Smooth { lambda },
        InputShape::Square => InputKind::Square,
    };
    if let Some(dt) = cfg.dt {
        check_dt(dt, &model, &stimulus)?;
    }
    let settle = SettleOptions {
        transient_periods: cfg.transient_periods.unwrap_or(30),
        residual_tol: positive("residual_tol", cfg.residual_tol.unwrap_or(1e-3))?,
    };
    if settle.transient_periods == 0 {
        return Err(Error::invalid("transient_periods", "must be at least 1"));
    }
    let history = cfg.history.clone().unwrap_or_else(|| vec![1.0, 0.0, 1.0, 0.0]);
    let history: [f64; 4] = history
        .try_into()
        .map_err(|h: Vec<f64>| Error::invalid("history", format!("needs 4 values, got {}", h.len())))?;
    if !history.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("history", "values must be finite"));
    }
    let ap_h_ratio = cfg.ap_h_ratio.unwrap_or(0.9);
    if !(ap_h_ratio > 0.0 && ap_h_ratio <= 1.0) {
        return Err(Error::invalid("ap_h_ratio", format!("must lie in (0, 1], got {ap_h_ratio}")));
    }
    let sim = SimOptions {
        solver: SolverOptions { dt: cfg.dt, input },
        settle,
        history: NetState::from_array(history),
        ap_h_ratio,
    };
    let t_end = cfg.t_end.unwrap_or(20.0 * stimulus.period());
    if !(t_end.is_finite() && t_end >= stimulus.period()) {
        return Err(Error::invalid("t_end", format!("must cover one period {} s, got {t_end}", stimulus.period())));
    }
    let grid = GridSpec {
        pr_min: cfg.pr_min.unwrap_or(1.0),
        pr_max: cfg.pr_max.unwrap_or(40.0),
        df_min: cfg.df_min.unwrap_or(0.0),
        df_max: cfg.df_max.unwrap_or(1.0),
        l: cfg.l.unwrap_or(98),
    };
    grid.validate()?;
    let s1 = cfg.s1.unwrap_or(0.7);
    let s2 = cfg.s2.unwrap_or(0.4);
    for (field, v) in [("s1", s1), ("s2", s2)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::invalid(field, format!("must lie in (0, 1], got {v}")));
        }
    }
    let resolution = cfg.resolution.unwrap_or(101);
    if resolution < 2 {
        return Err(Error::invalid("resolution", format!("need at least 2, got {resolution}")));
    }
    let n = cfg.n.unwrap_or(200);
    if n < 2 {
        return Err(Error::invalid("n", format!("need at least 2, got {n}")));
    }
    let threads = match cfg.threads {
        Some(t) => (t > 0).then_some(t),
        None => sweep::threads_from_env()?,
    };
    Ok(Resolved {
        command,
        model,
        stimulus,
        d,
        sim,
        t_end,
        grid,
        out: cfg.out.clone().unwrap_or_else(|| PathBuf::from(".")),
        regime: cfg.regime.unwrap_or(RegimeChoice::Auto),
        kind: cfg.kind,
        s1,
        s2,
        resolution,
        threads,
        fission_variant: cfg.fission_variant.unwrap_or_default(),
        n,
    })
}

/// Creates the output directory and checks that it accepts files.
fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    tempfile::NamedTempFile::new_in(dir)?;
    Ok(())
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
    Ok(path)
}

fn csv_text<T: Serialize>(config: &Value, rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(format!(
        "# config: {}\n{}",
        serde_json::to_string(config)?,
        String::from_utf8(body).expect("csv output is UTF-8")
    ))
}

fn simulate(r: &Resolved, config: &Value) -> Result<Vec<PathBuf>> {
    prepare_out(&r.out)?;
    let traj = integrate(&r.model, &r.stimulus, r.d, History::Constant(r.sim.history), r.t_end, &r.sim.solver)?;
    #[derive(Serialize)]
    struct Row {
        t: f64,
        ua: f64,
        ub: f64,
        sa: f64,
        sb: f64,
    }
    let rows = traj.knots.iter().map(|k| Row { t: k.t, ua: k.y.ua, ub: k.y.ub, sa: k.y.sa, sb: k.y.sb });
    let trajectory = csv_text(config, rows)?;
    let (t0, t1) = traj.span();
    let period = r.stimulus.period();
    let window = (t1 - period, t1);
    let counts = detect_crossings(&traj, r.model.theta, window)?;
    let stats = traj.activity_stats(window.0, window.1)?;
    let label = percept_from_crossings(
        counts.n_a,
        counts.n_b,
        stats.mean_u,
        (stats.min_ua, stats.min_ub),
        r.model.theta,
        r.sim.ap_h_ratio,
    );
    let residual = (t1 - t0 >= 2.0 * period).then(|| check_periodicity(&traj, period)).transpose()?;
    let events = json!({
        "config": config,
        "crossings": crossing_events(&traj, r.model.theta, (t0, t1), true)?,
        "final_period": {
            "window": [window.0, window.1],
            "n_a": counts.n_a,
            "n_b": counts.n_b,
            "n": counts.n(),
            "label": label,
            "mean_u": stats.mean_u,
        },
        "periodicity_residual": residual,
        "bound_violation": traj.bound_violation(),
    });
    Ok(vec![
        write_atomic(&r.out, "trajectory.csv", &trajectory)?,
        write_atomic(&r.out, "events.json", &serde_json::to_string_pretty(&events)?)?,
    ])
}

fn run_sweep(r: &Resolved, config: &Value) -> Result<Vec<PathBuf>> {
    prepare_out(&r.out)?;
    let start = Instant::now();
    let grid = sweep::run_sweep(&r.model, &r.stimulus, &r.grid.axes(), &r.sim, r.threads)?;
    let wall = start.elapsed().as_secs_f64();
    let curves = sample_boundaries(
        &r.model,
        &r.stimulus,
        (r.grid.pr_min, r.grid.pr_max),
        r.n,
        r.fission_variant,
    )?;
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    for c in &grid.cells {
        *counts.entry(c.label.to_string()).or_default() += 1;
    }
    let manifest = json!({
        "config": config,
        "cells": grid.cells.len(),
        "label_counts": counts,
        "wall_time_s": wall,
        "determinism": "cells are simulated independently with a fixed-step solver and no randomness; results do not depend on thread count or scheduling",
    });
    Ok(vec![
        write_atomic(&r.out, "sweep.csv", &sweep::emit_csv(&grid, config)?)?,
        write_atomic(&r.out, "sweep.svg", &svg::heatmap(&grid, &curves, config)?)?,
        write_atomic(&r.out, "manifest.json", &serde_json::to_string_pretty(&manifest)?)?,
    ])
}

fn boundaries(r: &Resolved, config: &Value) -> Result<Vec<PathBuf>> {
    prepare_out(&r.out)?;
    let curves = sample_boundaries(
        &r.model,
        &r.stimulus,
        (r.grid.pr_min, r.grid.pr_max),
        r.n,
        r.fission_variant,
    )?;
    #[derive(Serialize)]
    struct Row {
        pr_hz: f64,
        kind: &'static str,
        df: f64,
        raw: Option<f64>,
        below_axis: bool,
        clamped: bool,
    }
    let rows = curves.iter().flat_map(|c| {
        let kind = match c.kind {
            crate::boundaries::BoundaryKind::Coherence => "coherence",
            crate::boundaries::BoundaryKind::Fission => "fission",
        };
        c.points.iter().map(move |p| Row {
            pr_hz: p.pr,
            kind,
            df: p.df,
            raw: (!p.raw.is_nan()).then_some(p.raw),
            below_axis: p.below_axis,
            clamped: p.clamped,
        })
    });
    let text = csv_text(config, rows)?;
    Ok(vec![
        write_atomic(&r.out, "boundaries.csv", &text)?,
        write_atomic(&r.out, "boundaries.svg", &svg::boundary_plot(&curves, config)?)?,
    ])
}

fn basin(r: &Resolved, config: &Value) -> Result<Vec<PathBuf>> {
    prepare_out(&r.out)?;
    let k = r.resolution;
    let mut samples = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..k {
            let (ua, ub) = (i as f64 / (k - 1) as f64, j as f64 / (k - 1) as f64);
            samples.push(BasinSample { ua, ub, label: basin_label(r.s1, r.s2, (ua, ub))? });
        }
    }
    let curve: Vec<(f64, f64)> = (0..=200)
        .map(|i| i as f64 / 200.0)
        .filter_map(|ua| separatrix(r.s1, r.s2, ua).ok().map(|ub| (ua, ub)))
        .collect();
    #[derive(Serialize)]
    struct Row {
        ua: f64,
        ub: f64,
        label: BasinLabel,
    }
    let text = csv_text(config, samples.iter().map(|s| Row { ua: s.ua, ub: s.ub, label: s.label }))?;
    Ok(vec![
        write_atomic(&r.out, "basin.csv", &text)?,
        write_atomic(&r.out, "basin.svg", &svg::phase_portrait(&samples, &curve, Some((r.s1, r.s2)), config)?)?,
    ])
}

fn enumerate(r: &Resolved, config: &Value) -> Result<Value> {
    let kinds = match r.kind {
        Some(k) => vec![k],
        None => vec![EnumKind::Sm, EnumKind::Sc, EnumKind::Lm],
    };
    let families: Vec<Value> = kinds
        .into_iter()
        .map(|kind| {
            let mats = enumerate_valid_matrices(kind);
            let classes: Vec<Vec<String>> = conjugacy_classes(&mats)
                .iter()
                .map(|c| c.iter().map(ToString::to_string).collect())
                .collect();
            json!({
                "kind": kind,
                "matrices": mats.len(),
                "classes": classes.len(),
                "members": classes,
            })
        })
        .collect();
    Ok(json!({ "config": config, "families": families }))
}

/// Runs a resolved configuration.
pub fn dispatch(r: &Resolved) -> Result<()> {
    let config = serde_json::to_value(r)?;
    let written = match r.command {
        Command::Classify => {
            let cls = classify(&r.model, &r.stimulus, r.d, r.regime)?;
            let out = json!({ "config": config, "classification": cls });
            println!("{}", serde_json::to_string_pretty(&out)?);
            return Ok(());
        }
        Command::Enumerate => {
            println!("{}", serde_json::to_string_pretty(&enumerate(r, &config)?)?);
            return Ok(());
        }
        Command::Simulate => simulate(r, &config)?,
        Command::Sweep => run_sweep(r, &config)?,
        Command::Boundaries => boundaries(r, &config)?,
        Command::Basin => basin(r, &config)?,
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let cfg = parse_config(text.as_deref(), &cli.overrides, cli.command)?;
    dispatch(&resolve(&cfg)?)
}

/// Binary entry point. Exit code 0 on success, 2 on configuration errors,
/// 1 on numerical or I/O failures.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}
