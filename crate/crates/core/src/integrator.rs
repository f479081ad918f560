//! Fixed-step RK4 integration of the delay system by the method of steps.
//!
//! Steps are aligned so that every tone edge (`kTR` and `kTR + TD`) is a knot,
//! so the square-wave discontinuities never fall inside a step. Delayed reads
//! of `s(t - D)` use cubic Hermite interpolation over stored knots (state plus
//! one-sided derivatives).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs, Gain, ModelParams, NetState};
use crate::stimulus::{InputKind, Stimulus};

/// Sigmoid slope used when a Heaviside gain is requested for time stepping.
pub const HEAVISIDE_PROXY_SLOPE: f64 = 1e3;

/// Tolerance on `|u - theta|` for refined crossing times.
pub const CROSSING_TOL: f64 = 1e-9;

/// A stored solution point with left and right time derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub t: f64,
    pub y: NetState,
    pub dy_left: NetState,
    pub dy_right: NetState,
}

/// Cubic Hermite interpolation between two knots.
#[inline]
fn hermite(k0: &Knot, k1: &Knot, t: f64) -> NetState {
    let h = k1.t - k0.t;
    if h <= 0.0 {
        return k1.y;
    }
    let s = (t - k0.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * k0.y + (h10 * h) * k0.dy_right + h01 * k1.y + (h11 * h) * k1.dy_left
}

#[inline]
fn hermite_s(k0: &Knot, k1: &Knot, t: f64) -> (f64, f64) {
    let h = k1.t - k0.t;
    if h <= 0.0 {
        return (k1.y.sa, k1.y.sb);
    }
    let s = (t - k0.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = (s3 - 2.0 * s2 + s) * h;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = (s3 - s2) * h;
    (
        h00 * k0.y.sa + h10 * k0.dy_right.sa + h01 * k1.y.sa + h11 * k1.dy_left.sa,
        h00 * k0.y.sb + h10 * k0.dy_right.sb + h01 * k1.y.sb + h11 * k1.dy_left.sb,
    )
}

/// Index `i` with `knots[i].t <= t < knots[i + 1].t`, clamped to valid brackets.
fn bracket(knots: &[Knot], t: f64) -> usize {
    let idx = knots.partition_point(|k| k.t <= t);
    idx.clamp(1, knots.len() - 1) - 1
}

/// Initial history on `[-D, 0]`.
#[derive(Clone, Debug, PartialEq)]
pub enum History {
    /// The same state at every history time.
    Constant(NetState),
    /// Dense history given by knots ending at `t = 0`.
    Knots(Vec<Knot>),
}

impl History {
    /// Builds a history from a recorded trajectory around the knot nearest to
    /// `t0`, shifted so that `t0` maps to zero, optionally with A and B swapped.
    pub fn from_trajectory(traj: &Trajectory, t0: f64, delay: f64, swap: bool) -> Result<Self> {
        let (lo, hi) = traj.span();
        if t0 - delay < lo || t0 > hi {
            return Err(Error::Domain(format!(
                "history window [{}, {}] outside recorded span [{lo}, {hi}]",
                t0 - delay,
                t0
            )));
        }
        let end = traj.knots.partition_point(|k| k.t <= t0 + 1e-9 * traj.dt);
        let anchor = traj.knots[end - 1].t;
        if (anchor - t0).abs() > 1e-6 * traj.dt {
            return Err(Error::Domain(format!("t0 = {t0} is not a knot time")));
        }
        let start = traj.knots.partition_point(|k| k.t < anchor - delay).saturating_sub(1);
        let tf = |s: NetState| if swap { s.swapped() } else { s };
        let knots = traj.knots[start..end]
            .iter()
            .map(|k| Knot {
                t: k.t - anchor,
                y: tf(k.y),
                dy_left: tf(k.dy_left),
                dy_right: tf(k.dy_right),
            })
            .collect();
        Ok(History::Knots(knots))
    }

    fn eval(&self, t: f64) -> NetState {
        match self {
            History::Constant(s) => *s,
            History::Knots(k) => {
                if k.len() == 1 || t <= k[0].t {
                    return k[0].y;
                }
                if t >= k[k.len() - 1].t {
                    return k[k.len() - 1].y;
                }
                let i = bracket(k, t);
                hermite(&k[i], &k[i + 1], t)
            }
        }
    }

    fn initial_derivative(&self) -> NetState {
        match self {
            History::Constant(_) => NetState::default(),
            History::Knots(k) => k[k.len() - 1].dy_left,
        }
    }
}

/// Solver options.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Maximum step; `None` selects `min(tau, D, TD) / 20`.
    pub dt: Option<f64>,
    pub input: InputKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            dt: None,
            input: InputKind::Smooth { lambda: 30.0 },
        }
    }
}

/// Default step `min(tau, D, TD) / 20` over the positive entries.
pub fn default_dt(p: &ModelParams, stim: &Stimulus) -> f64 {
    [p.tau, p.delay, stim.td]
        .into_iter()
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min)
        / 20.0
}

/// Checks `dt <= min(tau/10, D/4, TD/4)` over the positive entries.
pub fn check_dt(dt: f64, p: &ModelParams, stim: &Stimulus) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let limits = [("tau/10", p.tau / 10.0), ("D/4", p.delay / 4.0), ("TD/4", stim.td / 4.0)];
    for (name, lim) in limits {
        if lim > 0.0 && dt > lim * (1.0 + 1e-12) {
            return Err(Error::Config(format!("dt = {dt} exceeds {name} = {lim}")));
        }
    }
    Ok(())
}

/// Resumable integrator.
pub struct Integrator {
    p: ModelParams,
    stim: Stimulus,
    d: f64,
    input: InputKind,
    dt: f64,
    history: History,
    buf: VecDeque<Knot>,
    cursor: usize,
    t: f64,
    y: NetState,
    record_from: f64,
    recorded: Vec<Knot>,
}

impl Integrator {
    pub fn new(p: &ModelParams, stim: &Stimulus, d: f64, history: History, opts: &SolverOptions) -> Result<Self> {
        p.validate()?;
        stim.validate()?;
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::invalid("d", format!("must be non-negative, got {d}")));
        }
        if let History::Knots(k) = &history {
            if k.is_empty() {
                return Err(Error::Config("history has no knots".into()));
            }
        }
        let dt = opts.dt.unwrap_or_else(|| default_dt(p, stim));
        check_dt(dt, p, stim)?;
        let mut params = *p;
        if params.gain == Gain::Heaviside {
            params.gain = Gain::Sigmoid { lambda: HEAVISIDE_PROXY_SLOPE };
        }
        let y0 = history.eval(0.0);
        let mut it = Integrator {
            p: params,
            stim: *stim,
            d,
            input: opts.input,
            dt,
            history,
            buf: VecDeque::new(),
            cursor: 0,
            t: 0.0,
            y: y0,
            record_from: 0.0,
            recorded: Vec::new(),
        };
        let dy_left = it.history.initial_derivative();
        it.buf.push_back(Knot { t: 0.0, y: y0, dy_left, dy_right: dy_left });
        Ok(it)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> NetState {
        self.y
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Delayed synaptic gates `(s_A(t - D), s_B(t - D))`.
    #[inline]
    fn delayed(&mut self, t: f64, y: &NetState) -> (f64, f64) {
        if self.p.delay == 0.0 {
            return (y.sa, y.sb);
        }
        let tq = t - self.p.delay;
        if tq <= 0.0 {
            let s = self.history.eval(tq);
            return (s.sa, s.sb);
        }
        let n = self.buf.len();
        if n == 1 {
            return (self.buf[0].y.sa, self.buf[0].y.sb);
        }
        let mut i = self.cursor.min(n - 2);
        while i > 0 && self.buf[i].t > tq {
            i -= 1;
        }
        while i + 2 < n && self.buf[i + 1].t <= tq {
            i += 1;
        }
        self.cursor = i;
        hermite_s(&self.buf[i], &self.buf[i + 1], tq)
    }

    #[inline]
    fn f(&mut self, t: f64, y: &NetState, input: Option<(f64, f64)>) -> NetState {
        let inp = input.unwrap_or_else(|| self.input.eval(&self.stim, self.d, t));
        let del = self.delayed(t, y);
        rhs(y, del, inp, &self.p)
    }

    /// Next tone edge strictly after `t`.
    fn next_edge(&self, t: f64) -> f64 {
        let tr = self.stim.tr;
        let td = self.stim.td;
        let eps = 1e-6 * self.dt;
        let j = (t / tr).floor();
        let mut best = f64::INFINITY;
        for k in 0..3 {
            let base = (j + f64::from(k)) * tr;
            for cand in [base, base + td] {
                if cand > t + eps && cand < best {
                    best = cand;
                }
            }
        }
        best
    }

    fn push_knot(&mut self, k: Knot) {
        if k.t >= self.record_from {
            if self.recorded.is_empty() {
                if let Some(prev) = self.buf.back() {
                    if prev.t < k.t {
                        self.recorded.push(*prev);
                    }
                }
            }
            self.recorded.push(k);
        }
        self.buf.push_back(k);
        let horizon = k.t - self.p.delay;
        while self.buf.len() >= 3 && self.buf[1].t <= horizon {
            self.buf.pop_front();
            self.cursor = self.cursor.saturating_sub(1);
        }
    }

    fn set_last_right_derivative(&mut self, dy: NetState) {
        if let Some(k) = self.buf.back_mut() {
            k.dy_right = dy;
            if let Some(r) = self.recorded.last_mut() {
                if r.t == k.t {
                    r.dy_right = dy;
                }
            }
        }
    }

    /// Integrates up to `t_end`, keeping knots with `t >= record_from`
    /// (plus the knot just before it).
    pub fn advance_to(&mut self, t_end: f64, record_from: f64) -> Result<()> {
        if record_from > self.record_from || self.recorded.is_empty() {
            self.record_from = record_from;
            let keep_from = self.recorded.partition_point(|k| k.t <= record_from).saturating_sub(1);
            self.recorded.drain(..keep_from);
            if self.recorded.is_empty() && self.t >= record_from {
                if let Some(k) = self.buf.back() {
                    self.recorded.push(*k);
                }
            }
        }
        let eps = 1e-9 * self.dt;
        let square = matches!(self.input, InputKind::Square);
        while self.t < t_end - eps {
            let edge = self.next_edge(self.t).min(t_end);
            let span = edge - self.t;
            let n = ((span / self.dt) - 1e-9).ceil().max(1.0) as u64;
            let h = span / n as f64;
            let seg_input = if square {
                Some(self.input.eval(&self.stim, self.d, self.t + 0.5 * span))
            } else {
                None
            };
            let t_start = self.t;
            let y_start = self.y;
            let mut k1 = self.f(t_start, &y_start, seg_input);
            self.set_last_right_derivative(k1);
            for i in 0..n {
                let t0 = self.t;
                let y0 = self.y;
                let half = 0.5 * h;
                let k2 = self.f(t0 + half, &(y0 + half * k1), seg_input);
                let k3 = self.f(t0 + half, &(y0 + half * k2), seg_input);
                let k4 = self.f(t0 + h, &(y0 + h * k3), seg_input);
                let y1 = y0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                let t1 = if i + 1 == n { edge } else { t_start + (i + 1) as f64 * h };
                if !y1.is_finite() {
                    return Err(Error::Diverged { t: t1 });
                }
                let f1 = self.f(t1, &y1, seg_input);
                self.t = t1;
                self.y = y1;
                self.push_knot(Knot { t: t1, y: y1, dy_left: f1, dy_right: f1 });
                k1 = f1;
            }
        }
        Ok(())
    }

    /// Snapshot of the recorded part of the solution.
    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            knots: self.recorded.clone(),
            dt: self.dt,
            period: self.stim.period(),
            gain: self.p.gain,
            input: self.input,
        }
    }

    pub fn into_trajectory(self) -> Trajectory {
        Trajectory {
            knots: self.recorded,
            dt: self.dt,
            period: self.stim.period(),
            gain: self.p.gain,
            input: self.input,
        }
    }
}

/// Dense solution over a recorded window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub knots: Vec<Knot>,
    /// Nominal step size.
    pub dt: f64,
    /// Stimulus period `2TR`.
    pub period: f64,
    /// Gain actually used for stepping.
    pub gain: Gain,
    pub input: InputKind,
}

impl Trajectory {
    pub fn span(&self) -> (f64, f64) {
        match (self.knots.first(), self.knots.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => (f64::NAN, f64::NAN),
        }
    }

    /// Interpolated state at `t`.
    pub fn state_at(&self, t: f64) -> Result<NetState> {
        let (lo, hi) = self.span();
        let slack = 1e-9 * self.dt;
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::Domain(format!("t = {t} outside trajectory span [{lo}, {hi}]")));
        }
        if self.knots.len() == 1 {
            return Ok(self.knots[0].y);
        }
        let i = bracket(&self.knots, t);
        Ok(hermite(&self.knots[i], &self.knots[i + 1], t))
    }

    /// Largest excursion of any component outside `[0, 1]`.
    pub fn bound_violation(&self) -> f64 {
        self.knots
            .iter()
            .flat_map(|k| k.y.to_array())
            .map(|v| (-v).max(v - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }

    fn window_check(&self, t0: f64, t1: f64) -> Result<()> {
        let (lo, hi) = self.span();
        let slack = 1e-9 * self.dt.max(1e-12);
        if !(t0 < t1 && t0 >= lo - slack && t1 <= hi + slack) {
            return Err(Error::Domain(format!(
                "window [{t0}, {t1}] outside trajectory span [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Knot times inside `[t0, t1]` plus both window ends.
    fn window_times(&self, t0: f64, t1: f64) -> Vec<f64> {
        let a = self.knots.partition_point(|k| k.t <= t0);
        let b = self.knots.partition_point(|k| k.t < t1);
        let mut ts = Vec::with_capacity(b.saturating_sub(a) + 2);
        ts.push(t0);
        ts.extend(self.knots[a..b].iter().map(|k| k.t));
        ts.push(t1);
        ts
    }

    /// Mean and per-unit minima of `u` over a window.
    pub fn activity_stats(&self, t0: f64, t1: f64) -> Result<ActivityStats> {
        self.window_check(t0, t1)?;
        let ts = self.window_times(t0, t1);
        let mut area = 0.0;
        let mut min_a = f64::INFINITY;
        let mut min_b = f64::INFINITY;
        let mut prev: Option<(f64, NetState)> = None;
        for &t in &ts {
            let s = self.state_at(t)?;
            min_a = min_a.min(s.ua);
            min_b = min_b.min(s.ub);
            if let Some((tp, sp)) = prev {
                area += 0.5 * (t - tp) * (0.5 * (sp.ua + sp.ub) + 0.5 * (s.ua + s.ub));
            }
            prev = Some((t, s));
        }
        Ok(ActivityStats {
            mean_u: area / (t1 - t0),
            min_ua: min_a,
            min_ub: min_b,
        })
    }
}

/// Summary of firing-rate activity over a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityStats {
    /// Time average of `(u_A + u_B) / 2`.
    pub mean_u: f64,
    pub min_ua: f64,
    pub min_ub: f64,
}

/// Which unit crossed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

/// A threshold crossing of `u_A` or `u_B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub t: f64,
    pub unit: Unit,
    pub direction: Direction,
    /// True when bisection reached `|u - theta| < 1e-9`.
    pub refined: bool,
}

/// Upward crossing counts for a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingCount {
    pub n_a: u32,
    pub n_b: u32,
    pub events: Vec<CrossingEvent>,
}

impl CrossingCount {
    pub fn n(&self) -> u32 {
        self.n_a + self.n_b
    }
}

fn unit_value(s: &NetState, unit: Unit) -> f64 {
    match unit {
        Unit::A => s.ua,
        Unit::B => s.ub,
    }
}

fn refine(traj: &Trajectory, unit: Unit, theta: f64, mut lo: f64, mut hi: f64) -> Result<(f64, bool)> {
    // invariant: u(lo) < theta <= u(hi) for up, reversed for down
    let up = unit_value(&traj.state_at(hi)?, unit) >= theta;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = unit_value(&traj.state_at(mid)?, unit);
        if (v - theta).abs() < CROSSING_TOL {
            return Ok((mid, true));
        }
        if (v >= theta) == up {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    let v = unit_value(&traj.state_at(hi)?, unit);
    Ok((hi, (v - theta).abs() < CROSSING_TOL))
}

/// All threshold crossings in `[t0, t1)`, optionally including downward ones.
pub fn crossing_events(traj: &Trajectory, theta: f64, window: (f64, f64), include_down: bool) -> Result<Vec<CrossingEvent>> {
    let (t0, t1) = window;
    traj.window_check(t0, t1)?;
    let ts = traj.window_times(t0, t1);
    let mut events = Vec::new();
    let mut prev = traj.state_at(ts[0])?;
    for w in ts.windows(2) {
        let cur = traj.state_at(w[1])?;
        for unit in [Unit::A, Unit::B] {
            let (a, b) = (unit_value(&prev, unit), unit_value(&cur, unit));
            let direction = if a < theta && b >= theta {
                Direction::Up
            } else if a >= theta && b < theta {
                Direction::Down
            } else {
                continue;
            };
            if direction == Direction::Down && !include_down {
                continue;
            }
            let (t, refined) = refine(traj, unit, theta, w[0], w[1])?;
            if t >= t0 && t < t1 {
                events.push(CrossingEvent { t, unit, direction, refined });
            }
        }
        prev = cur;
    }
    events.sort_by(|x, y| x.t.total_cmp(&y.t));
    Ok(events)
}

/// Counts upward crossings of `u_A` and `u_B` through `theta` in `[t0, t1)`.
pub fn detect_crossings(traj: &Trajectory, theta: f64, window: (f64, f64)) -> Result<CrossingCount> {
    let events = crossing_events(traj, theta, window, false)?;
    let n_a = events.iter().filter(|e| e.unit == Unit::A).count() as u32;
    let n_b = events.len() as u32 - n_a;
    Ok(CrossingCount { n_a, n_b, events })
}

/// `max |x(t) - x(t - period)|` over the last period of the recorded span.
pub fn check_periodicity(traj: &Trajectory, period: f64) -> Result<f64> {
    let (lo, hi) = traj.span();
    if !(period > 0.0) || hi - lo < 2.0 * period - 1e-9 * traj.dt {
        return Err(Error::Domain(format!(
            "need two periods of {period} s, recorded span is {}",
            hi - lo
        )));
    }
    let start = traj.knots.partition_point(|k| k.t < hi - period);
    let mut worst = 0.0f64;
    for k in &traj.knots[start..] {
        let back = traj.state_at(k.t - period)?;
        worst = worst.max(k.y.max_abs_diff(&back));
    }
    Ok(worst)
}

/// Integrates from a history over `t in [0, t_end]`, recording everything.
pub fn integrate(
    p: &ModelParams,
    stim: &Stimulus,
    d: f64,
    history: History,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if !(t_end >= stim.period() - 1e-12) {
        return Err(Error::Config(format!(
            "t_end = {t_end} shorter than one stimulus period {}",
            stim.period()
        )));
    }
    let mut it = Integrator::new(p, stim, d, history, opts)?;
    it.advance_to(t_end, 0.0)?;
    Ok(it.into_trajectory())
}

/// Transient protocol for reaching a periodic regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettleOptions {
    pub transient_periods: u32,
    /// Residual above which the transient is doubled once.
    pub residual_tol: f64,
}

impl Default for SettleOptions {
    fn default() -> Self {
        SettleOptions {
            transient_periods: 30,
            residual_tol: 1e-3,
        }
    }
}

/// Outcome of [`settle`].
#[derive(Clone, Debug, PartialEq)]
pub struct Settled {
    /// The last two periods of the run.
    pub traj: Trajectory,
    pub residual: f64,
    /// Whether the transient was doubled.
    pub extended: bool,
    pub t_end: f64,
}

impl Settled {
    /// The final period `[t_end - 2TR, t_end)`.
    pub fn last_period(&self) -> (f64, f64) {
        (self.t_end - self.traj.period, self.t_end)
    }
}

/// Runs the transient, then records two more periods and measures the
/// periodicity residual; doubles the transient once if it is too large.
pub fn settle(
    p: &ModelParams,
    stim: &Stimulus,
    d: f64,
    history: History,
    solver: &SolverOptions,
    opts: &SettleOptions,
) -> Result<Settled> {
    let period = stim.period();
    let mut it = Integrator::new(p, stim, d, history, solver)?;
    let mut t_end = f64::from(opts.transient_periods + 2) * period;
    it.advance_to(t_end, t_end - 2.0 * period)?;
    let mut traj = it.trajectory();
    let mut residual = check_periodicity(&traj, period)?;
    let mut extended = false;
    if residual > opts.residual_tol {
        extended = true;
        t_end = f64::from(2 * opts.transient_periods + 2) * period;
        it.advance_to(t_end, t_end - 2.0 * period)?;
        traj = it.into_trajectory();
        residual = check_periodicity(&traj, period)?;
    }
    Ok(Settled { traj, residual, extended, t_end })
}
