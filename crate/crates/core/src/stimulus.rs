//! Periodic two-tone stimulus: tone schedule, square and smoothed inputs.
//!
//! A tones occupy `[2kTR, 2kTR + TD]` and B tones `[(2k+1)TR, (2k+1)TR + TD]`.
//! During an A tone unit A receives the full strength `c` and unit B the
//! off-frequency strength `d`; the roles swap during a B tone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stimulus parameters. Times are in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    /// Tone duration.
    pub td: f64,
    /// Repetition time, the reciprocal of the presentation rate.
    pub tr: f64,
    /// On-frequency input strength.
    pub c: f64,
    /// Normalised frequency difference in `[0, 1]`.
    pub df: f64,
    /// Exponent of the `df -> d` map.
    pub m: u32,
}

impl Stimulus {
    /// Builds and validates a stimulus.
    pub fn new(td: f64, tr: f64, c: f64, df: f64, m: u32) -> Result<Self> {
        let s = Stimulus { td, tr, c, df, m };
        s.validate()?;
        Ok(s)
    }

    /// Same stimulus at presentation rate `pr` (Hz).
    pub fn with_pr(self, pr: f64) -> Self {
        Stimulus { tr: 1.0 / pr, ..self }
    }

    /// Same stimulus with a different frequency difference.
    pub fn with_df(self, df: f64) -> Self {
        Stimulus { df, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.td.is_finite() && self.td > 0.0) {
            return Err(Error::invalid("td", format!("must be positive, got {}", self.td)));
        }
        if !(self.tr.is_finite() && self.tr > 0.0) {
            return Err(Error::invalid("tr", format!("must be positive, got {}", self.tr)));
        }
        if self.tr < self.td {
            return Err(Error::invalid(
                "tr",
                format!("tones overlap: tr = {} < td = {}", self.tr, self.td),
            ));
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::invalid("c", format!("must be non-negative, got {}", self.c)));
        }
        if !(0.0..=1.0).contains(&self.df) {
            return Err(Error::invalid("df", format!("must lie in [0, 1], got {}", self.df)));
        }
        if self.m < 1 {
            return Err(Error::invalid("m", "must be at least 1"));
        }
        Ok(())
    }

    /// Presentation rate in Hz.
    pub fn pr(&self) -> f64 {
        1.0 / self.tr
    }

    /// Stimulus period `2TR`.
    pub fn period(&self) -> f64 {
        2.0 * self.tr
    }

    /// Off-frequency strength derived from `(c, df, m)`.
    pub fn d(&self) -> Result<f64> {
        df_to_d(self.c, self.df, self.m)
    }
}

/// Which tone an interval belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tone {
    A,
    B,
}

/// A closed active-tone interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneInterval {
    pub start: f64,
    pub end: f64,
    pub tone: Tone,
}

/// Ordered active-tone intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ToneSchedule {
    pub intervals: Vec<ToneInterval>,
}

/// Every tone interval whose onset is at or before `t_end`.
pub fn tone_schedule(stim: &Stimulus, t_end: f64) -> Result<ToneSchedule> {
    stim.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("t_end", format!("must be positive, got {t_end}")));
    }
    let tol = 1e-12 * stim.tr.max(t_end);
    let mut intervals = Vec::new();
    let mut j: u64 = 0;
    loop {
        let start = j as f64 * stim.tr;
        if start > t_end + tol {
            break;
        }
        let tone = if j.is_multiple_of(2) { Tone::A } else { Tone::B };
        intervals.push(ToneInterval {
            start,
            end: start + stim.td,
            tone,
        });
        j += 1;
    }
    Ok(ToneSchedule { intervals })
}

/// Maps a frequency difference to the off-frequency strength,
/// `d = c (1 - df^(1/m))`.
pub fn df_to_d(c: f64, df: f64, m: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&df) {
        return Err(Error::Domain(format!("df must lie in [0, 1], got {df}")));
    }
    if !(c >= 0.0) {
        return Err(Error::Domain(format!("c must be non-negative, got {c}")));
    }
    if m < 1 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    Ok(c * (1.0 - df.powf(1.0 / f64::from(m))))
}

/// Logistic function with slope `lambda`.
pub fn logistic(x: f64, lambda: f64) -> f64 {
    1.0 / (1.0 + (-lambda * x).exp())
}

/// Square-wave inputs `(i_A, i_B)` at time `t`.
///
/// Interval endpoints are inclusive. When `TR == TD` the shared endpoint is
/// attributed to the B tone that starts there.
pub fn square_input(stim: &Stimulus, d: f64, t: f64) -> (f64, f64) {
    let phase = t.rem_euclid(2.0 * stim.tr);
    if phase >= stim.tr && phase <= stim.tr + stim.td {
        (d, stim.c)
    } else if phase <= stim.td {
        (stim.c, d)
    } else {
        (0.0, 0.0)
    }
}

/// Smoothed inputs built from logistic envelopes of `sin(pi t / TR)`.
pub fn smooth_input(stim: &Stimulus, d: f64, lambda: f64, t: f64) -> (f64, f64) {
    let phase = t.rem_euclid(2.0 * stim.tr);
    let w = std::f64::consts::PI / stim.tr;
    let s_now = (w * phase).sin();
    let s_lag = (w * (stim.td - phase)).sin();
    let on = logistic(s_now, lambda) * logistic(s_lag, lambda);
    let off = logistic(-s_now, lambda) * logistic(-s_lag, lambda);
    (stim.c * on + d * off, d * on + stim.c * off)
}

/// Input waveform used by the integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputKind {
    Square,
    Smooth { lambda: f64 },
}

impl InputKind {
    pub fn eval(&self, stim: &Stimulus, d: f64, t: f64) -> (f64, f64) {
        match *self {
            InputKind::Square => square_input(stim, d, t),
            InputKind::Smooth { lambda } => smooth_input(stim, d, lambda, t),
        }
    }
}
