//! Two-unit firing-rate model with fast mutual excitation and slow delayed
//! inhibition.
//!
//! ```text
//! tau  u_A' = -u_A + G(a u_B - b s_B(t-D) + i_A)
//! s_A'      = G(u_A)(1 - s_A)/tau - s_A/tau_i
//! ```
//! and symmetrically for B. `G` is either the Heaviside step at `theta` or a
//! logistic centred at `theta`.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stimulus::{logistic, Stimulus};

/// Gain nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gain {
    Heaviside,
    Sigmoid { lambda: f64 },
}

/// Model parameters. Times are in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Mutual excitation.
    pub a: f64,
    /// Delayed inhibition.
    pub b: f64,
    /// Firing threshold in `(0, 1)`.
    pub theta: f64,
    /// Fast timescale.
    pub tau: f64,
    /// Inhibitory decay timescale.
    pub tau_i: f64,
    /// Inhibitory delay.
    pub delay: f64,
    pub gain: Gain,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::invalid("theta", format!("must lie in (0, 1), got {}", self.theta)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid("tau", format!("must be positive, got {}", self.tau)));
        }
        if !(self.tau_i.is_finite() && self.tau_i > 0.0) {
            return Err(Error::invalid("tau_i", format!("must be positive, got {}", self.tau_i)));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::invalid("a", format!("must be non-negative, got {}", self.a)));
        }
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(Error::invalid("b", format!("must be non-negative, got {}", self.b)));
        }
        if !(self.delay.is_finite() && self.delay >= 0.0) {
            return Err(Error::invalid("D", format!("must be non-negative, got {}", self.delay)));
        }
        if let Gain::Sigmoid { lambda } = self.gain {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
            }
        }
        Ok(())
    }

    /// Gain applied to a raw drive.
    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        match self.gain {
            Gain::Heaviside => heaviside_gain(x, self.theta),
            Gain::Sigmoid { lambda } => sigmoid_gain(x - self.theta, lambda),
        }
    }
}

/// `1` iff `x >= theta`.
#[inline]
pub fn heaviside_gain(x: f64, theta: f64) -> f64 {
    if x >= theta {
        1.0
    } else {
        0.0
    }
}

/// Logistic `1 / (1 + exp(-lambda x))`.
#[inline]
pub fn sigmoid_gain(x: f64, lambda: f64) -> f64 {
    logistic(x, lambda)
}

/// Network state `(u_A, u_B, s_A, s_B)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetState {
    pub ua: f64,
    pub ub: f64,
    pub sa: f64,
    pub sb: f64,
}

impl NetState {
    pub const fn new(ua: f64, ub: f64, sa: f64, sb: f64) -> Self {
        NetState { ua, ub, sa, sb }
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        NetState::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.ua, self.ub, self.sa, self.sb]
    }

    /// Exchanges the roles of A and B.
    pub fn swapped(self) -> Self {
        NetState::new(self.ub, self.ua, self.sb, self.sa)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Sup norm of the difference.
    pub fn max_abs_diff(&self, other: &NetState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for NetState {
    type Output = NetState;
    fn add(self, o: NetState) -> NetState {
        NetState::new(self.ua + o.ua, self.ub + o.ub, self.sa + o.sa, self.sb + o.sb)
    }
}

impl Mul<NetState> for f64 {
    type Output = NetState;
    fn mul(self, s: NetState) -> NetState {
        NetState::new(self * s.ua, self * s.ub, self * s.sa, self * s.sb)
    }
}

/// Time derivative of the state.
///
/// `delayed` holds `(s_A(t-D), s_B(t-D))`, `inputs` holds `(i_A, i_B)`.
#[inline]
pub fn rhs(state: &NetState, delayed: (f64, f64), inputs: (f64, f64), p: &ModelParams) -> NetState {
    let (sa_d, sb_d) = delayed;
    let (ia, ib) = inputs;
    let dua = (-state.ua + p.g(p.a * state.ub - p.b * sb_d + ia)) / p.tau;
    let dub = (-state.ub + p.g(p.a * state.ua - p.b * sa_d + ib)) / p.tau;
    let dsa = p.g(state.ua) * (1.0 - state.sa) / p.tau - state.sa / p.tau_i;
    let dsb = p.g(state.ub) * (1.0 - state.sb) / p.tau - state.sb / p.tau_i;
    NetState::new(dua, dub, dsa, dsb)
}

/// Regime predicates for a parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeFlags {
    /// `a - b < theta`: no self-sustained activity once inhibition arrives.
    pub u1: bool,
    /// `c >= theta`: on-frequency tones can drive a unit.
    pub u2: bool,
    /// `c - b >= theta`: on-frequency tones win against full inhibition.
    pub u3: bool,
    /// `D <= TD`.
    pub short_delay: bool,
    /// `TD + D < TR`.
    pub sep_ok: bool,
}

/// Evaluates the regime predicates. Never fails; callers decide which flags
/// they need.
pub fn validate_params(p: &ModelParams, stim: &Stimulus) -> RegimeFlags {
    RegimeFlags {
        u1: p.a - p.b < p.theta,
        u2: stim.c >= p.theta,
        u3: stim.c - p.b >= p.theta,
        short_delay: p.delay <= stim.td,
        sep_ok: stim.td + p.delay < stim.tr,
    }
}

impl RegimeFlags {
    /// Fails with the first listed flag that does not hold.
    pub fn require(&self, flags: &[&'static str]) -> Result<()> {
        for &f in flags {
            let ok = match f {
                "u1" => self.u1,
                "u2" => self.u2,
                "u3" => self.u3,
                "short_delay" => self.short_delay,
                "long_delay" => !self.short_delay,
                "sep_ok" => self.sep_ok,
                _ => unreachable!("unknown regime flag {f}"),
            };
            if !ok {
                return Err(Error::Regime { flag: f });
            }
        }
        Ok(())
    }
}
