//! Condition quantities compared against `θ` by the existence tables.

use serde::{Deserialize, Serialize};

use super::constants::{synaptic_constants, SynapticConstants};
use crate::error::Result;
use crate::model::{validate_params, ModelParams};
use crate::stimulus::Stimulus;

macro_rules! conds {
    ($($v:ident => $s:literal),* $(,)?) => {
        /// A named quantity compared against `θ`.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Cond { $($v),* }

        impl Cond {
            pub const ALL: &'static [Cond] = &[$(Cond::$v),*];

            pub fn name(self) -> &'static str {
                match self { $(Cond::$v => $s),* }
            }
        }
    };
}

conds! {
    C1 => "C1", C2m => "C2-", C2p => "C2+", C3m => "C3-", C3p => "C3+",
    C4m => "C4-", C4p => "C4+", C5m => "C5-", C5p => "C5+", C6m => "C6-", C6p => "C6+",
    C7m => "C7-", C7p => "C7+", C8m => "C8-", C8p => "C8+", C9 => "C9", C10 => "C10",
    D2m => "D2-", D2p => "D2+", D3m => "D3-", D3p => "D3+", D4m => "D4-", D4p => "D4+",
    D5m => "D5-", D5p => "D5+", D6m => "D6-", D6p => "D6+", D7m => "D7-", D7p => "D7+",
    D8m => "D8-", D8p => "D8+", D9 => "D9", D10 => "D10",
    R6m => "R6-", R7m => "R7-", P => "P", K => "K",
    SL1 => "SL1", SK1 => "SK1", SK2 => "SK2", SD1 => "SD1",
}

/// One reported quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub name: String,
    pub value: f64,
    /// `value >= θ`.
    pub ge_theta: bool,
}

/// Values of every condition quantity for one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub theta: f64,
    /// Raw decay factors.
    pub constants: SynapticConstants,
    /// `min(1, N^-)`, the factor used when the gate cannot have decayed.
    pub n_m_eff: f64,
    /// `min(1, R^-)`.
    pub r_m_eff: f64,
    /// `e^{(D-2TD-TR)/τ_i}`.
    pub l: f64,
    /// `e^{(D-2TD)/τ_i}`.
    pub e: f64,
    pub entries: Vec<ConditionEntry>,
    #[serde(skip)]
    values: Vec<f64>,
}

impl ConditionReport {
    pub fn value(&self, c: Cond) -> f64 {
        self.values[c as usize]
    }

    pub fn ge(&self, c: Cond) -> bool {
        self.value(c) >= self.theta
    }

    pub fn lt(&self, c: Cond) -> bool {
        self.value(c) < self.theta
    }

    /// Smallest `|value - θ|` over the given quantities.
    pub fn margin(&self, conds: &[Cond]) -> f64 {
        conds
            .iter()
            .map(|&c| (self.value(c) - self.theta).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates every quantity, without regime checks.
pub fn evaluate(p: &ModelParams, stim: &Stimulus, d: f64) -> Result<ConditionReport> {
    let k = synaptic_constants(stim, p.delay, p.tau_i)?;
    let (a, b, c, th) = (p.a, p.b, stim.c, p.theta);
    let n_m = k.n_m.min(1.0);
    let r_m = k.r_m.min(1.0);
    let l = ((p.delay - 2.0 * stim.td - stim.tr) / p.tau_i).exp();
    let e = ((p.delay - 2.0 * stim.td) / p.tau_i).exp();
    let mut values = vec![0.0; Cond::ALL.len()];
    let mut set = |cond: Cond, v: f64| values[cond as usize] = v;
    set(Cond::C1, d);
    set(Cond::C2m, a - b * k.m_m + d);
    set(Cond::C2p, a - b * k.m_p + d);
    set(Cond::C3m, c - b * n_m);
    set(Cond::C3p, c - b * k.n_p);
    set(Cond::C4m, c - b * k.m_m);
    set(Cond::C4p, c - b * k.m_p);
    set(Cond::C5m, a - b * n_m + d);
    set(Cond::C5p, a - b * k.n_p + d);
    set(Cond::C6m, a - b * n_m + c);
    set(Cond::C6p, a - b * k.n_p + c);
    set(Cond::C7m, d - b * n_m);
    set(Cond::C7p, d - b * k.n_p);
    set(Cond::C8m, d - b * k.m_m);
    set(Cond::C8p, d - b * k.m_p);
    set(Cond::C9, a - b * k.m_p);
    set(Cond::C10, a - b * k.n_p);
    set(Cond::D2m, a - b * k.ml_m + d);
    set(Cond::D2p, a - b * k.ml_p + d);
    set(Cond::D3m, c - b * k.nl_m);
    set(Cond::D3p, c - b * k.nl_p);
    set(Cond::D4m, c - b * k.ml_m);
    set(Cond::D4p, c - b * k.ml_p);
    set(Cond::D5m, a - b * k.nl_m + d);
    set(Cond::D5p, a - b * k.nl_p + d);
    set(Cond::D6m, a - b * k.nl_m + c);
    set(Cond::D6p, a - b * k.nl_p + c);
    set(Cond::D7m, d - b * k.nl_m);
    set(Cond::D7p, d - b * k.nl_p);
    set(Cond::D8m, d - b * k.ml_m);
    set(Cond::D8p, d - b * k.ml_p);
    set(Cond::D9, a - b * k.ml_p);
    set(Cond::D10, a - b * k.nl_p);
    set(Cond::R6m, a - b * r_m + d);
    set(Cond::R7m, d - b * r_m);
    set(Cond::P, a - b + d);
    set(Cond::K, c - (d - th) * (stim.tr / p.tau_i).exp());
    set(Cond::SL1, a - l * c + d + l * th);
    set(Cond::SK1, a - e * c + d + e * th);
    set(Cond::SK2, a - e * c + e * th);
    set(Cond::SD1, d - b * (2.0 * (p.delay - stim.tr) / p.tau_i).exp());
    let entries = Cond::ALL
        .iter()
        .map(|&cond| ConditionEntry {
            name: cond.name().to_string(),
            value: values[cond as usize],
            ge_theta: values[cond as usize] >= th,
        })
        .collect();
    Ok(ConditionReport { theta: th, constants: k, n_m_eff: n_m, r_m_eff: r_m, l, e, entries, values })
}

/// Evaluates every quantity after checking `u1` and `u2`.
pub fn condition_report(p: &ModelParams, stim: &Stimulus, d: f64) -> Result<ConditionReport> {
    p.validate()?;
    stim.validate()?;
    validate_params(p, stim).require(&["u1", "u2"])?;
    evaluate(p, stim, d)
}
