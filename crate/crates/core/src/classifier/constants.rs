//! Decay factors of the slow synaptic gates across one stimulus period.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stimulus::Stimulus;

/// Exponential decay factors `e^{-T/τ_i}` for the elapsed times that matter
/// when a tone arrives. `_m` / `_p` mark the minus / plus variants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynapticConstants {
    /// `e^{-(TR-TD-D)/τ_i}`
    pub n_m: f64,
    /// `e^{-(TR-D)/τ_i}`
    pub n_p: f64,
    /// `e^{-(2TR-TD-D)/τ_i}`
    pub m_m: f64,
    /// `e^{-(2TR-D)/τ_i}`
    pub m_p: f64,
    /// `e^{-(TR-2D)/τ_i}`
    pub nl_m: f64,
    /// `e^{-(TR+TD-2D)/τ_i}`
    pub nl_p: f64,
    /// `e^{-(2TR-2D)/τ_i}`
    pub ml_m: f64,
    /// `e^{-(2TR+TD-2D)/τ_i}`
    pub ml_p: f64,
    /// `e^{-(TR-2D)/τ_i}`
    pub r_m: f64,
    /// `e^{-(TR-D)/τ_i}`
    pub r_p: f64,
}

/// Computes all decay factors. Values above one (elapsed time negative)
/// are returned unclamped.
pub fn synaptic_constants(stim: &Stimulus, delay: f64, tau_i: f64) -> Result<SynapticConstants> {
    if !(stim.tr > 0.0) {
        return Err(Error::invalid("tr", "must be positive"));
    }
    if !(tau_i > 0.0) {
        return Err(Error::invalid("tau_i", "must be positive"));
    }
    let (tr, td, d) = (stim.tr, stim.td, delay);
    let e = |t: f64| (-t / tau_i).exp();
    Ok(SynapticConstants {
        n_m: e(tr - td - d),
        n_p: e(tr - d),
        m_m: e(2.0 * tr - td - d),
        m_p: e(2.0 * tr - d),
        nl_m: e(tr - 2.0 * d),
        nl_p: e(tr + td - 2.0 * d),
        ml_m: e(2.0 * tr - 2.0 * d),
        ml_p: e(2.0 * tr + td - 2.0 * d),
        r_m: e(tr - 2.0 * d),
        r_p: e(tr - d),
    })
}

impl SynapticConstants {
    /// `N^- >= N^+ >= M^- >= M^+`.
    pub fn main_ordering_holds(&self) -> bool {
        self.n_m >= self.n_p && self.n_p >= self.m_m && self.m_m >= self.m_p
    }

    /// Each long-delay factor dominates its counterpart (requires `D >= TD`).
    pub fn long_ordering_holds(&self) -> bool {
        self.nl_p >= self.n_p && self.nl_m >= self.n_m && self.ml_p >= self.m_p && self.ml_m >= self.m_m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn example_values() {
        let s = Stimulus::new(0.03, 0.2, 5.0, 0.0, 6).unwrap();
        let k = synaptic_constants(&s, 0.01, 0.2).unwrap();
        assert!((k.n_p - (-0.95f64).exp()).abs() < 1e-15);
        assert!((k.m_p - (-1.95f64).exp()).abs() < 1e-15);
        assert!((k.n_p - 0.386_741).abs() < 1e-6);
        assert!((k.m_p - 0.142_274).abs() < 1e-6);
    }

    #[test]
    fn zero_duration_limit_collapses() {
        let s = Stimulus { td: 0.0, tr: 0.1, c: 1.0, df: 0.0, m: 1 };
        let k = synaptic_constants(&s, 0.0, 0.3).unwrap();
        assert_eq!(k.n_m, k.n_p);
        assert_eq!(k.m_m, k.m_p);
        assert!((k.n_p - (-0.1f64 / 0.3).exp()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn orderings(td in 1e-3f64..0.1, tr_extra in 0.0f64..0.5, d in 0.0f64..0.2, tau_i in 0.01f64..1.0) {
            let s = Stimulus { td, tr: td + tr_extra, c: 1.0, df: 0.0, m: 1 };
            let k = synaptic_constants(&s, d, tau_i).unwrap();
            prop_assert!(k.main_ordering_holds());
            if d >= td {
                prop_assert!(k.long_ordering_holds());
            }
        }
    }
}
