//! Closed-form percept boundaries in the `(PR, df)` plane.
//!
//! Both curves have the form `df = [(a - b x + c - θ)/c]^m`, which is the
//! frequency difference at which `a - b x + d(df) = θ`. The coherence curve
//! uses `x = e^{-(TR-D)/τ_i}`; the fission curve uses a two-period decay
//! factor whose elapsed time is either `2TR - TD` or `2TR - D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::stimulus::Stimulus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Coherence,
    Fission,
}

/// Elapsed time in the fission decay factor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FissionVariant {
    /// `e^{-(2TR-TD)/τ_i}`; tracks the simulated BIS/SEG transition of the
    /// steep smooth model.
    #[default]
    Tone,
    /// `e^{-(2TR-D)/τ_i}`; places the curve exactly where the classifier's
    /// `C2+` changes sign.
    Delay,
}

/// One boundary sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub pr: f64,
    /// Boundary value clamped to `[0, 1]`.
    pub df: f64,
    /// Unclamped value; `NaN` when the base is negative.
    pub raw: f64,
    /// The base was negative: the curve lies below the df axis.
    pub below_axis: bool,
    /// The raw value exceeded one.
    pub clamped: bool,
}

/// A sampled boundary curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub kind: BoundaryKind,
    pub variant: Option<FissionVariant>,
    pub points: Vec<BoundaryPoint>,
}

fn check(p: &ModelParams, stim: &Stimulus, pr: f64) -> Result<()> {
    if !(pr.is_finite() && pr > 0.0) {
        return Err(Error::invalid("pr", format!("must be positive, got {pr}")));
    }
    if !(stim.c > 0.0) {
        return Err(Error::invalid("c", format!("must be positive, got {}", stim.c)));
    }
    if !(p.tau_i > 0.0) {
        return Err(Error::invalid("tau_i", "must be positive"));
    }
    Ok(())
}

fn point(p: &ModelParams, stim: &Stimulus, pr: f64, factor: f64) -> BoundaryPoint {
    let base = (p.a - p.b * factor + stim.c - p.theta) / stim.c;
    if base < 0.0 {
        return BoundaryPoint { pr, df: 0.0, raw: f64::NAN, below_axis: true, clamped: false };
    }
    let raw = base.powi(stim.m as i32);
    BoundaryPoint { pr, df: raw.min(1.0), raw, below_axis: false, clamped: raw > 1.0 }
}

/// Coherence boundary at presentation rate `pr`.
pub fn coherence_boundary(p: &ModelParams, stim: &Stimulus, pr: f64) -> Result<BoundaryPoint> {
    check(p, stim, pr)?;
    let tr = 1.0 / pr;
    Ok(point(p, stim, pr, (-(tr - p.delay) / p.tau_i).exp()))
}

/// Fission boundary at presentation rate `pr`.
pub fn fission_boundary(p: &ModelParams, stim: &Stimulus, pr: f64, variant: FissionVariant) -> Result<BoundaryPoint> {
    check(p, stim, pr)?;
    let tr = 1.0 / pr;
    let lag = match variant {
        FissionVariant::Tone => stim.td,
        FissionVariant::Delay => p.delay,
    };
    Ok(point(p, stim, pr, (-(2.0 * tr - lag) / p.tau_i).exp()))
}

/// Both curves sampled at `n` uniformly spaced rates in `[pr_min, pr_max]`.
pub fn sample_boundaries(
    p: &ModelParams,
    stim: &Stimulus,
    pr_range: (f64, f64),
    n: usize,
    variant: FissionVariant,
) -> Result<[BoundaryCurve; 2]> {
    if n < 2 {
        return Err(Error::invalid("n", format!("need at least 2 points, got {n}")));
    }
    let (lo, hi) = pr_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::invalid("pr_min", format!("bad rate range [{lo}, {hi}]")));
    }
    let prs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let coh = prs.iter().map(|&pr| coherence_boundary(p, stim, pr)).collect::<Result<_>>()?;
    let fis = prs.iter().map(|&pr| fission_boundary(p, stim, pr, variant)).collect::<Result<_>>()?;
    Ok([
        BoundaryCurve { kind: BoundaryKind::Coherence, variant: None, points: coh },
        BoundaryCurve { kind: BoundaryKind::Fission, variant: Some(variant), points: fis },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{classify_short_delay, conditions, Cond, Percept, StateName};
    use crate::model::Gain;

    fn step_ref() -> (ModelParams, Stimulus) {
        let p = ModelParams { a: 1.0, b: 2.0, theta: 0.5, tau: 0.001, tau_i: 0.2, delay: 0.01, gain: Gain::Heaviside };
        (p, Stimulus::new(0.03, 0.1, 5.0, 0.0, 6).unwrap())
    }

    #[test]
    fn coherence_known_value() {
        let (p, s) = step_ref();
        let v = coherence_boundary(&p, &s, 10.0).unwrap();
        // high-precision evaluation of [(1 - 2 e^{-0.45} + 4.5)/5]^6
        assert!((v.df - 0.363_900_099_212_268_23).abs() < 1e-12, "{}", v.df);
        assert!(!v.below_axis && !v.clamped);
    }

    #[test]
    fn limits_and_flags() {
        let (p, s) = step_ref();
        let free = ModelParams { b: 0.0, ..p };
        let expect = ((1.0 + 5.0 - 0.5) / 5.0f64).powi(6);
        for pr in [1.0, 7.0, 30.0] {
            let c = coherence_boundary(&free, &s, pr).unwrap();
            assert_eq!(c.raw, expect);
            assert!(c.clamped && c.df == 1.0);
            let f = fission_boundary(&free, &s, pr, FissionVariant::Tone).unwrap();
            assert_eq!(f.raw, c.raw);
        }
        let slow = coherence_boundary(&p, &s, 1e-6).unwrap();
        assert!((slow.raw - expect).abs() < 1e-9);
        let strong = ModelParams { b: 50.0, ..p };
        let v = coherence_boundary(&strong, &s, 40.0).unwrap();
        assert!(v.below_axis && v.df == 0.0 && v.raw.is_nan());
        assert!(coherence_boundary(&p, &Stimulus { c: 0.0, ..s }, 10.0).is_err());
        assert!(coherence_boundary(&p, &s, 0.0).is_err());
    }

    #[test]
    fn fission_uses_slower_decay() {
        let (p, s) = step_ref();
        for i in 0..50 {
            let pr = 1.0 + i as f64;
            let coh = coherence_boundary(&p, &s, pr).unwrap();
            for v in [FissionVariant::Tone, FissionVariant::Delay] {
                let fis = fission_boundary(&p, &s, pr, v).unwrap();
                assert!(fis.raw >= coh.raw || coh.below_axis, "pr {pr}");
            }
        }
    }

    #[test]
    fn sampled_curves_are_monotone_in_rate() {
        let (p, s) = step_ref();
        let curves = sample_boundaries(&p, &s, (1.0, 40.0), 98, FissionVariant::Delay).unwrap();
        for c in &curves {
            assert_eq!(c.points.len(), 98);
            assert!(c.points.windows(2).all(|w| w[1].df <= w[0].df));
        }
        let two = sample_boundaries(&p, &s, (1.0, 40.0), 2, FissionVariant::Delay).unwrap();
        assert_eq!(two[0].points.len(), 2);
        assert!(sample_boundaries(&p, &s, (1.0, 40.0), 1, FissionVariant::Delay).is_err());
    }

    #[test]
    fn curves_solve_their_conditions() {
        let (p, s) = step_ref();
        // raw values may exceed one, so invert the map without range checks
        let d_of = |df: f64| 5.0 * (1.0 - df.powf(1.0 / 6.0));
        for i in 0..=20 {
            let pr = 5.0 + i as f64;
            let st = s.with_pr(pr);
            let coh = coherence_boundary(&p, &s, pr).unwrap();
            let r = conditions::evaluate(&p, &st, d_of(coh.raw)).unwrap();
            assert!((r.value(Cond::C5p) - p.theta).abs() < 1e-12);
            let fis = fission_boundary(&p, &s, pr, FissionVariant::Delay).unwrap();
            let r = conditions::evaluate(&p, &st, d_of(fis.raw)).unwrap();
            assert!((r.value(Cond::C2p) - p.theta).abs() < 1e-12);
        }
    }

    #[test]
    fn classifier_changes_state_across_the_curves() {
        let (p, s) = step_ref();
        let at = |pr: f64, df: f64| {
            let st = s.with_pr(pr).with_df(df);
            classify_short_delay(&p, &st, st.d().unwrap()).unwrap().labels.remove(0)
        };
        let mut checked = 0;
        for i in 0..=40 {
            let pr = 5.0 + 0.5 * i as f64;
            let eps = 1e-6;
            let fis = fission_boundary(&p, &s, pr, FissionVariant::Delay).unwrap();
            if !fis.below_axis && !fis.clamped && fis.df > eps {
                assert_eq!(at(pr, fis.df - eps).name, StateName::APcAS, "pr {pr}");
                assert_eq!(at(pr, fis.df + eps).name, StateName::AP, "pr {pr}");
                checked += 1;
            }
            let coh = coherence_boundary(&p, &s, pr).unwrap();
            if !coh.below_axis && !coh.clamped && coh.df > eps {
                let below = at(pr, coh.df - eps);
                let above = at(pr, coh.df + eps);
                if below.name == StateName::AScI {
                    assert_eq!(above.percept, Percept::Bistability, "pr {pr}: {}", above.name);
                }
            }
        }
        assert!(checked > 20);
    }
}
