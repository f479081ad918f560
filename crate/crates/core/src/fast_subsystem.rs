//! The planar fast subsystem obtained by freezing the delayed gates.
//!
//! With `s_A(t-D)`, `s_B(t-D)` held at `s̃_A`, `s̃_B` and total inputs `f`
//! (to A) and `g` (to B), the fast variables obey
//!
//! ```text
//! u_A' = -u_A + H(a u_B - b s̃_B + f)
//! u_B' = -u_B + H(a u_A - b s̃_A + g)
//! ```
//!
//! For the Heaviside gain the equilibria are the corners of the unit square
//! and the basins of `(0,0)` and `(1,1)` are separated by the two stable
//! branches of a degenerate saddle at `(s1, s2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stimulus::logistic;

/// A corner of the unit square, `(u_A, u_B)` with entries in `{0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Corner(pub u8, pub u8);

impl Corner {
    pub const OFF: Corner = Corner(0, 0);
    pub const A_ONLY: Corner = Corner(1, 0);
    pub const B_ONLY: Corner = Corner(0, 1);
    pub const ON: Corner = Corner(1, 1);

    pub fn as_point(self) -> (f64, f64) {
        (f64::from(self.0), f64::from(self.1))
    }
}

impl std::fmt::Display for Corner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

/// Frozen-gate context of the fast subsystem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FastContext {
    /// Total external input to A.
    pub f: f64,
    /// Total external input to B.
    pub g: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    /// Frozen delayed gate of A, inhibiting B.
    pub sa: f64,
    /// Frozen delayed gate of B, inhibiting A.
    pub sb: f64,
}

impl FastContext {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sa", self.sa), ("sb", self.sb)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, format!("gate must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [("f", self.f), ("g", self.g), ("a", self.a), ("b", self.b), ("theta", self.theta)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Saddle coordinates `s1 = (b s̃_A - g + θ)/a`, `s2 = (b s̃_B - f + θ)/a`.
    pub fn saddle(&self) -> Result<SaddleGeometry> {
        if !(self.a > 0.0) {
            return Err(Error::Domain(format!("saddle needs a > 0, got {}", self.a)));
        }
        Ok(SaddleGeometry {
            s1: (self.b * self.sa - self.g + self.theta) / self.a,
            s2: (self.b * self.sb - self.f + self.theta) / self.a,
        })
    }
}

/// Position of the degenerate saddle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleGeometry {
    pub s1: f64,
    pub s2: f64,
}

impl SaddleGeometry {
    /// `(0,0)` and `(1,1)` coexist iff both coordinates lie in `(0, 1]`.
    pub fn coexistence(&self) -> bool {
        self.s1 > 0.0 && self.s1 <= 1.0 && self.s2 > 0.0 && self.s2 <= 1.0
    }
}

/// Corners that are equilibria of the Heaviside fast subsystem.
pub fn fast_equilibria(ctx: &FastContext) -> Vec<Corner> {
    let thr_a = ctx.b * ctx.sb + ctx.theta;
    let thr_b = ctx.b * ctx.sa + ctx.theta;
    let mut out = Vec::with_capacity(2);
    if ctx.f < thr_a && ctx.g < thr_b {
        out.push(Corner::OFF);
    }
    if ctx.f >= thr_a && ctx.a + ctx.g < thr_b {
        out.push(Corner::A_ONLY);
    }
    if ctx.a + ctx.f < thr_a && ctx.g >= thr_b {
        out.push(Corner::B_ONLY);
    }
    if ctx.a + ctx.f >= thr_a && ctx.a + ctx.g >= thr_b {
        out.push(Corner::ON);
    }
    out
}

fn check_saddle(s1: f64, s2: f64) -> Result<()> {
    let g = SaddleGeometry { s1, s2 };
    if !g.coexistence() {
        return Err(Error::Domain(format!("saddle ({s1}, {s2}) outside (0, 1]^2")));
    }
    Ok(())
}

/// The separatrix `u_B` as a function of `u_A`.
///
/// Left of the saddle the curve lies on the line through `(1, 0)` and
/// `(s1, s2)`; right of it, on the line through `(0, 1)` and `(s1, s2)`.
pub fn separatrix(s1: f64, s2: f64, ua: f64) -> Result<f64> {
    check_saddle(s1, s2)?;
    if !(0.0..=1.0).contains(&ua) {
        return Err(Error::Domain(format!("u_A = {ua} outside [0, 1]")));
    }
    if ua <= s1 {
        if s1 == 1.0 {
            if ua == s1 {
                return Ok(s2);
            }
            return Err(Error::Domain("separatrix branch is singular at s1 = 1".into()));
        }
        Ok(s2 * ((ua - 1.0) / (s1 - 1.0)))
    } else {
        Ok(ua * (s2 - 1.0) / s1 + 1.0)
    }
}

/// Attractor whose basin contains a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasinLabel {
    Off,
    On,
    Boundary,
}

impl BasinLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BasinLabel::Off => "(0,0)",
            BasinLabel::On => "(1,1)",
            BasinLabel::Boundary => "boundary",
        }
    }
}

/// Basin membership relative to the separatrix through `(s1, s2)`.
pub fn basin_label(s1: f64, s2: f64, point: (f64, f64)) -> Result<BasinLabel> {
    check_saddle(s1, s2)?;
    let (ua, ub) = point;
    if !(ua.is_finite() && ub.is_finite()) {
        return Err(Error::Domain("point must be finite".into()));
    }
    if ua == s1 && ub == s2 {
        return Ok(BasinLabel::Boundary);
    }
    let curve = if ua <= s1 {
        if s1 == 1.0 {
            // u_A never reaches the gate, so u_B eventually drops below s2
            return Ok(BasinLabel::Off);
        }
        s2 * ((ua - 1.0) / (s1 - 1.0))
    } else {
        ua * (s2 - 1.0) / s1 + 1.0
    };
    Ok(if ub > curve {
        BasinLabel::On
    } else if ub < curve {
        BasinLabel::Off
    } else {
        BasinLabel::Boundary
    })
}

/// Delay `δ = τ ln(1 / (1 - u_star))` for a unit relaxing from 0 towards 1 to
/// reach `u_star`.
pub fn onset_delay(tau: f64, u_star: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    if !(0.0..1.0).contains(&u_star) {
        return Err(Error::Domain(format!("u_star must lie in [0, 1), got {u_star}")));
    }
    Ok(-tau * (1.0 - u_star).ln())
}

/// Forward integration of the reduced system
/// `u_A' = -u_A + H(u_B - s2)`, `u_B' = -u_B + H(u_A - s1)`
/// with RK4 in fast time. Steps are shortened so that they land on the
/// switching lines instead of straddling them. Returns the corner reached
/// within `tol`, or `None` if none is reached by `t_max`.
pub fn reduced_flow_limit(s1: f64, s2: f64, point: (f64, f64), dt: f64, tol: f64, t_max: f64) -> Option<Corner> {
    let field = |ha: f64, hb: f64, u: (f64, f64)| (-u.0 + ha, -u.1 + hb);
    let gates = |u: (f64, f64)| (f64::from(u8::from(u.1 >= s2)), f64::from(u8::from(u.0 >= s1)));
    let step = |u: (f64, f64), h: f64, g: (f64, f64)| {
        let k1 = field(g.0, g.1, u);
        let k2 = field(g.0, g.1, (u.0 + 0.5 * h * k1.0, u.1 + 0.5 * h * k1.1));
        let k3 = field(g.0, g.1, (u.0 + 0.5 * h * k2.0, u.1 + 0.5 * h * k2.1));
        let k4 = field(g.0, g.1, (u.0 + h * k3.0, u.1 + h * k3.1));
        (
            u.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            u.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    };
    let mut u = point;
    let mut t = 0.0;
    while t < t_max {
        for c in [Corner::OFF, Corner::ON, Corner::A_ONLY, Corner::B_ONLY] {
            let (x, y) = c.as_point();
            if (u.0 - x).abs().max((u.1 - y).abs()) < tol {
                return Some(c);
            }
        }
        let g = gates(u);
        let mut next = step(u, dt, g);
        let mut h = dt;
        if gates(next) != g {
            // bisect for the step that lands on the switching line
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if gates(step(u, mid, g)) == g {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            h = hi;
            next = step(u, hi, g);
        }
        u = next;
        t += h;
    }
    None
}

/// Fast subsystem with a logistic gain of slope `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFast {
    pub ctx: FastContext,
    pub lambda: f64,
}

/// Equilibrium of the sigmoid fast subsystem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmoidEquilibrium {
    pub ua: f64,
    pub ub: f64,
    /// Number of eigenvalues with positive real part.
    pub unstable_dims: u8,
}

impl SigmoidFast {
    fn drives(&self, ua: f64, ub: f64) -> (f64, f64) {
        let c = &self.ctx;
        (
            c.a * ub - c.b * c.sb + c.f - c.theta,
            c.a * ua - c.b * c.sa + c.g - c.theta,
        )
    }

    pub fn field(&self, ua: f64, ub: f64) -> (f64, f64) {
        let (xa, xb) = self.drives(ua, ub);
        (-ua + logistic(xa, self.lambda), -ub + logistic(xb, self.lambda))
    }

    /// Derivatives of the two gains with respect to their drives.
    fn slopes(&self, ua: f64, ub: f64) -> (f64, f64) {
        let (xa, xb) = self.drives(ua, ub);
        let sa = logistic(xa, self.lambda);
        let sb = logistic(xb, self.lambda);
        (self.lambda * sa * (1.0 - sa), self.lambda * sb * (1.0 - sb))
    }

    /// Equilibria found by damped Newton iteration from the four corners.
    pub fn equilibria(&self) -> Vec<SigmoidEquilibrium> {
        let a = self.ctx.a;
        let mut found: Vec<SigmoidEquilibrium> = Vec::new();
        let starts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.5, 0.5)];
        for (mut x, mut y) in starts {
            let mut converged = false;
            for _ in 0..200 {
                let (fx, fy) = self.field(x, y);
                if fx.abs().max(fy.abs()) < 1e-12 {
                    converged = true;
                    break;
                }
                let (pa, pb) = self.slopes(x, y);
                // J = [[-1, a pa], [a pb, -1]]
                let det = 1.0 - a * a * pa * pb;
                if det.abs() < 1e-14 {
                    break;
                }
                let dx = (fx + a * pa * fy) / det;
                let dy = (fy + a * pb * fx) / det;
                let mut damp = 1.0;
                let norm0 = fx.abs().max(fy.abs());
                loop {
                    let (nx, ny) = (x + damp * dx, y + damp * dy);
                    let (gx, gy) = self.field(nx, ny);
                    if gx.abs().max(gy.abs()) < norm0 || damp < 1e-6 {
                        x = nx;
                        y = ny;
                        break;
                    }
                    damp *= 0.5;
                }
            }
            if !converged {
                continue;
            }
            if found.iter().any(|e| (e.ua - x).abs() < 1e-8 && (e.ub - y).abs() < 1e-8) {
                continue;
            }
            let (pa, pb) = self.slopes(x, y);
            // eigenvalues -1 ± a sqrt(pa pb)
            let r = a * (pa * pb).sqrt();
            let unstable_dims = u8::from(-1.0 + r > 0.0);
            found.push(SigmoidEquilibrium { ua: x, ub: y, unstable_dims });
        }
        found.sort_by(|p, q| (p.ua + p.ub).total_cmp(&(q.ua + q.ub)));
        found
    }

    fn rk4(&self, u: (f64, f64), h: f64) -> (f64, f64) {
        let k1 = self.field(u.0, u.1);
        let k2 = self.field(u.0 + 0.5 * h * k1.0, u.1 + 0.5 * h * k1.1);
        let k3 = self.field(u.0 + 0.5 * h * k2.0, u.1 + 0.5 * h * k2.1);
        let k4 = self.field(u.0 + h * k3.0, u.1 + h * k3.1);
        (
            u.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            u.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    }

    /// Separatrix through the saddle, traced by backward integration from
    /// the saddle displaced by `1e-4` along its stable eigenvector in both
    /// directions. Each branch stops on leaving the unit square.
    pub fn separatrix(&self) -> Result<[Vec<(f64, f64)>; 2]> {
        let saddle = self
            .equilibria()
            .into_iter()
            .find(|e| e.unstable_dims == 1)
            .ok_or_else(|| Error::Domain("no saddle equilibrium".into()))?;
        let (pa, pb) = self.slopes(saddle.ua, saddle.ub);
        let norm = (pa + pb).sqrt();
        let v = (pa.sqrt() / norm, -pb.sqrt() / norm);
        let h = 1e-3;
        let branch = |sign: f64| {
            let mut u = (saddle.ua + sign * 1e-4 * v.0, saddle.ub + sign * 1e-4 * v.1);
            let mut pts = vec![(saddle.ua, saddle.ub), u];
            for _ in 0..200_000 {
                u = self.rk4(u, -h);
                if !(-1e-9..=1.0 + 1e-9).contains(&u.0) || !(-1e-9..=1.0 + 1e-9).contains(&u.1) {
                    break;
                }
                pts.push(u);
            }
            pts
        };
        Ok([branch(1.0), branch(-1.0)])
    }

    /// Stable equilibrium reached by forward integration, if any.
    pub fn flow_limit(&self, point: (f64, f64), t_max: f64) -> Option<SigmoidEquilibrium> {
        let stable: Vec<_> = self.equilibria().into_iter().filter(|e| e.unstable_dims == 0).collect();
        let mut u = point;
        let h = 1e-2;
        let mut t = 0.0;
        while t < t_max {
            if let Some(e) = stable.iter().find(|e| (e.ua - u.0).abs().max((e.ub - u.1).abs()) < 1e-6) {
                return Some(*e);
            }
            u = self.rk4(u, h);
            t += h;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(f: f64, g: f64, a: f64, b: f64, sa: f64, sb: f64) -> FastContext {
        FastContext { f, g, a, b, theta: 0.5, sa, sb }
    }

    #[test]
    fn equilibria_examples() {
        assert_eq!(fast_equilibria(&ctx(5.5, 0.0, 2.0, 2.8, 1.0, 1.0)), vec![Corner::A_ONLY]);
        assert_eq!(fast_equilibria(&ctx(0.0, 0.0, 0.3, 2.0, 0.0, 0.0)), vec![Corner::OFF]);
        // saddle at (0.7, 0.4) for a = 1
        let c = FastContext { f: 0.1, g: -0.2, a: 1.0, b: 0.0, theta: 0.5, sa: 0.0, sb: 0.0 };
        let s = c.saddle().unwrap();
        assert!((s.s1 - 0.7).abs() < 1e-15 && (s.s2 - 0.4).abs() < 1e-15);
        assert!(s.coexistence());
        assert_eq!(fast_equilibria(&c), vec![Corner::OFF, Corner::ON]);
    }

    #[test]
    fn separatrix_examples() {
        assert!((separatrix(0.7, 0.4, 0.7).unwrap() - 0.4).abs() < 1e-15);
        // (0.4 - 1)/0.7 + 1, evaluated independently
        assert!((separatrix(0.7, 0.4, 1.0).unwrap() - 0.142_857_142_857_142_86).abs() < 1e-12);
        let eps = 1e-9;
        assert!((separatrix(0.7, 0.4, 0.7 - eps).unwrap() - 0.4).abs() < 1e-8);
        assert!((separatrix(0.7, 0.4, 0.7 + eps).unwrap() - 0.4).abs() < 1e-8);
        assert!(separatrix(1.0, 0.4, 0.5).is_err());
        assert!(separatrix(1.2, 0.4, 0.5).is_err());
    }

    #[test]
    fn basin_examples() {
        assert_eq!(basin_label(0.7, 0.4, (0.95, 0.9)).unwrap(), BasinLabel::On);
        assert_eq!(basin_label(0.7, 0.4, (0.05, 0.05)).unwrap(), BasinLabel::Off);
        assert_eq!(basin_label(0.7, 0.4, (0.7, 0.4)).unwrap(), BasinLabel::Boundary);
        assert_eq!(reduced_flow_limit(0.7, 0.4, (0.95, 0.9), 1e-3, 1e-6, 100.0), Some(Corner::ON));
        assert_eq!(reduced_flow_limit(0.7, 0.4, (0.05, 0.05), 1e-3, 1e-6, 100.0), Some(Corner::OFF));
    }

    #[test]
    fn onset_delay_examples() {
        assert_eq!(onset_delay(0.025, 0.0).unwrap(), 0.0);
        let v = onset_delay(0.025, 1.0 - (-1.0f64).exp()).unwrap();
        assert!((v - 0.025).abs() < 1e-15);
        // tau ln 2, evaluated independently
        assert!((onset_delay(0.025, 0.5).unwrap() - 0.017_328_679_513_998_63).abs() < 1e-15);
        assert!(onset_delay(0.025, 1.0).is_err());
    }

    #[test]
    fn sigmoid_mode_has_saddle_between_attractors() {
        let c = FastContext { f: 0.1, g: -0.2, a: 1.0, b: 0.0, theta: 0.5, sa: 0.0, sb: 0.0 };
        let sf = SigmoidFast { ctx: c, lambda: 50.0 };
        let eq = sf.equilibria();
        assert_eq!(eq.len(), 3, "{eq:?}");
        assert_eq!(eq.iter().filter(|e| e.unstable_dims == 1).count(), 1);
        let saddle = eq.iter().find(|e| e.unstable_dims == 1).unwrap();
        assert!((saddle.ua - 0.7).abs() < 0.05 && (saddle.ub - 0.4).abs() < 0.05);
        let branches = sf.separatrix().unwrap();
        assert!(branches.iter().all(|b| b.len() > 10));
        let hi = sf.flow_limit((0.95, 0.9), 200.0).unwrap();
        let lo = sf.flow_limit((0.05, 0.05), 200.0).unwrap();
        assert!(hi.ua > 0.9 && lo.ua < 0.1);
    }

    fn context() -> impl Strategy<Value = FastContext> {
        (-2.0f64..6.0, -2.0f64..6.0, 0.0f64..4.0, 0.0f64..4.0, 0.05f64..0.95, 0.0f64..=1.0, 0.0f64..=1.0)
            .prop_map(|(f, g, a, b, theta, sa, sb)| FastContext { f, g, a, b, theta, sa, sb })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100_000))]
        #[test]
        fn lone_asymmetric_equilibria(c in context()) {
            let eq = fast_equilibria(&c);
            if eq.contains(&Corner::A_ONLY) || eq.contains(&Corner::B_ONLY) {
                prop_assert_eq!(eq.len(), 1);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn basin_matches_reduced_flow(
            s1 in 0.05f64..0.95, s2 in 0.05f64..0.95, ua in 0.0f64..=1.0, ub in 0.0f64..=1.0,
        ) {
            let curve = separatrix(s1, s2, ua).unwrap();
            prop_assume!((ub - curve).abs() > 1e-3);
            let label = basin_label(s1, s2, (ua, ub)).unwrap();
            let limit = reduced_flow_limit(s1, s2, (ua, ub), 1e-3, 1e-6, 100.0);
            let expect = match label {
                BasinLabel::On => Some(Corner::ON),
                BasinLabel::Off => Some(Corner::OFF),
                BasinLabel::Boundary => None,
            };
            prop_assert_eq!(limit, expect);
        }

        #[test]
        fn separatrix_branches_are_affine_and_continuous(
            s1 in 0.05f64..0.95, s2 in 0.05f64..0.95, x in 0.0f64..=1.0, y in 0.0f64..=1.0,
        ) {
            let at = |u: f64| separatrix(s1, s2, u).unwrap();
            prop_assert!((at(s1) - s2).abs() < 1e-12);
            prop_assert!((at(0.0) - s2 / (1.0 - s1)).abs() < 1e-12);
            prop_assert!((at(1.0) - (s2 - 1.0) / s1 - 1.0).abs() < 1e-12);
            // midpoint rule on each branch
            let (p, q) = (x * s1, y * s1);
            prop_assert!((at(0.5 * (p + q)) - 0.5 * (at(p) + at(q))).abs() < 1e-9);
            let (p, q) = (s1 + x * (1.0 - s1), s1 + y * (1.0 - s1));
            prop_assert!((at(0.5 * (p + q)) - 0.5 * (at(p) + at(q))).abs() < 1e-9);
        }
    }
}
