use super::report::{CheckReport, Status};
use super::ForcingNorms;
use crate::error::{invalid, Result};

/// A constant with the time range of the data it was fitted on, or `None`
/// when it was configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub value: f64,
    pub fitted_on: Option<(f64, f64)>,
}

impl Constant {
    pub fn configured(value: f64) -> Self {
        Self {
            value,
            fitted_on: None,
        }
    }

    pub fn fitted(value: f64, range: (f64, f64)) -> Self {
        Self {
            value,
            fitted_on: Some(range),
        }
    }
}

/// Values standing in for the unnamed constants of the estimates, plus the
/// radii derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsLedger {
    /// Decay rate in the energy and decay inequalities.
    pub c0: Constant,
    /// Prefactor of the `L∞` estimate for `t ≥ 1`.
    pub c_linf: Option<Constant>,
    /// Prefactor of the truncation amplitude `M`, fitted on the window of the
    /// level-set ladder.
    pub c_dg: Option<Constant>,
    /// Prefactor of the `C^α` bound.
    pub c_holder: Option<Constant>,
    /// Constant inside `K₁`.
    pub c_h1: Option<Constant>,
    /// Prefactor of the `H^{3/2}` time-integral bound.
    pub c_h32: Option<Constant>,
    /// Nonlinear lower bound constant.
    pub c2: Option<Constant>,
    /// Constant in the choice of `α`, at least 64.
    pub c3: f64,
    /// Gradient lower bound constant.
    pub c4: Option<Constant>,
}

pub const DEFAULT_C3: f64 = 64.0;

impl ConstantsLedger {
    pub fn new(c0: Constant) -> Result<Self> {
        if !(c0.value > 0.0) {
            return Err(invalid("c0", format!("{} must be positive", c0.value)));
        }
        Ok(Self {
            c0,
            c_linf: None,
            c_dg: None,
            c_holder: None,
            c_h1: None,
            c_h32: None,
            c2: None,
            c3: DEFAULT_C3,
            c4: None,
        })
    }

    pub fn with_c3(mut self, c3: f64) -> Result<Self> {
        if !(c3 >= DEFAULT_C3 && c3.is_finite()) {
            return Err(invalid("c3", format!("{c3} is below 64")));
        }
        self.c3 = c3;
        Ok(self)
    }

    /// `K∞ = ‖θ₀‖_{L∞} + ‖f‖_{L∞}/(c₀κ)`.
    pub fn k_inf(&self, theta0_linf: f64, f: ForcingNorms, kappa: f64) -> f64 {
        theta0_linf + f.linf / (self.c0.value * kappa)
    }

    /// Radius of the `L∞` absorbing ball, `2‖f‖_{L∞}/(c₀κ)`.
    pub fn b_inf_radius(&self, f: ForcingNorms, kappa: f64) -> f64 {
        2.0 * f.linf / (self.c0.value * kappa)
    }

    /// `c₁ = max(1, 4c/c₀)` with `c` the Hölder prefactor.
    pub fn c1(&self) -> Option<f64> {
        self.c_holder.map(|c| (4.0 * c.value / self.c0.value).max(1.0))
    }

    /// Radius of the `C^α` absorbing ball, `c₁‖f‖_{L∞}/κ`.
    pub fn b_alpha_radius(&self, f: ForcingNorms, kappa: f64) -> Option<f64> {
        self.c1().map(|c1| c1 * f.linf / kappa)
    }

    /// `K₁ = (4/(c₀κ))[(cM/κ)^{1/(4α)} + (4/(c₀κ))‖f‖²_{H¹}]`, floored at 1.
    pub fn k1(&self, m: f64, alpha: f64, f: ForcingNorms, kappa: f64) -> Option<f64> {
        let c = self.c_h1?.value;
        Some(k1_formula(c, self.c0.value, m, alpha, f.h1, kappa))
    }

    /// `C^α` bound along trajectories started in the `C^α` ball.
    pub fn calpha_ball_bound(&self, f: ForcingNorms, kappa: f64) -> Option<f64> {
        let c = self.c_holder?.value;
        let r = self.b_alpha_radius(f, kappa)?;
        Some(c * (r + f.linf / (self.c0.value * kappa)))
    }

    /// `R₁² = 2K₁ + (2c₁‖f‖_{L∞}/κ)²` with `K₁` evaluated at the `C^α` ball bound.
    pub fn r1_sq(&self, alpha: f64, f: ForcingNorms, kappa: f64) -> Option<f64> {
        let m = self.calpha_ball_bound(f, kappa)?;
        let k1 = self.k1(m, alpha, f, kappa)?;
        let c1 = self.c1()?;
        Some(2.0 * k1 + (2.0 * c1 * f.linf / kappa).powi(2))
    }

    /// `R₂² = [2R₁² + ‖f‖²_{H¹}/κ]·e^{(c/κ)R₁²}`; may overflow to `+∞`.
    pub fn r2_sq(&self, alpha: f64, f: ForcingNorms, kappa: f64) -> Option<f64> {
        let r1 = self.r1_sq(alpha, f, kappa)?;
        let c = self.c_h32?.value;
        Some((2.0 * r1 + f.h1 * f.h1 / kappa) * (c / kappa * r1).exp())
    }

    pub fn to_report(&self) -> CheckReport {
        let mut r = CheckReport::new("constants_ledger", Status::Fitted, self.c0.fitted_on.unwrap_or((0.0, 0.0)));
        let mut push = |name: &str, c: Option<Constant>| {
            if let Some(c) = c {
                r.constants.push((name.to_string(), c.value));
                if let Some((a, b)) = c.fitted_on {
                    r.notes.push(format!("{name} fitted on [{a}, {b}]"));
                } else {
                    r.notes.push(format!("{name} configured"));
                }
            }
        };
        push("c0", Some(self.c0));
        push("c_linf", self.c_linf);
        push("c_dg", self.c_dg);
        push("c_holder", self.c_holder);
        push("c_h1", self.c_h1);
        push("c_h32", self.c_h32);
        push("c2", self.c2);
        push("c3", Some(Constant::configured(self.c3)));
        push("c4", self.c4);
        r
    }
}

pub(crate) fn k1_formula(c: f64, c0: f64, m: f64, alpha: f64, f_h1: f64, kappa: f64) -> f64 {
    let growth = (c * m / kappa).powf(1.0 / (4.0 * alpha));
    let k1 = 4.0 / (c0 * kappa) * (growth + 4.0 / (c0 * kappa) * f_h1 * f_h1);
    k1.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn forcing() -> ForcingNorms {
        ForcingNorms {
            l2: 0.1 / 2f64.sqrt(),
            linf: 0.1,
            h1: 0.2 * PI / 2f64.sqrt(),
        }
    }

    #[test]
    fn radii_follow_formulas() {
        let mut l = ConstantsLedger::new(Constant::configured(2.0 * PI)).unwrap();
        let f = forcing();
        assert!((l.b_inf_radius(f, 1.0) - 0.2 / (2.0 * PI)).abs() < 1e-15);
        assert!((l.k_inf(1.0, f, 0.5) - (1.0 + 0.1 / PI)).abs() < 1e-15);
        assert!(l.b_alpha_radius(f, 1.0).is_none());
        l.c_holder = Some(Constant::configured(4.0 * PI));
        assert_eq!(l.c1(), Some(8.0));
        assert!((l.b_alpha_radius(f, 1.0).unwrap() - 0.8).abs() < 1e-15);
        l.c_h1 = Some(Constant::configured(1.0));
        l.c_h32 = Some(Constant::configured(1e-3));
        let r1 = l.r1_sq(0.25, f, 1.0).unwrap();
        assert!(r1 >= 2.0);
        assert!(l.r2_sq(0.25, f, 1.0).unwrap() > 2.0 * r1);
    }

    #[test]
    fn c3_floor_and_positive_c0() {
        let l = ConstantsLedger::new(Constant::configured(1.0)).unwrap();
        assert!(l.clone().with_c3(32.0).is_err());
        assert_eq!(l.with_c3(128.0).unwrap().c3, 128.0);
        assert!(ConstantsLedger::new(Constant::configured(0.0)).is_err());
    }

    #[test]
    fn k1_is_at_least_one() {
        assert_eq!(k1_formula(1e-6, 2.0 * PI, 1.0, 0.25, 0.0, 1.0), 1.0);
        let big = k1_formula(10.0, 1.0, 1.0, 0.25, 0.0, 1.0);
        assert!((big - 40.0).abs() < 1e-12);
    }
}
