use super::ledger::{k1_formula, ConstantsLedger};
use super::report::{CheckReport, Status};
use super::{require_kappa, require_samples, ForcingNorms};
use crate::dynamics::{interpolate, Quantity, TrajectoryRecord};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct H1EnvelopeCheck {
    pub report: CheckReport,
    /// Smallest `K₁ ≥ 1` with `‖θ(t)‖²_{H¹} ≤ ‖θ₀‖²_{H¹}e^{-c₀κt/4} + K₁`.
    pub k1_needed: f64,
    /// Smallest `c` for which the `K₁` formula reaches `k1_needed`.
    pub c_k1: f64,
    /// Smallest `c` with `∫_t^{t+1}‖θ‖²_{H^{3/2}} ≤ (c/κ)[‖θ₀‖²_{H¹} + K₁]`.
    pub c_h32: f64,
}

/// `H¹` envelope and unit-window `H^{3/2}` integral bound, with `K₁` built
/// from the `C^α` bound `m` and exponent `alpha`.
pub fn h1_envelope_check(
    traj: &TrajectoryRecord,
    ledger: &ConstantsLedger,
    f: ForcingNorms,
    kappa: f64,
    alpha: f64,
    m: f64,
) -> Result<H1EnvelopeCheck> {
    require_kappa(kappa)?;
    require_samples(traj)?;
    let c0 = ledger.c0.value;
    let t_start = traj.first().t;
    let t_end = traj.last().t;
    let h1_0 = traj.first().h1 * traj.first().h1;
    let k1_needed = traj
        .samples
        .iter()
        .map(|s| s.h1 * s.h1 - h1_0 * (-c0 * kappa * (s.t - t_start) / 4.0).exp())
        .fold(1.0f64, f64::max);

    // invert K₁ = (4/(c₀κ))[(cM/κ)^{1/(4α)} + (4/(c₀κ))‖f‖²_{H¹}]
    let growth = k1_needed * c0 * kappa / 4.0 - 4.0 / (c0 * kappa) * f.h1 * f.h1;
    let c_k1 = if growth <= 0.0 {
        0.0
    } else if m > 0.0 {
        kappa / m * growth.powf(4.0 * alpha)
    } else {
        f64::INFINITY
    };
    let k1 = if c_k1 > 0.0 && c_k1.is_finite() {
        k1_formula(c_k1, c0, m, alpha, f.h1, kappa).max(k1_needed)
    } else {
        k1_needed
    };

    let integral = traj.series(Quantity::IntH32);
    let mut c_h32 = 0.0f64;
    let mut windows = 0;
    for s in &traj.samples {
        if s.t + 1.0 > t_end + 1e-12 {
            break;
        }
        let window = interpolate(&integral, s.t + 1.0) - s.int_h32;
        c_h32 = c_h32.max(kappa * window / (h1_0 + k1));
        windows += 1;
    }
    let mut report = CheckReport::new(
        "h1_envelope",
        Status::from_bool(c_k1.is_finite() && c_h32.is_finite()),
        (t_start, t_end),
    )
    .with_constant("k1_needed", k1_needed)
    .with_constant("c_k1", c_k1)
    .with_constant("c_h32", c_h32)
    .with_constant("alpha", alpha)
    .with_constant("M", m);
    if windows == 0 {
        report.notes.push("trajectory shorter than one unit: H^{3/2} window bound not evaluated".into());
    }
    Ok(H1EnvelopeCheck {
        report,
        k1_needed,
        c_k1,
        c_h32,
    })
}
