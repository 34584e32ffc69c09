use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ledger::ConstantsLedger;
use super::report::{CheckReport, Status};
use super::{require_kappa, ForcingNorms};
use crate::dissipation::DissipationQuadrature;
use crate::dynamics::TrajectoryRecord;
use crate::error::{invalid, Result, SqgError};
use crate::field::SpectralField;
use crate::holder::{holder_seminorm, HolderProbeConfig};
use crate::operators::{gradient, linf_norm};
use rustfft::num_complex::Complex64;

/// `α = min{κ/(c₃K∞), 1/4}`.
pub fn alpha_choice(k_inf: f64, kappa: f64, c3: f64) -> Result<f64> {
    if !(k_inf > 0.0) {
        return Err(invalid("K_inf", format!("{k_inf} must be positive")));
    }
    if !(c3 >= 64.0) {
        return Err(invalid("c3", format!("{c3} is below 64")));
    }
    require_kappa(kappa)?;
    Ok((kappa / (c3 * k_inf)).min(0.25))
}

/// `t_α = 3/(2(1-α))·ξ₀^{2(1-α)/3}`.
pub fn t_alpha(alpha: f64, xi0: f64) -> f64 {
    if xi0 == 0.0 {
        return 0.0;
    }
    3.0 / (2.0 * (1.0 - alpha)) * xi0.powf(2.0 * (1.0 - alpha) / 3.0)
}

/// `ξ(t) = [ξ₀^{2(1-α)/3} - (2/3)(1-α)t]^{3/(2(1-α))}` up to `t_α`, then 0.
pub fn xi_profile(t: f64, alpha: f64, xi0: f64) -> f64 {
    if xi0 == 0.0 || t >= t_alpha(alpha, xi0) {
        return 0.0;
    }
    let base = xi0.powf(2.0 * (1.0 - alpha) / 3.0) - 2.0 / 3.0 * (1.0 - alpha) * t.max(0.0);
    base.max(0.0).powf(3.0 / (2.0 * (1.0 - alpha)))
}

/// Largest `|ξ̇ + ξ^{(1+2α)/3}|` on `points` interior times of `[0, t_α)`,
/// with a fourth-order central difference.
pub fn xi_ode_residual(alpha: f64, xi0: f64, points: usize) -> f64 {
    let ta = t_alpha(alpha, xi0);
    if ta == 0.0 {
        return 0.0;
    }
    let h = 1e-3 * ta;
    let p = (1.0 + 2.0 * alpha) / 3.0;
    let xi = |t: f64| xi_profile(t, alpha, xi0);
    (1..=points)
        .map(|i| {
            let t = 2.0 * h + (0.9 * ta - 2.0 * h) * i as f64 / points as f64;
            let d = (-xi(t + 2.0 * h) + 8.0 * xi(t + h) - 8.0 * xi(t - h) + xi(t - 2.0 * h)) / (12.0 * h);
            (d + xi(t).powf(p)).abs()
        })
        .fold(0.0, f64::max)
}

fn selected_snapshots(traj: &TrajectoryRecord, max: usize) -> Vec<(f64, &SpectralField)> {
    let all: Vec<(f64, &SpectralField)> = traj.snapshots().collect();
    if max == 0 || all.len() <= max {
        return all;
    }
    let stride = all.len().div_ceil(max);
    let mut out: Vec<_> = all.iter().step_by(stride).copied().collect();
    if out.last().map(|s| s.0) != all.last().map(|s| s.0) {
        out.push(*all.last().unwrap());
    }
    out
}

/// `ψ(t) = sup_{x,h} v(x,t;h)²` with `ξ(t)` from [`xi_profile`], on stored
/// snapshots (at most `max_snapshots`, evenly strided; 0 keeps all).
pub fn psi_series(
    traj: &TrajectoryRecord,
    probe: &HolderProbeConfig,
    xi0: f64,
    max_snapshots: usize,
) -> Result<Vec<(f64, f64)>> {
    let t_start = traj.samples.first().map(|s| s.t).unwrap_or(0.0);
    selected_snapshots(traj, max_snapshots)
        .into_iter()
        .map(|(t, field)| {
            let xi = xi_profile(t - t_start, probe.alpha(), xi0);
            let v = holder_seminorm(field, &probe.with_xi(xi)?)?;
            Ok((t, v * v))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderBoundCheck {
    pub report: CheckReport,
    pub alpha: f64,
    pub t_alpha: f64,
    /// `sup_{t≥t_α}[θ(t)]_{C^α}`.
    pub sup_seminorm: f64,
    /// Smallest `c` with `[θ(t)]_{C^α} ≤ c[‖θ₀‖_{L∞} + ‖f‖_{L∞}/(c₀κ)]` for `t ≥ t_α`.
    pub c_fitted: f64,
    /// Smallest `c` with `‖θ(t)‖_{C^α} ≤ [θ₀]_{C^α} + c[...]` for all sampled `t`.
    pub c_propagation: f64,
    pub psi: Vec<(f64, f64)>,
    /// `ξ = 0` seminorm per probed snapshot.
    pub seminorm: Vec<(f64, f64)>,
    /// `ψ(0) ≤ 4‖θ₀‖²_{L∞}/ξ₀^{2α}`.
    pub psi0_within_bound: bool,
}

/// Hölder bound after the regularization time, and its propagation form from
/// `t = 0`.
#[allow(clippy::too_many_arguments)]
pub fn holder_bound_check(
    traj: &TrajectoryRecord,
    probe: &HolderProbeConfig,
    xi0: f64,
    ledger: &ConstantsLedger,
    f: ForcingNorms,
    kappa: f64,
    max_snapshots: usize,
) -> Result<HolderBoundCheck> {
    require_kappa(kappa)?;
    let alpha = probe.alpha();
    let t_start = traj.samples.first().map(|s| s.t).unwrap_or(0.0);
    let ta = t_alpha(alpha, xi0);
    let snaps = selected_snapshots(traj, max_snapshots);
    let Some(&(first_t, theta0)) = snaps.first() else {
        return Err(SqgError::InsufficientData("no snapshots stored".into()));
    };
    if first_t > t_start + 1e-12 {
        return Err(SqgError::InsufficientData("initial snapshot missing".into()));
    }
    if !snaps.iter().any(|(t, _)| *t - t_start >= ta) {
        return Err(SqgError::InsufficientData(format!(
            "no snapshot at or after t_alpha = {ta}"
        )));
    }
    let zero_xi = probe.with_xi(0.0)?;
    let k0 = linf_norm(theta0, 1) + f.linf / (ledger.c0.value * kappa);
    let semi0 = holder_seminorm(theta0, &zero_xi)?;

    let mut psi = Vec::with_capacity(snaps.len());
    let mut seminorm = Vec::with_capacity(snaps.len());
    let (mut sup_semi, mut c_prop) = (0.0f64, 0.0f64);
    let mut psi0 = 0.0;
    for (i, &(t, field)) in snaps.iter().enumerate() {
        let rel = t - t_start;
        let xi = xi_profile(rel, alpha, xi0);
        let semi = holder_seminorm(field, &zero_xi)?;
        let v = if xi == 0.0 { semi } else { holder_seminorm(field, &probe.with_xi(xi)?)? };
        psi.push((t, v * v));
        seminorm.push((t, semi));
        if i == 0 {
            psi0 = v * v;
        }
        if rel >= ta {
            sup_semi = sup_semi.max(semi);
        }
        c_prop = c_prop.max(linf_norm(field, 1) + semi - semi0);
    }
    let ratio = |x: f64| if k0 > 0.0 { x / k0 } else if x > 0.0 { f64::INFINITY } else { 0.0 };
    let c_fitted = ratio(sup_semi);
    let c_propagation = ratio(c_prop.max(0.0));
    let theta0_linf = linf_norm(theta0, 1);
    let psi0_bound = if xi0 > 0.0 {
        4.0 * theta0_linf * theta0_linf / xi0.powf(2.0 * alpha)
    } else {
        f64::INFINITY
    };
    let psi0_within_bound = psi0 <= psi0_bound * (1.0 + 1e-12);
    let ok = c_fitted.is_finite() && c_propagation.is_finite() && psi0_within_bound;
    let end = snaps.last().map(|s| s.0).unwrap_or(first_t);
    let report = CheckReport::new("holder_bound", Status::from_bool(ok), (t_start + ta, end))
        .with_constant("alpha", alpha)
        .with_constant("t_alpha", ta)
        .with_constant("c_holder", c_fitted)
        .with_constant("c_propagation", c_propagation)
        .with_constant("sup_seminorm", sup_semi)
        .with_note(format!("probe: {}", probe.describe()))
        .with_note(format!("{} snapshots", snaps.len()));
    Ok(HolderBoundCheck {
        report,
        alpha,
        t_alpha: ta,
        sup_seminorm: sup_semi,
        c_fitted,
        c_propagation,
        psi,
        seminorm,
        psi0_within_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundProbe {
    /// `D[δ_hθ](x)/(ξ² + |h|²)^α`.
    pub lhs: f64,
    /// `|v|³/(‖θ‖_{L∞}(ξ² + |h|²)^{(1-α)/2})`.
    pub rhs_core: f64,
    pub c2_est: f64,
}

fn shifted_difference(theta: &SpectralField, h: (i64, i64)) -> Result<SpectralField> {
    let grid = theta.grid();
    let n = grid.n() as f64;
    let coeffs = theta
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = grid.mode(i);
            let phase = 2.0 * std::f64::consts::PI * (k1 * h.0 + k2 * h.1) as f64 / n;
            c * (Complex64::from_polar(1.0, phase) - 1.0)
        })
        .collect();
    SpectralField::from_coefficients(grid, coeffs)
}

/// Compares both sides of the nonlinear lower bound for `D[δ_hθ]` at grid
/// point `x` and shift `h` (in grid cells).
pub fn nonlinear_lower_bound_probe(
    theta: &SpectralField,
    quad: &DissipationQuadrature,
    x: usize,
    h: (i64, i64),
    alpha: f64,
    xi: f64,
) -> Result<LowerBoundProbe> {
    let grid = theta.grid();
    if x >= grid.len() {
        return Err(invalid("x", format!("index {x} outside the grid")));
    }
    let diff = shifted_difference(theta, h)?;
    let dx = diff.to_samples()[x];
    let scale = theta.to_samples().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if dx.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(invalid("h", "degenerate probe: difference vanishes at x"));
    }
    let dist = grid.torus_distance(h.0, h.1);
    let w = xi * xi + dist * dist;
    let lhs = quad.density_at(&diff, x)? / w.powf(alpha);
    let v = dx.abs() / w.powf(alpha / 2.0);
    let rhs_core = v.powi(3) / (scale * w.powf((1.0 - alpha) / 2.0));
    let c2_est = if lhs > 0.0 { rhs_core / lhs } else { f64::INFINITY };
    Ok(LowerBoundProbe { lhs, rhs_core, c2_est })
}

/// Largest `c₂` estimate over `count` random `(x, h)` with `|h| ≤ 1/4`.
pub fn fit_c2(theta: &SpectralField, alpha: f64, xi: f64, count: usize, seed: u64) -> Result<f64> {
    let grid = theta.grid();
    let quad = DissipationQuadrature::new(grid);
    let n = grid.n() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut used = 0;
    let mut attempts = 0;
    while used < count && attempts < 20 * count {
        attempts += 1;
        let x = rng.gen_range(0..grid.len());
        let h = (rng.gen_range(-n / 4..=n / 4), rng.gen_range(-n / 4..=n / 4));
        if h == (0, 0) {
            continue;
        }
        match nonlinear_lower_bound_probe(theta, &quad, x, h, alpha, xi) {
            Ok(p) => {
                best = best.max(p.c2_est);
                used += 1;
            }
            Err(SqgError::InvalidParameter { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if used == 0 {
        return Err(SqgError::InsufficientData("every probe was degenerate".into()));
    }
    Ok(best)
}

/// Largest `|∇θ|^{(3-α)/(1-α)} / (M^{1/(1-α)}·D[∇θ])` over grid points with
/// `D[∇θ] > 0`.
pub fn gradient_lower_bound_probe(theta: &SpectralField, alpha: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(invalid("M", format!("{m} must be positive")));
    }
    let quad = DissipationQuadrature::new(theta.grid());
    let d = quad.gradient_density_field(theta)?;
    let (g1, g2) = gradient(theta);
    let (a, b) = (g1.to_samples(), g2.to_samples());
    let p = (3.0 - alpha) / (1.0 - alpha);
    let denom = m.powf(1.0 / (1.0 - alpha));
    Ok(d.iter()
        .zip(a.iter().zip(&b))
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, (x, y))| (x * x + y * y).sqrt().powf(p) / (denom * d))
        .fold(0.0, f64::max))
}
