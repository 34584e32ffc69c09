use crate::dynamics::{cfl_dt, step, DtPolicy, SolverConfig, SolverState};
use crate::error::{invalid, Result};
use crate::field::SpectralField;
use crate::operators::hs_norm;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// `(t, ‖S(t)θ_a - S(t)θ_b‖_{H¹}/‖θ_a - θ_b‖_{H¹})`.
    pub ratio: Vec<(f64, f64)>,
    /// Smallest `Λ_L` with `ratio(t) ≤ e^{Λ_L t}` at every sample.
    pub lambda_l: f64,
    pub initial_distance: f64,
}

/// Evolves two data with identical step sequences and records the growth of
/// their `H¹` distance.
pub fn continuity_probe(
    config: &SolverConfig,
    theta_a: &SpectralField,
    theta_b: &SpectralField,
    duration: f64,
) -> Result<ContinuityReport> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid("T", format!("{duration} must be positive")));
    }
    let d0 = hs_norm(&theta_a.sub(theta_b)?, 1.0);
    if d0 == 0.0 {
        return Ok(ContinuityReport {
            ratio: vec![(0.0, 1.0), (duration, 1.0)],
            lambda_l: 0.0,
            initial_distance: 0.0,
        });
    }
    let mut a = SolverState::new(theta_a.clone());
    let mut b = SolverState::new(theta_b.clone());
    let mut ratio = vec![(0.0, 1.0)];
    let mut steps = 0u64;
    while a.t < duration * (1.0 - 1e-12) {
        let dt = match config.dt {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl { .. } => cfl_dt(&a, config).min(cfl_dt(&b, config)),
        }
        .min(duration - a.t);
        a = step(config, &a, dt)?;
        b = step(config, &b, dt)?;
        steps += 1;
        let last = a.t >= duration * (1.0 - 1e-12);
        if last || steps % config.sampling.every == 0 {
            ratio.push((a.t, hs_norm(&a.theta.sub(&b.theta)?, 1.0) / d0));
        }
    }
    let lambda_l = ratio
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .map(|(t, r)| r.ln() / t)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ContinuityReport {
        ratio,
        lambda_l,
        initial_distance: d0,
    })
}
