//! Quantitative checks on trajectories: energy and decay inequalities, the De
//! Giorgi truncation ladder, Hölder bounds, Sobolev envelopes, absorbing-ball
//! entry and continuity growth.
//!
//! Unnamed constants are fitted: each checker reports the extreme constant for
//! which its inequality holds on the data.

mod absorb;
mod continuity;
mod degiorgi;
mod energy;
mod envelope;
mod ledger;
mod regularity;
mod report;
mod sobolev;

pub use absorb::{absorbing_entry_time, EntryReport};
pub use continuity::{continuity_probe, ContinuityReport};
pub use degiorgi::{
    auto_truncation_amplitude, degiorgi_ladder, fit_truncation_prefactor, truncate, DeGiorgiLadder, DeGiorgiParams,
    LadderRung,
};
pub use energy::{
    decay_admissible_c0, energy_inequality_check, fit_c0, linf_estimate_check, EnergyCheck, LinfEstimate,
};
pub use envelope::{fit_decay_envelope, EnvelopeFit};
pub use ledger::{Constant, ConstantsLedger, DEFAULT_C3};
pub use regularity::{
    alpha_choice, fit_c2, gradient_lower_bound_probe, holder_bound_check, nonlinear_lower_bound_probe, psi_series,
    t_alpha, xi_ode_residual, xi_profile, HolderBoundCheck, LowerBoundProbe,
};
pub use report::{read_series_csv, render_reports, write_series_csv, CheckReport, Status};
pub use sobolev::{h1_envelope_check, H1EnvelopeCheck};

use crate::dynamics::TrajectoryRecord;
use crate::error::{Result, SqgError};
use crate::field::SpectralField;

/// Norms of the forcing that enter the estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingNorms {
    pub l2: f64,
    pub linf: f64,
    pub h1: f64,
}

impl ForcingNorms {
    pub fn of(f: &SpectralField) -> Self {
        use crate::operators::{hs_norm, linf_norm};
        Self {
            l2: hs_norm(f, 0.0),
            linf: linf_norm(f, 1),
            h1: hs_norm(f, 1.0),
        }
    }

    pub fn zero() -> Self {
        Self {
            l2: 0.0,
            linf: 0.0,
            h1: 0.0,
        }
    }
}

pub(crate) fn require_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(crate::error::invalid(
            "kappa",
            format!("{kappa}: the inequality checks need kappa > 0"),
        ))
    }
}

pub(crate) fn require_samples(traj: &TrajectoryRecord) -> Result<()> {
    if traj.samples.is_empty() {
        Err(SqgError::InsufficientData("trajectory has no samples".into()))
    } else {
        Ok(())
    }
}

/// `(a - b) / b` with `0/0 = 0` and `x/0 = ∞` for `x > 0`.
pub(crate) fn relative_excess(lhs: f64, rhs: f64) -> f64 {
    let d = lhs - rhs;
    if rhs > 0.0 {
        d / rhs
    } else if d <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}
