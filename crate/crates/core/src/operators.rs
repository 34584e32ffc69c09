//! Fourier-multiplier operators and norms on zero-mean fields.
//!
//! `Λ = (-Δ)^{1/2}` has symbol `2π|k|`. All norms are homogeneous; since every
//! [`SpectralField`] has zero mean, they coincide with the inhomogeneous ones
//! up to the usual equivalence.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::field::SpectralField;

/// `Λ^s θ` for `s ∈ [-2, 2]`.
pub fn fractional_laplacian(field: &SpectralField, s: f64) -> Result<SpectralField> {
    if !(-2.0..=2.0).contains(&s) {
        return Err(invalid("s", format!("power {s} outside [-2, 2]")));
    }
    if s == 0.0 {
        return Ok(field.clone());
    }
    let grid = field.grid();
    Ok(field.map_real_symbol(|i| grid.lambda(i).powf(s)))
}

/// Velocity `u = ∇^⊥ Λ^{-1} θ = (-R₂θ, R₁θ)`:
/// `û₁ = -i (k₂/|k|) θ̂`, `û₂ = i (k₁/|k|) θ̂`.
pub fn riesz_velocity(theta: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = theta.grid();
    let n = grid.n();
    let ratio = move |idx: usize, which: usize| {
        if idx == 0 {
            return 0.0;
        }
        let (a, b) = (idx / n, idx % n);
        let k1 = grid.derivative_wavenumber(a);
        let k2 = grid.derivative_wavenumber(b);
        let norm = (k1 * k1 + k2 * k2).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        if which == 1 {
            -k2 / norm
        } else {
            k1 / norm
        }
    };
    let u1 = theta.map_imag_symbol(|i| ratio(i, 1));
    let u2 = theta.map_imag_symbol(|i| ratio(i, 2));
    (u1, u2)
}

/// Spectral derivative `∂_j θ` (`axis` 0 for `x₁`, 1 for `x₂`).
pub fn derivative(field: &SpectralField, axis: usize) -> SpectralField {
    let grid = field.grid();
    let n = grid.n();
    field.map_imag_symbol(|idx| {
        let a = if axis == 0 { idx / n } else { idx % n };
        2.0 * PI * grid.derivative_wavenumber(a)
    })
}

pub fn gradient(field: &SpectralField) -> (SpectralField, SpectralField) {
    (derivative(field, 0), derivative(field, 1))
}

/// `(Σ_k (2π|k|)^{2s} |θ̂_k|²)^{1/2}`; `s = 0` is the `L²` norm.
pub fn hs_norm(field: &SpectralField, s: f64) -> f64 {
    hs_norm_sq(field, s).sqrt()
}

pub fn hs_norm_sq(field: &SpectralField, s: f64) -> f64 {
    let grid = field.grid();
    if s == 0.0 {
        return field.coeffs().iter().map(|c| c.norm_sqr()).sum();
    }
    let twice = 2.0 * s;
    let weight = |l: f64| {
        if twice == twice.round() && twice.abs() <= 8.0 {
            l.powi(twice as i32)
        } else if (2.0 * twice) == (2.0 * twice).round() && twice.abs() <= 8.0 {
            l.sqrt().powi((2.0 * twice) as i32)
        } else {
            l.powf(twice)
        }
    };
    field
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| weight(grid.lambda(i)) * c.norm_sqr())
        .sum()
}

pub fn l2_norm(field: &SpectralField) -> f64 {
    hs_norm(field, 0.0)
}

/// Maximum of `|θ|` over the grid. This approximates the true supremum from
/// below; pass `oversample > 1` to evaluate on a refined grid.
pub fn linf_norm(field: &SpectralField, oversample: usize) -> f64 {
    field
        .to_samples_oversampled(oversample)
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Max-norm of the Fourier divergence `|k·û(k)|` of a velocity pair.
pub fn spectral_divergence(u1: &SpectralField, u2: &SpectralField) -> f64 {
    let grid = u1.grid();
    u1.coeffs()
        .iter()
        .zip(u2.coeffs())
        .enumerate()
        .map(|(i, (a, b))| {
            let (k1, k2) = grid.mode(i);
            (a * (2.0 * PI * k1 as f64) + b * (2.0 * PI * k2 as f64)).norm()
        })
        .fold(0.0, f64::max)
}
