//! Quadrature for the nonlocal dissipation density
//! `D[φ](x) = c ∫_{ℝ²} [φ(x) - φ(x+y)]² / |y|³ dy`, `c = 1/(2π)`.
//!
//! With this `c`, `½∫_{T²} D[φ] = ∫ φ Λφ`, the quadratic form of `Λ` with
//! symbol `2π|k|`. The integral over the plane is split three ways:
//!
//! * a smooth radial taper `χ` (1 inside `taper_start`, 0 beyond `taper_end`)
//!   whose lattice sum is folded onto the torus, giving weights `W_j`;
//! * a Gaussian-windowed second-order Taylor correction for the `1/|y|`
//!   singular cell, `(y·∇φ(x))²`, summed on the grid and replaced by its exact
//!   integral;
//! * the far field beyond the taper, where `[φ(x) - φ(x+y)]²` is replaced by
//!   its torus average `φ(x)² - 2φ(x)φ̄ + ⟨φ²⟩` and integrated exactly.
//!
//! Because the folded weights live on the torus, the full density field is a
//! pair of circular convolutions and costs two FFTs per field.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fft;
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::operators::{derivative, hs_norm_sq};

/// Normalization of `D` for `Λ = (-Δ)^{1/2}` in two dimensions.
pub const DISSIPATION_CONSTANT: f64 = 1.0 / (2.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureParams {
    /// Radius (torus periods) where the taper starts.
    pub taper_start: f64,
    /// Radius where the taper reaches zero; offsets up to here are summed.
    pub taper_end: f64,
    /// Gaussian width of the singular-cell correction, in grid cells.
    pub sigma_cells: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self {
            taper_start: 1.0,
            taper_end: 3.0,
            sigma_cells: 3.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DissipationQuadrature {
    grid: TorusGrid,
    params: QuadratureParams,
    weights: Vec<f64>,
    weight_sum: f64,
    /// Unnormalized DFT of the folded weights (real: the weights are even).
    weight_symbol: Vec<f64>,
    /// Discrete second moments `Σ S(y) y_a y_b` of the windowed singular kernel.
    taylor: [f64; 3],
    /// Exact integral coefficient of `|∇φ(x)|²` for the windowed kernel.
    taylor_exact: f64,
    /// `c ∫ (1-χ)/|y|³ dy`.
    far: f64,
}

fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

impl DissipationQuadrature {
    pub fn new(grid: TorusGrid) -> Self {
        Self::with_params(grid, QuadratureParams::default()).expect("default params are valid")
    }

    pub fn with_params(grid: TorusGrid, params: QuadratureParams) -> Result<Self> {
        if !(params.taper_start > 0.0 && params.taper_end > params.taper_start) {
            return Err(invalid("taper", "need 0 < taper_start < taper_end"));
        }
        if !(params.sigma_cells > 0.0 && params.sigma_cells.is_finite()) {
            return Err(invalid("sigma_cells", "must be positive"));
        }
        let n = grid.n();
        let h = grid.spacing();
        let c = DISSIPATION_CONSTANT;
        let (r0, r1) = (params.taper_start, params.taper_end);
        let taper = |r: f64| 1.0 - smooth_step((r - r0) / (r1 - r0));

        let reach = (r1 * n as f64).ceil() as i64;
        let mut weights = vec![0.0; grid.len()];
        for p in -reach..=reach {
            let row = p.rem_euclid(n as i64) as usize * n;
            for q in -reach..=reach {
                if p == 0 && q == 0 {
                    continue;
                }
                let r = ((p * p + q * q) as f64).sqrt() * h;
                if r >= r1 {
                    continue;
                }
                weights[row + q.rem_euclid(n as i64) as usize] += c * h * h * taper(r) / (r * r * r);
            }
        }
        let weight_sum = weights.iter().sum();

        let plan = fft::plan(n);
        let mut buf: Vec<Complex64> = weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
        plan.forward(&mut buf);
        let weight_symbol = buf.iter().map(|z| z.re).collect();

        // the window shrinks on coarse grids so it stays well inside the torus
        let sigma = params.sigma_cells.min(n as f64 / 8.0) * h;
        let half = n as i64 / 2;
        let mut taylor = [0.0; 3];
        for p in -half..half {
            for q in -half..half {
                if p == 0 && q == 0 {
                    continue;
                }
                let (y1, y2) = (p as f64 * h, q as f64 * h);
                let r = (y1 * y1 + y2 * y2).sqrt();
                let w = c * h * h * (-(r / sigma).powi(2)).exp() / (r * r * r);
                taylor[0] += w * y1 * y1;
                taylor[1] += w * y1 * y2;
                taylor[2] += w * y2 * y2;
            }
        }
        let taylor_exact = c * PI * sigma * PI.sqrt() / 2.0;

        // ∫_{r0}^{∞} (1-χ(r))/r² dr by composite Simpson on the taper + exact tail.
        let m = 4000;
        let dr = (r1 - r0) / m as f64;
        let integrand = |r: f64| (1.0 - taper(r)) / (r * r);
        let mut simpson = integrand(r0) + integrand(r1);
        for i in 1..m {
            let r = r0 + i as f64 * dr;
            simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(r);
        }
        let far = c * 2.0 * PI * (simpson * dr / 3.0 + 1.0 / r1);

        Ok(Self {
            grid,
            params,
            weights,
            weight_sum,
            weight_symbol,
            taylor,
            taylor_exact,
            far,
        })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn params(&self) -> QuadratureParams {
        self.params
    }

    /// `D[φ]` at grid point `idx` by direct summation over torus offsets.
    pub fn density_at(&self, phi: &SpectralField, idx: usize) -> Result<f64> {
        self.check(phi)?;
        let samples = phi.to_samples();
        let g1 = derivative(phi, 0).to_samples()[idx];
        let g2 = derivative(phi, 1).to_samples()[idx];
        Ok(self.density_from_samples(&samples, idx, g1, g2))
    }

    fn density_from_samples(&self, s: &[f64], idx: usize, g1: f64, g2: f64) -> f64 {
        let n = self.grid.n();
        let (i1, i2) = (idx / n, idx % n);
        let center = s[idx];
        let mut sum = 0.0;
        for a in 0..n {
            let row = ((i1 + a) % n) * n;
            let wrow = a * n;
            for b in 0..n {
                let d = s[row + (i2 + b) % n] - center;
                sum += self.weights[wrow + b] * d * d;
            }
        }
        let (mean, mean_sq) = moments(s);
        self.finish(sum, center, g1, g2, mean, mean_sq)
    }

    fn finish(&self, lattice: f64, center: f64, g1: f64, g2: f64, mean: f64, mean_sq: f64) -> f64 {
        let taylor = g1 * g1 * self.taylor[0] + 2.0 * g1 * g2 * self.taylor[1] + g2 * g2 * self.taylor[2];
        let far_avg = center * center - 2.0 * center * mean + mean_sq;
        lattice - taylor + self.taylor_exact * (g1 * g1 + g2 * g2) + self.far * far_avg
    }

    /// `D[φ]` at every grid point.
    pub fn density_field(&self, phi: &SpectralField) -> Result<Vec<f64>> {
        self.check(phi)?;
        let s = phi.to_samples();
        let g1 = derivative(phi, 0).to_samples();
        let g2 = derivative(phi, 1).to_samples();
        let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
        let conv_s = self.correlate(&s);
        let conv_sq = self.correlate(&sq);
        let (mean, mean_sq) = moments(&s);
        Ok((0..s.len())
            .map(|i| {
                let lattice = s[i] * s[i] * self.weight_sum - 2.0 * s[i] * conv_s[i] + conv_sq[i];
                self.finish(lattice, s[i], g1[i], g2[i], mean, mean_sq)
            })
            .collect())
    }

    /// `Σ_j W_j f(x + y_j)` for every grid point `x`.
    fn correlate(&self, f: &[f64]) -> Vec<f64> {
        let plan = fft::plan(self.grid.n());
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan.forward(&mut buf);
        let norm = 1.0 / self.grid.len() as f64;
        for (z, w) in buf.iter_mut().zip(&self.weight_symbol) {
            *z *= w * norm;
        }
        plan.inverse(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// `D[∇φ] = D[∂₁φ] + D[∂₂φ]` at every grid point.
    pub fn gradient_density_field(&self, phi: &SpectralField) -> Result<Vec<f64>> {
        let d1 = self.density_field(&derivative(phi, 0))?;
        let d2 = self.density_field(&derivative(phi, 1))?;
        Ok(d1.into_iter().zip(d2).map(|(a, b)| a + b).collect())
    }

    fn check(&self, phi: &SpectralField) -> Result<()> {
        if phi.grid() != self.grid {
            return Err(crate::error::SqgError::GridMismatch {
                expected: self.grid.n(),
                found: phi.grid().n(),
            });
        }
        Ok(())
    }
}

fn moments(s: &[f64]) -> (f64, f64) {
    let len = s.len() as f64;
    let mean = s.iter().sum::<f64>() / len;
    let mean_sq = s.iter().map(|v| v * v).sum::<f64>() / len;
    (mean, mean_sq)
}

/// `D[φ](x)` at a single grid point with default quadrature parameters.
pub fn dissipation_density(field: &SpectralField, idx: usize) -> Result<f64> {
    DissipationQuadrature::new(field.grid()).density_at(field, idx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationCheck {
    /// `½ ∫ D[∇θ]` by grid quadrature.
    pub quadrature: f64,
    /// `‖θ‖²_{H^{3/2}}` from the Fourier symbol.
    pub spectral: f64,
    pub rel_err: f64,
}

/// Compares `½∫ D[∇θ] dx` against `‖θ‖²_{H^{3/2}}`.
pub fn dissipation_integral_check(field: &SpectralField) -> Result<DissipationCheck> {
    let quad = DissipationQuadrature::new(field.grid());
    dissipation_integral_check_with(&quad, field)
}

pub fn dissipation_integral_check_with(
    quad: &DissipationQuadrature,
    field: &SpectralField,
) -> Result<DissipationCheck> {
    let density = quad.gradient_density_field(field)?;
    let quadrature = 0.5 * density.iter().sum::<f64>() / density.len() as f64;
    let spectral = hs_norm_sq(field, 1.5);
    let rel_err = if spectral == 0.0 && quadrature == 0.0 {
        0.0
    } else {
        (quadrature - spectral).abs() / spectral.abs().max(quadrature.abs())
    };
    Ok(DissipationCheck {
        quadrature,
        spectral,
        rel_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::fractional_laplacian;

    fn cosine(n: usize) -> SpectralField {
        SpectralField::from_fn(TorusGrid::new(n).unwrap(), |x1, _| (2.0 * PI * x1).cos()).unwrap()
    }

    /// Pointwise spectral oracle: with `c = 1/(2π)`,
    /// `D[φ] = 2φΛφ - Λ(φ²)` (Córdoba–Córdoba identity).
    fn spectral_density(phi: &SpectralField) -> Vec<f64> {
        let s = phi.to_samples();
        let lphi = fractional_laplacian(phi, 1.0).unwrap().to_samples();
        let g = phi.grid();
        let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
        // φ² is band-limited to 2K; evaluate its Λ on a grid that resolves it.
        let (sq_field, _) = SpectralField::from_samples(g, &sq).unwrap();
        let lsq = fractional_laplacian(&sq_field, 1.0).unwrap().to_samples();
        (0..s.len()).map(|i| 2.0 * s[i] * lphi[i] - lsq[i]).collect()
    }

    #[test]
    fn constant_and_zero_fields() {
        let g = TorusGrid::new(16).unwrap();
        let q = DissipationQuadrature::new(g);
        let z = SpectralField::zeros(g);
        assert!(q.density_field(&z).unwrap().iter().all(|&v| v == 0.0));
        let c = dissipation_integral_check(&z).unwrap();
        assert_eq!((c.quadrature, c.spectral, c.rel_err), (0.0, 0.0, 0.0));
    }

    #[test]
    fn cosine_identity_within_one_percent() {
        let f = cosine(64);
        let c = dissipation_integral_check(&f).unwrap();
        let expect = (2.0 * PI).powi(3) * 0.5;
        assert!((c.spectral - expect).abs() < 1e-10 * expect);
        assert!(c.rel_err < 0.01, "{c:?}");
    }

    #[test]
    fn quadratic_homogeneity() {
        let f = SpectralField::random_band_limited(TorusGrid::new(32).unwrap(), 5, 2).unwrap();
        let q = DissipationQuadrature::new(f.grid());
        let a = q.density_field(&f).unwrap();
        let b = q.density_field(&f.scale(2.0)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y - 4.0 * x).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn pointwise_matches_fft_route() {
        let f = SpectralField::random_band_limited(TorusGrid::new(32).unwrap(), 5, 3).unwrap();
        let q = DissipationQuadrature::new(f.grid());
        let field = q.density_field(&f).unwrap();
        for idx in [0usize, 17, 300, 1023] {
            let p = q.density_at(&f, idx).unwrap();
            assert!((p - field[idx]).abs() <= 1e-10 * field[idx].abs().max(1.0), "{p} vs {}", field[idx]);
        }
    }

    #[test]
    fn pointwise_matches_spectral_identity() {
        let g = TorusGrid::new(64).unwrap();
        let f = SpectralField::random_band_limited(g, 6, 8).unwrap();
        let q = DissipationQuadrature::new(g);
        let quad = q.density_field(&f).unwrap();
        let oracle = spectral_density(&f);
        let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = quad
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst / scale < 0.01, "max deviation {worst} of {scale}");
    }
}
