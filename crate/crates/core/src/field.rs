//! Zero-mean real scalar fields stored as Hermitian Fourier coefficients.
//!
//! Coefficients are normalized so that `θ(x) = Σ_k c_k e^{2πi k·x}`; with the
//! unit torus this makes Parseval read `∫θ² = Σ|c_k|²`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{invalid, Result, SqgError};
use crate::fft;
use crate::grid::TorusGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

/// One Fourier mode `a·cos(2π k·x) + b·sin(2π k·x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k1: i64,
    pub k2: i64,
    pub cos: f64,
    pub sin: f64,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO; grid.len()],
        }
    }

    /// Forward transform of physical samples. Returns the field with its mean
    /// stripped, together with that mean.
    pub fn from_samples(grid: TorusGrid, samples: &[f64]) -> Result<(Self, f64)> {
        if samples.len() != grid.len() {
            return Err(invalid(
                "samples",
                format!("expected {} samples, got {}", grid.len(), samples.len()),
            ));
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(SqgError::NonFinite { index, value });
        }
        let coeffs = forward_coefficients(grid, samples);
        let mean = coeffs[0].re;
        let mut field = Self { grid, coeffs };
        field.project();
        Ok((field, mean))
    }

    /// Samples `f` on the grid and transforms; the mean is discarded.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let samples: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (x1, x2) = grid.point(i);
                f(x1, x2)
            })
            .collect();
        Self::from_samples(grid, &samples).map(|(field, _)| field)
    }

    /// Builds a field from raw coefficients, restoring Hermitian symmetry and
    /// zero mean by projection.
    pub fn from_coefficients(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(invalid(
                "coeffs",
                format!("expected {} coefficients, got {}", grid.len(), coeffs.len()),
            ));
        }
        if let Some((index, c)) = coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(SqgError::NonFinite {
                index,
                value: if c.re.is_finite() { c.im } else { c.re },
            });
        }
        let mut field = Self { grid, coeffs };
        field.project();
        Ok(field)
    }

    pub fn from_modes(grid: TorusGrid, modes: &[Mode]) -> Result<Self> {
        let mut coeffs = vec![ZERO; grid.len()];
        let half = grid.n() as i64 / 2;
        for m in modes {
            if m.k1.abs() >= half || m.k2.abs() >= half {
                return Err(invalid(
                    "modes",
                    format!("mode ({}, {}) not representable at n={}", m.k1, m.k2, grid.n()),
                ));
            }
            if m.k1 == 0 && m.k2 == 0 {
                continue;
            }
            // a cos + b sin = (a - ib)/2 e^{+} + (a + ib)/2 e^{-}
            coeffs[grid.index_of(m.k1, m.k2)] += Complex64::new(m.cos, -m.sin) * 0.5;
            coeffs[grid.index_of(-m.k1, -m.k2)] += Complex64::new(m.cos, m.sin) * 0.5;
        }
        Ok(Self { grid, coeffs })
    }

    /// Seeded random field supported on `1 <= |k| <= kmax` with amplitudes
    /// decaying like `|k|^{-2}`. The draw depends only on `(kmax, seed)`, so the
    /// same field is produced on every grid that resolves `kmax`.
    pub fn random_band_limited(grid: TorusGrid, kmax: i64, seed: u64) -> Result<Self> {
        if kmax < 1 || kmax >= grid.n() as i64 / 2 {
            return Err(invalid(
                "kmax",
                format!("band limit {kmax} not representable at n={}", grid.n()),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for k1 in 0..=kmax {
            for k2 in -kmax..=kmax {
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                let r2 = (k1 * k1 + k2 * k2) as f64;
                if r2 > (kmax * kmax) as f64 {
                    continue;
                }
                let amp = 1.0 / r2;
                let phase: f64 = rng.gen_range(0.0..2.0 * PI);
                let mag: f64 = rng.gen_range(0.5..1.5) * amp;
                modes.push(Mode {
                    k1,
                    k2,
                    cos: mag * phase.cos(),
                    sin: mag * phase.sin(),
                });
            }
        }
        Self::from_modes(grid, &modes)
    }

    #[inline]
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `(k1, k2)`.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[self.grid.index_of(k1, k2)]
    }

    /// Inverse transform to physical samples on the grid.
    pub fn to_samples(&self) -> Vec<f64> {
        inverse_samples(self.grid.n(), &self.coeffs)
    }

    /// Physical samples on a grid refined by `factor` (zero padding); exact
    /// evaluation of the trigonometric polynomial at the finer points.
    pub fn to_samples_oversampled(&self, factor: usize) -> Vec<f64> {
        if factor <= 1 {
            return self.to_samples();
        }
        let n = self.grid.n();
        let m = n * factor;
        let mut padded = vec![ZERO; m * m];
        let half = n as i64 / 2;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let (k1, k2) = self.grid.mode(idx);
            if k1 == -half || k2 == -half {
                // split the Nyquist row/column evenly to keep the padded field real
                continue;
            }
            let i = k1.rem_euclid(m as i64) as usize;
            let j = k2.rem_euclid(m as i64) as usize;
            padded[i * m + j] = *c;
        }
        for (idx, c) in self.coeffs.iter().enumerate() {
            let (k1, k2) = self.grid.mode(idx);
            if k1 != -half && k2 != -half {
                continue;
            }
            let k1s: &[i64] = if k1 == -half { &[-half, half] } else { &[k1] };
            let k2s: &[i64] = if k2 == -half { &[-half, half] } else { &[k2] };
            let share = 1.0 / (k1s.len() * k2s.len()) as f64;
            for &a in k1s {
                for &b in k2s {
                    let i = a.rem_euclid(m as i64) as usize;
                    let j = b.rem_euclid(m as i64) as usize;
                    padded[i * m + j] += *c * share;
                }
            }
        }
        inverse_samples(m, &padded)
    }

    /// Multiplies every coefficient by a real symbol `m(idx)`; the zero mode is
    /// left at zero.
    pub fn map_real_symbol(&self, symbol: impl Fn(usize) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if i == 0 { ZERO } else { c * symbol(i) })
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Multiplies by an odd imaginary symbol `i·m(idx)` with `m(-k) = -m(k)`,
    /// which keeps real fields real.
    pub(crate) fn map_imag_symbol(&self, symbol: impl Fn(usize) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::new(0.0, symbol(i)))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `∫ self · other dx` over the torus.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum())
    }

    /// Zeroes every mode outside the two-thirds band.
    pub fn dealiased(&self) -> Self {
        let grid = self.grid;
        Self {
            grid,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| if grid.is_dealiased_mode(i) { *c } else { ZERO })
                .collect(),
        }
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub(crate) fn from_raw(grid: TorusGrid, coeffs: Vec<Complex64>) -> Self {
        Self { grid, coeffs }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest deviation from Hermitian symmetry, relative to the largest
    /// coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..self.coeffs.len())
            .map(|i| (self.coeffs[i] - self.coeffs[self.grid.conjugate_index(i)].conj()).norm())
            .fold(0.0, f64::max);
        worst / scale
    }

    pub(crate) fn debug_check(&self) {
        debug_assert_eq!(self.coeffs[0], ZERO, "zero mode must vanish");
        debug_assert!(
            self.hermitian_defect() <= 1e-12,
            "hermitian symmetry lost: {}",
            self.hermitian_defect()
        );
    }

    /// Restores `c_{-k} = conj(c_k)` exactly and removes the mean.
    pub(crate) fn project(&mut self) {
        self.coeffs = hermitian_part(self.grid, &self.coeffs);
        self.coeffs[0] = ZERO;
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(SqgError::GridMismatch {
                expected: self.grid.n(),
                found: other.grid.n(),
            });
        }
        Ok(())
    }
}

/// Non-mean-free field on the torus, e.g. a level-set truncation `(θ - η)_+`.
///
/// Truncations are not band-limited; the coefficients are the discrete
/// transform of the grid samples and carry truncation-induced high modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedField {
    grid: TorusGrid,
    samples: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl TruncatedField {
    pub fn from_samples(grid: TorusGrid, samples: Vec<f64>) -> Self {
        assert_eq!(samples.len(), grid.len());
        let coeffs = hermitian_part(grid, &forward_coefficients(grid, &samples));
        Self {
            grid,
            samples,
            coeffs,
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    /// Full `L²` norm including the mean.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Grid quadrature of `∫|φ|`.
    pub fn l1_norm(&self) -> f64 {
        self.samples.iter().map(|v| v.abs()).sum::<f64>() / self.grid.len() as f64
    }

    /// Homogeneous seminorm `‖Λ^s φ‖_{L²}`.
    pub fn hs_seminorm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| self.grid.lambda(i).powf(2.0 * s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn forward_coefficients(grid: TorusGrid, samples: &[f64]) -> Vec<Complex64> {
    let plan = fft::plan(grid.n());
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.forward(&mut data);
    let norm = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|c| *c *= norm);
    data
}

fn inverse_samples(n: usize, coeffs: &[Complex64]) -> Vec<f64> {
    let plan = fft::plan(n);
    let mut data = coeffs.to_vec();
    plan.inverse(&mut data);
    data.into_iter().map(|c| c.re).collect()
}

fn hermitian_part(grid: TorusGrid, coeffs: &[Complex64]) -> Vec<Complex64> {
    (0..coeffs.len())
        .map(|i| {
            let j = grid.conjugate_index(i);
            (coeffs[i] + coeffs[j].conj()) * 0.5
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cosine(n: usize) -> SpectralField {
        let g = TorusGrid::new(n).unwrap();
        SpectralField::from_fn(g, |x1, _| (2.0 * PI * x1).cos()).unwrap()
    }

    #[test]
    fn constant_field_is_stripped_to_zero() {
        let g = TorusGrid::new(16).unwrap();
        let (f, mean) = SpectralField::from_samples(g, &vec![5.0; g.len()]).unwrap();
        assert_relative_eq!(mean, 5.0, max_relative = 1e-15);
        assert!(f.coeffs().iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn cosine_is_one_conjugate_pair() {
        let f = cosine(16);
        for (idx, c) in f.coeffs().iter().enumerate() {
            let (k1, k2) = f.grid().mode(idx);
            if (k1.abs(), k2) == (1, 0) {
                assert!((c - Complex64::new(0.5, 0.0)).norm() < 1e-15);
            } else {
                assert!(c.norm() < 1e-15, "mode ({k1},{k2}) = {c}");
            }
        }
    }

    #[test]
    fn white_noise_round_trip() {
        let g = TorusGrid::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let (f, m) = SpectralField::from_samples(g, &s).unwrap();
        assert_relative_eq!(m, mean, epsilon = 1e-15);
        let back = f.to_samples();
        let scale = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let err = back
            .iter()
            .zip(&s)
            .map(|(b, v)| (b - (v - mean)).abs())
            .fold(0.0, f64::max);
        assert!(err / scale < 1e-12, "round trip error {err}");
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        let g = TorusGrid::new(8).unwrap();
        let mut s = vec![0.0; g.len()];
        s[17] = f64::NAN;
        match SpectralField::from_samples(g, &s) {
            Err(SqgError::NonFinite { index, .. }) => assert_eq!(index, 17),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn from_modes_matches_sampled_trig() {
        let g = TorusGrid::new(16).unwrap();
        let a = SpectralField::from_modes(
            g,
            &[Mode {
                k1: 2,
                k2: -1,
                cos: 0.3,
                sin: -0.7,
            }],
        )
        .unwrap();
        let b = SpectralField::from_fn(g, |x1, x2| {
            let p = 2.0 * PI * (2.0 * x1 - x2);
            0.3 * p.cos() - 0.7 * p.sin()
        })
        .unwrap();
        let d = a.sub(&b).unwrap();
        assert!(d.coeffs().iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn random_field_is_grid_independent() {
        let a = SpectralField::random_band_limited(TorusGrid::new(32).unwrap(), 5, 9).unwrap();
        let b = SpectralField::random_band_limited(TorusGrid::new(64).unwrap(), 5, 9).unwrap();
        for k1 in -5..=5 {
            for k2 in -5..=5 {
                assert_eq!(a.coeff(k1, k2), b.coeff(k1, k2));
            }
        }
        assert_eq!(a.hermitian_defect(), 0.0);
    }

    #[test]
    fn oversampling_reproduces_exact_values() {
        let f = cosine(16);
        let fine = f.to_samples_oversampled(4);
        let m = 64;
        for i in 0..m {
            let x1 = i as f64 / m as f64;
            assert!((fine[i * m + 3] - (2.0 * PI * x1).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn truncated_field_norms() {
        let g = TorusGrid::new(64).unwrap();
        let s: Vec<f64> = (0..g.len()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let t = TruncatedField::from_samples(g, s);
        assert_relative_eq!(t.mean(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(t.l1_norm(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(t.l2_norm(), 0.5f64.sqrt(), epsilon = 1e-14);
    }
}
