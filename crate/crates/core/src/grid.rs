//! Uniform grid on the unit torus `[0,1]^2` and its integer wavenumber lattice.
//!
//! Physical sample `(i1, i2)` sits at `x = (i1/n, i2/n)` and is stored at
//! `i1 * n + i2`. Fourier coefficients use the same row-major layout, indexed by
//! FFT order: index `a` carries wavenumber `a` for `a < n/2` and `a - n`
//! otherwise, so the Nyquist row carries `-n/2`.

use std::f64::consts::PI;

use crate::error::{Result, SqgError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(SqgError::InvalidGrid {
                n,
                reason: "need at least 8 points per dimension",
            });
        }
        if !n.is_power_of_two() {
            return Err(SqgError::InvalidGrid {
                n,
                reason: "points per dimension must be a power of two",
            });
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of grid points (and of lattice modes).
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Signed wavenumber carried by FFT index `a`.
    #[inline]
    pub fn wavenumber(&self, a: usize) -> i64 {
        let n = self.n as i64;
        let a = a as i64;
        if a < n / 2 {
            a
        } else {
            a - n
        }
    }

    /// Integer lattice mode `(k1, k2)` stored at flat index `idx`.
    #[inline]
    pub fn mode(&self, idx: usize) -> (i64, i64) {
        (self.wavenumber(idx / self.n), self.wavenumber(idx % self.n))
    }

    /// Flat index of mode `(k1, k2)`, wrapped onto the lattice.
    #[inline]
    pub fn index_of(&self, k1: i64, k2: i64) -> usize {
        let n = self.n as i64;
        (k1.rem_euclid(n) * n + k2.rem_euclid(n)) as usize
    }

    /// Flat index of the mode `-k` for the mode stored at `idx`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let a = idx / n;
        let b = idx % n;
        ((n - a) % n) * n + (n - b) % n
    }

    /// Physical wavenumber magnitude `2π|k|`, the symbol of `Λ`.
    #[inline]
    pub fn lambda(&self, idx: usize) -> f64 {
        let (k1, k2) = self.mode(idx);
        2.0 * PI * ((k1 * k1 + k2 * k2) as f64).sqrt()
    }

    /// Wavenumber used for first derivatives: the Nyquist component is dropped
    /// so that `∂` maps real fields to real fields.
    #[inline]
    pub fn derivative_wavenumber(&self, a: usize) -> f64 {
        if a == self.n / 2 {
            0.0
        } else {
            self.wavenumber(a) as f64
        }
    }

    /// Largest wavenumber kept by the two-thirds rule.
    #[inline]
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n as i64 - 1) / 3
    }

    #[inline]
    pub fn is_dealiased_mode(&self, idx: usize) -> bool {
        let (k1, k2) = self.mode(idx);
        let c = self.dealias_cutoff();
        k1.abs() <= c && k2.abs() <= c
    }

    /// Grid coordinate of the sample at flat index `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        ((idx / self.n) as f64 * h, (idx % self.n) as f64 * h)
    }

    /// Minimal-image length of the grid displacement `(d1, d2)` (in grid units).
    #[inline]
    pub fn torus_distance(&self, d1: i64, d2: i64) -> f64 {
        let a = self.wavenumber(d1.rem_euclid(self.n as i64) as usize) as f64;
        let b = self.wavenumber(d2.rem_euclid(self.n as i64) as usize) as f64;
        (a * a + b * b).sqrt() * self.spacing()
    }
}
