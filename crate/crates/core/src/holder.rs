//! Time-weighted Hölder quotients `|θ(x+h) - θ(x)| / (ξ² + |h|²)^{α/2}`.
//!
//! The supremum runs over grid points `x` and a finite set of grid shifts `h`.
//! With `ξ = 0` this is the discrete `C^α` seminorm; it bounds the continuum
//! seminorm from below.

use crate::error::{invalid, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

/// Default probe radius (torus distance) for the shift set.
pub const DEFAULT_SHIFT_RADIUS: f64 = 0.25;
/// Cap on the number of probe shifts.
pub const MAX_SHIFTS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct HolderProbeConfig {
    alpha: f64,
    xi: f64,
    /// Grid offsets `(d1, d2)`; the shift is `h = (d1, d2) / n`.
    shifts: Vec<(i64, i64)>,
    n: usize,
}

impl HolderProbeConfig {
    pub fn new(grid: TorusGrid, alpha: f64, xi: f64, shifts: Vec<(i64, i64)>) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 0.25) {
            return Err(invalid("alpha", format!("{alpha} outside (0, 1/4]")));
        }
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(invalid("xi", format!("{xi} must be finite and non-negative")));
        }
        if shifts.is_empty() {
            return Err(invalid("shifts", "empty shift set"));
        }
        let half = grid.n() as i64 / 2;
        for &(d1, d2) in &shifts {
            if d1.abs() > half || d2.abs() > half {
                return Err(invalid(
                    "shifts",
                    format!("shift ({d1}, {d2}) exceeds half the torus at n={}", grid.n()),
                ));
            }
            if xi == 0.0 && d1 == 0 && d2 == 0 {
                return Err(invalid("shifts", "zero shift with xi = 0"));
            }
        }
        Ok(Self {
            alpha,
            xi,
            shifts,
            n: grid.n(),
        })
    }

    /// Probe over [`default_shifts`].
    pub fn with_default_shifts(grid: TorusGrid, alpha: f64, xi: f64) -> Result<Self> {
        Self::new(grid, alpha, xi, default_shifts(grid, DEFAULT_SHIFT_RADIUS, MAX_SHIFTS))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn shifts(&self) -> &[(i64, i64)] {
        &self.shifts
    }

    /// Same shifts and exponent with a different `ξ`.
    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        let grid = TorusGrid::new(self.n)?;
        Self::new(grid, self.alpha, xi, self.shifts.clone())
    }

    /// One-line description of the shift policy, for reports.
    pub fn describe(&self) -> String {
        let rmax = self
            .shifts
            .iter()
            .map(|&(a, b)| ((a * a + b * b) as f64).sqrt() / self.n as f64)
            .fold(0.0, f64::max);
        format!(
            "alpha={} xi={} shifts={} max|h|={:.4} n={}",
            self.alpha,
            self.xi,
            self.shifts.len(),
            rmax,
            self.n
        )
    }
}

/// All nonzero grid offsets with `|h| <= radius`, ordered by length. When more
/// than `cap` qualify, the shortest `cap/2` are kept and the rest are
/// subsampled at a uniform stride.
pub fn default_shifts(grid: TorusGrid, radius: f64, cap: usize) -> Vec<(i64, i64)> {
    let n = grid.n() as i64;
    let r = (radius * n as f64).floor() as i64;
    let r = r.min(n / 2);
    let mut shifts: Vec<(i64, i64)> = Vec::new();
    for d1 in -r..=r {
        for d2 in -r..=r {
            if (d1, d2) == (0, 0) {
                continue;
            }
            if grid.torus_distance(d1, d2) <= radius + 1e-12 {
                shifts.push((d1, d2));
            }
        }
    }
    shifts.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
    if shifts.len() <= cap {
        return shifts;
    }
    let dense = cap / 2;
    let rest = &shifts[dense..];
    let stride = rest.len().div_ceil(cap - dense);
    let mut out = shifts[..dense].to_vec();
    out.extend(rest.iter().step_by(stride));
    out
}

/// `sup_{x,h} |θ(x+h) - θ(x)| / (ξ² + |h|²)^{α/2}` over grid points and the
/// probe's shifts.
pub fn holder_seminorm(field: &SpectralField, probe: &HolderProbeConfig) -> Result<f64> {
    if field.grid().n() != probe.n {
        return Err(invalid(
            "probe",
            format!("probe built for n={}, field has n={}", probe.n, field.grid().n()),
        ));
    }
    Ok(holder_seminorm_samples(
        field.grid(),
        &field.to_samples(),
        probe,
    ))
}

/// As [`holder_seminorm`], on precomputed grid samples.
pub fn holder_seminorm_samples(grid: TorusGrid, samples: &[f64], probe: &HolderProbeConfig) -> f64 {
    let n = grid.n();
    let per_shift = |&(d1, d2): &(i64, i64)| -> f64 {
        let h2 = {
            let d = grid.torus_distance(d1, d2);
            d * d
        };
        let weight = (probe.xi * probe.xi + h2).powf(probe.alpha / 2.0);
        let s1 = d1.rem_euclid(n as i64) as usize;
        let s2 = d2.rem_euclid(n as i64) as usize;
        let mut worst = 0.0f64;
        for i1 in 0..n {
            let row = i1 * n;
            let shifted_row = ((i1 + s1) % n) * n;
            for i2 in 0..n {
                let diff = (samples[shifted_row + (i2 + s2) % n] - samples[row + i2]).abs();
                worst = worst.max(diff);
            }
        }
        if worst == 0.0 {
            0.0
        } else {
            worst / weight
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        probe
            .shifts
            .par_iter()
            .map(per_shift)
            .reduce(|| 0.0, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        probe.shifts.iter().map(per_shift).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::linf_norm;
    use std::f64::consts::PI;

    fn cosine(n: usize) -> SpectralField {
        SpectralField::from_fn(TorusGrid::new(n).unwrap(), |x1, _| (2.0 * PI * x1).cos()).unwrap()
    }

    #[test]
    fn zero_field_has_zero_seminorm() {
        let g = TorusGrid::new(16).unwrap();
        let p = HolderProbeConfig::with_default_shifts(g, 0.25, 0.0).unwrap();
        assert_eq!(holder_seminorm(&SpectralField::zeros(g), &p).unwrap(), 0.0);
    }

    #[test]
    fn probe_validation() {
        let g = TorusGrid::new(16).unwrap();
        assert!(HolderProbeConfig::new(g, 0.3, 0.0, vec![(1, 0)]).is_err());
        assert!(HolderProbeConfig::new(g, 0.0, 0.0, vec![(1, 0)]).is_err());
        assert!(HolderProbeConfig::new(g, 0.1, -1.0, vec![(1, 0)]).is_err());
        assert!(HolderProbeConfig::new(g, 0.1, 0.0, vec![]).is_err());
        assert!(HolderProbeConfig::new(g, 0.1, 0.0, vec![(0, 0)]).is_err());
        assert!(HolderProbeConfig::new(g, 0.1, 0.5, vec![(0, 0)]).is_ok());
        assert!(HolderProbeConfig::new(g, 0.1, 0.0, vec![(9, 0)]).is_err());
    }

    #[test]
    fn default_shift_set_is_capped() {
        let g = TorusGrid::new(256).unwrap();
        let s = default_shifts(g, DEFAULT_SHIFT_RADIUS, MAX_SHIFTS);
        assert!(s.len() <= MAX_SHIFTS);
        assert!(s.contains(&(1, 0)) && s.contains(&(0, -1)));
        let g = TorusGrid::new(64).unwrap();
        let s = default_shifts(g, DEFAULT_SHIFT_RADIUS, MAX_SHIFTS);
        assert!(s.iter().all(|&(a, b)| a * a + b * b <= 16 * 16));
        assert!(s.contains(&(16, 0)));
    }

    #[test]
    fn cosine_seminorm_stabilizes_under_refinement() {
        let values: Vec<f64> = [16usize, 32, 64, 128]
            .iter()
            .map(|&n| {
                let f = cosine(n);
                let p = HolderProbeConfig::with_default_shifts(f.grid(), 0.25, 0.0).unwrap();
                holder_seminorm(&f, &p).unwrap()
            })
            .collect();
        for w in values.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{values:?}");
        }
        assert!((values[3] - values[2]).abs() / values[3] < 0.02, "{values:?}");
    }

    #[test]
    fn unit_xi_bounds_by_twice_sup() {
        let f = SpectralField::random_band_limited(TorusGrid::new(32).unwrap(), 6, 4).unwrap();
        let p = HolderProbeConfig::with_default_shifts(f.grid(), 0.2, 1.0).unwrap();
        assert!(holder_seminorm(&f, &p).unwrap() <= 2.0 * linf_norm(&f, 1) + 1e-14);
    }

    #[test]
    fn monotone_in_xi() {
        let f = SpectralField::random_band_limited(TorusGrid::new(32).unwrap(), 6, 5).unwrap();
        let base = HolderProbeConfig::with_default_shifts(f.grid(), 0.25, 0.0).unwrap();
        let mut last = f64::INFINITY;
        for xi in [0.0, 0.01, 0.1, 0.5, 1.0, 3.0] {
            let v = holder_seminorm(&f, &base.with_xi(xi).unwrap()).unwrap();
            assert!(v <= last);
            last = v;
        }
    }
}
