use crate::error::{invalid, Result};

/// Exponential envelope `A·e^{-λ(t - t₀)} + asymptote` dominating a series,
/// with `t₀` its first sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFit {
    pub asymptote: f64,
    /// `+∞` when no sample after the first exceeds the asymptote.
    pub lambda: f64,
    pub prefactor: f64,
    pub t0: f64,
    /// Largest `(value - envelope) / envelope` over the series.
    pub max_violation: f64,
}

impl EnvelopeFit {
    pub fn eval(&self, t: f64) -> f64 {
        if self.prefactor == 0.0 {
            return self.asymptote;
        }
        if t <= self.t0 {
            return self.prefactor + self.asymptote;
        }
        self.prefactor * (-self.lambda * (t - self.t0)).exp() + self.asymptote
    }

    /// True when every sample lies at or below the asymptote.
    pub fn is_sentinel(&self) -> bool {
        self.prefactor == 0.0
    }
}

/// Largest rate `λ` with the smallest prefactor `A` such that the envelope
/// dominates every sample.
///
/// A non-increasing envelope needs `A ≥ max(value - asymptote)`, which is
/// `value(t₀) - asymptote` for a decaying series. The rate is then the
/// closed-form minimum over samples of `ln(A / (value - asymptote)) / (t - t₀)`.
pub fn fit_decay_envelope(series: &[(f64, f64)], asymptote: f64) -> Result<EnvelopeFit> {
    if series.is_empty() {
        return Err(invalid("series", "empty"));
    }
    if series.iter().any(|&(t, v)| !t.is_finite() || !v.is_finite() || v < 0.0) {
        return Err(invalid("series", "values must be finite and non-negative"));
    }
    if !asymptote.is_finite() || asymptote < 0.0 {
        return Err(invalid("asymptote", format!("{asymptote}")));
    }
    let t0 = series[0].0;
    let excess = |v: f64| v - asymptote;
    let max_excess = series.iter().map(|&(_, v)| excess(v)).fold(f64::NEG_INFINITY, f64::max);
    if max_excess <= 0.0 {
        return Ok(EnvelopeFit {
            asymptote,
            lambda: f64::INFINITY,
            prefactor: 0.0,
            t0,
            max_violation: 0.0,
        });
    }
    let prefactor = max_excess;
    let mut lambda = f64::INFINITY;
    for &(t, v) in &series[1..] {
        let e = excess(v);
        if e <= 0.0 || t <= t0 {
            continue;
        }
        lambda = lambda.min((prefactor / e).ln() / (t - t0));
    }
    let lambda = lambda.max(0.0);
    let mut fit = EnvelopeFit {
        asymptote,
        lambda,
        prefactor,
        t0,
        max_violation: 0.0,
    };
    fit.max_violation = series
        .iter()
        .map(|&(t, v)| {
            let env = fit.eval(t);
            if env > 0.0 {
                (v - env) / env
            } else if v > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic() -> Vec<(f64, f64)> {
        (0..200).map(|i| {
            let t = i as f64 * 0.01;
            (t, 2.0 * (-3.0 * t).exp() + 1.0)
        }).collect()
    }

    #[test]
    fn recovers_exact_exponential() {
        let fit = fit_decay_envelope(&synthetic(), 1.0).unwrap();
        assert!((fit.lambda - 3.0).abs() < 1e-6, "{}", fit.lambda);
        assert!((fit.prefactor - 2.0).abs() < 1e-6);
        assert!(fit.max_violation <= 1e-9);
    }

    #[test]
    fn series_at_asymptote_is_sentinel() {
        let s: Vec<_> = (0..10).map(|i| (i as f64, 0.5)).collect();
        let fit = fit_decay_envelope(&s, 0.5).unwrap();
        assert!(fit.is_sentinel());
        assert_eq!(fit.prefactor, 0.0);
    }

    #[test]
    fn late_excess_raises_prefactor() {
        let s = vec![(0.0, 0.5), (1.0, 2.0), (2.0, 1.5)];
        let fit = fit_decay_envelope(&s, 1.0).unwrap();
        assert_eq!(fit.prefactor, 1.0);
        assert!(fit.max_violation <= 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_decay_envelope(&[], 0.0).is_err());
        assert!(fit_decay_envelope(&[(0.0, -1.0)], 0.0).is_err());
        assert!(fit_decay_envelope(&[(0.0, f64::NAN)], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn envelope_dominates(values in proptest::collection::vec(0.0f64..10.0, 1..60), asym in 0.0f64..3.0) {
            let series: Vec<_> = values.iter().enumerate().map(|(i, &v)| (i as f64 * 0.1, v)).collect();
            let fit = fit_decay_envelope(&series, asym).unwrap();
            prop_assert!(fit.max_violation <= 1e-9, "{}", fit.max_violation);
            prop_assert!(fit.lambda >= 0.0);
            prop_assert!(fit.prefactor >= series[0].1 - asym || fit.is_sentinel());
        }
    }
}
