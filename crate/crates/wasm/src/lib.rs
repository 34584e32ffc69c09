//! Browser bindings used by `www/index.html`: a live forced SQG run rendered
//! to RGBA, the ξ bridge profile and an exponential envelope fit of the
//! recorded `L²` history.

use std::f64::consts::PI;

use sqg_core::diagnostics::{fit_decay_envelope, t_alpha, xi_profile};
use sqg_core::dynamics::{cfl_limit, step, SolverConfig, SolverState};
use sqg_core::operators::{l2_norm, linf_norm};
use sqg_core::{SpectralField, TorusGrid};
use wasm_bindgen::prelude::*;

const DT_MAX: f64 = 2e-3;
const CFL_SAFETY: f64 = 0.4;

/// A forced run with `f = F·cos(2πx₂)` from seeded band-limited data.
#[wasm_bindgen]
pub struct Simulation {
    config: SolverConfig,
    state: SolverState,
    forcing_l2: f64,
    history: Vec<(f64, f64)>,
}

impl Simulation {
    pub fn try_new(n: usize, kappa: f64, forcing: f64, amplitude: f64, seed: u32) -> Result<Self, String> {
        let grid = TorusGrid::new(n).map_err(|e| e.to_string())?;
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(format!("kappa = {kappa} must lie in (0, 1]"));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0 && forcing.is_finite()) {
            return Err("amplitude and forcing must be finite, amplitude non-negative".into());
        }
        let f = SpectralField::from_fn(grid, |_, x2| forcing * (2.0 * PI * x2).cos()).map_err(|e| e.to_string())?;
        let kmax = (n as i64 / 2 - 1).min(8);
        let raw = SpectralField::random_band_limited(grid, kmax, u64::from(seed)).map_err(|e| e.to_string())?;
        let sup = linf_norm(&raw, 1);
        let theta0 = if sup > 0.0 { raw.scale(amplitude / sup) } else { raw };
        let config = SolverConfig::new(grid, kappa, DT_MAX)
            .and_then(|c| c.with_forcing(f))
            .map_err(|e| e.to_string())?;
        let forcing_l2 = l2_norm(&config.forcing);
        let history = vec![(0.0, l2_norm(&theta0))];
        Ok(Self {
            config,
            state: SolverState::new(theta0),
            forcing_l2,
            history,
        })
    }

    pub fn try_advance(&mut self, steps: u32) -> Result<(), String> {
        for _ in 0..steps {
            let dt = cfl_limit(&self.state, CFL_SAFETY, DT_MAX);
            self.state = step(&self.config, &self.state, dt).map_err(|e| e.to_string())?;
        }
        self.history.push((self.state.t, l2_norm(&self.state.theta)));
        Ok(())
    }

    pub fn history(&self) -> &[(f64, f64)] {
        &self.history
    }
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, kappa: f64, forcing: f64, amplitude: f64, seed: u32) -> Result<Simulation, JsError> {
        Self::try_new(n, kappa, forcing, amplitude, seed).map_err(|e| JsError::new(&e))
    }

    /// Takes `steps` CFL-limited steps and records one `L²` sample.
    pub fn advance(&mut self, steps: u32) -> Result<(), JsError> {
        self.try_advance(steps).map_err(|e| JsError::new(&e))
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn size(&self) -> usize {
        self.config.grid.n()
    }

    pub fn l2(&self) -> f64 {
        l2_norm(&self.state.theta)
    }

    pub fn linf(&self) -> f64 {
        linf_norm(&self.state.theta, 1)
    }

    /// `n×n` RGBA pixels, `x₁` to the right and `x₂` upward, on a blue–white–red
    /// scale symmetric about zero.
    pub fn rgba(&self) -> Vec<u8> {
        let n = self.config.grid.n();
        let samples = self.state.theta.to_samples();
        let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut px = Vec::with_capacity(4 * n * n);
        for row in 0..n {
            for col in 0..n {
                let v = samples[col * n + (n - 1 - row)];
                let s = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
                let fade = |x: f64| (255.0 * (1.0 - x)).round() as u8;
                let (r, g, b) = if s >= 0.0 { (255, fade(s), fade(s)) } else { (fade(-s), fade(-s), 255) };
                px.extend_from_slice(&[r, g, b, 255]);
            }
        }
        px
    }

    /// Recorded `(t, ‖θ‖_{L²})` pairs, interleaved.
    pub fn l2_history(&self) -> Vec<f64> {
        self.history.iter().flat_map(|&(t, v)| [t, v]).collect()
    }

    /// `[λ, A, asymptote]` of the envelope `A·e^{-λt} + ‖f‖/(2πκ)` fitted to
    /// the recorded `L²` history; empty while the history is too short.
    pub fn envelope(&self) -> Vec<f64> {
        let asymptote = self.forcing_l2 / (2.0 * PI * self.config.kappa);
        match fit_decay_envelope(&self.history, asymptote) {
            Ok(fit) if !fit.is_sentinel() => vec![fit.lambda, fit.prefactor, asymptote],
            _ => Vec::new(),
        }
    }
}

/// `ξ(t)` at `points` equally spaced times on `[0, 1.2·t_α]`, interleaved as
/// `t₀, ξ₀, t₁, ξ₁, …`.
#[wasm_bindgen]
pub fn xi_curve(alpha: f64, xi0: f64, points: usize) -> Vec<f64> {
    let alpha = alpha.clamp(0.0, 0.25);
    let xi0 = xi0.max(0.0);
    let end = 1.2 * t_alpha(alpha, xi0);
    let last = points.max(2) - 1;
    (0..=last)
        .flat_map(|i| {
            let t = end * i as f64 / last as f64;
            [t, xi_profile(t, alpha, xi0)]
        })
        .collect()
}

/// Time at which the ξ profile reaches zero.
#[wasm_bindgen]
pub fn regularization_time(alpha: f64, xi0: f64) -> f64 {
    t_alpha(alpha, xi0)
}
