//! Time integration of `∂_tθ + u·∇θ + κΛθ = f`, `u = ∇^⊥Λ^{-1}θ`.
//!
//! The default scheme treats `κΛ` exactly through the integrating factor
//! `e^{-κ2π|k|dt}` and advances transport plus forcing with Heun's RK2. Products
//! are formed in physical space from two-thirds-truncated inputs.

use rustfft::num_complex::Complex64;

use crate::error::{invalid, Result, SqgError};
use crate::fft;
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::operators::{hs_norm, hs_norm_sq, linf_norm};

/// An `‖θ‖_{L∞}` growth beyond this factor of the reference aborts a run.
pub const BLOW_UP_FACTOR: f64 = 1e6;
const CFL_VELOCITY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    Cfl { safety: f64, dt_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dealias {
    #[default]
    TwoThirds,
    /// No truncation. Only for demonstrating aliasing instability.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Integrating factor with Heun RK2.
    #[default]
    IntegratingFactorRk2,
    /// Explicit transport, implicit dissipation, first order.
    ImexEuler,
}

/// Sampling cadence for trajectory records, in steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub every: u64,
    /// Keep a full snapshot at every `snapshot_every`-th sample (0: none).
    pub snapshot_every: u64,
    /// Dense snapshots stop after this time.
    pub snapshot_until: f64,
    /// Cadence after `snapshot_until`, in samples (0: none).
    pub late_snapshot_every: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            every: 1,
            snapshot_every: 0,
            snapshot_until: f64::INFINITY,
            late_snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kappa: f64,
    pub grid: TorusGrid,
    pub forcing: SpectralField,
    pub dt: DtPolicy,
    pub dealias: Dealias,
    pub scheme: Scheme,
    pub sampling: Sampling,
}

impl SolverConfig {
    /// Unforced configuration with fixed step and default scheme.
    pub fn new(grid: TorusGrid, kappa: f64, dt: f64) -> Result<Self> {
        Self {
            kappa,
            grid,
            forcing: SpectralField::zeros(grid),
            dt: DtPolicy::Fixed(dt),
            dealias: Dealias::default(),
            scheme: Scheme::default(),
            sampling: Sampling::default(),
        }
        .validated()
    }

    pub fn with_forcing(mut self, forcing: SpectralField) -> Result<Self> {
        self.forcing = forcing;
        self.validated()
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Result<Self> {
        self.sampling = sampling;
        self.validated()
    }

    /// Checks parameter ranges. `κ = 0` is accepted as the inviscid
    /// diagnostic mode.
    pub fn validated(self) -> Result<Self> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(invalid("kappa", format!("{} outside [0, 1]", self.kappa)));
        }
        if self.forcing.grid() != self.grid {
            return Err(SqgError::GridMismatch {
                expected: self.grid.n(),
                found: self.forcing.grid().n(),
            });
        }
        match self.dt {
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(invalid("dt", format!("{dt} must be positive")))
            }
            DtPolicy::Cfl { safety, dt_max } => {
                if !(safety > 0.0 && safety < 1.0) {
                    return Err(invalid("cfl_safety", format!("{safety} outside (0, 1)")));
                }
                if !(dt_max > 0.0 && dt_max.is_finite()) {
                    return Err(invalid("dt_max", format!("{dt_max} must be positive")));
                }
            }
            _ => {}
        }
        if self.sampling.every == 0 {
            return Err(invalid("sample_every", "must be at least 1"));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub theta: SpectralField,
    pub t: f64,
    pub step: u64,
}

impl SolverState {
    pub fn new(theta: SpectralField) -> Self {
        Self {
            theta,
            t: 0.0,
            step: 0,
        }
    }
}

/// Dealiased transport term `-(u·∇θ)` with `u = ∇^⊥Λ^{-1}θ`.
pub fn nonlinear_term(theta: &SpectralField) -> SpectralField {
    nonlinear_term_with(theta, Dealias::TwoThirds)
}

pub fn nonlinear_term_with(theta: &SpectralField, dealias: Dealias) -> SpectralField {
    let grid = theta.grid();
    let n = grid.n();
    let len = grid.len();
    let plan = fft::plan(n);
    let two_pi = 2.0 * std::f64::consts::PI;

    // real fields packed in pairs: a = u1 + i∂₁θ, b = u2 + i∂₂θ
    let mut a = vec![Complex64::new(0.0, 0.0); len];
    let mut b = a.clone();
    for (idx, c) in theta.coeffs().iter().enumerate() {
        if idx == 0 || (dealias == Dealias::TwoThirds && !grid.is_dealiased_mode(idx)) {
            continue;
        }
        let k1 = grid.derivative_wavenumber(idx / n);
        let k2 = grid.derivative_wavenumber(idx % n);
        let norm = (k1 * k1 + k2 * k2).sqrt();
        if norm == 0.0 {
            continue;
        }
        let ic = Complex64::new(-c.im, c.re);
        let u1 = ic * (-k2 / norm);
        let u2 = ic * (k1 / norm);
        let d1 = ic * (two_pi * k1);
        let d2 = ic * (two_pi * k2);
        a[idx] = u1 + Complex64::new(-d1.im, d1.re);
        b[idx] = u2 + Complex64::new(-d2.im, d2.re);
    }
    plan.inverse(&mut a);
    plan.inverse(&mut b);
    let mut product: Vec<Complex64> = a
        .iter()
        .zip(&b)
        .map(|(a, b)| Complex64::new(-(a.re * a.im + b.re * b.im), 0.0))
        .collect();
    plan.forward(&mut product);
    let scale = 1.0 / len as f64;
    for (idx, c) in product.iter_mut().enumerate() {
        if dealias == Dealias::TwoThirds && !grid.is_dealiased_mode(idx) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= scale;
        }
    }
    let mut out = SpectralField::from_raw(grid, product);
    out.project();
    out
}

fn rhs(config: &SolverConfig, theta: &SpectralField) -> SpectralField {
    let mut out = nonlinear_term_with(theta, config.dealias);
    for (o, f) in out.coeffs_mut().iter_mut().zip(config.forcing.coeffs()) {
        *o += f;
    }
    out
}

type DecayKey = (usize, u64, u64);

thread_local! {
    static DECAY: std::cell::RefCell<Option<(DecayKey, std::sync::Arc<Vec<f64>>)>> =
        const { std::cell::RefCell::new(None) };
}

/// `e^{-κΛ dt}` per mode, cached for the last `(n, κ, dt)` seen on this thread.
fn decay_table(grid: TorusGrid, kappa: f64, dt: f64) -> std::sync::Arc<Vec<f64>> {
    let key = (grid.n(), kappa.to_bits(), dt.to_bits());
    DECAY.with(|cell| {
        let mut slot = cell.borrow_mut();
        if let Some((k, table)) = slot.as_ref() {
            if *k == key {
                return table.clone();
            }
        }
        let table = std::sync::Arc::new(
            (0..grid.len())
                .map(|i| (-kappa * grid.lambda(i) * dt).exp())
                .collect::<Vec<f64>>(),
        );
        *slot = Some((key, table.clone()));
        table
    })
}

/// Advances the state by `dt`.
pub fn step(config: &SolverConfig, state: &SolverState, dt: f64) -> Result<SolverState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("{dt} must be positive")));
    }
    let grid = config.grid;
    let theta = &state.theta;
    let n0 = rhs(config, theta);
    let decay = decay_table(grid, config.kappa, dt);

    let next = match config.scheme {
        Scheme::IntegratingFactorRk2 => {
            let stage: Vec<Complex64> = theta
                .coeffs()
                .iter()
                .zip(n0.coeffs())
                .zip(decay.iter())
                .map(|((c, r), e)| (c + r * dt) * e)
                .collect();
            let stage = SpectralField::from_raw(grid, stage);
            let n1 = rhs(config, &stage);
            let coeffs = theta
                .coeffs()
                .iter()
                .zip(n0.coeffs())
                .zip(n1.coeffs())
                .zip(decay.iter())
                .map(|(((c, r0), r1), e)| (c + r0 * (0.5 * dt)) * e + r1 * (0.5 * dt))
                .collect();
            SpectralField::from_raw(grid, coeffs)
        }
        Scheme::ImexEuler => {
            let coeffs = theta
                .coeffs()
                .iter()
                .zip(n0.coeffs())
                .enumerate()
                .map(|(i, (c, r))| (c + r * dt) / (1.0 + config.kappa * grid.lambda(i) * dt))
                .collect();
            SpectralField::from_raw(grid, coeffs)
        }
    };
    next.debug_check();
    if !next.is_finite() {
        return Err(SqgError::BlowUp {
            t: state.t + dt,
            step: state.step + 1,
            reason: "non-finite coefficients".into(),
        });
    }
    Ok(SolverState {
        theta: next,
        t: state.t + dt,
        step: state.step + 1,
    })
}

/// Max over the grid of `|u|`.
pub fn velocity_linf(theta: &SpectralField) -> f64 {
    let (u1, u2) = crate::operators::riesz_velocity(theta);
    let a = u1.to_samples();
    let b = u2.to_samples();
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x * x + y * y).sqrt())
        .fold(0.0, f64::max)
}

/// `safety · (1/n) / max(‖u‖_{L∞}, 1e-8)`, capped at `dt_max`.
pub fn cfl_limit(state: &SolverState, safety: f64, dt_max: f64) -> f64 {
    let umax = velocity_linf(&state.theta).max(CFL_VELOCITY_FLOOR);
    (safety * state.theta.grid().spacing() / umax).min(dt_max)
}

/// Step size the configuration's policy would take from `state`. For a fixed
/// policy this is the advective limit with safety 1/2 capped at the fixed step.
pub fn cfl_dt(state: &SolverState, config: &SolverConfig) -> f64 {
    match config.dt {
        DtPolicy::Cfl { safety, dt_max } => cfl_limit(state, safety, dt_max),
        DtPolicy::Fixed(dt) => cfl_limit(state, 0.5, dt),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub step: u64,
    pub l2: f64,
    pub linf: f64,
    /// `‖Λ^{1/2}θ‖_{L²}`.
    pub h_half: f64,
    pub h1: f64,
    pub h32: f64,
    /// `∫₀ᵗ ‖Λ^{1/2}θ‖² ds` (trapezoid at step resolution).
    pub int_half: f64,
    /// `∫₀ᵗ ‖θ‖²_{H^{3/2}} ds`.
    pub int_h32: f64,
    pub snapshot: Option<SpectralField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    L2,
    Linf,
    HHalf,
    H1,
    H32,
    IntHalf,
    IntH32,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::L2,
        Quantity::Linf,
        Quantity::HHalf,
        Quantity::H1,
        Quantity::H32,
        Quantity::IntHalf,
        Quantity::IntH32,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::L2 => "l2",
            Quantity::Linf => "linf",
            Quantity::HHalf => "h_half",
            Quantity::H1 => "h1",
            Quantity::H32 => "h32",
            Quantity::IntHalf => "int_half",
            Quantity::IntH32 => "int_h32",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name() == name)
    }

    fn get(self, s: &Sample) -> f64 {
        match self {
            Quantity::L2 => s.l2,
            Quantity::Linf => s.linf,
            Quantity::HHalf => s.h_half,
            Quantity::H1 => s.h1,
            Quantity::H32 => s.h32,
            Quantity::IntHalf => s.int_half,
            Quantity::IntH32 => s.int_h32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub kappa: f64,
    pub n: usize,
    pub samples: Vec<Sample>,
    pub observer_errors: Vec<String>,
}

impl TrajectoryRecord {
    pub fn series(&self, q: Quantity) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, q.get(s))).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Samples that carry a full field.
    pub fn snapshots(&self) -> impl Iterator<Item = (f64, &SpectralField)> {
        self.samples
            .iter()
            .filter_map(|s| s.snapshot.as_ref().map(|f| (s.t, f)))
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Linear interpolation of an accumulated integral at time `t`.
    pub fn integral_at(&self, q: Quantity, t: f64) -> f64 {
        interpolate(&self.series(q), t)
    }
}

pub(crate) fn interpolate(series: &[(f64, f64)], t: f64) -> f64 {
    match series.binary_search_by(|p| p.0.partial_cmp(&t).unwrap()) {
        Ok(i) => series[i].1,
        Err(0) => series[0].1,
        Err(i) if i == series.len() => series[i - 1].1,
        Err(i) => {
            let (t0, v0) = series[i - 1];
            let (t1, v1) = series[i];
            v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        }
    }
}

/// Receives every sampled state. Errors are logged in the record and do not
/// stop the integration.
pub trait Observer {
    fn observe(&mut self, state: &SolverState, sample: &Sample) -> std::result::Result<(), String>;
}

impl<F> Observer for F
where
    F: FnMut(&SolverState, &Sample) -> std::result::Result<(), String>,
{
    fn observe(&mut self, state: &SolverState, sample: &Sample) -> std::result::Result<(), String> {
        self(state, sample)
    }
}

/// A run that stopped early, with everything recorded up to the failure.
#[derive(Debug)]
pub struct Aborted {
    pub error: SqgError,
    pub partial: TrajectoryRecord,
    pub last_state: SolverState,
}

impl From<Box<Aborted>> for SqgError {
    fn from(a: Box<Aborted>) -> Self {
        a.error
    }
}

/// `S(T)θ₀` with a full trajectory record.
pub fn evolve(
    config: &SolverConfig,
    theta0: &SpectralField,
    duration: f64,
    observers: &mut [&mut dyn Observer],
) -> std::result::Result<(TrajectoryRecord, SolverState), Box<Aborted>> {
    evolve_from(config, &SolverState::new(theta0.clone()), duration, observers)
}

/// Continues from an existing state for `duration`.
pub fn evolve_from(
    config: &SolverConfig,
    start: &SolverState,
    duration: f64,
    observers: &mut [&mut dyn Observer],
) -> std::result::Result<(TrajectoryRecord, SolverState), Box<Aborted>> {
    let mut record = TrajectoryRecord {
        kappa: config.kappa,
        n: config.grid.n(),
        samples: Vec::new(),
        observer_errors: Vec::new(),
    };
    let abort = |error: SqgError, record: TrajectoryRecord, state: SolverState| {
        Box::new(Aborted {
            error,
            partial: record,
            last_state: state,
        })
    };
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(abort(
            invalid("T", format!("{duration} must be positive")),
            record,
            start.clone(),
        ));
    }
    if start.theta.grid() != config.grid {
        return Err(abort(
            SqgError::GridMismatch {
                expected: config.grid.n(),
                found: start.theta.grid().n(),
            },
            record,
            start.clone(),
        ));
    }

    let t_end = start.t + duration;
    let reference = linf_norm(&start.theta, 1)
        .max(linf_norm(&config.forcing, 1))
        .max(f64::MIN_POSITIVE);
    let mut state = start.clone();
    let mut q_half = hs_norm_sq(&state.theta, 0.5);
    let mut q_32 = hs_norm_sq(&state.theta, 1.5);
    let (mut int_half, mut int_h32) = (0.0, 0.0);
    let mut sample_index = 0u64;
    let mut local_steps = 0u64;

    let mut take_sample = |state: &SolverState,
                           int_half: f64,
                           int_h32: f64,
                           record: &mut TrajectoryRecord,
                           observers: &mut [&mut dyn Observer]| {
        let sampling = config.sampling;
        let every = if state.t <= sampling.snapshot_until + 1e-12 {
            sampling.snapshot_every
        } else {
            sampling.late_snapshot_every
        };
        let keep = every > 0 && sample_index % every == 0;
        let sample = Sample {
            t: state.t,
            step: state.step,
            l2: hs_norm(&state.theta, 0.0),
            linf: linf_norm(&state.theta, 1),
            h_half: hs_norm(&state.theta, 0.5),
            h1: hs_norm(&state.theta, 1.0),
            h32: hs_norm(&state.theta, 1.5),
            int_half,
            int_h32,
            snapshot: keep.then(|| state.theta.clone()),
        };
        for obs in observers.iter_mut() {
            if let Err(e) = obs.observe(state, &sample) {
                record
                    .observer_errors
                    .push(format!("t={} step={}: {e}", state.t, state.step));
            }
        }
        record.samples.push(sample);
        sample_index += 1;
    };

    take_sample(&state, 0.0, 0.0, &mut record, observers);

    let fixed_steps = match config.dt {
        DtPolicy::Fixed(dt) => Some((dt, ((duration / dt) - 1e-9).ceil().max(1.0) as u64)),
        DtPolicy::Cfl { .. } => None,
    };

    loop {
        let (dt, last) = match fixed_steps {
            Some((dt, total)) => {
                if local_steps + 1 == total {
                    let remaining = t_end - (start.t + local_steps as f64 * dt);
                    // exact multiples keep the nominal step for reproducible sequences
                    let dt_last = if (remaining - dt).abs() <= 1e-9 * dt { dt } else { remaining };
                    (dt_last, true)
                } else {
                    (dt, false)
                }
            }
            None => {
                let dt = cfl_dt(&state, config);
                let remaining = t_end - state.t;
                if dt >= remaining * (1.0 - 1e-12) {
                    (remaining, true)
                } else {
                    (dt, false)
                }
            }
        };
        let mut next = match step(config, &state, dt) {
            Ok(s) => s,
            Err(e) => return Err(abort(e, record, state)),
        };
        local_steps += 1;
        if let Some((dt0, _)) = fixed_steps {
            next.t = if last {
                t_end
            } else {
                start.t + local_steps as f64 * dt0
            };
        } else if last {
            next.t = t_end;
        }
        // Σ|ĉ| bounds the sup norm; the transform is only needed past the threshold
        let coeff_sum: f64 = next.theta.coeffs().iter().map(|c| c.norm()).sum();
        let linf = if coeff_sum > BLOW_UP_FACTOR * reference {
            linf_norm(&next.theta, 1)
        } else {
            coeff_sum
        };
        if linf > BLOW_UP_FACTOR * reference {
            let reason = format!("|θ|_inf = {linf:e} exceeds {BLOW_UP_FACTOR:e} x reference {reference:e}");
            return Err(abort(
                SqgError::BlowUp {
                    t: next.t,
                    step: next.step,
                    reason,
                },
                record,
                next,
            ));
        }
        let nq_half = hs_norm_sq(&next.theta, 0.5);
        let nq_32 = hs_norm_sq(&next.theta, 1.5);
        int_half += 0.5 * dt * (q_half + nq_half);
        int_h32 += 0.5 * dt * (q_32 + nq_32);
        q_half = nq_half;
        q_32 = nq_32;
        state = next;
        if last || local_steps % config.sampling.every == 0 {
            take_sample(&state, int_half, int_h32, &mut record, observers);
        }
        if last {
            break;
        }
    }
    Ok((record, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::l2_norm;
    use std::f64::consts::PI;

    fn cosine(n: usize) -> SpectralField {
        SpectralField::from_fn(TorusGrid::new(n).unwrap(), |x1, _| (2.0 * PI * x1).cos()).unwrap()
    }

    #[test]
    fn plane_wave_has_no_transport() {
        let f = cosine(32);
        let nl = nonlinear_term(&f);
        assert!(nl.coeffs().iter().all(|c| c.norm() < 1e-12));
        let z = SpectralField::zeros(f.grid());
        assert!(nonlinear_term(&z).coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn transport_is_skew() {
        for seed in 0..5 {
            let f = SpectralField::random_band_limited(TorusGrid::new(64).unwrap(), 12, seed).unwrap();
            let nl = nonlinear_term(&f);
            let ip = f.inner(&nl).unwrap();
            assert!(ip.abs() <= 1e-10 * l2_norm(&f) * l2_norm(&nl), "{ip}");
            assert_eq!(nl.coeffs()[0].norm(), 0.0);
            assert!(nl.hermitian_defect() == 0.0);
        }
    }

    #[test]
    fn single_mode_decays_exactly() {
        let g = TorusGrid::new(16).unwrap();
        let cfg = SolverConfig::new(g, 1.0, 1e-3).unwrap();
        let (_, end) = evolve(&cfg, &cosine(16), 0.25, &mut []).unwrap();
        let amp = end.theta.coeff(1, 0).re;
        let expect = 0.5 * (-2.0 * PI * 0.25f64).exp();
        assert!((amp - expect).abs() <= 1e-8 * expect);
        assert_eq!(end.step, 250);
        assert_eq!(end.t, 0.25);
    }

    #[test]
    fn zero_stays_zero() {
        let g = TorusGrid::new(16).unwrap();
        let cfg = SolverConfig::new(g, 1.0, 1e-2).unwrap();
        let (rec, end) = evolve(&cfg, &SpectralField::zeros(g), 0.1, &mut []).unwrap();
        assert!(end.theta.coeffs().iter().all(|c| c.norm() == 0.0));
        assert!(rec.samples.iter().all(|s| s.l2 == 0.0 && s.int_half == 0.0));
    }

    #[test]
    fn cfl_formula() {
        let g = TorusGrid::new(64).unwrap();
        let zero = SolverState::new(SpectralField::zeros(g));
        assert_eq!(cfl_limit(&zero, 0.5, 0.01), 0.01);
        // cos(2πx₁) has |u| = |sin(2πx₁)| with max 1 on the grid
        let s64 = SolverState::new(cosine(64));
        assert!((cfl_limit(&s64, 0.5, 1.0) - 0.5 / 64.0).abs() < 1e-15);
        let s128 = SolverState::new(cosine(128));
        assert!((cfl_limit(&s128, 0.5, 1.0) * 2.0 - cfl_limit(&s64, 0.5, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let g = TorusGrid::new(16).unwrap();
        assert!(SolverConfig::new(g, 1.5, 1e-3).is_err());
        assert!(SolverConfig::new(g, -0.1, 1e-3).is_err());
        assert!(SolverConfig::new(g, 0.0, 1e-3).is_ok());
        assert!(SolverConfig::new(g, 1.0, 0.0).is_err());
        let mut c = SolverConfig::new(g, 1.0, 1e-3).unwrap();
        c.dt = DtPolicy::Cfl {
            safety: 1.2,
            dt_max: 0.1,
        };
        assert!(c.validated().is_err());
        let c = SolverConfig::new(g, 1.0, 1e-3).unwrap();
        assert!(c.with_forcing(SpectralField::zeros(TorusGrid::new(32).unwrap())).is_err());
    }

    #[test]
    fn observers_see_every_sample_and_failures_are_logged() {
        let g = TorusGrid::new(16).unwrap();
        let cfg = SolverConfig::new(g, 1.0, 1e-2)
            .unwrap()
            .with_sampling(Sampling {
                every: 2,
                ..Sampling::default()
            })
            .unwrap();
        let mut seen = Vec::new();
        let mut good = |s: &SolverState, _: &Sample| -> std::result::Result<(), String> {
            seen.push(s.step);
            Ok(())
        };
        let mut bad = |s: &SolverState, _: &Sample| -> std::result::Result<(), String> {
            if s.step == 4 {
                Err("boom".into())
            } else {
                Ok(())
            }
        };
        let (rec, _) = evolve(&cfg, &cosine(16), 0.1, &mut [&mut good, &mut bad]).unwrap();
        assert_eq!(seen, vec![0, 2, 4, 6, 8, 10]);
        assert_eq!(rec.samples.len(), 6);
        assert_eq!(rec.observer_errors.len(), 1);
        assert!(rec.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn undealiased_blow_up_is_caught_or_run_completes() {
        let g = TorusGrid::new(16).unwrap();
        let mut cfg = SolverConfig::new(g, 0.0, 0.05).unwrap();
        cfg.dealias = Dealias::Off;
        let theta = SpectralField::random_band_limited(g, 7, 1).unwrap().scale(50.0);
        match evolve(&cfg, &theta, 20.0, &mut []) {
            Err(a) => {
                assert!(matches!(a.error, SqgError::BlowUp { .. }));
                assert!(!a.partial.samples.is_empty());
            }
            Ok((rec, _)) => assert!(rec.last().linf.is_finite()),
        }
    }

    #[test]
    fn imex_single_mode_first_order() {
        let g = TorusGrid::new(16).unwrap();
        let mut cfg = SolverConfig::new(g, 1.0, 1e-3).unwrap();
        cfg.scheme = Scheme::ImexEuler;
        let (_, end) = evolve(&cfg, &cosine(16), 0.1, &mut []).unwrap();
        let expect = 0.5 * (1.0 + 2.0 * PI * 1e-3f64).powi(-100);
        assert!((end.theta.coeff(1, 0).re - expect).abs() < 1e-14);
    }

    #[test]
    fn cfl_policy_hits_final_time() {
        let g = TorusGrid::new(32).unwrap();
        let mut cfg = SolverConfig::new(g, 1.0, 1e-3).unwrap();
        cfg.dt = DtPolicy::Cfl {
            safety: 0.5,
            dt_max: 0.01,
        };
        let theta = SpectralField::random_band_limited(g, 5, 3).unwrap();
        let (rec, end) = evolve(&cfg, &theta, 0.3, &mut []).unwrap();
        assert_eq!(end.t, 0.3);
        assert!(rec.samples.windows(2).all(|w| w[1].t > w[0].t));
    }
}
