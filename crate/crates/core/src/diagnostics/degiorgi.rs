use super::ledger::{Constant, ConstantsLedger};
use super::{require_kappa, require_samples, ForcingNorms};
use crate::dynamics::TrajectoryRecord;
use crate::error::{invalid, Result, SqgError};
use crate::field::{SpectralField, TruncatedField};

/// `(θ - level)₊` evaluated on the grid. The result keeps its mean and is not
/// band-limited.
pub fn truncate(theta: &SpectralField, level: f64) -> Result<TruncatedField> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(invalid("level", format!("{level} must be finite and non-negative")));
    }
    Ok(truncate_samples(theta.grid(), &theta.to_samples(), level))
}

fn truncate_samples(grid: crate::TorusGrid, samples: &[f64], level: f64) -> TruncatedField {
    TruncatedField::from_samples(grid, samples.iter().map(|&v| (v - level).max(0.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeGiorgiParams {
    /// Truncation amplitude `M`.
    pub m: f64,
    /// Cutoff limit `t₀`; the window ends at `2t₀`.
    pub t0: f64,
    pub k_max: usize,
    /// Snapshots required in the narrowest window.
    pub min_snapshots: usize,
}

impl DeGiorgiParams {
    pub fn new(m: f64) -> Self {
        Self {
            m,
            t0: 0.5,
            k_max: 10,
            min_snapshots: 64,
        }
    }

    pub fn eta(&self, k: usize) -> f64 {
        self.m * (1.0 - 0.5f64.powi(k as i32))
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.t0 * (1.0 - 0.5f64.powi(k as i32))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderRung {
    pub k: usize,
    pub eta: f64,
    pub tau: f64,
    pub q: f64,
    pub sup_l2_sq: f64,
    pub dissipation: f64,
    /// `Q_k / Q_{k-1}`, zero when `Q_{k-1} = 0`.
    pub ratio: Option<f64>,
    /// `2^k/(2t₀)·∫_{τ_{k-1}}^{2t₀}‖θ_k‖² + 2‖f‖_{L∞}∫_{τ_{k-1}}^{2t₀}‖θ_k‖_{L¹}`.
    pub audit_rhs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeGiorgiLadder {
    pub params: DeGiorgiParams,
    pub rungs: Vec<LadderRung>,
    /// `Q_{k_max} < 10⁻¹⁰·Q₀`.
    pub converged: bool,
    /// `Q_k ≤ Q_{k-1}/2` for every `k ≥ 3`.
    pub geometric: bool,
    /// `‖θ₀‖² + ‖f‖²/(c₀κ)` when `c₀` is known.
    pub q0_bound: Option<f64>,
    pub snapshots_used: usize,
    pub notes: Vec<String>,
}

impl DeGiorgiLadder {
    pub fn q(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.q).collect()
    }

    pub fn audit_holds(&self) -> bool {
        self.rungs
            .iter()
            .all(|r| r.audit_rhs.map_or(true, |rhs| r.q <= rhs * (1.0 + 1e-9) + 1e-300))
    }
}

/// Smallest `c` with `‖θ(t)‖_{L∞} ≤ (c/κ)[‖θ₀‖_{L²} + κ^{-1/2}‖f‖_{L²}]` on
/// `[t₀/2, 2t₀]`, the window the ladder reads.
pub fn fit_truncation_prefactor(
    traj: &TrajectoryRecord,
    t0: f64,
    f: ForcingNorms,
    kappa: f64,
) -> Result<Constant> {
    require_kappa(kappa)?;
    require_samples(traj)?;
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(invalid("t0", format!("{t0} must be positive")));
    }
    let start = traj.first().t;
    let scale = traj.first().l2 + f.l2 / kappa.sqrt();
    if !(scale > 0.0) {
        return Err(invalid("theta0", "zero data and zero forcing"));
    }
    let window = (start + 0.5 * t0, start + 2.0 * t0);
    let c = traj
        .samples
        .iter()
        .filter(|s| s.t >= window.0 - 1e-12 && s.t <= window.1 + 1e-12)
        .map(|s| kappa * s.linf / scale)
        .fold(f64::NAN, f64::max);
    if c.is_nan() {
        return Err(SqgError::InsufficientData(format!(
            "no samples in [{}, {}]",
            window.0, window.1
        )));
    }
    Ok(Constant::fitted(c, window))
}

/// `M = max(2‖f‖_{L∞}, (c/κ)[‖θ₀‖_{L²} + κ^{-1/2}‖f‖_{L²}])`, with `c` the
/// ledger's `c_dg` when present and its `L∞` prefactor otherwise.
pub fn auto_truncation_amplitude(
    ledger: &ConstantsLedger,
    theta0_l2: f64,
    f: ForcingNorms,
    kappa: f64,
) -> Result<f64> {
    require_kappa(kappa)?;
    let c = ledger
        .c_dg
        .or(ledger.c_linf)
        .ok_or_else(|| invalid("c_dg", "ledger has no truncation prefactor"))?
        .value;
    let m = (2.0 * f.linf).max(c / kappa * (theta0_l2 + f.l2 / kappa.sqrt()));
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid("M", format!("threshold evaluates to {m}")));
    }
    Ok(m)
}

struct Slice {
    t: f64,
    l2_sq: f64,
    half_sq: f64,
    l1: f64,
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// Truncation energies `Q_k = sup_{[τ_k, 2t₀]}‖θ_k‖² + 2κ∫_{τ_k}^{2t₀}‖Λ^{1/2}θ_k‖²`
/// with `θ_k = (θ - η_k)₊`, from stored snapshots.
pub fn degiorgi_ladder(
    traj: &TrajectoryRecord,
    params: DeGiorgiParams,
    kappa: f64,
    f: ForcingNorms,
    c0: Option<f64>,
) -> Result<DeGiorgiLadder> {
    require_kappa(kappa)?;
    if !(params.m > 0.0 && params.m.is_finite()) {
        return Err(invalid("M", format!("{} must be positive", params.m)));
    }
    if !(params.t0 > 0.0 && params.t0 <= 1.0) {
        return Err(invalid("t0", format!("{} outside (0, 1]", params.t0)));
    }
    if params.k_max == 0 {
        return Err(invalid("k_max", "must be at least 1"));
    }
    let t_start = traj.samples.first().map(|s| s.t).unwrap_or(0.0);
    let end = 2.0 * params.t0;
    let snaps: Vec<(f64, &SpectralField)> = traj
        .snapshots()
        .map(|(t, f)| (t - t_start, f))
        .filter(|(t, _)| *t <= end + 1e-9)
        .collect();
    let tau_last = params.tau(params.k_max);
    let in_last = snaps.iter().filter(|(t, _)| *t >= tau_last - 1e-12).count();
    let covers = snaps.last().is_some_and(|(t, _)| *t >= end - 1e-9) && snaps.first().is_some_and(|(t, _)| *t <= 1e-12);
    if in_last < params.min_snapshots || !covers {
        let cadence = (end - tau_last) / params.min_snapshots as f64;
        return Err(SqgError::InsufficientData(format!(
            "De Giorgi window [{tau_last}, {end}] needs {} snapshots and coverage of [0, {end}]; found {in_last} \
             (snapshot spacing must be at most {cadence:.3e})",
            params.min_snapshots
        )));
    }

    let grid = snaps[0].1.grid();
    let samples: Vec<Vec<f64>> = snaps.iter().map(|(_, f)| f.to_samples()).collect();
    let mut rungs: Vec<LadderRung> = Vec::with_capacity(params.k_max + 1);
    for k in 0..=params.k_max {
        let eta = params.eta(k);
        let tau = params.tau(k);
        let tau_prev = if k == 0 { 0.0 } else { params.tau(k - 1) };
        let slices: Vec<Slice> = snaps
            .iter()
            .zip(&samples)
            .filter(|((t, _), _)| *t >= tau_prev - 1e-12)
            .map(|((t, _), s)| {
                let tr = truncate_samples(grid, s, eta);
                if tr.is_zero() {
                    Slice {
                        t: *t,
                        l2_sq: 0.0,
                        half_sq: 0.0,
                        l1: 0.0,
                    }
                } else {
                    let l2 = tr.l2_norm();
                    let half = tr.hs_seminorm(0.5);
                    Slice {
                        t: *t,
                        l2_sq: l2 * l2,
                        half_sq: half * half,
                        l1: tr.l1_norm(),
                    }
                }
            })
            .collect();
        let window: Vec<&Slice> = slices.iter().filter(|s| s.t >= tau - 1e-12).collect();
        let sup_l2_sq = window.iter().map(|s| s.l2_sq).fold(0.0, f64::max);
        let dissipation = 2.0 * kappa * trapezoid(&window.iter().map(|s| (s.t, s.half_sq)).collect::<Vec<_>>());
        let q = sup_l2_sq + dissipation;
        let audit_rhs = (k > 0).then(|| {
            let l2_int = trapezoid(&slices.iter().map(|s| (s.t, s.l2_sq)).collect::<Vec<_>>());
            let l1_int = trapezoid(&slices.iter().map(|s| (s.t, s.l1)).collect::<Vec<_>>());
            2f64.powi(k as i32) / (2.0 * params.t0) * l2_int + 2.0 * f.linf * l1_int
        });
        let ratio = rungs.last().map(|prev: &LadderRung| if prev.q > 0.0 { q / prev.q } else { 0.0 });
        rungs.push(LadderRung {
            k,
            eta,
            tau,
            q,
            sup_l2_sq,
            dissipation,
            ratio,
            audit_rhs,
        });
    }
    let q0 = rungs[0].q;
    let q_last = rungs[params.k_max].q;
    let converged = q0 == 0.0 || q_last < 1e-10 * q0;
    let geometric = rungs.iter().filter(|r| r.k >= 3).all(|r| r.ratio.unwrap_or(0.0) <= 0.5);
    let theta0_l2 = traj.first().l2;
    let q0_bound = c0.map(|c0| theta0_l2 * theta0_l2 + f.l2 * f.l2 / (c0 * kappa));
    let mut notes = Vec::new();
    if params.m < 2.0 * f.linf {
        notes.push(format!("M = {} is below 2|f|_inf = {}", params.m, 2.0 * f.linf));
    }
    Ok(DeGiorgiLadder {
        params,
        rungs,
        converged,
        geometric,
        q0_bound,
        snapshots_used: snaps.len(),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TorusGrid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cosine(n: usize) -> SpectralField {
        SpectralField::from_fn(TorusGrid::new(n).unwrap(), |x1, _| (2.0 * PI * x1).cos()).unwrap()
    }

    #[test]
    fn truncation_examples() {
        let c = cosine(64);
        assert!(truncate(&c, 1.0).unwrap().is_zero());
        let pos = truncate(&c, 0.0).unwrap();
        assert!((pos.l1_norm() - 1.0 / PI).abs() < 1e-3, "{}", pos.l1_norm());
        assert!(truncate(&c, -0.1).is_err());
    }

    #[test]
    fn cutoffs_and_levels_closed_form() {
        let p = DeGiorgiParams::new(2.0);
        assert_eq!(p.eta(0), 0.0);
        assert_eq!(p.eta(1), 1.0);
        assert_eq!(p.tau(1), 0.25);
        assert!((0..20).all(|k| p.eta(k + 1) > p.eta(k) && p.tau(k + 1) > p.tau(k)));
        assert!((p.eta(60) - 2.0).abs() < 1e-15 && (p.tau(60) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn positive_and_negative_parts_sum_to_modulus(seed in 0u64..200) {
            let g = TorusGrid::new(16).unwrap();
            let f = SpectralField::random_band_limited(g, 5, seed).unwrap();
            let a = truncate(&f, 0.0).unwrap();
            let b = truncate(&f.scale(-1.0), 0.0).unwrap();
            for ((x, y), v) in a.samples().iter().zip(b.samples()).zip(f.to_samples()) {
                prop_assert!((x + y - v.abs()).abs() < 1e-15);
            }
        }

        #[test]
        fn truncation_is_monotone_in_level(seed in 0u64..200, l1 in 0.0f64..1.0, dl in 0.0f64..1.0) {
            let g = TorusGrid::new(16).unwrap();
            let f = SpectralField::random_band_limited(g, 5, seed).unwrap();
            let lo = truncate(&f, l1).unwrap();
            let hi = truncate(&f, l1 + dl).unwrap();
            prop_assert!(hi.samples().iter().zip(lo.samples()).all(|(h, l)| h <= l));
        }
    }
}
