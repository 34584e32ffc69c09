//! Orchestration: evolve a scenario, run its checks, persist everything.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use sqg_core::diagnostics::{
    absorbing_entry_time, alpha_choice, auto_truncation_amplitude, continuity_probe, degiorgi_ladder,
    energy_inequality_check, fit_c0, fit_decay_envelope, fit_truncation_prefactor, h1_envelope_check,
    holder_bound_check, linf_estimate_check, render_reports, CheckReport, Constant, ConstantsLedger,
    DeGiorgiLadder, DeGiorgiParams, EntryReport, ForcingNorms, H1EnvelopeCheck, HolderBoundCheck, Status,
};
use sqg_core::dissipation::dissipation_integral_check;
use sqg_core::dynamics::{evolve, Quantity, SolverConfig, TrajectoryRecord};
use sqg_core::holder::HolderProbeConfig;
use sqg_core::{Mode, SpectralField};

use crate::error::HarnessError;
use crate::manifest::{spec_hash, CheckOutcome, RunManifest, RunStatus};
use crate::scenario::{ScenarioSpec, CHECK_NAMES};
use crate::store;

/// Lazily fitted constants and shared intermediate results for the checks
/// on one trajectory.
pub struct Analysis<'a> {
    pub spec: &'a ScenarioSpec,
    pub traj: &'a TrajectoryRecord,
    pub config: SolverConfig,
    pub f: ForcingNorms,
    pub kappa: f64,
    ledger: Option<ConstantsLedger>,
    c0_report: Option<CheckReport>,
    linf_done: bool,
    holder: Option<HolderBoundCheck>,
    h1: Option<H1EnvelopeCheck>,
}

impl<'a> Analysis<'a> {
    pub fn new(spec: &'a ScenarioSpec, traj: &'a TrajectoryRecord) -> Result<Self, HarnessError> {
        let config = spec.solver_config()?;
        let f = ForcingNorms::of(&config.forcing);
        Ok(Self {
            spec,
            traj,
            kappa: spec.kappa,
            config,
            f,
            ledger: None,
            c0_report: None,
            linf_done: false,
            holder: None,
            h1: None,
        })
    }

    /// Identically zero trajectory under zero forcing: every estimate holds
    /// trivially.
    fn is_vacuous(&self) -> bool {
        self.f.l2 == 0.0 && self.traj.samples.iter().all(|s| s.l2 == 0.0)
    }

    fn theta0(&self) -> Result<&SpectralField, HarnessError> {
        self.traj
            .samples
            .first()
            .and_then(|s| s.snapshot.as_ref())
            .ok_or_else(|| HarnessError::Config("the initial snapshot was not stored".into()))
    }

    /// Ledger with `c₀` configured or fitted.
    pub fn ledger(&mut self) -> Result<&mut ConstantsLedger, HarnessError> {
        if self.ledger.is_none() {
            let c0 = match self.spec.ledger.c0 {
                Some(c0) => Constant::configured(c0),
                None => {
                    let (c0, report) = fit_c0(self.traj, self.kappa, self.f)?;
                    self.c0_report = Some(report);
                    c0
                }
            };
            self.ledger = Some(ConstantsLedger::new(c0)?.with_c3(self.spec.ledger.c3)?);
        }
        Ok(self.ledger.as_mut().unwrap())
    }

    pub fn ledger_snapshot(&self) -> Option<&ConstantsLedger> {
        self.ledger.as_ref()
    }

    pub fn c0(&mut self) -> Result<f64, HarnessError> {
        Ok(self.ledger()?.c0.value)
    }

    pub fn alpha(&mut self) -> Result<f64, HarnessError> {
        match self.spec.holder.alpha.value() {
            Some(a) => Ok(a),
            None => {
                let theta0_linf = self.traj.first().linf;
                let (f, kappa) = (self.f, self.kappa);
                let ledger = self.ledger()?;
                let k_inf = ledger.k_inf(theta0_linf, f, kappa);
                let c3 = ledger.c3;
                Ok(alpha_choice(k_inf, kappa, c3)?)
            }
        }
    }

    pub fn probe(&mut self) -> Result<HolderProbeConfig, HarnessError> {
        let alpha = self.alpha()?;
        Ok(HolderProbeConfig::with_default_shifts(
            self.config.grid,
            alpha,
            self.spec.holder.xi0,
        )?)
    }

    pub fn holder(&mut self) -> Result<&HolderBoundCheck, HarnessError> {
        if self.holder.is_none() {
            let probe = self.probe()?;
            let (f, kappa) = (self.f, self.kappa);
            let ledger = self.ledger()?.clone();
            let check = holder_bound_check(
                self.traj,
                &probe,
                self.spec.holder.xi0,
                &ledger,
                f,
                kappa,
                self.spec.holder.max_snapshots,
            )?;
            let range = (check.report.range.0, check.report.range.1);
            self.ledger()?.c_holder = Some(Constant::fitted(check.c_fitted, range));
            self.holder = Some(check);
        }
        Ok(self.holder.as_ref().unwrap())
    }

    pub fn h1(&mut self) -> Result<&H1EnvelopeCheck, HarnessError> {
        if self.h1.is_none() {
            let (alpha, m) = {
                let h = self.holder()?;
                (h.alpha, h.sup_seminorm)
            };
            let (f, kappa) = (self.f, self.kappa);
            let ledger = self.ledger()?.clone();
            let check = h1_envelope_check(self.traj, &ledger, f, kappa, alpha, m)?;
            let range = check.report.range;
            let ledger = self.ledger()?;
            ledger.c_h1 = Some(Constant::fitted(check.c_k1, range));
            ledger.c_h32 = Some(Constant::fitted(check.c_h32, range));
            self.h1 = Some(check);
        }
        Ok(self.h1.as_ref().unwrap())
    }

    fn ensure_linf(&mut self) -> Result<Option<CheckReport>, HarnessError> {
        if self.linf_done {
            return Ok(None);
        }
        let (f, kappa) = (self.f, self.kappa);
        let ledger = self.ledger()?.clone();
        let est = linf_estimate_check(self.traj, &ledger, f, kappa)?;
        let range = est.report.range;
        self.ledger()?.c_linf = Some(Constant::fitted(est.c_fitted, range));
        self.linf_done = true;
        Ok(Some(est.report))
    }

    /// The level-set ladder with `m` given, or from the fitted threshold.
    pub fn ladder(&mut self, m: Option<f64>, t0: f64, k_max: usize) -> Result<DeGiorgiLadder, HarnessError> {
        let (f, kappa) = (self.f, self.kappa);
        let m = match m {
            Some(m) => m,
            None => {
                let c_dg = fit_truncation_prefactor(self.traj, t0, f, kappa)?;
                let theta0_l2 = self.traj.first().l2;
                let ledger = self.ledger()?;
                ledger.c_dg = Some(c_dg);
                auto_truncation_amplitude(ledger, theta0_l2, f, kappa)?
            }
        };
        let c0 = self.c0()?;
        let params = DeGiorgiParams {
            k_max,
            t0,
            ..DeGiorgiParams::new(m)
        };
        Ok(degiorgi_ladder(self.traj, params, kappa, f, Some(c0))?)
    }

    /// Entry of the named series into the named absorbing ball.
    pub fn absorb(&mut self, ball: Ball) -> Result<(EntryReport, Vec<(f64, f64)>), HarnessError> {
        let (f, kappa) = (self.f, self.kappa);
        Ok(match ball {
            Ball::Linf => {
                let radius = self.ledger()?.b_inf_radius(f, kappa);
                let series = self.traj.series(Quantity::Linf);
                (absorbing_entry_time(&series, radius), series)
            }
            Ball::Calpha => {
                let series = self.holder()?.seminorm.clone();
                let radius = self.ledger()?.b_alpha_radius(f, kappa).expect("holder constant fitted");
                (absorbing_entry_time(&series, radius), series)
            }
            Ball::H1 | Ball::H32 => {
                self.h1()?;
                let alpha = self.holder()?.alpha;
                let ledger = self.ledger()?;
                let (radius_sq, q) = if ball == Ball::H1 {
                    (ledger.r1_sq(alpha, f, kappa), Quantity::H1)
                } else {
                    (ledger.r2_sq(alpha, f, kappa), Quantity::H32)
                };
                let radius = radius_sq.expect("sobolev constants fitted").sqrt();
                let series = self.traj.series(q);
                (absorbing_entry_time(&series, radius), series)
            }
        })
    }

    /// Runs one named check.
    pub fn check(&mut self, name: &str) -> Result<Vec<CheckReport>, HarnessError> {
        let tol = self.spec.tolerance(name);
        let first = self.traj.first().t;
        let last = self.traj.last().t;
        let range = (first, last);
        if self.is_vacuous() && CHECK_NAMES.contains(&name) {
            return Ok(vec![CheckReport::new(name, Status::Pass, range).with_note("zero data and zero forcing")]);
        }
        let report = match name {
            "conservation" => {
                let l2_0 = self.traj.first().l2;
                let drift = self
                    .traj
                    .samples
                    .iter()
                    .map(|s| if l2_0 > 0.0 { (s.l2 - l2_0).abs() / l2_0 } else { s.l2 })
                    .fold(0.0, f64::max);
                let tol = tol.unwrap_or(1e-6);
                let mut r = CheckReport::new("conservation", Status::from_bool(drift <= tol), range)
                    .with_constant("l2_initial", l2_0);
                r.tolerance = Some(tol);
                r.max_residual = drift;
                r
            }
            "exact_decay" => {
                let shell = self.spec.exact_decay_shell()?;
                let rate = self.kappa * 2.0 * std::f64::consts::PI * shell;
                let l2_0 = self.traj.first().l2;
                let err = self
                    .traj
                    .samples
                    .iter()
                    .map(|s| {
                        let exact = l2_0 * (-rate * (s.t - first)).exp();
                        if exact > 0.0 { (s.l2 - exact).abs() / exact } else { s.l2 }
                    })
                    .fold(0.0, f64::max);
                let tol = tol.unwrap_or(1e-6);
                let final_ratio = if l2_0 > 0.0 { self.traj.last().l2 / l2_0 } else { 0.0 };
                let mut r = CheckReport::new("exact_decay", Status::from_bool(err <= tol), range)
                    .with_constant("rate", rate)
                    .with_constant("final_amplitude_ratio", final_ratio);
                r.tolerance = Some(tol);
                r.max_residual = err;
                r
            }
            "energy_inequality" => {
                let c0 = self.c0()?;
                let tol = tol.unwrap_or(1e-3);
                let mut check = energy_inequality_check(self.traj, self.kappa, self.f, Some(c0), tol)?;
                // the energy-only fit is informative on its own
                let energy_only = energy_inequality_check(self.traj, self.kappa, self.f, None, tol)?;
                check.report = check.report.with_constant("c0_energy_only", energy_only.c0_fitted);
                check.report
            }
            "decay_envelope" => {
                let c0 = self.c0()?;
                let tol = tol.unwrap_or(1e-9);
                let mut reports = Vec::new();
                for (q, forcing) in [(Quantity::L2, self.f.l2), (Quantity::Linf, self.f.linf)] {
                    let series = self.traj.series(q);
                    let asymptote = forcing / (c0 * self.kappa);
                    let fit = fit_decay_envelope(&series, asymptote)?;
                    let tail = series.last().map(|s| s.1 - asymptote).unwrap_or(0.0);
                    let finite = fit.is_sentinel() || (fit.lambda > 0.0 && fit.lambda.is_finite());
                    // an unforced series only reaches its asymptote as t → ∞
                    let tail_ok = forcing == 0.0 || tail <= tol;
                    let ok = finite && fit.max_violation <= tol && tail_ok;
                    let mut r = CheckReport::new(format!("decay_envelope_{}", q.name()), Status::from_bool(ok), range)
                        .with_constant("lambda", fit.lambda)
                        .with_constant("prefactor", fit.prefactor)
                        .with_constant("asymptote", asymptote)
                        .with_constant("tail_excess", tail);
                    r.tolerance = Some(tol);
                    r.max_residual = fit.max_violation;
                    reports.push(r);
                }
                return Ok(reports);
            }
            "linf_estimate" => {
                self.linf_done = false;
                self.ensure_linf()?.expect("linf estimate just computed")
            }
            "degiorgi" => {
                let d = self.spec.degiorgi;
                let auto = d.m.value().is_none();
                let ladder = self.ladder(d.m.value(), d.t0, d.k_max)?;
                ladder_report(&ladder, auto)
            }
            "holder" => self.holder()?.report.clone(),
            "h1_envelope" => self.h1()?.report.clone(),
            "absorb_linf" | "absorb_calpha" | "absorb_h1" | "absorb_h32" => {
                let ball = Ball::parse(&name["absorb_".len()..]).expect("ball names match check names");
                let (entry, _) = self.absorb(ball)?;
                entry_report(name, &entry, range)
            }
            "continuity" => self.continuity(tol.unwrap_or(0.3))?,
            "dissipation_identity" => {
                let theta = self
                    .traj
                    .snapshots()
                    .last()
                    .map(|(_, f)| f.clone())
                    .ok_or_else(|| HarnessError::Config("no snapshot stored".into()))?;
                let check = dissipation_integral_check(&theta)?;
                let tol = tol.unwrap_or(0.01);
                let mut r = CheckReport::new("dissipation_identity", Status::from_bool(check.rel_err < tol), range)
                    .with_constant("quadrature", check.quadrature)
                    .with_constant("spectral", check.spectral);
                r.tolerance = Some(tol);
                r.max_residual = check.rel_err;
                r
            }
            other => return Err(HarnessError::Config(format!("`checks`: unknown check `{other}`"))),
        };
        Ok(vec![report])
    }

    fn continuity(&mut self, tol: f64) -> Result<CheckReport, HarnessError> {
        let c = &self.spec.continuity;
        let grid = self.config.grid;
        let k = c.mode.unwrap_or([grid.dealias_cutoff(), 0]);
        let theta_a = self.theta0()?.clone();
        let mut lambdas = Vec::new();
        let mut r = CheckReport::new("continuity", Status::Pass, (0.0, c.t_final));
        for &eps in &c.perturbations {
            let bump = SpectralField::from_modes(
                grid,
                &[Mode {
                    k1: k[0],
                    k2: k[1],
                    cos: eps,
                    sin: 0.0,
                }],
            )?;
            let theta_b = theta_a.add(&bump)?;
            let probe = continuity_probe(&self.config, &theta_a, &theta_b, c.t_final)?;
            let max_ratio = probe.ratio.iter().map(|p| p.1).fold(0.0, f64::max);
            r = r
                .with_constant(&format!("lambda_l[{eps:e}]"), probe.lambda_l)
                .with_constant(&format!("max_ratio[{eps:e}]"), max_ratio);
            lambdas.push(probe.lambda_l);
        }
        let hi = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = if lambdas.len() < 2 || hi == lo {
            0.0
        } else {
            (hi - lo) / hi.abs().max(lo.abs())
        };
        let finite = lambdas.iter().all(|l| l.is_finite());
        r.status = Status::from_bool(finite && spread <= tol);
        r.tolerance = Some(tol);
        r.max_residual = spread;
        Ok(r.with_note(format!("perturbed mode ({}, {})", k[0], k[1])))
    }

    /// Reports for every configured check plus the constants ledger.
    pub fn run_all(&mut self, checks: &[String]) -> Vec<CheckReport> {
        let mut reports = Vec::new();
        for name in checks {
            match self.check(name) {
                Ok(mut r) => reports.append(&mut r),
                Err(e) => reports.push(
                    CheckReport::new(name.clone(), Status::Fail, (0.0, 0.0)).with_note(format!("error: {e}")),
                ),
            }
        }
        if let Some(r) = self.c0_report.clone() {
            reports.push(r);
        }
        if let Some(ledger) = &self.ledger {
            reports.push(ledger.to_report());
        }
        reports
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ball {
    Linf,
    Calpha,
    H1,
    H32,
}

impl Ball {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linf" => Some(Ball::Linf),
            "calpha" => Some(Ball::Calpha),
            "h1" => Some(Ball::H1),
            "h32" => Some(Ball::H32),
            _ => None,
        }
    }
}

pub fn ladder_report(ladder: &DeGiorgiLadder, auto: bool) -> CheckReport {
    let q = ladder.q();
    let q0_ok = match (ladder.q0_bound, q.first()) {
        (Some(bound), Some(&q0)) => q0 <= bound * (1.0 + 1e-9),
        _ => true,
    };
    let ok = ladder.converged && ladder.geometric && q0_ok;
    let worst = ladder
        .rungs
        .iter()
        .filter(|r| r.k >= 3)
        .filter_map(|r| r.ratio)
        .fold(0.0, f64::max);
    let end = 2.0 * ladder.params.t0;
    let mut r = CheckReport::new("degiorgi", Status::from_bool(ok), (0.0, end))
        .with_constant("M", ladder.params.m)
        .with_constant("t0", ladder.params.t0);
    if let Some(b) = ladder.q0_bound {
        r = r.with_constant("q0_bound", b);
    }
    for rung in &ladder.rungs {
        r = r.with_constant(&format!("Q{}", rung.k), rung.q);
    }
    r.tolerance = Some(0.5);
    r.max_residual = worst;
    r = r
        .with_note(format!("M {}", if auto { "from fitted threshold" } else { "configured" }))
        .with_note(format!("converged={} geometric={} audit={}", ladder.converged, ladder.geometric, ladder.audit_holds()))
        .with_note(format!("{} snapshots", ladder.snapshots_used));
    for n in &ladder.notes {
        r = r.with_note(n.clone());
    }
    r
}

pub fn entry_report(name: &str, entry: &EntryReport, range: (f64, f64)) -> CheckReport {
    let mut r = CheckReport::new(name, Status::from_bool(entry.entered()), range)
        .with_constant("radius", entry.radius)
        .with_constant("entry_time", entry.entry_time.unwrap_or(f64::INFINITY));
    if let Some(t) = entry.last_exceedance {
        r = r.with_constant("last_exceedance", t);
    }
    if !entry.entered() {
        r = r.with_note("not entered");
    }
    r
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Result of [`run_experiment`] that completed its integration.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub reports: Vec<CheckReport>,
    pub trajectory: TrajectoryRecord,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_code()
    }
}

/// Evolves the scenario, runs its checks and writes all artifacts under
/// `out_root`. A solver abort still writes the partial trajectory, an abort
/// checkpoint and the manifest, then returns [`HarnessError::Aborted`].
pub fn run_experiment(
    spec: &ScenarioSpec,
    spec_text: &str,
    spec_dir: Option<&Path>,
    out_root: &Path,
) -> Result<RunOutcome, HarnessError> {
    let started = unix_now();
    let dir = out_root.join(spec.output_dir());
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let config = spec.solver_config()?;
    let theta0 = spec.initial_field(config.grid, spec_dir)?;
    let mut manifest = RunManifest {
        name: spec.name.clone(),
        spec_hash: spec_hash(spec_text),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: started,
        status: RunStatus::Passed,
        checks: Vec::new(),
        artifacts: Vec::new(),
    };
    let initial = sqg_core::dynamics::SolverState::new(theta0.clone());
    manifest.artifacts.push(store::write_checkpoint(&dir, "initial", spec.kappa, &initial)?);

    match evolve(&config, &theta0, spec.t_final, &mut []) {
        Err(aborted) => {
            let mut arts = store::write_trajectory(&dir, spec_text, &aborted.partial)?;
            manifest.artifacts.append(&mut arts);
            manifest.artifacts.push(store::write_checkpoint(&dir, "abort", spec.kappa, &aborted.last_state)?);
            manifest.status = RunStatus::Aborted;
            manifest.finished_unix = unix_now();
            manifest.artifacts.push(store::MANIFEST_FILE.to_string());
            manifest.write(&dir)?;
            Err(HarnessError::Aborted(aborted.error))
        }
        Ok((traj, last)) => {
            let mut arts = store::write_trajectory(&dir, spec_text, &traj)?;
            manifest.artifacts.append(&mut arts);
            manifest.artifacts.push(store::write_checkpoint(&dir, "final", spec.kappa, &last)?);
            let reports = if spec.checks.is_empty() {
                Vec::new()
            } else {
                Analysis::new(spec, &traj)?.run_all(&spec.checks)
            };
            store::write_atomic(&dir.join(store::REPORT_FILE), render_reports(&reports).as_bytes())?;
            manifest.artifacts.push(store::REPORT_FILE.to_string());
            manifest.checks = reports
                .iter()
                .map(|r| CheckOutcome {
                    name: r.name.clone(),
                    status: r.status.as_str().to_string(),
                })
                .collect();
            manifest.status = if reports.iter().all(|r| r.passed()) {
                RunStatus::Passed
            } else {
                RunStatus::Failed
            };
            manifest.finished_unix = unix_now();
            manifest.artifacts.push(store::MANIFEST_FILE.to_string());
            manifest.write(&dir)?;
            Ok(RunOutcome {
                manifest,
                reports,
                trajectory: traj,
            })
        }
    }
}
