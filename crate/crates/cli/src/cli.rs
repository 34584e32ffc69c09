//! Command-line surface of the `sqg` binary.

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use sqg_core::checkpoint::Checkpoint;
use sqg_core::diagnostics::{continuity_probe, fit_decay_envelope, read_series_csv, render_reports};
use sqg_core::dynamics::SolverConfig;

use crate::error::HarnessError;
use crate::pipeline::{entry_report, ladder_report, run_experiment, Analysis, Ball};
use crate::scenario::{load_scenario, AutoOr};
use crate::store::load_run;

pub const OUTPUT_ROOT_ENV: &str = "SQG_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "runs";

#[derive(Debug, Parser)]
#[command(name = "sqg", version, about = "Forced critical SQG solver and estimate diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        #[arg(required = true)]
        specs: Vec<PathBuf>,
        /// Scenarios run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output root; overrides the SQG_OUTPUT_ROOT environment variable.
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Re-run checks on a stored trajectory.
    Diagnose {
        dir: PathBuf,
        /// Comma-separated check names; defaults to the scenario's list.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
    },
    /// Level-set truncation ladder on a stored trajectory.
    Degiorgi {
        dir: PathBuf,
        #[arg(long = "M", default_value = "auto", value_parser = AutoOr::parse)]
        m: AutoOr,
        #[arg(long, default_value_t = 0.5)]
        t0: f64,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
    },
    /// Time-weighted Hölder quotients and the C^α bound.
    Holder {
        dir: PathBuf,
        #[arg(long, default_value = "auto", value_parser = AutoOr::parse)]
        alpha: AutoOr,
        #[arg(long, default_value_t = 1.0)]
        xi0: f64,
    },
    /// Entry time into an absorbing ball.
    Absorb {
        dir: PathBuf,
        #[arg(long, value_parser = ["linf", "calpha", "h1", "h32"])]
        ball: String,
    },
    /// H¹ growth of the distance between two evolved checkpoints.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Scenario whose forcing is applied; zero forcing otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Exponential envelope fit of a `t,value` CSV series.
    Envelope {
        csv: PathBuf,
        #[arg(long)]
        asymptote: f64,
    },
}

fn output_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, HarnessError> {
    let w = |out: &mut dyn Write, s: String| {
        let _ = out.write_all(s.as_bytes());
    };
    match command {
        Command::Run {
            specs,
            jobs,
            output_root: flag,
        } => {
            let root = output_root(flag);
            let results = run_many(&specs, jobs.max(1), &root);
            let mut code = 0;
            for (path, result) in specs.iter().zip(results) {
                let (c, line) = match result {
                    Ok((c, line)) => (c, line),
                    Err(e) => (e.exit_code(), format!("error: {e}")),
                };
                w(out, format!("{}\t{}\n", path.display(), line));
                code = code.max(c);
            }
            Ok(code)
        }
        Command::Diagnose { dir, checks } => {
            let run = load_run(&dir)?;
            let checks = checks.unwrap_or_else(|| run.spec.checks.clone());
            let reports = Analysis::new(&run.spec, &run.trajectory)?.run_all(&checks);
            w(out, render_reports(&reports));
            Ok(if reports.iter().all(|r| r.passed()) { 0 } else { 1 })
        }
        Command::Degiorgi { dir, m, t0, k_max } => {
            let run = load_run(&dir)?;
            let mut analysis = Analysis::new(&run.spec, &run.trajectory)?;
            let ladder = analysis.ladder(m.value(), t0, k_max)?;
            w(out, "k\teta\ttau\tQ\tratio\taudit_rhs\n".to_string());
            for r in &ladder.rungs {
                w(
                    out,
                    format!(
                        "{}\t{:.10e}\t{:.10e}\t{:.10e}\t{}\t{}\n",
                        r.k,
                        r.eta,
                        r.tau,
                        r.q,
                        r.ratio.map_or("-".to_string(), |x| format!("{x:.6e}")),
                        r.audit_rhs.map_or("-".to_string(), |x| format!("{x:.6e}")),
                    ),
                );
            }
            let report = ladder_report(&ladder, m.value().is_none());
            w(out, format!("{}\n", report.to_line()));
            Ok(if ladder.converged { 0 } else { 1 })
        }
        Command::Holder { dir, alpha, xi0 } => {
            let mut run = load_run(&dir)?;
            run.spec.holder.alpha = alpha;
            run.spec.holder.xi0 = xi0;
            let mut analysis = Analysis::new(&run.spec, &run.trajectory)?;
            let check = analysis.holder()?;
            w(out, "t\tpsi\n".to_string());
            for (t, psi) in &check.psi {
                w(out, format!("{t:.10e}\t{psi:.10e}\n"));
            }
            w(out, format!("{}\n", check.report.to_line()));
            Ok(if check.report.passed() { 0 } else { 1 })
        }
        Command::Absorb { dir, ball } => {
            let run = load_run(&dir)?;
            let mut analysis = Analysis::new(&run.spec, &run.trajectory)?;
            let ball = Ball::parse(&ball).expect("clap restricts ball names");
            let (entry, _) = analysis.absorb(ball)?;
            let range = (run.trajectory.first().t, run.trajectory.last().t);
            let report = entry_report(&format!("absorb_{}", ball_name(ball)), &entry, range);
            match entry.entry_time {
                Some(t) => w(out, format!("entered at t={t:.10e} (radius {:.10e})\n", entry.radius)),
                None => w(out, format!("not entered (radius {:.10e})\n", entry.radius)),
            }
            w(out, format!("{}\n", report.to_line()));
            Ok(if entry.entered() { 0 } else { 1 })
        }
        Command::Compare {
            a,
            b,
            t_final,
            dt,
            spec,
        } => {
            let ca = Checkpoint::load(&a).map_err(|e| HarnessError::Config(format!("{}: {e}", a.display())))?;
            let cb = Checkpoint::load(&b).map_err(|e| HarnessError::Config(format!("{}: {e}", b.display())))?;
            let grid = ca.state.theta.grid();
            if cb.state.theta.grid() != grid {
                return Err(HarnessError::Config("checkpoints have different grid sizes".into()));
            }
            let mut config = SolverConfig::new(grid, ca.kappa, dt).map_err(|e| HarnessError::Config(e.to_string()))?;
            if let Some(path) = spec {
                let (s, _) = load_scenario(&path)?;
                config = config
                    .with_forcing(s.forcing_field(grid)?)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
            }
            let report = continuity_probe(&config, &ca.state.theta, &cb.state.theta, t_final)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let max_ratio = report.ratio.iter().map(|p| p.1).fold(0.0, f64::max);
            let final_ratio = report.ratio.last().map_or(1.0, |p| p.1);
            w(
                out,
                format!(
                    "initial_distance={:.10e}\tfinal_ratio={:.10e}\tmax_ratio={:.10e}\tlambda_l={:.10e}\n",
                    report.initial_distance, final_ratio, max_ratio, report.lambda_l
                ),
            );
            Ok(0)
        }
        Command::Envelope { csv, asymptote } => {
            let file = std::fs::File::open(&csv).map_err(|e| HarnessError::io(&csv, e))?;
            let series = read_series_csv(BufReader::new(file)).map_err(|e| HarnessError::Config(e.to_string()))?;
            let fit = fit_decay_envelope(&series, asymptote).map_err(|e| HarnessError::Config(e.to_string()))?;
            w(
                out,
                format!(
                    "lambda={:.10e}\tprefactor={:.10e}\tt0={:.10e}\tasymptote={:.10e}\tmax_violation={:.3e}\n",
                    fit.lambda, fit.prefactor, fit.t0, fit.asymptote, fit.max_violation
                ),
            );
            Ok(0)
        }
    }
}

fn ball_name(b: Ball) -> &'static str {
    match b {
        Ball::Linf => "linf",
        Ball::Calpha => "calpha",
        Ball::H1 => "h1",
        Ball::H32 => "h32",
    }
}

fn run_one(path: &Path, root: &Path) -> Result<(i32, String), HarnessError> {
    let (spec, text) = load_scenario(path)?;
    let outcome = run_experiment(&spec, &text, path.parent(), root)?;
    let failed: Vec<&str> = outcome
        .reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.name.as_str())
        .collect();
    let summary = if failed.is_empty() {
        format!("passed ({} checks)", outcome.reports.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    Ok((outcome.exit_code(), summary))
}

type JobResult = Result<(i32, String), HarnessError>;

/// Runs scenarios on up to `jobs` threads; results keep the input order.
fn run_many(specs: &[PathBuf], jobs: usize, root: &Path) -> Vec<JobResult> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<JobResult>>> = Mutex::new((0..specs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(specs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= specs.len() {
                    break;
                }
                let result = run_one(&specs[i], root);
                slots.lock().expect("result slots poisoned")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}
