//! Scenario files: strict TOML describing one experiment.
//!
//! ```toml
//! name = "single-mode"
//! n = 64
//! kappa = 1.0
//! t_final = 1.0
//! checks = ["exact_decay", "energy_inequality"]
//!
//! [dt]
//! policy = "fixed"
//! value = 1e-3
//!
//! [forcing]
//! kind = "zero"
//!
//! [initial]
//! kind = "modes"
//! modes = [{ k = [1, 0], cos = 1.0 }]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sqg_core::dynamics::{Dealias, DtPolicy, Sampling, Scheme, SolverConfig};
use sqg_core::{Mode, SpectralField, TorusGrid};

use crate::error::HarnessError;

pub const CHECK_NAMES: &[&str] = &[
    "conservation",
    "exact_decay",
    "energy_inequality",
    "decay_envelope",
    "linf_estimate",
    "degiorgi",
    "holder",
    "h1_envelope",
    "absorb_linf",
    "absorb_calpha",
    "absorb_h1",
    "absorb_h32",
    "continuity",
    "dissipation_identity",
];

pub fn default_tolerance(check: &str) -> Option<f64> {
    match check {
        "conservation" => Some(1e-6),
        "exact_decay" => Some(1e-6),
        "energy_inequality" => Some(1e-3),
        "decay_envelope" => Some(1e-9),
        "continuity" => Some(0.3),
        "dissipation_identity" => Some(0.01),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub n: usize,
    pub kappa: f64,
    pub t_final: f64,
    pub dt: DtSpec,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub dealias: DealiasSpec,
    pub forcing: ForcingSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub degiorgi: DeGiorgiSpec,
    #[serde(default)]
    pub holder: HolderSpec,
    #[serde(default)]
    pub continuity: ContinuitySpec,
    #[serde(default)]
    pub ledger: LedgerSpec,
    /// Output directory relative to the output root; defaults to `name`.
    pub output: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase", deny_unknown_fields)]
pub enum DtSpec {
    Fixed { value: f64 },
    Cfl { safety: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeSpec {
    #[default]
    IfRk2,
    ImexEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DealiasSpec {
    #[default]
    TwoThirds,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: [i64; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl ModeSpec {
    fn to_mode(self) -> Mode {
        Mode {
            k1: self.k[0],
            k2: self.k[1],
            cos: self.cos,
            sin: self.sin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    Modes { modes: Vec<ModeSpec> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L2,
    Linf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialSpec {
    Zero,
    Modes {
        modes: Vec<ModeSpec>,
    },
    /// Seeded band-limited noise, optionally rescaled so that the chosen norm
    /// equals `amplitude`.
    Random {
        seed: u64,
        kmax: i64,
        amplitude: Option<f64>,
        #[serde(default = "default_norm")]
        norm: NormKind,
    },
    /// Path relative to the scenario file.
    Checkpoint {
        path: String,
    },
}

fn default_norm() -> NormKind {
    NormKind::Linf
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSpec {
    pub every: u64,
    pub snapshot_every: u64,
    pub snapshot_until: Option<f64>,
    pub late_snapshot_every: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            every: 1,
            snapshot_every: 0,
            snapshot_until: None,
            late_snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Value(f64),
    Word(AutoWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoWord {
    Auto,
}

impl AutoOr {
    pub fn value(self) -> Option<f64> {
        match self {
            AutoOr::Value(v) => Some(v),
            AutoOr::Word(_) => None,
        }
    }

    /// `auto` or a number.
    pub fn parse(text: &str) -> Result<Self, String> {
        if text.eq_ignore_ascii_case("auto") {
            return Ok(AutoOr::Word(AutoWord::Auto));
        }
        text.parse::<f64>()
            .map(AutoOr::Value)
            .map_err(|_| format!("expected `auto` or a number, got `{text}`"))
    }
}

impl Default for AutoOr {
    fn default() -> Self {
        AutoOr::Word(AutoWord::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeGiorgiSpec {
    pub m: AutoOr,
    pub t0: f64,
    pub k_max: usize,
}

impl Default for DeGiorgiSpec {
    fn default() -> Self {
        Self {
            m: AutoOr::default(),
            t0: 0.5,
            k_max: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolderSpec {
    pub alpha: AutoOr,
    pub xi0: f64,
    pub max_snapshots: usize,
}

impl Default for HolderSpec {
    fn default() -> Self {
        Self {
            alpha: AutoOr::default(),
            xi0: 1.0,
            max_snapshots: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuitySpec {
    pub t_final: f64,
    /// Amplitudes of the `cos(2π k·x)` perturbation, one probe each.
    pub perturbations: Vec<f64>,
    /// Perturbed mode; defaults to the highest retained mode on the first axis.
    pub mode: Option<[i64; 2]>,
}

impl Default for ContinuitySpec {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            perturbations: vec![1e-6, 1e-8],
            mode: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerSpec {
    /// Configured `c₀`; fitted from the trajectory when absent.
    pub c0: Option<f64>,
    #[serde(default = "default_c3")]
    pub c3: f64,
}

fn default_c3() -> f64 {
    sqg_core::diagnostics::DEFAULT_C3
}

impl Default for LedgerSpec {
    fn default() -> Self {
        Self {
            c0: None,
            c3: default_c3(),
        }
    }
}

/// Parses and validates scenario text. `base` resolves relative checkpoint
/// paths.
pub fn parse_scenario(text: &str, base: Option<&Path>) -> Result<ScenarioSpec, HarnessError> {
    let spec: ScenarioSpec = toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))?;
    spec.validate(base)?;
    Ok(spec)
}

pub fn load_scenario(path: &Path) -> Result<(ScenarioSpec, String), HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let spec = parse_scenario(&text, path.parent())?;
    Ok((spec, text))
}

fn config_err(field: &str, reason: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("`{field}`: {reason}"))
}

impl ScenarioSpec {
    fn validate(&self, base: Option<&Path>) -> Result<(), HarnessError> {
        if self.name.trim().is_empty() {
            return Err(config_err("name", "must not be empty"));
        }
        TorusGrid::new(self.n).map_err(|e| config_err("n", e))?;
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(config_err("kappa", format!("{} outside [0, 1]", self.kappa)));
        }
        if self.kappa == 0.0 && !self.checks.iter().all(|c| c == "conservation") {
            return Err(config_err(
                "kappa",
                "kappa = 0 is only allowed with checks = [\"conservation\"]",
            ));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(config_err("t_final", format!("{} must be positive", self.t_final)));
        }
        match self.dt {
            DtSpec::Fixed { value } if !(value > 0.0 && value.is_finite()) => {
                return Err(config_err("dt.value", format!("{value} must be positive")));
            }
            DtSpec::Cfl { safety, max } if !(safety > 0.0 && safety < 1.0) || !(max > 0.0 && max.is_finite()) => {
                return Err(config_err("dt", format!("safety {safety} must be in (0, 1), max {max} positive")));
            }
            _ => {}
        }
        for check in &self.checks {
            if !CHECK_NAMES.contains(&check.as_str()) {
                return Err(config_err("checks", format!("unknown check `{check}`")));
            }
        }
        for (name, tol) in &self.tolerances {
            if !self.checks.contains(name) {
                return Err(config_err("tolerances", format!("`{name}` is not among the configured checks")));
            }
            if !(*tol >= 0.0 && tol.is_finite()) {
                return Err(config_err("tolerances", format!("`{name}` = {tol} must be non-negative")));
            }
        }
        if self.sampling.every == 0 {
            return Err(config_err("sampling.every", "must be at least 1"));
        }
        if let Some(c0) = self.ledger.c0 {
            if !(c0 > 0.0 && c0.is_finite()) {
                return Err(config_err("ledger.c0", format!("{c0} must be positive")));
            }
        }
        if !(self.ledger.c3 >= default_c3()) {
            return Err(config_err("ledger.c3", format!("{} is below 64", self.ledger.c3)));
        }
        if !(self.degiorgi.t0 > 0.0 && self.degiorgi.t0 <= 1.0) {
            return Err(config_err("degiorgi.t0", format!("{} outside (0, 1]", self.degiorgi.t0)));
        }
        if !(self.holder.xi0 >= 0.0 && self.holder.xi0.is_finite()) {
            return Err(config_err("holder.xi0", "must be finite and non-negative"));
        }
        if self.continuity.perturbations.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(config_err("continuity.perturbations", "amplitudes must be positive"));
        }
        let grid = self.grid()?;
        self.forcing_field(grid)?;
        match &self.initial {
            InitialSpec::Checkpoint { path } => {
                let p = resolve(base, path);
                if !p.is_file() {
                    return Err(config_err("initial.path", format!("{} does not exist", p.display())));
                }
            }
            InitialSpec::Random { kmax, amplitude, .. } => {
                if *kmax < 1 || *kmax >= self.n as i64 / 2 {
                    return Err(config_err("initial.kmax", format!("{kmax} not representable at n={}", self.n)));
                }
                if let Some(a) = amplitude {
                    if !(*a >= 0.0 && a.is_finite()) {
                        return Err(config_err("initial.amplitude", format!("{a} must be non-negative")));
                    }
                }
            }
            InitialSpec::Modes { modes } => {
                SpectralField::from_modes(grid, &modes.iter().map(|m| m.to_mode()).collect::<Vec<_>>())
                    .map_err(|e| config_err("initial.modes", e))?;
            }
            InitialSpec::Zero => {}
        }
        if self.checks.iter().any(|c| c == "exact_decay") {
            self.exact_decay_shell()?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TorusGrid, HarnessError> {
        TorusGrid::new(self.n).map_err(|e| config_err("n", e))
    }

    pub fn tolerance(&self, check: &str) -> Option<f64> {
        self.tolerances.get(check).copied().or_else(|| default_tolerance(check))
    }

    pub fn forcing_field(&self, grid: TorusGrid) -> Result<SpectralField, HarnessError> {
        match &self.forcing {
            ForcingSpec::Zero => Ok(SpectralField::zeros(grid)),
            ForcingSpec::Modes { modes } => {
                SpectralField::from_modes(grid, &modes.iter().map(|m| m.to_mode()).collect::<Vec<_>>())
                    .map_err(|e| config_err("forcing.modes", e))
            }
        }
    }

    pub fn initial_field(&self, grid: TorusGrid, base: Option<&Path>) -> Result<SpectralField, HarnessError> {
        match &self.initial {
            InitialSpec::Zero => Ok(SpectralField::zeros(grid)),
            InitialSpec::Modes { modes } => {
                SpectralField::from_modes(grid, &modes.iter().map(|m| m.to_mode()).collect::<Vec<_>>())
                    .map_err(|e| config_err("initial.modes", e))
            }
            InitialSpec::Random {
                seed,
                kmax,
                amplitude,
                norm,
            } => {
                let field =
                    SpectralField::random_band_limited(grid, *kmax, *seed).map_err(|e| config_err("initial", e))?;
                Ok(match amplitude {
                    None => field,
                    Some(a) => {
                        let current = match norm {
                            NormKind::L2 => sqg_core::operators::l2_norm(&field),
                            NormKind::Linf => sqg_core::operators::linf_norm(&field, 1),
                        };
                        field.scale(a / current)
                    }
                })
            }
            InitialSpec::Checkpoint { path } => {
                let p = resolve(base, path);
                let ckpt = sqg_core::checkpoint::Checkpoint::load(&p).map_err(|e| config_err("initial.path", e))?;
                if ckpt.state.theta.grid() != grid {
                    return Err(config_err(
                        "initial.path",
                        format!("checkpoint has n={}, scenario has n={}", ckpt.state.theta.grid().n(), self.n),
                    ));
                }
                Ok(ckpt.state.theta)
            }
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig, HarnessError> {
        let grid = self.grid()?;
        let dt0 = match self.dt {
            DtSpec::Fixed { value } => value,
            DtSpec::Cfl { max, .. } => max,
        };
        let forcing = self.forcing_field(grid)?;
        let mut config = SolverConfig::new(grid, self.kappa, dt0)
            .and_then(|c| c.with_forcing(forcing))
            .map_err(|e| config_err("solver", e))?;
        if let DtSpec::Cfl { safety, max } = self.dt {
            config.dt = DtPolicy::Cfl { safety, dt_max: max };
        }
        config.scheme = match self.scheme {
            SchemeSpec::IfRk2 => Scheme::IntegratingFactorRk2,
            SchemeSpec::ImexEuler => Scheme::ImexEuler,
        };
        config.dealias = match self.dealias {
            DealiasSpec::TwoThirds => Dealias::TwoThirds,
            DealiasSpec::Off => Dealias::Off,
        };
        let s = self.sampling;
        config = config
            .with_sampling(Sampling {
                every: s.every,
                snapshot_every: s.snapshot_every,
                snapshot_until: s.snapshot_until.unwrap_or(f64::INFINITY),
                late_snapshot_every: s.late_snapshot_every,
            })
            .map_err(|e| config_err("sampling", e))?;
        Ok(config)
    }

    pub fn output_dir(&self) -> &str {
        self.output.as_deref().unwrap_or(&self.name)
    }

    /// `|k|` of the single shell carrying the initial data, for the exact
    /// decay check.
    pub fn exact_decay_shell(&self) -> Result<f64, HarnessError> {
        let InitialSpec::Modes { modes } = &self.initial else {
            return Err(config_err("checks", "exact_decay needs initial.kind = \"modes\""));
        };
        if self.forcing != ForcingSpec::Zero {
            return Err(config_err("checks", "exact_decay needs zero forcing"));
        }
        let shells: Vec<i64> = modes.iter().map(|m| m.k[0] * m.k[0] + m.k[1] * m.k[1]).collect();
        match shells.first() {
            Some(&s) if s > 0 && shells.iter().all(|&x| x == s) => Ok((s as f64).sqrt()),
            _ => Err(config_err(
                "checks",
                "exact_decay needs all initial modes on one nonzero shell |k|",
            )),
        }
    }
}

fn resolve(base: Option<&Path>, path: &str) -> PathBuf {
    let p = Path::new(path);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
n = 64
kappa = 1.0
t_final = 1.0
[dt]
policy = "fixed"
value = 1e-3
[forcing]
kind = "zero"
[initial]
kind = "modes"
modes = [{ k = [1, 0], cos = 1.0 }]
"#;

    #[test]
    fn minimal_spec_gets_defaults() {
        let spec = parse_scenario(MINIMAL, None).unwrap();
        assert_eq!(spec.scheme, SchemeSpec::IfRk2);
        assert_eq!(spec.dealias, DealiasSpec::TwoThirds);
        assert_eq!(spec.sampling, SamplingSpec::default());
        assert_eq!(spec.degiorgi.t0, 0.5);
        assert_eq!(spec.ledger.c3, 64.0);
        assert_eq!(spec.output_dir(), "minimal");
        assert!(spec.checks.is_empty());
    }

    #[test]
    fn misspelled_key_is_named() {
        let text = MINIMAL.replace("kappa = 1.0", "kapa = 1.0");
        let err = parse_scenario(&text, None).unwrap_err().to_string();
        assert!(err.contains("kapa"), "{err}");
    }

    #[test]
    fn inviscid_only_with_conservation() {
        let text = MINIMAL.replace("kappa = 1.0", "kappa = 0.0");
        let bad = format!("checks = [\"energy_inequality\"]\n{text}");
        let err = parse_scenario(&bad, None).unwrap_err().to_string();
        assert!(err.contains("kappa"), "{err}");
        let good = format!("checks = [\"conservation\"]\n{text}");
        assert!(parse_scenario(&good, None).is_ok());
    }

    #[test]
    fn out_of_range_values_name_the_field() {
        for (from, to, field) in [
            ("n = 64", "n = 48", "n"),
            ("kappa = 1.0", "kappa = 1.5", "kappa"),
            ("value = 1e-3", "value = -1.0", "dt.value"),
            ("t_final = 1.0", "t_final = 0.0", "t_final"),
        ] {
            let err = parse_scenario(&MINIMAL.replace(from, to), None).unwrap_err().to_string();
            assert!(err.contains(field), "{field}: {err}");
        }
        let missing = MINIMAL.replace("[initial]\nkind = \"modes\"\nmodes = [{ k = [1, 0], cos = 1.0 }]\n", "");
        let err = parse_scenario(&missing, None).unwrap_err().to_string();
        assert!(err.contains("initial"), "{err}");
    }

    #[test]
    fn checkpoint_must_exist() {
        let text = MINIMAL.replace(
            "kind = \"modes\"\nmodes = [{ k = [1, 0], cos = 1.0 }]",
            "kind = \"checkpoint\"\npath = \"missing.ckpt\"",
        );
        let err = parse_scenario(&text, None).unwrap_err().to_string();
        assert!(err.contains("initial.path"), "{err}");
    }

    #[test]
    fn auto_or_value() {
        assert_eq!(AutoOr::parse("auto").unwrap().value(), None);
        assert_eq!(AutoOr::parse("2.5").unwrap().value(), Some(2.5));
        assert!(AutoOr::parse("x").is_err());
        let text = format!("{MINIMAL}[degiorgi]\nm = 3.0\n[holder]\nalpha = \"auto\"\n");
        let spec = parse_scenario(&text, None).unwrap();
        assert_eq!(spec.degiorgi.m.value(), Some(3.0));
        assert_eq!(spec.holder.alpha.value(), None);
    }

    #[test]
    fn exact_decay_needs_one_shell() {
        let good = format!("checks = [\"exact_decay\"]\n{}", MINIMAL.replace("[{ k = [1, 0], cos = 1.0 }]", "[{ k = [1, 0], cos = 1.0 }, { k = [0, 1], sin = 0.5 }]"));
        assert_eq!(parse_scenario(&good, None).unwrap().exact_decay_shell().unwrap(), 1.0);
        let bad = good.replace("k = [0, 1]", "k = [2, 0]");
        assert!(parse_scenario(&bad, None).is_err());
    }
}
