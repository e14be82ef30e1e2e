//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use riotwave::equilibria::default_a;
use riotwave::hetero::{GapSetup, Linearization, PulsatingSetup};
use riotwave::pde::{Boundary, GapEnv, Grid1D, InitialTension, KernelProfile, KernelSpec, PeriodicEnv, Schedule, ShockEvent};
use riotwave::wave::WaveSetup;
use riotwave::Params64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_DX: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    SteadyStates,
    Bifurcate,
    WaveSpeed,
    SpeedVsDecay,
    Extinction,
    Eigen,
    GapScan,
    Pulsating,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::SteadyStates => "steady_states",
            Experiment::Bifurcate => "bifurcate",
            Experiment::WaveSpeed => "wave_speed",
            Experiment::SpeedVsDecay => "speed_vs_decay",
            Experiment::Extinction => "extinction",
            Experiment::Eigen => "eigen",
            Experiment::GapScan => "gap_scan",
            Experiment::Pulsating => "pulsating",
        }
    }
}

/// Model constants; everything but `rho` and `beta` has a default, and an
/// absent `a_bar` is set halfway between the rest and unit-activity tensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub rho: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_bar: Option<f64>,
    #[serde(default)]
    pub k: f64,
    #[serde(default = "default_k2")]
    pub k2: f64,
    #[serde(rename = "D", default = "one")]
    pub d: f64,
    #[serde(default = "one")]
    pub m_bar: f64,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(rename = "A_tilde", default)]
    pub a_tilde: f64,
}

fn default_k2() -> f64 {
    0.25
}

fn one() -> f64 {
    1.0
}

fn default_dx() -> f64 {
    DEFAULT_DX
}

impl ParamsSection {
    pub fn to_params(&self) -> Result<Params64, CliError> {
        let mut p = Params64 {
            rho: self.rho,
            beta: self.beta,
            a_bar: 0.0,
            k: self.k,
            k2: self.k2,
            diffusivity: self.d,
            m_bar: self.m_bar,
            p: self.p,
            alpha: self.alpha,
            shock_amplitude: self.a_tilde,
        };
        p.a_bar = match self.a_bar {
            Some(a) => a,
            None => {
                p.a_bar = 1.0;
                p.validate()?;
                default_a(&p)?
            }
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub start: f64,
    pub end: f64,
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl GridSection {
    pub fn build(&self) -> Result<Grid1D<f64>, CliError> {
        let g = match self.boundary {
            Boundary::NoFlux => Grid1D::no_flux(self.start, self.end, self.dx)?,
            Boundary::Periodic => {
                let len = self.end - self.start;
                let n = (len / self.dx).round().max(1.0) as usize;
                Grid1D::periodic(self.start, len, n)?
            }
        };
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSection {
    /// `α` from the params section everywhere.
    Uniform,
    Periodic {
        period: f64,
        /// `[start, end, alpha]` triples.
        patches: Vec<[f64; 3]>,
        #[serde(default = "one_usize")]
        repetitions: usize,
    },
    Gap {
        s1: [f64; 2],
        s2: [f64; 2],
        s3: [f64; 2],
        alpha1: f64,
        alpha2: f64,
    },
}

fn one_usize() -> usize {
    1
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        EnvironmentSection::Uniform
    }
}

impl EnvironmentSection {
    pub fn periodic(&self) -> Option<PeriodicEnv<f64>> {
        match self {
            EnvironmentSection::Periodic { period, patches, repetitions } => Some(PeriodicEnv {
                period: *period,
                patches: patches.iter().map(|p| (p[0], p[1], p[2])).collect(),
                repetitions: *repetitions,
            }),
            _ => None,
        }
    }

    pub fn gap(&self) -> Option<GapEnv<f64>> {
        match self {
            EnvironmentSection::Gap { s1, s2, s3, alpha1, alpha2 } => Some(GapEnv {
                s1: (s1[0], s1[1]),
                s2: (s2[0], s2[1]),
                s3: (s3[0], s3[1]),
                alpha1: *alpha1,
                alpha2: *alpha2,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSection {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
    TopHat {
        radius: f64,
    },
    General {
        matrix: Vec<Vec<f64>>,
    },
}

impl KernelSection {
    pub fn spec(&self) -> KernelSpec<f64> {
        match self {
            KernelSection::None => KernelSpec::None,
            KernelSection::Gaussian { sigma } => KernelSpec::TranslationInvariant(KernelProfile::Gaussian { sigma: *sigma }),
            KernelSection::TopHat { radius } => KernelSpec::TranslationInvariant(KernelProfile::TopHat { radius: *radius }),
            KernelSection::General { matrix } => KernelSpec::General(matrix.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    Zero {
        #[serde(default)]
        tension: InitialTension<f64>,
    },
    Constant {
        value: f64,
        #[serde(default)]
        tension: InitialTension<f64>,
    },
    Step {
        position: f64,
        /// Excited level when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
        #[serde(default)]
        tension: InitialTension<f64>,
    },
    ExpDecay {
        rate: f64,
        amplitude: f64,
        #[serde(default)]
        origin: f64,
        #[serde(default)]
        tension: InitialTension<f64>,
    },
    /// Two-column `x u` text file (`#` comments allowed), one row per node.
    FromFile {
        path: PathBuf,
        #[serde(default)]
        tension: InitialTension<f64>,
    },
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection::Zero { tension: InitialTension::Rest }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSection {
    pub t: f64,
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

impl ShockSection {
    pub fn event(&self) -> ShockEvent<f64> {
        ShockEvent { t: self.t, x: self.x, amplitude: self.amplitude }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// CFL safety factor relative to the bound `dx²/max(1, D)`; used when
    /// `dt` is absent.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

fn default_cfl() -> f64 {
    riotwave::pde::CFL_FACTOR
}

impl ScheduleSection {
    pub fn schedule(&self, dx: f64, d: f64) -> Schedule<f64> {
        let dt = self.dt.unwrap_or(self.cfl * dx * dx / d.max(1.0));
        Schedule { t_end: self.t_end, snapshot_times: self.snapshot_times.clone(), dt: Some(dt) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub rho: [f64; 2],
    pub beta: [f64; 2],
    pub rho_n: usize,
    pub beta_n: usize,
}

impl SweepSection {
    pub fn axes(&self) -> (Vec<f64>, Vec<f64>) {
        let axis = |r: [f64; 2], n: usize| -> Vec<f64> {
            if n == 1 {
                return vec![r[0]];
            }
            (0..n).map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64).collect()
        };
        (axis(self.rho, self.rho_n), axis(self.beta, self.beta_n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaveStart {
    #[default]
    Step,
    ExpDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    #[serde(default)]
    pub start: WaveStart,
    /// Decay rate for a single `exp_decay` run.
    #[serde(default = "one")]
    pub rate: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Rates for `speed_vs_decay`.
    #[serde(default)]
    pub rates: Vec<f64>,
    #[serde(default)]
    pub setup: WaveSetup<f64>,
}

fn default_amplitude() -> f64 {
    5.0
}

impl Default for WaveSection {
    fn default() -> Self {
        WaveSection { start: WaveStart::Step, rate: 1.0, amplitude: 5.0, rates: vec![], setup: WaveSetup::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSection {
    #[serde(default)]
    pub alpha1: f64,
    #[serde(default)]
    pub alpha2: f64,
    /// Widths to scan.
    #[serde(default)]
    pub widths: Vec<f64>,
    /// When set, bisect for the critical width inside this range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_range: Option<[f64; 2]>,
    #[serde(default = "default_coarse")]
    pub coarse: usize,
    #[serde(default)]
    pub setup: GapSetup<f64>,
}

fn default_coarse() -> usize {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EigenSection {
    #[serde(default)]
    pub linearization: Linearization,
    /// Also report the Richardson-extrapolated eigenvalue.
    #[serde(default)]
    pub richardson: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtinctionSection {
    #[serde(default = "default_fit_window")]
    pub fit_window: [f64; 2],
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    #[serde(default = "default_decay_tol")]
    pub tol: f64,
}

fn default_fit_window() -> [f64; 2] {
    [1.0, 10.0]
}

fn default_sample_dt() -> f64 {
    0.5
}

fn default_decay_tol() -> f64 {
    1e-6
}

impl Default for ExtinctionSection {
    fn default() -> Self {
        ExtinctionSection { fit_window: default_fit_window(), sample_dt: default_sample_dt(), tol: default_decay_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    pub params: ParamsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub environment: EnvironmentSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub shocks: Vec<ShockSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub wave: WaveSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapSection>,
    #[serde(default)]
    pub pulsating: PulsatingSetup<f64>,
    #[serde(default)]
    pub eigen: EigenSection,
    #[serde(default)]
    pub extinction: ExtinctionSection,
}

fn need<'a, T>(section: &'a Option<T>, name: &str, exp: Experiment) -> Result<&'a T, CliError> {
    section
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("experiment `{}` needs a [{name}] section", exp.name())))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn params(&self) -> Result<Params64, CliError> {
        self.params.to_params()
    }

    pub fn grid(&self) -> Result<Grid1D<f64>, CliError> {
        need(&self.grid, "grid", self.experiment)?.build()
    }

    /// Cross-field checks; fills in the resolved `a_bar`.
    pub fn validate(&mut self) -> Result<(), CliError> {
        let p = self.params()?;
        self.params.a_bar = Some(p.a_bar);
        let exp = self.experiment;
        if let Some(g) = &self.grid {
            g.build()?;
        }
        if let Some(pe) = self.environment.periodic() {
            pe.validate()?;
        }
        if let Some(ge) = self.environment.gap() {
            ge.validate()?;
            if let Some(g) = &self.grid {
                ge.check_tiles(&g.build()?)?;
            }
        }
        if let Some(s) = &self.schedule {
            if !(s.cfl > 0.0 && s.cfl <= riotwave::pde::CFL_FACTOR) {
                return Err(CliError::Config(format!("cfl must lie in (0, {}]", riotwave::pde::CFL_FACTOR)));
            }
            s.schedule(DEFAULT_DX, 1.0).validate()?;
        }
        match exp {
            Experiment::Simulate => {
                let g = self.grid()?;
                need(&self.schedule, "schedule", exp)?;
                for s in &self.shocks {
                    s.event().validate(&g)?;
                }
                if let EnvironmentSection::Gap { .. } = self.environment {
                    if self.grid.is_none() {
                        return Err(CliError::Config("gap environments need a [grid] section".into()));
                    }
                }
            }
            Experiment::Extinction => {
                self.grid()?;
                need(&self.schedule, "schedule", exp)?;
            }
            Experiment::Bifurcate => {
                let s = need(&self.sweep, "sweep", exp)?;
                if s.rho_n == 0 || s.beta_n == 0 {
                    return Err(CliError::Config("sweep sizes must be positive".into()));
                }
            }
            Experiment::Eigen => {
                if self.environment.periodic().is_none() && self.environment != EnvironmentSection::Uniform {
                    return Err(CliError::Config("eigen needs a uniform or periodic environment".into()));
                }
                let g = self.grid()?;
                if g.boundary != Boundary::Periodic {
                    return Err(CliError::Config("eigen needs boundary = \"periodic\"".into()));
                }
            }
            Experiment::GapScan => {
                let s = need(&self.gap, "gap", exp)?;
                if s.widths.is_empty() && s.critical_range.is_none() {
                    return Err(CliError::Config("gap_scan needs widths or critical_range".into()));
                }
            }
            Experiment::Pulsating => {
                if self.environment.periodic().is_none() {
                    return Err(CliError::Config("pulsating needs a periodic environment".into()));
                }
            }
            Experiment::SpeedVsDecay => {
                if self.wave.rates.is_empty() {
                    return Err(CliError::Config("speed_vs_decay needs wave.rates".into()));
                }
            }
            Experiment::WaveSpeed | Experiment::SteadyStates => {}
        }
        if matches!(exp, Experiment::WaveSpeed | Experiment::SpeedVsDecay) {
            self.wave.setup.validate()?;
        }
        Ok(())
    }
}

/// Reads and validates a config file; relative `from_file` paths resolve
/// against the config's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let InitialSection::FromFile { path: p, .. } = &mut cfg.initial {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml("experiment = \"steady_states\"\n[params]\nrho = 6.0\nbeta = 8.0\n").unwrap();
        assert_eq!(cfg.params.k2, 0.25);
        assert_eq!(cfg.params.d, 1.0);
        assert!((cfg.params.a_bar.unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(cfg.environment, EnvironmentSection::Uniform);
        assert_eq!(cfg.wave.setup.dx, 0.05);
    }

    #[test]
    fn alpha_out_of_range() {
        let err = ExperimentConfig::from_toml("experiment = \"steady_states\"\n[params]\nrho = 6.0\nbeta = 8.0\nalpha = 1.5\n")
            .unwrap_err();
        assert!(err.to_string().contains("alpha must lie in [0,1]"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_toml("experiment = \"steady_states\"\n[params]\nrho = 6.0\nbeta = 8.0\ngamma = 1.0\n")
            .unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
    }

    #[test]
    fn gap_must_tile_grid() {
        let text = r#"
experiment = "simulate"
[params]
rho = 12.0
beta = 8.0
[grid]
end = 15.0
[environment]
kind = "gap"
s1 = [0.0, 5.0]
s2 = [5.0, 6.0]
s3 = [6.0, 14.0]
alpha1 = 0.0
alpha2 = 0.0
[schedule]
t_end = 1.0
"#;
        assert!(ExperimentConfig::from_toml(text).is_err());
        assert!(ExperimentConfig::from_toml(&text.replace("14.0", "15.0")).is_ok());
    }

    #[test]
    fn round_trip() {
        let text = r#"
experiment = "gap_scan"
seed = 9
[params]
rho = 12.0
beta = 8.0
D = 0.0
[gap]
widths = [0.0, 0.5, 1.0]
[gap.setup]
dx = 0.1
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
