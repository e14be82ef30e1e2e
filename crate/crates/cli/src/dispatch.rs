//! Routes a validated config to the owning experiment and writes its outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use riotwave::equilibria::{classify_region, excited_state, find_steady_states, sweep_bifurcation};
use riotwave::hetero::{find_critical_gap, gap_scan, gap_scan_csv, monotonicity_violations, predict, principal_eigenvalue_with, pulsating_front_experiment, richardson_eigenvalue};
use riotwave::pde::{run, snapshots_csv, summary_json, EnvironmentProfile, Fields, Grid1D, InitialProfile, PeriodicEnv, RunConfig};
use riotwave::wave::{extinction_experiment, run_wave_experiment, speed_vs_initial_decay, WaveInitial};
use riotwave::Params64;
use serde::Serialize;
use serde_json::json;

use crate::config::{EnvironmentSection, Experiment, ExperimentConfig, InitialSection, WaveStart};
use crate::error::CliError;
use crate::manifest::{OutputEntry, RunManifest};
use crate::plot::emit_plot_data;

/// Collects the files an experiment writes, in order.
struct Collector<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
    warnings: Vec<String>,
}

impl<'a> Collector<'a> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Runs the experiment, writes its data and plot files into `out_dir`, and
/// records them in `manifest.json`.
pub fn dispatch(cfg: &ExperimentConfig, config_bytes: &[u8], out_dir: &Path) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut out = Collector { dir: out_dir, written: Vec::new(), warnings: Vec::new() };
    let p = cfg.params()?;
    let exp = cfg.experiment;
    execute(cfg, &p, &mut out).map_err(|e| match e {
        CliError::Numerical(m) => CliError::Numerical(format!("{}: {m}", exp.name())),
        other => other,
    })?;
    let plots = emit_plot_data(&out.written, out_dir)?;
    out.written.extend(plots);

    let outputs = out
        .written
        .iter()
        .map(|path| OutputEntry::of(path))
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = RunManifest::new(config_bytes, exp.name(), outputs, started.elapsed().as_secs_f64(), out.warnings);
    manifest.write(out_dir)?;
    Ok(manifest)
}

fn execute(cfg: &ExperimentConfig, p: &Params64, out: &mut Collector) -> Result<(), CliError> {
    match cfg.experiment {
        Experiment::Simulate => simulate(cfg, p, out),
        Experiment::SteadyStates => {
            let states = find_steady_states(p)?;
            let label = classify_region(p)?;
            out.write_json("steady_states.json", &json!({ "params": p, "states": states, "label": label }))
        }
        Experiment::Bifurcate => {
            let sweep = cfg.sweep.as_ref().expect("validated");
            let (rho, beta) = sweep.axes();
            let map = sweep_bifurcation(&rho, &beta, p)?;
            for (i, j, why) in &map.failures {
                out.warnings.push(format!("cell rho = {}, beta = {} failed: {why}", rho[*i], beta[*j]));
            }
            out.write("bifurcation.csv", &map.to_csv())?;
            out.write_json("bifurcation_summary.json", &map.summary())
        }
        Experiment::WaveSpeed => {
            let initial = match cfg.wave.start {
                WaveStart::Step => WaveInitial::Step,
                WaveStart::ExpDecay => WaveInitial::ExpDecay { rate: cfg.wave.rate, amplitude: cfg.wave.amplitude },
            };
            let r = run_wave_experiment(p, &initial, &cfg.wave.setup)?;
            if r.stopped_early {
                out.warnings.push(format!("front came within {} of the boundary before t_end", cfg.wave.setup.margin));
            }
            out.write_json("wave_report.json", &r)?;
            out.write("front_trace.csv", &r.trace.to_csv())?;
            let mut csv = String::from("t,x,u\n");
            for (t, u) in &r.late_profiles {
                for (i, ui) in u.iter().enumerate() {
                    writeln!(csv, "{t},{},{ui}", r.grid.x(i)).expect("string write");
                }
            }
            out.write("wave_profiles.csv", &csv)
        }
        Experiment::SpeedVsDecay => {
            let rows = speed_vs_initial_decay(p, &cfg.wave.rates, cfg.wave.amplitude, &cfg.wave.setup)?;
            let mut csv = String::from("rate,c,r2,stderr,classification\n");
            for (rate, e) in &rows {
                writeln!(csv, "{rate},{},{},{},{:?}", e.c, e.r2, e.stderr, e.classification).expect("string write");
            }
            out.write("speed_vs_decay.csv", &csv)
        }
        Experiment::Extinction => {
            let g = cfg.grid()?;
            let s = cfg.schedule.as_ref().expect("validated");
            let initial = initial_profile(cfg, &g, p)?;
            let shocks: Vec<_> = cfg.shocks.iter().map(|s| s.event()).collect();
            let e = &cfg.extinction;
            let r = extinction_experiment(p, &g, &initial, &shocks, s.t_end, e.sample_dt, (e.fit_window[0], e.fit_window[1]), e.tol)?;
            if !r.decayed {
                out.warnings.push(format!("activity still {:e} at t_end", r.final_u_max));
            }
            out.write_json("extinction.json", &r)
        }
        Experiment::Eigen => {
            let g = cfg.grid()?;
            let env = match cfg.environment.periodic() {
                Some(env) => env,
                None => PeriodicEnv::uniform(g.length(), p.alpha)?,
            };
            let r = principal_eigenvalue_with(p, &env, &g, cfg.eigen.linearization)?;
            let richardson = if cfg.eigen.richardson {
                let (extrapolated, coarse, fine) = richardson_eigenvalue(p, &env, g.n)?;
                Some(json!({ "extrapolated": extrapolated, "coarse": coarse, "fine": fine }))
            } else {
                None
            };
            let prediction = predict(richardson.as_ref().and_then(|r| r["extrapolated"].as_f64()).unwrap_or(r.lambda));
            out.write_json(
                "eigen.json",
                &json!({ "params": p, "environment": env, "prediction": prediction, "richardson": richardson, "result": r }),
            )
        }
        Experiment::GapScan => {
            let gs = cfg.gap.as_ref().expect("validated");
            if !gs.widths.is_empty() {
                let scan = gap_scan(p, &gs.widths, gs.alpha1, gs.alpha2, &gs.setup)?;
                for (a, b) in monotonicity_violations(&scan) {
                    out.warnings.push(format!("gap {a} blocked but wider gap {b} crossed"));
                }
                out.write("gap_scan.csv", &gap_scan_csv(&scan))?;
            }
            if let Some([lo, hi]) = gs.critical_range {
                let c = find_critical_gap(p, gs.alpha1, gs.alpha2, (lo, hi), gs.coarse, &gs.setup)?;
                out.write_json("critical_gap.json", &c)?;
            }
            Ok(())
        }
        Experiment::Pulsating => {
            let env = cfg.environment.periodic().expect("validated");
            let r = pulsating_front_experiment(p, &env, &cfg.pulsating)?;
            out.write_json("pulsating.json", &r)?;
            out.write("front_trace.csv", &r.trace.to_csv())
        }
    }
}

fn simulate(cfg: &ExperimentConfig, p: &Params64, out: &mut Collector) -> Result<(), CliError> {
    let g = cfg.grid()?;
    let environment = match &cfg.environment {
        EnvironmentSection::Uniform => EnvironmentProfile::uniform(p.alpha)?,
        EnvironmentSection::Periodic { .. } => cfg.environment.periodic().expect("periodic").profile(g.x0)?,
        EnvironmentSection::Gap { .. } => cfg.environment.gap().expect("gap").profile()?,
    };
    let s = cfg.schedule.as_ref().expect("validated");
    let run_cfg = RunConfig {
        params: *p,
        grid: g,
        environment,
        kernel: cfg.kernel.spec(),
        initial: initial_fields(cfg, &g, p)?,
        shocks: cfg.shocks.iter().map(|s| s.event()).collect(),
        schedule: s.schedule(g.dx, p.diffusivity),
    };
    let tr = run(&run_cfg)?;
    if tr.clipped > 0 {
        out.warnings.push(format!("{} negative values floored to zero", tr.clipped));
    }
    out.write("snapshots.csv", &snapshots_csv(&tr))?;
    out.write_json("summary.json", &summary_json(&tr, serde_json::to_value(cfg)?))
}

fn initial_fields(cfg: &ExperimentConfig, g: &Grid1D<f64>, p: &Params64) -> Result<Fields<f64>, CliError> {
    let tension = match &cfg.initial {
        InitialSection::Zero { tension }
        | InitialSection::Constant { tension, .. }
        | InitialSection::Step { tension, .. }
        | InitialSection::ExpDecay { tension, .. }
        | InitialSection::FromFile { tension, .. } => *tension,
    };
    Ok(initial_profile(cfg, g, p)?.build(g, p, tension)?)
}

fn initial_profile(cfg: &ExperimentConfig, g: &Grid1D<f64>, p: &Params64) -> Result<InitialProfile<f64>, CliError> {
    Ok(match &cfg.initial {
        InitialSection::Zero { .. } => InitialProfile::Zero,
        InitialSection::Constant { value, .. } => InitialProfile::Constant { value: *value },
        InitialSection::Step { position, value, .. } => {
            let value = match value {
                Some(v) => *v,
                None => excited_state(p)?
                    .ok_or_else(|| CliError::Config("step without a value needs an excited state".into()))?
                    .u,
            };
            InitialProfile::Step { position: *position, value }
        }
        InitialSection::ExpDecay { rate, amplitude, origin, .. } => {
            InitialProfile::ExpDecay { rate: *rate, amplitude: *amplitude, origin: *origin }
        }
        InitialSection::FromFile { path, .. } => InitialProfile::Custom { u: read_profile(path, g)? },
    })
}

/// Reads `x u` rows; the x column must match the grid nodes.
fn read_profile(path: &Path, g: &Grid1D<f64>) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut u = Vec::with_capacity(g.n);
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CliError::Config(format!("{}:{}: expected `x u`", path.display(), line_no + 1));
        let cols: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [x, ui] = cols[..] else { return Err(bad()) };
        let i = u.len();
        if i >= g.n || (x - g.x(i)).abs() > 0.5 * g.dx {
            return Err(CliError::Config(format!("{}:{}: x = {x} is not grid node {i}", path.display(), line_no + 1)));
        }
        u.push(ui);
    }
    if u.len() != g.n {
        return Err(CliError::Config(format!("{} has {} rows, the grid has {} nodes", path.display(), u.len(), g.n)));
    }
    Ok(u)
}
