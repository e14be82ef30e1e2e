use serde::{Deserialize, Serialize};

use super::environment::EnvironmentProfile;
use super::grid::Grid1D;
use super::kernel::KernelSpec;
use super::solver::{Fields, System};
use crate::equilibria::v_star;
use crate::error::{Error, Result};
use crate::model::Params;
use crate::scalar::Real;

/// Dirac tension shock `A δ(t − t_i) δ(x − x_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShockEvent<T> {
    pub t: T,
    pub x: T,
    /// Defaults to the model's shock amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<T>,
}

impl<T: Real> ShockEvent<T> {
    pub fn amplitude_for(&self, p: &Params<T>) -> T {
        self.amplitude.unwrap_or(p.shock_amplitude)
    }

    pub fn validate(&self, g: &Grid1D<T>) -> Result<()> {
        if !(self.t >= T::zero()) {
            return Err(Error::Config(format!("shock time must be non-negative, got {}", self.t)));
        }
        if let Some(a) = self.amplitude {
            if !(a >= T::zero()) {
                return Err(Error::Config(format!("shock amplitude must be non-negative, got {a}")));
            }
        }
        g.nearest_node(self.x).map(|_| ())
    }
}

/// Adds `A / w_i` to `v` at the node nearest the shock, where `w_i` is the
/// node's quadrature weight, so the discrete integral grows by exactly `A`.
pub fn apply_shock_in_place<T: Real>(f: &mut Fields<T>, e: &ShockEvent<T>, p: &Params<T>, g: &Grid1D<T>) -> Result<()> {
    let i = g.nearest_node(e.x)?;
    let a = e.amplitude_for(p);
    if a != T::zero() {
        f.v[i] += a / g.weight(i);
    }
    Ok(())
}

pub fn apply_shock<T: Real>(f: &Fields<T>, e: &ShockEvent<T>, p: &Params<T>, g: &Grid1D<T>) -> Result<Fields<T>> {
    let mut out = f.clone();
    apply_shock_in_place(&mut out, e, p, g)?;
    Ok(out)
}

/// Initial activity profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", bound = "T: Real")]
pub enum InitialProfile<T> {
    #[default]
    Zero,
    Constant { value: T },
    /// `value` for `x < position`, zero beyond.
    Step { position: T, value: T },
    /// `amplitude · e^{−rate (x − origin)}` for `x ≥ origin`, `amplitude` before.
    ExpDecay { rate: T, amplitude: T, origin: T },
    Custom { u: Vec<T> },
}

/// How the initial tension is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", bound = "T: Real")]
pub enum InitialTension<T> {
    /// `v = v*(0)` everywhere.
    #[default]
    Rest,
    /// `v = v*(min(u, cap))`, i.e. on the curve of constant states.
    Manifold { cap: T },
    Constant { value: T },
}

impl<T: Real> InitialProfile<T> {
    pub fn activity(&self, g: &Grid1D<T>) -> Result<Vec<T>> {
        let u: Vec<T> = match self {
            InitialProfile::Zero => vec![T::zero(); g.n],
            InitialProfile::Constant { value } => vec![*value; g.n],
            InitialProfile::Step { position, value } => {
                (0..g.n).map(|i| if g.x(i) < *position { *value } else { T::zero() }).collect()
            }
            InitialProfile::ExpDecay { rate, amplitude, origin } => (0..g.n)
                .map(|i| {
                    let d = (g.x(i) - *origin).max(T::zero());
                    *amplitude * (-*rate * d).exp()
                })
                .collect(),
            InitialProfile::Custom { u } => {
                if u.len() != g.n {
                    return Err(Error::Shape { expected: g.n, got: u.len() });
                }
                u.clone()
            }
        };
        if let Some(x) = u.iter().find(|x| !(**x >= T::zero()) || !x.is_finite()) {
            return Err(Error::Config(format!("initial activity must be finite and non-negative, found {x}")));
        }
        Ok(u)
    }

    pub fn build(&self, g: &Grid1D<T>, p: &Params<T>, tension: InitialTension<T>) -> Result<Fields<T>> {
        let u = self.activity(g)?;
        let v = match tension {
            InitialTension::Rest => vec![v_star(p, T::zero())?; g.n],
            InitialTension::Constant { value } => vec![value; g.n],
            InitialTension::Manifold { cap } => {
                u.iter().map(|&x| v_star(p, x.min(cap))).collect::<Result<Vec<T>>>()?
            }
        };
        Fields::new(u, v, T::zero())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Schedule<T> {
    pub t_end: T,
    #[serde(default)]
    pub snapshot_times: Vec<T>,
    /// Step size; defaults to the stability bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<T>,
}

impl<T: Real> Schedule<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        for &s in &self.snapshot_times {
            if !(s >= T::zero() && s <= self.t_end) {
                return Err(Error::Config(format!("snapshot time {s} outside [0, t_end = {}]", self.t_end)));
            }
        }
        if self.snapshot_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("snapshot times must increase strictly".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig<T> {
    pub params: Params<T>,
    pub grid: Grid1D<T>,
    pub environment: EnvironmentProfile<T>,
    pub kernel: KernelSpec<T>,
    pub initial: Fields<T>,
    pub shocks: Vec<ShockEvent<T>>,
    pub schedule: Schedule<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct Snapshot<T> {
    pub t: T,
    pub u: Vec<T>,
    pub v: Vec<T>,
    /// Entries floored since the previous snapshot.
    pub clipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct Trajectory<T> {
    pub grid: Grid1D<T>,
    pub snapshots: Vec<Snapshot<T>>,
    pub kernel_row_sum: T,
    pub steps: u64,
    pub clipped: usize,
}

/// A running simulation: the system, its state and pending shocks.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    system: System<T>,
    fields: Fields<T>,
    shocks: Vec<ShockEvent<T>>,
    next_shock: usize,
    dt: T,
    steps: u64,
    clipped: usize,
}

impl<T: Real> Simulation<T> {
    pub fn new(system: System<T>, initial: Fields<T>, mut shocks: Vec<ShockEvent<T>>, dt: Option<T>) -> Result<Self> {
        let n = system.grid.n;
        if initial.u.len() != n || initial.v.len() != n {
            return Err(Error::Shape { expected: n, got: initial.u.len() });
        }
        for s in &shocks {
            s.validate(&system.grid)?;
        }
        shocks.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("validated"));
        let bound = system.stable_dt();
        let dt = dt.unwrap_or(bound);
        if !(dt > T::zero()) || dt > bound {
            return Err(Error::Cfl { dt: dt.as_f64(), bound: bound.as_f64() });
        }
        Ok(Simulation { system, fields: initial, shocks, next_shock: 0, dt, steps: 0, clipped: 0 })
    }

    pub fn fields(&self) -> &Fields<T> {
        &self.fields
    }

    pub fn system(&self) -> &System<T> {
        &self.system
    }

    pub fn t(&self) -> T {
        self.fields.t
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    fn fire_due(&mut self) -> Result<()> {
        let tol = self.dt * T::lit(1e-9);
        while let Some(s) = self.shocks.get(self.next_shock) {
            if s.t > self.fields.t + tol {
                break;
            }
            let s = *s;
            apply_shock_in_place(&mut self.fields, &s, &self.system.params, &self.system.grid)?;
            self.next_shock += 1;
        }
        Ok(())
    }

    /// Integrates up to `target`, landing on it and on every shock time
    /// exactly. Shocks due at the final time are applied on arrival.
    pub fn advance_to(&mut self, target: T) -> Result<()> {
        let tol = self.dt * T::lit(1e-9);
        self.fire_due()?;
        while self.fields.t < target - tol {
            let stop = match self.shocks.get(self.next_shock) {
                Some(s) if s.t < target => s.t,
                _ => target,
            };
            while self.fields.t < stop - tol {
                let remaining = stop - self.fields.t;
                let last = remaining <= self.dt;
                let h = if last { remaining } else { self.dt };
                self.clipped += self.system.step(&mut self.fields, h)?;
                self.steps += 1;
                if last {
                    self.fields.t = stop;
                }
            }
            self.fields.t = stop;
            self.fire_due()?;
        }
        Ok(())
    }

    pub fn into_fields(self) -> Fields<T> {
        self.fields
    }
}

/// Integrates `cfg` to `t_end`, recording snapshots at the scheduled times
/// (after any shock due at the same time).
pub fn run<T: Real>(cfg: &RunConfig<T>) -> Result<Trajectory<T>> {
    cfg.schedule.validate()?;
    let system = System::new(cfg.params, cfg.grid, &cfg.environment, &cfg.kernel)?;
    let kernel_row_sum = system.kernel_row_sum();
    let mut sim = Simulation::new(system, cfg.initial.clone(), cfg.shocks.clone(), cfg.schedule.dt)?;
    let mut snapshots = Vec::with_capacity(cfg.schedule.snapshot_times.len());
    let mut last_clip = 0;
    for &ts in &cfg.schedule.snapshot_times {
        sim.advance_to(ts)?;
        let f = sim.fields();
        snapshots.push(Snapshot { t: ts, u: f.u.clone(), v: f.v.clone(), clipped: sim.clipped() - last_clip });
        last_clip = sim.clipped();
    }
    sim.advance_to(cfg.schedule.t_end)?;
    Ok(Trajectory { grid: cfg.grid, snapshots, kernel_row_sum, steps: sim.steps(), clipped: sim.clipped() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::grid::Boundary;

    fn cfg(alpha: f64, t_end: f64) -> RunConfig<f64> {
        let p = Params::reference(6.0, 8.0, alpha);
        let g = Grid1D::no_flux(0.0, 10.0, 0.1).unwrap();
        RunConfig {
            params: p,
            grid: g,
            environment: EnvironmentProfile::uniform(alpha).unwrap(),
            kernel: KernelSpec::None,
            initial: InitialProfile::Zero.build(&g, &p, InitialTension::Rest).unwrap(),
            shocks: vec![],
            schedule: Schedule { t_end, snapshot_times: vec![0.0, t_end / 3.0, t_end], dt: None },
        }
    }

    #[test]
    fn shock_integral_and_linearity() {
        let p = Params::reference(6.0, 8.0, 0.0).with_shock(2.5);
        for b in [Boundary::NoFlux, Boundary::Periodic] {
            let g = Grid1D::new(40, 0.25, 0.0, b).unwrap();
            let f = Fields::constant(40, 0.1, 1.5);
            let e = ShockEvent { t: 0.0, x: 3.1, amplitude: None };
            let once = apply_shock(&f, &e, &p, &g).unwrap();
            let dv: Vec<f64> = once.v.iter().zip(&f.v).map(|(a, b)| a - b).collect();
            assert!((g.integrate(&dv) - 2.5).abs() < 1e-12);
            assert_eq!(once.u, f.u);
            let twice = apply_shock(&once, &e, &p, &g).unwrap();
            let dv: Vec<f64> = twice.v.iter().zip(&f.v).map(|(a, b)| a - b).collect();
            assert!((g.integrate(&dv) - 5.0).abs() < 1e-12);
            let end = ShockEvent { t: 0.0, x: 0.0, amplitude: Some(1.0) };
            let at_end = apply_shock(&f, &end, &p, &g).unwrap();
            let dv: Vec<f64> = at_end.v.iter().zip(&f.v).map(|(a, b)| a - b).collect();
            assert!((g.integrate(&dv) - 1.0).abs() < 1e-12);
        }
        let g = Grid1D::new(40, 0.25, 0.0, Boundary::NoFlux).unwrap();
        let f = Fields::constant(40, 0.1, 1.5);
        let zero = ShockEvent { t: 0.0, x: 3.0, amplitude: Some(0.0) };
        assert_eq!(apply_shock(&f, &zero, &p, &g).unwrap(), f);
        let off = ShockEvent { t: 0.0, x: 30.0, amplitude: None };
        assert!(matches!(apply_shock(&f, &off, &p, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn rest_state_relaxation_under_censoring() {
        let c = cfg(1.0, 40.0);
        let tr = run(&c).unwrap();
        let vr = 1.0 / 0.75;
        let last = tr.snapshots.last().unwrap();
        assert_eq!(last.t, 40.0);
        assert!(last.v.iter().all(|v| (v - vr).abs() < 1e-6));
        assert!(last.u.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn snapshot_and_shock_times_are_hit_exactly() {
        let mut c = cfg(0.0, 1.0);
        c.params.shock_amplitude = 1.0;
        c.shocks = vec![ShockEvent { t: 0.123456, x: 5.0, amplitude: None }];
        c.schedule.snapshot_times = vec![0.0, 0.123456, 0.5, 1.0];
        let tr = run(&c).unwrap();
        let ts: Vec<f64> = tr.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 0.123456, 0.5, 1.0]);
        let g = c.grid;
        let jump = g.integrate(&tr.snapshots[1].v) - g.integrate(&tr.snapshots[0].v);
        assert!(jump > 0.99, "{jump}");
    }

    #[test]
    fn reruns_are_bitwise_identical() {
        let mut c = cfg(0.2, 3.0);
        c.params.shock_amplitude = 4.0;
        c.shocks = vec![ShockEvent { t: 0.0, x: 5.0, amplitude: None }, ShockEvent { t: 1.0, x: 2.0, amplitude: None }];
        assert_eq!(run(&c).unwrap(), run(&c).unwrap());
    }

    #[test]
    fn schedule_validation() {
        let mut c = cfg(0.0, 1.0);
        c.schedule.snapshot_times = vec![0.5, 2.0];
        assert!(run(&c).is_err());
        c.schedule.snapshot_times = vec![0.5, 0.5];
        assert!(run(&c).is_err());
        c.schedule = Schedule { t_end: 1.0, snapshot_times: vec![], dt: Some(1.0) };
        assert!(matches!(run(&c), Err(Error::Cfl { .. })));
    }

    #[test]
    fn initial_profiles() {
        let g = Grid1D::no_flux(0.0, 10.0, 0.5).unwrap();
        let p = Params::reference(6.0, 8.0, 0.0);
        let s = InitialProfile::Step { position: 2.0, value: 0.8 }.activity(&g).unwrap();
        assert_eq!(s.iter().filter(|&&x| x == 0.8).count(), 4);
        let e = InitialProfile::ExpDecay { rate: 1.0, amplitude: 5.0, origin: 0.0 }.activity(&g).unwrap();
        assert!((e[2] - 5.0 * (-1.0f64).exp()).abs() < 1e-15);
        let f = InitialProfile::ExpDecay { rate: 1.0, amplitude: 5.0, origin: 0.0 }
            .build(&g, &p, InitialTension::Manifold { cap: 0.9 })
            .unwrap();
        assert!((f.v[0] - v_star(&p, 0.9).unwrap()).abs() < 1e-15);
        assert!(InitialProfile::Custom { u: vec![1.0; 3] }.activity(&g).is_err());
        assert!(InitialProfile::Constant { value: -1.0 }.activity(&g).is_err());
    }
}
