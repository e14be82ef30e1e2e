use serde::{Deserialize, Serialize};

use super::environment::EnvironmentProfile;
use super::grid::Grid1D;
use super::kernel::{Kernel, KernelSpec};
use crate::equilibria::activity_ceiling;
use crate::error::{Error, Result};
use crate::model::{growth_at, Params};
use crate::scalar::Real;

/// Stable explicit step factor: `dt ≤ CFL_FACTOR · dx² / max(1, D)`.
pub const CFL_FACTOR: f64 = 0.4;
/// Values below `−CLIP_REPORT` are counted when floored.
pub const CLIP_REPORT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Fields<T> {
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub t: T,
}

impl<T: Real> Fields<T> {
    pub fn new(u: Vec<T>, v: Vec<T>, t: T) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Shape { expected: u.len(), got: v.len() });
        }
        let f = Fields { u, v, t };
        f.check_finite()?;
        Ok(f)
    }

    pub fn constant(n: usize, u: T, v: T) -> Self {
        Fields { u: vec![u; n], v: vec![v; n], t: T::zero() }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn max_u(&self) -> T {
        sup(&self.u)
    }

    pub fn max_v(&self) -> T {
        sup(&self.v)
    }

    fn check_finite(&self) -> Result<()> {
        if self.u.iter().chain(&self.v).all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::BlowUp { t: self.t.as_f64(), max_u: self.max_u().as_f64(), max_v: self.max_v().as_f64() })
        }
    }
}

pub(crate) fn sup<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::neg_infinity(), |a, &b| if b.is_nan() || b > a { b } else { a })
}

/// Which terms of the right-hand side are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dynamics {
    #[default]
    Full,
    /// Only the diffusion terms; used to check conservation of the stencil.
    DiffusionOnly,
}

/// Largest stable step for the explicit scheme.
pub fn stable_dt<T: Real>(dx: T, diffusivity: T) -> T {
    T::lit(CFL_FACTOR) * dx * dx / diffusivity.max(T::one())
}

/// The semi-discrete system on a fixed grid, with scratch buffers so that
/// stepping does not allocate.
#[derive(Debug, Clone)]
pub struct System<T> {
    pub params: Params<T>,
    pub grid: Grid1D<T>,
    alpha: Vec<T>,
    kernel: Kernel<T>,
    dynamics: Dynamics,
    ws: Workspace<T>,
}

#[derive(Debug, Clone)]
struct Workspace<T> {
    du: Vec<T>,
    dv: Vec<T>,
    u1: Vec<T>,
    v1: Vec<T>,
    lap: Vec<T>,
    conv: Vec<T>,
}

impl<T: Real> Workspace<T> {
    fn new(n: usize) -> Self {
        let z = vec![T::zero(); n];
        Workspace { du: z.clone(), dv: z.clone(), u1: z.clone(), v1: z.clone(), lap: z.clone(), conv: z }
    }
}

impl<T: Real> System<T> {
    pub fn new(params: Params<T>, grid: Grid1D<T>, env: &EnvironmentProfile<T>, kernel: &KernelSpec<T>) -> Result<Self> {
        params.validate()?;
        grid.validate()?;
        let alpha = env.sample(&grid);
        Self::with_alpha(params, grid, alpha, kernel)
    }

    /// System with `α` given per node.
    pub fn with_alpha(params: Params<T>, grid: Grid1D<T>, alpha: Vec<T>, kernel: &KernelSpec<T>) -> Result<Self> {
        params.validate()?;
        grid.validate()?;
        if alpha.len() != grid.n {
            return Err(Error::Shape { expected: grid.n, got: alpha.len() });
        }
        if let Some(a) = alpha.iter().find(|a| !(**a >= T::zero() && **a <= T::one())) {
            return Err(Error::param("alpha", format!("alpha must lie in [0,1], got {a}")));
        }
        let kernel = Kernel::new(kernel, &grid)?;
        Ok(System { params, grid, alpha, kernel, dynamics: Dynamics::Full, ws: Workspace::new(grid.n) })
    }

    pub fn set_dynamics(&mut self, d: Dynamics) {
        self.dynamics = d;
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn kernel_row_sum(&self) -> T {
        self.kernel.row_sum_bound()
    }

    pub fn stable_dt(&self) -> T {
        stable_dt(self.grid.dx, self.params.diffusivity)
    }

    /// Largest `u` the reaction can sustain anywhere in this environment.
    pub fn activity_ceiling(&self) -> T {
        let lowest = self.alpha.iter().fold(T::one(), |a, &b| a.min(b));
        activity_ceiling(&self.params.with_alpha(lowest))
    }

    /// Writes `(f(u, v), g(u, v))` into `(du, dv)`.
    fn eval(&self, u: &[T], v: &[T], du: &mut [T], dv: &mut [T], lap: &mut [T], conv: &mut [T]) {
        let p = &self.params;
        let g = &self.grid;
        g.laplacian_into(u, T::one(), du).expect("lengths checked");
        g.laplacian_into(v, p.diffusivity, lap).expect("lengths checked");
        if self.dynamics == Dynamics::DiffusionOnly {
            dv.copy_from_slice(lap);
            return;
        }
        let nonlocal = p.k != T::zero() && !self.kernel.is_zero();
        if nonlocal {
            self.kernel.apply_into(v, conv);
        }
        for i in 0..g.n {
            let (ui, vi) = (u[i], v[i]);
            let growth = growth_at(ui, self.alpha[i]);
            let react = if growth == T::zero() { T::zero() } else { p.r(vi) * growth };
            du[i] += react - ui;
            let mut t = lap[i] - (p.h_unchecked(ui) - p.k2) * vi + T::one();
            if nonlocal {
                t += p.k * conv[i];
            }
            dv[i] = t;
        }
    }

    /// One Heun (SSP-RK2) step of size `dt` in place. Returns the number of
    /// entries floored from below `−1e−12`.
    pub fn step(&mut self, f: &mut Fields<T>, dt: T) -> Result<usize> {
        let n = self.grid.n;
        if f.u.len() != n || f.v.len() != n {
            return Err(Error::Shape { expected: n, got: f.u.len().min(f.v.len()) });
        }
        let bound = self.stable_dt();
        if !(dt > T::zero()) || dt > bound * (T::one() + T::lit(1e-12)) {
            return Err(Error::Cfl { dt: dt.as_f64(), bound: bound.as_f64() });
        }
        let mut ws = std::mem::replace(&mut self.ws, Workspace::new(0));
        self.eval(&f.u, &f.v, &mut ws.du, &mut ws.dv, &mut ws.lap, &mut ws.conv);
        let mut clipped = 0;
        for i in 0..n {
            ws.u1[i] = f.u[i] + dt * ws.du[i];
            ws.v1[i] = f.v[i] + dt * ws.dv[i];
        }
        clipped += floor_negatives(&mut ws.u1) + floor_negatives(&mut ws.v1);
        {
            let Workspace { du, dv, u1, v1, lap, conv } = &mut ws;
            self.eval(u1, v1, du, dv, lap, conv);
        }
        let half = T::lit(0.5);
        for i in 0..n {
            f.u[i] = half * (f.u[i] + ws.u1[i] + dt * ws.du[i]);
            f.v[i] = half * (f.v[i] + ws.v1[i] + dt * ws.dv[i]);
        }
        clipped += floor_negatives(&mut f.u) + floor_negatives(&mut f.v);
        self.ws = ws;
        f.t += dt;
        f.check_finite()?;
        Ok(clipped)
    }
}

fn floor_negatives<T: Real>(x: &mut [T]) -> usize {
    let mut count = 0;
    let report = -T::lit(CLIP_REPORT);
    for xi in x.iter_mut() {
        if *xi < T::zero() {
            if *xi < report {
                count += 1;
            }
            *xi = T::zero();
        }
    }
    count
}

/// Single step with freshly assembled operators.
pub fn step<T: Real>(
    f: &Fields<T>,
    p: &Params<T>,
    env: &EnvironmentProfile<T>,
    ks: &KernelSpec<T>,
    g: &Grid1D<T>,
    dt: T,
) -> Result<Fields<T>> {
    let mut sys = System::new(*p, *g, env, ks)?;
    let mut out = f.clone();
    sys.step(&mut out, dt)?;
    Ok(out)
}
