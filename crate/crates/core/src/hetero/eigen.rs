//! Principal eigenvalue of the linearization at the rest state in a periodic
//! environment.
//!
//! With `w = (φ, ψ)` the operator is
//!
//! ```text
//! L₁ = −Δφ − Φ_u(x) φ − Φ_v(x) ψ
//! L₂ = −DΔψ − Ψ_u φ − Ψ_v ψ
//! ```
//!
//! At `u = 0` the growth vanishes, so `Φ_v = 0` and the operator is block
//! lower-triangular: its spectrum is the union of the spectra of
//! `A = −Δ − Φ_u` and `E = −DΔ − Ψ_v`. Both are symmetric and periodic, and
//! each principal eigenvalue is found by inverse iteration with a cyclic
//! tridiagonal solve.

use serde::{Deserialize, Serialize};

use crate::equilibria::v_rest;
use crate::error::{Error, Result};
use crate::model::Params;
use crate::pde::{Boundary, Grid1D, PeriodicEnv};
use crate::scalar::Real;

pub const MAX_ITERATIONS: usize = 100_000;
/// `|λ|` at or below this is reported as marginal.
pub const MARGINAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Linearization {
    /// At the non-excited equilibrium `(0, v*(0))`.
    #[default]
    RestState,
    /// At `(0, 0)`, which is not an equilibrium.
    Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct EigenResult<T> {
    pub lambda: T,
    pub phi: Vec<T>,
    pub psi: Vec<T>,
    pub iterations: usize,
    pub residual: T,
    pub phi_sup: T,
    pub psi_sup: T,
    /// Principal eigenvalue of the activity block alone.
    pub lambda_activity: T,
    /// Principal eigenvalue of the tension block alone.
    pub lambda_tension: T,
    /// Set when the tension block is the principal one, in which case the
    /// eigenfunction has `φ = 0`.
    pub tension_dominated: bool,
    pub n: usize,
    pub dx: T,
}

impl<T: Real> EigenResult<T> {
    pub fn min_phi(&self) -> T {
        self.phi.iter().fold(T::infinity(), |a, &b| a.min(b))
    }

    pub fn min_psi(&self) -> T {
        self.psi.iter().fold(T::infinity(), |a, &b| a.min(b))
    }
}

/// Periodic symmetric tridiagonal matrix with constant off-diagonal `off`,
/// factored once for repeated solves (Sherman–Morrison on the corners).
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal<T> {
    off: T,
    diag: Vec<T>,
    gamma: T,
    cp: Vec<T>,
    denom: Vec<T>,
    z: Vec<T>,
    z_factor: T,
}

impl<T: Real> CyclicTridiagonal<T> {
    pub fn new(diag: Vec<T>, off: T) -> Result<Self> {
        let n = diag.len();
        if n < 3 {
            return Err(Error::Shape { expected: 3, got: n });
        }
        let mut m = CyclicTridiagonal { off, diag, gamma: T::zero(), cp: vec![], denom: vec![], z: vec![], z_factor: T::zero() };
        if off == T::zero() {
            if m.diag.iter().any(|&d| d == T::zero()) {
                return Err(Error::Numerical("singular diagonal system".into()));
            }
            return Ok(m);
        }
        m.gamma = -m.diag[0];
        let mut bb = m.diag.clone();
        bb[0] -= m.gamma;
        bb[n - 1] -= off * off / m.gamma;
        // Thomas factorization of the modified system
        let mut cp = vec![T::zero(); n];
        let mut denom = vec![T::zero(); n];
        denom[0] = bb[0];
        cp[0] = off / denom[0];
        for i in 1..n {
            denom[i] = bb[i] - off * cp[i - 1];
            if denom[i] == T::zero() || !denom[i].is_finite() {
                return Err(Error::Numerical("cyclic tridiagonal factorization broke down".into()));
            }
            cp[i] = off / denom[i];
        }
        m.cp = cp;
        m.denom = denom;
        let mut u = vec![T::zero(); n];
        u[0] = m.gamma;
        u[n - 1] = off;
        let z = m.thomas(&u);
        m.z_factor = T::one() + z[0] + off * z[n - 1] / m.gamma;
        m.z = z;
        Ok(m)
    }

    fn thomas(&self, r: &[T]) -> Vec<T> {
        let n = r.len();
        let mut y = vec![T::zero(); n];
        y[0] = r[0] / self.denom[0];
        for i in 1..n {
            y[i] = (r[i] - self.off * y[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            y[i] = y[i] - self.cp[i] * y[i + 1];
        }
        y
    }

    pub fn solve(&self, r: &[T]) -> Vec<T> {
        if self.off == T::zero() {
            return r.iter().zip(&self.diag).map(|(&a, &d)| a / d).collect();
        }
        let n = r.len();
        let mut x = self.thomas(r);
        let fact = (x[0] + self.off * x[n - 1] / self.gamma) / self.z_factor;
        for (xi, zi) in x.iter_mut().zip(&self.z) {
            *xi -= fact * *zi;
        }
        x
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = x.len();
        (0..n)
            .map(|i| self.diag[i] * x[i] + self.off * (x[(i + n - 1) % n] + x[(i + 1) % n]))
            .collect()
    }
}

fn sup_abs<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Principal eigenpair of `−dΔ + q` on a periodic grid by inverse iteration.
/// Returns `(λ, eigenvector with max 1, iterations)`.
pub fn periodic_principal<T: Real>(q: &[T], d: T, dx: T) -> Result<(T, Vec<T>, usize)> {
    let n = q.len();
    let c = d / (dx * dx);
    let qmin = q.iter().fold(T::infinity(), |a, &b| a.min(b));
    let sigma = qmin - T::one();
    let shifted = CyclicTridiagonal::new(q.iter().map(|&qi| T::lit(2.0) * c + qi - sigma).collect(), -c)?;
    let op = CyclicTridiagonal::new(q.iter().map(|&qi| T::lit(2.0) * c + qi).collect(), -c)?;
    let scale = T::lit(4.0) * c + sup_abs(q) + T::one();
    let tol = T::max(T::lit(1e-11), T::epsilon() * T::lit(64.0) * scale);
    let mut x = vec![T::one(); n];
    let mut last_res = T::infinity();
    let mut stalled = 0;
    for it in 1..=MAX_ITERATIONS {
        let y = shifted.solve(&x);
        let m = sup_abs(&y);
        x = y.into_iter().map(|v| v / m).collect();
        let ax = op.apply(&x);
        let lambda = dot(&x, &ax) / dot(&x, &x);
        let res = ax.iter().zip(&x).fold(T::zero(), |a, (&l, &v)| a.max((l - lambda * v).abs()));
        if res <= tol {
            return Ok((lambda, x, it));
        }
        // round-off floor reached
        if res >= last_res * T::lit(0.999) {
            stalled += 1;
            if stalled > 50 && res < T::lit(1e-9) {
                return Ok((lambda, x, it));
            }
        } else {
            stalled = 0;
        }
        last_res = res;
    }
    Err(Error::EigenNotConverged { iterations: MAX_ITERATIONS, residual: last_res.as_f64() })
}

/// Pointwise coefficients `(Φ_u, Ψ_u, Ψ_v)` of the linearization; `Φ_v = 0`.
pub fn linear_coefficients<T: Real>(p: &Params<T>, alpha: &[T], mode: Linearization) -> (Vec<T>, T, T) {
    let v = match mode {
        Linearization::RestState => v_rest(p),
        Linearization::Origin => T::zero(),
    };
    let r = p.r(v);
    let phi_u = alpha.iter().map(|&a| if a == T::zero() { r - T::one() } else { -T::one() }).collect();
    let psi_u = -p.h_prime_unchecked(T::zero()) * v;
    let psi_v = -(T::one() - p.k2);
    (phi_u, psi_u, psi_v)
}

/// Checks the grid is periodic and spans one period of `env`.
pub fn check_period_grid<T: Real>(env: &PeriodicEnv<T>, g: &Grid1D<T>) -> Result<()> {
    env.validate()?;
    if g.boundary != Boundary::Periodic {
        return Err(Error::Config("the eigenproblem needs a periodic grid".into()));
    }
    if (g.length() - env.period).abs() > g.dx * T::lit(1e-6) {
        return Err(Error::Config(format!("grid spans {} but the period is {}", g.length(), env.period)));
    }
    Ok(())
}

/// `‖L(φ,ψ) − λ(φ,ψ)‖∞` for the full coupled operator.
pub fn full_residual<T: Real>(
    phi_u: &[T],
    psi_u: T,
    psi_v: T,
    d: T,
    dx: T,
    lambda: T,
    phi: &[T],
    psi: &[T],
) -> T {
    let n = phi.len();
    let c = T::one() / (dx * dx);
    let mut worst = T::zero();
    for i in 0..n {
        let (l, r) = ((i + n - 1) % n, (i + 1) % n);
        let lap_phi = c * (phi[l] - T::lit(2.0) * phi[i] + phi[r]);
        let lap_psi = c * (psi[l] - T::lit(2.0) * psi[i] + psi[r]);
        let r1 = -lap_phi - phi_u[i] * phi[i] - lambda * phi[i];
        let r2 = -d * lap_psi - psi_u * phi[i] - psi_v * psi[i] - lambda * psi[i];
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    worst
}

pub fn principal_eigenvalue<T: Real>(p: &Params<T>, env: &PeriodicEnv<T>, g: &Grid1D<T>) -> Result<EigenResult<T>> {
    principal_eigenvalue_with(p, env, g, Linearization::RestState)
}

pub fn principal_eigenvalue_with<T: Real>(
    p: &Params<T>,
    env: &PeriodicEnv<T>,
    g: &Grid1D<T>,
    mode: Linearization,
) -> Result<EigenResult<T>> {
    p.validate()?;
    check_period_grid(env, g)?;
    let (lo, _) = g.extent();
    let alpha = env.profile(lo)?.sample(g);
    let (phi_u, psi_u, psi_v) = linear_coefficients(p, &alpha, mode);
    let d = p.diffusivity;
    let q_a: Vec<T> = phi_u.iter().map(|&a| -a).collect();
    let (lambda_a, phi_a, it_a) = periodic_principal(&q_a, T::one(), g.dx)?;
    // E has constant coefficients, so its principal mode is the constant
    let lambda_e = -psi_v;

    let (lambda, mut phi, mut psi, dominated) = if lambda_a < lambda_e {
        // (E − λ_A) ψ = Ψ_u φ
        let c = d / (g.dx * g.dx);
        let solver = CyclicTridiagonal::new(vec![T::lit(2.0) * c - psi_v - lambda_a; g.n], -c)?;
        let rhs: Vec<T> = phi_a.iter().map(|&f| psi_u * f).collect();
        let psi = solver.solve(&rhs);
        (lambda_a, phi_a, psi, false)
    } else {
        (lambda_e, vec![T::zero(); g.n], vec![T::one(); g.n], true)
    };
    let norm = sup_abs(&phi).max(sup_abs(&psi));
    phi.iter_mut().for_each(|x| *x /= norm);
    psi.iter_mut().for_each(|x| *x /= norm);
    let residual = full_residual(&phi_u, psi_u, psi_v, d, g.dx, lambda, &phi, &psi);
    Ok(EigenResult {
        lambda,
        phi_sup: sup_abs(&phi),
        psi_sup: sup_abs(&psi),
        phi,
        psi,
        iterations: it_a,
        residual,
        lambda_activity: lambda_a,
        lambda_tension: lambda_e,
        tension_dominated: dominated,
        n: g.n,
        dx: g.dx,
    })
}

/// `(4λ(2n) − λ(n))/3` from periodic grids with `n` and `2n` cells.
pub fn richardson_eigenvalue<T: Real>(p: &Params<T>, env: &PeriodicEnv<T>, n: usize) -> Result<(T, T, T)> {
    let coarse = principal_eigenvalue(p, env, &Grid1D::periodic(T::zero(), env.period, n)?)?.lambda;
    let fine = principal_eigenvalue(p, env, &Grid1D::periodic(T::zero(), env.period, 2 * n)?)?.lambda;
    Ok(((T::lit(4.0) * fine - coarse) / T::lit(3.0), coarse, fine))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prediction {
    Persist,
    Vanish,
    Marginal,
}

pub fn predict<T: Real>(lambda: T) -> Prediction {
    let m = T::lit(MARGINAL);
    if lambda < -m {
        Prediction::Persist
    } else if lambda > m {
        Prediction::Vanish
    } else {
        Prediction::Marginal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct InstabilityCheck<T> {
    pub lambda: T,
    pub predicted: Prediction,
}

pub fn instability_check<T: Real>(p: &Params<T>, env: &PeriodicEnv<T>, g: &Grid1D<T>) -> Result<InstabilityCheck<T>> {
    let e = principal_eigenvalue(p, env, g)?;
    Ok(InstabilityCheck { lambda: e.lambda, predicted: predict(e.lambda) })
}
