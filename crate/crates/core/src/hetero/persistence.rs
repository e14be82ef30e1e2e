//! Long-run simulations that decide whether activity persists in a periodic
//! environment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibria::v_rest;
use crate::error::{Error, Result};
use crate::model::Params;
use crate::pde::{Fields, Grid1D, KernelSpec, PeriodicEnv, Simulation, System};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct LongRunSetup<T> {
    /// Number of periods simulated side by side.
    pub periods: usize,
    /// Target spacing; the actual one divides the period evenly.
    pub dx: T,
    /// Initial activity is uniform on `[0, amplitude]`.
    pub amplitude: T,
    /// With an eigenvalue supplied the amplitude is capped at
    /// `linear_fraction · |λ|`, since a weakly stable rest state has a basin
    /// of size `O(|λ|)` and larger data can reach the excited branch.
    pub linear_fraction: T,
    pub min_time: T,
    /// Run at least `time_factor / |λ|` when an eigenvalue is supplied.
    pub time_factor: T,
    pub max_time: T,
    pub check_interval: T,
    /// Relative sup-norm change per check below which a profile is settled.
    pub settle_tol: T,
    /// `‖u‖∞` below which activity counts as gone.
    pub vanish_tol: T,
}

impl<T: Real> Default for LongRunSetup<T> {
    fn default() -> Self {
        LongRunSetup {
            periods: 2,
            dx: T::lit(0.2),
            amplitude: T::lit(0.01),
            linear_fraction: T::lit(0.1),
            min_time: T::lit(100.0),
            time_factor: T::lit(40.0),
            max_time: T::lit(20_000.0),
            check_interval: T::one(),
            settle_tol: T::lit(1e-6),
            vanish_tol: T::lit(1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Persisted,
    Vanished,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct LongRunReport<T> {
    pub outcome: Outcome,
    pub t_final: T,
    pub max_u: T,
    pub relative_change: T,
    /// Largest difference between adjacent periods of the final `u` and `v`.
    pub periodicity_error: T,
    /// Final `u` over the first period.
    pub profile: Vec<T>,
}

fn rel_change<T: Real>(a: &[T], b: &[T]) -> T {
    let num = a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()));
    let den = b.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if den == T::zero() {
        num
    } else {
        num / den
    }
}

/// Simulates from small random positive activity until the solution settles
/// or dies out.
pub fn long_run_outcome<T: Real>(
    p: &Params<T>,
    env: &PeriodicEnv<T>,
    lambda: Option<T>,
    seed: u64,
    setup: &LongRunSetup<T>,
) -> Result<LongRunReport<T>> {
    env.validate()?;
    if setup.periods < 2 {
        return Err(Error::Config("long runs need at least two periods to test periodicity".into()));
    }
    let per = (env.period / setup.dx).round().to_usize().unwrap_or(0).max(4);
    let tiled = PeriodicEnv { repetitions: setup.periods, ..env.clone() };
    let g = Grid1D::periodic(T::zero(), tiled.extent(), per * setup.periods)?;
    let profile = tiled.profile(T::zero())?;
    let alpha = profile.sample(&g);
    let system = System::with_alpha(*p, g, alpha, &KernelSpec::None)?;

    let amplitude = match lambda {
        Some(l) => setup.amplitude.min(setup.linear_fraction * l.abs()),
        None => setup.amplitude,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0: Vec<T> = (0..g.n).map(|_| amplitude * T::lit(rng.gen_range(0.05..1.0))).collect();
    let fields = Fields::new(u0, vec![v_rest(p); g.n], T::zero())?;
    let mut sim = Simulation::new(system, fields, vec![], None)?;

    let horizon = match lambda {
        Some(l) if l != T::zero() => setup.min_time.max(setup.time_factor / l.abs()),
        _ => setup.min_time,
    }
    .min(setup.max_time);
    let mut prev = sim.fields().clone();
    let mut t = T::zero();
    let mut outcome = Outcome::Undecided;
    let mut change = T::infinity();
    while t < horizon {
        t += setup.check_interval;
        sim.advance_to(t)?;
        let f = sim.fields();
        if f.max_u() < setup.vanish_tol {
            outcome = Outcome::Vanished;
            break;
        }
        change = rel_change(&f.u, &prev.u).max(rel_change(&f.v, &prev.v));
        if change < setup.settle_tol && f.max_u() > setup.vanish_tol.sqrt() {
            outcome = Outcome::Persisted;
            break;
        }
        prev = f.clone();
    }
    let f = sim.fields();
    let mut periodicity_error = T::zero();
    for k in 1..setup.periods {
        for i in 0..per {
            let j = k * per + i;
            let l = (k - 1) * per + i;
            periodicity_error = periodicity_error.max((f.u[j] - f.u[l]).abs()).max((f.v[j] - f.v[l]).abs());
        }
    }
    Ok(LongRunReport {
        outcome,
        t_final: f.t,
        max_u: f.max_u(),
        relative_change: change,
        periodicity_error,
        profile: f.u[..per].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn censored_environment_vanishes() {
        let p = Params::<f64>::reference(12.0, 0.5, 1.0);
        let env = PeriodicEnv::uniform(4.0, 1.0).unwrap();
        let r = long_run_outcome(&p, &env, Some(0.25), 7, &LongRunSetup::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Vanished);
    }

    #[test]
    fn unstable_rest_state_persists_periodically() {
        let p = Params::<f64>::reference(8.0, 0.5, 0.0);
        let env = PeriodicEnv::two_patch(4.0, 1.0, 1.0, 0.0, 1).unwrap();
        let r = long_run_outcome(&p, &env, None, 3, &LongRunSetup::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Persisted);
        assert!(r.periodicity_error < 1e-6, "{}", r.periodicity_error);
        assert!(r.profile.iter().all(|&u| u > 0.0));
    }

    #[test]
    fn weakly_stable_rest_state_needs_small_data() {
        // bistable kinetics with a rest-state eigenvalue of about 4.3e-3
        let p = Params::<f64>::reference(8.784030464696158, 1.3277808420610078, 0.0);
        let env = PeriodicEnv::two_patch(8.0, 4.0, 0.6392312001780927, 0.0, 1).unwrap();
        let lambda = 0.004294019926709874;
        let raw = LongRunSetup { linear_fraction: f64::INFINITY, ..LongRunSetup::default() };
        let big = long_run_outcome(&p, &env, Some(lambda), 7, &raw).unwrap();
        assert_eq!(big.outcome, Outcome::Persisted);
        let small = long_run_outcome(&p, &env, Some(lambda), 7, &LongRunSetup::default()).unwrap();
        assert_eq!(small.outcome, Outcome::Vanished);
    }
}
