//! Fronts in periodically patchy media.

use serde::{Deserialize, Serialize};

use crate::equilibria::excited_state;
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::model::Params;
use crate::pde::{Grid1D, InitialProfile, InitialTension, KernelSpec, PeriodicEnv, Simulation, System};
use crate::scalar::Real;
use crate::wave::{leading_edge, FrontTrace, STATIONARY_TOL, TRANSIENT_FRACTION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct PulsatingSetup<T> {
    pub dx: T,
    pub t_end: T,
    pub sample_dt: T,
    /// Periods excited at `t = 0`, counted from the left end.
    pub excited_periods: usize,
    /// Stop once the leading edge is this close to the right end.
    pub margin: T,
    pub stationary_tol: T,
    /// Allowed relative mismatch between the measured oscillation period and
    /// `L / mean speed`.
    pub period_tol: T,
}

impl<T: Real> Default for PulsatingSetup<T> {
    fn default() -> Self {
        PulsatingSetup {
            dx: T::lit(0.05),
            t_end: T::lit(60.0),
            sample_dt: T::lit(0.05),
            excited_periods: 2,
            margin: T::lit(5.0),
            stationary_tol: T::lit(STATIONARY_TOL),
            period_tol: T::lit(0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseVerdict {
    Pulsating,
    Blocked,
    /// Moving, but without a clean oscillation at the patch frequency.
    Irregular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct PulsatingReport<T> {
    pub mean_speed: T,
    pub speed_stderr: T,
    /// Half the peak-to-peak range of the detrended front position.
    pub oscillation_amplitude: T,
    pub oscillation_period: Option<T>,
    pub expected_period: Option<T>,
    pub verdict: PulseVerdict,
    #[serde(skip)]
    pub trace: FrontTrace<T>,
}

/// Period with the largest periodogram power among `[min_p, max_p]`.
pub fn dominant_period<T: Real>(times: &[T], values: &[T], min_p: T, max_p: T) -> Option<T> {
    if times.len() < 8 || !(max_p > min_p) {
        return None;
    }
    let span = times[times.len() - 1] - times[0];
    // frequency grid fine enough to resolve a tenth of one cycle over the span
    let f_lo = max_p.recip();
    let f_hi = min_p.recip();
    let df = (span * T::lit(10.0)).recip();
    let steps = ((f_hi - f_lo) / df).ceil().to_usize()?.clamp(1, 200_000);
    let mut best = (T::zero(), None);
    for k in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * T::from_count(k) / T::from_count(steps);
        let w = T::TAU() * f;
        let (mut c, mut s) = (T::zero(), T::zero());
        for (&t, &y) in times.iter().zip(values) {
            c += y * (w * t).cos();
            s += y * (w * t).sin();
        }
        let power = c * c + s * s;
        if power > best.0 {
            best = (power, Some(f.recip()));
        }
    }
    best.1
}

/// Front started from the left end of a tiled environment, tracked by its
/// leading edge at half the excited level of the least censored patch.
pub fn pulsating_front_experiment<T: Real>(
    p: &Params<T>,
    env: &PeriodicEnv<T>,
    setup: &PulsatingSetup<T>,
) -> Result<PulsatingReport<T>> {
    env.validate()?;
    if setup.excited_periods >= env.repetitions {
        return Err(Error::Config("the excited block must be shorter than the domain".into()));
    }
    let alpha_min = env.patches.iter().fold(T::one(), |a, pch| a.min(pch.2));
    let u_star = excited_state(&p.with_alpha(alpha_min))?
        .ok_or_else(|| Error::Domain("no excited state in the least censored patch".into()))?
        .u;
    let level = u_star / T::lit(2.0);
    let g = Grid1D::no_flux(T::zero(), env.extent(), setup.dx)?;
    let profile = env.profile(T::zero())?;
    let x_start = env.period * T::from_count(setup.excited_periods);
    let fields = InitialProfile::Step { position: x_start, value: u_star }.build(
        &g,
        p,
        InitialTension::Manifold { cap: u_star },
    )?;
    let system = System::new(*p, g, &profile, &KernelSpec::None)?;
    let mut sim = Simulation::new(system, fields, vec![], None)?;
    let (_, hi) = g.extent();
    let mut trace = FrontTrace::default();
    let n = (setup.t_end / setup.sample_dt).ceil().to_usize().unwrap_or(0);
    for k in 0..=n {
        let t = (setup.sample_dt * T::from_count(k)).min(setup.t_end);
        sim.advance_to(t)?;
        let x = leading_edge(&sim.fields().u, &g, level)?;
        trace.push(t, x)?;
        if hi - x < setup.margin {
            break;
        }
    }

    let t_last = *trace.times.last().expect("non-empty trace");
    let cut = T::lit(TRANSIENT_FRACTION) * t_last;
    let start = trace.times.partition_point(|&t| t < cut);
    let (ts, xs) = (&trace.times[start..], &trace.positions[start..]);
    let fit = fit_line(ts, xs)?;
    let detrended: Vec<T> = ts.iter().zip(xs).map(|(&t, &x)| x - fit.intercept - fit.slope * t).collect();
    let (lo_r, hi_r) = detrended.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &r| (a.min(r), b.max(r)));
    let amplitude = (hi_r - lo_r) / T::lit(2.0);

    let moving = fit.slope > setup.stationary_tol;
    let expected = if moving { Some(env.period / fit.slope) } else { None };
    let span = ts[ts.len() - 1] - ts[0];
    let measured = expected.and_then(|_| {
        dominant_period(ts, &detrended, T::lit(4.0) * setup.sample_dt, span / T::lit(2.0))
    });
    let verdict = match (moving, expected, measured) {
        (false, _, _) => PulseVerdict::Blocked,
        (true, Some(e), Some(m)) if ((m - e) / e).abs() <= setup.period_tol => PulseVerdict::Pulsating,
        _ => PulseVerdict::Irregular,
    };
    Ok(PulsatingReport {
        mean_speed: fit.slope,
        speed_stderr: fit.slope_stderr,
        oscillation_amplitude: amplitude,
        oscillation_period: measured,
        expected_period: expected,
        verdict,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodogram_finds_sine() {
        let t: Vec<f64> = (0..400).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| (std::f64::consts::TAU * t / 3.7).sin()).collect();
        let p = dominant_period(&t, &y, 0.5, 20.0).unwrap();
        assert!((p - 3.7).abs() < 0.05, "{p}");
    }
}
