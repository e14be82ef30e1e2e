//! Front tracking and traveling-wave experiments for the local system.
//!
//! Fronts have the excited state on the left and the rest state on the
//! right, so a positive speed means the excited state invades.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{excited_state, find_steady_states, growth_potential, reaction_potential, v_star};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::model::Params;
use crate::pde::{
    EnvironmentProfile, Fields, Grid1D, InitialProfile, InitialTension, KernelSpec, ShockEvent, Simulation, System,
};
use crate::scalar::Real;

pub const STATIONARY_TOL: f64 = 5e-3;
/// Minimum number of samples in a speed fit.
pub const MIN_FIT_SAMPLES: usize = 10;
/// `r²` a trailing window must reach before the transient is over.
pub const TRANSIENT_R2: f64 = 0.9999;
/// Fraction of the run always discarded as transient.
pub const TRANSIENT_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FrontTrace<T> {
    pub times: Vec<T>,
    pub positions: Vec<T>,
}

impl<T: Real> FrontTrace<T> {
    pub fn push(&mut self, t: T, x: T) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Numerical(format!("front trace times must increase: {t} after {last}")));
            }
        }
        self.times.push(t);
        self.positions.push(x);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t,x_f` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x_f\n");
        for (t, x) in self.times.iter().zip(&self.positions) {
            out.push_str(&format!("{t},{x}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveClass {
    Advancing,
    Stationary,
    Retreating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct WaveSpeedEstimate<T> {
    pub c: T,
    pub r2: T,
    pub stderr: T,
    pub classification: WaveClass,
    pub transient_cut: T,
    pub samples: usize,
}

fn crossings<T: Real>(u: &[T], level: T) -> Vec<usize> {
    (0..u.len().saturating_sub(1)).filter(|&i| (u[i] >= level) != (u[i + 1] >= level)).collect()
}

fn interpolate<T: Real>(u: &[T], g: &Grid1D<T>, level: T, i: usize) -> T {
    let (a, b) = (u[i], u[i + 1]);
    g.x(i) + g.dx * (a - level) / (a - b)
}

/// Abscissa where `u` crosses `level`; exactly one crossing is required.
pub fn front_position<T: Real>(u: &[T], g: &Grid1D<T>, level: T) -> Result<T> {
    if u.len() != g.n {
        return Err(Error::Shape { expected: g.n, got: u.len() });
    }
    let c = crossings(u, level);
    match c.len() {
        0 => Err(Error::FrontAbsent { level: level.as_f64() }),
        1 => Ok(interpolate(u, g, level, c[0])),
        n => Err(Error::NonMonotoneFront { crossings: n, level: level.as_f64() }),
    }
}

/// Rightmost crossing of `level`; for fronts in patchy media that may leave
/// excited islands behind.
pub fn leading_edge<T: Real>(u: &[T], g: &Grid1D<T>, level: T) -> Result<T> {
    if u.len() != g.n {
        return Err(Error::Shape { expected: g.n, got: u.len() });
    }
    match crossings(u, level).last() {
        Some(&i) => Ok(interpolate(u, g, level, i)),
        None => Err(Error::FrontAbsent { level: level.as_f64() }),
    }
}

pub fn classify_speed<T: Real>(c: T, tol: T) -> WaveClass {
    if c.abs() < tol {
        WaveClass::Stationary
    } else if c > T::zero() {
        WaveClass::Advancing
    } else {
        WaveClass::Retreating
    }
}

/// Start of the fitting window: the later of a fixed fraction of the run and
/// the first trailing window whose fit reaches `TRANSIENT_R2`.
pub fn transient_cut<T: Real>(tr: &FrontTrace<T>) -> T {
    let n = tr.len();
    let (t0, t1) = (tr.times[0], tr.times[n - 1]);
    let fixed = t0 + T::lit(TRANSIENT_FRACTION) * (t1 - t0);
    let w = MIN_FIT_SAMPLES.max(n / 10);
    if n < w {
        return fixed;
    }
    for end in w..=n {
        let s = end - w;
        if let Ok(f) = fit_line(&tr.times[s..end], &tr.positions[s..end]) {
            if f.r2 > T::lit(TRANSIENT_R2) {
                return fixed.max(tr.times[s]);
            }
        }
    }
    fixed
}

pub fn estimate_speed<T: Real>(tr: &FrontTrace<T>) -> Result<WaveSpeedEstimate<T>> {
    estimate_speed_with(tr, T::lit(STATIONARY_TOL))
}

pub fn estimate_speed_with<T: Real>(tr: &FrontTrace<T>, stationary_tol: T) -> Result<WaveSpeedEstimate<T>> {
    if tr.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData { needed: MIN_FIT_SAMPLES, got: tr.len() });
    }
    let cut = transient_cut(tr);
    let start = tr.times.partition_point(|&t| t < cut);
    let samples = tr.len() - start;
    if samples < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData { needed: MIN_FIT_SAMPLES, got: samples });
    }
    let f = fit_line(&tr.times[start..], &tr.positions[start..])?;
    Ok(WaveSpeedEstimate {
        c: f.slope,
        r2: f.r2,
        stderr: f.slope_stderr,
        classification: classify_speed(f.slope, stationary_tol),
        transient_cut: cut,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", bound = "T: Real")]
pub enum WaveInitial<T> {
    /// Excited state left of the start position, rest state right of it.
    Step,
    /// `amplitude · e^{−rate (x − start)}` right of the start position.
    ExpDecay { rate: T, amplitude: T },
    Custom { u: Vec<T> },
}

/// Domain and measurement protocol of a wave run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct WaveSetup<T> {
    pub length: T,
    pub dx: T,
    pub t_end: T,
    pub sample_dt: T,
    /// Initial front location as a fraction of the length.
    pub start_fraction: T,
    /// Stop once the front is this close to either end.
    pub margin: T,
    /// Crossing level; `u*/2` when absent.
    pub level: Option<T>,
    pub stationary_tol: T,
    /// Time between the two profiles compared for shape invariance.
    pub profile_lag: T,
    /// Half-width of the comparison window around the front.
    pub profile_window: T,
}

impl<T: Real> Default for WaveSetup<T> {
    fn default() -> Self {
        WaveSetup {
            length: T::lit(80.0),
            dx: T::lit(0.05),
            t_end: T::lit(100.0),
            sample_dt: T::lit(0.5),
            start_fraction: T::lit(0.5),
            margin: T::lit(10.0),
            level: None,
            stationary_tol: T::lit(STATIONARY_TOL),
            profile_lag: T::lit(5.0),
            profile_window: T::lit(10.0),
        }
    }
}

impl<T: Real> WaveSetup<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.length, self.dx, self.t_end, self.sample_dt, self.stationary_tol, self.profile_lag, self.profile_window];
        if pos.iter().any(|x| !(*x > T::zero())) || self.margin < T::zero() {
            return Err(Error::Config("wave setup lengths, times and tolerances must be positive".into()));
        }
        if !(self.start_fraction > T::zero() && self.start_fraction < T::one()) {
            return Err(Error::Config("start_fraction must lie in (0,1)".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D<T>> {
        Grid1D::no_flux(T::zero(), self.length, self.dx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct WaveReport<T> {
    pub params: Params<T>,
    pub u_star: T,
    pub level: T,
    pub estimate: WaveSpeedEstimate<T>,
    /// Potential of the growth term alone at `u*`.
    pub growth_potential: T,
    /// Potential of the full reduced reaction at `u*`.
    pub reaction_potential: T,
    /// Sup-norm shape change between the two late profiles after alignment.
    pub profile_change: T,
    /// Largest increase `u_{i+1} − u_i` of the final profile.
    pub monotonicity_defect: T,
    pub stopped_early: bool,
    #[serde(skip)]
    pub trace: FrontTrace<T>,
    #[serde(skip)]
    pub late_profiles: [(T, Vec<T>); 2],
    #[serde(skip)]
    pub grid: Grid1D<T>,
}

impl<T: Real> WaveReport<T> {
    pub fn translation_invariant(&self) -> bool {
        self.profile_change < T::lit(1e-3)
    }
}

fn sample_at<T: Real>(u: &[T], g: &Grid1D<T>, x: T) -> T {
    let s = ((x - g.x0) / g.dx).max(T::zero());
    let i = s.floor().to_usize().unwrap_or(0).min(g.n - 2);
    let w = (s - T::from_count(i)).min(T::one());
    u[i] * (T::one() - w) + u[i + 1] * w
}

/// Sup-norm difference of `b` shifted by `xb − xa` against `a`, over the
/// nodes of `a` within `window` of `xa` whose image stays on the grid.
pub fn aligned_difference<T: Real>(a: &[T], xa: T, b: &[T], xb: T, g: &Grid1D<T>, window: T) -> T {
    let (lo, hi) = g.extent();
    let shift = xb - xa;
    let mut worst = T::zero();
    for i in 0..g.n {
        let x = g.x(i);
        if (x - xa).abs() > window {
            continue;
        }
        let y = x + shift;
        if y < lo || y > hi {
            continue;
        }
        worst = worst.max((a[i] - sample_at(b, g, y)).abs());
    }
    worst
}

fn excited_level<T: Real>(p: &Params<T>) -> Result<T> {
    match excited_state(p)? {
        Some(s) => Ok(s.u),
        None => Err(Error::Domain(
            "parameters admit no excited constant state, so no front can form".into(),
        )),
    }
}

/// Runs a front from `initial` on a NoFlux box with tension started on the
/// curve of constant states, tracking the `level` crossing.
pub fn run_wave_experiment<T: Real>(p: &Params<T>, initial: &WaveInitial<T>, setup: &WaveSetup<T>) -> Result<WaveReport<T>> {
    setup.validate()?;
    p.validate()?;
    let u_star = excited_level(p)?;
    let level = setup.level.unwrap_or(u_star / T::lit(2.0));
    let g = setup.grid()?;
    let x_start = setup.length * setup.start_fraction;
    let profile = match initial {
        WaveInitial::Step => InitialProfile::Step { position: x_start, value: u_star },
        WaveInitial::ExpDecay { rate, amplitude } => {
            InitialProfile::ExpDecay { rate: *rate, amplitude: *amplitude, origin: x_start }
        }
        WaveInitial::Custom { u } => InitialProfile::Custom { u: u.clone() },
    };
    let fields = profile.build(&g, p, InitialTension::Manifold { cap: u_star })?;
    let env = EnvironmentProfile::uniform(p.alpha)?;
    let system = System::new(*p, g, &env, &KernelSpec::None)?;
    let mut sim = Simulation::new(system, fields, vec![], None)?;

    let mut trace = FrontTrace::default();
    let mut history: Vec<(T, Vec<T>)> = Vec::new();
    let (lo, hi) = g.extent();
    let mut stopped_early = false;
    let steps = (setup.t_end / setup.sample_dt).ceil().to_usize().unwrap_or(0);
    let lag_steps = (setup.profile_lag / setup.sample_dt).round().to_usize().unwrap_or(1).max(1);
    let mut t = T::zero();
    for k in 0..=steps {
        if k > 0 {
            t = (setup.sample_dt * T::from_count(k)).min(setup.t_end);
            sim.advance_to(t)?;
        }
        let u = &sim.fields().u;
        let x = front_position(u, &g, level)?;
        trace.push(t, x)?;
        history.push((t, u.clone()));
        if history.len() > lag_steps + 1 {
            history.remove(0);
        }
        if x - lo < setup.margin || hi - x < setup.margin {
            stopped_early = k < steps;
            break;
        }
        if t >= setup.t_end {
            break;
        }
    }

    let estimate = match estimate_speed_with(&trace, setup.stationary_tol) {
        Ok(e) => e,
        Err(Error::InsufficientData { .. }) if stopped_early => {
            let x = *trace.positions.last().expect("non-empty trace");
            let c = (x - trace.positions[0]) / t.max(setup.sample_dt);
            let needed = c.abs() * setup.t_end + T::lit(2.0) * setup.margin;
            return Err(Error::DomainTooSmall {
                t: t.as_f64(),
                position: x.as_f64(),
                suggested_length: (T::lit(2.0) * needed).max(setup.length * T::lit(2.0)).as_f64(),
            });
        }
        Err(e) => return Err(e),
    };

    let (ta, ua) = history.first().cloned().expect("non-empty history");
    let (tb, ub) = history.last().cloned().expect("non-empty history");
    let xa = front_position(&ua, &g, level)?;
    let xb = front_position(&ub, &g, level)?;
    let profile_change = aligned_difference(&ua, xa, &ub, xb, &g, setup.profile_window);
    let monotonicity_defect = ub.windows(2).map(|w| w[1] - w[0]).fold(T::zero(), |a, b| a.max(b));

    Ok(WaveReport {
        params: *p,
        u_star,
        level,
        estimate,
        growth_potential: growth_potential(p, u_star)?,
        reaction_potential: reaction_potential(p, u_star)?,
        profile_change,
        monotonicity_defect,
        stopped_early,
        trace,
        late_profiles: [(ta, ua), (tb, ub)],
        grid: g,
    })
}

/// Front speeds for exponentially decaying data `amplitude · e^{−k x}`, one
/// independent run per rate.
pub fn speed_vs_initial_decay<T: Real>(
    p: &Params<T>,
    rates: &[T],
    amplitude: T,
    setup: &WaveSetup<T>,
) -> Result<Vec<(T, WaveSpeedEstimate<T>)>> {
    rates
        .par_iter()
        .map(|&rate| {
            let r = run_wave_experiment(p, &WaveInitial::ExpDecay { rate, amplitude }, setup)?;
            Ok((rate, r.estimate))
        })
        .collect()
}

/// Finds `α` in `[lo, hi]` where the reaction potential at the excited state
/// vanishes, by bisection to `tol`.
pub fn balanced_alpha<T: Real>(p: &Params<T>, lo: T, hi: T, tol: T) -> Result<T> {
    let sign_at = |a: T| -> Result<T> {
        let q = p.with_alpha(a);
        reaction_potential(&q, excited_level(&q)?)
    };
    let (mut a, mut b) = (lo, hi);
    let fa = sign_at(a)?;
    let fb = sign_at(b)?;
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(Error::NoTransition {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            verdict: format!("potential has one sign: {fa} and {fb}"),
        });
    }
    let pos_low = fa > T::zero();
    while b - a > tol {
        let m = (a + b) / T::lit(2.0);
        if (sign_at(m)? > T::zero()) == pos_low {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a + b) / T::lit(2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct ExtinctionReport<T> {
    /// Fitted rate of `‖u‖∞ ~ e^{−τ t}` over the fit window.
    pub tau_hat: T,
    pub fit_window: (T, T),
    pub final_u_max: T,
    /// `‖v − v*(0)‖∞` at the end.
    pub final_v_error: T,
    pub decayed: bool,
    /// `(t, ‖u‖∞, ‖v − v*(0)‖∞)` at every sample.
    pub samples: Vec<(T, T, T)>,
}

/// Checks that activity dies out and tension relaxes to `v*(0)`.
#[allow(clippy::too_many_arguments)]
pub fn extinction_experiment<T: Real>(
    p: &Params<T>,
    grid: &Grid1D<T>,
    initial: &InitialProfile<T>,
    shocks: &[ShockEvent<T>],
    t_end: T,
    sample_dt: T,
    fit_window: (T, T),
    tol: T,
) -> Result<ExtinctionReport<T>> {
    let rest = v_star(p, T::zero())?;
    let fields: Fields<T> = initial.build(grid, p, InitialTension::Rest)?;
    let env = EnvironmentProfile::uniform(p.alpha)?;
    let system = System::new(*p, *grid, &env, &KernelSpec::None)?;
    let mut sim = Simulation::new(system, fields, shocks.to_vec(), None)?;
    let n = (t_end / sample_dt).ceil().to_usize().unwrap_or(0);
    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = (sample_dt * T::from_count(k)).min(t_end);
        sim.advance_to(t)?;
        let f = sim.fields();
        let ve = f.v.iter().fold(T::zero(), |a, &v| a.max((v - rest).abs()));
        samples.push((t, f.max_u(), ve));
    }
    let (ts, ls): (Vec<T>, Vec<T>) = samples
        .iter()
        .filter(|s| s.0 >= fit_window.0 && s.0 <= fit_window.1 && s.1 > T::zero())
        .map(|s| (s.0, s.1.ln()))
        .unzip();
    let tau_hat = if ts.len() >= 3 { -fit_line(&ts, &ls)?.slope } else { T::infinity() };
    let last = *samples.last().expect("at least one sample");
    Ok(ExtinctionReport {
        tau_hat,
        fit_window,
        final_u_max: last.1,
        final_v_error: last.2,
        decayed: last.1 < tol && last.2 < tol,
        samples,
    })
}

/// Number of constant states, used to check that a wave run is meaningful.
pub fn state_count<T: Real>(p: &Params<T>) -> Result<usize> {
    Ok(find_steady_states(p)?.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::Boundary;

    fn grid() -> Grid1D<f64> {
        Grid1D::new(200, 0.1, 0.0, Boundary::NoFlux).unwrap()
    }

    #[test]
    fn step_bracketing_and_translation() {
        let g = grid();
        let mut u = vec![0.0; 200];
        for x in u.iter_mut().take(51) {
            *x = 1.0;
        }
        let x = front_position(&u, &g, 0.5).unwrap();
        assert!(x >= g.x(50) && x <= g.x(51));
        u.rotate_right(1);
        u[0] = 1.0;
        let y = front_position(&u, &g, 0.5).unwrap();
        assert!((y - x - g.dx).abs() < 1e-12);
    }

    #[test]
    fn synthetic_tanh_center() {
        let g = grid();
        let u: Vec<f64> = g.nodes().iter().map(|x| 0.5 * (1.0 - ((x - 7.30) / 0.8).tanh())).collect();
        let x = front_position(&u, &g, 0.5).unwrap();
        assert!((x - 7.30).abs() < g.dx / 2.0);
    }

    #[test]
    fn crossing_errors() {
        let g = grid();
        assert!(matches!(front_position(&vec![0.0; 200], &g, 0.5), Err(Error::FrontAbsent { .. })));
        let u: Vec<f64> = (0..200).map(|i| if (50..60).contains(&i) { 1.0 } else { 0.0 }).collect();
        assert!(matches!(front_position(&u, &g, 0.5), Err(Error::NonMonotoneFront { crossings: 2, .. })));
        assert!((leading_edge(&u, &g, 0.5).unwrap() - 5.95).abs() < 1e-12);
    }

    fn trace(f: impl Fn(f64) -> f64) -> FrontTrace<f64> {
        let mut tr = FrontTrace::default();
        for i in 0..40 {
            let t = i as f64 * 0.5;
            tr.push(t, f(t)).unwrap();
        }
        tr
    }

    #[test]
    fn speed_fits() {
        let e = estimate_speed(&trace(|t| 3.0 + 0.42 * t)).unwrap();
        assert!((e.c - 0.42).abs() < 1e-12);
        assert!((e.r2 - 1.0).abs() < 1e-12);
        assert_eq!(e.classification, WaveClass::Advancing);
        assert_eq!(estimate_speed(&trace(|_| 7.0)).unwrap().classification, WaveClass::Stationary);
        let r = estimate_speed(&trace(|t| 9.0 - 0.1 * t)).unwrap();
        assert_eq!(r.classification, WaveClass::Retreating);
        assert!(r.c < 0.0);
        let mut short = FrontTrace::default();
        for i in 0..5 {
            short.push(i as f64, 0.0).unwrap();
        }
        assert!(matches!(estimate_speed(&short), Err(Error::InsufficientData { .. })));
        assert!(short.push(1.0, 0.0).is_err());
    }

    #[test]
    fn transient_is_discarded() {
        let e = estimate_speed(&trace(|t| 0.8 * t + 4.0 * (-t / 0.8).exp())).unwrap();
        assert!(e.transient_cut >= 0.3 * 19.5);
        assert!((e.c - 0.8).abs() < 1e-3, "{}", e.c);
    }

    #[test]
    fn extinction_rate_is_one_under_full_censoring() {
        let p: Params<f64> = Params::reference(6.0, 8.0, 1.0).with_shock(2.0);
        let g = Grid1D::no_flux(0.0, 10.0, 0.1).unwrap();
        let shocks = [ShockEvent { t: 0.0, x: 5.0, amplitude: None }];
        let r = extinction_experiment(&p, &g, &InitialProfile::Constant { value: 0.6 }, &shocks, 40.0, 0.5, (1.0, 10.0), 1e-6)
            .unwrap();
        assert!((r.tau_hat - 1.0).abs() < 1e-3, "{}", r.tau_hat);
        assert!(r.decayed);
    }

    #[test]
    fn balanced_alpha_zeroes_potential() {
        let p: Params<f64> = Params::reference(12.0, 8.0, 0.0);
        let a = balanced_alpha(&p, 0.0, 0.4, 1e-10).unwrap();
        let q = p.with_alpha(a);
        let u = excited_state(&q).unwrap().unwrap().u;
        assert!(reaction_potential(&q, u).unwrap().abs() < 1e-8);
        assert!(a > 0.2 && a < 0.35, "{a}");
        assert!(balanced_alpha(&p, 0.0, 0.1, 1e-6).is_err());
    }

    #[test]
    fn short_bistable_run() {
        let p = Params { diffusivity: 0.0, ..Params::reference(12.0, 8.0, 0.0) };
        let setup = WaveSetup { length: 30.0, dx: 0.1, t_end: 30.0, margin: 5.0, ..WaveSetup::default() };
        let r = run_wave_experiment(&p, &WaveInitial::Step, &setup).unwrap();
        assert!(r.reaction_potential > 0.0);
        assert_eq!(r.estimate.classification, WaveClass::Advancing);
        assert!(r.monotonicity_defect < 1e-6);
        assert!(run_wave_experiment(&Params::reference(0.5, 8.0, 0.0), &WaveInitial::Step, &setup).is_err());
    }
}
