//! The barrier problem: can a front cross a fully censored region?

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::excited_state;
use crate::error::{Error, Result};
use crate::model::Params;
use crate::pde::{GapEnv, Grid1D, InitialProfile, InitialTension, KernelSpec, Simulation, System};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct GapSetup<T> {
    pub start: T,
    pub end: T,
    /// Width of the excited source region `S₁`.
    pub source: T,
    pub dx: T,
    pub t_end: T,
    pub sample_dt: T,
}

impl<T: Real> Default for GapSetup<T> {
    fn default() -> Self {
        GapSetup {
            start: T::zero(),
            end: T::lit(15.0),
            source: T::lit(5.0),
            dx: T::lit(0.05),
            t_end: T::lit(40.0),
            sample_dt: T::lit(0.1),
        }
    }
}

impl<T: Real> GapSetup<T> {
    pub fn env(&self, width: T, alpha1: T, alpha2: T) -> Result<GapEnv<T>> {
        if !(width >= T::zero()) || !(self.start + self.source + width < self.end) {
            return Err(Error::Config(format!("gap width {width} does not fit the domain")));
        }
        GapEnv::new(self.start, self.end, self.source, width, alpha1, alpha2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapVerdict {
    Crossed,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct GapOutcome<T> {
    pub width: T,
    pub verdict: GapVerdict,
    pub arrival_time: Option<T>,
    /// Largest activity seen in `S₃`.
    pub max_u_s3: T,
    pub level: T,
}

/// Excites `S₁` at its excited state and watches `S₃` for activity above
/// half that level.
pub fn gap_experiment<T: Real>(p: &Params<T>, genv: &GapEnv<T>, dx: T, t_end: T, sample_dt: T) -> Result<GapOutcome<T>> {
    genv.validate()?;
    let g = Grid1D::no_flux(genv.s1.0, genv.s3.1, dx)?;
    genv.check_tiles(&g)?;
    let u_star = excited_state(&p.with_alpha(genv.alpha1))?
        .ok_or_else(|| Error::Domain("no excited state in the source region".into()))?
        .u;
    let level = u_star / T::lit(2.0);
    let env = genv.profile()?;
    let fields = InitialProfile::Step { position: genv.s1.1, value: u_star }.build(
        &g,
        p,
        InitialTension::Manifold { cap: u_star },
    )?;
    let system = System::new(*p, g, &env, &KernelSpec::None)?;
    let mut sim = Simulation::new(system, fields, vec![], None)?;
    let s3: Vec<usize> = (0..g.n).filter(|&i| g.x(i) >= genv.s3.0).collect();
    let mut max_s3 = T::zero();
    let n = (t_end / sample_dt).ceil().to_usize().unwrap_or(0);
    for k in 1..=n {
        let t = (sample_dt * T::from_count(k)).min(t_end);
        sim.advance_to(t)?;
        let u = &sim.fields().u;
        let m = s3.iter().fold(T::zero(), |a, &i| a.max(u[i]));
        max_s3 = max_s3.max(m);
        if m > level {
            return Ok(GapOutcome { width: genv.width(), verdict: GapVerdict::Crossed, arrival_time: Some(t), max_u_s3: max_s3, level });
        }
    }
    Ok(GapOutcome { width: genv.width(), verdict: GapVerdict::Blocked, arrival_time: None, max_u_s3: max_s3, level })
}

pub fn gap_probe<T: Real>(p: &Params<T>, width: T, alpha1: T, alpha2: T, setup: &GapSetup<T>) -> Result<GapOutcome<T>> {
    let env = setup.env(width, alpha1, alpha2)?;
    gap_experiment(p, &env, setup.dx, setup.t_end, setup.sample_dt)
}

/// Verdicts over `widths`, run concurrently.
pub fn gap_scan<T: Real>(p: &Params<T>, widths: &[T], alpha1: T, alpha2: T, setup: &GapSetup<T>) -> Result<Vec<GapOutcome<T>>> {
    widths.par_iter().map(|&w| gap_probe(p, w, alpha1, alpha2, setup)).collect()
}

/// Widths where a wider gap was crossed after a narrower one blocked.
pub fn monotonicity_violations<T: Real>(scan: &[GapOutcome<T>]) -> Vec<(T, T)> {
    let mut sorted: Vec<&GapOutcome<T>> = scan.iter().collect();
    sorted.sort_by(|a, b| a.width.partial_cmp(&b.width).expect("finite widths"));
    let mut out = Vec::new();
    let mut first_block: Option<T> = None;
    for o in sorted {
        match (o.verdict, first_block) {
            (GapVerdict::Blocked, None) => first_block = Some(o.width),
            (GapVerdict::Crossed, Some(b)) => out.push((b, o.width)),
            _ => {}
        }
    }
    out
}

/// `width,verdict,arrival_time` rows.
pub fn gap_scan_csv<T: Real>(scan: &[GapOutcome<T>]) -> String {
    let mut out = String::from("width,verdict,arrival_time\n");
    for o in scan {
        let v = match o.verdict {
            GapVerdict::Crossed => "crossed",
            GapVerdict::Blocked => "blocked",
        };
        let a = o.arrival_time.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{v},{a}\n", o.width));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct CriticalGap<T> {
    /// Midpoint of the final bracket.
    pub width: T,
    /// Widest gap seen crossed.
    pub crossed_at: T,
    /// Narrowest gap seen blocked.
    pub blocked_at: T,
    pub probes: Vec<GapOutcome<T>>,
}

/// Bisection on the gap width down to `dx`, after a coarse scan of
/// `coarse` widths that must be monotone (crossed, then blocked).
pub fn find_critical_gap<T: Real>(
    p: &Params<T>,
    alpha1: T,
    alpha2: T,
    width_range: (T, T),
    coarse: usize,
    setup: &GapSetup<T>,
) -> Result<CriticalGap<T>> {
    let (lo, hi) = width_range;
    if !(hi > lo) || !(lo >= T::zero()) {
        return Err(Error::Config(format!("bad width range [{lo}, {hi}]")));
    }
    let coarse = coarse.max(2);
    let widths: Vec<T> = (0..coarse)
        .map(|i| lo + (hi - lo) * T::from_count(i) / T::from_count(coarse - 1))
        .collect();
    let mut probes = gap_scan(p, &widths, alpha1, alpha2, setup)?;
    let first = probes[0];
    let last = probes[coarse - 1];
    if first.verdict != GapVerdict::Crossed || last.verdict != GapVerdict::Blocked {
        return Err(Error::NoTransition {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            verdict: format!("{:?} at {lo}, {:?} at {hi}", first.verdict, last.verdict),
        });
    }
    let bad = monotonicity_violations(&probes);
    if let Some((b, c)) = bad.first() {
        return Err(Error::Numerical(format!(
            "gap verdicts are not monotone in width: blocked at {b} but crossed at {c}"
        )));
    }
    let k = probes.iter().position(|o| o.verdict == GapVerdict::Blocked).expect("last is blocked");
    let (mut a, mut b) = (probes[k - 1].width, probes[k].width);
    while b - a > setup.dx {
        let m = (a + b) / T::lit(2.0);
        let o = gap_probe(p, m, alpha1, alpha2, setup)?;
        probes.push(o);
        match o.verdict {
            GapVerdict::Crossed => a = m,
            GapVerdict::Blocked => b = m,
        }
    }
    probes.sort_by(|x, y| x.width.partial_cmp(&y.width).expect("finite widths"));
    let bad = monotonicity_violations(&probes);
    if let Some((b, c)) = bad.first() {
        return Err(Error::Numerical(format!(
            "gap verdicts are not monotone in width: blocked at {b} but crossed at {c}"
        )));
    }
    Ok(CriticalGap { width: (a + b) / T::lit(2.0), crossed_at: a, blocked_at: b, probes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(width: f64, crossed: bool) -> GapOutcome<f64> {
        GapOutcome {
            width,
            verdict: if crossed { GapVerdict::Crossed } else { GapVerdict::Blocked },
            arrival_time: if crossed { Some(1.0) } else { None },
            max_u_s3: 0.0,
            level: 0.4,
        }
    }

    #[test]
    fn violations_are_reported() {
        let ok = [outcome(0.0, true), outcome(1.0, true), outcome(2.0, false)];
        assert!(monotonicity_violations(&ok).is_empty());
        let bad = [outcome(0.0, true), outcome(1.0, false), outcome(2.0, true)];
        assert_eq!(monotonicity_violations(&bad), vec![(1.0, 2.0)]);
        let csv = gap_scan_csv(&ok);
        assert_eq!(csv.lines().nth(3).unwrap(), "2,blocked,");
    }

    #[test]
    fn zero_gap_is_no_obstacle() {
        let p = Params { diffusivity: 0.0, ..Params::<f64>::reference(12.0, 8.0, 0.0) };
        let setup = GapSetup { dx: 0.1, ..GapSetup::default() };
        assert_eq!(gap_probe(&p, 0.0, 0.0, 0.0, &setup).unwrap().verdict, GapVerdict::Crossed);
        assert_eq!(gap_probe(&p, 6.0, 0.0, 0.0, &setup).unwrap().verdict, GapVerdict::Blocked);
        assert!(gap_probe(&p, 12.0, 0.0, 0.0, &setup).is_err());
    }
}
