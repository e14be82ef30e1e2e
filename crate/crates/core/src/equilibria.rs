//! Constant steady states of the local system (`k = 0`), their stability,
//! the wave potentials, and the (ρ, β) region maps.
//!
//! A constant state satisfies `v = v*(u) = 1/(h(u) − k₂)` and
//! `H(u) = Φ(u, v*(u)) = 0`, so everything reduces to the roots of the scalar
//! function `H` on `[0, min{1, ū})`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{growth_at, Params};
use crate::quadrature::adaptive_simpson;
use crate::scalar::Real;

/// Cells of the bracketing scan for roots of `H`.
pub const SCAN_CELLS: usize = 4096;
/// Offset kept from both ends of the scan interval.
pub const SCAN_EPS: f64 = 1e-9;
/// `|det|` below this marks a state as degenerate.
pub const DEGENERATE_DET: f64 = 1e-9;
/// `|H|` below this at an extremum without sign change marks a double root.
pub const DOUBLE_ROOT_TOL: f64 = 1e-9;
/// Absolute tolerance of the potential quadratures.
pub const POTENTIAL_TOL: f64 = 1e-10;

/// Pole of `v*`: `ū = ((1/k₂)^{1/p} − 1)/m̄`, where `h(ū) = k₂`.
pub fn u_bar<T: Real>(p: &Params<T>) -> T {
    (p.k2.recip().powf(p.p.recip()) - T::one()) / p.m_bar
}

/// Tension of the constant state with activity `u`, `1/(h(u) − k₂)`.
pub fn v_star<T: Real>(p: &Params<T>, u: T) -> Result<T> {
    if !(u >= T::zero()) {
        return Err(Error::Domain(format!("v*: activity must be non-negative, got {u}")));
    }
    let gap = p.h_unchecked(u) - p.k2;
    if gap <= T::zero() {
        return Err(Error::Domain(format!(
            "v*: u = {u} is at or beyond the pole u_bar = {}",
            u_bar(p)
        )));
    }
    Ok(gap.recip())
}

#[inline]
pub(crate) fn v_star_unchecked<T: Real>(p: &Params<T>, u: T) -> T {
    (p.h_unchecked(u) - p.k2).recip()
}

/// Tension of the non-excited state, `1/(1 − k₂)`.
pub fn v_rest<T: Real>(p: &Params<T>) -> T {
    (T::one() - p.k2).recip()
}

/// Reduced rate `H(u) = Φ(u, v*(u))`.
pub fn reduced_rate<T: Real>(p: &Params<T>, u: T) -> Result<T> {
    let v = v_star(p, u)?;
    Ok(p.phi_at(u, v, p.alpha))
}

/// `H'(u) = Φ_u + Φ_v v*'(u)` with `v*' = −h' v*²`; one-sided at the kink.
pub fn reduced_rate_slope<T: Real>(p: &Params<T>, u: T) -> Result<T> {
    let v = v_star(p, u)?;
    Ok(slope_unchecked(p, u, v))
}

#[inline]
fn slope_unchecked<T: Real>(p: &Params<T>, u: T, v: T) -> T {
    let j = p.jacobian_at(u, v, p.alpha);
    let dv = -p.h_prime_unchecked(u) * v * v;
    j.entries[0][0] + j.entries[0][1] * dv
}

/// Closed form of `H'(0)`: `r(v*(0)) G_α'(0) − 1`.
pub fn reduced_slope_at_origin<T: Real>(p: &Params<T>) -> T {
    let dg = if p.alpha == T::zero() { T::one() } else { T::zero() };
    p.r(v_rest(p)) * dg - T::one()
}

/// Growth kernel of the wave potential, `g_α(u) = r(v*(u)) G_α(u)`.
pub fn wave_growth<T: Real>(p: &Params<T>, u: T) -> Result<T> {
    let v = v_star(p, u)?;
    Ok(p.r(v) * growth_at(u, p.alpha))
}

fn integrate_to<T: Real>(p: &Params<T>, u_hi: T, f: impl Fn(T) -> T) -> Result<T> {
    if !(u_hi >= T::zero()) {
        return Err(Error::Domain(format!("potential: upper limit must be non-negative, got {u_hi}")));
    }
    if u_hi >= u_bar(p) {
        return Err(Error::Domain(format!(
            "potential: pole u_bar = {} lies inside [0, {u_hi}]",
            u_bar(p)
        )));
    }
    let tol = T::lit(POTENTIAL_TOL);
    // split at the kink of G_α
    if p.alpha > T::zero() && p.alpha < u_hi {
        Ok(adaptive_simpson(&f, T::zero(), p.alpha, tol / T::lit(2.0))
            + adaptive_simpson(&f, p.alpha, u_hi, tol / T::lit(2.0)))
    } else {
        Ok(adaptive_simpson(&f, T::zero(), u_hi, tol))
    }
}

/// `F(u) = ∫₀ᵘ g_α(s) ds`, the growth-only potential (no decay term).
pub fn growth_potential<T: Real>(p: &Params<T>, u_hi: T) -> Result<T> {
    integrate_to(p, u_hi, |s| p.r(v_star_unchecked(p, s)) * growth_at(s, p.alpha))
}

/// `∫₀ᵘ H(s) ds`, the potential of the full reduced reaction `Φ(s, v*(s))`.
/// Its sign at the excited state decides the direction of bistable fronts.
pub fn reaction_potential<T: Real>(p: &Params<T>, u_hi: T) -> Result<T> {
    integrate_to(p, u_hi, |s| p.phi_at(s, v_star_unchecked(p, s), p.alpha))
}

/// Critical tension halfway between `v*(0)` and `v*(1)`.
pub fn default_a<T: Real>(p: &Params<T>) -> Result<T> {
    let ub = u_bar(p);
    if ub <= T::one() {
        return Err(Error::Domain(format!("default critical tension needs u_bar > 1, got {ub}")));
    }
    Ok((v_star(p, T::zero())? + v_star(p, T::one())?) / T::lit(2.0))
}

/// Curve `β₁(ρ) = ln(ρ − 1)/(ā − v*(0))` on which `H'(0) = 0` when `α = 0`.
pub fn beta1_curve<T: Real>(rho: T, p: &Params<T>) -> Result<T> {
    if rho <= T::one() {
        return Err(Error::Domain(format!("beta1 exists only for rho > 1, got {rho}")));
    }
    let gap = p.a_bar - v_rest(p);
    if gap <= T::zero() {
        return Err(Error::Domain("beta1 requires a_bar > v*(0)".into()));
    }
    Ok((rho - T::one()).ln() / gap)
}

/// Largest `u` with `ρ G_α(u) = u`. Since `r < ρ`, activity above this level
/// decays for every tension.
pub fn activity_ceiling<T: Real>(p: &Params<T>) -> T {
    // ρu² − (ρ(1+α) − 1)u + ρα = 0
    let b = p.rho * (T::one() + p.alpha) - T::one();
    let disc = b * b - T::lit(4.0) * p.rho * p.rho * p.alpha;
    if disc < T::zero() || b <= T::zero() {
        return T::zero();
    }
    let root = (b + disc.sqrt()) / (T::lit(2.0) * p.rho);
    if root > p.alpha {
        root
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Degenerate,
}

/// A constant equilibrium of the local system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct SteadyState<T> {
    pub u: T,
    pub v: T,
    pub trace: T,
    pub det: T,
    pub stability: Stability,
}

impl<T: Real> SteadyState<T> {
    fn at(p: &Params<T>, u: T) -> Result<Self> {
        let v = v_star(p, u)?;
        let j = p.jacobian_at(u, v, p.alpha);
        let (trace, det) = (j.trace(), j.det());
        let stability = if det.abs() < T::lit(DEGENERATE_DET) {
            Stability::Degenerate
        } else if trace < T::zero() && det > T::zero() {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        Ok(SteadyState { u, v, trace, det, stability })
    }

    pub fn residuals(&self, p: &Params<T>) -> (T, T) {
        (p.phi_at(self.u, self.v, p.alpha), p.psi_unchecked(self.u, self.v))
    }
}

fn bisect<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let mut fa = f(a);
    let two = T::lit(2.0);
    for _ in 0..300 {
        let m = (a + b) / two;
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == T::zero() {
            return m;
        }
        if (fm > T::zero()) == (fa > T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

/// Roots of `H` on `[0, min{1, ū})`, ascending, always starting with 0.
pub fn reduced_roots<T: Real>(p: &Params<T>) -> Result<Vec<T>> {
    let eps = T::lit(SCAN_EPS);
    let upper = T::one().min(u_bar(p)) - eps;
    let mut roots = vec![T::zero()];
    if upper <= eps {
        return Ok(roots);
    }
    let h = |u: T| p.phi_at(u, v_star_unchecked(p, u), p.alpha);
    let dh = |u: T| slope_unchecked(p, u, v_star_unchecked(p, u));
    let step = (upper - eps) / T::from_count(SCAN_CELLS);
    let nodes: Vec<T> = (0..=SCAN_CELLS)
        .map(|j| if j == SCAN_CELLS { upper } else { eps + step * T::from_count(j) })
        .collect();
    let hv: Vec<T> = nodes.iter().map(|&u| h(u)).collect();
    let dv: Vec<T> = nodes.iter().map(|&u| dh(u)).collect();
    let kink_guard = T::lit(1e-8);
    let positive = |x: T| x > T::zero();

    for j in 0..SCAN_CELLS {
        let (a, b) = (nodes[j], nodes[j + 1]);
        let (ha, hb) = (hv[j], hv[j + 1]);
        if ha == T::zero() {
            roots.push(a);
            continue;
        }
        if hb == T::zero() {
            continue;
        }
        if positive(ha) != positive(hb) {
            roots.push(bisect(h, a, b));
            continue;
        }
        let (da, db) = (dv[j], dv[j + 1]);
        if da == T::zero() && db == T::zero() {
            continue;
        }
        if (da <= T::zero() && db >= T::zero()) || (da >= T::zero() && db <= T::zero()) {
            // extremum inside the cell: two close roots or a tangency
            let e = bisect(dh, a, b);
            let he = h(e);
            if he != T::zero() && positive(he) != positive(ha) {
                roots.push(bisect(h, a, e));
                roots.push(bisect(h, e, b));
            } else if he.abs() < T::lit(DOUBLE_ROOT_TOL)
                && (p.alpha == T::zero() || e > p.alpha + kink_guard)
            {
                roots.push(e);
            }
        }
    }
    if hv[SCAN_CELLS] == T::zero() {
        roots.push(upper);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= T::tiny_tol());

    let tol = T::max(T::lit(1e-10), T::epsilon() * T::lit(100.0));
    for (i, &u) in roots.iter().enumerate().skip(1) {
        let res = h(u).abs();
        if !(res <= tol) {
            let lo = if i > 0 { roots[i - 1] } else { T::zero() };
            return Err(Error::RootNotConverged {
                lo: lo.as_f64(),
                hi: u.as_f64(),
                residual: res.as_f64(),
            });
        }
    }
    Ok(roots)
}

/// All constant steady states of the local system, sorted by activity.
pub fn find_steady_states<T: Real>(p: &Params<T>) -> Result<Vec<SteadyState<T>>> {
    p.validate()?;
    if p.k != T::zero() {
        return Err(Error::Domain(
            "constant steady states are classified for the local system (k = 0) only".into(),
        ));
    }
    reduced_roots(p)?
        .into_iter()
        .map(|u| SteadyState::at(p, u))
        .collect()
}

/// The excited state: the largest root of `H`, when it is not the origin.
pub fn excited_state<T: Real>(p: &Params<T>) -> Result<Option<SteadyState<T>>> {
    let states = find_steady_states(p)?;
    Ok(states.last().copied().filter(|s| s.u > T::zero()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Diagram {
    /// No restriction of information.
    AlphaZero,
    /// `0 < α < 1`.
    AlphaMid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    I,
    IIa,
    IIb,
    IIIa,
    IIIb,
    OnBeta1,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::I => "I",
            Region::IIa => "IIa",
            Region::IIb => "IIb",
            Region::IIIa => "IIIa",
            Region::IIIb => "IIIb",
            Region::OnBeta1 => "OnBeta1",
        }
    }

    /// Integer code used in matrix exports; 0 is reserved for failed cells.
    pub fn code(self) -> u8 {
        match self {
            Region::I => 1,
            Region::IIa => 2,
            Region::IIb => 3,
            Region::IIIa => 4,
            Region::IIIb => 5,
            Region::OnBeta1 => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub diagram: Diagram,
    pub region: Region,
    pub n_states: usize,
}

/// Region of the (ρ, β) plane the parameters fall in.
///
/// * one state: `I`;
/// * `α = 0`, two states: `IIa` when the origin is a saddle (trace < 0),
///   `IIb` when it is a source (trace > 0);
/// * `α = 0`, three states: `IIIa`/`IIIb` by the sign of the reaction
///   potential at the excited state;
/// * `α > 0`: three states split into `IIa`/`IIb` the same way, two states
///   only on the degenerate curve (`OnBeta1`).
pub fn classify_region<T: Real>(p: &Params<T>) -> Result<RegionLabel> {
    let states = find_steady_states(p)?;
    let n = states.len();
    let diagram = if p.alpha == T::zero() { Diagram::AlphaZero } else { Diagram::AlphaMid };
    let potential_sign = || -> Result<bool> {
        let top = states[n - 1].u;
        Ok(reaction_potential(p, top)? > T::zero())
    };
    let region = match (diagram, n) {
        (_, 1) => Region::I,
        (Diagram::AlphaZero, 2) => {
            if states[0].trace > T::zero() {
                Region::IIb
            } else {
                Region::IIa
            }
        }
        (Diagram::AlphaZero, 3) => {
            if potential_sign()? {
                Region::IIIb
            } else {
                Region::IIIa
            }
        }
        (Diagram::AlphaMid, 2) => Region::OnBeta1,
        (Diagram::AlphaMid, 3) => {
            if potential_sign()? {
                Region::IIb
            } else {
                Region::IIa
            }
        }
        (_, n) => {
            return Err(Error::Numerical(format!("unexpected number of constant states: {n}")));
        }
    };
    Ok(RegionLabel { diagram, region, n_states: n })
}

/// Region labels on a rectangular (ρ, β) grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct BifurcationMap<T> {
    pub rho_axis: Vec<T>,
    pub beta_axis: Vec<T>,
    /// `labels[i][j]` is the label at `(rho_axis[i], beta_axis[j])`; `None`
    /// where classification failed.
    pub labels: Vec<Vec<Option<RegionLabel>>>,
    /// `(i, j, message)` for every failed cell.
    pub failures: Vec<(usize, usize, String)>,
}

/// Boundary polylines between labeled cells, keyed `"A|B"`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationSummary {
    pub counts: BTreeMap<String, usize>,
    pub failures: usize,
    pub boundaries: BTreeMap<String, Vec<[f64; 2]>>,
}

fn strictly_increasing<T: Real>(axis: &[T]) -> bool {
    !axis.is_empty() && axis.windows(2).all(|w| w[0] < w[1])
}

/// Classifies every grid point; cells are independent and evaluated in
/// parallel, results are merged by index.
pub fn sweep_bifurcation<T: Real>(
    rho_grid: &[T],
    beta_grid: &[T],
    base: &Params<T>,
) -> Result<BifurcationMap<T>> {
    if !strictly_increasing(rho_grid) || !strictly_increasing(beta_grid) {
        return Err(Error::Config("sweep axes must be non-empty and strictly increasing".into()));
    }
    let nb = beta_grid.len();
    let cells: Vec<std::result::Result<RegionLabel, String>> = (0..rho_grid.len() * nb)
        .into_par_iter()
        .map(|idx| {
            let mut p = *base;
            p.rho = rho_grid[idx / nb];
            p.beta = beta_grid[idx % nb];
            classify_region(&p).map_err(|e| e.to_string())
        })
        .collect();
    let mut labels = vec![vec![None; nb]; rho_grid.len()];
    let mut failures = Vec::new();
    for (idx, cell) in cells.into_iter().enumerate() {
        let (i, j) = (idx / nb, idx % nb);
        match cell {
            Ok(l) => labels[i][j] = Some(l),
            Err(msg) => failures.push((i, j, msg)),
        }
    }
    Ok(BifurcationMap {
        rho_axis: rho_grid.to_vec(),
        beta_axis: beta_grid.to_vec(),
        labels,
        failures,
    })
}

impl<T: Real> BifurcationMap<T> {
    pub fn label(&self, i: usize, j: usize) -> Option<RegionLabel> {
        self.labels[i][j]
    }

    /// Number of cells carrying `region`.
    pub fn count(&self, region: Region) -> usize {
        self.labels
            .iter()
            .flatten()
            .filter(|l| l.map(|l| l.region) == Some(region))
            .count()
    }

    /// CSV with columns `rho,beta,region,n_states`, ρ-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,beta,region,n_states\n");
        for (i, rho) in self.rho_axis.iter().enumerate() {
            for (j, beta) in self.beta_axis.iter().enumerate() {
                match self.labels[i][j] {
                    Some(l) => out.push_str(&format!("{rho},{beta},{},{}\n", l.region.name(), l.n_states)),
                    None => out.push_str(&format!("{rho},{beta},error,0\n")),
                }
            }
        }
        out
    }

    pub fn summary(&self) -> BifurcationSummary {
        let mut counts = BTreeMap::new();
        for l in self.labels.iter().flatten().flatten() {
            *counts.entry(l.region.name().to_string()).or_insert(0) += 1;
        }
        let mut boundaries: BTreeMap<String, Vec<[f64; 2]>> = BTreeMap::new();
        let mut mark = |a: Option<RegionLabel>, b: Option<RegionLabel>, pt: [f64; 2]| {
            if let (Some(a), Some(b)) = (a, b) {
                if a.region != b.region {
                    let (lo, hi) = if a.region < b.region { (a, b) } else { (b, a) };
                    let key = format!("{}|{}", lo.region.name(), hi.region.name());
                    boundaries.entry(key).or_default().push(pt);
                }
            }
        };
        let (nr, nb) = (self.rho_axis.len(), self.beta_axis.len());
        for j in 0..nb {
            for i in 0..nr.saturating_sub(1) {
                let rho = (self.rho_axis[i] + self.rho_axis[i + 1]).as_f64() / 2.0;
                mark(self.labels[i][j], self.labels[i + 1][j], [rho, self.beta_axis[j].as_f64()]);
            }
        }
        for i in 0..nr {
            for j in 0..nb.saturating_sub(1) {
                let beta = (self.beta_axis[j] + self.beta_axis[j + 1]).as_f64() / 2.0;
                mark(self.labels[i][j], self.labels[i][j + 1], [self.rho_axis[i].as_f64(), beta]);
            }
        }
        for line in boundaries.values_mut() {
            line.sort_by(|a, b| a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0])));
        }
        BifurcationSummary { counts, failures: self.failures.len(), boundaries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn base(k2: f64, m_bar: f64, p: f64) -> Params<f64> {
        Params {
            rho: 2.0,
            beta: 3.0,
            a_bar: 2.0,
            k: 0.0,
            k2,
            diffusivity: 1.0,
            m_bar,
            p,
            alpha: 0.0,
            shock_amplitude: 0.0,
        }
    }

    #[test]
    fn v_star_values() {
        let p = base(0.5, 1.0, 1.0);
        assert_eq!(v_star(&p, 0.0).unwrap(), 2.0);
        assert!(v_star(&p, 0.1).unwrap() < v_star(&p, 0.2).unwrap());
        let p = base(0.25, 1.0, 1.0);
        assert_relative_eq!(v_star(&p, 1.0).unwrap(), 4.0, max_relative = 1e-15);
        let p = base(0.5, 1.0, 1.0);
        assert!(matches!(v_star(&p, 1.0), Err(Error::Domain(_))));
        assert!(v_star(&p, 1.5).is_err());
    }

    #[test]
    fn pole_location() {
        assert_relative_eq!(u_bar(&base(0.5, 1.0, 1.0)), 1.0, max_relative = 1e-15);
        assert_relative_eq!(u_bar(&base(0.25, 2.0, 2.0)), 0.5, max_relative = 1e-15);
        assert!(u_bar(&base(1.0 - 1e-9, 1.0, 1.0)) < 1e-8);
        for (k2, m, p) in [(0.3, 0.7, 1.7), (0.05, 2.5, 0.4), (0.9, 1.0, 3.0)] {
            let q = base(k2, m, p);
            assert!((q.h(u_bar(&q)).unwrap() - k2).abs() < 1e-12);
        }
    }

    #[test]
    fn critical_tension_default() {
        let p = base(0.25, 1.0, 1.0);
        let a = default_a(&p).unwrap();
        assert_relative_eq!(a, 8.0 / 3.0, max_relative = 1e-15);
        assert!(v_star(&p, 0.0).unwrap() < a && a < v_star(&p, 1.0).unwrap());
        assert!(default_a(&base(0.5, 1.0, 1.0)).is_err());
    }

    #[test]
    fn reduced_rate_properties() {
        let mut p = Params::reference(1.0, 7.0, 0.0);
        assert_eq!(reduced_rate(&p, 0.0).unwrap(), 0.0);
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            assert!(reduced_rate(&p, u).unwrap() < 0.0);
        }
        p.rho = 5.0;
        p.beta = 0.7;
        let h = 1e-6;
        let fd = (reduced_rate(&p, h).unwrap() - reduced_rate(&p, 0.0).unwrap()) / h;
        let closed = p.rho / (1.0 + (-p.beta * (v_rest(&p) - p.a_bar)).exp()) - 1.0;
        assert!((fd - closed).abs() < 1e-5, "{fd} vs {closed}");
        assert_relative_eq!(reduced_slope_at_origin(&p), closed, max_relative = 1e-14);
        assert_relative_eq!(reduced_rate_slope(&p, 0.0).unwrap(), closed, max_relative = 1e-12);
    }

    #[test]
    fn low_reinforcement_single_state() {
        for alpha in [0.0, 0.3, 0.9] {
            let p = Params::reference(0.5, 10.0, alpha);
            let s = find_steady_states(&p).unwrap();
            assert_eq!(s.len(), 1);
            assert_eq!(s[0].u, 0.0);
            assert_eq!(s[0].v, 1.0 / 0.75);
            assert_eq!(s[0].stability, Stability::Stable);
        }
    }

    #[test]
    fn full_censoring_single_state() {
        let p = Params::reference(50.0, 10.0, 1.0);
        assert_eq!(find_steady_states(&p).unwrap().len(), 1);
    }

    #[test]
    fn bistable_three_states() {
        let mut p = base(0.5, 1.0, 1.0);
        // u_bar = 1 here, so the default critical tension is undefined; take
        // the midpoint between v*(0) and v*(1/2) instead.
        p.rho = 6.0;
        p.beta = 8.0;
        p.a_bar = (2.0 + 1.0 / (1.0 / 1.5 - 0.5)) / 2.0;
        let s = find_steady_states(&p).unwrap();
        let pattern: Vec<_> = s.iter().map(|s| s.stability).collect();
        assert_eq!(pattern, vec![Stability::Stable, Stability::Unstable, Stability::Stable]);
        let q = Params::reference(6.0, 8.0, 0.0);
        let pattern: Vec<_> = find_steady_states(&q).unwrap().iter().map(|s| s.stability).collect();
        assert_eq!(pattern, vec![Stability::Stable, Stability::Unstable, Stability::Stable]);
    }

    #[test]
    fn nonlocal_system_rejected() {
        let mut p = Params::reference(3.0, 2.0, 0.0);
        p.k = 0.1;
        assert!(find_steady_states(&p).is_err());
    }

    #[test]
    fn potential_basics() {
        let p = Params::reference(6.0, 8.0, 0.0);
        assert_eq!(growth_potential(&p, 0.0).unwrap(), 0.0);
        let q = Params::reference(6.0, 8.0, 1.0);
        for u in [0.2, 0.7, 1.0] {
            assert_eq!(growth_potential(&q, u).unwrap(), 0.0);
        }
        let r = Params::reference(6.0, 8.0, 0.3);
        let mut last = growth_potential(&r, 0.3).unwrap();
        for i in 1..=20 {
            let u = 0.3 + 0.7 * i as f64 / 20.0;
            let f = growth_potential(&r, u).unwrap();
            assert!(f >= last - 1e-12);
            last = f;
        }
        assert!(growth_potential(&base(0.5, 1.0, 1.0), 1.2).is_err());
    }

    fn simpson_oracle(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + h * i as f64);
        }
        s * h / 3.0
    }

    #[test]
    fn potential_matches_composite_simpson() {
        for (rho, beta, alpha, u) in [(6.0, 8.0, 0.0, 0.8), (9.0, 3.0, 0.25, 0.9), (3.0, 20.0, 0.1, 0.5)] {
            let p = Params::reference(rho, beta, alpha);
            let g = |s: f64| wave_growth(&p, s).unwrap();
            let h = |s: f64| reduced_rate(&p, s).unwrap();
            // composite Simpson on each side of the kink
            let split = |f: &dyn Fn(f64) -> f64| {
                if alpha > 0.0 {
                    simpson_oracle(f, 0.0, alpha, 20_000) + simpson_oracle(f, alpha, u, 200_000)
                } else {
                    simpson_oracle(f, 0.0, u, 200_000)
                }
            };
            assert!((growth_potential(&p, u).unwrap() - split(&g)).abs() < 1e-8);
            assert!((reaction_potential(&p, u).unwrap() - split(&h)).abs() < 1e-8);
        }
    }

    #[test]
    fn beta1_values() {
        let p: Params<f64> = Params::reference(2.0, 1.0, 0.0);
        assert_eq!(beta1_curve(2.0, &p).unwrap(), 0.0);
        assert!(beta1_curve(1.0, &p).is_err());
        let mut last = -1.0;
        for rho in [2.5, 3.0, 5.0, 9.0] {
            let b = beta1_curve(rho, &p).unwrap();
            assert!(b > last);
            last = b;
            let mut q = p;
            q.rho = rho;
            q.beta = b;
            assert!(reduced_slope_at_origin(&q).abs() < 1e-10);
        }
    }

    #[test]
    fn ceiling_bounds_states() {
        for (rho, beta, alpha) in [(6.0, 8.0, 0.0), (12.0, 20.0, 0.3), (3.0, 0.5, 0.0)] {
            let p = Params::reference(rho, beta, alpha);
            let top = find_steady_states(&p).unwrap().last().unwrap().u;
            assert!(activity_ceiling(&p) >= top);
        }
        assert_relative_eq!(activity_ceiling(&Params::reference(4.0, 1.0, 0.0)), 0.75, max_relative = 1e-14);
        assert_eq!(activity_ceiling(&Params::reference(0.5, 1.0, 0.0)), 0.0);
    }

    #[test]
    fn region_labels() {
        assert_eq!(classify_region(&Params::reference(0.5, 3.0, 0.0)).unwrap().region, Region::I);
        assert_eq!(classify_region(&Params::reference(0.5, 3.0, 0.3)).unwrap().region, Region::I);
        let l = classify_region(&Params::reference(6.0, 8.0, 0.0)).unwrap();
        assert_eq!((l.region, l.n_states), (Region::IIIa, 3));
        assert!(reaction_potential(&Params::reference(6.0, 8.0, 0.0), 0.83).unwrap() < 0.0);
        assert_eq!(classify_region(&Params::reference(12.0, 8.0, 0.0)).unwrap().region, Region::IIIb);
        assert_eq!(classify_region(&Params::reference(3.0, 0.5, 0.0)).unwrap().region, Region::IIa);
        assert_eq!(classify_region(&Params::reference(10.0, 0.5, 0.0)).unwrap().region, Region::IIb);
        let l = classify_region(&Params::reference(12.0, 20.0, 0.3)).unwrap();
        assert_eq!((l.diagram, l.region), (Diagram::AlphaMid, Region::IIa));
    }

    #[test]
    fn sweep_shapes_and_exports() {
        let base = Params::reference(1.0, 1.0, 0.0);
        let m = sweep_bifurcation(&[0.5, 6.0, 12.0], &[0.5, 8.0, 20.0], &base).unwrap();
        assert_eq!(m.labels.len(), 3);
        assert!(m.labels.iter().all(|row| row.len() == 3));
        assert_eq!(m.to_csv().lines().count(), 10);
        assert!(m.labels[0].iter().all(|l| l.unwrap().region == Region::I));
        let s = m.summary();
        assert_eq!(s.counts.values().sum::<usize>(), 9);
        assert!(s.boundaries.keys().any(|k| k.starts_with("I|")));
        assert!(sweep_bifurcation(&[1.0, 0.5], &[1.0], &base).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn origin_always_present_and_residuals_small(
            rho in 0.1f64..15.0, beta in 0.1f64..40.0, alpha in 0.0f64..0.6,
            k2 in 0.05f64..0.45, m_bar in 0.5f64..2.0,
        ) {
            let mut p = Params::reference(rho, beta, alpha);
            p.k2 = k2;
            p.m_bar = m_bar;
            let states = find_steady_states(&p).unwrap();
            prop_assert_eq!(states[0].u, 0.0);
            prop_assert_eq!(states[0].v, 1.0 / (1.0 - k2));
            for s in &states {
                let (a, b) = s.residuals(&p);
                prop_assert!(a.abs() < 1e-10 && b.abs() < 1e-10);
                prop_assert!((s.v - v_star(&p, s.u).unwrap()).abs() < 1e-10);
                prop_assert!(s.u < 1.0f64.min(u_bar(&p)));
                let consistent = match s.stability {
                    Stability::Degenerate => s.det.abs() < DEGENERATE_DET,
                    Stability::Stable => s.trace < 0.0 && s.det > 0.0,
                    Stability::Unstable => s.det < 0.0 || s.trace > 0.0,
                };
                prop_assert!(consistent);
            }
            if alpha > 0.0 {
                prop_assert!(reduced_slope_at_origin(&p) < 0.0);
            }
        }
    }
}
