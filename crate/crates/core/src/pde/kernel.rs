use serde::{Deserialize, Serialize};

use super::grid::{Boundary, Grid1D};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gaussian kernels are truncated beyond this many standard deviations.
pub const GAUSSIAN_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "profile", bound = "T: Real")]
pub enum KernelProfile<T> {
    /// Unit-mass normal density.
    Gaussian { sigma: T },
    /// `1/(2R)` on `|d| ≤ R`.
    TopHat { radius: T },
}

impl<T: Real> KernelProfile<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            KernelProfile::Gaussian { sigma } => sigma > T::zero() && sigma.is_finite(),
            KernelProfile::TopHat { radius } => radius > T::zero() && radius.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidKernel(format!("profile width must be positive: {self:?}")))
        }
    }

    pub fn eval(&self, d: T) -> T {
        match *self {
            KernelProfile::Gaussian { sigma } => {
                let z = d / sigma;
                (-(z * z) / T::lit(2.0)).exp() / (sigma * (T::TAU()).sqrt())
            }
            KernelProfile::TopHat { radius } => {
                let edge = (d.abs() - radius).abs() <= radius * T::lit(1e-9);
                if edge {
                    // value at the jump, so the trapezoid sum keeps unit mass
                    (T::lit(4.0) * radius).recip()
                } else if d.abs() < radius {
                    (T::lit(2.0) * radius).recip()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn support(&self) -> T {
        match *self {
            KernelProfile::Gaussian { sigma } => sigma * T::lit(GAUSSIAN_CUTOFF),
            KernelProfile::TopHat { radius } => radius * (T::one() + T::lit(1e-9)),
        }
    }
}

/// Non-local coupling `J`; its strength is the model's `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", bound = "T: Real")]
pub enum KernelSpec<T> {
    #[default]
    None,
    TranslationInvariant(KernelProfile<T>),
    /// `J(x_i, y_j)` sampled at the grid nodes.
    General(Vec<Vec<T>>),
}

#[derive(Debug, Clone)]
enum Path<T> {
    Zero,
    /// Coefficients `c_m` for offsets `0..=m_max` (NoFlux) or `0..n` with all
    /// periodic images folded in (Periodic).
    Stencil { coeffs: Vec<T> },
    Dense { rows: Vec<Vec<T>> },
}

/// A kernel bound to a grid, ready to apply.
#[derive(Debug, Clone)]
pub struct Kernel<T> {
    grid: Grid1D<T>,
    path: Path<T>,
    row_sum: T,
}

fn fold_periodic<T: Real>(profile: &KernelProfile<T>, g: &Grid1D<T>) -> Vec<T> {
    let n = g.n;
    let len = g.dx * T::from_count(n);
    let reach = profile.support();
    (0..n)
        .map(|m| {
            let base = g.dx * T::from_count(m);
            let mut acc = profile.eval(base);
            let mut q = T::one();
            loop {
                let left = base - q * len;
                let right = base + q * len;
                if left.abs() > reach && right.abs() > reach {
                    break;
                }
                acc += profile.eval(left) + profile.eval(right);
                q += T::one();
            }
            acc
        })
        .collect()
}

fn stencil_coeffs<T: Real>(profile: &KernelProfile<T>, g: &Grid1D<T>) -> Vec<T> {
    match g.boundary {
        Boundary::Periodic => fold_periodic(profile, g),
        Boundary::NoFlux => {
            let m_max = (profile.support() / g.dx).floor().to_usize().unwrap_or(0).min(g.n - 1);
            (0..=m_max).map(|m| profile.eval(g.dx * T::from_count(m))).collect()
        }
    }
}

impl<T: Real> Kernel<T> {
    pub fn new(spec: &KernelSpec<T>, grid: &Grid1D<T>) -> Result<Self> {
        let path = match spec {
            KernelSpec::None => Path::Zero,
            KernelSpec::TranslationInvariant(p) => {
                p.validate()?;
                Path::Stencil { coeffs: stencil_coeffs(p, grid) }
            }
            KernelSpec::General(rows) => {
                if rows.len() != grid.n {
                    return Err(Error::Shape { expected: grid.n, got: rows.len() });
                }
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != grid.n {
                        return Err(Error::Shape { expected: grid.n, got: row.len() });
                    }
                    if let Some(j) = row.iter().position(|&x| !(x >= T::zero()) || !x.is_finite()) {
                        return Err(Error::InvalidKernel(format!(
                            "entry J[{i}][{j}] = {} must be finite and non-negative",
                            row[j]
                        )));
                    }
                }
                Path::Dense { rows: rows.clone() }
            }
        };
        let mut k = Kernel { grid: *grid, path, row_sum: T::zero() };
        let ones = vec![T::one(); grid.n];
        let mut out = vec![T::zero(); grid.n];
        k.apply_into(&ones, &mut out);
        k.row_sum = out.iter().fold(T::zero(), |a, &b| a.max(b));
        Ok(k)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.path, Path::Zero)
    }

    /// `sup_i Σ_j J(x_i, y_j) w_j`.
    pub fn row_sum_bound(&self) -> T {
        self.row_sum
    }

    /// `out_i = Σ_j J(x_i, y_j) w_j v_j` with trapezoid weights `w`.
    pub fn apply_into(&self, v: &[T], out: &mut [T]) {
        let g = &self.grid;
        let n = g.n;
        match &self.path {
            Path::Zero => out.iter_mut().for_each(|o| *o = T::zero()),
            Path::Stencil { coeffs } => match g.boundary {
                Boundary::Periodic => {
                    for (i, o) in out.iter_mut().enumerate() {
                        let mut acc = T::zero();
                        for j in 0..n {
                            let m = if j >= i { j - i } else { i - j };
                            let m = m.min(n - m);
                            acc += coeffs[m] * v[j];
                        }
                        *o = acc * g.dx;
                    }
                }
                Boundary::NoFlux => {
                    let m_max = coeffs.len() - 1;
                    for (i, o) in out.iter_mut().enumerate() {
                        let lo = i.saturating_sub(m_max);
                        let hi = (i + m_max).min(n - 1);
                        let mut acc = T::zero();
                        for j in lo..=hi {
                            let m = if j >= i { j - i } else { i - j };
                            acc += coeffs[m] * g.weight(j) * v[j];
                        }
                        *o = acc;
                    }
                }
            },
            Path::Dense { rows } => {
                for (o, row) in out.iter_mut().zip(rows) {
                    let mut acc = T::zero();
                    for (j, (&jij, &vj)) in row.iter().zip(v).enumerate() {
                        acc += jij * g.weight(j) * vj;
                    }
                    *o = acc;
                }
            }
        }
    }

    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.grid.n {
            return Err(Error::Shape { expected: self.grid.n, got: v.len() });
        }
        let mut out = vec![T::zero(); v.len()];
        self.apply_into(v, &mut out);
        Ok(out)
    }
}

/// Dense `J(x_i, y_j)` built from a translation-invariant profile by the same
/// offset rule as the stencil path.
pub fn dense_from_profile<T: Real>(profile: &KernelProfile<T>, g: &Grid1D<T>) -> Result<Vec<Vec<T>>> {
    profile.validate()?;
    let coeffs = stencil_coeffs(profile, g);
    let n = g.n;
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let m = if j >= i { j - i } else { i - j };
                    match g.boundary {
                        Boundary::Periodic => coeffs[m.min(n - m)],
                        Boundary::NoFlux => coeffs.get(m).copied().unwrap_or_else(T::zero),
                    }
                })
                .collect()
        })
        .collect())
}

/// `∫ J(x, y) v(y) dy` on the grid; the strength `k` is applied by the caller.
pub fn nonlocal_term<T: Real>(v: &[T], spec: &KernelSpec<T>, g: &Grid1D<T>) -> Result<Vec<T>> {
    Kernel::new(spec, g)?.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn none_is_zero() {
        let g = Grid1D::new(16, 0.1, 0.0, Boundary::NoFlux).unwrap();
        let out = nonlocal_term(&vec![2.0; 16], &KernelSpec::None, &g).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
        assert_eq!(Kernel::new(&KernelSpec::<f64>::None, &g).unwrap().row_sum_bound(), 0.0);
    }

    #[test]
    fn unit_mass_preserves_constants() {
        let g = Grid1D::<f64>::periodic(0.0, 20.0, 400).unwrap();
        for p in [KernelProfile::Gaussian { sigma: 0.7f64 }, KernelProfile::TopHat { radius: 1.0 }] {
            let out = nonlocal_term(&vec![3.0f64; 400], &KernelSpec::TranslationInvariant(p), &g).unwrap();
            for x in out {
                assert!((x - 3.0).abs() < 0.03, "{x}");
            }
        }
        let g = Grid1D::<f64>::periodic(0.0, 20.0, 400).unwrap();
        let k = Kernel::new(&KernelSpec::TranslationInvariant(KernelProfile::Gaussian { sigma: 0.7 }), &g).unwrap();
        assert!((k.row_sum_bound() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_path_agreement() {
        for b in [Boundary::NoFlux, Boundary::Periodic] {
            let g = Grid1D::new(256, 0.05, -3.0, b).unwrap();
            let p = KernelProfile::Gaussian { sigma: 0.4 };
            let v: Vec<f64> = (0..256).map(|i| 1.0 + (0.3 * i as f64).sin().powi(2)).collect();
            let a = nonlocal_term(&v, &KernelSpec::TranslationInvariant(p), &g).unwrap();
            let d = nonlocal_term(&v, &KernelSpec::General(dense_from_profile(&p, &g).unwrap()), &g).unwrap();
            let diff = a.iter().zip(&d).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-12, "{b:?}: {diff}");
        }
    }

    #[test]
    fn negative_entries_rejected() {
        let g = Grid1D::new(8, 0.1, 0.0, Boundary::NoFlux).unwrap();
        let mut m = vec![vec![0.1; 8]; 8];
        m[3][5] = -1e-3;
        assert!(matches!(Kernel::new(&KernelSpec::General(m), &g), Err(Error::InvalidKernel(_))));
        assert!(Kernel::new(&KernelSpec::General(vec![vec![0.0; 7]; 8]), &g).is_err());
        let bad = KernelSpec::TranslationInvariant(KernelProfile::TopHat { radius: 0.0 });
        assert!(Kernel::new(&bad, &g).is_err());
    }
}
