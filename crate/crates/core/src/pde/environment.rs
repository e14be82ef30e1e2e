use serde::{Deserialize, Serialize};

use super::grid::Grid1D;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha >= T::zero() && alpha <= T::one() {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("alpha must lie in [0,1], got {alpha}")))
    }
}

/// Piecewise-constant `α(x)`. Piece `i` covers `[starts[i], starts[i+1])`,
/// the last piece extends to `+∞` and the first one to `−∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EnvironmentProfile<T> {
    starts: Vec<T>,
    alphas: Vec<T>,
}

impl<T: Real> EnvironmentProfile<T> {
    pub fn uniform(alpha: T) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(EnvironmentProfile { starts: vec![T::neg_infinity()], alphas: vec![alpha] })
    }

    /// Pieces given as `(start, α)` with strictly increasing starts; the first
    /// piece also covers everything to its left.
    pub fn from_pieces(pieces: &[(T, T)]) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Config("environment needs at least one piece".into()));
        }
        for w in pieces.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::Config("environment piece starts must increase strictly".into()));
            }
        }
        for &(_, a) in pieces {
            check_alpha(a)?;
        }
        let mut starts: Vec<T> = pieces.iter().map(|p| p.0).collect();
        starts[0] = T::neg_infinity();
        Ok(EnvironmentProfile { starts, alphas: pieces.iter().map(|p| p.1).collect() })
    }

    pub fn alpha_at(&self, x: T) -> T {
        let idx = self.starts.partition_point(|&s| s <= x);
        self.alphas[idx.saturating_sub(1)]
    }

    pub fn sample(&self, g: &Grid1D<T>) -> Vec<T> {
        (0..g.n).map(|i| self.alpha_at(g.x(i))).collect()
    }

    pub fn pieces(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.starts.iter().copied().zip(self.alphas.iter().copied())
    }

    pub fn max_alpha(&self) -> T {
        self.alphas.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

/// One period `[0, L)` split into patches, tiled `repetitions` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PeriodicEnv<T> {
    pub period: T,
    /// `(start, end, α)`, partitioning `[0, period)` in order.
    pub patches: Vec<(T, T, T)>,
    pub repetitions: usize,
}

impl<T: Real> PeriodicEnv<T> {
    /// Two patches: `α₁` on `[0, gap)`, `α₂` on `[gap, L)`.
    pub fn two_patch(period: T, gap: T, alpha1: T, alpha2: T, repetitions: usize) -> Result<Self> {
        let e = PeriodicEnv {
            period,
            patches: vec![(T::zero(), gap, alpha1), (gap, period, alpha2)],
            repetitions,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn uniform(period: T, alpha: T) -> Result<Self> {
        let e = PeriodicEnv { period, patches: vec![(T::zero(), period, alpha)], repetitions: 1 };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > T::zero()) || self.repetitions == 0 {
            return Err(Error::Config("period must be positive and repeated at least once".into()));
        }
        let mut cursor = T::zero();
        for &(a, b, alpha) in &self.patches {
            check_alpha(alpha)?;
            if a != cursor || !(b > a) {
                return Err(Error::Config(format!(
                    "patches must partition [0, {}) in order; found [{a}, {b}) after {cursor}",
                    self.period
                )));
            }
            cursor = b;
        }
        if cursor != self.period {
            return Err(Error::Config(format!("patches end at {cursor}, period is {}", self.period)));
        }
        Ok(())
    }

    pub fn extent(&self) -> T {
        self.period * T::from_count(self.repetitions)
    }

    /// Profile on `[origin, origin + L·repetitions)`; beyond that the last
    /// patch value continues.
    pub fn profile(&self, origin: T) -> Result<EnvironmentProfile<T>> {
        self.validate()?;
        let mut pieces = Vec::with_capacity(self.patches.len() * self.repetitions);
        for r in 0..self.repetitions {
            let shift = origin + self.period * T::from_count(r);
            for &(a, _, alpha) in &self.patches {
                pieces.push((shift + a, alpha));
            }
        }
        // merge equal neighbours
        pieces.dedup_by(|b, a| a.1 == b.1);
        EnvironmentProfile::from_pieces(&pieces)
    }
}

/// Three consecutive intervals; the middle one is fully censored (`α = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GapEnv<T> {
    pub s1: (T, T),
    pub s2: (T, T),
    pub s3: (T, T),
    pub alpha1: T,
    pub alpha2: T,
}

impl<T: Real> GapEnv<T> {
    /// `S₁ = [start, start+l1)`, `S₂` of width `gap`, `S₃` up to `end`.
    pub fn new(start: T, end: T, l1: T, gap: T, alpha1: T, alpha2: T) -> Result<Self> {
        let e = GapEnv {
            s1: (start, start + l1),
            s2: (start + l1, start + l1 + gap),
            s3: (start + l1 + gap, end),
            alpha1,
            alpha2,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(a >= T::zero() && a < T::one()) {
                return Err(Error::param(name, format!("{name} must lie in [0,1), got {a}")));
            }
        }
        let ok = self.s1.0 < self.s1.1
            && self.s1.1 == self.s2.0
            && self.s2.0 <= self.s2.1
            && self.s2.1 == self.s3.0
            && self.s3.0 < self.s3.1;
        if !ok {
            return Err(Error::Config("gap intervals must be consecutive and non-empty".into()));
        }
        Ok(())
    }

    pub fn width(&self) -> T {
        self.s2.1 - self.s2.0
    }

    /// Checks that the three intervals tile the grid extent.
    pub fn check_tiles(&self, g: &Grid1D<T>) -> Result<()> {
        let (lo, hi) = g.extent();
        let tol = g.dx * T::lit(1e-6);
        if (self.s1.0 - lo).abs() > tol || (self.s3.1 - hi).abs() > tol {
            return Err(Error::Config(format!(
                "gap intervals span [{}, {}] but the grid spans [{lo}, {hi}]",
                self.s1.0, self.s3.1
            )));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<EnvironmentProfile<T>> {
        self.validate()?;
        let mut pieces = vec![(self.s1.0, self.alpha1)];
        if self.width() > T::zero() {
            pieces.push((self.s2.0, T::one()));
        }
        pieces.push((self.s3.0, self.alpha2));
        pieces.dedup_by(|b, a| a.1 == b.1);
        EnvironmentProfile::from_pieces(&pieces)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::grid::Boundary;

    #[test]
    fn piecewise_lookup() {
        let e = EnvironmentProfile::from_pieces(&[(0.0, 0.0), (1.0, 0.5), (2.0, 1.0)]).unwrap();
        assert_eq!(e.alpha_at(-5.0), 0.0);
        assert_eq!(e.alpha_at(0.999), 0.0);
        assert_eq!(e.alpha_at(1.0), 0.5);
        assert_eq!(e.alpha_at(2.5), 1.0);
        assert!(EnvironmentProfile::from_pieces(&[(0.0, 1.5)]).is_err());
        assert!(EnvironmentProfile::from_pieces(&[(1.0, 0.0), (1.0, 0.2)]).is_err());
        assert!(EnvironmentProfile::uniform(-0.1).is_err());
    }

    #[test]
    fn periodic_tiling() {
        let pe = PeriodicEnv::two_patch(2.0, 0.5, 1.0, 0.0, 3).unwrap();
        let prof = pe.profile(0.0).unwrap();
        let g = Grid1D::periodic(0.0, 6.0, 60).unwrap();
        let a = prof.sample(&g);
        assert_eq!(a.iter().filter(|&&x| x == 1.0).count(), 15);
        assert_eq!(a[0], 1.0);
        assert_eq!(a[5], 0.0);
        assert_eq!(a[20], 1.0);
        let bad = PeriodicEnv { period: 2.0, patches: vec![(0.0, 1.0, 0.0), (1.5, 2.0, 0.0)], repetitions: 1 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn gap_layout() {
        let ge = GapEnv::new(0.0, 15.0, 5.0, 2.0, 0.0, 0.0).unwrap();
        let g = Grid1D::no_flux(0.0, 15.0, 0.05).unwrap();
        ge.check_tiles(&g).unwrap();
        let prof = ge.profile().unwrap();
        assert_eq!(prof.alpha_at(4.9), 0.0);
        assert_eq!(prof.alpha_at(5.0), 1.0);
        assert_eq!(prof.alpha_at(6.99), 1.0);
        assert_eq!(prof.alpha_at(7.0), 0.0);
        let short = Grid1D::no_flux(0.0, 12.0, 0.05).unwrap();
        assert!(ge.check_tiles(&short).is_err());
        assert!(GapEnv::new(0.0, 15.0, 5.0, 2.0, 1.0, 0.0).is_err());
        let g2 = Grid1D::new(16, 1.0, 0.0, Boundary::NoFlux).unwrap();
        assert_eq!(GapEnv::new(0.0, 15.0, 5.0, 0.0, 0.0, 0.0).unwrap().profile().unwrap().sample(&g2), vec![0.0; 16]);
    }
}
