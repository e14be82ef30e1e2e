use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Homogeneous Neumann; nodes include both endpoints.
    #[default]
    NoFlux,
    /// Nodes are cell centres of `[start, start + n·dx)`.
    Periodic,
}

/// Uniform 1-D grid, node `i` at `x0 + i·dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Grid1D<T> {
    pub n: usize,
    pub dx: T,
    pub x0: T,
    pub boundary: Boundary,
}

pub const MIN_NODES: usize = 8;

impl<T: Real> Grid1D<T> {
    pub fn new(n: usize, dx: T, x0: T, boundary: Boundary) -> Result<Self> {
        let g = Grid1D { n, dx, x0, boundary };
        g.validate()?;
        Ok(g)
    }

    /// NoFlux grid on `[start, end]` with spacing as close to `dx` as the
    /// interval allows.
    pub fn no_flux(start: T, end: T, dx: T) -> Result<Self> {
        if !(end > start) || !(dx > T::zero()) {
            return Err(Error::Config(format!("bad interval [{start}, {end}] or spacing {dx}")));
        }
        let cells = ((end - start) / dx).round().to_usize().unwrap_or(0).max(1);
        Self::new(cells + 1, (end - start) / T::from_count(cells), start, Boundary::NoFlux)
    }

    /// Periodic grid with `n` cells covering `[start, start + length)`.
    pub fn periodic(start: T, length: T, n: usize) -> Result<Self> {
        if !(length > T::zero()) {
            return Err(Error::Config(format!("period must be positive, got {length}")));
        }
        let dx = length / T::from_count(n);
        Self::new(n, dx, start + dx / T::lit(2.0), Boundary::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_NODES {
            return Err(Error::Config(format!("grid needs at least {MIN_NODES} nodes, got {}", self.n)));
        }
        if !(self.dx > T::zero()) || !self.dx.is_finite() {
            return Err(Error::Config(format!("grid spacing must be positive, got {}", self.dx)));
        }
        if !self.x0.is_finite() {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x0 + self.dx * T::from_count(i)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Closed physical extent: node span for NoFlux, cell span for Periodic.
    pub fn extent(&self) -> (T, T) {
        match self.boundary {
            Boundary::NoFlux => (self.x0, self.x(self.n - 1)),
            Boundary::Periodic => {
                let lo = self.x0 - self.dx / T::lit(2.0);
                (lo, lo + self.dx * T::from_count(self.n))
            }
        }
    }

    pub fn length(&self) -> T {
        let (a, b) = self.extent();
        b - a
    }

    /// Trapezoid quadrature weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> T {
        match self.boundary {
            Boundary::NoFlux if i == 0 || i + 1 == self.n => self.dx / T::lit(2.0),
            _ => self.dx,
        }
    }

    pub fn integrate(&self, f: &[T]) -> T {
        f.iter().enumerate().map(|(i, &v)| v * self.weight(i)).sum()
    }

    pub fn nearest_node(&self, x: T) -> Result<usize> {
        let (lo, hi) = self.extent();
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain(format!("location {x} lies outside the grid [{lo}, {hi}]")));
        }
        let i = ((x - self.x0) / self.dx).round().to_i64().unwrap_or(0);
        Ok(match self.boundary {
            Boundary::NoFlux => i.clamp(0, self.n as i64 - 1) as usize,
            Boundary::Periodic => i.rem_euclid(self.n as i64) as usize,
        })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Shape { expected: self.n, got: len });
        }
        Ok(())
    }

    /// Second difference with ghost reflection (NoFlux) or wrap (Periodic).
    pub fn laplacian(&self, f: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.n];
        self.laplacian_into(f, T::one(), &mut out)?;
        Ok(out)
    }

    /// `out = scale · Δf`.
    pub fn laplacian_into(&self, f: &[T], scale: T, out: &mut [T]) -> Result<()> {
        self.check_len(f.len())?;
        self.check_len(out.len())?;
        let n = self.n;
        let c = scale / (self.dx * self.dx);
        let two = T::lit(2.0);
        for i in 1..n - 1 {
            out[i] = c * (f[i - 1] - two * f[i] + f[i + 1]);
        }
        match self.boundary {
            Boundary::NoFlux => {
                out[0] = c * two * (f[1] - f[0]);
                out[n - 1] = c * two * (f[n - 2] - f[n - 1]);
            }
            Boundary::Periodic => {
                out[0] = c * (f[n - 1] - two * f[0] + f[1]);
                out[n - 1] = c * (f[n - 2] - two * f[n - 1] + f[0]);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`Grid1D::laplacian`].
pub fn laplacian<T: Real>(f: &[T], g: &Grid1D<T>) -> Result<Vec<T>> {
    g.laplacian(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction() {
        let g = Grid1D::no_flux(0.0, 20.0, 0.05).unwrap();
        assert_eq!(g.n, 401);
        assert_eq!(g.extent(), (0.0, 20.0));
        let p = Grid1D::periodic(0.0, 4.0, 64).unwrap();
        assert_eq!(p.dx, 0.0625);
        assert_eq!(p.extent(), (0.0, 4.0));
        assert!(Grid1D::new(4, 0.1, 0.0, Boundary::NoFlux).is_err());
        assert!(Grid1D::new(10, 0.0, 0.0, Boundary::NoFlux).is_err());
    }

    #[test]
    fn constant_and_quadratic() {
        for b in [Boundary::NoFlux, Boundary::Periodic] {
            let g = Grid1D::new(32, 0.1, 0.0, b).unwrap();
            assert!(g.laplacian(&vec![3.7f64; 32]).unwrap().iter().all(|&x| x.abs() < 1e-12));
        }
        let g = Grid1D::new(50, 0.1, 0.0, Boundary::NoFlux).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        let l = g.laplacian(&f).unwrap();
        for v in &l[1..49] {
            assert!((v - 2.0).abs() < 1e-9);
        }
        assert!(matches!(g.laplacian(&f[..10]), Err(Error::Shape { .. })));
    }

    #[test]
    fn second_order_on_cosine() {
        let err = |cells: usize| {
            let l = 3.0;
            let g = Grid1D::no_flux(0.0, l, l / cells as f64).unwrap();
            let k = std::f64::consts::PI / l;
            let f: Vec<f64> = g.nodes().iter().map(|x| (k * x).cos()).collect();
            let lap = g.laplacian(&f).unwrap();
            g.nodes()
                .iter()
                .zip(&lap)
                .map(|(x, v)| (v + k * k * (k * x).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 > 3.8 && e1 / e2 < 4.2, "ratio {}", e1 / e2);
    }

    #[test]
    fn discrete_mass_conserved() {
        for b in [Boundary::NoFlux, Boundary::Periodic] {
            let g = Grid1D::new(40, 0.25, 0.0, b).unwrap();
            let f: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64).collect();
            assert!(g.integrate(&g.laplacian(&f).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn nearest() {
        let g = Grid1D::new(11, 0.1, 0.0, Boundary::NoFlux).unwrap();
        assert_eq!(g.nearest_node(0.34).unwrap(), 3);
        assert_eq!(g.nearest_node(1.0).unwrap(), 10);
        assert!(g.nearest_node(1.01).is_err());
        let p = Grid1D::periodic(0.0, 1.0, 10).unwrap();
        assert_eq!(p.nearest_node(0.999).unwrap(), 9);
        assert_eq!(p.nearest_node(0.02).unwrap(), 0);
    }
}
