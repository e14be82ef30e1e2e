//! Numerical laboratory for a coupled activity/tension reaction–diffusion
//! system on the line.
//!
//! ```text
//! u_t = Δu + r(v) G_α(u) − u
//! v_t = D Δv + k ∫ J(x, y) v(y) dy − (h(u) − k₂) v + 1 + s(x, t)
//! ```
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the usual double-precision choice.

pub mod equilibria;
pub mod pde;
pub mod error;
pub mod fit;
pub mod hetero;
pub mod model;
pub mod quadrature;
pub mod scalar;
pub mod wave;

pub use error::{Error, Result};
pub use model::{nondimensionalize, DimensionalParams, Jacobian, Params};
pub use scalar::Real;

pub type Params64 = Params<f64>;
pub type Params32 = Params<f32>;
