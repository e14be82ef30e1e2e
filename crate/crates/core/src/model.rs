//! Model constants and the pointwise kinetics of the activity/tension system.
//!
//! Activity `u` and tension `v` obey
//!
//! ```text
//! u_t = Δu + r(v) G_α(u) − u
//! v_t = D Δv + k ∫ J(x, y) v(y) dy − (h(u) − k₂) v + 1 + s(x, t)
//! ```
//!
//! with the sigmoid transition `r`, the decay modulation `h` and the ignition
//! growth `G_α` defined below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest magnitude of the sigmoid exponent before saturation.
const SIGMOID_CLAMP: f64 = 700.0;

/// Non-dimensional model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct Params<T> {
    /// Self-reinforcement strength.
    pub rho: T,
    /// Transition sharpness of the sigmoid.
    pub beta: T,
    /// Critical tension.
    pub a_bar: T,
    /// Non-local coupling strength.
    pub k: T,
    /// Tension growth offset, `0 < k2 < 1`.
    pub k2: T,
    /// Tension to activity diffusivity ratio.
    #[serde(rename = "D")]
    pub diffusivity: T,
    /// Decay scale.
    pub m_bar: T,
    /// Decay exponent.
    pub p: T,
    /// Restriction of information, the ignition threshold in `[0, 1]`.
    pub alpha: T,
    /// Shock amplitude.
    #[serde(rename = "A_tilde")]
    pub shock_amplitude: T,
}

impl<T: Real> Params<T> {
    /// Local-system parameters with the decay shape `h(u) = 1/(1+u)`, `k2 = 1/4`
    /// and the critical tension placed halfway between `v*(0)` and `v*(1)`.
    pub fn reference(rho: T, beta: T, alpha: T) -> Self {
        let mut p = Params {
            rho,
            beta,
            a_bar: T::zero(),
            k: T::zero(),
            k2: T::lit(0.25),
            diffusivity: T::one(),
            m_bar: T::one(),
            p: T::one(),
            alpha,
            shock_amplitude: T::zero(),
        };
        p.a_bar = crate::equilibria::default_a(&p).expect("reference decay admits v*(1)");
        p
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |field, x: T| {
            if x.is_finite() && x > T::zero() {
                Ok(())
            } else {
                Err(Error::param(field, format!("must be positive and finite, got {x}")))
            }
        };
        let nonneg = |field, x: T| {
            if x.is_finite() && x >= T::zero() {
                Ok(())
            } else {
                Err(Error::param(field, format!("must be non-negative and finite, got {x}")))
            }
        };
        pos("rho", self.rho)?;
        pos("beta", self.beta)?;
        pos("m_bar", self.m_bar)?;
        pos("p", self.p)?;
        nonneg("D", self.diffusivity)?;
        nonneg("k", self.k)?;
        nonneg("A_tilde", self.shock_amplitude)?;
        if !self.a_bar.is_finite() {
            return Err(Error::param("a_bar", "must be finite"));
        }
        if !(self.alpha >= T::zero() && self.alpha <= T::one()) {
            return Err(Error::param("alpha", "alpha must lie in [0,1]"));
        }
        if !(self.k2 > T::zero() && self.k2 < T::one()) {
            return Err(Error::param("k2", "k2 must lie in (0,1)"));
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_shock(mut self, amplitude: T) -> Self {
        self.shock_amplitude = amplitude;
        self
    }

    /// Logistic factor `1/(1+e^{−β(v−ā)})` with a clamped exponent.
    #[inline]
    fn logistic(&self, v: T) -> T {
        let clamp = T::lit(SIGMOID_CLAMP);
        let x = (-self.beta * (v - self.a_bar)).max(-clamp).min(clamp);
        T::one() / (T::one() + x.exp())
    }

    /// Transition rate `r(v) = ρ / (1 + e^{−β(v−ā)})`.
    #[inline]
    pub fn r(&self, v: T) -> T {
        self.rho * self.logistic(v)
    }

    /// `r'(v) = ρ β σ (1 − σ)`.
    #[inline]
    pub fn r_prime(&self, v: T) -> T {
        let s = self.logistic(v);
        self.rho * self.beta * s * (T::one() - s)
    }

    /// Tension decay modulation `h(u) = (1 + m̄u)^{−p}`.
    pub fn h(&self, u: T) -> Result<T> {
        check_activity(u)?;
        Ok(self.h_unchecked(u))
    }

    #[inline]
    pub(crate) fn h_unchecked(&self, u: T) -> T {
        let base = T::one() + self.m_bar * u;
        if self.p == T::one() {
            base.recip()
        } else if self.p == T::lit(2.0) {
            (base * base).recip()
        } else {
            base.powf(-self.p)
        }
    }

    pub fn h_prime(&self, u: T) -> Result<T> {
        check_activity(u)?;
        Ok(self.h_prime_unchecked(u))
    }

    #[inline]
    pub(crate) fn h_prime_unchecked(&self, u: T) -> T {
        let base = T::one() + self.m_bar * u;
        -self.p * self.m_bar * base.powf(-self.p - T::one())
    }

    /// Ignition growth `G_α(u)`: zero on `[0, α]`, `(u − α)(1 − u)` beyond.
    pub fn growth(&self, u: T) -> Result<T> {
        check_activity(u)?;
        Ok(growth_at(u, self.alpha))
    }

    /// `G_α'(u)`; at the kink `u = α > 0` the right-hand derivative is
    /// returned together with `true`.
    pub fn growth_prime(&self, u: T) -> Result<(T, bool)> {
        check_activity(u)?;
        Ok(growth_prime_at(u, self.alpha))
    }

    /// Activity reaction `Φ(u, v) = r(v) G_α(u) − u`.
    pub fn phi(&self, u: T, v: T) -> Result<T> {
        check_activity(u)?;
        Ok(self.phi_at(u, v, self.alpha))
    }

    /// Tension reaction `Ψ(u, v) = −(h(u) − k₂) v + 1`.
    pub fn psi(&self, u: T, v: T) -> Result<T> {
        check_activity(u)?;
        Ok(self.psi_unchecked(u, v))
    }

    #[inline]
    pub(crate) fn phi_at(&self, u: T, v: T, alpha: T) -> T {
        let g = growth_at(u, alpha);
        if g == T::zero() {
            -u
        } else {
            self.r(v) * g - u
        }
    }

    #[inline]
    pub(crate) fn psi_unchecked(&self, u: T, v: T) -> T {
        -(self.h_unchecked(u) - self.k2) * v + T::one()
    }

    /// Jacobian of `(Φ, Ψ)` with respect to `(u, v)`.
    pub fn jacobian(&self, u: T, v: T) -> Result<Jacobian<T>> {
        check_activity(u)?;
        Ok(self.jacobian_at(u, v, self.alpha))
    }

    pub(crate) fn jacobian_at(&self, u: T, v: T, alpha: T) -> Jacobian<T> {
        let (dg, one_sided) = growth_prime_at(u, alpha);
        let g = growth_at(u, alpha);
        Jacobian {
            entries: [
                [self.r(v) * dg - T::one(), self.r_prime(v) * g],
                [-self.h_prime_unchecked(u) * v, -(self.h_unchecked(u) - self.k2)],
            ],
            one_sided,
        }
    }
}

#[inline]
fn check_activity<T: Real>(u: T) -> Result<()> {
    if u >= T::zero() {
        Ok(())
    } else {
        Err(Error::Domain(format!("activity must be non-negative, got {u}")))
    }
}

#[inline]
pub(crate) fn growth_at<T: Real>(u: T, alpha: T) -> T {
    if u <= alpha {
        T::zero()
    } else {
        (u - alpha) * (T::one() - u)
    }
}

#[inline]
pub(crate) fn growth_prime_at<T: Real>(u: T, alpha: T) -> (T, bool) {
    if alpha > T::zero() && u == alpha {
        (T::one() - alpha, true)
    } else if u < alpha {
        (T::zero(), false)
    } else {
        (T::one() + alpha - u - u, false)
    }
}

/// 2×2 Jacobian of the reaction terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct Jacobian<T> {
    /// Row-major `[[Φ_u, Φ_v], [Ψ_u, Ψ_v]]`.
    pub entries: [[T; 2]; 2],
    /// Set when `G_α'` was taken one-sided at the kink.
    pub one_sided: bool,
}

impl<T: Real> Jacobian<T> {
    pub fn trace(&self) -> T {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn det(&self) -> T {
        self.entries[0][0] * self.entries[1][1] - self.entries[0][1] * self.entries[1][0]
    }

    /// Largest real part of the two eigenvalues.
    pub fn spectral_abscissa(&self) -> T {
        let half_tr = self.trace() / T::lit(2.0);
        let disc = half_tr * half_tr - self.det();
        if disc >= T::zero() {
            half_tr + disc.sqrt()
        } else {
            half_tr
        }
    }
}

/// Dimensional model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalParams {
    /// Activity diffusivity.
    pub d1: f64,
    /// Tension diffusivity.
    pub d2: f64,
    /// Non-local coupling strength.
    pub kappa: f64,
    /// Activity decay rate, sets the time scale.
    pub omega: f64,
    /// Baseline tension decay.
    pub theta: f64,
    /// Tension growth offset.
    pub eta: f64,
    /// Transition amplitude.
    pub gamma: f64,
    /// Transition sharpness.
    pub beta_dim: f64,
    /// Critical tension threshold.
    pub a_dim: f64,
    /// Inverse activity scale.
    pub m_dim: f64,
    pub p: f64,
    /// Activity carrying capacity.
    pub z0: f64,
    /// Base tension source.
    pub v_b: f64,
    /// Shock amplitude.
    pub a0: f64,
    /// Restriction of information in activity units, within `[0, z0]`.
    pub alpha_dim: f64,
}

impl DimensionalParams {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 11] = [
            ("d1", self.d1),
            ("omega", self.omega),
            ("theta", self.theta),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("beta_dim", self.beta_dim),
            ("a_dim", self.a_dim),
            ("m_dim", self.m_dim),
            ("p", self.p),
            ("z0", self.z0),
            ("v_b", self.v_b),
        ];
        for (field, x) in positive {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::param(field, format!("must be positive and finite, got {x}")));
            }
        }
        for (field, x) in [("d2", self.d2), ("kappa", self.kappa), ("a0", self.a0)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::param(field, format!("must be non-negative and finite, got {x}")));
            }
        }
        if self.omega <= self.theta {
            return Err(Error::param("omega", "activity decay omega must exceed theta"));
        }
        if self.eta >= self.omega {
            return Err(Error::param("eta", "eta must be below omega so that k2 < 1"));
        }
        if !(self.alpha_dim >= 0.0 && self.alpha_dim <= self.z0) {
            return Err(Error::param("alpha_dim", "must lie in [0, z0]"));
        }
        Ok(())
    }
}

/// Maps dimensional constants onto the non-dimensional set, using the time
/// scale `1/ω`, length scale `√(D1/ω)`, activity scale `z0` and tension scale
/// `v_b/ω`.
pub fn nondimensionalize(dp: &DimensionalParams) -> Result<Params<f64>> {
    dp.validate()?;
    let params = Params {
        rho: dp.gamma / dp.omega,
        beta: dp.beta_dim * dp.v_b / dp.omega,
        a_bar: dp.a_dim * dp.omega / dp.v_b,
        k: dp.kappa * dp.v_b / dp.omega,
        k2: dp.eta / dp.omega,
        diffusivity: dp.d2 / dp.d1,
        m_bar: dp.m_dim * dp.z0,
        p: dp.p,
        alpha: dp.alpha_dim / dp.z0,
        shock_amplitude: dp.a0 / dp.v_b,
    };
    params.validate()?;
    Ok(params)
}
