//! The weight-function family behind the energy estimate: the modulus μ,
//! the primitive θ and its inverse, ψ_λ, its antiderivative Φ_λ, the
//! rescaled map Λ_λ, and the rule selecting the free parameter β from the
//! size of the data.
//!
//! Closed forms used throughout:
//!   μ(x)   = x(1 + |log x|)
//!   θ(τ)   = log(1 + log τ)            (τ ≥ 1)
//!   ψ_λ(y) = exp(y^{-λ} - 1)           (y ∈ (0,1], λ > 1)
//!   Φ_λ(y) = -∫_y^1 ψ_λ(z) dz          (quadrature; Φ' = ψ, Φ'' = ψ')
//!   Λ_λ(y) = y Φ_λ(1/y)                (y ≥ 1, onto (-∞, 0])
//!
//! ψ_λ grows doubly exponentially toward y = 0, so every operation either
//! rejects arguments whose value exceeds f64 range (the representability
//! threshold is y^{-λ} ≤ log(MAX) + 1) or works on logarithms where the
//! identity being checked is exact in log form.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

const QUAD_TOL_ABS: f64 = 1e-10;
const QUAD_TOL_REL: f64 = 1e-12;

/// μ(x) = x(1 + |log x|), the Log-Lipschitz modulus of continuity.
pub fn modulus_mu(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("mu requires x > 0, got {x}")));
    }
    Ok(x * (1.0 + x.ln().abs()))
}

/// θ(τ) = ∫_{1/τ}^1 ds/μ(s) = log(1 + log τ) for τ ≥ 1.
pub fn theta(tau: f64) -> Result<f64> {
    if !(tau >= 1.0) {
        return Err(Error::Domain(format!("theta requires tau >= 1, got {tau}")));
    }
    Ok((1.0 + tau.ln()).ln())
}

/// θ^{-1}(y) = exp(exp(y) - 1) for y ≥ 0.
pub fn theta_inv(y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::Domain(format!("theta_inv requires y >= 0, got {y}")));
    }
    Ok((y.exp() - 1.0).exp())
}

/// Largest ψ argument exponent representable in f64: y^{-λ} ≤ log(MAX) + 1.
pub fn psi_overflow_threshold(lambda: f64) -> f64 {
    (f64::MAX.ln() + 1.0).powf(-1.0 / lambda)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 1.0) {
        return Err(Error::Domain(format!("lambda must be > 1, got {lambda}")));
    }
    Ok(())
}

fn check_y(lambda: f64, y: f64) -> Result<()> {
    check_lambda(lambda)?;
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::Domain(format!("y must lie in (0, 1], got {y}")));
    }
    // Representability: exp(y^{-λ} - 1) must fit in f64, i.e.
    // y^{-λ} ≤ log(MAX) + 1 (equivalently y ≥ psi_overflow_threshold).
    if y.powf(-lambda) - 1.0 > f64::MAX.ln() {
        return Err(Error::Overflow(format!(
            "psi_{{{lambda}}}({y}) exceeds f64 range; smallest admissible y is {:.6e}",
            psi_overflow_threshold(lambda)
        )));
    }
    Ok(())
}

/// log ψ_λ(y) = y^{-λ} - 1. Defined for all y ∈ (0, 1] regardless of
/// whether ψ itself is representable.
pub fn ln_psi(lambda: f64, y: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::Domain(format!("y must lie in (0, 1], got {y}")));
    }
    Ok(y.powf(-lambda) - 1.0)
}

/// ψ_λ(y) = θ^{-1}(-λ log y) = exp(y^{-λ} - 1).
pub fn psi(lambda: f64, y: f64) -> Result<f64> {
    check_y(lambda, y)?;
    Ok((y.powf(-lambda) - 1.0).exp())
}

/// Φ_λ(y) = -∫_y^1 ψ_λ(z) dz, by adaptive quadrature.
pub fn phi(lambda: f64, y: f64) -> Result<f64> {
    check_y(lambda, y)?;
    if y == 1.0 {
        return Ok(0.0);
    }
    let integral = adaptive_simpson(
        &|z| (z.powf(-lambda) - 1.0).exp(),
        y,
        1.0,
        QUAD_TOL_ABS,
        QUAD_TOL_REL,
    );
    Ok(-integral)
}

/// Φ'_λ = ψ_λ.
pub fn phi_prime(lambda: f64, y: f64) -> Result<f64> {
    psi(lambda, y)
}

/// Φ''_λ(y) = ψ'_λ(y) = -λ y^{-λ-1} ψ_λ(y).
pub fn phi_second(lambda: f64, y: f64) -> Result<f64> {
    check_y(lambda, y)?;
    Ok(-lambda * y.powf(-lambda - 1.0) * (y.powf(-lambda) - 1.0).exp())
}

/// Relative residual of the defining ODE
///   y Φ''_λ(y) = -λ Φ'_λ(y) (1 + |log(1/Φ'_λ(y))|).
///
/// Both sides are computed on logarithms (the identity is exact in log
/// form), so the residual stays meaningful even where ψ overflows f64.
pub fn ode_residual(lambda: f64, y: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::Domain(format!("y must lie in (0, 1], got {y}")));
    }
    let ln_psi = y.powf(-lambda) - 1.0; // = log Φ'
    // lhs = y Φ'' = -λ y^{-λ} ψ.  rhs = -λ ψ (1 + |log(1/ψ)|) = -λ ψ (1 + ln_psi).
    let ln_lhs = lambda.ln() + ln_psi + y.powf(-lambda).ln();
    let ln_rhs = lambda.ln() + ln_psi + (1.0 + ln_psi.abs()).ln();
    Ok((ln_lhs - ln_rhs).exp_m1().abs())
}

/// Relative residual of the scaling identity
///   ψ_λ(ζ y) = exp(ζ^{-λ} - 1) (ψ_λ(y))^{ζ^{-λ}},   ζ > 1, y ≤ 1/ζ,
/// again via logarithms.
pub fn scaling_residual(lambda: f64, zeta: f64, y: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(zeta > 1.0) {
        return Err(Error::Domain(format!("zeta must be > 1, got {zeta}")));
    }
    if !(y > 0.0 && y <= 1.0 / zeta) {
        return Err(Error::Domain(format!(
            "scaling identity requires 0 < y <= 1/zeta = {:.6}, got {y}",
            1.0 / zeta
        )));
    }
    let zl = zeta.powf(-lambda);
    let ln_lhs = (zeta * y).powf(-lambda) - 1.0;
    let ln_rhs = (zl - 1.0) + zl * (y.powf(-lambda) - 1.0);
    Ok((ln_lhs - ln_rhs).exp_m1().abs())
}

/// Λ_λ(y) = y Φ_λ(1/y) for y ≥ 1; strictly decreasing onto (-∞, 0].
pub fn lambda_fn(lambda: f64, y: f64) -> Result<f64> {
    if !(y >= 1.0) {
        return Err(Error::Domain(format!("lambda_fn requires y >= 1, got {y}")));
    }
    Ok(y * phi(lambda, 1.0 / y)?)
}

/// Λ_λ^{-1}(z) for z ≤ 0, by bracketed bisection: the bracket [1, y_hi]
/// grows geometrically until the sign changes, then bisects to 1e-12
/// relative.
pub fn lambda_inv(lambda: f64, z: f64) -> Result<f64> {
    if !(z <= 0.0) {
        return Err(Error::Domain(format!(
            "lambda_inv requires z <= 0 (Lambda maps into (-inf, 0]), got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    loop {
        match lambda_fn(lambda, hi) {
            Ok(v) if v <= z => break,
            Ok(_) => {
                lo = hi;
                hi *= 2.0;
            }
            Err(_) => {
                return Err(Error::Overflow(format!(
                    "lambda_inv({z:.6e}) exceeds the representable range of Lambda_{{{lambda}}}"
                )))
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lambda_fn(lambda, mid)? > z {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Parameters of the weighted energy estimate. σ and τ are derived from
/// (s, α) exactly: σ = (1-s)/α, τ = σ/4.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightParams {
    pub s: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    sigma: f64,
    tau: f64,
}

impl WeightParams {
    pub fn new(s: f64, lambda: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("s must lie in (0,1), got {s}")));
        }
        check_lambda(lambda)?;
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be > 0, got {alpha}")));
        }
        if !(gamma > 0.0) {
            return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
        }
        let sigma = (1.0 - s) / alpha;
        let tau = sigma / 4.0;
        if !(beta >= sigma + tau) {
            return Err(Error::Domain(format!(
                "beta = {beta} violates beta >= sigma + tau = {}",
                sigma + tau
            )));
        }
        Ok(Self {
            s,
            lambda,
            alpha,
            beta,
            gamma,
            sigma,
            tau,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// log of the energy weight e^{2γt} e^{-2β Φ_λ((t+τ)/β)}.
    pub fn log_energy_weight(&self, t: f64) -> Result<f64> {
        Ok(2.0 * self.gamma * t - 2.0 * self.beta * phi(self.lambda, (t + self.tau) / self.beta)?)
    }

    /// log of the field transform factor e^{γt} e^{-β Φ_λ((t+τ)/β)}.
    pub fn log_transform_factor(&self, t: f64) -> Result<f64> {
        Ok(self.gamma * t - self.beta * phi(self.lambda, (t + self.tau) / self.beta)?)
    }

    /// Time-decaying Sobolev index 1 - s - αt.
    pub fn sobolev_index(&self, t: f64) -> f64 {
        1.0 - self.s - self.alpha * t
    }
}

/// Picks β from the defining equation e^{-β Φ_λ(τ/β)} = 1/ρ, i.e.
/// β = τ Λ_λ^{-1}((1/τ) log ρ), for ρ = ‖u(0)‖_{H^{-s}} ∈ (0, 1).
///
/// Rejects data too large for the estimate (β < σ + τ); the error carries
/// the solved β so callers can still inspect the defining equation.
pub fn choose_beta(params: &WeightParams, data_hnorm: f64) -> Result<f64> {
    if !(data_hnorm > 0.0 && data_hnorm < 1.0) {
        return Err(Error::Domain(format!(
            "data norm must lie in (0,1), got {data_hnorm}"
        )));
    }
    let tau = params.tau();
    let y = lambda_inv(params.lambda, data_hnorm.ln() / tau)?;
    let beta = tau * y;
    let required = params.sigma() + tau;
    if beta < required {
        return Err(Error::DataTooLarge {
            data_hnorm,
            beta_solved: beta,
            required,
        });
    }
    Ok(beta)
}

/// Relative residual of the β defining equation, in log form:
/// |exp(-β Φ_λ(τ/β) + log ρ) - 1|.
pub fn beta_defining_residual(lambda: f64, tau: f64, beta: f64, data_hnorm: f64) -> Result<f64> {
    let log_lhs = -beta * phi(lambda, tau / beta)?;
    Ok((log_lhs + data_hnorm.ln()).exp_m1().abs())
}
