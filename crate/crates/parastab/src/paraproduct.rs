//! Bony's paraproduct and its modified version
//!   T_a^m u = S_{m-1}a · S_{m+2}u + Σ_{k ≥ m+3} S_{k-3}a · Δ_k u,
//! together with the remainder split a·u - T_a^m u = Ω₁u + Ω₂u, the
//! positivity margin that motivates the modification, the adjoint defect,
//! and the commutators [Δ_ν, T_a^m] and [Δ_ν, b·]∂_x.
//!
//! On a grid the dyadic partition is exact (S_{k_max} = identity), so
//! T_1^m = identity and the remainder identity holds to rounding; the
//! analytic content enters through the fitted-constant checks layered on
//! top in the test suites.

use crate::error::{Error, Result};
use crate::grid::{random_field, Field};
use crate::lp::{delta_op, s_op};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check_m(m: usize, f: &Field) -> Result<()> {
    let k_max = f.grid().k_max();
    if m + 3 > k_max {
        return Err(Error::Domain(format!(
            "modification parameter m = {m} exceeds k_max - 3 = {}",
            k_max as i64 - 3
        )));
    }
    Ok(())
}

/// T_a^m u per the definition above. Linear in both a and u.
pub fn modified_paraproduct(a: &Field, u: &Field, m: usize) -> Result<Field> {
    check_m(m, u)?;
    let k_max = u.grid().k_max();
    let m_i = m as i64;
    let mut acc = s_op(m_i - 1, a)?.mul_pointwise(&s_op(m_i + 2, u)?);
    for k in (m + 3)..=k_max {
        let sa = s_op(k as i64 - 3, a)?;
        acc = acc.add(&sa.mul_pointwise(&delta_op(k, u)?));
    }
    Ok(acc)
}

/// Bony's paraproduct T_a u = Σ_{k ≥ 3} S_{k-3}a Δ_k u = T_a^0 u.
pub fn bony_paraproduct(a: &Field, u: &Field) -> Result<Field> {
    modified_paraproduct(a, u, 0)
}

/// The discrete adjoint (T_a^m)*: each factor is self-adjoint (real
/// spectral multiplier, real pointwise multiplier), so the adjoint is the
/// same sum with the order of operators reversed:
///   (T_a^m)* w = S_{m+2}(S_{m-1}a · w) + Σ_{k ≥ m+3} Δ_k(S_{k-3}a · w).
pub fn paraproduct_adjoint(a: &Field, w: &Field, m: usize) -> Result<Field> {
    check_m(m, w)?;
    let k_max = w.grid().k_max();
    let m_i = m as i64;
    let low = s_op(m_i - 1, a)?.mul_pointwise(w);
    let mut acc = s_op(m_i + 2, &low)?;
    for k in (m + 3)..=k_max {
        let sa = s_op(k as i64 - 3, a)?;
        acc = acc.add(&delta_op(k, &sa.mul_pointwise(w))?);
    }
    Ok(acc)
}

/// ‖(T_a^m - (T_a^m)*) ∂_x u‖_{L²}.
pub fn adjoint_defect(a: &Field, m: usize, u: &Field) -> Result<f64> {
    let du = u.derivative(1)?;
    let forward = modified_paraproduct(a, &du, m)?;
    let adjoint = paraproduct_adjoint(a, &du, m)?;
    Ok(forward.sub(&adjoint).l2_norm())
}

fn check_remainder_m(m: usize, f: &Field) -> Result<()> {
    if m < 3 {
        return Err(Error::Domain(format!(
            "remainder decomposition requires m >= 3, got {m}"
        )));
    }
    check_m(m, f)
}

/// a·u - T_a^m u (pointwise product minus paraproduct), m ≥ 3.
pub fn remainder(a: &Field, u: &Field, m: usize) -> Result<Field> {
    check_remainder_m(m, u)?;
    Ok(a.mul_pointwise(u).sub(&modified_paraproduct(a, u, m)?))
}

/// Ω₁u = Σ_{k ≥ m} Δ_k a · S_{k-3}u.
pub fn omega1(a: &Field, u: &Field, m: usize) -> Result<Field> {
    check_remainder_m(m, u)?;
    let k_max = u.grid().k_max();
    let mut acc = Field::zeros(u.grid());
    for k in m..=k_max {
        let da = delta_op(k, a)?;
        acc = acc.add(&da.mul_pointwise(&s_op(k as i64 - 3, u)?));
    }
    Ok(acc)
}

/// Ω₂u = Σ_{k ≥ m} Σ_{j ≥ 0, |j-k| ≤ 2} Δ_k a · Δ_j u.
pub fn omega2(a: &Field, u: &Field, m: usize) -> Result<Field> {
    check_remainder_m(m, u)?;
    let k_max = u.grid().k_max();
    let mut acc = Field::zeros(u.grid());
    for k in m..=k_max {
        let da = delta_op(k, a)?;
        let j_lo = k.saturating_sub(2);
        let j_hi = (k + 2).min(k_max);
        for j in j_lo..=j_hi {
            acc = acc.add(&da.mul_pointwise(&delta_op(j, u)?));
        }
    }
    Ok(acc)
}

/// min over random trials of ⟨T_a^m u, u⟩ / ‖u‖²_{L²}.
///
/// Each trial draws a broadband field and a low-pass field (|ξ| ≤ 4); the
/// low-frequency direction is where the unmodified paraproduct loses
/// positivity, so broadband noise alone never probes it.
pub fn positivity_margin(a: &Field, m: usize, trials: usize, rng_seed: u64) -> Result<f64> {
    check_m(m, a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut margin = f64::INFINITY;
    for _ in 0..trials {
        let broadband = random_field(a.grid(), &mut rng);
        let lowpass = crate::grid::random_band_limited(a.grid(), 4, &mut rng);
        for u in [broadband, lowpass] {
            let denom = u.inner(&u);
            if denom == 0.0 {
                continue;
            }
            let tu = modified_paraproduct(a, &u, m)?;
            margin = margin.min(tu.inner(&u) / denom);
        }
    }
    Ok(margin)
}

/// Smallest m with positivity margin ≥ κ/2 across the trials, or None if
/// no m ≤ k_max - 3 achieves it on this grid.
pub fn find_m0(a: &Field, kappa: f64, trials: usize, rng_seed: u64) -> Result<Option<usize>> {
    if a.values().iter().any(|&v| v < kappa) {
        return Err(Error::Domain(format!(
            "positivity requires a >= kappa = {kappa} on the grid"
        )));
    }
    let max_m = a.grid().k_max() - 3;
    for m in 0..=max_m {
        if positivity_margin(a, m, trials, rng_seed)? >= 0.5 * kappa {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// [Δ_ν, T_a^m] u = Δ_ν(T_a^m u) - T_a^m(Δ_ν u).
pub fn commutator(nu: usize, a: &Field, m: usize, u: &Field) -> Result<Field> {
    let t_u = modified_paraproduct(a, u, m)?;
    let u_nu = delta_op(nu, u)?;
    Ok(delta_op(nu, &t_u)?.sub(&modified_paraproduct(a, &u_nu, m)?))
}

/// ‖[Δ_ν, b·] ∂_x w‖_{L²} / (‖∂_x b‖_{L∞} ‖w‖_{L²}) — the quantity the
/// Coifman-Meyer bound controls uniformly in ν.
pub fn cm_commutator_ratio(nu: usize, b: &Field, w: &Field) -> Result<f64> {
    let grad_b = b.derivative(1)?.linf_norm();
    if grad_b == 0.0 {
        return Err(Error::Domain(
            "Coifman-Meyer ratio needs a non-constant symbol (‖∂_x b‖ > 0)".into(),
        ));
    }
    let w_norm = w.l2_norm();
    if w_norm == 0.0 {
        return Err(Error::ZeroBlock);
    }
    let dw = w.derivative(1)?;
    let comm = delta_op(nu, &b.mul_pointwise(&dw))?.sub(&b.mul_pointwise(&delta_op(nu, &dw)?));
    Ok(comm.l2_norm() / (grad_b * w_norm))
}

/// Mean Coifman-Meyer ratio per block index, each probed with random
/// fields localized to the matching annulus. Averaging over draws makes
/// the ν-trend regression stable; a single draw per ν leaves the fitted
/// slope dominated by sampling noise.
pub fn cm_ratio_profile(
    b: &Field,
    nus: &[usize],
    draws_per_nu: usize,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    nus.iter()
        .map(|&nu| {
            let mut acc = 0.0;
            for _ in 0..draws_per_nu {
                let w = delta_op(nu, &random_field(b.grid(), &mut rng))?;
                acc += cm_commutator_ratio(nu, b, &w)?;
            }
            Ok(acc / draws_per_nu as f64)
        })
        .collect()
}

/// The two sides of the microlocalized remainder pairing: for
/// v_ν = 2^{-(s+αt)ν} Δ_ν w,
///   lhs = Σ_ν 2^{-(s+αt)ν} ⟨∂_x ∂_t v_ν, Δ_ν((a - T_a^m) ∂_x w)⟩
/// is controlled by (1/N) Σ_ν ‖∂_t v_ν‖² + C N Σ_ν 2^{2ν} ‖v_ν‖².
#[derive(Debug, Clone, Copy)]
pub struct AuxPairingSides {
    pub lhs: f64,
    /// Σ_ν ‖∂_t v_ν‖²
    pub dt_term: f64,
    /// Σ_ν 2^{2ν} ‖v_ν‖²
    pub block_term: f64,
    pub n_param: f64,
}

impl AuxPairingSides {
    pub fn rhs(&self, c_s: f64) -> f64 {
        self.dt_term / self.n_param + c_s * self.n_param * self.block_term
    }

    /// Smallest C making lhs ≤ rhs, given N.
    pub fn minimal_c(&self) -> f64 {
        if self.block_term == 0.0 {
            return 0.0;
        }
        ((self.lhs - self.dt_term / self.n_param) / (self.n_param * self.block_term)).max(0.0)
    }
}

/// Evaluates both sides of the pairing inequality on a snapshot (w, ∂_t w).
/// The time derivative of v_ν picks up the weight factor:
/// ∂_t v_ν = 2^{-(s+αt)ν} (Δ_ν ∂_t w - α log(2) ν Δ_ν w).
pub fn remainder_pairing_check(
    a: &Field,
    w: &Field,
    dw_dt: &Field,
    m: usize,
    s: f64,
    alpha: f64,
    t: f64,
    n_param: f64,
) -> Result<AuxPairingSides> {
    if !(n_param > 0.0) {
        return Err(Error::Domain(format!("N must be > 0, got {n_param}")));
    }
    check_remainder_m(m, w)?;
    let k_max = w.grid().k_max();
    let dw = w.derivative(1)?;
    let rem = a.mul_pointwise(&dw).sub(&modified_paraproduct(a, &dw, m)?);
    let ln2 = std::f64::consts::LN_2;
    let mut lhs = 0.0;
    let mut dt_term = 0.0;
    let mut block_term = 0.0;
    for nu in 0..=k_max {
        let weight = (-(s + alpha * t) * nu as f64).exp2();
        let w_nu = delta_op(nu, w)?;
        let v_nu = w_nu.scale(weight);
        let dt_v_nu = delta_op(nu, dw_dt)?
            .sub(&w_nu.scale(alpha * ln2 * nu as f64))
            .scale(weight);
        let pairing = dt_v_nu.derivative(1)?.inner(&delta_op(nu, &rem)?);
        lhs += weight * pairing;
        dt_term += dt_v_nu.l2_norm().powi(2);
        block_term += (2.0 * nu as f64).exp2() * v_nu.l2_norm().powi(2);
    }
    Ok(AuxPairingSides {
        lhs,
        dt_term,
        block_term,
        n_param,
    })
}

/// Weighted commutator sums of the energy proof: for v_ν as above,
///   lhs  = Σ_ν 2^{-2(s+αt)ν} ‖∂_x [Δ_ν, T_a^m] ∂_x w‖²      (squared-norm form)
///   lhs2 = Σ_ν 2^{-2(s+αt)ν} ν ⟨∂_x v_ν, [Δ_ν, T_a^m] ∂_x w⟩ (pairing form)
/// both controlled by ‖a‖²_Lip (resp. ‖a‖_Lip) times Σ_ν 2^{2ν}‖v_ν‖².
#[derive(Debug, Clone, Copy)]
pub struct CommutatorSums {
    pub weighted_norm_sq: f64,
    pub weighted_pairing: f64,
    /// Σ_ν 2^{2ν} ‖v_ν‖²
    pub block_term: f64,
}

pub fn commutator_sums(
    a: &Field,
    w: &Field,
    m: usize,
    s: f64,
    alpha_t: f64,
) -> Result<CommutatorSums> {
    check_m(m, w)?;
    let k_max = w.grid().k_max();
    let dw = w.derivative(1)?;
    let mut weighted_norm_sq = 0.0;
    let mut weighted_pairing = 0.0;
    let mut block_term = 0.0;
    for nu in 0..=k_max {
        let weight = (-(s + alpha_t) * nu as f64).exp2();
        let comm = commutator(nu, a, m, &dw)?;
        let v_nu = delta_op(nu, w)?.scale(weight);
        weighted_norm_sq += weight * weight * comm.derivative(1)?.l2_norm().powi(2);
        weighted_pairing += weight * weight * nu as f64 * v_nu.derivative(1)?.inner(&comm);
        block_term += (2.0 * nu as f64).exp2() * v_nu.l2_norm().powi(2);
    }
    Ok(CommutatorSums {
        weighted_norm_sq,
        weighted_pairing,
        block_term,
    })
}
