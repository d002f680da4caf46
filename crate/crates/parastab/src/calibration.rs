//! Frozen calibration constants for the inequality checks.
//!
//! None of the inequalities verified here come with explicit constants;
//! only existence is known. The protocol is calibrate-freeze-validate:
//!
//! 1. each constant was fitted once on a calibration sweep (seeds 1000+,
//!    grids n = 256 and n = 1024) as the smallest value making the
//!    inequality hold on every calibration sample;
//! 2. a safety factor (1.5x unless noted) was applied and the result
//!    frozen below;
//! 3. the test suites assert the inequalities with these frozen values on
//!    disjoint seeds and on a second grid size.
//!
//! A constant drifting past its frozen value on new seeds is a real
//! regression signal, not a tolerance to bump casually. The `calibrate`
//! test target (run with --ignored --nocapture) reprints the fitted
//! values for audit.

/// ‖T_a^m u‖_{H^s} ≤ C ‖a‖_{L∞} ‖u‖_{H^s}, s = 0.5, m = 3.
pub const MAPPING_C: f64 = 1.2; // fitted 0.77

/// ‖a u - T_a^m u‖_{H^{1-s}} ≤ C ‖a‖_Lip ‖u‖_{H^{-s}}, s = 0.5, m = 3.
pub const REMAINDER_SMOOTHING_C: f64 = 1.5; // fitted 0.95

/// ‖(T_a^m - (T_a^m)*) ∂_x u‖_{L²} ≤ C ‖a‖_Lip ‖u‖_{L²}, m = 3.
pub const ADJOINT_C: f64 = 1.1; // fitted 0.71

/// sup over (ν, μ) of 2^{ν(1-s')} ‖Δ_ν Ω₁ u_μ‖ / ‖u_μ‖, s' = 0.4, m = 3.
pub const OMEGA1_PROFILE_C: f64 = 0.6; // fitted 0.37

/// sup over (ν, μ) of 2^{μ} ‖Δ_ν Ω₂ u_μ‖ / (‖a‖_Lip ‖u_μ‖), m = 3.
pub const OMEGA2_PROFILE_C: f64 = 2.0; // fitted 1.32

/// Σ_ν 2^{-2(s+αt)ν} ‖∂_x [Δ_ν, T_a^m] ∂_x w‖² ≤ C ‖a‖²_Lip Σ_ν 2^{2ν}‖v_ν‖².
pub const COMMUTATOR_NORM_C: f64 = 5.2; // fitted 3.40

/// |Σ_ν 2^{-2(s+αt)ν} ν ⟨∂_x v_ν, [Δ_ν, T_a^m] ∂_x w⟩| ≤ C ‖a‖_Lip Σ_ν 2^{2ν}‖v_ν‖².
pub const COMMUTATOR_PAIRING_C: f64 = 0.002; // fitted 7e-4 (3x margin)

/// Uniform-in-ν bound on ‖[Δ_ν, b]∂_x w‖ / (‖∂_x b‖_∞ ‖w‖) (Coifman-Meyer).
pub const CM_RATIO_MAX: f64 = 2.6; // fitted 1.70

/// ‖(T_a^m - T_{a_ε}^m) u‖ ≤ C A_LL ε(|log ε| + 1) ‖u‖ on the loglip family.
pub const APPROX_C: f64 = 5.0;

/// Pairing bound constant C_s of the microlocalized remainder inequality,
/// s = 0.5, N = 4. The calibration sweep needed no positive C (the
/// dissipation term alone covers the pairing on manufactured runs); the
/// frozen value is a floor, not a fitted maximum.
pub const REMAINDER_PAIRING_C: f64 = 0.01; // fitted 0.0

/// Dyadic/direct Sobolev norm equivalence: ratio confined to
/// [1/C, C] for each tested index σ. Fitted per σ.
pub const SOBOLEV_EQUIV_C_NEG_HALF: f64 = 1.3; // fitted 1.09
pub const SOBOLEV_EQUIV_C_ZERO: f64 = 1.3; // fitted 1.11
pub const SOBOLEV_EQUIV_C_POS: f64 = 1.3; // fitted 1.12

/// Dyadic Lipschitz profile bound: both profile sups ≤ C · L.
pub const LIP_PROFILE_C: f64 = 1.5; // fitted 1.00

/// inf_{window} ‖u‖²_{H¹} ≤ (C/σ) sup_{window} ‖u‖²_{L²} on manufactured
/// runs (window [5σ/8, 7σ/8]).
pub const INTERIOR_H1_C: f64 = 1.05; // fitted 0.70

/// Single frozen constant of the weighted energy inequality across the
/// validation suite (two families, two grids, two dt, p-sweep) at
/// (s, λ, α, β, γ) = (0.5, 2, 1, 0.75, 1). The weight at λ = 2 makes the
/// data term dominate, so the minimal M is far below 1 and scales
/// linearly with dt; the frozen value covers the calibration maximum
/// (3.9e-17) with a 2.5x margin for datums whose lowest surviving mode
/// is 1 or 2 (the class both suites draw from).
pub const ENERGY_M: f64 = 1e-16;

/// Cancellation quality of the transformed-equation residual, relative to
/// the stiffness budget (ψ_max dt)².
pub const TRANSFORM_RESIDUAL_C: f64 = 0.06; // fitted 0.037

/// Calibration seeds (validation suites must not reuse these).
pub const CALIBRATION_SEEDS: [u64; 5] = [1000, 1001, 1002, 1003, 1004];
