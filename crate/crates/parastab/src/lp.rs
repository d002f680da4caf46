//! Littlewood-Paley decomposition: the cutoff χ, smoothing operators S_k,
//! dyadic blocks Δ_k, and the dyadic Sobolev / Lipschitz characterizations.
//!
//! The cutoff is the fixed bump
//!   χ(s) = g((19/10 - |s|)/(19/10 - 11/10)),
//!   g(t) = h(t)/(h(t) + h(1-t)),  h(t) = exp(-1/t) for t > 0, else 0,
//! which is smooth, even, ≡ 1 on |s| ≤ 11/10 and ≡ 0 on |s| ≥ 19/10.
//! Block k ≥ 1 of a grid field is then supported in the annulus
//! (11/10)·2^{k-1} ≤ |ξ| ≤ (19/10)·2^k, block 0 in |ξ| ≤ 19/10.

use crate::error::{Error, Result};
use crate::grid::Field;

pub const PLATEAU_EDGE: f64 = 11.0 / 10.0;
pub const SUPPORT_EDGE: f64 = 19.0 / 10.0;

fn bump_h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// The smooth cutoff: 1 on |s| ≤ 11/10, 0 on |s| ≥ 19/10, monotone between.
pub fn chi(s: f64) -> f64 {
    let t = (SUPPORT_EDGE - s.abs()) / (SUPPORT_EDGE - PLATEAU_EDGE);
    if t >= 1.0 {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    let ht = bump_h(t);
    (ht / (ht + bump_h(1.0 - t))).clamp(0.0, 1.0)
}

/// χ_k(ξ) = χ(2^{-k} |ξ|).
pub fn chi_k(k: i64, xi: i64) -> f64 {
    chi(xi.abs() as f64 / (k as f64).exp2())
}

/// Smoothing operator S_k: S_{-1} = 0, S_k = χ_k(D) for k ≥ 0.
pub fn s_op(k: i64, f: &Field) -> Result<Field> {
    let k_max = f.grid().k_max() as i64;
    if k < -1 || k > k_max {
        return Err(Error::Domain(format!("s_op index {k} outside [-1, {k_max}]")));
    }
    if k == -1 {
        return Ok(Field::zeros(f.grid()));
    }
    Ok(f.apply_multiplier(|xi| chi_k(k, xi)))
}

/// Dyadic block Δ_k: Δ_0 = S_0, Δ_k = S_k - S_{k-1} for k ≥ 1.
pub fn delta_op(k: usize, f: &Field) -> Result<Field> {
    let k_max = f.grid().k_max();
    if k > k_max {
        return Err(Error::Domain(format!("block index {k} > k_max {k_max}")));
    }
    let k = k as i64;
    if k == 0 {
        Ok(f.apply_multiplier(|xi| chi_k(0, xi)))
    } else {
        Ok(f.apply_multiplier(|xi| chi_k(k, xi) - chi_k(k - 1, xi)))
    }
}

/// The dyadic pieces {Δ_k f} plus the truncation residual above them.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub blocks: Vec<Field>,
    pub k_max: usize,
    pub residual: Field,
}

impl BlockDecomposition {
    /// Σ_k Δ_k f + residual, which reproduces the original field.
    pub fn reassemble(&self) -> Field {
        let mut acc = Field::zeros(self.residual.grid());
        for b in &self.blocks {
            acc = acc.add(b);
        }
        acc.add(&self.residual)
    }
}

/// Splits f into blocks k = 0..=k_max with an explicit residual.
pub fn decompose(f: &Field) -> BlockDecomposition {
    let k_max = f.grid().k_max();
    let blocks: Vec<Field> = (0..=k_max)
        .map(|k| delta_op(k, f).expect("k within range"))
        .collect();
    let mut partial = Field::zeros(f.grid());
    for b in &blocks {
        partial = partial.add(b);
    }
    // On a grid S_{k_max} is the identity (χ = 1 on every resolved ξ), so
    // the residual is rounding-level; kept explicit so completeness is an
    // assertable identity rather than an assumption.
    let residual = f.sub(&partial);
    BlockDecomposition {
        blocks,
        k_max,
        residual,
    }
}

/// Annulus bounds for block k: support of Δ_k on the |ξ| axis.
pub fn annulus(k: usize) -> (f64, f64) {
    if k == 0 {
        (0.0, SUPPORT_EDGE)
    } else {
        (
            PLATEAU_EDGE * ((k - 1) as f64).exp2(),
            SUPPORT_EDGE * (k as f64).exp2(),
        )
    }
}

/// Largest spectral magnitude of `block` outside the annulus of index k,
/// and the largest inside. Support leakage is their ratio.
pub fn annulus_leakage(block: &Field, k: usize) -> (f64, f64) {
    let (lo, hi) = annulus(k);
    let grid = block.grid();
    let mut outside: f64 = 0.0;
    let mut inside: f64 = 0.0;
    for (idx, z) in block.spectrum().iter().enumerate() {
        let a = grid.frequency(idx).abs() as f64;
        if a < lo || a > hi {
            outside = outside.max(z.norm());
        } else {
            inside = inside.max(z.norm());
        }
    }
    (outside, inside)
}

/// ‖∂_x block‖_{L²} / ‖block‖_{L²}; for block = Δ_ν f this lies in
/// [2^{ν-1}, 2^{ν+1}] (ν ≥ 1).
pub fn bernstein_ratio(block: &Field) -> Result<f64> {
    let denom = block.l2_norm();
    if denom == 0.0 {
        return Err(Error::ZeroBlock);
    }
    Ok(block.derivative(1)?.l2_norm() / denom)
}

/// ℓ² norm of the weighted block norms {2^{kσ} ‖Δ_k f‖_{L²}}.
pub fn dyadic_sobolev_norm(f: &Field, sigma: f64) -> Result<f64> {
    if sigma.abs() > 2.0 {
        return Err(Error::Domain(format!("dyadic index {sigma} outside [-2, 2]")));
    }
    let decomp = decompose(f);
    Ok(dyadic_norm_of_blocks(&decomp.blocks, sigma))
}

/// Same weighted ℓ² norm from an existing block list.
pub fn dyadic_norm_of_blocks(blocks: &[Field], sigma: f64) -> f64 {
    blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let d = (k as f64 * sigma).exp2() * b.l2_norm();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Dyadic Lipschitz profile of a sampled function:
/// {2^k ‖Δ_k a‖_{L∞}}_{k ≥ 1} and {‖∂_x S_k a‖_{L∞}}_{k ≥ 0}.
/// Both stay bounded by a multiple of the Lipschitz constant.
pub fn lip_dyadic_profile(a: &Field) -> (Vec<f64>, Vec<f64>) {
    let k_max = a.grid().k_max();
    let block_sup = (1..=k_max)
        .map(|k| {
            (k as f64).exp2()
                * delta_op(k, a)
                    .expect("k within range")
                    .linf_norm()
        })
        .collect();
    let grad_sup = (0..=k_max as i64)
        .map(|k| {
            s_op(k, a)
                .expect("k within range")
                .derivative(1)
                .expect("order 1")
                .linf_norm()
        })
        .collect();
    (block_sup, grad_sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random_band_limited, random_field, PeriodicGrid};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn chi_plateau_and_support_are_exact() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(1.1), 1.0);
        assert_eq!(chi(-1.05), 1.0);
        assert_eq!(chi(1.9), 0.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(-3.0), 0.0);
    }

    #[test]
    fn chi_midpoint_regression_value() {
        // t = (1.9-1.5)/0.8 = 1/2, where g(1/2) = 1/2 exactly.
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(chi(1.5), chi(-1.5));
    }

    #[test]
    fn chi_monotone_and_bounded_on_transition() {
        let mut prev = 1.0;
        for i in 0..=800 {
            let s = 1.1 + 0.8 * i as f64 / 800.0;
            let v = chi(s);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-15, "not nonincreasing at s={s}");
            prev = v;
        }
    }

    #[test]
    fn s_minus_one_is_zero() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_field(g, &mut rng);
        assert_eq!(s_op(-1, &f).unwrap().linf_norm(), 0.0);
    }

    #[test]
    fn s_zero_keeps_low_modes() {
        let g = grid(64);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_band_limited(g, 1, &mut rng);
        let sf = s_op(0, &f).unwrap();
        assert!(sf.sub(&f).linf_norm() < 1e-12 * f.linf_norm().max(1.0));
    }

    #[test]
    fn s_three_kills_mode_sixteen() {
        let g = grid(128);
        let f = Field::single_mode(g, 16, 1.0).unwrap();
        assert!(s_op(3, &f).unwrap().linf_norm() < 1e-13); // 16/8 = 2 ≥ 19/10
    }

    #[test]
    fn constant_lives_in_block_zero_only() {
        let g = grid(64);
        let f = Field::constant(g, 4.0).unwrap();
        let d0 = delta_op(0, &f).unwrap();
        assert!(d0.sub(&f).linf_norm() < 1e-12);
        for k in 1..=g.k_max() {
            assert!(delta_op(k, &f).unwrap().linf_norm() < 1e-13);
        }
    }

    #[test]
    fn power_of_two_mode_hits_its_own_block() {
        let g = grid(256);
        for nu in 2..=5usize {
            let f = Field::single_mode(g, 1 << nu, 1.0).unwrap();
            for k in 0..=g.k_max() {
                let norm = delta_op(k, &f).unwrap().l2_norm();
                if k == nu {
                    // χ_ν(2^ν) = χ(1) = 1 and χ_{ν-1}(2^ν) = χ(2) = 0
                    assert!((norm - f.l2_norm()).abs() < 1e-12);
                } else {
                    // spec allows {ν, ν+1}; the fixed χ collapses it to {ν}
                    assert!(norm < 1e-13, "nu={nu} leaked into k={k}");
                }
            }
        }
    }

    #[test]
    fn decompose_zero_field() {
        let g = grid(64);
        let d = decompose(&Field::zeros(g));
        for b in &d.blocks {
            assert_eq!(b.linf_norm(), 0.0);
        }
        assert_eq!(d.residual.linf_norm(), 0.0);
    }

    #[test]
    fn two_tone_field_energy_lands_in_expected_annuli() {
        let g = grid(512);
        let f = Field::from_fn(g, |x| x.sin() + (100.0 * x).sin()).unwrap();
        let d = decompose(&f);
        // ξ=1 belongs to annulus 0; ξ=100 straddles annuli 6 and 7.
        let mut occupied = vec![];
        for (k, b) in d.blocks.iter().enumerate() {
            if b.l2_norm() > 1e-10 {
                occupied.push(k);
            }
        }
        assert_eq!(occupied, vec![0, 6, 7]);
        // The two straddling blocks recombine to the full high tone.
        let e67 = d.blocks[6].add(&d.blocks[7]).l2_norm().powi(2);
        assert!((e67 - 0.5).abs() < 1e-10); // ‖sin(100x)‖² = 1/2
        assert!((d.blocks[0].l2_norm().powi(2) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn completeness_over_random_fields() {
        let g = grid(256);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let f = random_field(g, &mut rng);
            let d = decompose(&f);
            let err = d.reassemble().sub(&f).l2_norm();
            assert!(err <= 1e-10 * f.l2_norm());
        }
    }

    #[test]
    fn annulus_support_is_sharp() {
        let g = grid(256);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_field(g, &mut rng);
        for k in 0..=g.k_max() {
            let b = delta_op(k, &f).unwrap();
            let (outside, inside) = annulus_leakage(&b, k);
            assert!(outside <= 1e-12 * inside.max(1e-300), "k={k}");
        }
    }

    #[test]
    fn bernstein_single_mode_is_exact() {
        let g = grid(256);
        for nu in 2..=6usize {
            let f = Field::single_mode(g, 1 << nu, 1.0).unwrap();
            let block = delta_op(nu, &f).unwrap();
            let r = bernstein_ratio(&block).unwrap();
            assert!((r - (nu as f64).exp2()).abs() < 1e-10);
        }
    }

    #[test]
    fn bernstein_bounds_hold_for_random_blocks() {
        let g = grid(256);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let f = random_field(g, &mut rng);
            for nu in 1..=g.k_max() {
                let block = delta_op(nu, &f).unwrap();
                let r = bernstein_ratio(&block).unwrap();
                let lo = ((nu - 1) as f64).exp2();
                let hi = ((nu + 1) as f64).exp2();
                assert!(r >= lo && r <= hi, "nu={nu} ratio={r}");
            }
        }
    }

    #[test]
    fn bernstein_lower_edge_mode() {
        // Mode at the annulus lower edge: ratio ≈ 0.625·2^ν, still ≥ 2^{ν-1}.
        let g = grid(256);
        let nu = 3usize;
        let xi = (1.1f64 * 4.0).ceil() as i64; // 5
        let f = Field::single_mode(g, xi, 1.0).unwrap();
        let block = delta_op(nu, &f).unwrap();
        let r = bernstein_ratio(&block).unwrap();
        assert!((r - xi as f64).abs() < 1e-10);
        assert!(r >= ((nu - 1) as f64).exp2());
    }

    #[test]
    fn zero_block_is_rejected() {
        let g = grid(64);
        let f = Field::zeros(g);
        assert!(matches!(
            bernstein_ratio(&delta_op(3, &f).unwrap()),
            Err(Error::ZeroBlock)
        ));
    }

    #[test]
    fn dyadic_norm_of_zero_field() {
        let g = grid(64);
        assert_eq!(dyadic_sobolev_norm(&Field::zeros(g), 0.7).unwrap(), 0.0);
    }

    #[test]
    fn dyadic_norm_equivalent_to_direct_at_zero() {
        let g = grid(256);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let f = random_field(g, &mut rng);
            let dyadic = dyadic_sobolev_norm(&f, 0.0).unwrap();
            let direct = f.sobolev_norm_direct(0.0).unwrap();
            let ratio = dyadic / direct;
            assert!((0.5..=1.5).contains(&ratio), "ratio={ratio}");
        }
    }

    #[test]
    fn dyadic_norm_single_mode_within_bernstein_window() {
        let g = grid(256);
        let nu = 5usize;
        let f = Field::single_mode(g, 1 << nu, 1.0).unwrap();
        let dyadic = dyadic_sobolev_norm(&f, 1.0).unwrap();
        let l2 = f.l2_norm();
        // Single-block field: 2^{νσ}‖f‖, between 2^{ν-1}‖f‖ and 2^{ν+1}‖f‖.
        assert!(dyadic >= 0.5 * (nu as f64).exp2() * l2);
        assert!(dyadic <= 2.0 * (nu as f64).exp2() * l2);
    }

    #[test]
    fn synthesis_from_modified_block_sequence() {
        // Rebuild a field from sign-flipped, rescaled blocks: the dyadic
        // norm of the synthesized field stays equivalent to the weighted
        // block-sequence norm (the synthesis direction of the dyadic
        // characterization).
        let g = grid(256);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_field(g, &mut rng);
        let d = decompose(&f);
        let sigma = 0.7;
        let mut synthesized = Field::zeros(g);
        let mut seq_norm_sq = 0.0;
        for (k, b) in d.blocks.iter().enumerate() {
            let c_k = if k % 2 == 0 { 1.0 } else { -0.5 };
            let piece = b.scale(c_k);
            seq_norm_sq += ((k as f64 * sigma).exp2() * piece.l2_norm()).powi(2);
            synthesized = synthesized.add(&piece);
        }
        let seq_norm = seq_norm_sq.sqrt();
        let direct = synthesized.sobolev_norm_direct(sigma).unwrap();
        // Blocks overlap only with neighbors, so the equivalence constant
        // stays within the frozen dyadic/direct envelope squared.
        let c = crate::calibration::SOBOLEV_EQUIV_C_POS * 2.0;
        assert!(direct <= c * seq_norm, "direct {direct} vs seq {seq_norm}");
        assert!(direct >= seq_norm / c, "direct {direct} vs seq {seq_norm}");
    }

    #[test]
    fn almost_orthogonality_of_separated_blocks() {
        let g = grid(256);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_field(g, &mut rng);
        let d = decompose(&f);
        let scale = f.l2_norm().powi(2);
        for j in 0..=d.k_max {
            for k in 0..=d.k_max {
                if j + 2 <= k || k + 2 <= j {
                    let ip = d.blocks[j].inner(&d.blocks[k]).abs();
                    assert!(ip <= 1e-12 * scale, "j={j} k={k} ip={ip}");
                }
            }
        }
    }

    #[test]
    fn lip_profile_of_constant_is_tiny() {
        let g = grid(256);
        let a = Field::constant(g, 2.0).unwrap();
        let (blocks, grads) = lip_dyadic_profile(&a);
        assert!(blocks.iter().all(|v| *v < 1e-10));
        assert!(grads.iter().all(|v| *v < 1e-10));
    }

    #[test]
    fn lip_profile_of_sine_is_flat() {
        let g = grid(256);
        let a = Field::from_fn(g, |x| x.sin()).unwrap();
        let (blocks, grads) = lip_dyadic_profile(&a);
        // Lipschitz constant 1: both profiles stay below the frozen C·L.
        let c = crate::calibration::LIP_PROFILE_C;
        assert!(blocks.iter().cloned().fold(0.0f64, f64::max) <= c);
        assert!(grads.iter().cloned().fold(0.0f64, f64::max) <= c);
        let tail = blocks[blocks.len() / 2..]
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        assert!(tail <= 1e-6, "high blocks of a smooth symbol must vanish");
    }

    #[test]
    fn lip_profile_scales_linearly_with_the_constant() {
        // Smooth sawtooth approximation and its 5x rescale.
        let g = grid(256);
        let saw = |x: f64| {
            (1..=8)
                .map(|m| {
                    let m = m as f64;
                    (if m as i64 % 2 == 1 { 1.0 } else { -1.0 }) * (m * x).sin() / m
                })
                .sum::<f64>()
        };
        let a1 = Field::from_fn(g, saw).unwrap();
        let a5 = a1.scale(5.0);
        let (b1, g1) = lip_dyadic_profile(&a1);
        let (b5, g5) = lip_dyadic_profile(&a5);
        let sup = |v: &[f64]| v.iter().cloned().fold(0.0f64, f64::max);
        assert!((sup(&b5) / sup(&b1) - 5.0).abs() < 1e-10);
        assert!((sup(&g5) / sup(&g1) - 5.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_completeness(seed in 0u64..10_000) {
            let g = grid(128);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_field(g, &mut rng);
            let d = decompose(&f);
            prop_assert!(d.reassemble().sub(&f).l2_norm() <= 1e-10 * f.l2_norm());
        }

        #[test]
        fn prop_bernstein(seed in 0u64..10_000, nu in 1usize..6) {
            let g = grid(128);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_field(g, &mut rng);
            let block = delta_op(nu, &f).unwrap();
            let r = bernstein_ratio(&block).unwrap();
            prop_assert!(r >= ((nu - 1) as f64).exp2());
            prop_assert!(r <= ((nu + 1) as f64).exp2());
        }
    }
}
