#![allow(dead_code)] // shared across test crates; each uses a subset

//! Dense-operator test support: spectral operators rebuilt as explicit
//! matrices from a naive O(n²) DFT, independent of the FFT fast path.

use num_complex::Complex64;
use parastab::lp::chi_k;

/// Real n×n matrix of the spectral multiplier ξ ↦ m(ξ):
/// M = (1/n) Σ_ξ m(ξ) e^{iξ(x_j - x_l)}.
pub fn multiplier_matrix(n: usize, m: &dyn Fn(i64) -> Complex64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]; n];
    let h = 2.0 * std::f64::consts::PI / n as f64;
    for j in 0..n {
        for l in 0..n {
            let d = h * (j as f64 - l as f64);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let xi = if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
                acc += m(xi) * Complex64::new(0.0, xi as f64 * d).exp();
            }
            out[j][l] = acc.re / n as f64;
        }
    }
    out
}

pub fn s_matrix(n: usize, k: i64) -> Vec<Vec<f64>> {
    if k < 0 {
        return vec![vec![0.0; n]; n];
    }
    multiplier_matrix(n, &|xi| Complex64::new(chi_k(k, xi), 0.0))
}

pub fn delta_matrix(n: usize, k: usize) -> Vec<Vec<f64>> {
    if k == 0 {
        s_matrix(n, 0)
    } else {
        multiplier_matrix(n, &|xi| {
            Complex64::new(chi_k(k as i64, xi) - chi_k(k as i64 - 1, xi), 0.0)
        })
    }
}

/// Spectral derivative with the Nyquist mode zeroed.
pub fn derivative_matrix(n: usize) -> Vec<Vec<f64>> {
    multiplier_matrix(n, &|xi| {
        if xi == -(n as i64) / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi as f64)
        }
    })
}

pub fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn diag(values: &[f64]) -> Vec<Vec<f64>> {
    let n = values.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        out[i][i] = values[i];
    }
    out
}

pub fn add_into(acc: &mut [Vec<f64>], m: &[Vec<f64>]) {
    for (ra, rm) in acc.iter_mut().zip(m) {
        for (a, b) in ra.iter_mut().zip(rm) {
            *a += b;
        }
    }
}

/// T_a^m as a dense matrix, every factor built from the naive DFT.
pub fn paraproduct_matrix(a_values: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = a_values.len();
    let k_max = n.trailing_zeros() as usize - 1;
    let low_a = matvec(&s_matrix(n, m as i64 - 1), a_values);
    let mut t = matmul(&diag(&low_a), &s_matrix(n, m as i64 + 2));
    for k in (m + 3)..=k_max {
        let sa = matvec(&s_matrix(n, k as i64 - 3), a_values);
        add_into(&mut t, &matmul(&diag(&sa), &delta_matrix(n, k)));
    }
    t
}

pub fn l2(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// ‖[Δ_ν, b·] ∂_x w‖ / (‖∂_x b‖_∞ ‖w‖) computed entirely with dense
/// matrices.
pub fn dense_cm_ratio(nu: usize, b_values: &[f64], grad_b_sup: f64, w_values: &[f64]) -> f64 {
    let n = b_values.len();
    let d_nu = delta_matrix(n, nu);
    let b_diag = diag(b_values);
    let dw = matvec(&derivative_matrix(n), w_values);
    let left = matvec(&d_nu, &matvec(&b_diag, &dw));
    let right = matvec(&b_diag, &matvec(&d_nu, &dw));
    let comm: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l - r).collect();
    l2(&comm) / (grad_b_sup * l2(w_values))
}
