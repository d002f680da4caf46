//! Periodic grid, transform contract and direct Sobolev norms.
//!
//! Everything lives on the torus [0, 2π) sampled at n equispaced points,
//! n a power of two. Conventions, fixed once and used everywhere:
//!
//!   x_j   = 2π j / n
//!   û(ξ)  = Σ_j v_j e^{-i ξ x_j}           (forward: plain sum)
//!   v_j   = (1/n) Σ_ξ û(ξ) e^{+i ξ x_j}    (inverse carries 1/n)
//!   ĉ(ξ)  = û(ξ) / n                       (normalized coefficient)
//!
//! Norms use the normalized measure dx/2π, so Parseval reads
//!   ‖f‖²_{L²} = (1/n) Σ_j v_j² = Σ_ξ |ĉ(ξ)|²
//! and a constant field c has norm |c|. Integer frequencies run over
//! ξ ∈ {-n/2, …, n/2 - 1}.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::{Arc, OnceLock};

/// Equispaced periodic grid on [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    n_points: usize,
    spacing: f64,
}

pub const TORUS_LENGTH: f64 = 2.0 * std::f64::consts::PI;

impl PeriodicGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::BadGridSize(n_points));
        }
        Ok(Self {
            n_points,
            spacing: TORUS_LENGTH / n_points as f64,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn point(&self, j: usize) -> f64 {
        self.spacing * j as f64
    }

    /// Integer frequency for spectrum index `k` (FFT layout).
    pub fn frequency(&self, k: usize) -> i64 {
        let n = self.n_points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Spectrum index holding integer frequency `xi`.
    pub fn index_of(&self, xi: i64) -> usize {
        let n = self.n_points as i64;
        debug_assert!(xi >= -n / 2 && xi < n / 2);
        xi.rem_euclid(n) as usize
    }

    /// Largest resolved dyadic index, log2(n) - 1.
    pub fn k_max(&self) -> usize {
        self.n_points.trailing_zeros() as usize - 1
    }
}

/// Real field on a periodic grid with a lazily cached spectrum.
#[derive(Debug, Clone)]
pub struct Field {
    grid: PeriodicGrid,
    values: Arc<Vec<f64>>,
    spectrum: Arc<OnceLock<Vec<Complex64>>>,
}

impl Field {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(grid.n_points(), values.len()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self {
            grid,
            values: Arc::new(values),
            spectrum: Arc::new(OnceLock::new()),
        })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n_points()).map(|j| f(grid.point(j))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            values: Arc::new(vec![0.0; grid.n_points()]),
            spectrum: Arc::new(OnceLock::new()),
        }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n_points()])
    }

    /// Real field with a single cosine mode: amp·cos(xi·x).
    pub fn single_mode(grid: PeriodicGrid, xi: i64, amp: f64) -> Result<Self> {
        Self::from_fn(grid, |x| amp * (xi as f64 * x).cos())
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Raw DFT coefficients û(ξ) (plain-sum convention), FFT index layout.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| forward_dft(&self.values))
    }

    /// Normalized coefficient ĉ(ξ) = û(ξ)/n at integer frequency `xi`.
    pub fn coefficient(&self, xi: i64) -> Complex64 {
        let n = self.grid.n_points() as f64;
        self.spectrum()[self.grid.index_of(xi)] / n
    }

    /// Builds a real field from raw DFT coefficients (inverse transform).
    ///
    /// The imaginary part left over by rounding is dropped; callers feed
    /// Hermitian spectra so it is at the 1e-16 level.
    pub fn from_spectrum(grid: PeriodicGrid, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.n_points() {
            return Err(Error::GridMismatch(grid.n_points(), spectrum.len()));
        }
        let values: Vec<f64> = inverse_dft(&spectrum).iter().map(|z| z.re).collect();
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("inverse transform"));
        }
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        Ok(Self {
            grid,
            values: Arc::new(values),
            spectrum: Arc::new(cache),
        })
    }

    /// Applies a real spectral multiplier ξ ↦ m(ξ).
    pub fn apply_multiplier(&self, m: impl Fn(i64) -> f64) -> Field {
        let spec = self.spectrum();
        let out: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(k, &z)| z * m(self.grid.frequency(k)))
            .collect();
        Field::from_spectrum(self.grid, out).expect("multiplier output finite")
    }

    /// Spectral derivative of the given order; spectrum × (iξ)^order.
    /// The unpaired Nyquist mode is zeroed for odd orders so the output
    /// stays real.
    pub fn derivative(&self, order: u32) -> Result<Field> {
        if order > 4 {
            return Err(Error::Domain(format!("derivative order {order} > 4")));
        }
        let n = self.grid.n_points();
        let spec = self.spectrum();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, &z) in spec.iter().enumerate() {
            let xi = self.grid.frequency(k);
            if order % 2 == 1 && k == n / 2 {
                continue; // Nyquist zeroed for odd orders
            }
            let i_xi = Complex64::new(0.0, xi as f64);
            out[k] = z * i_xi.powu(order);
        }
        Field::from_spectrum(self.grid, out)
    }

    /// L² norm in the normalized measure: ((1/n) Σ v_j²)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        let n = self.grid.n_points() as f64;
        (self.values.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
    }

    /// Grid maximum of |v_j|.
    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Inner product ⟨f, g⟩ = (1/n) Σ f_j g_j.
    pub fn inner(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid.n_points(), other.grid.n_points());
        let n = self.grid.n_points() as f64;
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n
    }

    /// Direct Sobolev norm (Σ_ξ (1+ξ²)^σ |ĉ(ξ)|²)^{1/2}.
    pub fn sobolev_norm_direct(&self, sigma: f64) -> Result<f64> {
        if !(-2.0..=2.0).contains(&sigma) {
            return Err(Error::Domain(format!("sobolev index {sigma} outside [-2, 2]")));
        }
        let n = self.grid.n_points() as f64;
        let spec = self.spectrum();
        let mut sum = 0.0;
        for (k, z) in spec.iter().enumerate() {
            let xi = self.grid.frequency(k) as f64;
            let c = z / n;
            sum += (1.0 + xi * xi).powf(sigma) * c.norm_sqr();
        }
        Ok(sum.sqrt())
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Field {
        Field::new(self.grid, self.values.iter().map(|v| c * v).collect())
            .expect("scaled field finite")
    }

    /// Pointwise product on the grid.
    pub fn mul_pointwise(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.grid.n_points(), other.grid.n_points());
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| f(*a, *b))
            .collect();
        Field::new(self.grid, values).expect("combined field finite")
    }
}

/// Forward DFT, plain-sum convention (no normalization).
pub fn forward_dft(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new()
        .plan_fft_forward(values.len())
        .process(&mut buf);
    buf
}

/// Inverse DFT with the 1/n normalization.
pub fn inverse_dft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = spectrum.len();
    let mut buf = spectrum.to_vec();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for z in &mut buf {
        *z *= scale;
    }
    buf
}

/// Uniform(-1, 1) iid values; the workhorse random input for property sweeps.
pub fn random_field<R: rand::Rng>(grid: PeriodicGrid, rng: &mut R) -> Field {
    let values = (0..grid.n_points())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Field::new(grid, values).expect("random values finite")
}

/// Random field with spectrum truncated to |ξ| ≤ max_xi.
pub fn random_band_limited<R: rand::Rng>(grid: PeriodicGrid, max_xi: i64, rng: &mut R) -> Field {
    let f = random_field(grid, rng);
    f.apply_multiplier(|xi| if xi.abs() <= max_xi { 1.0 } else { 0.0 })
}
