//! Periodic 1D spectral utilities.
//!
//! Coefficients use the normalization `f_j = Σ_k c_k exp(2πi k j / n)` with
//! signed wavenumber `k ∈ (-n/2, n/2]`. The Hilbert transform is the
//! multiplier `-i sgn(k)`, so `H sin = -cos`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_finite, Error, Result};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid `x_j = j L / n` on `[0, L)`.
#[derive(Clone)]
pub struct PeriodicGrid1D {
    n: usize,
    length: f64,
    plans: Arc<Plans>,
}

impl fmt::Debug for PeriodicGrid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid1D")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for PeriodicGrid1D {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl PeriodicGrid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("period {length} must be positive")));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Self { n, length, plans: Arc::new(plans) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// `μ = π / L`, the scale of the log-sine kernel.
    pub fn mu(&self) -> f64 {
        PI / self.length
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.length / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber index of storage slot `m`.
    pub fn wavenumber(&self, m: usize) -> i64 {
        if m <= self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    fn is_nyquist(&self, m: usize) -> bool {
        m == self.n / 2
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plans.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.plans.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Real periodic samples with lazily cached transform coefficients.
#[derive(Clone)]
pub struct SpectralField1D {
    grid: PeriodicGrid1D,
    values: Vec<f64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for SpectralField1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField1D")
            .field("grid", &self.grid)
            .field("values", &self.values)
            .finish()
    }
}

impl SpectralField1D {
    pub fn from_values(grid: &PeriodicGrid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.n
            )));
        }
        check_finite(&values)?;
        Ok(Self { grid: grid.clone(), values, coeffs: OnceLock::new() })
    }

    pub fn from_fn(grid: &PeriodicGrid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(grid, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: &PeriodicGrid1D) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.n], coeffs: OnceLock::new() }
    }

    /// Builds a field from coefficients; the imaginary residue of the inverse
    /// transform is discarded.
    pub fn from_coeffs(grid: &PeriodicGrid1D, coeffs: Vec<Complex64>) -> Result<Self> {
        let values = grid.inverse(&coeffs);
        check_finite(&values)?;
        let field = Self { grid: grid.clone(), values, coeffs: OnceLock::new() };
        let _ = field.coeffs.set(coeffs);
        Ok(field)
    }

    pub fn grid(&self) -> &PeriodicGrid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| self.grid.forward(&self.values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// Discrete inner product `Σ_j f_j g_j`.
    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_values(&self.grid, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// Applies a Fourier multiplier given as a function of the signed
    /// wavenumber index. The Nyquist slot receives `nyquist` instead.
    pub fn apply_multiplier(
        &self,
        multiplier: impl Fn(i64) -> Complex64,
        nyquist: Complex64,
    ) -> Result<Self> {
        check_finite(&self.values)?;
        let coeffs = self
            .coeffs()
            .iter()
            .enumerate()
            .map(|(m, c)| {
                if self.grid.is_nyquist(m) {
                    c * nyquist
                } else {
                    c * multiplier(self.grid.wavenumber(m))
                }
            })
            .collect();
        Self::from_coeffs(&self.grid, coeffs)
    }

    /// Trigonometric interpolant evaluated at an arbitrary point.
    pub fn eval_at(&self, x: f64) -> f64 {
        let theta = 2.0 * PI * x / self.grid.length;
        let coeffs = self.coeffs();
        let half = self.grid.n / 2;
        let mut acc = coeffs[0].re;
        for (m, c) in coeffs.iter().enumerate().take(half).skip(1) {
            let (s, co) = (m as f64 * theta).sin_cos();
            // c_{-m} = conj(c_m) for real data
            acc += 2.0 * (c.re * co - c.im * s);
        }
        acc + coeffs[half].re * (half as f64 * theta).cos()
    }

    /// Fraction of the spectral l1 mass carried by modes `n/6 < |k| <= n/3`.
    /// Small values indicate a well-resolved field.
    pub fn spectral_tail(&self) -> f64 {
        let n = self.grid.n as i64;
        let (mut tail, mut total) = (0.0, 0.0);
        for (m, c) in self.coeffs().iter().enumerate() {
            let k = self.grid.wavenumber(m).abs();
            let a = c.norm();
            total += a;
            if 6 * k > n && 3 * k <= n {
                tail += a;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

/// Hilbert transform by the multiplier `-i sgn(k)`; the mean and the Nyquist
/// mode are annihilated.
pub fn hilbert_transform(f: &SpectralField1D) -> Result<SpectralField1D> {
    f.apply_multiplier(|k| Complex64::new(0.0, -(k.signum() as f64)), Complex64::new(0.0, 0.0))
}

/// `∂_x f` via `2πik/L`, Nyquist mode zeroed.
pub fn spectral_derivative(f: &SpectralField1D) -> Result<SpectralField1D> {
    let scale = 2.0 * PI / f.grid.length;
    f.apply_multiplier(|k| Complex64::new(0.0, scale * k as f64), Complex64::new(0.0, 0.0))
}

/// `u(x) = (1/π) ∫_0^L ω(y) log|sin(μ(x-y))| dy`, evaluated mode by mode from
/// `log|sin t| = -log 2 - Σ_{k>=1} cos(2kt)/k`.
pub fn periodic_bs_velocity(omega: &SpectralField1D) -> Result<SpectralField1D> {
    let length = omega.grid.length;
    let mean_factor = -length * std::f64::consts::LN_2 / PI;
    omega.apply_multiplier(
        |k| {
            if k == 0 {
                Complex64::new(mean_factor, 0.0)
            } else {
                Complex64::new(-length / (2.0 * PI * k.abs() as f64), 0.0)
            }
        },
        Complex64::new(0.0, 0.0),
    )
}

/// Velocity with `u_x = Hω` and zero mean.
pub fn zero_mean_velocity(omega: &SpectralField1D) -> Result<SpectralField1D> {
    let length = omega.grid.length;
    omega.apply_multiplier(
        |k| {
            if k == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(-length / (2.0 * PI * k.abs() as f64), 0.0)
            }
        },
        Complex64::new(0.0, 0.0),
    )
}

/// Two-thirds rule: zero every mode with `|k| > n/3`.
pub fn dealias(f: &SpectralField1D) -> Result<SpectralField1D> {
    let n = f.grid.n as i64;
    let keep = |k: i64| 3 * k.abs() <= n;
    f.apply_multiplier(
        |k| if keep(k) { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) },
        Complex64::new(0.0, 0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, length: f64) -> PeriodicGrid1D {
        PeriodicGrid1D::new(n, length).unwrap()
    }

    fn max_diff(a: &SpectralField1D, b: impl Fn(f64) -> f64) -> f64 {
        a.grid()
            .nodes()
            .iter()
            .zip(a.values())
            .map(|(&x, &v)| (v - b(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid1D::new(4, 1.0).is_err());
        assert!(PeriodicGrid1D::new(24, 1.0).is_err());
        assert!(PeriodicGrid1D::new(16, 0.0).is_err());
        let g = grid(16, 3.0);
        assert_eq!(g.node(1) - g.node(0), 3.0 / 16.0);
    }

    #[test]
    fn non_finite_rejected_with_index() {
        let g = grid(8, 1.0);
        let mut v = vec![0.0; 8];
        v[5] = f64::NAN;
        match SpectralField1D::from_values(&g, v) {
            Err(Error::NonFinite { index }) => assert_eq!(index, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hilbert_of_sine_and_cosine() {
        let l = 3.0;
        let g = grid(64, l);
        let w = 2.0 * PI / l;
        let s = SpectralField1D::from_fn(&g, |x| (w * x).sin()).unwrap();
        let c = SpectralField1D::from_fn(&g, |x| (w * x).cos()).unwrap();
        assert!(max_diff(&hilbert_transform(&s).unwrap(), |x| -(w * x).cos()) < 1e-13);
        assert!(max_diff(&hilbert_transform(&c).unwrap(), |x| (w * x).sin()) < 1e-13);
        let k = SpectralField1D::from_fn(&g, |_| 2.5).unwrap();
        assert!(hilbert_transform(&k).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn derivative_examples() {
        let l = 2.0;
        let g = grid(64, l);
        let w = 2.0 * PI / l;
        let s = SpectralField1D::from_fn(&g, |x| (w * x).sin()).unwrap();
        assert!(max_diff(&spectral_derivative(&s).unwrap(), |x| w * (w * x).cos()) < 1e-12);
        let s3 = SpectralField1D::from_fn(&g, |x| (3.0 * w * x).sin()).unwrap();
        assert!(
            max_diff(&spectral_derivative(&s3).unwrap(), |x| 3.0 * w * (3.0 * w * x).cos()) < 1e-11
        );
        let k = SpectralField1D::from_fn(&g, |_| 1.0).unwrap();
        assert!(spectral_derivative(&k).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn bs_velocity_examples() {
        let l = 5.0;
        let g = grid(128, l);
        let mu = g.mu();
        let om = SpectralField1D::from_fn(&g, |x| (2.0 * mu * x).sin()).unwrap();
        let u = periodic_bs_velocity(&om).unwrap();
        assert!(max_diff(&u, |x| -(l / (2.0 * PI)) * (2.0 * mu * x).sin()) < 1e-13);
        let c = 1.7;
        let om = SpectralField1D::from_fn(&g, |_| c).unwrap();
        let u = periodic_bs_velocity(&om).unwrap();
        let expect = -c * l * std::f64::consts::LN_2 / PI;
        assert!(max_diff(&u, |_| expect) < 1e-13);
        assert!(periodic_bs_velocity(&SpectralField1D::zeros(&g)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn bs_velocity_matches_direct_quadrature() {
        // Independent check of the log-sine convolution on a smooth field:
        // midpoint quadrature on a staggered fine grid avoids the log singularity.
        let l = 2.0 * PI;
        let g = grid(64, l);
        let mu = g.mu();
        let f = |y: f64| (y.sin() + 0.3 * (2.0 * y).cos()).exp() - 1.2;
        let om = SpectralField1D::from_fn(&g, f).unwrap();
        let u = periodic_bs_velocity(&om).unwrap();
        let x = g.node(7);
        let m = 200_000;
        let h = l / m as f64;
        let direct: f64 = (0..m)
            .map(|j| {
                let y = (j as f64 + 0.5) * h;
                f(y) * (mu * (x - y)).sin().abs().ln()
            })
            .sum::<f64>()
            * h
            / PI;
        assert!((u.values()[7] - direct).abs() < 1e-4, "{} vs {}", u.values()[7], direct);
    }

    #[test]
    fn dealias_examples() {
        let n = 64;
        let l = 1.0;
        let g = grid(n, l);
        let w = 2.0 * PI / l;
        let low = SpectralField1D::from_fn(&g, |x| (w * x).sin() + (21.0 * w * x).cos()).unwrap();
        assert!(max_diff(&dealias(&low).unwrap(), |x| (w * x).sin() + (21.0 * w * x).cos()) < 1e-12);
        let nyq = SpectralField1D::from_fn(&g, |x| (32.0 * w * x).cos()).unwrap();
        assert!(dealias(&nyq).unwrap().max_abs() < 1e-13);
        // n / 2.5 = 25.6 > n / 3: mode 25 is removed
        let mixed = SpectralField1D::from_fn(&g, |x| (w * x).sin() + (25.0 * w * x).sin()).unwrap();
        assert!(max_diff(&dealias(&mixed).unwrap(), |x| (w * x).sin()) < 1e-12);
    }

    #[test]
    fn eval_at_reproduces_band_limited_field() {
        let g = grid(32, 2.0);
        let f = |x: f64| (PI * x).sin() + 0.5 * (3.0 * PI * x).cos();
        let field = SpectralField1D::from_fn(&g, f).unwrap();
        for &x in &[0.013, 0.77, 1.5, 1.999] {
            assert!((field.eval_at(x) - f(x)).abs() < 1e-12);
        }
    }
}
