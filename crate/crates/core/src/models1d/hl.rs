use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Carrier, Model1DState, ModelKind};
use crate::error::{Error, Result};
use crate::quadrature::{trapezoid_uniform, Estimate};
use crate::spectral1d::{
    dealias, hilbert_transform, periodic_bs_velocity, spectral_derivative, PeriodicGrid1D,
    SpectralField1D,
};

/// `(-u ω_x + θ_x, -u θ_x)` with `u` from the log-sine law; both dealiased.
pub fn hl_rhs(
    omega: &SpectralField1D,
    theta: &SpectralField1D,
) -> Result<(SpectralField1D, SpectralField1D)> {
    omega.same_grid(theta)?;
    let u = periodic_bs_velocity(omega)?;
    let wx = spectral_derivative(omega)?;
    let tx = spectral_derivative(theta)?;
    let n = omega.values().len();
    let (u, wx, tx) = (u.values(), wx.values(), tx.values());
    let dw: Vec<f64> = (0..n).map(|j| -u[j] * wx[j] + tx[j]).collect();
    let dt: Vec<f64> = (0..n).map(|j| -u[j] * tx[j]).collect();
    Ok((
        dealias(&SpectralField1D::from_values(omega.grid(), dw)?)?,
        dealias(&SpectralField1D::from_values(omega.grid(), dt)?)?,
    ))
}

/// Blow-up data: `ω₀ = sin(2πx/L)`, `θ₀ = A (1 - cos(2πx/L)) / 2`.
pub fn hl_initial_state(grid: &PeriodicGrid1D, amplitude: f64) -> Result<Model1DState> {
    let k = 2.0 * PI / grid.length();
    let omega = grid.nodes().iter().map(|x| (k * x).sin()).collect();
    let theta = grid.nodes().iter().map(|x| 0.5 * amplitude * (1.0 - (k * x).cos())).collect();
    let mut state =
        Model1DState::new(ModelKind::Hl, Carrier::Periodic(grid.clone()), omega, Some(theta))?;
    state.symmetry_enforced = true;
    state.enforce_symmetry();
    Ok(state)
}

/// `max_j |v_j - sign · v_{-j}|`: parity defect about `x = 0`.
pub fn parity_defect(values: &[f64], sign: f64) -> f64 {
    let n = values.len();
    (0..n).map(|j| (values[j] - sign * values[(n - j) % n]).abs()).fold(0.0, f64::max)
}

/// `K(x,y) = s log|(s+1)/(s-1)|` with `s = tan(μy)/tan(μx)`.
pub fn hl_kernel_k(x: f64, y: f64, grid: &PeriodicGrid1D) -> Result<f64> {
    let half = 0.5 * grid.length();
    for (name, v) in [("x", x), ("y", y)] {
        if !(v > 0.0 && v < half) {
            return Err(Error::Precondition(format!("{name} = {v} outside (0, L/2)")));
        }
    }
    let mu = grid.mu();
    let s = (mu * y).tan() / (mu * x).tan();
    if x == y || (s - 1.0).abs() < 1e-15 {
        return Err(Error::Singular(format!("K(x, y) at s = 1 (x = {x}, y = {y})")));
    }
    let log_ratio = if s > 1.0 {
        (2.0 / (s - 1.0)).ln_1p()
    } else {
        ((s + 1.0) / (1.0 - s)).ln()
    };
    Ok(s * log_ratio)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelViolation {
    pub x: f64,
    pub y: f64,
    pub property: &'static str,
    pub value: f64,
}

/// Outcome of the random sweep over kernel properties.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub samples: usize,
    pub min_k: f64,
    pub min_k_upper: f64,
    pub min_kx_upper: f64,
    pub violations: Vec<KernelViolation>,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sweeps random pairs: `K >= 0` everywhere, and on `x < y` both `K >= 2`
/// and a Richardson-extrapolated central difference `K_x >= -1e-8`.
pub fn hl_kernel_property_check(
    grid: &PeriodicGrid1D,
    samples: usize,
    seed: u64,
) -> Result<KernelReport> {
    hl_kernel_property_check_with(grid, samples, seed, hl_kernel_k)
}

/// Same sweep against an arbitrary kernel; used to exercise failure reporting.
pub fn hl_kernel_property_check_with(
    grid: &PeriodicGrid1D,
    samples: usize,
    seed: u64,
    kernel: impl Fn(f64, f64, &PeriodicGrid1D) -> Result<f64>,
) -> Result<KernelReport> {
    if samples < 100 {
        return Err(Error::Precondition(format!("samples = {samples} < 100")));
    }
    let half = 0.5 * grid.length();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = KernelReport {
        samples,
        min_k: f64::INFINITY,
        min_k_upper: f64::INFINITY,
        min_kx_upper: f64::INFINITY,
        violations: Vec::new(),
    };
    let mut taken = 0;
    while taken < samples {
        let x = rng.gen_range(0.0..half);
        let y = rng.gen_range(0.0..half);
        let gap = (x - y).abs();
        if x <= 0.0 || y <= 0.0 || gap < 1e-9 * half {
            continue;
        }
        taken += 1;
        let k = kernel(x, y, grid)?;
        report.min_k = report.min_k.min(k);
        if k < -1e-12 {
            report.violations.push(KernelViolation { x, y, property: "K >= 0", value: k });
        }
        if x < y {
            report.min_k_upper = report.min_k_upper.min(k);
            if k < 2.0 - 1e-12 {
                report.violations.push(KernelViolation { x, y, property: "K >= 2", value: k });
            }
            let h = 1e-3 * x.min(y - x).min(half - x);
            let d = |h: f64| -> Result<f64> {
                Ok((kernel(x + h, y, grid)? - kernel(x - h, y, grid)?) / (2.0 * h))
            };
            let kx = (4.0 * d(0.5 * h)? - d(h)?) / 3.0;
            report.min_kx_upper = report.min_kx_upper.min(kx);
            if kx < -1e-8 {
                report.violations.push(KernelViolation { x, y, property: "K_x >= 0", value: kx });
            }
        }
    }
    Ok(report)
}

/// Integral of uniformly spaced samples `g_j = g(jh)`, `j = 0..=m`, over
/// `[a, mh]`; `g_a` is the integrand at `a`.
pub(crate) fn tail_integral(samples: &[f64], h: f64, a: f64, g_a: f64) -> Estimate {
    let m = samples.len() - 1;
    let end = m as f64 * h;
    if a >= end {
        return Estimate { value: 0.0, error: 0.0 };
    }
    let i = ((a / h).ceil() as usize).min(m);
    let body = if m > i {
        trapezoid_uniform(&samples[i..], h)
    } else {
        Estimate { value: 0.0, error: 0.0 }
    };
    let w = i as f64 * h - a;
    let partial = 0.5 * w * (g_a + samples[i]);
    let curvature = if i >= 1 && i < m {
        (samples[i + 1] - 2.0 * samples[i] + samples[i - 1]).abs() / (h * h)
    } else {
        0.0
    };
    Estimate { value: body.value + partial, error: body.error + w.powi(3) * curvature / 12.0 }
}

/// `∫_a^{L/2} ω [u cot(μx)]_x dx` with `u` from the log-sine law. Requires
/// `ω` odd and nonnegative on `[0, L/2]`.
pub fn hl_positivity_integral(omega: &SpectralField1D, a: f64) -> Result<Estimate> {
    let grid = omega.grid();
    let n = grid.n();
    let half = 0.5 * grid.length();
    if !(0.0..=half).contains(&a) {
        return Err(Error::Precondition(format!("a = {a} outside [0, L/2]")));
    }
    let scale = omega.max_abs();
    if parity_defect(omega.values(), -1.0) > 1e-10 * scale.max(1.0) {
        return Err(Error::Precondition("omega is not odd about x = 0".into()));
    }
    if omega.values()[..=n / 2].iter().any(|&v| v < -1e-12 * scale) {
        return Err(Error::Precondition("omega negative on [0, L/2]".into()));
    }
    let u = periodic_bs_velocity(omega)?;
    let ux = hilbert_transform(omega)?;
    let mu = grid.mu();
    let integrand = |x: f64, w: f64, u: f64, ux: f64| -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (s, c) = (mu * x).sin_cos();
        w * (ux * c / s - mu * u / (s * s))
    };
    let samples: Vec<f64> = (0..=n / 2)
        .map(|j| integrand(grid.node(j), omega.values()[j], u.values()[j], ux.values()[j]))
        .collect();
    let g_a = integrand(a, omega.eval_at(a), u.eval_at(a), ux.eval_at(a));
    Ok(tail_integral(&samples, grid.dx(), a, g_a))
}

/// Measured constant `c₀` in `cot(μΦ) >= c₀ / Φ` on `(0, x₀]`.
pub fn c0_constant(mu: f64, x0: f64) -> f64 {
    (1..=1000)
        .map(|i| {
            let p = x0 * i as f64 / 1000.0;
            p / (mu * p).tan()
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PeriodicGrid1D {
        PeriodicGrid1D::new(256, 2.0 * PI).unwrap()
    }

    #[test]
    fn kernel_example_values() {
        let g = grid();
        let mu = g.mu();
        let x = 0.4;
        let y = ((mu * x).tan() * 3.0).atan() / mu;
        let k = hl_kernel_k(x, y, &g).unwrap();
        assert!((k - 3.0 * 2f64.ln()).abs() < 1e-12);
        let near_top = hl_kernel_k(0.3, PI - 1e-7, &g).unwrap();
        assert!((near_top - 2.0).abs() < 1e-9);
        assert!(hl_kernel_k(0.5, 0.5, &g).is_err());
        assert!(hl_kernel_k(0.0, 0.5, &g).is_err());
        assert!(hl_kernel_k(0.5, PI, &g).is_err());
    }

    #[test]
    fn kernel_swap_relation() {
        // s(y, x) = 1/s(x, y) and the log factor is invariant, so K(y, x) = K(x, y)/s²
        let g = grid();
        let (x, y) = (0.7, 1.9);
        let mu = g.mu();
        let s = (mu * y).tan() / (mu * x).tan();
        let kxy = hl_kernel_k(x, y, &g).unwrap();
        let kyx = hl_kernel_k(y, x, &g).unwrap();
        let direct = (1.0 / s) * ((1.0 / s + 1.0) / (1.0 / s - 1.0)).abs().ln();
        assert!((kyx - direct).abs() < 1e-13);
        assert!((kyx - kxy / (s * s)).abs() < 1e-12);
    }

    #[test]
    fn kernel_sweep_passes_and_detects_corruption() {
        let g = grid();
        let r = hl_kernel_property_check(&g, 2000, 7).unwrap();
        assert!(r.passed(), "{:?}", r.violations.first());
        assert!(r.min_k_upper >= 2.0);
        assert!(r.min_k >= 0.0);
        let bad = hl_kernel_property_check_with(&g, 200, 7, |x, y, g| {
            Ok(hl_kernel_k(x, y, g)? - 0.5)
        })
        .unwrap();
        assert!(!bad.passed());
        assert!(hl_kernel_property_check(&g, 10, 1).is_err());
    }

    #[test]
    fn positivity_integral_examples() {
        let g = grid();
        let zero = SpectralField1D::zeros(&g);
        assert_eq!(hl_positivity_integral(&zero, 0.3).unwrap().value, 0.0);
        let w = SpectralField1D::from_fn(&g, |x| (2.0 * g.mu() * x).sin()).unwrap();
        assert_eq!(hl_positivity_integral(&w, PI).unwrap().value, 0.0);
        let v = hl_positivity_integral(&w, PI / 2.0).unwrap();
        assert!(v.value >= -v.error, "{v:?}");
        let not_odd = SpectralField1D::from_fn(&g, |x| 1.0 + x.sin()).unwrap();
        assert!(hl_positivity_integral(&not_odd, 0.2).is_err());
        let negative = SpectralField1D::from_fn(&g, |x| -x.sin()).unwrap();
        assert!(hl_positivity_integral(&negative, 0.2).is_err());
    }

    #[test]
    fn positivity_integral_matches_closed_form_for_sine() {
        // ω = sin x, L = 2π: u = -sin x, u cot(x/2) = -2cos²(x/2),
        // [u cot]_x = sin x, so the integral over [a, π] is (π - a)/2 + sin(2a)/4.
        let g = grid();
        let w = SpectralField1D::from_fn(&g, f64::sin).unwrap();
        for &a in &[0.0, 0.4, 1.3, 2.9] {
            let v = hl_positivity_integral(&w, a).unwrap();
            let exact = 0.5 * (PI - a) + 0.25 * (2.0 * a).sin();
            assert!((v.value - exact).abs() < 1e-4, "a = {a}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn rhs_examples() {
        let g = PeriodicGrid1D::new(128, 2.0 * PI).unwrap();
        let z = SpectralField1D::zeros(&g);
        let (a, b) = hl_rhs(&z, &z).unwrap();
        assert_eq!(a.max_abs() + b.max_abs(), 0.0);
        let mu = g.mu();
        let w = SpectralField1D::from_fn(&g, |x| (2.0 * mu * x).sin()).unwrap();
        let (dw, _) = hl_rhs(&w, &z).unwrap();
        // x = L/8 is node 16
        assert!((dw.values()[16] - 0.5).abs() < 1e-13);
        let state = hl_initial_state(&g, 3.0).unwrap();
        let (dw, dt) = hl_rhs(&state.omega_field().unwrap(), &state.theta_field().unwrap()).unwrap();
        assert!(parity_defect(dw.values(), -1.0) < 1e-10);
        assert!(parity_defect(dt.values(), 1.0) < 1e-10);
        let other = PeriodicGrid1D::new(64, 2.0 * PI).unwrap();
        assert!(hl_rhs(&w, &SpectralField1D::zeros(&other)).is_err());
    }

    #[test]
    fn c0_is_x0_cot() {
        let c = c0_constant(0.5, 2.0);
        assert!((c - 2.0 / 1f64.tan()).abs() < 1e-12);
    }
}
