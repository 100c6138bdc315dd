use super::{Carrier, Model1DState, ModelKind};
use crate::error::{check_finite, Error, Result};

/// Samples on `n` uniform nodes of `[0, 1]`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalField {
    values: Vec<f64>,
}

impl IntervalField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 64 {
            return Err(Error::InvalidGrid(format!("interval field needs n >= 64, got {}", values.len())));
        }
        check_finite(&values)?;
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 1.0 / (n as f64 - 1.0);
        Self::new((0..n).map(|j| f(j as f64 * h)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.values.len() as f64 - 1.0)
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise-linear interpolant.
    pub fn interpolate(&self, x: f64) -> f64 {
        let h = self.dx();
        let s = (x / h).clamp(0.0, (self.values.len() - 1) as f64);
        let j = (s.floor() as usize).min(self.values.len() - 2);
        let w = s - j as f64;
        (1.0 - w) * self.values[j] + w * self.values[j + 1]
    }
}

/// `u(x) = -x ∫_x^1 ω(y)/y dy`.
///
/// One right-to-left pass; each cell integrates `ω/y` exactly for `ω` linear
/// on the cell, so `ω ≡ 1` reproduces `x log x` to rounding.
pub fn cky_velocity(omega: &IntervalField) -> Result<IntervalField> {
    let n = omega.len();
    let h = omega.dx();
    let w = omega.values();
    let mut u = vec![0.0; n];
    let mut acc = 0.0;
    for j in (1..n - 1).rev() {
        let (x0, x1) = (j as f64 * h, (j + 1) as f64 * h);
        let slope = (w[j + 1] - w[j]) / h;
        let intercept = w[j] - slope * x0;
        acc += intercept * (x1 / x0).ln() + slope * h;
        u[j] = -x0 * acc;
    }
    IntervalField::new(u)
}

fn derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d[1] = (v[2] - v[0]) / (2.0 * h);
    d[n - 2] = (v[n - 1] - v[n - 3]) / (2.0 * h);
    for j in 2..n - 2 {
        d[j] = (-v[j + 2] + 8.0 * v[j + 1] - 8.0 * v[j - 1] + v[j - 2]) / (12.0 * h);
    }
    d
}

/// Largest magnitude in the two cells next to either endpoint.
fn edge_level(v: &[f64]) -> f64 {
    let n = v.len();
    [v[0], v[1], v[n - 2], v[n - 1]].iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `(-u ω_x + θ_x, -u θ_x)` by finite differences (4th order interior).
/// Halts with "support hit boundary" once ω or θ_x reaches the two cells
/// next to an endpoint.
pub fn cky_rhs(omega: &IntervalField, theta: &IntervalField) -> Result<(IntervalField, IntervalField)> {
    if omega.len() != theta.len() {
        return Err(Error::GridMismatch("omega and theta lengths differ".into()));
    }
    let h = omega.dx();
    let wx = derivative(omega.values(), h);
    let tx = derivative(theta.values(), h);
    let scale_w = omega.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale_t = tx.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if edge_level(omega.values()) > 1e-12 * scale_w.max(1e-300)
        || edge_level(&tx) > 1e-12 * scale_t.max(1e-300)
    {
        return Err(Error::Halt("support hit boundary".into()));
    }
    let u = cky_velocity(omega)?;
    let u = u.values();
    let dw = (0..omega.len()).map(|j| -u[j] * wx[j] + tx[j]).collect();
    let dt = (0..omega.len()).map(|j| -u[j] * tx[j]).collect();
    Ok((IntervalField::new(dw)?, IntervalField::new(dt)?))
}

/// Compactly supported bump `exp(-1/(1 - r²))`, `r = (x - 0.5)/0.3`.
pub fn cky_bump(x: f64) -> f64 {
    let r = (x - 0.5) / 0.3;
    if r.abs() < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step from 0 (x <= 0.2) to 1 (x >= 0.8).
pub fn cky_ramp(x: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let s = (x - 0.2) / 0.6;
    let (a, b) = (f(s), f(1.0 - s));
    a / (a + b)
}

/// Bump vorticity with a ramp density of height `amplitude`.
pub fn cky_initial_state(n: usize, amplitude: f64) -> Result<Model1DState> {
    let omega = IntervalField::from_fn(n, cky_bump)?.into_values();
    let theta = IntervalField::from_fn(n, |x| amplitude * cky_ramp(x))?.into_values();
    Model1DState::new(ModelKind::Cky, Carrier::Interval(n), omega, Some(theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_of_constant_is_x_log_x() {
        let w = IntervalField::from_fn(4097, |_| 1.0).unwrap();
        let u = cky_velocity(&w).unwrap();
        let err = (0..w.len())
            .map(|j| {
                let x = w.node(j);
                let exact = if x > 0.0 { x * x.ln() } else { 0.0 };
                (u.values()[j] - exact).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        let e = (-1f64).exp();
        assert!((u.interpolate(e) + e).abs() < 1e-6);
    }

    #[test]
    fn velocity_zero_and_outside_support() {
        let z = IntervalField::from_fn(128, |_| 0.0).unwrap();
        assert!(cky_velocity(&z).unwrap().values().iter().all(|&v| v == 0.0));
        let w = IntervalField::from_fn(257, cky_bump).unwrap();
        let u = cky_velocity(&w).unwrap();
        for j in 0..w.len() {
            if w.node(j) > 0.8 {
                assert_eq!(u.values()[j], 0.0);
            }
        }
    }

    #[test]
    fn rhs_examples() {
        let n = 257;
        let z = IntervalField::from_fn(n, |_| 0.0).unwrap();
        let (a, b) = cky_rhs(&z, &z).unwrap();
        assert!(a.values().iter().chain(b.values()).all(|&v| v == 0.0));

        let w = IntervalField::from_fn(n, cky_bump).unwrap();
        let c = IntervalField::from_fn(n, |_| 2.0).unwrap();
        let (dw, dt) = cky_rhs(&w, &c).unwrap();
        assert!(dt.values().iter().all(|&v| v == 0.0));
        let u = cky_velocity(&w).unwrap();
        let wx = derivative(w.values(), w.dx());
        for j in 0..n {
            assert!((dw.values()[j] + u.values()[j] * wx[j]).abs() < 1e-14);
        }
        // node 128 is the bump peak x = 0.5
        assert!(dw.values()[128].abs() < 1e-12);
    }

    #[test]
    fn support_at_boundary_halts() {
        let w = IntervalField::from_fn(128, |x| x * (1.0 - x)).unwrap();
        let z = IntervalField::from_fn(128, |_| 0.0).unwrap();
        match cky_rhs(&w, &z) {
            Err(Error::Halt(msg)) => assert!(msg.contains("support hit boundary")),
            other => panic!("{other:?}"),
        }
        assert!(IntervalField::new(vec![0.0; 10]).is_err());
    }
}
