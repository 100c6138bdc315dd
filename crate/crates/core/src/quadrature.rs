//! Small quadrature toolkit shared by the verifiers.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 1 { x } else { p1 };
            let pm1 = if order == 1 { 1.0 } else { p0 };
            dp = n * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        if order == 1 {
            nodes[0] = 0.0;
            weights[0] = 2.0;
            break;
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed rule mapped to arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
    }

    /// Composite rule over `pieces` equal sub-intervals.
    pub fn composite(&self, a: f64, b: f64, pieces: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / pieces as f64;
        (0..pieces).map(|i| self.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &mut f)).sum()
    }
}

/// Quadrature value with a Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Composite trapezoid over uniformly spaced samples, with the error estimated
/// from the same rule on every other sample. Requires at least three samples.
pub fn trapezoid_uniform(samples: &[f64], h: f64) -> Estimate {
    let n = samples.len();
    assert!(n >= 2);
    let fine = trap(samples.iter().copied(), h);
    if n < 3 {
        return Estimate { value: fine, error: fine.abs() };
    }
    // coarse rule over the largest even-length prefix, fine remainder on top
    let even_end = if (n - 1) % 2 == 0 { n - 1 } else { n - 2 };
    let coarse = trap(samples[..=even_end].iter().step_by(2).copied(), 2.0 * h);
    let fine_prefix = trap(samples[..=even_end].iter().copied(), h);
    Estimate { value: fine, error: (fine_prefix - coarse).abs() / 3.0 }
}

fn trap(values: impl Iterator<Item = f64>, h: f64) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    h * (inner + 0.5 * (v[0] + v[v.len() - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for order in 1..=12 {
            let rule = GaussRule::new(order);
            let deg = 2 * order - 1;
            let exact = 1.0 / (deg as f64 + 1.0) * (2f64.powi(deg as i32 + 1) - 0.0);
            let got = rule.integrate(0.0, 2.0, |x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-11 * exact, "order {order}: {got} vs {exact}");
        }
    }

    #[test]
    fn trapezoid_error_estimate_brackets_truth() {
        let n = 101;
        let h = 1.0 / (n - 1) as f64;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 * h).exp()).collect();
        let est = trapezoid_uniform(&samples, h);
        let truth = 1f64.exp() - 1.0;
        let err = (est.value - truth).abs();
        assert!(err <= 1.5 * est.error && err >= 0.5 * est.error, "{err} vs {}", est.error);
    }
}
