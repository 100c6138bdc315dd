use super::PatchContour;
use crate::error::{Error, Result};

/// The moving region `K(t) = {x₁ ∈ (X(t), 2), 0 < x₂ < x₁}` with
/// `X' = -(1/(100α)) X^{1-2α}`, `X(0) = 3ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierState {
    pub eps: f64,
    pub alpha: f64,
    pub t: f64,
    pub front: f64,
}

impl BarrierState {
    pub fn new(eps: f64, alpha: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.1) {
            return Err(Error::Precondition(format!("eps must lie in (0, 0.1), got {eps}")));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::Precondition(format!("barrier needs alpha in (0, 0.5), got {alpha}")));
        }
        Ok(Self { eps, alpha, t: 0.0, front: 3.0 * eps })
    }

    /// Arrival time at the origin, `T = 50 (3ε)^{2α}`.
    pub fn arrival_time(&self) -> f64 {
        50.0 * (3.0 * self.eps).powf(2.0 * self.alpha)
    }

    pub fn at(&self, t: f64) -> Result<Self> {
        Ok(Self { t, front: barrier_position(t, self.eps, self.alpha)?, ..*self })
    }

    /// Corners of `K(t)`: `(X, 0)`, `(2, 0)`, `(2, 2)`, `(X, X)`.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let x = self.front;
        [[x, 0.0], [2.0, 0.0], [2.0, 2.0], [x, x]]
    }
}

/// `X(t) = ((3ε)^{2α} - t/50)^{1/(2α)}`, defined up to the arrival time.
pub fn barrier_position(t: f64, eps: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Precondition(format!("barrier needs alpha in (0, 0.5), got {alpha}")));
    }
    let base = (3.0 * eps).powf(2.0 * alpha);
    let arrival = 50.0 * base;
    if !(0.0..=arrival).contains(&t) {
        return Err(Error::Precondition(format!("t = {t} outside [0, T = {arrival}]")));
    }
    Ok((base - t / 50.0).max(0.0).powf(1.0 / (2.0 * alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub contained: bool,
    /// Smallest signed distance (positive inside the patch) over the sampled
    /// free sides of `K(t)`; infinite when `K(t)` is empty.
    pub margin: f64,
}

fn point_segment_distance(x: [f64; 2], p: [f64; 2], q: [f64; 2]) -> f64 {
    let e = [q[0] - p[0], q[1] - p[1]];
    let l2 = e[0] * e[0] + e[1] * e[1];
    let s = if l2 == 0.0 { 0.0 } else { (((x[0] - p[0]) * e[0] + (x[1] - p[1]) * e[1]) / l2).clamp(0.0, 1.0) };
    (x[0] - p[0] - s * e[0]).hypot(x[1] - p[1] - s * e[1])
}

/// Distance from `x` to the part of the contour off the wall: segments lying
/// on `x₂ = 0` bound the patch against the wall, not against the fluid.
pub(crate) fn free_boundary_distance(contour: &PatchContour, x: [f64; 2]) -> f64 {
    contour
        .segments()
        .filter(|(p, q)| !(p[1] == 0.0 && q[1] == 0.0))
        .map(|(p, q)| point_segment_distance(x, p, q))
        .fold(f64::INFINITY, f64::min)
}

/// Samples the left side, the diagonal and the right side of `K(t)` (its
/// bottom lies on the wall) and tests each sample against the patch.
pub fn barrier_containment(contour: &PatchContour, barrier: &BarrierState) -> Containment {
    let x = barrier.front;
    if x >= 2.0 {
        return Containment { contained: true, margin: f64::INFINITY };
    }
    let m = 64;
    let mut samples = Vec::with_capacity(3 * m);
    for k in 1..=m {
        let s = k as f64 / m as f64;
        samples.push([x, x * s]);
        // denser near the front corner
        let d = x + (2.0 - x) * s * s;
        samples.push([d, d]);
        samples.push([2.0, 2.0 * s]);
    }
    let margin = samples
        .iter()
        .map(|&p| {
            let d = free_boundary_distance(contour, p);
            if contour.contains(p) {
                d
            } else {
                -d
            }
        })
        .fold(f64::INFINITY, f64::min);
    Containment { contained: margin >= 0.0, margin }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_closed_form() {
        let (eps, alpha) = (0.05, 0.04);
        assert!((barrier_position(0.0, eps, alpha).unwrap() - 3.0 * eps).abs() < 1e-15);
        let b = BarrierState::new(eps, alpha).unwrap();
        let t_end = b.arrival_time();
        assert_eq!(barrier_position(t_end, eps, alpha).unwrap(), 0.0);
        let half = barrier_position(0.5 * t_end, eps, alpha).unwrap();
        let expect = (0.5 * (3.0 * eps).powf(2.0 * alpha)).powf(1.0 / (2.0 * alpha));
        assert!((half - expect).abs() < 1e-15 * expect.max(1e-300));
        assert!(barrier_position(1.01 * t_end, eps, alpha).is_err());
        // X' = -(1/(100α)) X^{1-2α} by a centered difference
        let (t, h) = (0.3 * t_end, 1e-5);
        let d = (barrier_position(t + h, eps, alpha).unwrap() - barrier_position(t - h, eps, alpha).unwrap()) / (2.0 * h);
        let x = barrier_position(t, eps, alpha).unwrap();
        assert!((d + x.powf(1.0 - 2.0 * alpha) / (100.0 * alpha)).abs() < 1e-6 * d.abs());
    }

    #[test]
    fn containment_of_boxes() {
        let bx = |x0: f64| {
            PatchContour::new(vec![[x0, 0.0], [3.5, 0.0], [3.5, 3.5], [x0, 3.5]], 1.0).unwrap()
        };
        let b = BarrierState::new(0.05, 0.04).unwrap();
        let c = barrier_containment(&bx(0.1), &b);
        assert!(c.contained && (c.margin - 0.05).abs() < 1e-12, "{c:?}");
        let c = barrier_containment(&bx(1.0), &b);
        assert!(!c.contained && c.margin < 0.0);
        let far = BarrierState { front: 2.5, ..b };
        assert!(barrier_containment(&bx(3.0), &far).contained);
    }
}
