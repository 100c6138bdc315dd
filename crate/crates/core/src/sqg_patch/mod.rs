//! Contour dynamics for modified-SQG patches in the upper half-plane,
//! `u = ∇⊥(-Δ_D)^{-1+α} ω`, with the barrier certification and the
//! numerical checks of the bad/good velocity bounds near the origin.
//!
//! Velocity law, with `z^⊥ = (z₂, -z₁)` and `ȳ = (y₁, -y₂)`:
//! `u(x) = ∫ [(x - y)^⊥ |x - y|^{-2-2α} - (x - ȳ)^⊥ |x - ȳ|^{-2-2α}] ω(y) dy`.

mod barrier;
mod bounds;
mod evolve;
mod kernel;

pub use barrier::{barrier_containment, barrier_position, BarrierState, Containment};
pub use bounds::{
    bad_coefficient, bad_part_bound_check, coefficient_margin, delta_alpha_estimate, good_coefficient,
    good_part_bound_check, kernel_split, BoundCheck, CoefficientMargin, KernelSplit, OmegaRegion,
};
pub use evolve::{
    contact_check, evolve_patch, initial_patch, redistribute, Contact, ContactKind, PatchStep,
    RedistributionParams,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use kernel::{segment_fan, segment_green};

/// Closed polygon (implicitly closed: the last node connects to the first)
/// bounding one patch, counterclockwise, in `x₂ >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchContour {
    nodes: Vec<[f64; 2]>,
    pub weight: f64,
}

impl PatchContour {
    pub fn new(nodes: Vec<[f64; 2]>, weight: f64) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Precondition(format!("contour needs >= 3 nodes, got {}", nodes.len())));
        }
        if !weight.is_finite() {
            return Err(Error::Precondition("contour weight must be finite".into()));
        }
        if let Some(k) = nodes.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::NonFinite { index: k });
        }
        if let Some(p) = nodes.iter().find(|p| p[1] < 0.0) {
            return Err(Error::Precondition(format!("node {p:?} below the wall")));
        }
        let c = Self { nodes, weight };
        if c.signed_area() <= 0.0 {
            return Err(Error::Precondition("contour must be counterclockwise".into()));
        }
        Ok(c)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Shoelace area, positive for counterclockwise order.
    pub fn signed_area(&self) -> f64 {
        let n = self.nodes.len();
        0.5 * (0..n)
            .map(|k| {
                let (p, q) = (self.nodes[k], self.nodes[(k + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.nodes.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for k in 0..n {
            let (p, q) = (self.nodes[k], self.nodes[(k + 1) % n]);
            let w = p[0] * q[1] - q[0] * p[1];
            cx += (p[0] + q[0]) * w;
            cy += (p[1] + q[1]) * w;
        }
        let a6 = 6.0 * self.signed_area();
        [cx / a6, cy / a6]
    }

    pub fn perimeter(&self) -> f64 {
        self.segments().map(|(p, q)| (q[0] - p[0]).hypot(q[1] - p[1])).sum()
    }

    pub fn min_spacing(&self) -> f64 {
        self.segments().map(|(p, q)| (q[0] - p[0]).hypot(q[1] - p[1])).fold(f64::INFINITY, f64::min)
    }

    /// Smallest abscissa over the nodes, the front of a patch in `x₁ > 0`.
    pub fn leftmost(&self) -> [f64; 2] {
        *self.nodes.iter().min_by(|a, b| a[0].total_cmp(&b[0])).expect("non-empty contour")
    }

    pub fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.nodes.len();
        (0..n).map(move |k| (self.nodes[k], self.nodes[(k + 1) % n]))
    }

    /// Even-odd rule; points on the boundary may fall either way.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let mut inside = false;
        for (p, q) in self.segments() {
            if (p[1] > x[1]) != (q[1] > x[1]) {
                let s = p[0] + (x[1] - p[1]) / (q[1] - p[1]) * (q[0] - p[0]);
                if s > x[0] {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Patches with a shared exponent. With `odd_symmetry`, each stored contour
/// (in `x₁ >= 0`) has a mirror copy across the `x₂`-axis with opposite weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSystem {
    pub contours: Vec<PatchContour>,
    alpha: f64,
    pub odd_symmetry: bool,
    pub t: f64,
}

impl PatchSystem {
    pub fn new(contours: Vec<PatchContour>, alpha: f64, odd_symmetry: bool) -> Result<Self> {
        check_alpha(alpha)?;
        if odd_symmetry {
            if let Some(p) = contours.iter().flat_map(|c| c.nodes.iter()).find(|p| p[0] < 0.0) {
                return Err(Error::Precondition(format!("odd symmetry needs x1 >= 0, node {p:?}")));
            }
        }
        Ok(Self { contours, alpha, odd_symmetry, t: 0.0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The copies of a contour that enter the velocity: the wall image and,
    /// with odd symmetry, the mirror and its image. Every reflection flips both
    /// the weight and the orientation, so each copy contributes `+θ` times the
    /// integral over its transformed nodes taken in the stored order.
    fn copies(&self) -> Vec<fn([f64; 2]) -> [f64; 2]> {
        let mut out: Vec<fn([f64; 2]) -> [f64; 2]> = vec![|p| p, |p| [p[0], -p[1]]];
        if self.odd_symmetry {
            out.push(|p| [-p[0], p[1]]);
            out.push(|p| [-p[0], -p[1]]);
        }
        out
    }

    fn sum_over_copies(&self, seg: impl Fn([f64; 2], [f64; 2]) -> [f64; 2]) -> [f64; 2] {
        let mut u = [0.0; 2];
        for c in &self.contours {
            if c.weight == 0.0 {
                continue;
            }
            // sum each copy separately so that the wall image cancels the
            // direct part exactly at wall points
            let parts: Vec<[f64; 2]> = self
                .copies()
                .iter()
                .map(|f| {
                    c.segments().fold([0.0; 2], |acc, (p, q)| {
                        let v = seg(f(p), f(q));
                        [acc[0] + v[0], acc[1] + v[1]]
                    })
                })
                .collect();
            let mut total = [parts[0][0] + parts[1][0], parts[0][1] + parts[1][1]];
            if parts.len() == 4 {
                total[0] += parts[2][0] + parts[3][0];
                total[1] += parts[2][1] + parts[3][1];
            }
            u[0] += c.weight * total[0];
            u[1] += c.weight * total[1];
        }
        u
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::config("alpha", format!("alpha out of range [0, 0.5), got {alpha}")));
    }
    Ok(())
}

fn check_point(x: [f64; 2]) -> Result<()> {
    if !(x[0].is_finite() && x[1].is_finite()) || x[1] < 0.0 {
        return Err(Error::Precondition(format!("evaluation point {x:?} outside the closed half-plane")));
    }
    Ok(())
}

/// Velocity from the contour form `u(x) = Σ_k θ_k ∮ G_α(|x - z|) dz` over
/// every copy, `G_α(r) = (1 - r^{-2α})/(2α)` (`log r` at `α = 0`). Points on
/// a contour are handled by exact integration along the adjacent segments.
pub fn contour_velocity(system: &PatchSystem, x: [f64; 2]) -> Result<[f64; 2]> {
    check_point(x)?;
    let a = system.alpha;
    Ok(system.sum_over_copies(|p, q| segment_green(a, x, p, q)))
}

/// Velocity from the area form of the law, integrated over the fan of
/// triangles joining `x` to each edge; in polar coordinates about `x` the
/// radial integral is exact, which removes the `|x - y|^{-1-2α}` singularity.
pub fn direct_patch_quadrature(system: &PatchSystem, x: [f64; 2]) -> Result<[f64; 2]> {
    check_point(x)?;
    let a = system.alpha;
    Ok(system.sum_over_copies(|p, q| segment_fan(a, x, p, q)))
}

/// Contour velocity at every node of every contour.
pub fn node_velocities(system: &PatchSystem) -> Vec<Vec<[f64; 2]>> {
    system
        .contours
        .iter()
        .map(|c| {
            c.nodes
                .par_iter()
                .map(|&x| {
                    let mut u = system.sum_over_copies(|p, q| segment_green(system.alpha, x, p, q));
                    if x[1] == 0.0 {
                        u[1] = 0.0;
                    }
                    u
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(c: [f64; 2], r: f64, n: usize, weight: f64) -> PatchContour {
        let nodes = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                [c[0] + r * t.cos(), c[1] + r * t.sin()]
            })
            .collect();
        PatchContour::new(nodes, weight).unwrap()
    }

    fn rel(a: [f64; 2], b: [f64; 2]) -> f64 {
        (a[0] - b[0]).hypot(a[1] - b[1]) / b[0].hypot(b[1])
    }

    #[test]
    fn contour_checks() {
        assert!(PatchContour::new(vec![[0.0, 0.0], [1.0, 0.0]], 1.0).is_err());
        assert!(PatchContour::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], 1.0).is_err());
        assert!(PatchContour::new(vec![[0.0, -1.0], [1.0, 0.0], [0.0, 1.0]], 1.0).is_err());
        let c = PatchContour::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]], 1.0).unwrap();
        assert_eq!(c.signed_area(), 2.0);
        assert_eq!(c.centroid(), [1.0, 0.5]);
        assert!(c.contains([1.0, 0.5]) && !c.contains([3.0, 0.5]));
        let e = PatchSystem::new(vec![c], 0.6, false).unwrap_err();
        assert!(e.to_string().contains("alpha out of range [0, 0.5)"), "{e}");
    }

    #[test]
    fn empty_system_has_no_velocity() {
        let s = PatchSystem::new(vec![], 0.1, true).unwrap();
        assert_eq!(contour_velocity(&s, [0.3, 0.2]).unwrap(), [0.0, 0.0]);
        assert_eq!(direct_patch_quadrature(&s, [0.3, 0.2]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn contour_form_matches_area_form() {
        for alpha in [0.0, 0.02, 1.0 / 24.0, 0.05, 0.3] {
            let s = PatchSystem::new(vec![circle([0.5, 1.5], 0.4, 200, 1.0)], alpha, true).unwrap();
            for x in [[0.5, 1.5], [0.7, 1.6], [0.9, 1.5], [0.1, 0.3], [1.7, 0.0], [0.0, 1.0], [0.5, 1.9]] {
                let (a, b) = (contour_velocity(&s, x).unwrap(), direct_patch_quadrature(&s, x).unwrap());
                assert!(rel(a, b) < 1e-6, "alpha {alpha} x {x:?}: {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn symmetries_of_the_velocity() {
        let s = PatchSystem::new(vec![circle([0.5, 0.6], 0.4, 128, 1.0)], 0.04, true).unwrap();
        // wall tangency and odd cancellation on the axis
        assert_eq!(contour_velocity(&s, [0.8, 0.0]).unwrap()[1], 0.0);
        assert!(contour_velocity(&s, [0.0, 0.7]).unwrap()[0].abs() < 1e-12);
        // full symmetry at the origin
        let u = contour_velocity(&s, [0.0, 0.0]).unwrap();
        assert!(u[0].abs() < 1e-12 && u[1] == 0.0, "{u:?}");
    }

    #[test]
    fn point_vortex_far_field_for_log_kernel() {
        // a small patch high above the wall acts as a point vortex of strength
        // θ·area paired with its image
        let (c, r) = ([0.0, 100.0], 0.5);
        let patch = circle(c, r, 400, 1.0);
        let gamma = patch.signed_area();
        let s = PatchSystem::new(vec![patch], 0.0, false).unwrap();
        let x = [c[0] + 20.0 * r * 0.6, c[1] + 20.0 * r * 0.8];
        let u = contour_velocity(&s, x).unwrap();
        let k = |y: [f64; 2]| {
            let z = [x[0] - y[0], x[1] - y[1]];
            let r2 = z[0] * z[0] + z[1] * z[1];
            [z[1] / r2, -z[0] / r2]
        };
        let (d, i) = (k(c), k([c[0], -c[1]]));
        let expect = [gamma * (d[0] - i[0]), gamma * (d[1] - i[1])];
        assert!(rel(u, expect) < 1e-2, "{u:?} vs {expect:?}");
    }
}
