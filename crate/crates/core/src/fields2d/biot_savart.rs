use std::f64::consts::PI;

use super::polar::PolarGrid;
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// `P(z) = ∇⊥ log|z| = (z₂, -z₁)/|z|²`.
fn perp_kernel(z: [f64; 2]) -> [f64; 2] {
    let r2 = z[0] * z[0] + z[1] * z[1];
    [z[1] / r2, -z[0] / r2]
}

/// Smooth cutoff: 1 on `[0, R/2]`, 0 beyond `R`.
fn cutoff(rho: f64, radius: f64) -> f64 {
    let s = (2.0 * rho / radius - 1.0).clamp(0.0, 1.0);
    let g = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let (a, b) = (g(1.0 - s), g(s));
    a / (a + b)
}

/// Velocity at the disk-centered point `x` from the Green's function of the
/// disk, `G(x,y) = -(1/2π) log|x-y| + (1/2π) log(|y| |x-y*|)` with
/// `y* = y/|y|²`:
/// `u(x) = ∫ ω(y) [-(1/2π) P(x-y) + (1/2π) P(x-y*)] dy`.
///
/// The singular term is split with a smooth cutoff of radius `R`: the far
/// part uses the cell rule, the near part polar Gauss quadrature about `x`
/// with ω interpolated (zero outside the disk). The image term is smooth
/// for interior `x` and uses the cell rule throughout.
pub fn direct_bs_quadrature(grid: &PolarGrid, omega: &[f64], x: [f64; 2]) -> Result<[f64; 2]> {
    if omega.len() != grid.len() {
        return Err(Error::GridMismatch("omega length differs from polar grid".into()));
    }
    let rx = x[0].hypot(x[1]);
    if rx >= 1.0 {
        return Err(Error::Precondition(format!("point {x:?} not interior")));
    }
    let radius = 0.2_f64.min(0.5 * (1.0 - rx)).max(8.0 * grid.h());
    let nth = grid.ntheta();
    let mut u = [0.0, 0.0];
    for k in 0..grid.len() {
        let (i, j) = (k / nth, k % nth);
        let w = omega[k] * grid.cell_area(i);
        if w == 0.0 {
            continue;
        }
        let y = grid.point(i, j);
        let d = [x[0] - y[0], x[1] - y[1]];
        let far = 1.0 - cutoff(d[0].hypot(d[1]), radius);
        if far > 0.0 {
            let p = perp_kernel(d);
            u[0] -= far * w * p[0];
            u[1] -= far * w * p[1];
        }
        let ry2 = y[0] * y[0] + y[1] * y[1];
        let ys = [y[0] / ry2, y[1] / ry2];
        let p = perp_kernel([x[0] - ys[0], x[1] - ys[1]]);
        u[0] += w * p[0];
        u[1] += w * p[1];
    }
    // near part: ρ P(-ρe) = (-sin φ, cos φ)
    let gauss = GaussRule::new(16);
    let nphi = 128;
    let mut near = [0.0, 0.0];
    for m in 0..nphi {
        let phi = 2.0 * PI * m as f64 / nphi as f64;
        let (s, c) = phi.sin_cos();
        let radial = gauss.composite(0.0, radius, 4, |rho| {
            let y = [x[0] + rho * c, x[1] + rho * s];
            if y[0].hypot(y[1]) > 1.0 {
                0.0
            } else {
                cutoff(rho, radius) * grid.interpolate(omega, y[0], y[1], false)
            }
        });
        near[0] -= s * radial;
        near[1] += c * radial;
    }
    let dphi = 2.0 * PI / nphi as f64;
    u[0] -= near[0] * dphi;
    u[1] -= near[1] * dphi;
    Ok([u[0] / (2.0 * PI), u[1] / (2.0 * PI)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields2d::{poisson_disk, velocity_from_stream};

    #[test]
    fn zero_and_axis_examples() {
        let g = PolarGrid::new(64, 128).unwrap();
        assert_eq!(direct_bs_quadrature(&g, &vec![0.0; g.len()], [0.1, 0.2]).unwrap(), [0.0, 0.0]);
        let odd = g.sample(|x, y| x * (-(x * x + y * y)).exp());
        let u = direct_bs_quadrature(&g, &odd, [0.0, -0.4]).unwrap();
        assert!(u[0].abs() < 1e-12, "{}", u[0]);
    }

    #[test]
    fn constant_vorticity_matches_poisson_path() {
        let g = PolarGrid::new(128, 256).unwrap();
        let w = vec![4.0; g.len()];
        let psi = poisson_disk(&g, &w).unwrap();
        let u = velocity_from_stream(&g, &psi).unwrap();
        let scale = u.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
        for &(i, j) in &[(20usize, 3usize), (50, 100), (80, 200), (10, 77)] {
            let p = g.point(i, j);
            let d = direct_bs_quadrature(&g, &w, p).unwrap();
            let e = u[g.index(i, j)];
            let err = (d[0] - e[0]).hypot(d[1] - e[1]) / scale;
            assert!(err < 1e-3, "{err} at {p:?}: {d:?} vs {e:?}");
        }
    }
}
