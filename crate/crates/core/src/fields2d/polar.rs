use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_finite, Error, Result};
use crate::spectral1d::PeriodicGrid1D;

/// Cell-centered polar grid on the unit disk: `r_i = (i + 1/2)/N_r`,
/// `θ_j = 2πj/N_θ`. Fields are stored ring by ring, index `i·N_θ + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    nr: usize,
    nth: usize,
    ring: PeriodicGrid1D,
}

impl PolarGrid {
    pub fn new(nr: usize, nth: usize) -> Result<Self> {
        if nr < 32 {
            return Err(Error::InvalidGrid(format!("N_r must be >= 32, got {nr}")));
        }
        if !nth.is_power_of_two() || nth < 8 {
            return Err(Error::InvalidGrid(format!("N_theta must be a power of two >= 8, got {nth}")));
        }
        Ok(Self { nr, nth, ring: PeriodicGrid1D::new(nth, 2.0 * PI)? })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ntheta(&self) -> usize {
        self.nth
    }

    pub fn len(&self) -> usize {
        self.nr * self.nth
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Radial spacing.
    pub fn h(&self) -> f64 {
        1.0 / self.nr as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.nth as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nth + j
    }

    pub fn cell_area(&self, i: usize) -> f64 {
        self.r(i) * self.h() * self.dtheta()
    }

    /// Disk-centered Cartesian position of cell `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let (s, c) = self.theta(j).sin_cos();
        [self.r(i) * c, self.r(i) * s]
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let p = self.point(k / self.nth, k % self.nth);
                f(p[0], p[1])
            })
            .collect()
    }

    /// Index of the cell mirrored by `x₁ → -x₁` (`θ → π - θ`).
    pub fn mirror_x1(&self, k: usize) -> usize {
        let (i, j) = (k / self.nth, k % self.nth);
        self.index(i, (self.nth / 2 + self.nth - j) % self.nth)
    }

    /// Storage index of ring `i` (may be -1 or -2, read through the center,
    /// or past the last ring, clamped) and angle index `j` (wrapped).
    fn slot(&self, i: isize, j: isize) -> usize {
        let n = self.nth as isize;
        let (i, j) = if i < 0 { (-1 - i, j + n / 2) } else { (i, j) };
        let i = (i as usize).min(self.nr - 1);
        i * self.nth + j.rem_euclid(n) as usize
    }

    /// Fractional indices of a point for interpolation.
    fn locate(&self, x: f64, y: f64) -> (f64, f64) {
        let r = x.hypot(y);
        let th = y.atan2(x).rem_euclid(2.0 * PI);
        let s = (r / self.h() - 0.5).min(self.nr as f64 - 1.0);
        (s, th / self.dtheta())
    }

    /// Cubic Lagrange interpolation of a cell field at a Cartesian point.
    /// With `clip`, the result is limited to the range of the four
    /// surrounding cells (no new extrema).
    pub fn interpolate(&self, f: &[f64], x: f64, y: f64, clip: bool) -> f64 {
        self.interpolate_with(|k| f[k], x, y, clip)
    }

    fn interpolate_with(&self, get: impl Fn(usize) -> f64, x: f64, y: f64, clip: bool) -> f64 {
        let (s, t) = self.locate(x, y);
        let (i0, j0) = (s.floor(), t.floor());
        let (wr, wt) = (cubic_weights(s - i0), cubic_weights(t - j0));
        let (i0, j0) = (i0 as isize, j0 as isize);
        let mut v = 0.0;
        for (a, wa) in wr.iter().enumerate() {
            let mut row = 0.0;
            for (b, wb) in wt.iter().enumerate() {
                row += wb * get(self.slot(i0 - 1 + a as isize, j0 - 1 + b as isize));
            }
            v += wa * row;
        }
        if clip {
            let c = [
                get(self.slot(i0, j0)),
                get(self.slot(i0 + 1, j0)),
                get(self.slot(i0, j0 + 1)),
                get(self.slot(i0 + 1, j0 + 1)),
            ];
            let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            v = v.clamp(lo, hi);
        }
        v
    }

    pub fn interpolate_vector(&self, u: &[[f64; 2]], x: f64, y: f64) -> [f64; 2] {
        [
            self.interpolate_with(|k| u[k][0], x, y, false),
            self.interpolate_with(|k| u[k][1], x, y, false),
        ]
    }

    /// Largest radius at which cell values are interpolated.
    pub fn r_max(&self) -> f64 {
        self.r(self.nr - 1)
    }

    /// `Σ |f|^p dA` helpers: returns `(‖f‖₁, ‖f‖₂, ‖f‖_∞)`.
    pub fn norms(&self, f: &[f64]) -> (f64, f64, f64) {
        let (mut l1, mut l2, mut li) = (0.0, 0.0, 0.0_f64);
        for i in 0..self.nr {
            let a = self.cell_area(i);
            for v in &f[i * self.nth..(i + 1) * self.nth] {
                l1 += v.abs() * a;
                l2 += v * v * a;
                li = li.max(v.abs());
            }
        }
        (l1, l2.sqrt(), li)
    }

    /// `∫ |u|² dA` by the cell rule.
    pub fn energy(&self, u: &[[f64; 2]]) -> f64 {
        (0..self.len()).map(|k| (u[k][0] * u[k][0] + u[k][1] * u[k][1]) * self.cell_area(k / self.nth)).sum()
    }
}

pub(crate) fn split(u: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
    (u.iter().map(|v| v[0]).collect(), u.iter().map(|v| v[1]).collect())
}

/// Four-point Lagrange weights for nodes `-1, 0, 1, 2` at offset `s ∈ [0, 1)`.
pub(crate) fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Thomas algorithm for a complex right-hand side with real coefficients.
pub(crate) fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

/// `max_i |A x - b|_i` for the tridiagonal system.
pub(crate) fn tridiagonal_residual(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    x: &[Complex64],
    rhs: &[Complex64],
) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut v = diag[i] * x[i] - rhs[i];
            if i > 0 {
                v += lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += upper[i] * x[i + 1];
            }
            v.norm()
        })
        .fold(0.0, f64::max)
}

/// Angular coefficients of every ring: `out[i][m]`.
fn rings_forward(grid: &PolarGrid, f: &[f64]) -> Vec<Vec<Complex64>> {
    f.par_chunks(grid.nth).map(|ring| grid.ring.forward(ring)).collect()
}

fn rings_inverse(grid: &PolarGrid, coeffs: &[Vec<Complex64>]) -> Vec<f64> {
    coeffs.par_iter().flat_map_iter(|c| grid.ring.inverse(c)).collect()
}

/// Solves `-Δψ = ω` with `ψ = 0` at `r = 1`: angular transform, then one
/// second-order radial tridiagonal solve per mode. The face flux at `r = 0`
/// vanishes, which is the regularity condition for every mode.
pub fn poisson_disk(grid: &PolarGrid, omega: &[f64]) -> Result<Vec<f64>> {
    if omega.len() != grid.len() {
        return Err(Error::GridMismatch("omega length differs from polar grid".into()));
    }
    check_finite(omega)?;
    let (nr, nth, h) = (grid.nr, grid.nth, grid.h());
    let coeffs = rings_forward(grid, omega);
    let scale = omega.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let solved: Vec<(Vec<Complex64>, f64)> = (0..nth)
        .into_par_iter()
        .map(|m| {
            let k = grid.ring.wavenumber(m) as f64;
            let mut lower = vec![0.0; nr];
            let mut diag = vec![0.0; nr];
            let mut upper = vec![0.0; nr];
            for i in 0..nr {
                let r = grid.r(i);
                let rm = i as f64 * h;
                let rp = (i + 1) as f64 * h;
                lower[i] = -rm / (r * h * h);
                upper[i] = -rp / (r * h * h);
                diag[i] = (rm + rp) / (r * h * h) + k * k / (r * r);
            }
            // ghost ψ_N = -ψ_{N-1} puts ψ = 0 on the face r = 1
            diag[nr - 1] -= upper[nr - 1];
            upper[nr - 1] = 0.0;
            let rhs: Vec<Complex64> = (0..nr).map(|i| coeffs[i][m]).collect();
            let x = solve_tridiagonal(&lower, &diag, &upper, &rhs);
            let res = tridiagonal_residual(&lower, &diag, &upper, &x, &rhs);
            (x, res)
        })
        .collect();
    let residual = solved.iter().map(|s| s.1).fold(0.0, f64::max);
    let tol = 1e-8 * scale.max(f64::MIN_POSITIVE);
    if residual > tol {
        return Err(Error::Residual { residual, tolerance: tol });
    }
    let by_ring: Vec<Vec<Complex64>> =
        (0..nr).map(|i| (0..nth).map(|m| solved[m].0[i]).collect()).collect();
    Ok(rings_inverse(grid, &by_ring))
}

/// `u = ∇⊥ψ = (∂₂ψ, -∂₁ψ)` in Cartesian components at cell centers:
/// `u_r = ψ_θ / r` (spectral in θ), `u_θ = -ψ_r` (centered in r, through
/// the center at the first ring and with the Dirichlet ghost at the last).
pub fn velocity_from_stream(grid: &PolarGrid, psi: &[f64]) -> Result<Vec<[f64; 2]>> {
    if psi.len() != grid.len() {
        return Err(Error::GridMismatch("psi length differs from polar grid".into()));
    }
    let (nr, nth, h) = (grid.nr, grid.nth, grid.h());
    let coeffs = rings_forward(grid, psi);
    let dcoeffs: Vec<Vec<Complex64>> = coeffs
        .iter()
        .map(|c| {
            c.iter()
                .enumerate()
                .map(|(m, v)| {
                    if m == nth / 2 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        v * Complex64::new(0.0, grid.ring.wavenumber(m) as f64)
                    }
                })
                .collect()
        })
        .collect();
    let psi_theta = rings_inverse(grid, &dcoeffs);
    let at = |i: isize, j: usize| -> f64 {
        if i < 0 {
            psi[(j + nth / 2) % nth]
        } else if i as usize >= nr {
            -psi[(nr - 1) * nth + j]
        } else {
            psi[i as usize * nth + j]
        }
    };
    let u = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / nth, k % nth);
            let r = grid.r(i);
            let pr = (at(i as isize + 1, j) - at(i as isize - 1, j)) / (2.0 * h);
            let ur = psi_theta[k] / r;
            let ut = -pr;
            let (s, c) = grid.theta(j).sin_cos();
            [ur * c - ut * s, ur * s + ut * c]
        })
        .collect();
    Ok(u)
}

/// Normal velocity on `r = 1`: `ψ_θ` averaged across the boundary face,
/// which vanishes with the odd Dirichlet ghost.
pub fn boundary_normal_velocity(grid: &PolarGrid, psi: &[f64]) -> f64 {
    let nth = grid.nth;
    let last = &psi[(grid.nr - 1) * nth..];
    let ghost = |v: f64| -v;
    let face: Vec<f64> = last.iter().map(|&v| 0.5 * (v + ghost(v))).collect();
    let c = grid.ring.forward(&face);
    c.iter().enumerate().map(|(m, v)| v.norm() * grid.ring.wavenumber(m).abs() as f64).sum()
}

/// One semi-Lagrangian transport step: departure points by RK2
/// backtracking through `u_half` (the velocity at the half step), values by
/// clipped cubic interpolation. Departure points beyond the last ring are
/// pulled back radially.
pub fn semi_lagrangian_advect(grid: &PolarGrid, f: &[f64], u_half: &[[f64; 2]], dt: f64) -> Result<Vec<f64>> {
    if f.len() != grid.len() || u_half.len() != grid.len() {
        return Err(Error::GridMismatch("field length differs from polar grid".into()));
    }
    let rmax = grid.r_max();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let p = grid.point(k / grid.nth, k % grid.nth);
            let mid = [p[0] - 0.5 * dt * u_half[k][0], p[1] - 0.5 * dt * u_half[k][1]];
            let um = grid.interpolate_vector(u_half, mid[0], mid[1]);
            let mut d = [p[0] - dt * um[0], p[1] - dt * um[1]];
            let r = d[0].hypot(d[1]);
            if r > rmax {
                d = [d[0] * rmax / r, d[1] * rmax / r];
            }
            grid.interpolate(f, d[0], d[1], true)
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(PolarGrid::new(16, 64).is_err());
        assert!(PolarGrid::new(32, 60).is_err());
        let g = PolarGrid::new(32, 64).unwrap();
        assert_eq!(g.r(0), 0.5 / 32.0);
        let k = g.index(3, 5);
        let m = g.mirror_x1(k);
        let (p, q) = (g.point(3, 5), g.point(m / 64, m % 64));
        assert!((p[0] + q[0]).abs() < 1e-15 && (p[1] - q[1]).abs() < 1e-15);
    }

    #[test]
    fn poisson_examples() {
        let g = PolarGrid::new(64, 64).unwrap();
        let psi = poisson_disk(&g, &vec![4.0; g.len()]).unwrap();
        let exact = g.sample(|x, y| 1.0 - x * x - y * y);
        assert!(max_err(&psi, &exact) < 2.0 * g.h() * g.h(), "{}", max_err(&psi, &exact));
        assert!(poisson_disk(&g, &vec![0.0; g.len()]).unwrap().iter().all(|&v| v == 0.0));
        let w = g.sample(|x, _| x);
        let psi = poisson_disk(&g, &w).unwrap();
        let exact = g.sample(|x, y| {
            let r2 = x * x + y * y;
            (1.0 - r2) * x / 8.0
        });
        assert!(max_err(&psi, &exact) < g.h() * g.h(), "{}", max_err(&psi, &exact));
    }

    #[test]
    fn poisson_is_second_order() {
        let f = |x: f64, y: f64| (3.0 * x).sin() * (2.0 * y).cos() + x * y;
        let errs: Vec<f64> = [32usize, 64, 128]
            .iter()
            .map(|&n| {
                // oracle: ψ_ref on a 4x finer grid, sampled at the coarse cells
                let g = PolarGrid::new(n, 64).unwrap();
                let fine = PolarGrid::new(4 * n, 64).unwrap();
                let pf = poisson_disk(&fine, &fine.sample(f)).unwrap();
                let pc = poisson_disk(&g, &g.sample(f)).unwrap();
                (0..g.len())
                    .map(|k| {
                        let (i, j) = (k / 64, k % 64);
                        let fine_v = 0.5 * (pf[fine.index(4 * i + 1, j)] + pf[fine.index(4 * i + 2, j)]);
                        (pc[k] - fine_v).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    }

    #[test]
    fn velocity_examples() {
        let g = PolarGrid::new(64, 64).unwrap();
        let psi = g.sample(|x, y| 1.0 - x * x - y * y);
        let u = velocity_from_stream(&g, &psi).unwrap();
        for i in 0..g.nr() - 1 {
            for j in 0..g.ntheta() {
                let p = g.point(i, j);
                let e = [-2.0 * p[1], 2.0 * p[0]];
                let v = u[g.index(i, j)];
                assert!((v[0] - e[0]).abs() < 1e-12 && (v[1] - e[1]).abs() < 1e-12);
            }
        }
        assert!(velocity_from_stream(&g, &vec![0.0; g.len()]).unwrap().iter().all(|v| v == &[0.0, 0.0]));
        assert!(boundary_normal_velocity(&g, &psi) < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_cubics_and_clips() {
        let g = PolarGrid::new(32, 64).unwrap();
        let f = g.sample(|x, y| 1.0 + x - 2.0 * y);
        for &(x, y) in &[(0.1, 0.2), (-0.3, 0.01), (0.0, -0.5), (0.01, 0.0)] {
            let v = g.interpolate(&f, x, y, false);
            assert!((v - (1.0 + x - 2.0 * y)).abs() < 1e-3, "{v}");
        }
        let step = g.sample(|x, _| if x > 0.0 { 1.0 } else { 0.0 });
        for k in 0..200 {
            let x = -0.5 + k as f64 / 200.0;
            let v = g.interpolate(&step, x, 0.3, true);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn advection_examples() {
        let g = PolarGrid::new(64, 128).unwrap();
        let f = g.sample(|x, y| (-(x - 0.3).powi(2) - y * y).exp());
        let zero = vec![[0.0, 0.0]; g.len()];
        let same = semi_lagrangian_advect(&g, &f, &zero, 0.1).unwrap();
        assert!(max_err(&same, &f) < 1e-13);
    }

    #[test]
    fn solid_body_rotation_keeps_radial_profile() {
        let g = PolarGrid::new(128, 256).unwrap();
        let f0 = g.sample(|x, y| (-(x * x + y * y) / 0.1).exp());
        let u: Vec<[f64; 2]> = (0..g.len())
            .map(|k| {
                let p = g.point(k / 256, k % 256);
                [-p[1], p[0]]
            })
            .collect();
        let steps = 400;
        let dt = 2.0 * PI / steps as f64;
        let mut f = f0.clone();
        for _ in 0..steps {
            f = semi_lagrangian_advect(&g, &f, &u, dt).unwrap();
        }
        assert!(max_err(&f, &f0) < 1e-3, "{}", max_err(&f, &f0));
    }
}
