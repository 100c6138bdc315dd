use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::polar::{cubic_weights, solve_tridiagonal, split, tridiagonal_residual};
use crate::error::{check_finite, Error, Result};
use crate::spectral1d::PeriodicGrid1D;

/// Periodic `x ∈ [0, 2π)` times `y ∈ [0, H]` with walls; cell centers
/// `y_i = (i + 1/2) H / N_y`. Fields are stored row by row, index `i·N_x + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripGrid {
    nx: usize,
    ny: usize,
    height: f64,
    row: PeriodicGrid1D,
}

impl StripGrid {
    pub fn new(nx: usize, ny: usize, height: f64) -> Result<Self> {
        if !nx.is_power_of_two() || nx < 8 {
            return Err(Error::InvalidGrid(format!("N_x must be a power of two >= 8, got {nx}")));
        }
        if ny < 32 {
            return Err(Error::InvalidGrid(format!("N_y must be >= 32, got {ny}")));
        }
        if !(height > 0.0 && height.is_finite()) {
            return Err(Error::InvalidGrid(format!("height must be positive, got {height}")));
        }
        Ok(Self { nx, ny, height, row: PeriodicGrid1D::new(nx, 2.0 * PI)? })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.height / self.ny as f64
    }

    pub fn point(&self, k: usize) -> [f64; 2] {
        let (i, j) = (k / self.nx, k % self.nx);
        [j as f64 * self.dx(), (i as f64 + 0.5) * self.dy()]
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| {
            let p = self.point(k);
            f(p[0], p[1])
        }).collect()
    }

    /// Index of the cell mirrored by `x → -x`.
    pub fn mirror_x(&self, k: usize) -> usize {
        let (i, j) = (k / self.nx, k % self.nx);
        i * self.nx + (self.nx - j) % self.nx
    }

    fn at(&self, f: &[f64], i: isize, j: isize) -> f64 {
        let i = i.clamp(0, self.ny as isize - 1) as usize;
        f[i * self.nx + j.rem_euclid(self.nx as isize) as usize]
    }

    /// Cubic Lagrange interpolation; rows past the walls are clamped.
    pub fn interpolate(&self, f: &[f64], x: f64, y: f64, clip: bool) -> f64 {
        let s = (y / self.dy() - 0.5).clamp(0.0, self.ny as f64 - 1.0);
        let t = x / self.dx();
        let (i0, j0) = (s.floor(), t.floor());
        let (wy, wx) = (cubic_weights(s - i0), cubic_weights(t - j0));
        let (i0, j0) = (i0 as isize, j0 as isize);
        let mut v = 0.0;
        for (a, wa) in wy.iter().enumerate() {
            let mut row = 0.0;
            for (b, wb) in wx.iter().enumerate() {
                row += wb * self.at(f, i0 - 1 + a as isize, j0 - 1 + b as isize);
            }
            v += wa * row;
        }
        if clip {
            let c = [
                self.at(f, i0, j0),
                self.at(f, i0 + 1, j0),
                self.at(f, i0, j0 + 1),
                self.at(f, i0 + 1, j0 + 1),
            ];
            let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            v = v.clamp(lo, hi);
        }
        v
    }

    fn rows_forward(&self, f: &[f64]) -> Vec<Vec<Complex64>> {
        f.par_chunks(self.nx).map(|r| self.row.forward(r)).collect()
    }

    fn rows_inverse(&self, c: &[Vec<Complex64>]) -> Vec<f64> {
        c.par_iter().flat_map_iter(|r| self.row.inverse(r)).collect()
    }

    /// Spectral `∂_x` of a strip field.
    pub fn d_dx(&self, f: &[f64]) -> Vec<f64> {
        let nx = self.nx;
        let c: Vec<Vec<Complex64>> = self
            .rows_forward(f)
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(m, v)| {
                        if m == nx / 2 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            v * Complex64::new(0.0, self.row.wavenumber(m) as f64)
                        }
                    })
                    .collect()
            })
            .collect();
        self.rows_inverse(&c)
    }
}

/// Scenario temperature: an even bump in `x` peaked at `x = 0` and decaying
/// away from the wall `y = 0`, `A exp(-2(1 - cos x)) exp(-y²)`. Paired with
/// `ω₀ = 0`, buoyancy drives two jets toward `x = 0` along the wall.
pub fn boussinesq_initial_theta(grid: &StripGrid, amplitude: f64) -> Vec<f64> {
    grid.sample(|x, y| amplitude * (-2.0 * (1.0 - x.cos())).exp() * (-y * y).exp())
}

/// Solves `-Δψ = ω` with `ψ = 0` on both walls: transform in `x`, one
/// tridiagonal solve in `y` per mode.
pub fn poisson_strip(grid: &StripGrid, omega: &[f64]) -> Result<Vec<f64>> {
    if omega.len() != grid.len() {
        return Err(Error::GridMismatch("omega length differs from strip grid".into()));
    }
    check_finite(omega)?;
    let (nx, ny, dy) = (grid.nx, grid.ny, grid.dy());
    let coeffs = grid.rows_forward(omega);
    let scale = omega.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let solved: Vec<(Vec<Complex64>, f64)> = (0..nx)
        .into_par_iter()
        .map(|m| {
            let k = grid.row.wavenumber(m) as f64;
            let off = -1.0 / (dy * dy);
            let mut lower = vec![off; ny];
            let mut upper = vec![off; ny];
            let mut diag = vec![2.0 / (dy * dy) + k * k; ny];
            lower[0] = 0.0;
            upper[ny - 1] = 0.0;
            // odd ghosts put ψ = 0 on both walls
            diag[0] -= off;
            diag[ny - 1] -= off;
            let rhs: Vec<Complex64> = (0..ny).map(|i| coeffs[i][m]).collect();
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
    let rows: Vec<Vec<Complex64>> = (0..ny).map(|i| (0..nx).map(|m| solved[m].0[i]).collect()).collect();
    Ok(grid.rows_inverse(&rows))
}

/// `u = ∇⊥ψ = (∂_yψ, -∂_xψ)`; `∂_y` centered with the odd wall ghosts.
pub fn velocity_strip(grid: &StripGrid, psi: &[f64]) -> Result<Vec<[f64; 2]>> {
    if psi.len() != grid.len() {
        return Err(Error::GridMismatch("psi length differs from strip grid".into()));
    }
    let (nx, ny, dy) = (grid.nx, grid.ny, grid.dy());
    let px = grid.d_dx(psi);
    let at = |i: isize, j: usize| -> f64 {
        if i < 0 {
            -psi[j]
        } else if i as usize >= ny {
            -psi[(ny - 1) * nx + j]
        } else {
            psi[i as usize * nx + j]
        }
    };
    Ok((0..grid.len())
        .map(|k| {
            let (i, j) = ((k / nx) as isize, k % nx);
            [(at(i + 1, j) - at(i - 1, j)) / (2.0 * dy), -px[k]]
        })
        .collect())
}

/// Semi-Lagrangian transport on the strip (RK2 backtracking, clipped cubic
/// interpolation). Departure heights are kept between the first and last
/// rows of cell centers.
pub fn semi_lagrangian_strip(grid: &StripGrid, f: &[f64], u_half: &[[f64; 2]], dt: f64) -> Result<Vec<f64>> {
    if f.len() != grid.len() || u_half.len() != grid.len() {
        return Err(Error::GridMismatch("field length differs from strip grid".into()));
    }
    let (ux, uy) = split(u_half);
    let (lo, hi) = (0.5 * grid.dy(), grid.height - 0.5 * grid.dy());
    Ok((0..grid.len())
        .into_par_iter()
        .map(|k| {
            let p = grid.point(k);
            let mid = [p[0] - 0.5 * dt * u_half[k][0], p[1] - 0.5 * dt * u_half[k][1]];
            let um = [grid.interpolate(&ux, mid[0], mid[1], false), grid.interpolate(&uy, mid[0], mid[1], false)];
            let d = [p[0] - dt * um[0], (p[1] - dt * um[1]).clamp(lo, hi)];
            grid.interpolate(f, d[0], d[1], true)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn poisson_strip_matches_mode_solution() {
        // -Δ[sin(2x) sin(y)] = 5 sin(2x) sin(y) with ψ = 0 at y = 0, π
        let g = StripGrid::new(32, 64, PI).unwrap();
        let w = g.sample(|x, y| 5.0 * (2.0 * x).sin() * y.sin());
        let psi = poisson_strip(&g, &w).unwrap();
        let exact = g.sample(|x, y| (2.0 * x).sin() * y.sin());
        assert!(max_err(&psi, &exact) < 2.0 * g.dy() * g.dy(), "{}", max_err(&psi, &exact));
        assert!(poisson_strip(&g, &vec![0.0; g.len()]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_stream_function_gives_unit_shear_free_flow() {
        let g = StripGrid::new(16, 32, PI).unwrap();
        let psi = g.sample(|_, y| y);
        let u = velocity_strip(&g, &psi).unwrap();
        // interior rows only: the wall ghosts belong to ψ = 0 data
        for k in g.nx()..g.len() - g.nx() {
            assert!((u[k][0] - 1.0).abs() < 1e-12 && u[k][1].abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_translation_shifts_profile() {
        let g = StripGrid::new(128, 32, PI).unwrap();
        let f = g.sample(|x, y| x.sin() * y.cos());
        let u = vec![[1.0, 0.0]; g.len()];
        let dt = 0.3;
        let moved = semi_lagrangian_strip(&g, &f, &u, dt).unwrap();
        let exact = g.sample(|x, y| (x - dt).sin() * y.cos());
        assert!(max_err(&moved, &exact) < 1e-6, "{}", max_err(&moved, &exact));
        let zero = vec![[0.0, 0.0]; g.len()];
        assert!(max_err(&semi_lagrangian_strip(&g, &f, &zero, dt).unwrap(), &f) < 1e-14);
    }
}
