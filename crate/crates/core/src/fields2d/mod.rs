//! 2D Euler on the unit disk and Boussinesq on a periodic strip, both
//! advanced by semi-Lagrangian transport with a spectral/tridiagonal
//! Poisson solve, plus the hyperbolic-point diagnostics near the boundary.

mod biot_savart;
mod hyperbolic;
mod polar;
mod strip;

pub use biot_savart::direct_bs_quadrature;
pub use hyperbolic::{
    boundary_frame, disk_frame, front_back_track, kato_ratio, ks_initial_vorticity, omega_functional,
    sector_of, velocity_decomposition_residual, FrontBackState, FrontStatus, OmegaEstimate, Sector,
    SectorProbe,
};
pub use polar::{
    boundary_normal_velocity, poisson_disk, semi_lagrangian_advect, velocity_from_stream, PolarGrid,
};
pub use strip::{boussinesq_initial_theta, poisson_strip, semi_lagrangian_strip, velocity_strip, StripGrid};

use crate::error::{check_finite, Error, Result};
use crate::models1d::StepController;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    EulerDisk,
    BoussinesqStrip,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain2D {
    Disk(PolarGrid),
    Strip(StripGrid),
}

/// Vorticity (and buoyancy on the strip) with cached stream function and
/// velocity. `u_prev` and `dt_prev` feed the half-step velocity
/// extrapolation of the next transport step.
#[derive(Debug, Clone)]
pub struct FlowState2D {
    pub kind: FlowKind,
    pub t: f64,
    pub domain: Domain2D,
    pub omega: Vec<f64>,
    pub theta: Option<Vec<f64>>,
    pub psi: Vec<f64>,
    pub u: Vec<[f64; 2]>,
    pub u_prev: Option<(Vec<[f64; 2]>, f64)>,
    /// Project ω onto odd functions of `x₁` (θ onto even ones) after every step.
    pub odd_symmetry: bool,
}

impl FlowState2D {
    pub fn euler_disk(grid: PolarGrid, omega: Vec<f64>, odd_symmetry: bool) -> Result<Self> {
        if omega.len() != grid.len() {
            return Err(Error::GridMismatch("omega length differs from polar grid".into()));
        }
        check_finite(&omega)?;
        let mut s = Self {
            kind: FlowKind::EulerDisk,
            t: 0.0,
            domain: Domain2D::Disk(grid),
            omega,
            theta: None,
            psi: Vec::new(),
            u: Vec::new(),
            u_prev: None,
            odd_symmetry,
        };
        if odd_symmetry {
            s.project_symmetry();
        }
        s.refresh_velocity()?;
        Ok(s)
    }

    pub fn boussinesq(grid: StripGrid, omega: Vec<f64>, theta: Vec<f64>, odd_symmetry: bool) -> Result<Self> {
        if omega.len() != grid.len() || theta.len() != grid.len() {
            return Err(Error::GridMismatch("field length differs from strip grid".into()));
        }
        check_finite(&omega)?;
        check_finite(&theta)?;
        let mut s = Self {
            kind: FlowKind::BoussinesqStrip,
            t: 0.0,
            domain: Domain2D::Strip(grid),
            omega,
            theta: Some(theta),
            psi: Vec::new(),
            u: Vec::new(),
            u_prev: None,
            odd_symmetry,
        };
        if odd_symmetry {
            s.project_symmetry();
        }
        s.refresh_velocity()?;
        Ok(s)
    }

    pub fn polar_grid(&self) -> Result<&PolarGrid> {
        match &self.domain {
            Domain2D::Disk(g) => Ok(g),
            Domain2D::Strip(_) => Err(Error::Precondition("disk state required".into())),
        }
    }

    fn refresh_velocity(&mut self) -> Result<()> {
        match &self.domain {
            Domain2D::Disk(g) => {
                self.psi = poisson_disk(g, &self.omega)?;
                self.u = velocity_from_stream(g, &self.psi)?;
            }
            Domain2D::Strip(g) => {
                self.psi = poisson_strip(g, &self.omega)?;
                self.u = velocity_strip(g, &self.psi)?;
            }
        }
        Ok(())
    }

    fn mirror(&self, k: usize) -> usize {
        match &self.domain {
            Domain2D::Disk(g) => g.mirror_x1(k),
            Domain2D::Strip(g) => g.mirror_x(k),
        }
    }

    fn project_symmetry(&mut self) {
        let w = self.omega.clone();
        for k in 0..w.len() {
            self.omega[k] = 0.5 * (w[k] - w[self.mirror(k)]);
        }
        if let Some(th) = self.theta.clone() {
            let out: Vec<f64> = (0..th.len()).map(|k| 0.5 * (th[k] + th[self.mirror(k)])).collect();
            self.theta = Some(out);
        }
    }

    /// `max_k |ω_k + ω_{mirror(k)}|`: defect of oddness in `x₁`.
    pub fn odd_defect(&self) -> f64 {
        (0..self.omega.len()).map(|k| (self.omega[k] + self.omega[self.mirror(k)]).abs()).fold(0.0, f64::max)
    }

    pub fn max_speed(&self) -> f64 {
        self.u.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    /// Spacing used in the CFL number: the radial spacing on the disk (the
    /// angular cells near the center are not a transport constraint for
    /// semi-Lagrangian steps), the smaller spacing on the strip.
    pub fn cfl_spacing(&self) -> f64 {
        match &self.domain {
            Domain2D::Disk(g) => g.h(),
            Domain2D::Strip(g) => g.dx().min(g.dy()),
        }
    }

    /// `(‖ω‖₁, ‖ω‖₂, ‖ω‖_∞)` on the disk; the strip uses the same cell rule.
    pub fn omega_norms(&self) -> (f64, f64, f64) {
        match &self.domain {
            Domain2D::Disk(g) => g.norms(&self.omega),
            Domain2D::Strip(g) => {
                let a = g.dx() * g.dy();
                let l1 = self.omega.iter().map(|v| v.abs() * a).sum();
                let l2 = self.omega.iter().map(|v| v * v * a).sum::<f64>().sqrt();
                (l1, l2, self.omega.iter().fold(0.0, |m, v| m.max(v.abs())))
            }
        }
    }

    pub fn energy(&self) -> f64 {
        match &self.domain {
            Domain2D::Disk(g) => g.energy(&self.u),
            Domain2D::Strip(g) => {
                self.u.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>() * g.dx() * g.dy()
            }
        }
    }

    /// `max |∇ω|` by centered differences over interior cells.
    pub fn max_vorticity_gradient(&self) -> f64 {
        let w = &self.omega;
        let mut m = 0.0_f64;
        match &self.domain {
            Domain2D::Disk(g) => {
                let (nr, nth, h) = (g.nr(), g.ntheta(), g.h());
                for i in 1..nr - 1 {
                    let rdth = g.r(i) * g.dtheta();
                    for j in 0..nth {
                        let dr = (w[g.index(i + 1, j)] - w[g.index(i - 1, j)]) / (2.0 * h);
                        let dth = (w[g.index(i, (j + 1) % nth)] - w[g.index(i, (j + nth - 1) % nth)]) / (2.0 * rdth);
                        m = m.max(dr.hypot(dth));
                    }
                }
            }
            Domain2D::Strip(g) => {
                let (nx, ny) = (g.nx(), g.ny());
                let wx = g.d_dx(w);
                for i in 1..ny - 1 {
                    for j in 0..nx {
                        let dy = (w[(i + 1) * nx + j] - w[(i - 1) * nx + j]) / (2.0 * g.dy());
                        m = m.max(wx[i * nx + j].hypot(dy));
                    }
                }
            }
        }
        m
    }

    /// Velocity at the half step, extrapolated from the last two steps.
    fn half_step_velocity(&self, dt: f64) -> Vec<[f64; 2]> {
        match &self.u_prev {
            Some((prev, dt_prev)) if *dt_prev > 0.0 => {
                let c = 0.5 * dt / dt_prev;
                self.u
                    .iter()
                    .zip(prev)
                    .map(|(a, b)| [a[0] + c * (a[0] - b[0]), a[1] + c * (a[1] - b[1])])
                    .collect()
            }
            _ => self.u.clone(),
        }
    }

    fn choose_dt(&self, controller: &StepController) -> Result<f64> {
        let mut dt = controller.dt_max.min(1.25 * controller.dt);
        let speed = self.max_speed();
        if speed > 0.0 {
            dt = dt.min(controller.cfl_target * self.cfl_spacing() / speed);
        }
        if dt < controller.dt_min {
            return Err(Error::Halt(format!("time step {dt} below dt_min")));
        }
        Ok(dt)
    }
}

/// One transport step of 2D Euler on the disk.
pub fn euler_disk_step(state: &FlowState2D, controller: &mut StepController) -> Result<FlowState2D> {
    let grid = state.polar_grid()?.clone();
    let dt = state.choose_dt(controller)?;
    let u_half = state.half_step_velocity(dt);
    let mut next = state.clone();
    next.omega = semi_lagrangian_advect(&grid, &state.omega, &u_half, dt)?;
    next.t = state.t + dt;
    if next.odd_symmetry {
        next.project_symmetry();
    }
    next.u_prev = Some((state.u.clone(), dt));
    next.refresh_velocity()?;
    controller.dt = dt;
    Ok(next)
}

/// One step of the strip Boussinesq system: θ is transported, and ω is
/// transported with the forcing `∂_xθ` split evenly between the two ends
/// of the step (trapezoidal along characteristics).
pub fn boussinesq_strip_step(state: &FlowState2D, controller: &mut StepController) -> Result<FlowState2D> {
    let grid = match &state.domain {
        Domain2D::Strip(g) => g.clone(),
        Domain2D::Disk(_) => return Err(Error::Precondition("strip state required".into())),
    };
    let theta = state.theta.as_ref().ok_or_else(|| Error::Precondition("no theta".into()))?;
    let dt = state.choose_dt(controller)?;
    let u_half = state.half_step_velocity(dt);
    let tx0 = grid.d_dx(theta);
    let theta1 = semi_lagrangian_strip(&grid, theta, &u_half, dt)?;
    let tx1 = grid.d_dx(&theta1);
    let forced: Vec<f64> = state.omega.iter().zip(&tx0).map(|(w, t)| w + 0.5 * dt * t).collect();
    let moved = semi_lagrangian_strip(&grid, &forced, &u_half, dt)?;
    let mut next = state.clone();
    next.omega = moved.iter().zip(&tx1).map(|(w, t)| w + 0.5 * dt * t).collect();
    next.theta = Some(theta1);
    next.t = state.t + dt;
    if next.odd_symmetry {
        next.project_symmetry();
    }
    next.u_prev = Some((state.u.clone(), dt));
    next.refresh_velocity()?;
    controller.dt = dt;
    Ok(next)
}
