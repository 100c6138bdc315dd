//! The four 1D blow-up models, their verifiers and a shared adaptive stepper.

mod clm;
mod cky;
mod hl;
mod stepper;
mod tracker;

pub use clm::{clm_blowup_time, clm_exact, clm_rhs, degregorio_rhs};
pub use cky::{cky_initial_state, cky_rhs, cky_velocity, IntervalField};
pub use hl::{
    c0_constant, hl_initial_state, hl_kernel_k, hl_kernel_property_check, hl_kernel_property_check_with, hl_positivity_integral,
    hl_rhs, parity_defect, KernelReport, KernelViolation,
};
pub use stepper::{evaluate, step_rk4, Evaluation, StepController, StepOutcome};
pub use tracker::{
    chain_check, level_positions, track_characteristics, ChainCheck, CharacteristicTracker,
};

use crate::error::{Error, Result};
use crate::spectral1d::{PeriodicGrid1D, SpectralField1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Clm,
    DeGregorio,
    Hl,
    Cky,
}

impl ModelKind {
    pub fn has_theta(self) -> bool {
        matches!(self, ModelKind::Hl | ModelKind::Cky)
    }
}

/// Spatial carrier of a 1D state: periodic spectral grid or the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub enum Carrier {
    Periodic(PeriodicGrid1D),
    /// `n` uniform nodes on `[0, 1]`, endpoints included.
    Interval(usize),
}

impl Carrier {
    pub fn len(&self) -> usize {
        match self {
            Carrier::Periodic(g) => g.n(),
            Carrier::Interval(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        match self {
            Carrier::Periodic(g) => g.dx(),
            Carrier::Interval(n) => 1.0 / (*n as f64 - 1.0),
        }
    }

    pub fn node(&self, j: usize) -> f64 {
        match self {
            Carrier::Periodic(g) => g.node(j),
            Carrier::Interval(_) => j as f64 * self.dx(),
        }
    }
}

/// `(kind, t, ω, θ)` advanced by [`step_rk4`].
#[derive(Debug, Clone)]
pub struct Model1DState {
    pub kind: ModelKind,
    pub t: f64,
    pub carrier: Carrier,
    pub omega: Vec<f64>,
    pub theta: Option<Vec<f64>>,
    pub symmetry_enforced: bool,
}

impl Model1DState {
    pub fn new(
        kind: ModelKind,
        carrier: Carrier,
        omega: Vec<f64>,
        theta: Option<Vec<f64>>,
    ) -> Result<Self> {
        if omega.len() != carrier.len() {
            return Err(Error::GridMismatch("omega length differs from carrier".into()));
        }
        if kind.has_theta() != theta.is_some() {
            return Err(Error::Precondition(format!("{kind:?}: theta presence mismatch")));
        }
        if let Some(th) = &theta {
            if th.len() != carrier.len() {
                return Err(Error::GridMismatch("theta length differs from carrier".into()));
            }
        }
        if matches!(kind, ModelKind::Cky) != matches!(carrier, Carrier::Interval(_)) {
            return Err(Error::Precondition(format!("{kind:?} on the wrong carrier")));
        }
        if let Carrier::Interval(n) = carrier {
            if n < 64 {
                return Err(Error::InvalidGrid(format!("interval needs n >= 64, got {n}")));
            }
        }
        crate::error::check_finite(&omega)?;
        Ok(Self { kind, t: 0.0, carrier, omega, theta, symmetry_enforced: false })
    }

    pub fn periodic_grid(&self) -> Result<&PeriodicGrid1D> {
        match &self.carrier {
            Carrier::Periodic(g) => Ok(g),
            Carrier::Interval(_) => Err(Error::Precondition("periodic carrier required".into())),
        }
    }

    pub fn omega_field(&self) -> Result<SpectralField1D> {
        SpectralField1D::from_values(self.periodic_grid()?, self.omega.clone())
    }

    pub fn theta_field(&self) -> Result<SpectralField1D> {
        let th = self.theta.clone().ok_or_else(|| Error::Precondition("no theta".into()))?;
        SpectralField1D::from_values(self.periodic_grid()?, th)
    }

    pub fn max_abs_omega(&self) -> f64 {
        self.omega.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Projects ω onto odd and θ onto even functions about `x = 0`
    /// (periodic carrier only).
    pub fn enforce_symmetry(&mut self) {
        if !matches!(self.carrier, Carrier::Periodic(_)) {
            return;
        }
        let n = self.omega.len();
        let odd = |v: &mut Vec<f64>, sign: f64| {
            let old = v.clone();
            for j in 0..n {
                let mirror = old[(n - j) % n];
                v[j] = 0.5 * (old[j] + sign * mirror);
            }
        };
        odd(&mut self.omega, -1.0);
        if let Some(th) = self.theta.as_mut() {
            odd(th, 1.0);
        }
    }
}
