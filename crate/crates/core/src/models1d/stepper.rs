use super::cky::{cky_rhs, cky_velocity, IntervalField};
use super::clm::{clm_rhs, degregorio_rhs};
use super::hl::hl_rhs;
use super::{Model1DState, ModelKind};
use crate::error::{Error, Result};
use crate::spectral1d::{hilbert_transform, periodic_bs_velocity, zero_mean_velocity};

/// Right-hand side plus the scales that limit the step.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub d_omega: Vec<f64>,
    pub d_theta: Option<Vec<f64>>,
    pub max_u: f64,
    /// `max |u_x|` (equivalently `max |Hω|` for the periodic models).
    pub max_stretch: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn evaluate(state: &Model1DState) -> Result<Evaluation> {
    match state.kind {
        ModelKind::Clm => {
            let w = state.omega_field()?;
            let stretch = hilbert_transform(&w)?.max_abs();
            Ok(Evaluation {
                d_omega: clm_rhs(&w)?.into_values(),
                d_theta: None,
                max_u: 0.0,
                max_stretch: stretch,
            })
        }
        ModelKind::DeGregorio => {
            let w = state.omega_field()?;
            Ok(Evaluation {
                d_omega: degregorio_rhs(&w)?.into_values(),
                d_theta: None,
                max_u: zero_mean_velocity(&w)?.max_abs(),
                max_stretch: hilbert_transform(&w)?.max_abs(),
            })
        }
        ModelKind::Hl => {
            let w = state.omega_field()?;
            let th = state.theta_field()?;
            let (dw, dt) = hl_rhs(&w, &th)?;
            Ok(Evaluation {
                d_omega: dw.into_values(),
                d_theta: Some(dt.into_values()),
                max_u: periodic_bs_velocity(&w)?.max_abs(),
                max_stretch: hilbert_transform(&w)?.max_abs(),
            })
        }
        ModelKind::Cky => {
            let w = IntervalField::new(state.omega.clone())?;
            let th = IntervalField::new(state.theta.clone().unwrap_or_default())?;
            let (dw, dt) = cky_rhs(&w, &th)?;
            let u = cky_velocity(&w)?;
            let h = w.dx();
            let stretch = u.values().windows(2).map(|p| ((p[1] - p[0]) / h).abs()).fold(0.0, f64::max);
            Ok(Evaluation {
                d_omega: dw.into_values(),
                d_theta: Some(dt.into_values()),
                max_u: max_abs(u.values()),
                max_stretch: stretch,
            })
        }
    }
}

/// Adaptive step control for [`step_rk4`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepController {
    pub dt: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub cfl_target: f64,
    /// Runs end with "blow-up suspected" once `max|ω|` exceeds this.
    pub blowup_cap: f64,
}

impl Default for StepController {
    fn default() -> Self {
        Self { dt: 1e-3, dt_min: 1e-10, dt_max: 1e-2, cfl_target: 0.5, blowup_cap: 1e6 }
    }
}

impl StepController {
    /// Step permitted by the transport CFL and the stretching scale.
    pub fn limit(&self, eval: &Evaluation, dx: f64) -> f64 {
        let mut dt = self.dt_max.min(1.25 * self.dt);
        if eval.max_u > 0.0 {
            dt = dt.min(self.cfl_target * dx / eval.max_u);
        }
        if eval.max_stretch > 0.0 {
            dt = dt.min(0.5 / eval.max_stretch);
        }
        dt
    }

    pub fn cap_exceeded(&self, state: &Model1DState) -> bool {
        state.max_abs_omega() > self.blowup_cap
    }
}

#[derive(Debug, Clone)]
pub enum StepOutcome {
    Accepted { state: Model1DState, dt: f64 },
    /// The step size fell below `dt_min`.
    Collapse { dt: f64 },
}

fn combine(base: &[f64], terms: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = base.to_vec();
    for (v, s) in terms {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += s * x;
        }
    }
    out
}

fn shifted(state: &Model1DState, k: &Evaluation, h: f64) -> Model1DState {
    let mut s = state.clone();
    s.t += h;
    s.omega = combine(&state.omega, &[(&k.d_omega, h)]);
    if let (Some(th), Some(dth)) = (&state.theta, &k.d_theta) {
        s.theta = Some(combine(th, &[(dth, h)]));
    }
    s
}

fn rk4(state: &Model1DState, k1: &Evaluation, dt: f64) -> Result<Model1DState> {
    let k2 = evaluate(&shifted(state, k1, 0.5 * dt))?;
    let k3 = evaluate(&shifted(state, &k2, 0.5 * dt))?;
    let k4 = evaluate(&shifted(state, &k3, dt))?;
    let w = dt / 6.0;
    let mut next = state.clone();
    next.t = state.t + dt;
    next.omega = combine(
        &state.omega,
        &[(&k1.d_omega, w), (&k2.d_omega, 2.0 * w), (&k3.d_omega, 2.0 * w), (&k4.d_omega, w)],
    );
    if let Some(th) = &state.theta {
        let get = |k: &Evaluation| k.d_theta.clone().unwrap_or_default();
        let (a, b, c, d) = (get(k1), get(&k2), get(&k3), get(&k4));
        next.theta = Some(combine(th, &[(&a, w), (&b, 2.0 * w), (&c, 2.0 * w), (&d, w)]));
    }
    Ok(next)
}

/// One classical RK4 step. The step is halved and retried when `max|ω|`
/// jumps by more than 50% or the stage values turn non-finite.
pub fn step_rk4(state: &Model1DState, controller: &mut StepController) -> Result<StepOutcome> {
    let k1 = evaluate(state)?;
    let mut dt = controller.limit(&k1, state.carrier.dx());
    let before = state.max_abs_omega();
    loop {
        if dt < controller.dt_min {
            return Ok(StepOutcome::Collapse { dt });
        }
        let next = match rk4(state, &k1, dt) {
            Ok(n) => n,
            Err(Error::NonFinite { .. }) => {
                dt *= 0.5;
                continue;
            }
            Err(e) => return Err(e),
        };
        let after = next.max_abs_omega();
        let finite = next.omega.iter().chain(next.theta.iter().flatten()).all(|v| v.is_finite());
        if !finite || (before > 1e-300 && after > 1.5 * before) {
            dt *= 0.5;
            continue;
        }
        let mut next = next;
        if next.symmetry_enforced {
            next.enforce_symmetry();
        }
        controller.dt = dt;
        return Ok(StepOutcome::Accepted { state: next, dt });
    }
}
