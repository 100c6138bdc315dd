//! WebAssembly bindings behind `www/index.html`: a CLM solve against its
//! closed form, slices of the HL velocity kernel, and the patch coefficient
//! margin across α.

use std::f64::consts::PI;

use wasm_bindgen::prelude::*;

use smallscale::models1d::{
    clm_blowup_time, clm_exact, hl_kernel_k, step_rk4, Carrier, Model1DState, ModelKind, StepController, StepOutcome,
};
use smallscale::spectral1d::{PeriodicGrid1D, SpectralField1D};
use smallscale::sqg_patch::coefficient_margin;

/// Numerical and exact CLM vorticity for `ω₀ = sin x` on `[0, 2π)`.
#[wasm_bindgen]
pub struct ClmProfile {
    x: Vec<f64>,
    numeric: Vec<f64>,
    exact: Vec<f64>,
    t: f64,
    blowup_time: f64,
    max_error: f64,
    steps: u32,
}

#[wasm_bindgen]
impl ClmProfile {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn numeric(&self) -> Vec<f64> {
        self.numeric.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn t(&self) -> f64 {
        self.t
    }

    #[wasm_bindgen(getter)]
    pub fn blowup_time(&self) -> f64 {
        self.blowup_time
    }

    #[wasm_bindgen(getter)]
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> u32 {
        self.steps
    }
}

fn message(e: smallscale::Error) -> String {
    e.to_string()
}

/// Integrates CLM with RK4 at fixed `dt` from `ω₀ = sin x` to `t`.
#[wasm_bindgen]
pub fn clm_profile(n: usize, t: f64, dt: f64) -> Result<ClmProfile, String> {
    if !(dt > 0.0) {
        return Err(format!("dt must be positive, got {dt}"));
    }
    let grid = PeriodicGrid1D::new(n, 2.0 * PI).map_err(message)?;
    let w0 = SpectralField1D::from_fn(&grid, f64::sin).map_err(message)?;
    let blowup_time = clm_blowup_time(&w0).map_err(message)?;
    if !(0.0..blowup_time).contains(&t) {
        return Err(format!("t must lie in [0, {blowup_time:.3}), got {t}"));
    }
    let mut state =
        Model1DState::new(ModelKind::Clm, Carrier::Periodic(grid.clone()), w0.values().to_vec(), None).map_err(message)?;
    let mut ctl = StepController { dt, dt_max: dt, cfl_target: 1.0, ..StepController::default() };
    let mut steps = 0;
    while t - state.t > 1e-12 {
        ctl.dt_max = dt.min(t - state.t);
        match step_rk4(&state, &mut ctl).map_err(message)? {
            StepOutcome::Accepted { state: next, .. } => state = next,
            StepOutcome::Collapse { dt } => return Err(format!("time step collapsed to {dt:e} at t = {}", state.t)),
        }
        steps += 1;
    }
    let exact = clm_exact(&w0, state.t).map_err(message)?.into_values();
    let max_error = exact.iter().zip(&state.omega).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ClmProfile {
        x: grid.nodes(),
        numeric: state.omega,
        exact,
        t: state.t,
        blowup_time,
        max_error,
        steps,
    })
}

/// `K(x, y)` of the HL velocity kernel at fixed `y` for `samples` points
/// `x ∈ (0, π)`, as interleaved `[x₀, K₀, x₁, K₁, ...]`. The singular point
/// `x = y` is reported as NaN.
#[wasm_bindgen]
pub fn hl_kernel_slice(y: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(y > 0.0 && y < PI) {
        return Err(format!("y must lie in (0, pi), got {y}"));
    }
    let grid = PeriodicGrid1D::new(64, 2.0 * PI).map_err(message)?;
    let mut out = Vec::with_capacity(2 * samples);
    for i in 1..=samples {
        let x = PI * i as f64 / (samples + 1) as f64;
        out.push(x);
        out.push(hl_kernel_k(x, y, &grid).unwrap_or(f64::NAN));
    }
    Ok(out)
}

/// Good and bad coefficients of the patch estimate on `points` values of α
/// in `(0, alpha_max]`, as rows `[α, good, bad, good - bad, 1/(50α)]`.
#[wasm_bindgen]
pub fn coefficient_table(alpha_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(alpha_max > 0.0 && alpha_max < 0.5) {
        return Err(format!("alpha_max must lie in (0, 0.5), got {alpha_max}"));
    }
    let mut out = Vec::with_capacity(5 * points);
    for k in 1..=points {
        let alpha = alpha_max * k as f64 / points as f64;
        let m = coefficient_margin(alpha).map_err(message)?;
        out.extend([alpha, m.good, m.bad, m.difference, m.required]);
    }
    Ok(out)
}
