use super::cky::{cky_velocity, IntervalField};
use super::hl::tail_integral;
use super::{Carrier, Model1DState, ModelKind};
use crate::error::{Error, Result};
use crate::quadrature::Estimate;
use crate::spectral1d::{hilbert_transform, periodic_bs_velocity, spectral_derivative};

/// Characteristics `Φ_n(t)` started from the levels `x_n`, with
/// `ψ_n = -log Φ_n` and the weighted integrals `Ω_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicTracker {
    pub levels: Vec<f64>,
    pub phi: Vec<f64>,
    pub omega_n: Vec<f64>,
    /// Reference amplitude `θ₀` at the far end of the half domain.
    pub amplitude: f64,
}

impl CharacteristicTracker {
    pub fn new(levels: Vec<f64>, amplitude: f64) -> Result<Self> {
        if levels.is_empty() || levels.windows(2).any(|p| p[1] >= p[0]) || levels[levels.len() - 1] <= 0.0 {
            return Err(Error::Precondition("levels must be positive and strictly decreasing".into()));
        }
        let n = levels.len();
        Ok(Self { phi: levels.clone(), levels, omega_n: vec![0.0; n], amplitude })
    }

    pub fn psi(&self) -> Vec<f64> {
        self.phi.iter().map(|p| -p.ln()).collect()
    }
}

/// Points `x_n` in `(lo, hi)` with `θ₀(x_n) = (1/2 + 2^{-(n+2)}) A`,
/// `n = 0..count`, found by bisection. `θ₀` must increase from below `A/2`
/// at `lo` to at least `3A/4` at `hi`.
pub fn level_positions(
    theta0: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    amplitude: f64,
    count: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    for n in 0..count {
        let target = (0.5 + 0.5f64.powi(n as i32 + 2)) * amplitude;
        let (mut a, mut b) = (lo, hi);
        if !(theta0(a) < target && theta0(b) >= target) {
            return Err(Error::Precondition(format!("level {n} ({target}) not bracketed")));
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if theta0(m) < target {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * b.abs() {
                break;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

fn half_length(state: &Model1DState) -> f64 {
    match &state.carrier {
        Carrier::Periodic(g) => 0.5 * g.length(),
        Carrier::Interval(_) => 1.0,
    }
}

/// Velocity evaluator at arbitrary points of the state's carrier.
fn velocity_at(state: &Model1DState) -> Result<Box<dyn Fn(f64) -> f64>> {
    match state.kind {
        ModelKind::Hl => {
            let u = periodic_bs_velocity(&state.omega_field()?)?;
            Ok(Box::new(move |x| u.eval_at(x)))
        }
        ModelKind::Cky => {
            let u = cky_velocity(&IntervalField::new(state.omega.clone())?)?;
            Ok(Box::new(move |x| u.interpolate(x)))
        }
        k => Err(Error::Precondition(format!("{k:?} has no characteristic tracker"))),
    }
}

/// Advances every `Φ_n` from `old.t` to `new.t` by Heun's method with the
/// velocities of the two states, then refreshes `Ω_n` on `new`.
pub fn track_characteristics(
    old: &Model1DState,
    new: &Model1DState,
    tracker: &CharacteristicTracker,
) -> Result<CharacteristicTracker> {
    let dt = new.t - old.t;
    let (u0, u1) = (velocity_at(old)?, velocity_at(new)?);
    let end = half_length(new);
    let mut next = tracker.clone();
    for p in next.phi.iter_mut() {
        let k1 = u0(*p);
        let k2 = u1(*p + dt * k1);
        *p += 0.5 * dt * (k1 + k2);
        if !(*p > 0.0 && *p < end) {
            return Err(Error::Halt("characteristic exited domain".into()));
        }
    }
    let profile = WeightedProfile::new(new)?;
    next.omega_n = next.phi.iter().map(|&p| profile.omega(p).value).collect();
    Ok(next)
}

/// Samples on `[0, L/2]` (or `[0, 1]`) of the integrands entering `Ω_n`
/// and its time derivative, with the weight `w(y) = cot(μy)` (HL) or `1/y`
/// (CKY).
struct WeightedProfile {
    h: f64,
    /// `ω w`
    omega_w: Vec<f64>,
    /// `ω (u w)_y + θ_y w`
    rate: Vec<f64>,
    /// Pointwise evaluator of the same two integrands.
    point: Box<dyn Fn(f64) -> (f64, f64)>,
    /// `-u(x)/x`
    psi_rate: Box<dyn Fn(f64) -> f64>,
    /// Multiplier in `dψ/dt >= factor · Ω`.
    psi_factor: f64,
}

fn fill_origin(v: &mut [f64]) {
    // the weighted integrands have finite limits at y = 0
    v[0] = 2.0 * v[1] - v[2];
}

impl WeightedProfile {
    fn new(state: &Model1DState) -> Result<Self> {
        match state.kind {
            ModelKind::Hl => {
                let grid = state.periodic_grid()?.clone();
                let w = state.omega_field()?;
                let th = state.theta_field()?;
                let u = periodic_bs_velocity(&w)?;
                let ux = hilbert_transform(&w)?;
                let tx = spectral_derivative(&th)?;
                let mu = grid.mu();
                let m = grid.n() / 2;
                let f = move |y: f64, w: f64, u: f64, ux: f64, tx: f64| {
                    let (s, c) = (mu * y).sin_cos();
                    let cot = c / s;
                    (w * cot, w * (ux * cot - mu * u / (s * s)) + tx * cot)
                };
                let mut omega_w = vec![0.0; m + 1];
                let mut rate = vec![0.0; m + 1];
                for j in 1..=m {
                    let y = grid.node(j);
                    let v = f(y, w.values()[j], u.values()[j], ux.values()[j], tx.values()[j]);
                    omega_w[j] = v.0;
                    rate[j] = v.1;
                }
                omega_w[m] = 0.0;
                rate[m] = 0.0;
                fill_origin(&mut omega_w);
                fill_origin(&mut rate);
                let u2 = u.clone();
                Ok(Self {
                    h: grid.dx(),
                    omega_w,
                    rate,
                    point: Box::new(move |y| {
                        f(y, w.eval_at(y), u.eval_at(y), ux.eval_at(y), tx.eval_at(y))
                    }),
                    psi_rate: Box::new(move |x| -u2.eval_at(x) / x),
                    psi_factor: 2.0 * mu / std::f64::consts::PI,
                })
            }
            ModelKind::Cky => {
                let w = IntervalField::new(state.omega.clone())?;
                let th = IntervalField::new(state.theta.clone().unwrap_or_default())?;
                let u = cky_velocity(&w)?;
                let h = w.dx();
                let tv = th.values();
                let n = tv.len();
                let mut tx = vec![0.0; n];
                for j in 1..n - 1 {
                    tx[j] = (tv[j + 1] - tv[j - 1]) / (2.0 * h);
                }
                let tx = IntervalField::new(tx)?;
                // (u/y)_y = ω/y, so the stretching term is ω²/y
                let f = |y: f64, w: f64, tx: f64| (w / y, (w * w + tx) / y);
                let mut omega_w = vec![0.0; n];
                let mut rate = vec![0.0; n];
                for j in 1..n {
                    let v = f(j as f64 * h, w.values()[j], tx.values()[j]);
                    omega_w[j] = v.0;
                    rate[j] = v.1;
                }
                fill_origin(&mut omega_w);
                fill_origin(&mut rate);
                Ok(Self {
                    h,
                    omega_w,
                    rate,
                    point: Box::new(move |y| f(y, w.interpolate(y), tx.interpolate(y))),
                    psi_rate: Box::new(move |x| -u.interpolate(x) / x),
                    psi_factor: 1.0,
                })
            }
            k => Err(Error::Precondition(format!("{k:?} has no characteristic tracker"))),
        }
    }

    fn omega(&self, a: f64) -> Estimate {
        tail_integral(&self.omega_w, self.h, a, (self.point)(a).0)
    }

    fn omega_rate(&self, a: f64) -> Estimate {
        tail_integral(&self.rate, self.h, a, (self.point)(a).1)
    }
}

/// Instantaneous check of the growth chain
/// `dψ_n/dt >= f Ω_n` and, for `n >= 1`,
/// `dΩ_n/dt >= 2^{-(n+2)} c₀ A e^{ψ_{n-1}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainCheck {
    pub t: f64,
    pub psi_rate: Vec<f64>,
    pub psi_bound: Vec<f64>,
    pub omega_rate: Vec<f64>,
    pub omega_bound: Vec<f64>,
    pub failures: Vec<String>,
}

impl ChainCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `c0` is the constant in `w(Φ) >= c0/Φ` below the first level (measured
/// with [`super::c0_constant`] for HL, 1 for CKY). Each comparison allows
/// `rel_tol` relative slack on top of the quadrature error estimate.
pub fn chain_check(
    state: &Model1DState,
    tracker: &CharacteristicTracker,
    c0: f64,
    rel_tol: f64,
) -> Result<ChainCheck> {
    let profile = WeightedProfile::new(state)?;
    let m = tracker.phi.len();
    let mut check = ChainCheck {
        t: state.t,
        psi_rate: Vec::with_capacity(m),
        psi_bound: Vec::with_capacity(m),
        omega_rate: Vec::with_capacity(m),
        omega_bound: Vec::with_capacity(m),
        failures: Vec::new(),
    };
    for (n, &p) in tracker.phi.iter().enumerate() {
        let om = profile.omega(p);
        let lhs = (profile.psi_rate)(p);
        let rhs = profile.psi_factor * om.value;
        let slack = rel_tol * lhs.abs().max(rhs.abs()) + profile.psi_factor * om.error;
        if lhs < rhs - slack {
            check.failures.push(format!("n = {n}: dpsi/dt = {lhs} < {rhs}"));
        }
        check.psi_rate.push(lhs);
        check.psi_bound.push(rhs);

        let rate = profile.omega_rate(p);
        let bound = if n == 0 {
            0.0
        } else {
            0.5f64.powi(n as i32 + 2) * c0 * tracker.amplitude / tracker.phi[n - 1]
        };
        if n > 0 {
            let slack = rel_tol * rate.value.abs().max(bound) + rate.error;
            if rate.value < bound - slack {
                check.failures.push(format!("n = {n}: dOmega/dt = {} < {bound}", rate.value));
            }
        }
        check.omega_rate.push(rate.value);
        check.omega_bound.push(bound);
    }
    Ok(check)
}
