use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{Model, RunSpec};
use super::snapshot::{write_contour_csv, Snapshot};
use crate::diagnostics::{format_f64, CsvWriter, TimeSeries};
use crate::error::{Error, Result};
use crate::fields2d::{
    boussinesq_initial_theta, boussinesq_strip_step, disk_frame, euler_disk_step, front_back_track, kato_ratio,
    ks_initial_vorticity, velocity_decomposition_residual, Domain2D, FlowState2D, FrontBackState, FrontStatus,
    PolarGrid, Sector, StripGrid,
};
use crate::models1d::{
    c0_constant, chain_check, cky_initial_state, clm_blowup_time, clm_exact, hl_initial_state, level_positions,
    step_rk4, track_characteristics, Carrier, CharacteristicTracker, IntervalField, Model1DState, ModelKind,
    StepController, StepOutcome,
};
use crate::spectral1d::{spectral_derivative, PeriodicGrid1D};
use crate::sqg_patch::{
    barrier_containment, evolve_patch, initial_patch, node_velocities, BarrierState, PatchSystem,
    RedistributionParams,
};

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Completed,
    BlowupSuspected,
    Contact,
    UnderResolved,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Completed => "completed",
            Verdict::BlowupSuspected => "blow-up suspected",
            Verdict::Contact => "contact",
            Verdict::UnderResolved => "under-resolved",
        })
    }
}

/// Outcome of [`run`]: the verdict, the series that was written to disk and
/// model-specific summary values.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub model: Model,
    pub verdict: Verdict,
    pub reason: String,
    pub t_final: f64,
    pub steps: u64,
    pub csv: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub series: TimeSeries,
    pub summary: Vec<(String, String)>,
}

impl RunReport {
    /// Plain-text `key: value` block.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "model: {}\nverdict: {}\nreason: {}\nt_final: {}\nsteps: {}\ncsv: {}\n",
            self.model.name(),
            self.verdict,
            self.reason,
            format_f64(self.t_final),
            self.steps,
            self.csv.display()
        );
        for (k, v) in &self.summary {
            s.push_str(&format!("{k}: {v}\n"));
        }
        s
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// A run ended before `t_end`.
struct Stop {
    verdict: Verdict,
    reason: String,
}

/// One model loop: produces diagnostic rows, advances a step at a time and
/// dumps snapshots.
trait Driver {
    fn columns(&self) -> Vec<String>;
    fn t(&self) -> f64;
    /// Diagnostics of the current state.
    fn row(&mut self) -> Result<Vec<f64>>;
    /// Advances one step no longer than `max_dt`.
    fn step(&mut self, max_dt: f64) -> Result<Option<Stop>>;
    fn snapshot(&self, path_stem: &Path) -> Result<PathBuf>;
    fn summary(&self, series: &TimeSeries) -> Result<Vec<(String, String)>>;
}

/// Runs the configured model to `t_end` or to a halt, writing the CSV
/// series (flushed per row) and snapshots into `out_dir`.
pub fn run(spec: &RunSpec, out_dir: &Path) -> Result<RunReport> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut driver = make_driver(spec)?;
    let t_end = spec.t_end.unwrap_or(1.0);
    let columns = driver.columns();
    let csv = out_dir.join(&spec.output.csv);
    let mut writer = CsvWriter::create(&csv, &columns)?;
    let mut series = TimeSeries::new(columns);
    series.metadata = vec![("model".into(), spec.model.name().into())];
    let mut emit = |series: &mut TimeSeries, t: f64, row: Vec<f64>| -> Result<()> {
        writer.write_row(t, &row)?;
        series.push(t, row)
    };
    let first = driver.row()?;
    emit(&mut series, driver.t(), first)?;
    let mut snapshots = Vec::new();
    let mut steps = 0u64;
    let tiny = 1e-9 * t_end.max(1.0);
    let stop = loop {
        let remaining = t_end - driver.t();
        if remaining <= tiny {
            break Stop { verdict: Verdict::Completed, reason: format!("reached t_end = {t_end}") };
        }
        let t_prev = driver.t();
        let outcome = driver.step(remaining)?;
        if let Some(stop) = outcome {
            if driver.t() != t_prev {
                steps += 1;
                let row = driver.row()?;
                emit(&mut series, driver.t(), row)?;
            }
            break stop;
        }
        steps += 1;
        let row = driver.row()?;
        emit(&mut series, driver.t(), row)?;
        let every = spec.output.snapshot_every;
        if every > 0 && steps % every == 0 {
            let stem = out_dir.join(format!("{}_{steps:06}", spec.output.snapshot_prefix));
            snapshots.push(driver.snapshot(&stem)?);
        }
    };
    if spec.output.snapshot_every > 0 {
        let stem = out_dir.join(format!("{}_final", spec.output.snapshot_prefix));
        snapshots.push(driver.snapshot(&stem)?);
    }
    let summary = driver.summary(&series)?;
    let report = RunReport {
        model: spec.model,
        verdict: stop.verdict,
        reason: stop.reason,
        t_final: driver.t(),
        steps,
        csv,
        snapshots,
        series,
        summary,
    };
    let path = out_dir.join("report.txt");
    fs::write(&path, report.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

fn make_driver(spec: &RunSpec) -> Result<Box<dyn Driver>> {
    Ok(match spec.model {
        Model::Clm | Model::Degregorio => Box::new(PeriodicDriver::new(spec)?),
        Model::Hl => Box::new(HlDriver::new(spec)?),
        Model::Cky => Box::new(CkyDriver::new(spec)?),
        Model::Euler2d => Box::new(EulerDriver::new(spec)?),
        Model::Boussinesq => Box::new(BoussinesqDriver::new(spec)?),
        Model::SqgPatch => Box::new(PatchDriver::new(spec)?),
    })
}

fn controller(spec: &RunSpec) -> StepController {
    let d = StepController::default();
    let t = &spec.time;
    StepController {
        dt: t.dt.unwrap_or(d.dt),
        dt_min: t.dt_min.unwrap_or(d.dt_min),
        dt_max: t.dt_max.unwrap_or(d.dt_max),
        cfl_target: t.cfl.unwrap_or(d.cfl_target),
        blowup_cap: t.blowup_cap.unwrap_or(d.blowup_cap),
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn names(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (0..count).map(move |n| format!("{prefix}_{n}"))
}

/// One RK4 step of a 1D model with `dt_max` clipped to `max_dt`.
fn step_1d(state: &mut Model1DState, ctl: &mut StepController, max_dt: f64) -> Result<std::result::Result<(), Stop>> {
    let saved = ctl.dt_max;
    ctl.dt_max = saved.min(max_dt);
    let outcome = step_rk4(state, ctl);
    ctl.dt_max = saved;
    match outcome {
        Ok(StepOutcome::Accepted { state: next, .. }) => {
            *state = next;
            if ctl.cap_exceeded(state) {
                return Ok(Err(Stop {
                    verdict: Verdict::BlowupSuspected,
                    reason: format!("max|omega| exceeded the cap {} at t = {}", ctl.blowup_cap, state.t),
                }));
            }
            Ok(Ok(()))
        }
        Ok(StepOutcome::Collapse { dt }) => Ok(Err(Stop {
            verdict: Verdict::BlowupSuspected,
            reason: format!("time step collapsed to {dt:.3e} below dt_min {} at t = {}", ctl.dt_min, state.t),
        })),
        Err(e) => Err(e),
    }
}

fn snapshot_1d(state: &Model1DState, model: &str, grid: &str, stem: &Path) -> Result<PathBuf> {
    let path = stem.with_extension("bin");
    let mut cols: Vec<(&str, &[f64])> = vec![("omega", &state.omega)];
    if let Some(th) = &state.theta {
        cols.push(("theta", th));
    }
    Snapshot::from_columns(model, grid, state.t, &cols)?.write(&path)?;
    Ok(path)
}

/// CLM and De Gregorio on a periodic grid.
struct PeriodicDriver {
    model: Model,
    state: Model1DState,
    ctl: StepController,
    initial: Vec<f64>,
    last_dt: f64,
}

impl PeriodicDriver {
    fn new(spec: &RunSpec) -> Result<Self> {
        let grid = PeriodicGrid1D::new(spec.grid.n.unwrap_or(256), spec.grid.length.unwrap_or(2.0 * PI))?;
        let k = 2.0 * PI / grid.length();
        let f: fn(f64) -> f64 = if spec.params.initial.as_deref() == Some("cos") { f64::cos } else { f64::sin };
        let omega: Vec<f64> = grid.nodes().iter().map(|x| f(k * x)).collect();
        let kind = if spec.model == Model::Clm { ModelKind::Clm } else { ModelKind::DeGregorio };
        let state = Model1DState::new(kind, Carrier::Periodic(grid), omega.clone(), None)?;
        Ok(Self { model: spec.model, state, ctl: controller(spec), initial: omega, last_dt: 0.0 })
    }
}

impl Driver for PeriodicDriver {
    fn columns(&self) -> Vec<String> {
        let last = if self.model == Model::Clm { "error_vs_exact" } else { "deviation_from_initial" };
        ["dt", "max_abs_omega", "max_abs_omega_x", last].map(String::from).to_vec()
    }

    fn t(&self) -> f64 {
        self.state.t
    }

    fn row(&mut self) -> Result<Vec<f64>> {
        let w = self.state.omega_field()?;
        let wx = spectral_derivative(&w)?.max_abs();
        let last = if self.model == Model::Clm {
            let g = self.state.periodic_grid()?;
            let w0 = crate::spectral1d::SpectralField1D::from_values(g, self.initial.clone())?;
            if self.state.t >= clm_blowup_time(&w0)? {
                return Ok(vec![self.last_dt, self.state.max_abs_omega(), wx, f64::NAN]);
            }
            let exact = clm_exact(&w0, self.state.t)?;
            exact.values().iter().zip(&self.state.omega).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            self.initial.iter().zip(&self.state.omega).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        Ok(vec![self.last_dt, self.state.max_abs_omega(), wx, last])
    }

    fn step(&mut self, max_dt: f64) -> Result<Option<Stop>> {
        let t0 = self.state.t;
        let r = step_1d(&mut self.state, &mut self.ctl, max_dt)?;
        self.last_dt = self.state.t - t0;
        Ok(r.err())
    }

    fn snapshot(&self, stem: &Path) -> Result<PathBuf> {
        let g = self.state.periodic_grid()?;
        snapshot_1d(&self.state, self.model.name(), &format!("periodic n={} length={}", g.n(), g.length()), stem)
    }

    fn summary(&self, series: &TimeSeries) -> Result<Vec<(String, String)>> {
        let last = series.rows.last().map_or(f64::NAN, |r| r[3]);
        let mut out = vec![(self.columns()[3].clone(), format_f64(last))];
        if self.model == Model::Clm {
            let g = self.state.periodic_grid()?;
            let w0 = crate::spectral1d::SpectralField1D::from_values(g, self.initial.clone())?;
            out.push(("exact_blowup_time".into(), format_f64(clm_blowup_time(&w0)?)));
        }
        Ok(out)
    }
}

/// Spectral-tail threshold and θ-extremum drift that bound the resolved
/// window of the HL run.
const HL_TAIL_TOL: f64 = 1e-6;
const HL_THETA_DRIFT: f64 = 1e-3;

/// HL blow-up run with characteristic tracking and the chain check at every
/// accepted step.
struct HlDriver {
    state: Model1DState,
    ctl: StepController,
    tracker: CharacteristicTracker,
    c0: f64,
    theta_range: (f64, f64),
    resolved: bool,
    resolved_until: f64,
    last_dt: f64,
}

impl HlDriver {
    fn new(spec: &RunSpec) -> Result<Self> {
        let grid = PeriodicGrid1D::new(spec.grid.n.unwrap_or(4096), spec.grid.length.unwrap_or(2.0 * PI))?;
        let a = spec.params.amplitude.unwrap_or(1e4);
        let state = hl_initial_state(&grid, a)?;
        let th = state.theta_field()?;
        let levels = level_positions(|x| th.eval_at(x), 1e-9, 0.5 * grid.length(), a, spec.params.tracker_levels.unwrap_or(9))?;
        let c0 = c0_constant(grid.mu(), levels[0]);
        let tracker = CharacteristicTracker::new(levels, a)?;
        let theta = state.theta.as_deref().unwrap_or_default();
        let theta_range = (theta.iter().cloned().fold(f64::INFINITY, f64::min), theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        Ok(Self {
            state,
            ctl: controller(spec),
            tracker,
            c0,
            theta_range,
            resolved: true,
            resolved_until: 0.0,
            last_dt: 0.0,
        })
    }
}

impl Driver for HlDriver {
    fn columns(&self) -> Vec<String> {
        let m = self.tracker.levels.len();
        let mut c: Vec<String> = ["dt", "max_abs_omega", "max_abs_omega_x", "max_abs_theta_x"].map(String::from).to_vec();
        c.extend(names("psi", m));
        c.extend(names("Omega", m));
        c.extend(
            ["omega_tail", "theta_tail", "theta_min", "theta_max", "min_omega_half", "resolved", "chain_pass"]
                .map(String::from),
        );
        c
    }

    fn t(&self) -> f64 {
        self.state.t
    }

    fn row(&mut self) -> Result<Vec<f64>> {
        let w = self.state.omega_field()?;
        let th = self.state.theta_field()?;
        let (wt, tt) = (w.spectral_tail(), th.spectral_tail());
        let (tmin, tmax) = (
            th.values().iter().cloned().fold(f64::INFINITY, f64::min),
            th.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let (lo, hi) = self.theta_range;
        let scale = hi - lo;
        let ok = wt <= HL_TAIL_TOL
            && tt <= HL_TAIL_TOL
            && (tmax - hi).abs() <= HL_THETA_DRIFT * scale
            && (tmin - lo).abs() <= HL_THETA_DRIFT * scale;
        if self.resolved && ok {
            self.resolved_until = self.state.t;
        } else {
            self.resolved = false;
        }
        let n = self.state.omega.len();
        let min_half = self.state.omega[..=n / 2].iter().cloned().fold(f64::INFINITY, f64::min);
        let chain = chain_check(&self.state, &self.tracker, self.c0, 1e-6)?.passed();
        let mut row = vec![
            self.last_dt,
            self.state.max_abs_omega(),
            spectral_derivative(&w)?.max_abs(),
            spectral_derivative(&th)?.max_abs(),
        ];
        row.extend(self.tracker.psi());
        row.extend(self.tracker.omega_n.iter().cloned());
        row.extend([wt, tt, tmin, tmax, min_half, f64::from(u8::from(self.resolved)), f64::from(u8::from(chain))]);
        Ok(row)
    }

    fn step(&mut self, max_dt: f64) -> Result<Option<Stop>> {
        let old = self.state.clone();
        let stepped = step_1d(&mut self.state, &mut self.ctl, max_dt)?;
        self.last_dt = self.state.t - old.t;
        if let Err(stop) = stepped {
            return Ok(Some(stop));
        }
        match track_characteristics(&old, &self.state, &self.tracker) {
            Ok(tr) => self.tracker = tr,
            Err(Error::Halt(reason)) => {
                return Ok(Some(Stop { verdict: Verdict::UnderResolved, reason: format!("{reason} at t = {}", self.state.t) }))
            }
            Err(e) => return Err(e),
        }
        Ok(None)
    }

    fn snapshot(&self, stem: &Path) -> Result<PathBuf> {
        let g = self.state.periodic_grid()?;
        snapshot_1d(&self.state, "hl", &format!("periodic n={} length={}", g.n(), g.length()), stem)
    }

    fn summary(&self, series: &TimeSeries) -> Result<Vec<(String, String)>> {
        let thx = series.column("max_abs_theta_x")?;
        let res = series.column("resolved")?;
        let chain = series.column("chain_pass")?;
        let last_resolved = res.iter().rposition(|&r| r == 1.0).unwrap_or(0);
        let failures = (0..=last_resolved).filter(|&k| chain[k] != 1.0).count();
        Ok(vec![
            ("c0".into(), format_f64(self.c0)),
            ("resolved_until".into(), format_f64(self.resolved_until)),
            ("theta_x_growth_resolved".into(), format_f64(thx[last_resolved] / thx[0])),
            ("chain_failures_resolved".into(), failures.to_string()),
            ("dt_final".into(), format_f64(self.ctl.dt)),
        ])
    }
}

/// CKY run on `[0, 1]` with tracked θ-level points.
struct CkyDriver {
    state: Model1DState,
    ctl: StepController,
    tracker: CharacteristicTracker,
    last_dt: f64,
}

impl CkyDriver {
    fn new(spec: &RunSpec) -> Result<Self> {
        let a = spec.params.amplitude.unwrap_or(10.0);
        let state = cky_initial_state(spec.grid.n.unwrap_or(2048), a)?;
        let theta = IntervalField::new(state.theta.clone().unwrap_or_default())?;
        let levels = level_positions(|x| theta.interpolate(x), 0.2, 0.8, a, spec.params.tracker_levels.unwrap_or(3))?;
        let tracker = CharacteristicTracker::new(levels, a)?;
        Ok(Self { state, ctl: controller(spec), tracker, last_dt: 0.0 })
    }
}

fn max_centered_difference(v: &[f64], h: f64) -> f64 {
    v.windows(3).map(|w| ((w[2] - w[0]) / (2.0 * h)).abs()).fold(0.0, f64::max)
}

impl Driver for CkyDriver {
    fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = ["dt", "max_abs_omega", "max_abs_omega_x", "max_abs_theta_x"].map(String::from).to_vec();
        c.extend(names("psi", self.tracker.levels.len()));
        c
    }

    fn t(&self) -> f64 {
        self.state.t
    }

    fn row(&mut self) -> Result<Vec<f64>> {
        let h = self.state.carrier.dx();
        let th = self.state.theta.as_deref().unwrap_or_default();
        let mut row = vec![
            self.last_dt,
            self.state.max_abs_omega(),
            max_centered_difference(&self.state.omega, h),
            max_centered_difference(th, h),
        ];
        row.extend(self.tracker.psi());
        Ok(row)
    }

    /// Support reaching the endpoint cells ends the run as a suspected
    /// blow-up: the data is being swept into the stagnation point at the
    /// origin, and the arrival time converges under grid refinement.
    fn step(&mut self, max_dt: f64) -> Result<Option<Stop>> {
        let old = self.state.clone();
        let stepped = step_1d(&mut self.state, &mut self.ctl, max_dt);
        self.last_dt = self.state.t - old.t;
        match stepped {
            Ok(Ok(())) => {}
            Ok(Err(stop)) => return Ok(Some(stop)),
            Err(Error::Halt(reason)) => {
                return Ok(Some(Stop { verdict: Verdict::BlowupSuspected, reason: format!("{reason} at t = {}", old.t) }))
            }
            Err(e) => return Err(e),
        }
        match track_characteristics(&old, &self.state, &self.tracker) {
            Ok(tr) => self.tracker = tr,
            Err(Error::Halt(reason)) => {
                return Ok(Some(Stop { verdict: Verdict::UnderResolved, reason: format!("{reason} at t = {}", self.state.t) }))
            }
            Err(e) => return Err(e),
        }
        Ok(None)
    }

    fn snapshot(&self, stem: &Path) -> Result<PathBuf> {
        snapshot_1d(&self.state, "cky", &format!("interval n={}", self.state.omega.len()), stem)
    }

    fn summary(&self, _series: &TimeSeries) -> Result<Vec<(String, String)>> {
        Ok(self.tracker.psi().iter().enumerate().map(|(n, p)| (format!("psi_{n}_final"), format_f64(*p))).collect())
    }
}

fn step_2d(
    state: &mut FlowState2D,
    ctl: &mut StepController,
    max_dt: f64,
    stepper: fn(&FlowState2D, &mut StepController) -> Result<FlowState2D>,
) -> Result<Option<Stop>> {
    let saved = ctl.dt_max;
    ctl.dt_max = saved.min(max_dt);
    let next = stepper(state, ctl);
    ctl.dt_max = saved;
    match next {
        Ok(n) => {
            *state = n;
            Ok(None)
        }
        Err(Error::Halt(reason)) => {
            Ok(Some(Stop { verdict: Verdict::BlowupSuspected, reason: format!("{reason} at t = {}", state.t) }))
        }
        Err(e) => Err(e),
    }
}

/// Sector probes of the KS diagnostics: angle and sector.
const PROBES: [(f64, Sector); 2] = [(PI / 12.0, Sector::D1), (5.0 * PI / 12.0, Sector::D2)];
/// Distances along the diagonal where `-u₁/u₂` is sampled.
const DIAGONAL: [f64; 2] = [0.02, 0.05];

/// 2D Euler on the disk; KS data adds front/back tracking and probes.
struct EulerDriver {
    state: FlowState2D,
    ctl: StepController,
    front: Option<FrontBackState>,
    gamma: f64,
    delta: f64,
    initial_norms: (f64, f64, f64, f64),
    last_dt: f64,
}

impl EulerDriver {
    fn new(spec: &RunSpec) -> Result<Self> {
        let p = &spec.params;
        let grid = PolarGrid::new(spec.grid.nr.unwrap_or(128), spec.grid.ntheta.unwrap_or(256))?;
        let ks = p.initial.as_deref() != Some("smooth");
        let omega = if ks {
            ks_initial_vorticity(&grid, p.eps_s.unwrap_or(0.05))?
        } else {
            grid.sample(|x, y| {
                let r2 = x * x + y * y;
                (1.0 - r2).powi(2) * (1.0 + 0.5 * x + 0.3 * y * y)
            })
        };
        let state = FlowState2D::euler_disk(grid, omega, p.odd_symmetry.unwrap_or(ks))?;
        let front = if ks { Some(FrontBackState::new(p.front_a.unwrap_or(0.1), p.front_b.unwrap_or(0.5))?) } else { None };
        let (l1, l2, li) = state.omega_norms();
        let e = state.energy();
        Ok(Self {
            state,
            ctl: controller(spec),
            front,
            gamma: p.probe_gamma.unwrap_or(PI / 6.0),
            delta: p.probe_delta.unwrap_or(0.2),
            initial_norms: (l1, l2, li, e),
            last_dt: 0.0,
        })
    }

    fn tracking(&self) -> bool {
        self.front.as_ref().is_some_and(|f| f.status == FrontStatus::Tracking)
    }
}

impl Driver for EulerDriver {
    fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> =
            ["dt", "omega_l1", "omega_l2", "omega_inf", "grad_omega_inf", "energy", "kato_ratio"].map(String::from).to_vec();
        if self.front.is_some() {
            c.extend(
                [
                    "a", "b", "inv_a", "Omega_D1", "Omega_D2", "Omega_probe", "B1_D1", "B2_D1", "B1_D2", "B2_D2",
                    "diag_ratio_0", "diag_ratio_1", "tracking",
                ]
                .map(String::from),
            );
        }
        c
    }

    fn t(&self) -> f64 {
        self.state.t
    }

    fn row(&mut self) -> Result<Vec<f64>> {
        let s = &self.state;
        let (l1, l2, li) = s.omega_norms();
        let mut row = vec![self.last_dt, l1, l2, li, s.max_vorticity_gradient(), s.energy(), kato_ratio(s)?];
        if let Some(fb) = &self.front {
            let mut probe = [f64::NAN; 10];
            if fb.status == FrontStatus::Tracking {
                let mut omegas = [0.0; 2];
                for (k, (angle, sector)) in PROBES.iter().enumerate() {
                    let x = [fb.a * angle.cos(), fb.a * angle.sin()];
                    let p = velocity_decomposition_residual(s, x, *sector, self.gamma, self.delta)?;
                    omegas[k] = p.omega.value;
                    probe[3 + 2 * k] = p.b1;
                    probe[4 + 2 * k] = p.b2;
                }
                probe[0] = omegas[0];
                probe[1] = omegas[1];
                probe[2] = 0.5 * (omegas[0] + omegas[1]);
                let g = s.polar_grid()?;
                for (k, d) in DIAGONAL.iter().enumerate() {
                    let x = disk_frame([*d, *d]);
                    let u = g.interpolate_vector(&s.u, x[0], x[1]);
                    probe[7 + k] = -u[0] / u[1];
                }
            }
            row.extend([fb.a, fb.b, 1.0 / fb.a]);
            row.extend(&probe[..9]);
            row.push(f64::from(u8::from(fb.status == FrontStatus::Tracking)));
        }
        Ok(row)
    }

    fn step(&mut self, max_dt: f64) -> Result<Option<Stop>> {
        let old = self.state.clone();
        if let Some(stop) = step_2d(&mut self.state, &mut self.ctl, max_dt, euler_disk_step)? {
            return Ok(Some(stop));
        }
        self.last_dt = self.state.t - old.t;
        if let Some(fb) = &self.front {
            let next = front_back_track(&old, &self.state, fb)?;
            let lost = next.status != FrontStatus::Tracking;
            self.front = Some(next);
            if lost {
                return Ok(Some(Stop {
                    verdict: Verdict::UnderResolved,
                    reason: format!("front under-resolved at t = {}", self.state.t),
                }));
            }
        }
        Ok(None)
    }

    fn snapshot(&self, stem: &Path) -> Result<PathBuf> {
        let g = self.state.polar_grid()?;
        let path = stem.with_extension("bin");
        Snapshot::from_columns(
            "euler2d",
            &format!("polar nr={} ntheta={}", g.nr(), g.ntheta()),
            self.state.t,
            &[("omega", &self.state.omega), ("psi", &self.state.psi)],
        )?
        .write(&path)?;
        Ok(path)
    }

    fn summary(&self, _series: &TimeSeries) -> Result<Vec<(String, String)>> {
        let (l1, l2, li) = self.state.omega_norms();
        let (a1, a2, ai, e0) = self.initial_norms;
        let rel = |a: f64, b: f64| format_f64((a - b).abs() / b.abs());
        let mut out = vec![
            ("drift_omega_l1".into(), rel(l1, a1)),
            ("drift_omega_l2".into(), rel(l2, a2)),
            ("drift_omega_inf".into(), rel(li, ai)),
            ("drift_energy".into(), rel(self.state.energy(), e0)),
        ];
        if let Some(fb) = &self.front {
            out.push(("front_a_final".into(), format_f64(fb.a)));
            out.push(("front_tracking".into(), self.tracking().to_string()));
        }
        Ok(out)
    }
}

/// Boussinesq on the periodic strip from rest with the scenario θ₀.
struct BoussinesqDriver {
    state: FlowState2D,
    ctl: StepController,
    last_dt: f64,
}

impl BoussinesqDriver {
    fn new(spec: &RunSpec) -> Result<Self> {
        let grid = StripGrid::new(spec.grid.nx.unwrap_or(256), spec.grid.ny.unwrap_or(128), spec.grid.height.unwrap_or(PI))?;
        let theta = boussinesq_initial_theta(&grid, spec.params.amplitude.unwrap_or(1.0));
        let omega = vec![0.0; grid.len()];
        let state = FlowState2D::boussinesq(grid, omega, theta, spec.params.odd_symmetry.unwrap_or(true))?;
        Ok(Self { state, ctl: controller(spec), last_dt: 0.0 })
    }

    fn grid(&self) -> Result<&StripGrid> {
        match &self.state.domain {
            Domain2D::Strip(g) => Ok(g),
            Domain2D::Disk(_) => Err(Error::Precondition("strip state required".into())),
        }
    }
}

impl Driver for BoussinesqDriver {
    fn columns(&self) -> Vec<String> {
        ["dt", "omega_inf", "grad_omega_inf", "theta_min", "theta_max", "theta_x_inf", "energy"].map(String::from).to_vec()
    }

    fn t(&self) -> f64 {
        self.state.t
    }

    fn row(&mut self) -> Result<Vec<f64>> {
        let s = &self.state;
        let th = s.theta.as_deref().unwrap_or_default();
        let tx = self.grid()?.d_dx(th);
        Ok(vec![
            self.last_dt,
            max_abs(&s.omega),
            s.max_vorticity_gradient(),
            th.iter().cloned().fold(f64::INFINITY, f64::min),
            th.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            max_abs(&tx),
            s.energy(),
        ])
    }

    fn step(&mut self, max_dt: f64) -> Result<Option<Stop>> {
        let t0 = self.state.t;
        let stop = step_2d(&mut self.state, &mut self.ctl, max_dt, boussinesq_strip_step)?;
        self.last_dt = self.state.t - t0;
        Ok(stop)
    }

    fn snapshot(&self, stem: &Path) -> Result<PathBuf> {
        let g = self.grid()?;
        let path = stem.with_extension("bin");
        let th = self.state.theta.as_deref().unwrap_or_default();
        Snapshot::from_columns(
            "boussinesq",
            &format!("strip nx={} ny={} height={}", g.nx(), g.ny(), g.height()),
            self.state.t,
            &[("omega", &self.state.omega), ("theta", th)],
        )?
        .write(&path)?;
        Ok(path)
    }

    fn summary(&self, series: &TimeSeries) -> Result<Vec<(String, String)>> {
        let tx = series.column("theta_x_inf")?;
        Ok(vec![("theta_x_growth".into(), format_f64(tx[tx.len() - 1] / tx[0]))])
    }
}

/// Odd-symmetric patch in the half-plane with barrier monitoring.
struct PatchDriver {
    system: PatchSystem,
    params: RedistributionParams,
    cfl: f64,
    dt_max: f64,
    barrier: Option<BarrierState>,
    last_dt: f64,
}

fn front_index(system: &PatchSystem) -> usize {
    system.contours[0]
        .nodes()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1[0].total_cmp(&b.1[0]))
        .map_or(0, |(i, _)| i)
}

impl PatchDriver {
    fn new(spec: &RunSpec) -> Result<Self> {
        let p = &spec.params;
        let alpha = p.alpha.unwrap_or(0.04);
        let eps = p.eps.unwrap_or(0.05);
        let params = RedistributionParams {
            h_max: spec.grid.h_max.unwrap_or(0.05),
            h_min: spec.grid.h_min.unwrap_or(1e-3),
            ..RedistributionParams::default()
        };
        let contour = initial_patch(eps, &params)?;
        let system = PatchSystem::new(vec![contour], alpha, true)?;
        let barrier = if alpha > 0.0 { Some(BarrierState::new(eps, alpha)?) } else { None };
        Ok(Self {
            system,
            params,
            cfl: spec.time.cfl.unwrap_or(0.5),
            dt_max: spec.time.dt_max.unwrap_or(0.05),
            barrier,
            last_dt: 0.0,
        })
    }

    /// Row of the current state given the front velocity.
    fn state_row(&self, u_front: [f64; 2]) -> Vec<f64> {
        let c = &self.system.contours[0];
        let front = c.leftmost();
        let alpha = self.system.alpha();
        let (bx, margin) = match self.barrier.as_ref().and_then(|b| b.at(self.system.t).ok()) {
            Some(b) => (b.front, barrier_containment(c, &b).margin),
            None => (f64::NAN, f64::NAN),
        };
        let bound = if alpha > 0.0 { -front[0].powf(1.0 - 2.0 * alpha) / (50.0 * alpha) } else { f64::NAN };
        vec![
            self.last_dt,
            front[0],
            front[1],
            c.signed_area(),
            bx,
            margin,
            u_front[0],
            bound,
            c.len() as f64,
            c.min_spacing(),
        ]
    }
}

impl Driver for PatchDriver {
    fn columns(&self) -> Vec<String> {
        [
            "dt", "front_x1", "front_x2", "area", "barrier_x", "containment_margin", "front_u1", "front_u1_bound",
            "nodes", "min_spacing",
        ]
        .map(String::from)
        .to_vec()
    }

    fn t(&self) -> f64 {
        self.system.t
    }

    fn row(&mut self) -> Result<Vec<f64>> {
        let u = node_velocities(&self.system)[0][front_index(&self.system)];
        Ok(self.state_row(u))
    }

    fn step(&mut self, max_dt: f64) -> Result<Option<Stop>> {
        let st = evolve_patch(&self.system, &self.params, self.cfl, self.dt_max.min(max_dt))?;
        self.last_dt = st.dt;
        self.system = st.system;
        if let Some(c) = st.contact {
            let reason = format!(
                "{:?} contact at ({:.6e}, {:.6e}), distance {:.3e} below tolerance {:.3e}, t = {}",
                c.kind, c.location[0], c.location[1], c.distance, c.tolerance, self.system.t
            );
            return Ok(Some(Stop { verdict: Verdict::Contact, reason }));
        }
        Ok(None)
    }

    fn snapshot(&self, stem: &Path) -> Result<PathBuf> {
        let path = stem.with_extension("csv");
        let c = &self.system.contours[0];
        write_contour_csv(&path, self.system.t, self.system.alpha(), c.weight, c.nodes())?;
        Ok(path)
    }

    fn summary(&self, series: &TimeSeries) -> Result<Vec<(String, String)>> {
        let c = &self.system.contours[0];
        let front = c.leftmost();
        let gap = series.column("front_x1")?;
        Ok(vec![
            ("front_x1_final".into(), format_f64(front[0])),
            ("front_x2_final".into(), format_f64(front[1])),
            ("min_gap".into(), format_f64(gap.iter().cloned().fold(f64::INFINITY, f64::min))),
            ("min_spacing_final".into(), format_f64(c.min_spacing())),
            ("nodes_final".into(), c.len().to_string()),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::super::config::parse_config;
    use super::*;

    fn run_text(text: &str) -> (RunReport, tempfile::TempDir) {
        let dir = tempfile::TempDir::new().unwrap();
        let report = run(&parse_config(text).unwrap(), dir.path()).unwrap();
        (report, dir)
    }

    #[test]
    fn verdict_names() {
        let names = [Verdict::Completed, Verdict::BlowupSuspected, Verdict::Contact, Verdict::UnderResolved]
            .map(|v| v.to_string());
        assert_eq!(names, ["completed", "blow-up suspected", "contact", "under-resolved"]);
    }

    #[test]
    fn last_step_lands_on_t_end() {
        let (r, _d) = run_text("model = \"clm\"\nt_end = 0.0105\n[grid]\nn = 32\n[time]\ndt = 1e-3\ndt_max = 1e-3\n");
        assert_eq!(r.verdict, Verdict::Completed);
        assert_eq!(r.steps, 11);
        assert!((r.t_final - 0.0105).abs() < 1e-15);
        let dt = r.series.column("dt").unwrap();
        assert!((dt[11] - 5e-4).abs() < 1e-12);
    }

    #[test]
    fn blowup_cap_and_support_halt_are_blowup_verdicts() {
        let (r, _d) = run_text("model = \"clm\"\nt_end = 3.0\n[grid]\nn = 64\n[time]\nblowup_cap = 20.0\n");
        assert_eq!(r.verdict, Verdict::BlowupSuspected);
        assert!(r.reason.contains("cap"), "{}", r.reason);
        assert!(*r.series.column("max_abs_omega").unwrap().last().unwrap() > 20.0);
        let (r, _d) = run_text("model = \"cky\"\n[grid]\nn = 256\n");
        assert_eq!(r.verdict, Verdict::BlowupSuspected);
        assert!(r.reason.contains("support hit boundary"), "{}", r.reason);
        let report = fs::read_to_string(_d.path().join("report.txt")).unwrap();
        assert!(report.starts_with("model: cky\nverdict: blow-up suspected\n"));
    }
}
