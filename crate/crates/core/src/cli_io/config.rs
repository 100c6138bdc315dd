use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sqg_patch::delta_alpha_estimate;

/// Solver selected by a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Clm,
    Degregorio,
    Hl,
    Cky,
    Euler2d,
    Boussinesq,
    SqgPatch,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Clm => "clm",
            Model::Degregorio => "degregorio",
            Model::Hl => "hl",
            Model::Cky => "cky",
            Model::Euler2d => "euler2d",
            Model::Boussinesq => "boussinesq",
            Model::SqgPatch => "sqg_patch",
        }
    }
}

/// Resolution parameters. Which keys apply depends on the model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Node count of a 1D grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Period of a 1D periodic grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nr: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ntheta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    /// Strip height.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    /// Largest contour node spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_max: Option<f64>,
    /// Smallest contour node spacing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_min: Option<f64>,
}

/// Time stepping controls.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    /// `max|ω|` above which a run ends with "blow-up suspected".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_cap: Option<f64>,
}

/// Model parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    /// Named initial datum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    /// Amplitude `A` of θ (HL, CKY, Boussinesq).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracker_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odd_symmetry: Option<bool>,
    /// Initial front abscissa `a(0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front_a: Option<f64>,
    /// Initial back abscissa `b(0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front_b: Option<f64>,
    /// Sector probe radius bound `δ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_delta: Option<f64>,
    /// Sector opening `γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_alpha: Option<f64>,
}

/// Output locations, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_csv")]
    pub csv: String,
    /// Snapshot every this many accepted steps (0: none).
    #[serde(default)]
    pub snapshot_every: u64,
    #[serde(default = "default_snapshot_prefix")]
    pub snapshot_prefix: String,
}

fn default_csv() -> String {
    "series.csv".into()
}

fn default_snapshot_prefix() -> String {
    "snapshot".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { csv: default_csv(), snapshot_every: 0, snapshot_prefix: default_snapshot_prefix() }
    }
}

/// Sample sizes of the kernel verifier suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Random `(x, y)` pairs for the HL kernel properties.
    #[serde(default = "default_kernel_pairs")]
    pub kernel_pairs: usize,
    /// Admissible ω profiles for the HL positivity integral.
    #[serde(default = "default_profiles")]
    pub profiles: usize,
    /// Values of `a` per profile.
    #[serde(default = "default_a_values")]
    pub a_values: usize,
    /// Sampled `(x, α)` points for the bad/good bound checks.
    #[serde(default = "default_bound_samples")]
    pub bound_samples: usize,
    /// Points of the α grid over `(0, 1/24]` for the coefficient margin.
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: usize,
}

fn default_kernel_pairs() -> usize {
    10_000
}

fn default_profiles() -> usize {
    20
}

fn default_a_values() -> usize {
    10
}

fn default_bound_samples() -> usize {
    50
}

fn default_alpha_grid() -> usize {
    24
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            kernel_pairs: default_kernel_pairs(),
            profiles: default_profiles(),
            a_values: default_a_values(),
            bound_samples: default_bound_samples(),
            alpha_grid: default_alpha_grid(),
        }
    }
}

/// A validated run configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Seed of the randomized verifiers.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub params: ParamSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub verify: VerifySpec,
}

/// Parses and validates a TOML configuration. Unknown keys, keys that do
/// not apply to the chosen model and out-of-range values are rejected with
/// the key path in the message.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config("<document>", e.to_string()))?;
    let raw: RunSpec = serde_path_to_error::deserialize(table).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().message().to_string())
    })?;
    resolve(raw)
}

/// Serializes a spec back to TOML; parsing the output yields an equal spec.
pub fn to_toml(spec: &RunSpec) -> Result<String> {
    toml::to_string(spec).map_err(|e| Error::Format(format!("cannot serialize config: {e}")))
}

/// Keys of `grid`, `time` and `params` that a model reads.
fn allowed_keys(model: Model) -> (&'static [&'static str], &'static [&'static str], &'static [&'static str]) {
    const STEP: &[&str] = &["dt", "dt_min", "dt_max", "cfl", "blowup_cap"];
    const FLOW: &[&str] = &["dt", "dt_min", "dt_max", "cfl"];
    match model {
        Model::Clm | Model::Degregorio => (&["n", "length"], STEP, &["initial"]),
        Model::Hl => (&["n", "length"], STEP, &["amplitude", "tracker_levels"]),
        Model::Cky => (&["n"], STEP, &["amplitude", "tracker_levels"]),
        Model::Euler2d => (
            &["nr", "ntheta"],
            FLOW,
            &["initial", "eps_s", "odd_symmetry", "front_a", "front_b", "probe_delta", "probe_gamma"],
        ),
        Model::Boussinesq => (&["nx", "ny", "height"], FLOW, &["amplitude", "odd_symmetry"]),
        Model::SqgPatch => (&["h_max", "h_min"], &["dt_max", "cfl"], &["alpha", "eps", "delta_alpha"]),
    }
}

fn present_keys<T: Serialize>(section: &T) -> Vec<String> {
    match toml::Value::try_from(section) {
        Ok(toml::Value::Table(t)) => t.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn check_applicable(spec: &RunSpec) -> Result<()> {
    let (grid, time, params) = allowed_keys(spec.model);
    let sections: [(&str, Vec<String>, &[&str]); 3] = [
        ("grid", present_keys(&spec.grid), grid),
        ("time", present_keys(&spec.time), time),
        ("params", present_keys(&spec.params), params),
    ];
    for (name, keys, allowed) in sections {
        if let Some(k) = keys.iter().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::config(
                format!("{name}.{k}"),
                format!("`{k}` does not apply to model {}", spec.model.name()),
            ));
        }
    }
    Ok(())
}

fn fill<T: Copy>(slot: &mut Option<T>, value: T) -> T {
    *slot.get_or_insert(value)
}

fn require(ok: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message()))
    }
}

fn positive(path: &str, name: &str, v: f64) -> Result<()> {
    require(v > 0.0 && v.is_finite(), path, || format!("{name} must be positive and finite, got {v}"))
}

fn fill_steps(time: &mut TimeSpec, dt: f64, dt_max: f64, cfl: f64, cap: bool) -> Result<()> {
    let dt = fill(&mut time.dt, dt);
    let dt_max = fill(&mut time.dt_max, dt_max);
    let dt_min = fill(&mut time.dt_min, 1e-10);
    let cfl = fill(&mut time.cfl, cfl);
    positive("time.dt", "dt", dt)?;
    positive("time.dt_max", "dt_max", dt_max)?;
    positive("time.dt_min", "dt_min", dt_min)?;
    positive("time.cfl", "cfl", cfl)?;
    require(dt_min < dt_max, "time.dt_min", || format!("dt_min {dt_min} must be below dt_max {dt_max}"))?;
    if cap {
        positive("time.blowup_cap", "blowup_cap", fill(&mut time.blowup_cap, 1e6))?;
    }
    Ok(())
}

fn periodic_n(grid: &mut GridSpec, default: usize) -> Result<()> {
    let n = fill(&mut grid.n, default);
    require(n.is_power_of_two() && n >= 16, "grid.n", || format!("n must be a power of two >= 16, got {n}"))?;
    positive("grid.length", "length", fill(&mut grid.length, 2.0 * PI))
}

fn resolve(mut spec: RunSpec) -> Result<RunSpec> {
    check_applicable(&spec)?;
    let model = spec.model;
    let t_default = match model {
        Model::Clm => 1.0,
        Model::Degregorio => 10.0,
        Model::Hl | Model::Cky => 1.0,
        Model::Euler2d => 5.0,
        Model::Boussinesq => 2.0,
        Model::SqgPatch => 10.0,
    };
    positive("t_end", "t_end", fill(&mut spec.t_end, t_default))?;
    let (g, tm, p) = (&mut spec.grid, &mut spec.time, &mut spec.params);
    match model {
        Model::Clm | Model::Degregorio => {
            periodic_n(g, 256)?;
            fill_steps(tm, 1e-3, 1e-3, 1.0, true)?;
            let init = p.initial.get_or_insert_with(|| "sin".into());
            require(init == "sin" || init == "cos", "params.initial", || {
                format!("initial must be \"sin\" or \"cos\", got {init:?}")
            })?;
        }
        Model::Hl => {
            periodic_n(g, 4096)?;
            fill_steps(tm, 1e-5, 1e-3, 0.5, true)?;
            positive("params.amplitude", "amplitude", fill(&mut p.amplitude, 1e4))?;
            let levels = fill(&mut p.tracker_levels, 9);
            require((1..=30).contains(&levels), "params.tracker_levels", || {
                format!("tracker_levels out of range [1, 30], got {levels}")
            })?;
        }
        Model::Cky => {
            let n = fill(&mut g.n, 2048);
            require(n >= 64, "grid.n", || format!("n must be at least 64, got {n}"))?;
            fill_steps(tm, 1e-4, 1e-2, 0.5, true)?;
            positive("params.amplitude", "amplitude", fill(&mut p.amplitude, 10.0))?;
            let levels = fill(&mut p.tracker_levels, 3);
            require((1..=30).contains(&levels), "params.tracker_levels", || {
                format!("tracker_levels out of range [1, 30], got {levels}")
            })?;
        }
        Model::Euler2d => {
            let nr = fill(&mut g.nr, 128);
            let nth = fill(&mut g.ntheta, 256);
            require(nr >= 8, "grid.nr", || format!("nr must be at least 8, got {nr}"))?;
            require(nth.is_power_of_two() && nth >= 8, "grid.ntheta", || {
                format!("ntheta must be a power of two >= 8, got {nth}")
            })?;
            fill_steps(tm, 0.01, 0.05, 1.0, false)?;
            let init = p.initial.get_or_insert_with(|| "ks".into()).clone();
            require(init == "ks" || init == "smooth", "params.initial", || {
                format!("initial must be \"ks\" or \"smooth\", got {init:?}")
            })?;
            let ks = init == "ks";
            fill(&mut p.odd_symmetry, ks);
            if ks {
                let eps_s = fill(&mut p.eps_s, 0.05);
                require(eps_s > 0.0 && eps_s < 1.0, "params.eps_s", || format!("eps_s out of range (0, 1), got {eps_s}"))?;
                let a = fill(&mut p.front_a, 0.1);
                let b = fill(&mut p.front_b, 0.5);
                require(a > 0.0 && a <= b && b < 1.0, "params.front_a", || {
                    format!("need 0 < front_a <= front_b < 1, got {a} and {b}")
                })?;
                let d = fill(&mut p.probe_delta, 0.2);
                require(d > 0.0 && d < 1.0, "params.probe_delta", || format!("probe_delta out of range (0, 1), got {d}"))?;
                let gm = fill(&mut p.probe_gamma, PI / 6.0);
                require(gm > 0.0 && gm < PI / 4.0, "params.probe_gamma", || {
                    format!("probe_gamma out of range (0, pi/4), got {gm}")
                })?;
            } else {
                for (key, set) in [
                    ("eps_s", p.eps_s.is_some()),
                    ("front_a", p.front_a.is_some()),
                    ("front_b", p.front_b.is_some()),
                    ("probe_delta", p.probe_delta.is_some()),
                    ("probe_gamma", p.probe_gamma.is_some()),
                ] {
                    require(!set, &format!("params.{key}"), || format!("`{key}` applies only to initial = \"ks\""))?;
                }
            }
        }
        Model::Boussinesq => {
            let nx = fill(&mut g.nx, 256);
            let ny = fill(&mut g.ny, 128);
            require(nx.is_power_of_two() && nx >= 8, "grid.nx", || format!("nx must be a power of two >= 8, got {nx}"))?;
            require(ny >= 32, "grid.ny", || format!("ny must be at least 32, got {ny}"))?;
            positive("grid.height", "height", fill(&mut g.height, PI))?;
            fill_steps(tm, 0.01, 0.05, 1.0, false)?;
            positive("params.amplitude", "amplitude", fill(&mut p.amplitude, 1.0))?;
            fill(&mut p.odd_symmetry, true);
        }
        Model::SqgPatch => {
            let h_max = fill(&mut g.h_max, 0.05);
            let h_min = fill(&mut g.h_min, 1e-3);
            require(h_min > 0.0 && h_min < h_max, "grid.h_min", || {
                format!("need 0 < h_min < h_max, got {h_min} and {h_max}")
            })?;
            require(h_max <= 0.5, "grid.h_max", || format!("h_max out of range (0, 0.5], got {h_max}"))?;
            positive("time.dt_max", "dt_max", fill(&mut tm.dt_max, 0.05))?;
            let cfl = fill(&mut tm.cfl, 0.5);
            require(cfl > 0.0 && cfl <= 1.0, "time.cfl", || format!("cfl out of range (0, 1], got {cfl}"))?;
            let alpha = fill(&mut p.alpha, 0.04);
            require((0.0..0.5).contains(&alpha), "params.alpha", || format!("alpha out of range [0, 0.5), got {alpha}"))?;
            let eps = fill(&mut p.eps, 0.05);
            require(eps > 0.0 && eps < 0.1, "params.eps", || format!("eps out of range (0, 0.1), got {eps}"))?;
            if alpha > 0.0 {
                if p.delta_alpha.is_none() {
                    p.delta_alpha = delta_alpha_estimate(alpha)?;
                }
                if let Some(d) = p.delta_alpha {
                    positive("params.delta_alpha", "delta_alpha", d)?;
                }
            } else {
                require(p.delta_alpha.is_none(), "params.delta_alpha", || "delta_alpha needs alpha > 0".into())?;
            }
        }
    }
    let v = &spec.verify;
    for (key, value) in [
        ("kernel_pairs", v.kernel_pairs),
        ("profiles", v.profiles),
        ("a_values", v.a_values),
        ("bound_samples", v.bound_samples),
        ("alpha_grid", v.alpha_grid),
    ] {
        require(value >= 1, &format!("verify.{key}"), || format!("{key} must be at least 1"))?;
    }
    require(!spec.output.csv.is_empty(), "output.csv", || "csv file name is empty".into())?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_error(text: &str) -> (String, String) {
        match parse_config(text) {
            Err(Error::Config { path, message }) => (path, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_clm_fills_defaults() {
        let spec = parse_config("model = \"clm\"\n[grid]\nn = 256\n").unwrap();
        assert_eq!(spec.grid.n, Some(256));
        assert_eq!(spec.grid.length, Some(2.0 * PI));
        assert_eq!(spec.time.dt, Some(1e-3));
        assert_eq!(spec.time.blowup_cap, Some(1e6));
        assert_eq!(spec.params.initial.as_deref(), Some("sin"));
        assert_eq!(spec.t_end, Some(1.0));
        assert_eq!(spec.output, OutputSpec::default());
    }

    #[test]
    fn alpha_out_of_range() {
        let (path, message) = config_error("model = \"sqg_patch\"\n[params]\nalpha = 0.6\n");
        assert_eq!(path, "params.alpha");
        assert!(message.contains("alpha out of range [0, 0.5)"), "{message}");
    }

    #[test]
    fn unknown_keys_carry_their_path() {
        let (path, message) = config_error("model = \"clm\"\n[grid]\nnn = 3\n");
        assert!(path.starts_with("grid"), "{path}");
        assert!(message.contains("nn"), "{message}");
        let (path, _) = config_error("model = \"clm\"\nbogus = 1\n");
        assert!(path == "." || path.contains("bogus") || path.is_empty() || path == "<document>", "{path}");
    }

    #[test]
    fn inapplicable_keys_rejected() {
        let (path, message) = config_error("model = \"clm\"\n[params]\nalpha = 0.1\n");
        assert_eq!(path, "params.alpha");
        assert!(message.contains("does not apply"), "{message}");
    }

    #[test]
    fn missing_model_rejected() {
        let (_, message) = config_error("t_end = 1.0\n");
        assert!(message.contains("model"), "{message}");
    }

    #[test]
    fn wrong_type_carries_path() {
        let (path, _) = config_error("model = \"hl\"\n[params]\namplitude = \"big\"\n");
        assert_eq!(path, "params.amplitude");
    }

    #[test]
    fn syntax_error_reported() {
        assert!(matches!(parse_config("model = "), Err(Error::Config { .. })));
    }

    #[test]
    fn round_trip_every_model() {
        for m in ["clm", "degregorio", "hl", "cky", "euler2d", "boussinesq", "sqg_patch"] {
            let spec = parse_config(&format!("model = \"{m}\"\n")).unwrap();
            let text = to_toml(&spec).unwrap();
            assert_eq!(parse_config(&text).unwrap(), spec, "{m}:\n{text}");
        }
        let spec = parse_config("model = \"sqg_patch\"\n[params]\nalpha = 0.0\n").unwrap();
        assert_eq!(spec.params.delta_alpha, None);
        assert_eq!(parse_config(&to_toml(&spec).unwrap()).unwrap(), spec);
    }
}
