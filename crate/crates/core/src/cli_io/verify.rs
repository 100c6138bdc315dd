use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RunSpec;
use crate::diagnostics::format_f64;
use crate::error::{Error, Result};
use crate::models1d::{hl_kernel_k, hl_kernel_property_check_with, hl_positivity_integral};
use crate::spectral1d::{PeriodicGrid1D, SpectralField1D};
use crate::sqg_patch::{
    bad_part_bound_check, coefficient_margin, delta_alpha_estimate, good_part_bound_check, OmegaRegion,
};

/// α values of the sampled patch bound checks.
pub const BOUND_ALPHAS: [f64; 3] = [0.01, 0.02, 1.0 / 24.0];

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub suite: &'static str,
    pub case: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// Pass/fail table, one tab-separated line per case.
    pub fn to_table(&self) -> String {
        let mut s = String::from("suite\tcase\tresult\tdetail\n");
        for r in &self.rows {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", r.suite, r.case, if r.pass { "PASS" } else { "FAIL" }, r.detail));
        }
        let failed = self.failures().count();
        s.push_str(&format!("# {} cases, {} failed\n", self.rows.len(), failed));
        s
    }

    fn push(&mut self, suite: &'static str, case: String, pass: bool, detail: String) {
        self.rows.push(VerifyRow { suite, case, pass, detail });
    }
}

/// Odd, band-limited profile that is positive on `(0, L/2)`:
/// `sin(μ'x)·(1 + Σ_j b_j cos(jμ'x))` with `Σ|b_j| < 1`, `μ' = 2π/L`.
pub fn admissible_profile(grid: &PeriodicGrid1D, rng: &mut impl Rng) -> Result<SpectralField1D> {
    let k = 2.0 * PI / grid.length();
    let modes = rng.gen_range(1..=4usize);
    let mut b: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let total: f64 = b.iter().map(|v| v.abs()).sum();
    let room = rng.gen_range(0.0..0.95);
    if total > 0.0 {
        b.iter_mut().for_each(|v| *v *= room / total);
    }
    let scale = rng.gen_range(0.1..10.0);
    SpectralField1D::from_fn(grid, |x| {
        let carrier: f64 = b.iter().enumerate().map(|(j, bj)| bj * ((j + 1) as f64 * k * x).cos()).sum();
        scale * (k * x).sin() * (1.0 + carrier)
    })
}

/// Runs the kernel and bound verifiers and writes `verify.txt` into
/// `out_dir`.
pub fn verify_kernels(spec: &RunSpec, out_dir: &Path) -> Result<VerifyReport> {
    verify_kernels_with(spec, out_dir, hl_kernel_k)
}

/// As [`verify_kernels`] with the HL kernel replaced, so that failure
/// reporting can be exercised.
pub fn verify_kernels_with(
    spec: &RunSpec,
    out_dir: &Path,
    kernel: impl Fn(f64, f64, &PeriodicGrid1D) -> Result<f64>,
) -> Result<VerifyReport> {
    let v = &spec.verify;
    let grid = PeriodicGrid1D::new(spec.grid.n.unwrap_or(256), spec.grid.length.unwrap_or(2.0 * PI))?;
    let mut report = VerifyReport::default();

    let k = hl_kernel_property_check_with(&grid, v.kernel_pairs, spec.seed, kernel)?;
    let detail = match k.violations.first() {
        Some(f) => format!(
            "{} violations, first: {} at (x, y) = ({}, {}) value {}",
            k.violations.len(),
            f.property,
            format_f64(f.x),
            format_f64(f.y),
            format_f64(f.value)
        ),
        None => format!(
            "min K {:.6e}, min K (x<y) {:.6e}, min K_x (x<y) {:.6e}",
            k.min_k, k.min_k_upper, k.min_kx_upper
        ),
    };
    report.push("hl_kernel", format!("{} pairs", k.samples), k.passed(), detail);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let half = 0.5 * grid.length();
    for p in 0..v.profiles {
        let w = admissible_profile(&grid, &mut rng)?;
        for j in 0..v.a_values {
            let a = half * (j as f64 + rng.gen_range(0.0..1.0)) / v.a_values as f64;
            let e = hl_positivity_integral(&w, a)?;
            let pass = e.value >= -e.error;
            report.push(
                "hl_positivity",
                format!("profile {p} a={a:.6}"),
                pass,
                format!("value {:.6e} error {:.3e}", e.value, e.error),
            );
        }
    }

    let deltas = BOUND_ALPHAS
        .iter()
        .map(|&a| {
            delta_alpha_estimate(a)?.ok_or_else(|| Error::Precondition(format!("no delta_alpha for alpha = {a}")))
        })
        .collect::<Result<Vec<_>>>()?;
    for s in 0..v.bound_samples {
        let i = s % BOUND_ALPHAS.len();
        let (alpha, delta) = (BOUND_ALPHAS[i], deltas[i]);
        let x1 = delta * 10f64.powf(-rng.gen_range(0.0..3.0));
        let x = [x1, x1 * rng.gen_range(0.0..1.0)];
        let region = OmegaRegion::Rectangle {
            y1: (0.0, x1 * rng.gen_range(0.5..4.0)),
            y2: (0.0, x[1] + x1 * rng.gen_range(0.01..2.0)),
        };
        let case = format!("alpha={alpha:.6} x=({:.4e}, {:.4e})", x[0], x[1]);
        let bad = bad_part_bound_check(&region, x, alpha)?;
        report.push("patch_bad_bound", case.clone(), bad.pass, format!("u1 {:.6e} <= {:.6e}", bad.value, bad.bound));
        let good = good_part_bound_check(x, alpha, delta)?;
        report.push("patch_good_bound", case, good.pass, format!("u1 {:.6e} <= {:.6e}", good.value, good.bound));
    }

    for j in 1..=v.alpha_grid {
        let alpha = j as f64 / (24.0 * v.alpha_grid as f64);
        let m = coefficient_margin(alpha)?;
        report.push(
            "coefficient_margin",
            format!("alpha={alpha:.6}"),
            m.dominant,
            format!("good {:.4} - bad {:.4} = {:.4} >= {:.4}", m.good, m.bad, m.difference, m.required),
        );
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join("verify.txt");
    fs::write(&path, report.to_table()).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_are_odd_and_positive_on_the_half_period() {
        let g = PeriodicGrid1D::new(128, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = admissible_profile(&g, &mut rng).unwrap();
            let v = w.values();
            for j in 1..64 {
                assert!(v[j] > 0.0);
                assert!((v[j] + v[128 - j]).abs() < 1e-12 * w.max_abs());
            }
        }
    }
}
