use crate::error::{Error, Result};
use crate::spectral1d::{
    dealias, hilbert_transform, spectral_derivative, zero_mean_velocity, SpectralField1D,
};

/// `ω Hω`, dealiased.
pub fn clm_rhs(omega: &SpectralField1D) -> Result<SpectralField1D> {
    let h = hilbert_transform(omega)?;
    dealias(&omega.zip_map(&h, |w, hw| w * hw)?)
}

/// `-u ω_x + ω Hω` with `u_x = Hω`, `u` of zero mean; dealiased.
pub fn degregorio_rhs(omega: &SpectralField1D) -> Result<SpectralField1D> {
    let h = hilbert_transform(omega)?;
    let u = zero_mean_velocity(omega)?;
    let wx = spectral_derivative(omega)?;
    let values = (0..omega.values().len())
        .map(|j| -u.values()[j] * wx.values()[j] + omega.values()[j] * h.values()[j])
        .collect();
    dealias(&SpectralField1D::from_values(omega.grid(), values)?)
}

/// Blow-up time of the closed-form CLM solution: `2 / max Hω₀(x*)` over the
/// zeros `x*` of `ω₀` where `Hω₀ > 0`. Zeros are bracketed on the grid and
/// refined by bisection on the trigonometric interpolant.
pub fn clm_blowup_time(omega0: &SpectralField1D) -> Result<f64> {
    let h = hilbert_transform(omega0)?;
    let grid = omega0.grid();
    let n = grid.n();
    let scale = omega0.max_abs().max(f64::MIN_POSITIVE);
    let mut best: f64 = 0.0;
    for j in 0..n {
        let (a, b) = (grid.node(j), grid.node(j) + grid.dx());
        let (fa, fb) = (omega0.values()[j], omega0.values()[(j + 1) % n]);
        let root = if fa.abs() <= 1e-14 * scale {
            Some(a)
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = omega0.eval_at(mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            Some(0.5 * (lo + hi))
        } else {
            None
        };
        if let Some(x) = root {
            best = best.max(h.eval_at(x));
        }
    }
    Ok(if best > 0.0 { 2.0 / best } else { f64::INFINITY })
}

/// Closed-form CLM solution
/// `ω(x,t) = 4ω₀ / ((2 - t Hω₀)² + t² ω₀²)`.
///
/// With `z = Hω + iω` the model reads `z_t = z²/2` (Cotlar's identity), whose
/// solution `z = 2z₀/(2 - t z₀)` has the stated imaginary part.
pub fn clm_exact(omega0: &SpectralField1D, t: f64) -> Result<SpectralField1D> {
    let blowup = clm_blowup_time(omega0)?;
    if t < 0.0 || t >= blowup {
        return Err(Error::Precondition(format!(
            "t = {t} outside [0, T*) with blow-up time T* = {blowup}"
        )));
    }
    let h = hilbert_transform(omega0)?;
    omega0.zip_map(&h, |w, hw| {
        let a = 2.0 - t * hw;
        4.0 * w / (a * a + t * t * w * w)
    })
}
