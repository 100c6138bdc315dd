use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// The four terms of the odd-symmetric `u₁` kernel,
/// `K₁ = K₁₁ - K₁₂ - K₁₃ + K₁₄`, with `u₁(x) = -∫_{D⁺} K₁(x, y) ω(y) dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSplit {
    pub k11: f64,
    pub k12: f64,
    pub k13: f64,
    pub k14: f64,
}

impl KernelSplit {
    pub fn total(&self) -> f64 {
        self.k11 - self.k12 - self.k13 + self.k14
    }
}

/// `K₁₁ = (y₂ - x₂)/|x - y|^{2+2α}`, `K₁₂ = (y₂ - x₂)/|x - ỹ|^{2+2α}`,
/// `K₁₃ = (y₂ + x₂)/|x + y|^{2+2α}`, `K₁₄ = (y₂ + x₂)/|x - ȳ|^{2+2α}` with
/// `ỹ = (-y₁, y₂)` and `ȳ = (y₁, -y₂)`.
pub fn kernel_split(x: [f64; 2], y: [f64; 2], alpha: f64) -> Result<KernelSplit> {
    let images = [y, [-y[0], y[1]], [-y[0], -y[1]], [y[0], -y[1]]];
    if images.iter().any(|p| p[0] == x[0] && p[1] == x[1]) {
        return Err(Error::Singular(format!("x = {x:?} coincides with an image of y = {y:?}")));
    }
    let pw = |d0: f64, d1: f64| (d0 * d0 + d1 * d1).powf(-1.0 - alpha);
    Ok(KernelSplit {
        k11: (y[1] - x[1]) * pw(x[0] - y[0], x[1] - y[1]),
        k12: (y[1] - x[1]) * pw(x[0] + y[0], x[1] - y[1]),
        k13: (y[1] + x[1]) * pw(x[0] + y[0], x[1] + y[1]),
        k14: (y[1] + x[1]) * pw(x[0] - y[0], x[1] + y[1]),
    })
}

/// Indicator regions in `D⁺` described column by column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaRegion {
    Zero,
    /// `(a, b) × (c, d)`
    Rectangle { y1: (f64, f64), y2: (f64, f64) },
    /// `A(x) = {y₁ ∈ (x₁, x₁ + 1), x₂ < y₂ < x₂ + y₁ - x₁}`
    Wedge { apex: [f64; 2] },
}

impl OmegaRegion {
    fn validate(&self) -> Result<()> {
        match *self {
            OmegaRegion::Zero => Ok(()),
            OmegaRegion::Rectangle { y1, y2 } => {
                if y1.0 < 0.0 || y2.0 < 0.0 || !(y1.0 < y1.1) || !(y2.0 < y2.1) {
                    return Err(Error::Precondition(format!("rectangle {y1:?} x {y2:?} not a box in D+")));
                }
                Ok(())
            }
            OmegaRegion::Wedge { apex } => {
                if apex[0] < 0.0 || apex[1] < 0.0 {
                    return Err(Error::Precondition(format!("wedge apex {apex:?} outside D+")));
                }
                Ok(())
            }
        }
    }

    fn span(&self) -> Option<(f64, f64)> {
        match *self {
            OmegaRegion::Zero => None,
            OmegaRegion::Rectangle { y1, .. } => Some(y1),
            OmegaRegion::Wedge { apex } => Some((apex[0], apex[0] + 1.0)),
        }
    }

    /// `y₂`-interval of the column at `y₁`.
    fn column(&self, y1: f64) -> Option<(f64, f64)> {
        match *self {
            OmegaRegion::Zero => None,
            OmegaRegion::Rectangle { y1: (a, b), y2 } => (a..=b).contains(&y1).then_some(y2),
            OmegaRegion::Wedge { apex } => {
                (y1 >= apex[0] && y1 <= apex[0] + 1.0).then(|| (apex[1], apex[1] + y1 - apex[0]))
            }
        }
    }
}

/// `∫ (y₂ ∓ x₂) ((y₁ ∓ x₁)² + (y₂ ∓ x₂)²)^{-1-α} dy₂ = P(s)` with
/// `P(s) = (1 - s^{-α})/(2α)` (constant dropped).
fn antiderivative(alpha: f64, s: f64) -> f64 {
    if alpha == 0.0 {
        0.5 * s.ln()
    } else {
        -(-alpha * s.ln()).exp_m1() / (2.0 * alpha)
    }
}

/// `∫_c^d K₁(x, y) dy₂`, exact.
fn column_integral(x: [f64; 2], y1: f64, c: f64, d: f64, alpha: f64) -> f64 {
    let p = |a: f64, b: f64| antiderivative(alpha, a * a + b * b);
    let at = |y2: f64| {
        p(y1 - x[0], y2 - x[1]) - p(y1 + x[0], y2 - x[1]) - p(y1 + x[0], y2 + x[1]) + p(y1 - x[0], y2 + x[1])
    };
    at(d) - at(c)
}

/// Integrates `f` over `[a, b]` with panels halving toward `a` down to
/// width `floor`.
fn toward_left(a: f64, b: f64, floor: f64, rule: &GaussRule, f: &impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut hi = b;
    let mut w = 0.5 * (b - a);
    while w > floor {
        sum += rule.integrate(a + w, hi, f);
        hi = a + w;
        w *= 0.5;
    }
    sum + rule.integrate(a, hi, f)
}

/// `-∫ K₁ χ_{region ∩ {band.0 < y₂ < band.1}} dy`, value and error estimate.
fn u1_over(region: &OmegaRegion, band: (f64, f64), x: [f64; 2], alpha: f64) -> (f64, f64) {
    let Some((a, b)) = region.span() else {
        return (0.0, 0.0);
    };
    let f = |y1: f64| -> f64 {
        match region.column(y1) {
            Some((c, d)) => {
                let (c, d) = (c.max(band.0), d.min(band.1));
                if c < d {
                    column_integral(x, y1, c, d, alpha)
                } else {
                    0.0
                }
            }
            None => 0.0,
        }
    };
    // the column integral is singular like |y₁ - x₁|^{-2α} at y₁ = x₁
    let mut cuts = vec![a, b];
    if x[0] > a && x[0] < b {
        cuts.push(x[0]);
    }
    cuts.sort_by(f64::total_cmp);
    let floor = 1e-13 * x[0];
    let integrate = |rule: &GaussRule| -> f64 {
        cuts.windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let mid = 0.5 * (lo + hi);
                toward_left(lo, mid, floor, rule, &f) + toward_left_rev(mid, hi, floor, rule, &f)
            })
            .sum::<f64>()
    };
    let coarse = integrate(&GaussRule::new(8));
    let fine = integrate(&GaussRule::new(16));
    (-fine, (fine - coarse).abs() + 1e-13 * fine.abs())
}

/// As [`toward_left`], grading toward `b`.
fn toward_left_rev(a: f64, b: f64, floor: f64, rule: &GaussRule, f: &impl Fn(f64) -> f64) -> f64 {
    toward_left(-b, -a, floor, rule, &|t| f(-t))
}

/// Coefficient of the bad part, `(1/α)(1/(1-2α) - 2^{-α})`.
pub fn bad_coefficient(alpha: f64) -> f64 {
    (1.0 / (1.0 - 2.0 * alpha) - 2f64.powf(-alpha)) / alpha
}

/// Coefficient of the good part, `1/(6·20^α·α)`.
pub fn good_coefficient(alpha: f64) -> f64 {
    1.0 / (6.0 * 20f64.powf(alpha) * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    /// Quadrature error estimate, used as the tolerance.
    pub error: f64,
    pub pass: bool,
}

fn check_open_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Precondition(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    Ok(())
}

/// `u₁^{bad}(x) = -∫_{ℝ⁺×(0,x₂)} K₁ ω` for `ω` the indicator of `region`,
/// against `(1/α)(1/(1-2α) - 2^{-α}) x₁^{1-2α}`.
pub fn bad_part_bound_check(region: &OmegaRegion, x: [f64; 2], alpha: f64) -> Result<BoundCheck> {
    check_open_alpha(alpha)?;
    region.validate()?;
    if !(x[0] > 0.0 && x[1] >= 0.0 && x[1] <= x[0]) {
        return Err(Error::Precondition(format!("need 0 <= x2 <= x1 and x1 > 0, got {x:?}")));
    }
    let (value, error) = u1_over(region, (0.0, x[1]), x, alpha);
    let bound = bad_coefficient(alpha) * x[0].powf(1.0 - 2.0 * alpha);
    Ok(BoundCheck { value, bound, error, pass: value <= bound + error })
}

/// `u₁^{good}(x)` for `ω = χ_{A(x)}`, against `-(1/(6·20^α·α)) x₁^{1-2α}`.
pub fn good_part_bound_check(x: [f64; 2], alpha: f64, delta_alpha: f64) -> Result<BoundCheck> {
    check_open_alpha(alpha)?;
    if !(x[0] > 0.0 && x[1] >= 0.0) {
        return Err(Error::Precondition(format!("need x1 > 0 and x2 >= 0, got {x:?}")));
    }
    if x[0] > delta_alpha {
        return Err(Error::Precondition(format!("x1 = {} exceeds delta_alpha = {delta_alpha}", x[0])));
    }
    let (value, error) = u1_over(&OmegaRegion::Wedge { apex: x }, (x[1], f64::INFINITY), x, alpha);
    let bound = -good_coefficient(alpha) * x[0].powf(1.0 - 2.0 * alpha);
    Ok(BoundCheck { value, bound, error, pass: value <= bound + error })
}

/// Largest `x₁` on a geometric grid `1e-12 … 1` (eight points per decade)
/// below which the good-part check passes for `x₂/x₁ ∈ {0, 1/2, 1}` at
/// every grid point; `None` if it fails at the smallest one.
pub fn delta_alpha_estimate(alpha: f64) -> Result<Option<f64>> {
    check_open_alpha(alpha)?;
    let mut best = None;
    for k in 0..=96 {
        let x1 = 10f64.powf(-12.0 + k as f64 / 8.0);
        for ratio in [0.0, 0.5, 1.0] {
            if !good_part_bound_check([x1, ratio * x1], alpha, 1.0)?.pass {
                return Ok(best);
            }
        }
        best = Some(x1);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMargin {
    pub good: f64,
    pub bad: f64,
    pub difference: f64,
    /// `1/(50α)`
    pub required: f64,
    pub dominant: bool,
    /// Dominance is only claimed for `α <= 1/24`.
    pub in_range: bool,
}

pub fn coefficient_margin(alpha: f64) -> Result<CoefficientMargin> {
    check_open_alpha(alpha)?;
    let (good, bad) = (good_coefficient(alpha), bad_coefficient(alpha));
    let required = 1.0 / (50.0 * alpha);
    Ok(CoefficientMargin {
        good,
        bad,
        difference: good - bad,
        required,
        dominant: good - bad >= required,
        in_range: alpha <= 1.0 / 24.0,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{contour_velocity, PatchContour, PatchSystem};
    use super::*;

    #[test]
    fn kernel_split_examples() {
        let s = kernel_split([0.0, 0.3], [0.5, 0.7], 0.04).unwrap();
        assert_eq!(s.k11, s.k12);
        assert_eq!(s.k13, s.k14);
        assert_eq!(s.total(), 0.0);
        let s = kernel_split([0.2, 0.3], [0.5, 0.3], 0.04).unwrap();
        assert_eq!(s.k11, 0.0);
        let (x, y, a) = ([0.21, 0.13], [0.4, 0.05], 0.04);
        let direct = |d: [f64; 2], num: f64| num / (d[0] * d[0] + d[1] * d[1]).powf(1.0 + a);
        let combined = direct([x[0] - y[0], x[1] - y[1]], y[1] - x[1]) - direct([x[0] + y[0], x[1] - y[1]], y[1] - x[1])
            - direct([x[0] + y[0], x[1] + y[1]], y[1] + x[1])
            + direct([x[0] - y[0], x[1] + y[1]], y[1] + x[1]);
        assert!((kernel_split(x, y, a).unwrap().total() - combined).abs() < 1e-12);
        assert!(kernel_split([0.5, 0.7], [0.5, 0.7], a).is_err());
        assert!(kernel_split([0.5, 0.7], [-0.5, 0.7], a).is_err());
    }

    #[test]
    fn coefficients_at_one_twentyfourth() {
        let m = coefficient_margin(1.0 / 24.0).unwrap();
        assert!((m.good - 3.5306).abs() < 1e-4, "{}", m.good);
        assert!((m.bad - 2.8650).abs() < 1e-4, "{}", m.bad);
        assert!((m.difference - 0.6656).abs() < 1e-4 && m.dominant && m.in_range);
        assert!((m.required - 0.48).abs() < 1e-12);
        // α → 0: bad → 2 + log 2 = 1 + (2 + ln 2) - 1, good → ∞
        assert!((bad_coefficient(1e-7) - (2.0 + 2f64.ln())).abs() < 1e-5);
        assert!(good_coefficient(1e-7) > 1e5);
        let wide = coefficient_margin(0.2).unwrap();
        assert!(!wide.in_range);
    }

    #[test]
    fn column_integral_matches_contour_form() {
        // u₁ of an odd pair of boxes from the column integrals equals the
        // contour velocity of the same boxes
        let alpha = 0.04;
        let (y1, y2) = ((0.05, 0.6), (0.0, 0.4));
        let region = OmegaRegion::Rectangle { y1, y2 };
        let bx = PatchContour::new(vec![[y1.0, y2.0], [y1.1, y2.0], [y1.1, y2.1], [y1.0, y2.1]], 1.0).unwrap();
        let sys = PatchSystem::new(vec![bx], alpha, true).unwrap();
        for x in [[0.02, 0.01], [0.3, 0.2], [0.7, 0.5], [0.05, 0.3]] {
            let (v, err) = u1_over(&region, (0.0, f64::INFINITY), x, alpha);
            let u = contour_velocity(&sys, x).unwrap();
            assert!((v - u[0]).abs() < 1e-6 * u[0].abs().max(1.0) && err < 1e-8, "{x:?}: {v} vs {u:?} ({err})");
        }
    }

    #[test]
    fn bad_part_examples() {
        let a = 1.0 / 24.0;
        let c = bad_part_bound_check(&OmegaRegion::Zero, [0.1, 0.05], a).unwrap();
        assert!(c.value == 0.0 && c.pass);
        assert!((c.bound - 2.8650 * 0.1f64.powf(11.0 / 12.0)).abs() < 1e-4, "{}", c.bound);
        for x in [[0.1, 0.05], [0.01, 0.01], [0.2, 0.0]] {
            let r = OmegaRegion::Rectangle { y1: (0.0, 2.0 * x[0]), y2: (0.0, x[1].max(1e-3)) };
            let c = bad_part_bound_check(&r, x, a).unwrap();
            assert!(c.pass, "{x:?}: {c:?}");
        }
        assert!(bad_part_bound_check(&OmegaRegion::Zero, [0.1, 0.2], a).is_err());
    }

    #[test]
    fn good_part_examples() {
        let a = 1.0 / 24.0;
        let c = good_part_bound_check([0.01, 0.0], a, 0.05).unwrap();
        // 3.5306 · 0.01^{11/12} = 3.5306 · 0.0146780
        assert!((c.bound + 0.051822).abs() < 1e-5, "{}", c.bound);
        assert!(good_part_bound_check([0.1, 0.0], a, 0.05).is_err());
        // homogeneity: value(λx)/value(x) → λ^{1-2α} as λ → 0, approached
        // slowly since the wedge has unit length
        let dev = |x1: f64, lam: f64| {
            let v1 = good_part_bound_check([x1, 0.5 * x1], a, 1.0).unwrap().value;
            let v2 = good_part_bound_check([lam * x1, 0.5 * lam * x1], a, 1.0).unwrap().value;
            (v2 / v1 / lam.powf(1.0 - 2.0 * a) - 1.0).abs()
        };
        let (coarse, fine) = (dev(0.1, 0.1), dev(1e-16, 1e-16));
        assert!(fine < coarse && fine < 0.02, "{coarse} {fine}");
    }
}
