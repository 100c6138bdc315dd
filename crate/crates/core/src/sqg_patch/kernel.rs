use crate::quadrature::GaussRule;

/// `G_α(r) = (1 - r^{-2α}) / (2α)`, with the limit `log r` at `α = 0`. Takes
/// `r²` to avoid a square root.
pub(crate) fn green(alpha: f64, r2: f64) -> f64 {
    if alpha == 0.0 {
        0.5 * r2.ln()
    } else {
        -(-alpha * r2.ln()).exp_m1() / (2.0 * alpha)
    }
}

/// `∫_lo^hi G_α(τ) dτ` for `0 <= lo <= hi`, exact.
fn green_on_line(alpha: f64, lo: f64, hi: f64) -> f64 {
    let prim = |t: f64| -> f64 {
        if t == 0.0 {
            0.0
        } else if alpha == 0.0 {
            t * t.ln() - t
        } else {
            t - t.powf(1.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha)
        }
    };
    if alpha == 0.0 {
        prim(hi) - prim(lo)
    } else {
        (prim(hi) - prim(lo)) / (2.0 * alpha)
    }
}

thread_local! {
    static RULES: (GaussRule, GaussRule, GaussRule) = (GaussRule::new(2), GaussRule::new(4), GaussRule::new(8));
}

/// Integrates `f(τ)` over `[lo, hi]` (`0 <= lo`), where `f` is smooth on the
/// scale `max(d, τ)`: panels grow geometrically away from `τ = 0`.
fn graded(lo: f64, hi: f64, d: f64, rule: &GaussRule, f: &mut impl FnMut(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut a = lo;
    while a < hi {
        let b = hi.min(a + d.max(a));
        sum += rule.integrate(a, b, &mut *f);
        a = b;
    }
    sum
}

/// Local coordinates of `x` against the segment `p → q`: unit tangent, length,
/// foot parameter `τ₀` (position of the projection of `x`) and distance.
struct SegmentFrame {
    tangent: [f64; 2],
    len: f64,
    foot: f64,
    dist: f64,
}

fn segment_frame(x: [f64; 2], p: [f64; 2], q: [f64; 2]) -> SegmentFrame {
    let e = [q[0] - p[0], q[1] - p[1]];
    let len = e[0].hypot(e[1]);
    let t = [e[0] / len, e[1] / len];
    let w = [x[0] - p[0], x[1] - p[1]];
    let foot = w[0] * t[0] + w[1] * t[1];
    let dist = (w[0] * t[1] - w[1] * t[0]).abs();
    SegmentFrame { tangent: t, len, foot, dist }
}

/// `∫_0^L g(s) ds` along a segment whose integrand is singular (or nearly
/// so) at the foot of `x` when `x` is close. `far` integrates over the whole
/// segment with a given rule; `near(sign, lo, hi)` integrates over
/// `s = τ₀ + sign·t`, `t ∈ [lo, hi]`.
fn along_segment(
    sf: &SegmentFrame,
    far: impl Fn(&GaussRule) -> f64,
    mut near: impl FnMut(f64, f64, f64) -> f64,
) -> f64 {
    let mid_dist = (sf.foot - 0.5 * sf.len).hypot(sf.dist);
    if mid_dist > 6.0 * sf.len {
        return RULES.with(|r| far(&r.0));
    }
    if mid_dist > 2.0 * sf.len {
        return RULES.with(|r| far(&r.1));
    }
    let (a, b) = (-sf.foot, sf.len - sf.foot);
    if a >= 0.0 {
        near(1.0, a, b)
    } else if b <= 0.0 {
        near(-1.0, -b, -a)
    } else {
        near(-1.0, 0.0, -a) + near(1.0, 0.0, b)
    }
}

/// `∫_{p→q} G_α(|x - z|) dz` along a straight segment.
pub(crate) fn segment_green(alpha: f64, x: [f64; 2], p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    let sf = segment_frame(x, p, q);
    if sf.len == 0.0 {
        return [0.0, 0.0];
    }
    let d2 = sf.dist * sf.dist;
    let scalar = along_segment(
        &sf,
        |rule| {
            rule.integrate(0.0, sf.len, |s| {
                let z = [p[0] + s * sf.tangent[0] - x[0], p[1] + s * sf.tangent[1] - x[1]];
                green(alpha, z[0] * z[0] + z[1] * z[1])
            })
        },
        |_, lo, hi| {
            if sf.dist <= 1e-14 * sf.len {
                green_on_line(alpha, lo, hi)
            } else {
                RULES.with(|r| graded(lo, hi, sf.dist, &r.2, &mut |t| green(alpha, t * t + d2)))
            }
        },
    );
    [scalar * sf.tangent[0], scalar * sf.tangent[1]]
}

/// Signed fan-triangle integral `∫_{tri(x, p, q)} (x - y)^⊥ |x - y|^{-2-2α} dy`
/// with `z^⊥ = (z₂, -z₁)`, done in polar coordinates about `x`: the radial
/// integral is exact and the angular one is carried along the edge.
pub(crate) fn segment_fan(alpha: f64, x: [f64; 2], p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    let sf = segment_frame(x, p, q);
    if sf.len == 0.0 {
        return [0.0, 0.0];
    }
    let w = [p[0] - x[0], p[1] - x[1]];
    // (y - x) × t is constant along the edge; it is dφ/ds · |y - x|²
    let cross = w[0] * sf.tangent[1] - w[1] * sf.tangent[0];
    if cross.abs() <= 1e-14 * sf.len {
        return [0.0, 0.0];
    }
    // along the ray through y the radial integral of ρ^{-1-2α}·ρ is
    // ρ^{1-2α}/(1-2α); with (x - y)^⊥ = -ρ(sin φ, -cos φ) this leaves
    // -(sin φ, -cos φ) |y - x|^{1-2α} (1-2α)⁻¹ dφ
    let integrand = |s: f64, comp: usize| -> f64 {
        let z = [w[0] + s * sf.tangent[0], w[1] + s * sf.tangent[1]];
        let r2 = z[0] * z[0] + z[1] * z[1];
        let perp = if comp == 0 { z[1] } else { -z[0] };
        // dφ = cross / r² ds, with r^{1-2α} from the radial integral
        perp * r2.powf(-1.0 - alpha) * cross
    };
    let scale = -1.0 / (1.0 - 2.0 * alpha);
    let mut out = [0.0; 2];
    for (comp, slot) in out.iter_mut().enumerate() {
        let v = along_segment(
            &sf,
            |rule| rule.integrate(0.0, sf.len, |s| integrand(s, comp)),
            |sign, lo, hi| {
                RULES.with(|r| graded(lo, hi, sf.dist, &r.2, &mut |t| integrand(sf.foot + sign * t, comp)))
            },
        );
        *slot = scale * v;
    }
    out
}
