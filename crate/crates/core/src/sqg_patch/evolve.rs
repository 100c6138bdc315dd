use super::{node_velocities, PatchContour, PatchSystem};
use crate::error::{Error, Result};

/// Node spacing control: `h = min(h_max, c_κ/√κ, β·x₁)` floored at `h_min`,
/// then limited so that `|dh/ds| <= growth`. The `β·x₁` term only applies
/// with odd symmetry, where `x₁` is half the distance to the mirror patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedistributionParams {
    pub h_max: f64,
    pub h_min: f64,
    pub curvature_scale: f64,
    pub front_factor: f64,
    pub growth: f64,
}

impl Default for RedistributionParams {
    fn default() -> Self {
        Self { h_max: 0.05, h_min: 1e-3, curvature_scale: 0.05, front_factor: 0.25, growth: 0.15 }
    }
}

/// Curvature through three consecutive nodes (inverse circumradius).
fn menger_curvature(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let (ab, bc, ca) = ((b[0] - a[0]).hypot(b[1] - a[1]), (c[0] - b[0]).hypot(c[1] - b[1]), (a[0] - c[0]).hypot(a[1] - c[1]));
    let den = ab * bc * ca;
    if den == 0.0 {
        0.0
    } else {
        2.0 * cross.abs() / den
    }
}

/// Resamples a closed contour at the spacing of `params`, along a cubic
/// Hermite curve through the old nodes in arclength. New points between two
/// wall nodes stay on the wall.
pub fn redistribute(contour: &PatchContour, params: &RedistributionParams, odd_symmetry: bool) -> Result<PatchContour> {
    let p = contour.nodes();
    let n = p.len();
    let seg: Vec<f64> = (0..n).map(|k| {
        let q = p[(k + 1) % n];
        (q[0] - p[k][0]).hypot(q[1] - p[k][1])
    }).collect();
    if seg.iter().any(|&l| l == 0.0) {
        return Err(Error::Precondition("repeated contour node".into()));
    }
    let mut h: Vec<f64> = (0..n)
        .map(|k| {
            let kappa = menger_curvature(p[(k + n - 1) % n], p[k], p[(k + 1) % n]);
            let mut hk = params.h_max;
            if kappa > 0.0 {
                hk = hk.min(params.curvature_scale / kappa.sqrt());
            }
            if odd_symmetry {
                hk = hk.min(params.front_factor * p[k][0]);
            }
            hk.max(params.h_min)
        })
        .collect();
    for _ in 0..2 {
        for k in 1..=n {
            let (i, j) = (k % n, k - 1);
            h[i] = h[i].min(h[j] + params.growth * seg[j]);
        }
        for k in (0..n).rev() {
            let j = (k + 1) % n;
            h[k] = h[k].min(h[j] + params.growth * seg[k]);
        }
    }

    // node-count function F(s) = ∫ ds/h, trapezoidal per segment
    let mut f = vec![0.0; n + 1];
    for k in 0..n {
        f[k + 1] = f[k] + 0.5 * seg[k] * (1.0 / h[k] + 1.0 / h[(k + 1) % n]);
    }
    let m = (f[n].round() as usize).max(8);
    let tangent = |k: usize| -> [f64; 2] {
        let (a, b) = (p[(k + n - 1) % n], p[(k + 1) % n]);
        let ds = seg[(k + n - 1) % n] + seg[k];
        [(b[0] - a[0]) / ds, (b[1] - a[1]) / ds]
    };
    let mut out = Vec::with_capacity(m);
    let mut k = 0;
    for j in 0..m {
        let target = f[n] * j as f64 / m as f64;
        while k + 1 < n && f[k + 1] <= target {
            k += 1;
        }
        let frac = if f[k + 1] > f[k] { (target - f[k]) / (f[k + 1] - f[k]) } else { 0.0 };
        let (a, b) = (p[k], p[(k + 1) % n]);
        if frac == 0.0 {
            out.push(a);
            continue;
        }
        let (ta, tb) = (tangent(k), tangent((k + 1) % n));
        let l = seg[k];
        let t = frac;
        let (h00, h10, h01, h11) =
            (2.0 * t * t * t - 3.0 * t * t + 1.0, t * t * t - 2.0 * t * t + t, -2.0 * t * t * t + 3.0 * t * t, t * t * t - t * t);
        let mut q = [
            h00 * a[0] + h10 * l * ta[0] + h01 * b[0] + h11 * l * tb[0],
            h00 * a[1] + h10 * l * ta[1] + h01 * b[1] + h11 * l * tb[1],
        ];
        if a[1] == 0.0 && b[1] == 0.0 {
            q[1] = 0.0;
        }
        q[1] = q[1].max(0.0);
        if odd_symmetry {
            q[0] = q[0].max(0.0);
        }
        out.push(q);
    }
    PatchContour::new(out, contour.weight)
}

/// Rounded rectangle `[1.5ε, 3.5] × [0, 3.5]`, corner radius `ε/2`, resting on
/// the wall; it lies between `(2ε, 3) × (0, 3)` and `(ε, 4) × (0, 4)`.
pub fn initial_patch(eps: f64, params: &RedistributionParams) -> Result<PatchContour> {
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::Precondition(format!("eps must lie in (0, 0.1), got {eps}")));
    }
    let (x0, x1, y1, r) = (1.5 * eps, 3.5, 3.5, 0.5 * eps);
    let fine = r / 16.0;
    let mut nodes = Vec::new();
    let line = |nodes: &mut Vec<[f64; 2]>, a: [f64; 2], b: [f64; 2]| {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let m = (len / fine).ceil() as usize;
        for i in 0..m {
            let t = i as f64 / m as f64;
            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    };
    let arc = |nodes: &mut Vec<[f64; 2]>, c: [f64; 2], from: f64| {
        let m = 32;
        for i in 0..m {
            let t = from + 0.5 * std::f64::consts::PI * i as f64 / m as f64;
            nodes.push([c[0] + r * t.cos(), c[1] + r * t.sin()]);
        }
    };
    use std::f64::consts::PI;
    line(&mut nodes, [x0 + r, 0.0], [x1 - r, 0.0]);
    arc(&mut nodes, [x1 - r, r], -0.5 * PI);
    line(&mut nodes, [x1, r], [x1, y1 - r]);
    arc(&mut nodes, [x1 - r, y1 - r], 0.0);
    line(&mut nodes, [x1 - r, y1], [x0 + r, y1]);
    arc(&mut nodes, [x0 + r, y1 - r], 0.5 * PI);
    line(&mut nodes, [x0, y1 - r], [x0, r]);
    arc(&mut nodes, [x0 + r, r], PI);
    for q in nodes.iter_mut() {
        // the arcs leave the wall tangentially; keep rounding off the wall
        if q[1].abs() < 1e-15 {
            q[1] = 0.0;
        }
    }
    let dense = PatchContour::new(nodes, 1.0)?;
    redistribute(&dense, params, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactKind {
    /// The patch reached its mirror copy across the `x₂`-axis.
    Mirror,
    /// Two distant arcs of one contour came together.
    SelfContact,
    /// Two stored contours came together.
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub kind: ContactKind,
    pub location: [f64; 2],
    pub distance: f64,
    pub tolerance: f64,
}

fn segment_distance(a: ([f64; 2], [f64; 2]), b: ([f64; 2], [f64; 2])) -> (f64, [f64; 2]) {
    let pd = |x: [f64; 2], p: [f64; 2], q: [f64; 2]| -> (f64, [f64; 2]) {
        let e = [q[0] - p[0], q[1] - p[1]];
        let l2 = e[0] * e[0] + e[1] * e[1];
        let s = if l2 == 0.0 { 0.0 } else { (((x[0] - p[0]) * e[0] + (x[1] - p[1]) * e[1]) / l2).clamp(0.0, 1.0) };
        let c = [p[0] + s * e[0], p[1] + s * e[1]];
        ((x[0] - c[0]).hypot(x[1] - c[1]), [0.5 * (x[0] + c[0]), 0.5 * (x[1] + c[1])])
    };
    [pd(a.0, b.0, b.1), pd(a.1, b.0, b.1), pd(b.0, a.0, a.1), pd(b.1, a.0, a.1)]
        .into_iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("four candidates")
}

/// Contact at the touch tolerance `3 × (smallest node spacing)`. Segments of
/// one contour closer in arclength than ten times the larger of their lengths
/// and the tolerance are neighbors, not a contact. Wall contact is allowed.
pub fn contact_check(system: &PatchSystem) -> Option<Contact> {
    let tol = 3.0 * system.contours.iter().map(|c| c.min_spacing()).fold(f64::INFINITY, f64::min);
    let mut best: Option<Contact> = None;
    let mut consider = |c: Contact| {
        if c.distance < c.tolerance && best.map_or(true, |b| c.distance < b.distance) {
            best = Some(c);
        }
    };
    for c in &system.contours {
        if system.odd_symmetry {
            let front = c.leftmost();
            consider(Contact { kind: ContactKind::Mirror, location: [0.0, front[1]], distance: 2.0 * front[0], tolerance: tol });
        }
        let segs: Vec<_> = c.segments().collect();
        let n = segs.len();
        let mut s = vec![0.0; n + 1];
        for k in 0..n {
            s[k + 1] = s[k] + (segs[k].1[0] - segs[k].0[0]).hypot(segs[k].1[1] - segs[k].0[1]);
        }
        let total = s[n];
        for i in 0..n {
            for j in i + 1..n {
                let along = (s[j] - s[i]).min(total - (s[j] - s[i]));
                let li = s[i + 1] - s[i];
                let lj = s[j + 1] - s[j];
                if along < 10.0 * li.max(lj).max(tol) {
                    continue;
                }
                let (d, at) = segment_distance(segs[i], segs[j]);
                consider(Contact { kind: ContactKind::SelfContact, location: at, distance: d, tolerance: tol });
            }
        }
    }
    for (a, ca) in system.contours.iter().enumerate() {
        for cb in &system.contours[a + 1..] {
            for sa in ca.segments() {
                for sb in cb.segments() {
                    let (d, at) = segment_distance(sa, sb);
                    consider(Contact { kind: ContactKind::Pair, location: at, distance: d, tolerance: tol });
                }
            }
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct PatchStep {
    pub system: PatchSystem,
    pub dt: f64,
    /// Node velocities at the start of the step.
    pub velocities: Vec<Vec<[f64; 2]>>,
    pub contact: Option<Contact>,
}

/// Time step from the node velocities: `cfl` times the smallest
/// `|Δs| / |Δu|` over segments, and with odd symmetry the smallest
/// `x₁ / |u₁|` over nodes moving toward the axis.
fn choose_dt(system: &PatchSystem, vel: &[Vec<[f64; 2]>], cfl: f64, dt_max: f64) -> f64 {
    let mut dt = dt_max;
    for (c, u) in system.contours.iter().zip(vel) {
        let p = c.nodes();
        let n = p.len();
        for k in 0..n {
            let j = (k + 1) % n;
            let ds = (p[j][0] - p[k][0]).hypot(p[j][1] - p[k][1]);
            let du = (u[j][0] - u[k][0]).hypot(u[j][1] - u[k][1]);
            if du > 0.0 {
                dt = dt.min(cfl * ds / du);
            }
            if system.odd_symmetry && u[k][0] < 0.0 {
                dt = dt.min(cfl * p[k][0] / -u[k][0]);
            }
        }
    }
    dt
}

fn advance(system: &PatchSystem, base: &PatchSystem, vel: &[Vec<[f64; 2]>], dt: f64) -> Result<PatchSystem> {
    let mut next = base.clone();
    next.contours = system
        .contours
        .iter()
        .zip(&base.contours)
        .zip(vel)
        .map(|((_, b), u)| {
            let nodes = b
                .nodes()
                .iter()
                .zip(u)
                .map(|(p, v)| {
                    let y = if p[1] == 0.0 { 0.0 } else { (p[1] + dt * v[1]).max(0.0) };
                    [p[0] + dt * v[0], y]
                })
                .collect();
            PatchContour::new(nodes, b.weight)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(next)
}

/// One Heun step of every node with the contour velocity, then
/// redistribution and the contact test. A node pushed across the axis (odd
/// symmetry) is reported as a mirror contact.
pub fn evolve_patch(
    system: &PatchSystem,
    params: &RedistributionParams,
    cfl: f64,
    dt_max: f64,
) -> Result<PatchStep> {
    let v0 = node_velocities(system);
    let dt = choose_dt(system, &v0, cfl, dt_max);
    let predictor = advance(system, system, &v0, dt)?;
    let v1 = node_velocities(&predictor);
    let mean: Vec<Vec<[f64; 2]>> = v0
        .iter()
        .zip(&v1)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]).collect())
        .collect();
    let moved = advance(system, system, &mean, dt)?;
    if system.odd_symmetry {
        for c in &moved.contours {
            let front = c.leftmost();
            if front[0] <= 0.0 {
                let mut same = moved.clone();
                same.t = system.t + dt;
                return Ok(PatchStep {
                    system: same,
                    dt,
                    velocities: v0,
                    contact: Some(Contact { kind: ContactKind::Mirror, location: [0.0, front[1]], distance: 0.0, tolerance: 0.0 }),
                });
            }
        }
    }
    let mut next = moved;
    next.contours = next
        .contours
        .iter()
        .map(|c| redistribute(c, params, system.odd_symmetry))
        .collect::<Result<Vec<_>>>()?;
    next.t = system.t + dt;
    let contact = contact_check(&next);
    Ok(PatchStep { system: next, dt, velocities: v0, contact })
}
