//! The vector field `iP_ε(z) d/dz`: singular points, periods, separatrices.

pub mod flow;
pub mod quadrature;
pub mod roots;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::config::Config;
use crate::error::{Error, Result};
use flow::{trace_flow, FlowResult, FlowSpec, FlowTerminal};
use roots::{roots_monic, Polynomial};

/// Serialization of complex values as `[re, im]` pairs.
pub(crate) mod c64_serde {
    use num_complex::Complex64;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.len() != 2 {
            return Err(D::Error::custom("expected [re, im]"));
        }
        Ok(Complex64::new(v[0], v[1]))
    }
}

pub(crate) mod c64_vec_serde {
    use num_complex::Complex64;
    use serde::de::Error as _;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for z in v {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<Vec<f64>>::deserialize(d)?;
        raw.into_iter()
            .map(|p| {
                if p.len() != 2 {
                    Err(D::Error::custom("expected [re, im]"))
                } else {
                    Ok(Complex64::new(p[0], p[1]))
                }
            })
            .collect()
    }
}

/// The parameter vector of `P(z) = z^{k+1} + ε_{k-1} z^{k-1} + … + ε_1 z + ε_0`.
///
/// The `z^k` coefficient is identically zero, so the roots sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyVF {
    pub k: usize,
    pub eps: Vec<f64>,
}

impl PolyVF {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        let k = eps.len();
        if k <= 1 {
            return Err(Error::Domain(format!(
                "k = {k} rejected: the point at infinity must be a pole (k >= 2)"
            )));
        }
        if eps.iter().any(|e| !e.is_finite()) {
            return Err(Error::Validation("non-finite coefficient".into()));
        }
        Ok(PolyVF { k, eps })
    }

    /// Ascending coefficients of `P`, length `k + 2`.
    pub fn poly(&self) -> Polynomial {
        let mut c = self.eps.clone();
        c.push(0.0);
        c.push(1.0);
        Polynomial::new(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointKind {
    RealCenter,
    Attracting,
    Repelling,
    Parabolic,
    ComplexCenterCandidate,
}

/// A root of `P` with its local data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularPoint {
    #[serde(with = "c64_serde")]
    pub location: Complex64,
    pub multiplicity: usize,
    /// `i P'(location)`, only meaningful for simple points.
    #[serde(with = "c64_serde")]
    pub eigenvalue: Complex64,
    pub kind: PointKind,
    /// `2π / P'(location)` for simple points.
    #[serde(with = "c64_serde", default, skip_serializing_if = "is_zero")]
    pub period: Complex64,
}

fn is_zero(z: &Complex64) -> bool {
    z.re == 0.0 && z.im == 0.0
}

impl SingularPoint {
    pub fn is_simple(&self) -> bool {
        self.multiplicity == 1
    }
}

/// Outcome of a separatrix trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TraceOutcome {
    Lands { point: usize },
    SymmetricHomoclinic { x: f64 },
    Escapes { end: i64 },
    Unresolved,
}

/// A traced separatrix of the pole at infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatrixTrace {
    /// Signed index in `{±1, …, ±k}`.
    pub index: i64,
    #[serde(with = "c64_serde")]
    pub asymptotic_direction: Complex64,
    #[serde(with = "c64_vec_serde")]
    pub polyline: Vec<Complex64>,
    pub outcome: TraceOutcome,
    pub arc_length: f64,
}

/// Root data and derived scales of one vector field, shared by the tracing
/// and classification routines.
#[derive(Debug, Clone)]
pub struct FieldContext {
    pub vf: PolyVF,
    pub poly: Polynomial,
    pub dpoly: Polynomial,
    pub points: Vec<SingularPoint>,
    pub root_sep: f64,
    pub max_abs_root: f64,
    pub r_inf: f64,
    pub delta_land: f64,
    pub tol_eig: f64,
    pub cfg: Config,
}

impl FieldContext {
    pub fn new(vf: &PolyVF, cfg: &Config) -> Result<Self> {
        let poly = vf.poly();
        let dpoly = poly.derivative();
        let points = singular_points_impl(vf, cfg)?;
        let max_abs_root = points
            .iter()
            .map(|p| p.location.norm())
            .fold(0.0f64, f64::max);
        let mut root_sep = f64::INFINITY;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                root_sep = root_sep.min((points[i].location - points[j].location).norm());
            }
        }
        if points.len() <= 1 {
            root_sep = 1.0 + max_abs_root;
        }
        let r_inf = cfg.r_inf_factor * (1.0 + max_abs_root);
        let delta_land = cfg.delta_land_factor * root_sep;
        let max_dp = points
            .iter()
            .filter(|p| p.is_simple())
            .map(|p| dpoly.eval(p.location).norm())
            .fold(0.0f64, f64::max);
        let tol_eig = cfg.tol_eig_factor * max_dp.max(1e-30);
        Ok(FieldContext {
            vf: vf.clone(),
            poly,
            dpoly,
            points,
            root_sep,
            max_abs_root,
            r_inf,
            delta_land,
            tol_eig,
            cfg: cfg.clone(),
        })
    }

    pub fn k(&self) -> usize {
        self.vf.k
    }

    pub fn all_simple(&self) -> bool {
        self.points.iter().all(|p| p.is_simple())
    }

    pub fn locations(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.location).collect()
    }

    /// Id of the point at the conjugate location.
    pub fn conjugate_point(&self, id: usize) -> usize {
        let target = self.points[id].location.conj();
        let mut best = id;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (p.location - target).norm();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// `Σ 1/P'(z_j)` over the given point ids.
    pub fn residue_sum(&self, ids: &[usize]) -> Complex64 {
        ids.iter()
            .map(|&i| self.dpoly.eval(self.points[i].location).inv())
            .sum()
    }
}

/// Locates and classifies all singular points.
pub fn singular_points(vf: &PolyVF, cfg: &Config) -> Result<Vec<SingularPoint>> {
    singular_points_impl(vf, cfg)
}

fn singular_points_impl(vf: &PolyVF, cfg: &Config) -> Result<Vec<SingularPoint>> {
    let poly = vf.poly();
    let dpoly = poly.derivative();
    let raw = roots_monic(&poly)?;
    let scale = 1.0 + raw.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let real_tol = 1e-11 * scale;

    // A multiplicity-m root is only locatable to residual^(1/m), so cluster
    // with an uncertainty-aware radius before anything else.
    let unc: Vec<f64> = raw
        .iter()
        .map(|&z| {
            let (p, dp) = poly.eval_with_derivative(z);
            if dp.norm() > 1e-300 {
                (p.norm() / dp.norm()).min(0.1 * scale)
            } else {
                1e-3 * scale
            }
        })
        .collect();
    let cluster_tol = cfg.parabolic_sep * scale;
    let n = raw.len();
    let mut cluster = (0..n).collect::<Vec<usize>>();
    for i in 0..n {
        for j in (i + 1)..n {
            if (raw[i] - raw[j]).norm() < cluster_tol + 6.0 * (unc[i] + unc[j]) {
                let (a, b) = (cluster[i].min(cluster[j]), cluster[i].max(cluster[j]));
                for c in cluster.iter_mut() {
                    if *c == b {
                        *c = a;
                    }
                }
            }
        }
    }

    // Cluster centers; multiple points are re-refined as the simple root of
    // the (m-1)-th derivative.
    let mut centers: Vec<(Complex64, usize)> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for i in 0..n {
        if seen.contains(&cluster[i]) {
            continue;
        }
        seen.push(cluster[i]);
        let members: Vec<Complex64> = (0..n)
            .filter(|&j| cluster[j] == cluster[i])
            .map(|j| raw[j])
            .collect();
        let mult = members.len();
        let mut center = members.iter().sum::<Complex64>() / mult as f64;
        if mult > 1 {
            let mut dm = poly.clone();
            for _ in 0..mult - 1 {
                dm = dm.derivative();
            }
            for _ in 0..50 {
                let (p, dp) = dm.eval_with_derivative(center);
                if dp.norm() < 1e-300 {
                    break;
                }
                let step = p / dp;
                if step.norm() > 0.5 * scale {
                    break;
                }
                center -= step;
                if step.norm() < 1e-15 * scale {
                    break;
                }
            }
        }
        centers.push((center, mult));
    }

    // Enforce exact conjugate symmetry on the centers.
    let mut reals: Vec<(f64, usize)> = Vec::new();
    let mut uppers: Vec<(Complex64, usize)> = Vec::new();
    let mut lowers: Vec<(Complex64, usize)> = Vec::new();
    for (z, m) in centers {
        if z.im.abs() <= real_tol {
            reals.push((z.re, m));
        } else if z.im > 0.0 {
            uppers.push((z, m));
        } else {
            lowers.push((z, m));
        }
    }
    if uppers.len() != lowers.len() {
        return Err(Error::Numeric(format!(
            "conjugate pairing failed: {} upper vs {} lower points",
            uppers.len(),
            lowers.len()
        )));
    }
    let mut used = vec![false; lowers.len()];
    let mut paired: Vec<(Complex64, usize)> = Vec::new();
    for &(u, m) in &uppers {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (i, &(l, lm)) in lowers.iter().enumerate() {
            if used[i] || lm != m {
                continue;
            }
            let d = (l.conj() - u).norm();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        if best == usize::MAX || best_d > 1e-5 * scale {
            return Err(Error::Numeric(format!(
                "conjugate pairing residual {best_d:.3e} too large"
            )));
        }
        used[best] = true;
        paired.push((0.5 * (u + lowers[best].0.conj()), m));
    }

    let mut points: Vec<SingularPoint> = Vec::new();
    let mut push = |location: Complex64, mult: usize| {
        let dp = dpoly.eval(location);
        let eigenvalue = Complex64::new(0.0, 1.0) * dp;
        let period = if mult == 1 {
            2.0 * PI * dp.inv()
        } else {
            Complex64::new(0.0, 0.0)
        };
        points.push(SingularPoint {
            location,
            multiplicity: mult,
            eigenvalue,
            kind: PointKind::Parabolic, // provisional; assigned below
            period,
        });
    };
    for (x, m) in reals {
        push(Complex64::new(x, 0.0), m);
    }
    for (z, m) in paired {
        push(z, m);
        push(z.conj(), m);
    }

    // Eigenvalue tolerance from the simple points.
    let max_dp = points
        .iter()
        .filter(|p| p.multiplicity == 1)
        .map(|p| dpoly.eval(p.location).norm())
        .fold(0.0f64, f64::max);
    let tol_eig = cfg.tol_eig_factor * max_dp.max(1e-30);

    for p in points.iter_mut() {
        if p.multiplicity > 1 {
            p.kind = PointKind::Parabolic;
        } else if p.location.im == 0.0 {
            p.kind = PointKind::RealCenter;
        } else {
            let re = p.eigenvalue.re;
            p.kind = if re.abs() <= tol_eig {
                PointKind::ComplexCenterCandidate
            } else if re < 0.0 {
                PointKind::Attracting
            } else {
                PointKind::Repelling
            };
        }
    }

    points.sort_by(|a, b| {
        (a.location.re, a.location.im)
            .partial_cmp(&(b.location.re, b.location.im))
            .unwrap()
    });
    Ok(points)
}

/// Period of the center/focus at a simple point: `∮ dz/(iP) = 2π/P'(z)`.
pub fn period(vf: &PolyVF, p: &SingularPoint) -> Result<Complex64> {
    if !p.is_simple() {
        return Err(Error::Domain(
            "period is only defined at simple singular points".into(),
        ));
    }
    let dp = vf.poly().derivative().eval(p.location);
    Ok(2.0 * PI * dp.inv())
}

/// Exact separatrix direction at infinity, `exp(iπ(2j - sgn j)/(2k))`.
pub fn separatrix_angle(k: usize, index: i64) -> f64 {
    let j = index as f64;
    PI * (2.0 * j - j.signum()) / (2.0 * k as f64)
}

/// End direction at infinity, `exp(iπ j/k)` for `j ∈ {0, …, k}` and mirror
/// negatives.
pub fn end_angle(k: usize, j: i64) -> f64 {
    PI * j as f64 / k as f64
}

/// Improves the launch angle so the start point sits on the separatrix to
/// higher order; uses two correction terms of the asymptotic series of
/// `t(z) = ∫ dz/(iP)` near infinity.
fn corrected_separatrix_angle(ctx: &FieldContext, theta0: f64) -> f64 {
    let k = ctx.k() as f64;
    let n = ctx.vf.k + 1; // degree
    let r = ctx.r_inf;
    let e1 = if ctx.vf.k >= 1 { ctx.vf.eps[ctx.vf.k - 1] } else { 0.0 };
    let e2 = if ctx.vf.k >= 2 { ctx.vf.eps[ctx.vf.k - 2] } else { 0.0 };
    let im_t = |theta: f64| -> f64 {
        let i = Complex64::new(0.0, 1.0);
        let zk = Complex64::from_polar(r.powi(-(k as i32)), -k * theta);
        let z2 = Complex64::from_polar(r.powi(-(n as i32 + 1)), -(n as f64 + 1.0) * theta);
        let z3 = Complex64::from_polar(r.powi(-(n as i32 + 2)), -(n as f64 + 2.0) * theta);
        let t = i * (zk / k - e1 * z2 / (n as f64 + 1.0) - e2 * z3 / (n as f64 + 2.0));
        t.im
    };
    let window = 0.2 * PI / (2.0 * k);
    let mut a = theta0 - window;
    let mut b = theta0 + window;
    let (fa, fb) = (im_t(a), im_t(b));
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    if fa.signum() == fb.signum() {
        return theta0;
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let fm = im_t(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Traces the separatrix `s_index` from infinity until it lands, closes a
/// symmetric homoclinic loop, escapes, or exhausts its arc budget.
pub fn trace_separatrix(vf: &PolyVF, index: i64, cfg: &Config) -> Result<SeparatrixTrace> {
    let ctx = FieldContext::new(vf, cfg)?;
    trace_separatrix_ctx(&ctx, index)
}

pub fn trace_separatrix_ctx(ctx: &FieldContext, index: i64) -> Result<SeparatrixTrace> {
    let k = ctx.k() as i64;
    if index == 0 || index.abs() > k {
        return Err(Error::Domain(format!(
            "separatrix index {index} out of range ±1..±{k}"
        )));
    }
    let theta0 = separatrix_angle(ctx.k(), index);
    let theta = corrected_separatrix_angle(ctx, theta0);
    let start = Complex64::from_polar(ctx.r_inf, theta);

    // Forward time if the flow enters the plane along this direction.
    let radial = (start.conj() * Complex64::new(0.0, 1.0) * ctx.poly.eval(start)).re;
    let dir = if radial < 0.0 { 1.0 } else { -1.0 };

    let locations = ctx.locations();
    let result = trace_flow(&FlowSpec {
        poly: &ctx.poly,
        dir,
        start,
        stop_points: &locations,
        delta_land: ctx.delta_land,
        r_escape: 2.0 * ctx.r_inf,
        delta_axis: ctx.cfg.delta_axis,
        stop_at_crossing: 1,
        rtol: ctx.cfg.flow_rtol,
        max_arc: 400.0 * ctx.r_inf,
        max_steps: 4_000_000,
        record: true,
    })?;

    Ok(build_trace(ctx, index, theta0, result))
}

fn build_trace(ctx: &FieldContext, index: i64, theta0: f64, result: FlowResult) -> SeparatrixTrace {
    let k = ctx.k() as i64;
    let outcome = match result.terminal {
        FlowTerminal::Landed(id) => TraceOutcome::Lands { point: id },
        FlowTerminal::AxisCrossings => TraceOutcome::SymmetricHomoclinic {
            x: *result.crossings.last().unwrap(),
        },
        FlowTerminal::Escaped(angle) => {
            let mut end = (angle * k as f64 / PI).round() as i64;
            if end == -k {
                end = k;
            }
            TraceOutcome::Escapes { end }
        }
        FlowTerminal::Exhausted => TraceOutcome::Unresolved,
        FlowTerminal::StepCollapse => TraceOutcome::Unresolved,
    };
    SeparatrixTrace {
        index,
        asymptotic_direction: Complex64::from_polar(1.0, theta0),
        polyline: result.polyline,
        outcome,
        arc_length: result.arc_length,
    }
}

/// Mirror of a trace under `z ↦ conj z`, i.e. the trace of `s_{-index}`.
pub fn mirror_trace(ctx: &FieldContext, trace: &SeparatrixTrace) -> SeparatrixTrace {
    let outcome = match &trace.outcome {
        TraceOutcome::Lands { point } => TraceOutcome::Lands {
            point: ctx.conjugate_point(*point),
        },
        TraceOutcome::SymmetricHomoclinic { x } => TraceOutcome::SymmetricHomoclinic { x: *x },
        TraceOutcome::Escapes { end } => {
            let k = ctx.k() as i64;
            let mut e = -end;
            if e == -k {
                e = k;
            }
            TraceOutcome::Escapes { end: e }
        }
        TraceOutcome::Unresolved => TraceOutcome::Unresolved,
    };
    SeparatrixTrace {
        index: -trace.index,
        asymptotic_direction: trace.asymptotic_direction.conj(),
        polyline: trace.polyline.iter().map(|z| z.conj()).collect(),
        outcome,
        arc_length: trace.arc_length,
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub(crate) fn point_segment_dist(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let denom = ab.norm_sqr();
    if denom == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / denom;
    let t = t.clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

fn directed_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for &p in a {
        let mut best = f64::INFINITY;
        if b.len() == 1 {
            best = (p - b[0]).norm();
        }
        for w in b.windows(2) {
            let d = point_segment_dist(p, w[0], w[1]);
            if d < best {
                best = d;
            }
            if best < worst {
                break;
            }
        }
        if best > worst {
            worst = best;
        }
    }
    worst
}

/// Hausdorff distance between `conj(polyline of s_j)` and the polyline of
/// `s_{-j}`; near zero for any real-coefficient field.
pub fn reversibility_residual(trace_j: &SeparatrixTrace, trace_minus_j: &SeparatrixTrace) -> f64 {
    let conj_a: Vec<Complex64> = trace_j.polyline.iter().map(|z| z.conj()).collect();
    let b = &trace_minus_j.polyline;
    directed_hausdorff(&conj_a, b).max(directed_hausdorff(b, &conj_a))
}

/// Conjugates the field by the root scaling `roots ↦ r·roots`:
/// `ε_j ↦ r^{k+1-j} ε_j`, with time rescaled by `r^{-k}` to stay monic.
pub fn normalize_scale(vf: &PolyVF, r: f64) -> Result<PolyVF> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("scale factor must be positive, got {r}")));
    }
    let k = vf.k;
    let eps = vf
        .eps
        .iter()
        .enumerate()
        .map(|(j, &e)| e * r.powi((k + 1 - j) as i32))
        .collect();
    PolyVF::new(eps)
}

/// Scales the field so that `max |root| = 1`; returns the field and the
/// ratio applied to the roots.
pub fn canonical_normalize(vf: &PolyVF, cfg: &Config) -> Result<(PolyVF, f64)> {
    let pts = singular_points_impl(vf, cfg)?;
    let m = pts.iter().map(|p| p.location.norm()).fold(0.0f64, f64::max);
    if m <= 0.0 {
        return Err(Error::Domain(
            "cannot normalize: all roots at the origin".into(),
        ));
    }
    let r = 1.0 / m;
    Ok((normalize_scale(vf, r)?, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn poly_vf_rejects_small_k() {
        assert!(PolyVF::new(vec![0.0]).is_err());
        assert!(PolyVF::new(vec![0.0, -1.0]).is_ok());
    }

    #[test]
    fn three_real_centers() {
        let vf = PolyVF::new(vec![0.0, -1.0]).unwrap();
        let pts = singular_points(&vf, &cfg()).unwrap();
        assert_eq!(pts.len(), 3);
        let locs: Vec<f64> = pts.iter().map(|p| p.location.re).collect();
        assert!((locs[0] + 1.0).abs() < 1e-12);
        assert!(locs[1].abs() < 1e-12);
        assert!((locs[2] - 1.0).abs() < 1e-12);
        for p in &pts {
            assert_eq!(p.kind, PointKind::RealCenter);
            assert_eq!(p.location.im, 0.0);
        }
        // periods 2π/P' = (π, -2π, π)
        assert!((pts[0].period.re - PI).abs() < 1e-12);
        assert!((pts[1].period.re + 2.0 * PI).abs() < 1e-12);
        assert!((pts[2].period.re - PI).abs() < 1e-12);
    }

    #[test]
    fn complex_center_candidates() {
        // P = z^3 + z: roots 0, ±i; P'(±i) = -2, eigenvalue i·(-2) purely imaginary.
        let vf = PolyVF::new(vec![0.0, 1.0]).unwrap();
        let pts = singular_points(&vf, &cfg()).unwrap();
        assert_eq!(pts.len(), 3);
        let imag: Vec<&SingularPoint> = pts.iter().filter(|p| p.location.im != 0.0).collect();
        assert_eq!(imag.len(), 2);
        for p in imag {
            assert_eq!(p.kind, PointKind::ComplexCenterCandidate);
            assert!((p.period.re + PI).abs() < 1e-12, "2π/P'(±i) = -π");
        }
    }

    #[test]
    fn quartic_conjugate_pairing_and_residue() {
        // P = z^4 - 1: roots ±1, ±i.
        let vf = PolyVF::new(vec![-1.0, 0.0, 0.0]).unwrap();
        let pts = singular_points(&vf, &cfg()).unwrap();
        assert_eq!(pts.len(), 4);
        let sum: Complex64 = pts
            .iter()
            .map(|p| vf.poly().derivative().eval(p.location).inv())
            .sum();
        assert!(sum.norm() < 1e-14);
        let up = pts.iter().find(|p| p.location.im > 0.5).unwrap();
        let down = pts.iter().find(|p| p.location.im < -0.5).unwrap();
        assert_eq!(up.location, down.location.conj());
        // conjugate eigenvalues satisfy conj(λ_z) = -λ_{z̄}
        assert!((up.eigenvalue.conj() + down.eigenvalue).norm() < 1e-14);
    }

    #[test]
    fn parabolic_cluster() {
        // P = z^3: triple root at 0.
        let vf = PolyVF::new(vec![0.0, 0.0]).unwrap();
        let pts = singular_points(&vf, &cfg()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].multiplicity, 3);
        assert_eq!(pts[0].kind, PointKind::Parabolic);
    }

    #[test]
    fn period_matches_contour_oracle() {
        let vf = PolyVF::new(vec![0.0, -1.0]).unwrap();
        let pts = singular_points(&vf, &cfg()).unwrap();
        let poly = vf.poly();
        for p in &pts {
            let want = period(&vf, p).unwrap();
            // contour oracle: trapezoid rule on a small circle
            let m = 512;
            let rho = 0.25;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..m {
                let th = 2.0 * PI * i as f64 / m as f64;
                let w = Complex64::from_polar(rho, th);
                let z = p.location + w;
                let dz_dtheta = Complex64::new(0.0, 1.0) * w;
                acc += dz_dtheta / (Complex64::new(0.0, 1.0) * poly.eval(z));
            }
            let oracle = acc * (2.0 * PI / m as f64);
            assert!((want - oracle).norm() < 1e-10 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn homoclinic_trace_of_cubic() {
        let vf = PolyVF::new(vec![0.0, -1.0]).unwrap();
        let tr = trace_separatrix(&vf, 1, &cfg()).unwrap();
        match tr.outcome {
            TraceOutcome::SymmetricHomoclinic { x } => {
                assert!(x > 0.0 && x < 1.0, "crossing at {x}");
            }
            ref o => panic!("expected homoclinic, got {o:?}"),
        }
        let tr2 = trace_separatrix(&vf, 2, &cfg()).unwrap();
        match tr2.outcome {
            TraceOutcome::SymmetricHomoclinic { x } => {
                assert!(x < 0.0 && x > -1.0, "crossing at {x}");
            }
            ref o => panic!("expected homoclinic, got {o:?}"),
        }
    }

    #[test]
    fn landing_trace() {
        // P = z^3 + z + 1: one real root, one complex pair; generic.
        let vf = PolyVF::new(vec![1.0, 1.0]).unwrap();
        let ctx = FieldContext::new(&vf, &cfg()).unwrap();
        let mut landed = 0;
        for j in 1..=2i64 {
            let tr = trace_separatrix_ctx(&ctx, j).unwrap();
            if matches!(tr.outcome, TraceOutcome::Lands { .. }) {
                landed += 1;
            }
        }
        assert!(landed >= 1, "at least one upper separatrix lands");
    }

    #[test]
    fn reversibility_of_traces() {
        let vf = PolyVF::new(vec![0.3, -1.0]).unwrap();
        let t1 = trace_separatrix(&vf, 1, &cfg()).unwrap();
        let tm1 = trace_separatrix(&vf, -1, &cfg()).unwrap();
        let res = reversibility_residual(&t1, &tm1);
        assert!(res <= 1e-8, "residual {res}");
        // detector sanity: inject a 1e-3 error
        let mut bad = tm1.clone();
        for z in bad.polyline.iter_mut() {
            *z += Complex64::new(1e-3, 0.0);
        }
        assert!(reversibility_residual(&t1, &bad) >= 1e-3 * 0.5);
    }

    #[test]
    fn scaling_rules() {
        let vf = PolyVF::new(vec![0.0, -1.0]).unwrap();
        let s = normalize_scale(&vf, 2.0).unwrap();
        assert_eq!(s.eps, vec![0.0, -4.0]);
        let back = normalize_scale(&s, 0.5).unwrap();
        for (a, b) in back.eps.iter().zip(vf.eps.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let r1 = normalize_scale(&vf, 1.0).unwrap();
        assert_eq!(r1.eps, vf.eps);
        assert!(normalize_scale(&vf, -1.0).is_err());
        let (canon, ratio) = canonical_normalize(&s, &cfg()).unwrap();
        assert!((ratio - 0.5).abs() < 1e-12);
        for (a, b) in canon.eps.iter().zip(vf.eps.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
