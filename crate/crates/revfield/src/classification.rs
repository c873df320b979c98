//! Extraction of the combinatorial invariant τ and the analytic invariant η
//! from a concrete vector field, with genericity diagnostics.
//!
//! The pipeline: locate the singular points, trace the 2k separatrices of
//! infinity, probe the k+1 ends, read τ off the probe outcomes, then measure
//! the homoclinic periods, the vertical widths of the axis-touching zones,
//! and the transversal times of the strictly-upper zones by path quadrature.
//! All travel-time values are contour integrals of `1/(iP)`, so they depend
//! only on the homotopy class of the quadrature path; the traces supply the
//! topology and the paths.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::combinatorics::{is_valid_involution, signature, Involution, StratumSignature};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::field::flow::{trace_flow, FlowResult, FlowSpec, FlowTerminal};
use crate::field::quadrature::{
    quad_polyline, quad_ray_tail, quad_real_interval, quad_real_tail, quad_segment,
    reciprocal_field,
};
use crate::field::{
    c64_vec_serde, end_angle, mirror_trace, trace_separatrix_ctx, FieldContext, PointKind, PolyVF,
    SeparatrixTrace, TraceOutcome,
};

/// The analytic invariant: an element of `(R⁺)^a × (iR⁺)^b × H^c`.
///
/// `kappas` are the homoclinic-loop periods ordered by increasing crossing
/// abscissa; `widths` the vertical widths of the axis-touching zones of the
/// complex-point regions, ordered left to right; `times` the transversal
/// times of the strictly-upper zones, ordered by the zone's smaller end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AnalyticInvariant {
    pub kappas: Vec<f64>,
    pub widths: Vec<f64>,
    #[serde(with = "c64_vec_serde")]
    pub times: Vec<Complex64>,
}

impl AnalyticInvariant {
    /// Total number of real parameters, `a + b + 2c`.
    pub fn real_dim(&self) -> usize {
        self.kappas.len() + self.widths.len() + 2 * self.times.len()
    }

    pub fn matches_signature(&self, sig: &StratumSignature) -> bool {
        self.kappas.len() == sig.a && self.widths.len() == sig.b && self.times.len() == sig.c
    }

    /// Componentwise scaling `η ↦ s·η` (travel times under a root scaling
    /// by `r` transform with `s = r^{-k}`).
    pub fn scaled(&self, s: f64) -> AnalyticInvariant {
        AnalyticInvariant {
            kappas: self.kappas.iter().map(|v| v * s).collect(),
            widths: self.widths.iter().map(|v| v * s).collect(),
            times: self.times.iter().map(|v| v * s).collect(),
        }
    }
}

/// Outcome of probing one end at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ProbeOutcome {
    /// The end sits inside a rotation zone.
    Periodic,
    /// The end belongs to an αω-zone flowing from `alpha` to `omega`.
    Pair { alpha: usize, omega: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRecord {
    /// End index; the official ends carry `0 ..= k`, mirror probes are
    /// negative.
    pub end: i64,
    pub outcome: ProbeOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatrixDiagnostic {
    pub index: i64,
    pub outcome: TraceOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonGenericReason {
    ParabolicReal,
    ParabolicComplexPair,
    ComplexCenterCandidate,
    UnresolvedTrajectory,
    AsymmetricLoopPair,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub probes: Vec<ProbeRecord>,
    pub separatrices: Vec<SeparatrixDiagnostic>,
    /// Minimal distance between distinct singular points.
    pub root_separation: f64,
    /// Minimal |Re λ| over complex simple points, if any.
    pub min_re_eig_complex: Option<f64>,
    /// Dimensionless distance-to-bifurcation indicator.
    pub genericity_margin: f64,
    pub non_generic_reason: Option<NonGenericReason>,
}

/// The full classification of one parameter vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub tau: Option<Involution>,
    pub eta: Option<AnalyticInvariant>,
    pub generic: bool,
    pub diagnostics: Diagnostics,
}

struct Probe {
    end: i64,
    outcome: ProbeOutcome,
    /// Forward flow, recorded when the probe is not periodic.
    forward: Option<FlowResult>,
}

/// One-field analysis pipeline holding the context, traces and probes.
pub struct Analyzer {
    pub ctx: FieldContext,
    traces_upper: Vec<SeparatrixTrace>,
    probes: Vec<Probe>,
}

fn probe_flow(ctx: &FieldContext, start: Complex64, dir: f64) -> Result<FlowResult> {
    let locations = ctx.locations();
    trace_flow(&FlowSpec {
        poly: &ctx.poly,
        dir,
        start,
        stop_points: &locations,
        delta_land: ctx.delta_land,
        r_escape: 2.5 * ctx.r_inf,
        delta_axis: ctx.cfg.delta_axis,
        stop_at_crossing: 2,
        rtol: ctx.cfg.flow_rtol,
        max_arc: 400.0 * ctx.r_inf,
        max_steps: 4_000_000,
        record: true,
    })
}

fn probe_signed(ctx: &FieldContext, end: i64) -> Result<Probe> {
    let start = Complex64::from_polar(ctx.r_inf, end_angle(ctx.k(), end));
    let fwd = probe_flow(ctx, start, 1.0)?;
    match fwd.terminal {
        FlowTerminal::AxisCrossings => {
            return Ok(Probe {
                end,
                outcome: ProbeOutcome::Periodic,
                forward: None,
            });
        }
        FlowTerminal::Landed(omega) => {
            let bwd = probe_flow(ctx, start, -1.0)?;
            match bwd.terminal {
                FlowTerminal::Landed(alpha) => Ok(Probe {
                    end,
                    outcome: ProbeOutcome::Pair { alpha, omega },
                    forward: Some(fwd),
                }),
                _ => Err(Error::NearBifurcation(format!(
                    "backward probe of end {end} did not resolve ({:?})",
                    bwd.terminal
                ))),
            }
        }
        other => Err(Error::NearBifurcation(format!(
            "forward probe of end {end} did not resolve ({other:?})"
        ))),
    }
}

impl Analyzer {
    pub fn new(vf: &PolyVF, cfg: &Config) -> Result<Self> {
        let ctx = FieldContext::new(vf, cfg)?;
        Ok(Analyzer {
            ctx,
            traces_upper: Vec::new(),
            probes: Vec::new(),
        })
    }

    fn run_traces(&mut self) -> Result<()> {
        if !self.traces_upper.is_empty() {
            return Ok(());
        }
        for j in 1..=self.ctx.k() as i64 {
            self.traces_upper.push(trace_separatrix_ctx(&self.ctx, j)?);
        }
        Ok(())
    }

    fn run_probes(&mut self) -> Result<()> {
        if !self.probes.is_empty() {
            return Ok(());
        }
        for j in 0..=self.ctx.k() as i64 {
            self.probes.push(probe_signed(&self.ctx, j)?);
        }
        Ok(())
    }

    fn trace(&self, j: i64) -> &SeparatrixTrace {
        &self.traces_upper[(j - 1) as usize]
    }

    fn probe(&self, j: i64) -> &Probe {
        &self.probes[j as usize]
    }

    /// Upper separatrix indices whose trace closes a symmetric homoclinic loop.
    fn homoclinic_indices(&self) -> Vec<i64> {
        self.traces_upper
            .iter()
            .filter(|t| matches!(t.outcome, TraceOutcome::SymmetricHomoclinic { .. }))
            .map(|t| t.index)
            .collect()
    }

    fn crossing_of(&self, j: i64) -> f64 {
        match self.trace(j).outcome {
            TraceOutcome::SymmetricHomoclinic { x } => x,
            _ => unreachable!("crossing_of called on a non-homoclinic trace"),
        }
    }

    /// Builds τ from the probe outcomes: periodic ends are fixed points,
    /// ends sharing the same (α, ω) pair are swapped.
    pub fn extract_tau(&mut self) -> Result<Involution> {
        self.run_traces()?;
        self.run_probes()?;
        let k = self.ctx.k();
        let mut map = vec![usize::MAX; k + 1];
        let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
        for j in 0..=k {
            match self.probe(j as i64).outcome {
                ProbeOutcome::Periodic => map[j] = j,
                ProbeOutcome::Pair { alpha, omega } => pairs.push((alpha, omega, j)),
            }
        }
        let mut grouped: Vec<((usize, usize), Vec<usize>)> = Vec::new();
        for (a, o, j) in pairs {
            if let Some(g) = grouped.iter_mut().find(|(key, _)| *key == (a, o)) {
                g.1.push(j);
            } else {
                grouped.push(((a, o), vec![j]));
            }
        }
        for ((a, o), ends) in &grouped {
            if ends.len() != 2 {
                return Err(Error::Consistency(format!(
                    "zone ({a}, {o}) claimed by ends {ends:?}, expected exactly two"
                )));
            }
            map[ends[0]] = ends[1];
            map[ends[1]] = ends[0];
        }
        let tau = Involution::new(map);
        if !is_valid_involution(&tau)? {
            return Err(Error::Consistency(format!(
                "extracted map {:?} is not a valid involution",
                tau.map
            )));
        }

        // Cross-check the homoclinic traces against the block structure.
        let sig = signature(&tau)?;
        let mut expected: Vec<i64> = sig.blocks.iter().skip(1).map(|b| b[0] as i64).collect();
        let mut seen = self.homoclinic_indices();
        expected.sort_unstable();
        seen.sort_unstable();
        if expected != seen {
            return Err(Error::Consistency(format!(
                "homoclinic separatrices {seen:?} do not match the block boundaries {expected:?}"
            )));
        }
        // Left-to-right regions are blocks in reverse order, so crossing
        // abscissas must decrease with the block boundary index.
        let mut by_x: Vec<(f64, i64)> = seen.iter().map(|&j| (self.crossing_of(j), j)).collect();
        by_x.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        for w in by_x.windows(2) {
            if w[0].1 < w[1].1 {
                return Err(Error::Consistency(
                    "homoclinic crossings are not ordered opposite to their indices".into(),
                ));
            }
        }
        // Each singleton-block region must hold exactly its own real center.
        let xs: Vec<f64> = by_x.iter().map(|p| p.0).collect();
        let reals: Vec<f64> = self
            .ctx
            .points
            .iter()
            .filter(|p| p.location.im == 0.0)
            .map(|p| p.location.re)
            .collect();
        for (r, block) in sig.blocks.iter().rev().enumerate() {
            let lo = if r == 0 { f64::NEG_INFINITY } else { xs[r - 1] };
            let hi = if r == sig.blocks.len() - 1 {
                f64::INFINITY
            } else {
                xs[r]
            };
            let inside = reals.iter().filter(|&&x| x > lo && x < hi).count();
            let want = if block.len() == 1 { 1 } else { 0 };
            if inside != want {
                return Err(Error::Consistency(format!(
                    "region ({lo}, {hi}) holds {inside} real centers, expected {want}"
                )));
            }
        }
        Ok(tau)
    }

    /// Travel time of the full homoclinic loop closed by `trace`, measured
    /// by quadrature along the traced path and its ray tail, and cross
    /// checked against the residue sum over the enclosed singular points.
    pub fn homoclinic_period(&self, trace: &SeparatrixTrace) -> Result<f64> {
        if !matches!(trace.outcome, TraceOutcome::SymmetricHomoclinic { .. }) {
            return Err(Error::Domain(
                "homoclinic_period requires a symmetric-homoclinic trace".into(),
            ));
        }
        let qtol = self.ctx.cfg.quad_tol;
        let f = reciprocal_field(&self.ctx.poly);
        let start = trace.polyline[0];
        let tail = quad_ray_tail(&self.ctx.poly, start, qtol);
        let path = quad_polyline(&f, &trace.polyline, qtol);
        // Forward-time orientation: the composite runs from infinity to the
        // axis; a backward-traced (attracting) separatrix reverses the sign.
        let radial = (start.conj() * Complex64::new(0.0, 1.0) * self.ctx.poly.eval(start)).re;
        let dir = if radial < 0.0 { 1.0 } else { -1.0 };
        let kappa = 2.0 * dir * (tail + path).re;

        let enclosed: Vec<usize> = (0..self.ctx.points.len())
            .filter(|&i| loop_encloses(trace, self.ctx.points[i].location))
            .collect();
        let residue = self.ctx.residue_sum(&enclosed);
        let kappa_res = 2.0 * PI * residue.re.abs();
        let rel = (kappa.abs() - kappa_res).abs() / kappa_res.max(1e-300);
        if rel > 1e-8 {
            return Err(Error::Numeric(format!(
                "homoclinic period {kappa:.12e} disagrees with residue value {kappa_res:.12e} \
                 (relative {rel:.3e})"
            )));
        }
        if kappa <= 0.0 {
            return Err(Error::Numeric(format!(
                "homoclinic period must be positive, got {kappa:.6e}"
            )));
        }
        Ok(kappa)
    }

    /// Transversal time between the signed ends `j` and `jp` of one
    /// strictly-off-axis zone, with the sign fixed so the value lies in H.
    ///
    /// Two independent truncation radii must agree; their disagreement is a
    /// path-construction failure.
    pub fn zone_time_signed(&self, j: i64, jp: i64) -> Result<Complex64> {
        let pj = probe_signed(&self.ctx, j)?;
        let pj2 = probe_signed(&self.ctx, jp)?;
        let (alpha, omega) = match (pj.outcome.clone(), pj2.outcome.clone()) {
            (
                ProbeOutcome::Pair { alpha: a1, omega: o1 },
                ProbeOutcome::Pair { alpha: a2, omega: o2 },
            ) if a1 == a2 && o1 == o2 => (a1, o1),
            (o1, o2) => {
                return Err(Error::PathConstruction(format!(
                    "ends {j} and {jp} do not bound one zone ({o1:?} vs {o2:?})"
                )))
            }
        };
        let _ = alpha;
        let fa = pj.forward.as_ref().unwrap();
        let fb = pj2.forward.as_ref().unwrap();
        let v1 = self.composite_time(fa, fb, omega, 0.45)?;
        let v2 = self.composite_time(fa, fb, omega, 0.25)?;
        let scale = 1.0 + v1.norm();
        if (v1 - v2).norm() > 1e-8 * scale {
            return Err(Error::PathConstruction(format!(
                "independent quadrature paths disagree: {v1} vs {v2}"
            )));
        }
        let v = 0.5 * (v1 + v2);
        Ok(if v.im >= 0.0 { v } else { -v })
    }

    /// `∫ dz/(iP)` from the end of `fa` to the end of `fb`: ray tail +
    /// forward polyline of `fa`, a chord past the shared landing point, and
    /// the reversed polyline + tail of `fb`.
    fn composite_time(
        &self,
        fa: &FlowResult,
        fb: &FlowResult,
        omega: usize,
        radius_factor: f64,
    ) -> Result<Complex64> {
        let target = self.ctx.points[omega].location;
        let mut clearance = f64::INFINITY;
        for (i, p) in self.ctx.points.iter().enumerate() {
            if i != omega {
                clearance = clearance.min((p.location - target).norm());
            }
        }
        if !clearance.is_finite() {
            clearance = 1.0 + self.ctx.max_abs_root;
        }
        let rho = radius_factor * clearance;
        let cut = |poly: &FlowResult| -> Result<usize> {
            poly.polyline
                .iter()
                .position(|z| (z - target).norm() <= rho)
                .ok_or_else(|| {
                    Error::PathConstruction(format!(
                        "probe polyline never enters radius {rho:.3e} of its landing point"
                    ))
                })
        };
        let ia = cut(fa)?;
        let ib = cut(fb)?;
        let a_pts = &fa.polyline[..=ia];
        let b_pts = &fb.polyline[..=ib];
        let chord_a = fa.polyline[ia];
        let chord_b = fb.polyline[ib];
        let guard = 0.4 * rho;
        for p in &self.ctx.points {
            if crate::field::point_segment_dist(p.location, chord_a, chord_b) < guard
                && (p.location - target).norm() > 1e-12
            {
                return Err(Error::PathConstruction(
                    "connector chord passes too close to a singular point".into(),
                ));
            }
        }
        let qtol = self.ctx.cfg.quad_tol;
        let f = reciprocal_field(&self.ctx.poly);
        let tail_a = quad_ray_tail(&self.ctx.poly, fa.polyline[0], qtol);
        let tail_b = quad_ray_tail(&self.ctx.poly, fb.polyline[0], qtol);
        let path_a = quad_polyline(&f, a_pts, qtol);
        let path_b = quad_polyline(&f, b_pts, qtol);
        let chord = quad_segment(&f, chord_a, chord_b, qtol);
        Ok(tail_a + path_a + chord - path_b - tail_b)
    }

    /// Assembles the analytic invariant for a known τ.
    pub fn extract_eta(&mut self, tau: &Involution) -> Result<AnalyticInvariant> {
        self.run_traces()?;
        self.run_probes()?;
        let sig = signature(tau)?;

        let mut loops: Vec<(f64, i64)> = self
            .homoclinic_indices()
            .into_iter()
            .map(|j| (self.crossing_of(j), j))
            .collect();
        loops.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        let mut kappas = Vec::with_capacity(loops.len());
        for &(_, j) in &loops {
            kappas.push(self.homoclinic_period(self.trace(j))?);
        }

        let widths = self.region_widths(&sig, &loops)?;

        let mut times = Vec::new();
        for j in 0..=self.ctx.k() {
            let tj = tau.map[j];
            if tj <= j {
                continue;
            }
            let pj = self.probe(j as i64);
            if let ProbeOutcome::Pair { alpha, omega } = pj.outcome {
                let a_im = self.ctx.points[alpha].location.im;
                let o_im = self.ctx.points[omega].location.im;
                if a_im > 0.0 && o_im > 0.0 {
                    times.push(self.upper_zone_time(j as i64, tj as i64)?);
                }
            }
        }

        let eta = AnalyticInvariant { kappas, widths, times };
        if !eta.matches_signature(&sig) {
            return Err(Error::Consistency(format!(
                "analytic slots ({}, {}, {}) do not match the signature ({}, {}, {})",
                eta.kappas.len(),
                eta.widths.len(),
                eta.times.len(),
                sig.a,
                sig.b,
                sig.c
            )));
        }
        Ok(eta)
    }

    fn upper_zone_time(&self, j: i64, jp: i64) -> Result<Complex64> {
        let pa = self.probe(j);
        let pb = self.probe(jp);
        let omega = match pa.outcome {
            ProbeOutcome::Pair { omega, .. } => omega,
            _ => unreachable!(),
        };
        let fa = pa.forward.as_ref().unwrap();
        let fb = pb.forward.as_ref().unwrap();
        let v1 = self.composite_time(fa, fb, omega, 0.45)?;
        let v2 = self.composite_time(fa, fb, omega, 0.25)?;
        let scale = 1.0 + v1.norm();
        if (v1 - v2).norm() > 1e-8 * scale {
            return Err(Error::PathConstruction(format!(
                "independent quadrature paths disagree for zone ({j}, {jp}): {v1} vs {v2}"
            )));
        }
        let v = 0.5 * (v1 + v2);
        if v.im.abs() < 1e-12 * scale {
            return Err(Error::NearBifurcation(format!(
                "transversal time of zone ({j}, {jp}) has vanishing imaginary part"
            )));
        }
        Ok(if v.im > 0.0 { v } else { -v })
    }

    /// Vertical widths of the axis-touching zones of the complex-point
    /// regions: travel time along the region's real-axis segment.
    fn region_widths(&self, sig: &StratumSignature, loops: &[(f64, i64)]) -> Result<Vec<f64>> {
        let xs: Vec<f64> = loops.iter().map(|p| p.0).collect();
        let q = sig.blocks.len();
        let poly = &self.ctx.poly;
        let qtol = self.ctx.cfg.quad_tol;
        let far = 2.0 * (1.0 + self.ctx.max_abs_root);
        let mut widths = Vec::new();
        for r in 0..q {
            // Left-to-right region r corresponds to block q-1-r.
            let block = &sig.blocks[q - 1 - r];
            if block.len() == 1 {
                continue;
            }
            let lo = if r == 0 { None } else { Some(xs[r - 1]) };
            let hi = if r == q - 1 { None } else { Some(xs[r]) };
            let v = match (lo, hi) {
                (Some(a), Some(b)) => quad_real_interval(poly, a, b, qtol),
                (None, Some(b)) => {
                    let split = (-far).min(b - 1.0);
                    quad_real_tail(poly, split, qtol) + quad_real_interval(poly, split, b, qtol)
                }
                (Some(a), None) => {
                    let split = far.max(a + 1.0);
                    quad_real_interval(poly, a, split, qtol) + quad_real_tail(poly, split, qtol)
                }
                (None, None) => {
                    quad_real_tail(poly, -far, qtol)
                        + quad_real_interval(poly, -far, far, qtol)
                        + quad_real_tail(poly, far, qtol)
                }
            };
            let w = v.abs();
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Numeric(format!(
                    "vertical width of region {r} is degenerate: {v}"
                )));
            }
            widths.push(w);
        }
        Ok(widths)
    }

    fn diagnostics(&self) -> Diagnostics {
        let probes = self
            .probes
            .iter()
            .map(|p| ProbeRecord {
                end: p.end,
                outcome: p.outcome.clone(),
            })
            .collect();
        let mut separatrices: Vec<SeparatrixDiagnostic> = Vec::new();
        for t in &self.traces_upper {
            separatrices.push(SeparatrixDiagnostic {
                index: t.index,
                outcome: t.outcome.clone(),
            });
            let m = mirror_trace(&self.ctx, t);
            separatrices.push(SeparatrixDiagnostic {
                index: m.index,
                outcome: m.outcome,
            });
        }
        separatrices.sort_by_key(|s| (s.index.abs(), s.index < 0));
        let (margin, min_re) = genericity_margin(&self.ctx);
        Diagnostics {
            probes,
            separatrices,
            root_separation: self.ctx.root_sep,
            min_re_eig_complex: min_re,
            genericity_margin: margin,
            non_generic_reason: None,
        }
    }
}

/// Relative genericity margin and minimal complex-eigenvalue real part.
fn genericity_margin(ctx: &FieldContext) -> (f64, Option<f64>) {
    let scale = 1.0 + ctx.max_abs_root;
    let sep_margin = ctx.root_sep / scale;
    let max_eig = ctx
        .points
        .iter()
        .filter(|p| p.is_simple())
        .map(|p| p.eigenvalue.norm())
        .fold(0.0f64, f64::max);
    let min_re = ctx
        .points
        .iter()
        .filter(|p| p.is_simple() && p.location.im != 0.0)
        .map(|p| p.eigenvalue.re.abs())
        .fold(f64::INFINITY, f64::min);
    if min_re.is_finite() {
        let eig_margin = min_re / max_eig.max(1e-300);
        (sep_margin.min(eig_margin), Some(min_re))
    } else {
        (sep_margin, None)
    }
}

/// Even-odd test of the vertical upward ray from `p` against the closed
/// homoclinic loop (traced half, its mirror, and the two ray tails).
fn loop_encloses(trace: &SeparatrixTrace, p: Complex64) -> bool {
    let x = p.re;
    let y = p.im;
    let mut crossings = 0usize;
    let segs = |pts: &[Complex64], crossings: &mut usize| {
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a.re <= x) != (b.re <= x) {
                let t = (x - a.re) / (b.re - a.re);
                let yy = a.im + t * (b.im - a.im);
                if yy > y {
                    *crossings += 1;
                }
            }
        }
    };
    segs(&trace.polyline, &mut crossings);
    let mirrored: Vec<Complex64> = trace.polyline.iter().map(|z| z.conj()).collect();
    segs(&mirrored, &mut crossings);
    // Ray tails from the first polyline point outward.
    let z0 = trace.polyline[0];
    for tail in [z0, z0.conj()] {
        let (r0, th) = tail.to_polar();
        let c = th.cos();
        if c.abs() > 1e-300 {
            let r_hit = x / c;
            if r_hit >= r0 && r_hit * th.sin() > y {
                crossings += 1;
            }
        }
    }
    crossings % 2 == 1
}

/// Probes the end `e_j`: integrates forward and backward from
/// `R_inf · exp(iπj/k)` and reports either the (α, ω) pair of the zone or
/// that the end lies in a rotation zone.
pub fn probe_end(vf: &PolyVF, j: usize, cfg: &Config) -> Result<ProbeRecord> {
    let ctx = FieldContext::new(vf, cfg)?;
    if j > ctx.k() {
        return Err(Error::Domain(format!("end index {j} out of 0..={}", ctx.k())));
    }
    let p = probe_signed(&ctx, j as i64)?;
    Ok(ProbeRecord {
        end: p.end,
        outcome: p.outcome,
    })
}

/// Extracts the combinatorial invariant of a generic-candidate field.
pub fn extract_tau(vf: &PolyVF, cfg: &Config) -> Result<Involution> {
    Analyzer::new(vf, cfg)?.extract_tau()
}

/// Transversal time of the strictly-upper zone bounded by the ends `j` and
/// `τ(j)`; path independent inside the zone.
pub fn transversal_time(vf: &PolyVF, zone: (i64, i64), cfg: &Config) -> Result<Complex64> {
    let analyzer = Analyzer::new(vf, cfg)?;
    analyzer.zone_time_signed(zone.0, zone.1)
}

/// Travel time along a traced symmetric homoclinic loop, cross-checked
/// against the residue sum of the enclosed singular points.
pub fn homoclinic_period(vf: &PolyVF, trace: &SeparatrixTrace, cfg: &Config) -> Result<f64> {
    let analyzer = Analyzer::new(vf, cfg)?;
    analyzer.homoclinic_period(trace)
}

/// Extracts the analytic invariant for a field whose τ is already known.
pub fn extract_eta(vf: &PolyVF, tau: &Involution, cfg: &Config) -> Result<AnalyticInvariant> {
    Analyzer::new(vf, cfg)?.extract_eta(tau)
}

fn non_generic(mut diagnostics: Diagnostics, reason: NonGenericReason) -> Classification {
    diagnostics.non_generic_reason = Some(reason);
    Classification {
        tau: None,
        eta: None,
        generic: false,
        diagnostics,
    }
}

/// Full classification: genericity gate, τ, η and diagnostics.
pub fn classify(vf: &PolyVF, cfg: &Config) -> Result<Classification> {
    classify_impl(vf, cfg, true)
}

/// Classification without the analytic invariant; used by parameter-space
/// scans where only the stratum label and the margin are needed.
pub fn classify_combinatorial(vf: &PolyVF, cfg: &Config) -> Result<Classification> {
    classify_impl(vf, cfg, false)
}

fn classify_impl(vf: &PolyVF, cfg: &Config, with_eta: bool) -> Result<Classification> {
    let mut analyzer = Analyzer::new(vf, cfg)?;
    let ctx = &analyzer.ctx;
    let (margin, min_re) = genericity_margin(ctx);
    let base_diag = Diagnostics {
        probes: Vec::new(),
        separatrices: Vec::new(),
        root_separation: ctx.root_sep,
        min_re_eig_complex: min_re,
        genericity_margin: margin,
        non_generic_reason: None,
    };

    if let Some(p) = ctx.points.iter().find(|p| !p.is_simple()) {
        let reason = if p.location.im == 0.0 {
            NonGenericReason::ParabolicReal
        } else {
            NonGenericReason::ParabolicComplexPair
        };
        return Ok(non_generic(base_diag, reason));
    }
    if ctx
        .points
        .iter()
        .any(|p| p.kind == PointKind::ComplexCenterCandidate)
    {
        return Ok(non_generic(base_diag, NonGenericReason::ComplexCenterCandidate));
    }

    analyzer.run_traces()?;
    for t in &analyzer.traces_upper {
        match t.outcome {
            TraceOutcome::Escapes { .. } => {
                let mut d = base_diag.clone();
                d.separatrices = analyzer
                    .traces_upper
                    .iter()
                    .map(|t| SeparatrixDiagnostic {
                        index: t.index,
                        outcome: t.outcome.clone(),
                    })
                    .collect();
                return Ok(non_generic(d, NonGenericReason::AsymmetricLoopPair));
            }
            TraceOutcome::Unresolved => {
                let mut d = base_diag.clone();
                d.separatrices = analyzer
                    .traces_upper
                    .iter()
                    .map(|t| SeparatrixDiagnostic {
                        index: t.index,
                        outcome: t.outcome.clone(),
                    })
                    .collect();
                return Ok(non_generic(d, NonGenericReason::UnresolvedTrajectory));
            }
            _ => {}
        }
    }

    match analyzer.run_probes() {
        Ok(()) => {}
        Err(Error::NearBifurcation(_)) => {
            return Ok(non_generic(base_diag, NonGenericReason::UnresolvedTrajectory));
        }
        Err(e) => return Err(e),
    }

    let tau = analyzer.extract_tau()?;
    let eta = if with_eta {
        Some(analyzer.extract_eta(&tau)?)
    } else {
        None
    };
    let diagnostics = analyzer.diagnostics();
    Ok(Classification {
        tau: Some(tau),
        eta,
        generic: true,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config::default()
    }

    fn vf(eps: &[f64]) -> PolyVF {
        PolyVF::new(eps.to_vec()).unwrap()
    }

    #[test]
    fn probes_of_three_centers() {
        let v = vf(&[0.0, -1.0]);
        for j in 0..=2 {
            let p = probe_end(&v, j, &cfg()).unwrap();
            assert_eq!(p.outcome, ProbeOutcome::Periodic, "end {j}");
        }
    }

    #[test]
    fn tau_of_three_centers_is_identity() {
        let v = vf(&[0.0, -1.0]);
        let tau = extract_tau(&v, &cfg()).unwrap();
        assert_eq!(tau.map, vec![0, 1, 2]);
    }

    #[test]
    fn tau_of_perturbed_symmetric_cubic() {
        // z^3 + z + δ destroys the symmetric loop pair of z^3 + z.
        let plus = extract_tau(&vf(&[0.04, 1.0]), &cfg()).unwrap();
        let minus = extract_tau(&vf(&[-0.04, 1.0]), &cfg()).unwrap();
        assert_eq!(plus.map, vec![1, 0, 2]);
        assert_eq!(minus.map, vec![0, 2, 1]);
    }

    #[test]
    fn worked_cubic_classification() {
        let v = vf(&[0.0, -1.0]);
        let c = classify(&v, &cfg()).unwrap();
        assert!(c.generic);
        let tau = c.tau.unwrap();
        assert_eq!(tau.map, vec![0, 1, 2]);
        let eta = c.eta.unwrap();
        assert_eq!(eta.kappas.len(), 2);
        assert!(eta.widths.is_empty());
        assert!(eta.times.is_empty());
        for k in &eta.kappas {
            assert!((k - PI).abs() < 1e-8, "kappa = {k}");
        }
    }

    #[test]
    fn non_generic_cases() {
        // homoclinic ray: ε0 = 0, ε1 > 0 (complex pair ±i with imaginary eigenvalue)
        let c = classify(&vf(&[0.0, 1.0]), &cfg()).unwrap();
        assert!(!c.generic);
        assert_eq!(
            c.diagnostics.non_generic_reason,
            Some(NonGenericReason::ComplexCenterCandidate)
        );
        // triple parabolic point at the origin
        let c = classify(&vf(&[0.0, 0.0]), &cfg()).unwrap();
        assert!(!c.generic);
        assert_eq!(
            c.diagnostics.non_generic_reason,
            Some(NonGenericReason::ParabolicReal)
        );
    }

    #[test]
    fn eta_slots_match_signature() {
        let v = vf(&[1.0, 1.0]); // z^3 + z + 1, one real root + complex pair
        let c = classify(&v, &cfg()).unwrap();
        assert!(c.generic);
        let sig = signature(c.tau.as_ref().unwrap()).unwrap();
        assert!(c.eta.as_ref().unwrap().matches_signature(&sig));
        assert_eq!(c.eta.as_ref().unwrap().real_dim(), 2);
    }
}
