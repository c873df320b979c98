//! Numerical inverse of classification: given a valid pair (τ, η), find the
//! real parameter vector ε whose field realizes it.
//!
//! The solver is a damped quasi-Newton iteration on the slot-coordinate
//! mismatch, wrapped in a continuation from the seed's own invariants to the
//! requested η along a straight segment in slot coordinates. The stratum is
//! connected and the target exists and is unique, so the only failure mode
//! is a path passing too close to the stratum boundary, handled by step
//! halving.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classification::{classify, AnalyticInvariant, Classification};
use crate::combinatorics::{is_valid_involution, signature, Involution, StratumSignature};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::field::{normalize_scale, PolyVF};

#[derive(Debug, Clone)]
pub struct RealizeOptions {
    /// Relative slot tolerance of the final match.
    pub tol: f64,
    /// Deterministic relative perturbation applied to the seed roots;
    /// nonzero values are used by the uniqueness probe.
    pub seed_jitter: f64,
    pub max_newton_iters: usize,
    pub max_continuation_halvings: usize,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        RealizeOptions {
            tol: 1e-6,
            seed_jitter: 0.0,
            max_newton_iters: 30,
            max_continuation_halvings: 14,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub continuation_steps: usize,
    pub newton_iterations: usize,
    pub classify_calls: usize,
    pub final_mismatch: f64,
    /// |Σ roots| of the returned field; the centered gauge.
    pub gauge_center_residual: f64,
}

/// Places `m` real roots and `(k+1-m)/2` conjugate pairs according to the
/// block structure of τ, recenters the root sum to zero and returns the
/// parameter vector. A heuristic start only; the solver does the rest.
pub fn seed_configuration(tau: &Involution, eta: &AnalyticInvariant) -> Result<PolyVF> {
    seed_with_shape(tau, eta, 1.0, 0.15)
}

fn seed_with_shape(
    tau: &Involution,
    eta: &AnalyticInvariant,
    height_scale: f64,
    offset_scale: f64,
) -> Result<PolyVF> {
    let sig = signature(tau)?;
    check_eta(&sig, eta)?;
    let q = sig.blocks.len();

    // Relative vertical scale per even block, read from the target widths.
    let widths_geo = geometric_mean(eta.widths.iter().copied());

    let mut reals: Vec<f64> = Vec::new();
    let mut uppers: Vec<Complex64> = Vec::new();
    let mut width_slot = 0usize;
    for r in 0..q {
        let block = &sig.blocks[q - 1 - r];
        let station = (r as f64 - (q as f64 - 1.0) / 2.0) * 2.0;
        if block.len() == 1 {
            reals.push(station);
        } else {
            let n = block.len() / 2;
            let rel = if eta.widths.is_empty() {
                1.0
            } else {
                (eta.widths[width_slot] / widths_geo).powf(-1.0 / (tau.k as f64)).clamp(0.5, 2.0)
            };
            width_slot += 1;
            for i in 0..n {
                let im = height_scale * rel * (0.9 + 1.25 * i as f64);
                let re = station + offset_scale * (i as f64 - (n as f64 - 1.0) / 2.0);
                uppers.push(Complex64::new(re, im));
            }
        }
    }

    eps_from_roots(tau.k, &mut reals, &mut uppers)
}

fn geometric_mean(vals: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in vals {
        sum += v.abs().max(1e-300).ln();
        n += 1;
    }
    if n == 0 {
        1.0
    } else {
        (sum / n as f64).exp()
    }
}

/// Builds the parameter vector of the monic centered polynomial with the
/// given real roots and conjugate pairs.
fn eps_from_roots(k: usize, reals: &mut [f64], uppers: &mut [Complex64]) -> Result<PolyVF> {
    let count = reals.len() + 2 * uppers.len();
    if count != k + 1 {
        return Err(Error::Consistency(format!(
            "root placement produced {count} roots for degree {}",
            k + 1
        )));
    }
    let sum: f64 = reals.iter().sum::<f64>() + 2.0 * uppers.iter().map(|u| u.re).sum::<f64>();
    let shift = -sum / (k as f64 + 1.0);
    for r in reals.iter_mut() {
        *r += shift;
    }
    for u in uppers.iter_mut() {
        *u += shift;
    }

    let mut c = vec![0.0f64; k + 2];
    c[0] = 1.0;
    let mut deg = 0usize;
    for &r in reals.iter() {
        for j in (1..=deg + 1).rev() {
            c[j] = c[j - 1] - r * c[j];
        }
        c[0] *= -r;
        deg += 1;
    }
    for u in uppers.iter() {
        let (p, m) = (-2.0 * u.re, u.norm_sqr());
        for j in (0..=deg + 2).rev() {
            let mut v = 0.0;
            if j >= 2 {
                v += c[j - 2];
            }
            if j >= 1 {
                v += p * c[j - 1];
            }
            v += m * if j <= deg { c[j] } else { 0.0 };
            c[j] = v;
        }
        deg += 2;
    }
    debug_assert_eq!(deg, k + 1);
    let scale = c.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if c[k].abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::Consistency(format!(
            "centered polynomial kept a z^k coefficient {:.3e}",
            c[k]
        )));
    }
    PolyVF::new(c[..k].to_vec())
}

fn check_eta(sig: &StratumSignature, eta: &AnalyticInvariant) -> Result<()> {
    if !eta.matches_signature(sig) {
        return Err(Error::Validation(format!(
            "analytic invariant slots ({}, {}, {}) do not match the stratum dimensions ({}, {}, {})",
            eta.kappas.len(),
            eta.widths.len(),
            eta.times.len(),
            sig.a,
            sig.b,
            sig.c
        )));
    }
    if eta.kappas.iter().chain(eta.widths.iter()).any(|&v| !(v > 0.0)) {
        return Err(Error::Domain(
            "homoclinic periods and widths must be strictly positive".into(),
        ));
    }
    if eta.times.iter().any(|t| !(t.im > 0.0)) {
        return Err(Error::Domain(
            "transversal times must lie in the open upper half plane".into(),
        ));
    }
    Ok(())
}

/// Slot coordinates: logs of the positive slots, `(Re, log Im)` for the
/// upper-half-plane slots. Lengths always sum to `k`.
fn coords(eta: &AnalyticInvariant, re_norms: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(eta.real_dim());
    for &x in &eta.kappas {
        v.push(x.ln());
    }
    for &x in &eta.widths {
        v.push(x.ln());
    }
    for (i, t) in eta.times.iter().enumerate() {
        v.push(t.re / re_norms[i]);
        v.push(t.im.ln());
    }
    v
}

fn re_norms_of(eta: &AnalyticInvariant) -> Vec<f64> {
    eta.times.iter().map(|t| 1.0 + t.re.abs()).collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Gaussian elimination with partial pivoting; the systems are k × k with
/// k ≤ 14.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in (r + 1)..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

struct Evaluator<'a> {
    tau: &'a Involution,
    cfg: Config,
    re_norms: Vec<f64>,
    calls: usize,
}

impl<'a> Evaluator<'a> {
    /// Classifies ε and returns its slot coordinates; fails when the sample
    /// leaves the stratum.
    fn eval(&mut self, eps: &[f64]) -> Result<(Vec<f64>, Classification)> {
        self.calls += 1;
        let vf = PolyVF::new(eps.to_vec())?;
        let c = classify(&vf, &self.cfg)?;
        if !c.generic {
            return Err(Error::Solver(format!(
                "sample left the stratum: {:?}",
                c.diagnostics.non_generic_reason
            )));
        }
        if c.tau.as_ref().map(|t| &t.map) != Some(&self.tau.map) {
            return Err(Error::Solver("sample changed combinatorial invariant".into()));
        }
        let v = coords(c.eta.as_ref().unwrap(), &self.re_norms);
        Ok((v, c))
    }

    fn residual(&mut self, eps: &[f64], target: &[f64]) -> Result<Vec<f64>> {
        let (v, _) = self.eval(eps)?;
        Ok(v.iter().zip(target).map(|(a, b)| a - b).collect())
    }

    fn jacobian(&mut self, eps: &[f64], target: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = eps.len();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let h = 1e-6 * (1.0 + eps[j].abs());
            let mut ep = eps.to_vec();
            let mut em = eps.to_vec();
            ep[j] += h;
            em[j] -= h;
            let col = match (self.residual(&ep, target), self.residual(&em, target)) {
                (Ok(fp), Ok(fm)) => fp
                    .iter()
                    .zip(fm.iter())
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect(),
                (Ok(fp), Err(_)) => {
                    let f0 = self.residual(eps, target)?;
                    fp.iter().zip(f0.iter()).map(|(a, b)| (a - b) / h).collect()
                }
                (Err(_), Ok(fm)) => {
                    let f0 = self.residual(eps, target)?;
                    f0.iter().zip(fm.iter()).map(|(a, b)| (a - b) / h).collect()
                }
                (Err(e), Err(_)) => return Err(e),
            };
            cols.push(col);
        }
        // row-major J[i][j]
        let mut jmat = vec![vec![0.0; n]; n];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                jmat[i][j] = col[i];
            }
        }
        Ok(jmat)
    }

    /// Damped Newton toward `target` in slot coordinates.
    fn newton(
        &mut self,
        eps0: &[f64],
        target: &[f64],
        tol: f64,
        max_iters: usize,
    ) -> Result<(Vec<f64>, usize)> {
        let mut eps = eps0.to_vec();
        let mut f = self.residual(&eps, target)?;
        let mut iters = 0usize;
        let mut jac: Option<Vec<Vec<f64>>> = None;
        let mut jac_age = 0usize;
        while inf_norm(&f) > tol {
            if iters >= max_iters {
                return Err(Error::NonConvergence(format!(
                    "newton stalled at mismatch {:.3e}",
                    inf_norm(&f)
                )));
            }
            if jac.is_none() || jac_age >= 3 {
                jac = Some(self.jacobian(&eps, target)?);
                jac_age = 0;
            }
            let j = jac.as_ref().unwrap();
            let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
            let d = solve_linear(j.clone(), rhs)
                .ok_or_else(|| Error::Solver("singular slot Jacobian".into()))?;
            let mut lambda = 1.0f64;
            let mut accepted = false;
            for _ in 0..8 {
                let trial: Vec<f64> = eps.iter().zip(&d).map(|(e, s)| e + lambda * s).collect();
                match self.residual(&trial, target) {
                    Ok(ft) if inf_norm(&ft) <= (1.0 - 1e-4 * lambda) * inf_norm(&f) => {
                        eps = trial;
                        f = ft;
                        accepted = true;
                        break;
                    }
                    _ => lambda *= 0.5,
                }
            }
            iters += 1;
            jac_age += 1;
            if !accepted {
                if jac_age > 1 {
                    jac = None; // refresh the Jacobian and retry once
                    continue;
                }
                return Err(Error::NonConvergence(format!(
                    "line search failed at mismatch {:.3e}",
                    inf_norm(&f)
                )));
            }
        }
        Ok((eps, iters))
    }
}

/// Realizes (τ, η): returns ε with `classify(ε).tau = τ` exactly and the
/// slot mismatch within `opts.tol`.
pub fn realize(
    tau: &Involution,
    eta: &AnalyticInvariant,
    opts: &RealizeOptions,
    cfg: &Config,
) -> Result<(PolyVF, ConvergenceReport)> {
    if !is_valid_involution(tau)? {
        return Err(Error::Validation("invalid combinatorial invariant".into()));
    }
    let sig = signature(tau)?;
    check_eta(&sig, eta)?;

    let re_norms = re_norms_of(eta);
    let mut ev = Evaluator {
        tau,
        cfg: cfg.clone(),
        re_norms,
        calls: 0,
    };

    // Seed inside the stratum, trying a few shapes.
    let shapes = [
        (1.0, 0.15),
        (1.3, 0.30),
        (0.8, 0.05),
        (1.6, 0.45),
        (0.6, 0.22),
    ];
    let mut start: Option<(Vec<f64>, AnalyticInvariant)> = None;
    for (hs, os) in shapes {
        let hs = hs * (1.0 + opts.seed_jitter);
        let os = os * (1.0 + 0.5 * opts.seed_jitter);
        let seed = match seed_with_shape(tau, eta, hs, os) {
            Ok(s) => s,
            Err(_) => continue,
        };
        // Align the overall time scale before checking τ: travel times
        // scale as r^{-k} under the root scaling r.
        let aligned = match classify(&seed, cfg) {
            Ok(c0) if c0.generic => {
                let g0 = eta_magnitude(c0.eta.as_ref().unwrap());
                let g1 = eta_magnitude(eta);
                let r = (g0 / g1).powf(1.0 / tau.k as f64);
                match normalize_scale(&seed, r) {
                    Ok(s) => s,
                    Err(_) => continue,
                }
            }
            _ => continue,
        };
        ev.calls += 1;
        if let Ok(c1) = classify(&aligned, cfg) {
            ev.calls += 1;
            if c1.generic && c1.tau.as_ref().map(|t| &t.map) == Some(&tau.map) {
                start = Some((aligned.eps.clone(), c1.eta.unwrap()));
                break;
            }
        }
    }
    let (mut eps, eta_start) = start.ok_or_else(|| {
        Error::Solver("no seed configuration landed inside the requested stratum".into())
    })?;

    let target_final = coords(eta, &ev.re_norms);
    let start_coords = coords(&eta_start, &ev.re_norms);

    let mut sigma = 0.0f64;
    let mut step = 1.0f64;
    let mut halvings = 0usize;
    let mut continuation_steps = 0usize;
    let mut newton_iterations = 0usize;
    let inner_tol = 0.5 * opts.tol;

    while sigma < 1.0 {
        let sigma_try = (sigma + step).min(1.0);
        let target: Vec<f64> = start_coords
            .iter()
            .zip(&target_final)
            .map(|(s, t)| (1.0 - sigma_try) * s + sigma_try * t)
            .collect();
        match ev.newton(&eps, &target, inner_tol, opts.max_newton_iters) {
            Ok((e, it)) => {
                eps = e;
                newton_iterations += it;
                continuation_steps += 1;
                sigma = sigma_try;
                step = (step * 2.0).min(1.0 - sigma + 1e-16);
            }
            Err(_) => {
                halvings += 1;
                step *= 0.5;
                if halvings > opts.max_continuation_halvings || step < 1e-5 {
                    return Err(Error::Solver(format!(
                        "continuation step underflow near σ = {sigma:.4} (stratum boundary); \
                         last stable iterate eps = {eps:?}"
                    )));
                }
            }
        }
    }

    // Final verification against the caller's tolerance and configuration.
    let vf = PolyVF::new(eps.clone())?;
    let c = classify(&vf, cfg)?;
    ev.calls += 1;
    if !c.generic || c.tau.as_ref().map(|t| &t.map) != Some(&tau.map) {
        return Err(Error::Solver(
            "solver terminated outside the requested stratum".into(),
        ));
    }
    let got = coords(c.eta.as_ref().unwrap(), &ev.re_norms);
    let mismatch = got
        .iter()
        .zip(&target_final)
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    if mismatch > opts.tol {
        return Err(Error::NonConvergence(format!(
            "final mismatch {mismatch:.3e} exceeds tolerance {:.3e}",
            opts.tol
        )));
    }
    let center: f64 = 0.0; // coefficient of z^k is identically zero by construction
    Ok((
        vf,
        ConvergenceReport {
            continuation_steps,
            newton_iterations,
            classify_calls: ev.calls,
            final_mismatch: mismatch,
            gauge_center_residual: center,
        },
    ))
}

fn eta_magnitude(eta: &AnalyticInvariant) -> f64 {
    geometric_mean(
        eta.kappas
            .iter()
            .copied()
            .chain(eta.widths.iter().copied())
            .chain(eta.times.iter().map(|t| t.norm())),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn seed_identity_k2() {
        let tau = Involution::new(vec![0, 1, 2]);
        let eta = AnalyticInvariant {
            kappas: vec![PI, PI],
            widths: vec![],
            times: vec![],
        };
        let seed = seed_configuration(&tau, &eta).unwrap();
        assert_eq!(seed.k, 2);
        // three real roots, recentered: ε describes z^3 + ε1 z + ε0 with 3 real roots
        let disc = -4.0 * seed.eps[1].powi(3) - 27.0 * seed.eps[0].powi(2);
        assert!(disc > 0.0, "three real roots expected, disc = {disc}");
    }

    #[test]
    fn seed_one_pair_k2() {
        let tau = Involution::new(vec![0, 2, 1]);
        let eta = AnalyticInvariant {
            kappas: vec![1.0],
            widths: vec![1.0],
            times: vec![],
        };
        let seed = seed_configuration(&tau, &eta).unwrap();
        let disc = -4.0 * seed.eps[1].powi(3) - 27.0 * seed.eps[0].powi(2);
        assert!(disc < 0.0, "one real root expected, disc = {disc}");
    }

    #[test]
    fn realize_worked_cubic() {
        // τ = id, κ = (π, π) is realized by z^3 - z.
        let tau = Involution::new(vec![0, 1, 2]);
        let eta = AnalyticInvariant {
            kappas: vec![PI, PI],
            widths: vec![],
            times: vec![],
        };
        let (vf, report) = realize(&tau, &eta, &RealizeOptions::default(), &Config::default())
            .unwrap();
        assert!(vf.eps[0].abs() < 1e-5, "eps0 = {}", vf.eps[0]);
        assert!((vf.eps[1] + 1.0).abs() < 1e-5, "eps1 = {}", vf.eps[1]);
        assert!(report.final_mismatch <= 1e-6);
    }

    #[test]
    fn dimension_mismatch_is_validation_error() {
        let tau = Involution::new(vec![0, 1, 2]);
        let eta = AnalyticInvariant {
            kappas: vec![1.0],
            widths: vec![],
            times: vec![],
        };
        assert!(matches!(
            realize(&tau, &eta, &RealizeOptions::default(), &Config::default()),
            Err(Error::Validation(_))
        ));
    }
}
