use num_complex::Complex64;
use revfield::classification::{classify, AnalyticInvariant};
use revfield::combinatorics::Involution;
use revfield::field::roots::Polynomial;
use revfield::field::PolyVF;
use revfield::realization::{realize, RealizeOptions};
use revfield::Config;
use std::time::Instant;

// Independent oracle: flow time along a trajectory of e^{iβ} v crossing the
// zone, plus simple ray tails.
fn oracle_tail(poly: &Polynomial, z: Complex64) -> Complex64 {
    // Simpson panels from z out to 1e5·|z| along the ray + analytic leading tail.
    let n_half = 20000usize;
    let r0 = z.norm();
    let r1 = 1e5 * r0;
    let dir = z / r0;
    let f = |r: f64| -> Complex64 {
        let w = dir * r;
        dir / (Complex64::new(0.0, 1.0) * poly.eval(w))
    };
    let mut acc = Complex64::new(0.0, 0.0);
    // log-spaced Simpson
    let lr0 = r0.ln();
    let lr1 = r1.ln();
    let m = 2 * n_half;
    let h = (lr1 - lr0) / m as f64;
    for i in 0..=m {
        let r = (lr0 + h * i as f64).exp();
        let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(r) * r; // dr = r d(log r)
    }
    acc *= h / 3.0;
    let k = poly.degree() - 1;
    let zfar = dir * r1;
    let analytic = (zfar.powu(k as u32) * Complex64::new(0.0, 1.0) * k as f64).inv();
    -(acc + analytic) // from infinity to z
}

fn rotated_flow_time(
    poly: &Polynomial,
    beta: f64,
    start: Complex64,
    roots: &[Complex64],
    r_escape: f64,
) -> Option<(Complex64, Complex64)> {
    // RK4 on dw/ds = e^{iβ} iP/|P|, time dT = e^{iβ}/|P| ds
    let rot = Complex64::from_polar(1.0, beta);
    let f = |w: Complex64| -> Complex64 {
        let p = poly.eval(w);
        rot * Complex64::new(0.0, 1.0) * p / p.norm()
    };
    let mut w = start;
    let mut t = Complex64::new(0.0, 0.0);
    let mut arc = 0.0;
    while arc < 300.0 {
        let dmin = roots.iter().map(|r| (w - r).norm()).fold(f64::INFINITY, f64::min);
        if dmin < 1e-3 {
            return None; // ran into a point; discard this β
        }
        let h = 0.004 * (1.0 + w.norm()).min(10.0 * dmin).min(5.0);
        let k1 = f(w);
        let k2 = f(w + 0.5 * h * k1);
        let k3 = f(w + 0.5 * h * k2);
        let k4 = f(w + h * k3);
        let dw = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        // complex time increment dT = dw/(iP): trapezoid on the step
        let p0 = (Complex64::new(0.0, 1.0) * poly.eval(w)).inv();
        let p1 = (Complex64::new(0.0, 1.0) * poly.eval(w + dw)).inv();
        t += dw * 0.5 * (p0 + p1);
        w += dw;
        arc += h;
        if w.norm() > r_escape {
            return Some((w, t));
        }
    }
    None
}

#[test]
fn transversal_time_beta_oracle() {
    // k=3 bi-extremal-ish field with one strictly-upper zone: z^4 + eps
    let cfg = Config::default();
    for eps in [vec![0.3, 0.8, 1.2], vec![1.0, 0.4, 0.9], vec![0.6, 1.1, 0.2]] {
        let vf = PolyVF::new(eps.clone()).unwrap();
        let c = classify(&vf, &cfg).unwrap();
        if !c.generic {
            continue;
        }
        let tau = c.tau.clone().unwrap();
        let eta = c.eta.clone().unwrap();
        if eta.times.is_empty() {
            continue;
        }
        // first upper zone: smallest j with tau(j) > j and both points upper
        let k = vf.k;
        let poly = vf.poly();
        let pts = revfield::field::singular_points(&vf, &cfg).unwrap();
        let roots: Vec<Complex64> = pts.iter().map(|p| p.location).collect();
        let r_inf = 10.0 * (1.0 + roots.iter().map(|z| z.norm()).fold(0.0f64, f64::max));
        let mut checked = 0;
        let mut slot = 0usize;
        for j in 0..=k {
            let tj = tau.map[j];
            if tj <= j { continue; }
            // is it strictly upper? probe outcome recorded in diagnostics
            let rec = &c.diagnostics.probes[j];
            let (alpha, omega) = match rec.outcome {
                revfield::classification::ProbeOutcome::Pair { alpha, omega } => (alpha, omega),
                _ => continue,
            };
            if !(pts[alpha].location.im > 0.0 && pts[omega].location.im > 0.0) {
                continue;
            }
            let t_impl = eta.times[slot];
            slot += 1;
            let start = Complex64::from_polar(r_inf, std::f64::consts::PI * j as f64 / k as f64);
            let want_exit = std::f64::consts::PI * tj as f64 / k as f64;
            let mut got = Vec::new();
            for ib in 1..40 {
                let beta = std::f64::consts::PI * ib as f64 / 40.0;
                if let Some((w_exit, t_int)) = rotated_flow_time(&poly, beta, start, &roots, 1.3 * r_inf) {
                    let exit_angle = w_exit.arg();
                    if (exit_angle - want_exit).abs() < 0.5 * std::f64::consts::PI / k as f64 {
                        let total = oracle_tail(&poly, start) + t_int - oracle_tail(&poly, w_exit);
                        let total = if total.im >= 0.0 { total } else { -total };
                        got.push(total);
                    }
                }
            }
            assert!(got.len() >= 3, "too few admissible β for zone ({j},{tj}): {}", got.len());
            for g in &got {
                assert!(
                    (g - t_impl).norm() < 2e-4 * (1.0 + t_impl.norm()),
                    "eps={eps:?} zone ({j},{tj}): oracle {g} vs impl {t_impl}"
                );
            }
            // oracle self-consistency across β
            for w in got.windows(2) {
                assert!((w[0] - w[1]).norm() < 2e-4);
            }
            checked += 1;
            println!("eps={:?} zone ({},{}) impl={} oracle0={} n_beta={}", eps, j, tj, t_impl, got[0], got.len());
        }
        assert!(checked >= 1);
    }
}

#[test]
fn realize_harder_strata_timing() {
    let cfg = Config::default();
    // UUDD with a times slot
    let tau = Involution::new(vec![3, 2, 1, 0]);
    let eta = AnalyticInvariant {
        kappas: vec![],
        widths: vec![0.8],
        times: vec![Complex64::new(0.3, 1.1)],
    };
    let t0 = Instant::now();
    let (vf, rep) = realize(&tau, &eta, &RealizeOptions::default(), &cfg).unwrap();
    println!("UUDD realize: eps={:?} in {:?} ({} classifies, mismatch {:.2e})",
             vf.eps, t0.elapsed(), rep.classify_calls, rep.final_mismatch);
    let c = classify(&vf, &cfg).unwrap();
    let eta_got = c.eta.unwrap();
    assert!((eta_got.widths[0] - 0.8).abs() < 1e-5);
    assert!((eta_got.times[0] - Complex64::new(0.3, 1.1)).norm() < 1e-5);

    // roundtrip timing for a k=4 field
    let vf4 = PolyVF::new(vec![1.0, 0.5, -0.5, 0.3]).unwrap();
    let c4 = classify(&vf4, &cfg).unwrap();
    let t0 = Instant::now();
    let (back, rep4) = realize(
        c4.tau.as_ref().unwrap(),
        c4.eta.as_ref().unwrap(),
        &RealizeOptions::default(),
        &cfg,
    )
    .unwrap();
    println!("k=4 roundtrip: {:?} in {:?} ({} classifies)", back.eps, t0.elapsed(), rep4.classify_calls);
    for (a, b) in back.eps.iter().zip(vf4.eps.iter()) {
        assert!((a - b).abs() < 1e-5 * (1.0 + b.abs()), "{a} vs {b}");
    }
}
