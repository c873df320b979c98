//! Explicit bifurcation loci for degrees 3 and 4 (k = 2, 3) and the
//! parameter-space stratum scan.

use serde::{Deserialize, Serialize};

use crate::classification::{classify_combinatorial, NonGenericReason};
use crate::combinatorics::involution_to_dyck;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::field::PolyVF;

/// Double-double arithmetic for the loci polynomials: the cusp check needs
/// residuals far below the plain f64 noise floor of a degree-6 cancellation,
/// so both the products and the sums are compensated.
mod dd {
    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd {
            hi: p,
            lo: a.mul_add(b, -p),
        }
    }

    impl Dd {
        pub fn from(a: f64) -> Dd {
            Dd { hi: a, lo: 0.0 }
        }

        pub fn add(self, o: Dd) -> Dd {
            let s = two_sum(self.hi, o.hi);
            let lo = s.lo + self.lo + o.lo;
            let r = two_sum(s.hi, lo);
            Dd { hi: r.hi, lo: r.lo }
        }

        pub fn mul_f64(self, b: f64) -> Dd {
            let p = two_prod(self.hi, b);
            let lo = p.lo + self.lo * b;
            let r = two_sum(p.hi, lo);
            Dd { hi: r.hi, lo: r.lo }
        }

        pub fn value(self) -> f64 {
            self.hi + self.lo
        }
    }

    /// `a^n` as a double-double, n ≥ 1.
    pub fn powi(a: f64, n: usize) -> Dd {
        let mut acc = Dd::from(a);
        for _ in 1..n {
            acc = acc.mul_f64(a);
        }
        acc
    }

    /// Compensated `Σ c_i · Π a_{ij}`.
    pub fn poly_sum(terms: &[(f64, &[(f64, usize)])]) -> f64 {
        let mut acc = Dd::from(0.0);
        for &(coeff, factors) in terms {
            let mut t = Dd::from(coeff);
            for &(base, exp) in factors {
                if exp > 0 {
                    let p = powi(base, exp);
                    let hi = t.mul_f64(p.hi);
                    let lo = t.mul_f64(p.lo);
                    t = hi.add(lo);
                }
            }
            acc = acc.add(t);
        }
        acc.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicLoci {
    /// Discriminant of `z^3 + ε_1 z + ε_0`.
    pub delta3: f64,
    /// On the homoclinic ray `ε_0 = 0`, `ε_1 > 0` (symmetric complex
    /// centers).
    pub on_homoclinic_ray: bool,
}

const RAY_TOL: f64 = 1e-9;

/// Bifurcation indicators for k = 2.
pub fn cubic_loci(eps0: f64, eps1: f64) -> CubicLoci {
    CubicLoci {
        delta3: dd::poly_sum(&[(-4.0, &[(eps1, 3)]), (-27.0, &[(eps0, 2)])]),
        on_homoclinic_ray: eps0.abs() <= RAY_TOL && eps1 > 0.0,
    }
}

/// Discriminant of `z^4 + ε_2 z^2 + ε_1 z + ε_0`.
pub fn quartic_discriminant(eps: [f64; 3]) -> f64 {
    let [e0, e1, e2] = eps;
    dd::poly_sum(&[
        (256.0, &[(e0, 3)]),
        (-27.0, &[(e1, 4)]),
        (144.0, &[(e0, 1), (e1, 2), (e2, 1)]),
        (-128.0, &[(e0, 2), (e2, 2)]),
        (-4.0, &[(e1, 2), (e2, 3)]),
        (16.0, &[(e0, 1), (e2, 4)]),
    ])
}

/// The surface carrying pairs of symmetric homoclinic loops around complex
/// centers (for `ε_1 ≠ 0`, in the region with non-real points).
pub fn quartic_homoclinic_surface(eps: [f64; 3]) -> f64 {
    let [e0, e1, e2] = eps;
    dd::poly_sum(&[
        (64.0, &[(e0, 3)]),
        (-48.0, &[(e0, 2), (e2, 2)]),
        (-8.0, &[(e1, 2), (e2, 3)]),
        (12.0, &[(e0, 1), (e2, 4)]),
        (-1.0, &[(e2, 6)]),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarticIntersections {
    /// On `4ε_0 - 5ε_2² = ε_1² - 8ε_2³ = 0`: real parabolic point on the
    /// homoclinic surface.
    pub real_parabolic_curve: bool,
    /// On `27ε_1² + 8ε_2³ = 12ε_0 + ε_2² = 0`: triple real parabolic point.
    pub triple_parabolic: bool,
    /// On `ε_1 = 0`, `4ε_0 = ε_2²`, `ε_2 > 0`: pair of imaginary parabolic
    /// points, cuspidal edge of the homoclinic surface.
    pub cusp_curve: bool,
}

/// Membership flags for the curves where the two k = 3 bifurcation surfaces
/// intersect, within `tol` relative to the coefficient scale.
pub fn quartic_intersections(eps: [f64; 3], tol: f64) -> QuarticIntersections {
    let [e0, e1, e2] = eps;
    let s = 1.0 + eps.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let near = |v: f64, order: i32| v.abs() <= tol * s.powi(order);
    QuarticIntersections {
        real_parabolic_curve: near(4.0 * e0 - 5.0 * e2 * e2, 2) && near(e1 * e1 - 8.0 * e2.powi(3), 3),
        triple_parabolic: near(27.0 * e1 * e1 + 8.0 * e2.powi(3), 3) && near(12.0 * e0 + e2 * e2, 2),
        cusp_curve: near(e1, 1) && near(4.0 * e0 - e2 * e2, 2) && e2 > 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspSample {
    pub eps1: f64,
    pub eta2: f64,
    /// `|A(1, ε_1, 2 + η_2) + 64(ε_1² + η_2³)| / max(ε_1², |η_2|³)`.
    pub residual_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CuspFitReport {
    pub samples: Vec<CuspSample>,
    /// Fitted slope of `log residual_ratio` against `log max(|ε_1|^(1/3), |η_2|^(1/2))`.
    pub slope: f64,
}

/// Verifies the cusp expansion of the homoclinic surface at `(1, 0, 2)`:
/// the residual ratio must vanish as the sample radius shrinks.
///
/// The leading term of `A|_{ε_0=1}` in `η_2 = ε_2 - 2` is
/// `-64(ε_1² + η_2³)`: the surface satisfies `ε_1² ≈ -η_2³` near the
/// cuspidal edge (η_2 < 0).
pub fn cusp_expansion_check(samples: &[(f64, f64)]) -> CuspFitReport {
    let mut out = Vec::with_capacity(samples.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(eps1, eta2) in samples {
        let a = quartic_homoclinic_surface([1.0, eps1, 2.0 + eta2]);
        let lead = -64.0 * (eps1 * eps1 + eta2.powi(3));
        let denom = (eps1 * eps1).max(eta2.abs().powi(3)).max(1e-300);
        let ratio = (a - lead).abs() / denom;
        out.push(CuspSample {
            eps1,
            eta2,
            residual_ratio: ratio,
        });
        let rho = eps1.abs().powf(1.0 / 3.0).max(eta2.abs().sqrt());
        if ratio > 0.0 && rho > 0.0 {
            xs.push(rho.ln());
            ys.push(ratio.ln());
        }
    }
    let slope = if xs.len() >= 2 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    CuspFitReport { samples: out, slope }
}

/// One labeled grid point of a stratum scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StratumCell {
    pub eps: Vec<f64>,
    /// Stratum id (UDF path string) or `bifurcation:<type>`.
    pub label: String,
    /// Genericity margin of the classified field.
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub enum ScanGrid {
    /// Rectangular grid on the (ε_0, ε_1) plane for k = 2.
    Plane {
        lo: [f64; 2],
        hi: [f64; 2],
        nx: usize,
        ny: usize,
    },
    /// Latitude-longitude grid on the unit ε-sphere for k = 3.
    Sphere { n_theta: usize, n_phi: usize },
}

/// Labels a classified field for the scan.
pub fn scan_label(vf: &PolyVF, cfg: &Config) -> (String, f64) {
    match classify_combinatorial(vf, cfg) {
        Ok(c) => {
            let margin = c.diagnostics.genericity_margin;
            if c.generic {
                if margin < cfg.margin_threshold {
                    let sep_m = c.diagnostics.root_separation;
                    let eig_m = c.diagnostics.min_re_eig_complex.unwrap_or(f64::INFINITY);
                    let label = if sep_m < eig_m {
                        "bifurcation:parabolic-real"
                    } else {
                        "bifurcation:homoclinic-asymmetric-pair"
                    };
                    (label.to_string(), margin)
                } else {
                    let tau = c.tau.as_ref().unwrap();
                    let udf = involution_to_dyck(tau)
                        .map(|p| p.to_string())
                        .unwrap_or_else(|_| "bifurcation:compound".to_string());
                    (udf, margin)
                }
            } else {
                let label = match c.diagnostics.non_generic_reason {
                    Some(NonGenericReason::ParabolicReal) => "bifurcation:parabolic-real",
                    Some(NonGenericReason::ParabolicComplexPair) => {
                        "bifurcation:parabolic-complex-pair"
                    }
                    Some(NonGenericReason::ComplexCenterCandidate)
                    | Some(NonGenericReason::AsymmetricLoopPair) => {
                        "bifurcation:homoclinic-asymmetric-pair"
                    }
                    _ => "bifurcation:compound",
                };
                (label.to_string(), margin)
            }
        }
        Err(_) => ("bifurcation:compound".to_string(), 0.0),
    }
}

/// Classifies every grid cell into a stratum label. Deterministic: cells
/// are processed and returned in index order.
pub fn stratum_scan(k: usize, grid: &ScanGrid, cfg: &Config) -> Result<Vec<StratumCell>> {
    match (k, grid) {
        (2, ScanGrid::Plane { lo, hi, nx, ny }) => {
            let mut out = Vec::with_capacity(nx * ny);
            for iy in 0..*ny {
                for ix in 0..*nx {
                    let e0 = lo[0] + (hi[0] - lo[0]) * (ix as f64 + 0.5) / *nx as f64;
                    let e1 = lo[1] + (hi[1] - lo[1]) * (iy as f64 + 0.5) / *ny as f64;
                    let vf = PolyVF::new(vec![e0, e1])?;
                    let (label, margin) = scan_label(&vf, cfg);
                    out.push(StratumCell {
                        eps: vec![e0, e1],
                        label,
                        margin,
                    });
                }
            }
            Ok(out)
        }
        (3, ScanGrid::Sphere { n_theta, n_phi }) => {
            let mut out = Vec::with_capacity(n_theta * n_phi);
            for it in 0..*n_theta {
                let theta = std::f64::consts::PI * (it as f64 + 0.5) / *n_theta as f64;
                for ip in 0..*n_phi {
                    let phi = 2.0 * std::f64::consts::PI * (ip as f64 + 0.5) / *n_phi as f64;
                    let e0 = theta.sin() * phi.cos();
                    let e1 = theta.sin() * phi.sin();
                    let e2 = theta.cos();
                    let vf = PolyVF::new(vec![e0, e1, e2])?;
                    let (label, margin) = scan_label(&vf, cfg);
                    out.push(StratumCell {
                        eps: vec![e0, e1, e2],
                        label,
                        margin,
                    });
                }
            }
            Ok(out)
        }
        _ => Err(Error::Domain(format!(
            "stratum_scan supports k = 2 on a plane grid and k = 3 on a sphere grid, got k = {k}"
        ))),
    }
}

/// Representative of the scaling orbit of ε on the Euclidean unit sphere;
/// the orbit `ε_j ↦ r^{k+1-j} ε_j` crosses the sphere exactly once.
pub fn sphere_representative(vf: &PolyVF) -> Result<PolyVF> {
    let norm2: f64 = vf.eps.iter().map(|e| e * e).sum();
    if norm2 == 0.0 {
        return Err(Error::Domain("zero parameter has no sphere representative".into()));
    }
    let k = vf.k;
    let g = |r: f64| -> f64 {
        vf.eps
            .iter()
            .enumerate()
            .map(|(j, &e)| (e * r.powi((k + 1 - j) as i32)).powi(2))
            .sum::<f64>()
            - 1.0
    };
    let mut lo = 1e-6f64;
    let mut hi = 1e6f64;
    while g(lo) > 0.0 {
        lo *= 0.5;
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    crate::field::normalize_scale(vf, 0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_loci_examples() {
        assert_eq!(cubic_loci(0.0, 0.0).delta3, 0.0);
        let l = cubic_loci(0.0, 1.0);
        assert_eq!(l.delta3, -4.0);
        assert!(l.on_homoclinic_ray);
        let l = cubic_loci(1.0, -3.0);
        assert_eq!(l.delta3, 81.0);
        assert!(!l.on_homoclinic_ray);
    }

    #[test]
    fn quartic_discriminant_examples() {
        assert_eq!(quartic_discriminant([0.0, 0.0, 0.0]), 0.0);
        // on ε_1 = 0, 4ε_0 - ε_2² = 0: Δ = 16 ε_0 (4ε_0 - ε_2²)² = 0
        for t in [0.5f64, 1.0, 2.0, -1.5] {
            let e2 = t;
            let e0 = e2 * e2 / 4.0;
            let d = quartic_discriminant([e0, 0.0, e2]);
            assert!(d.abs() < 1e-12 * (1.0 + e2.abs()).powi(6), "Δ = {d}");
        }
    }

    #[test]
    fn homoclinic_surface_examples() {
        assert_eq!(quartic_homoclinic_surface([1.0, 0.0, 2.0]), 0.0);
        // parameterized by the imaginary-eigenvalue point: a free, ε_2 free
        for (a, e2) in [(0.5, 1.0), (-0.3, 2.0), (0.8, -0.5)] {
            let e1 = 8.0 * a * a * a;
            let e0 = 2.0 * a * a * e2 + e2 * e2 / 4.0;
            let s = quartic_homoclinic_surface([e0, e1, e2]);
            assert!(
                s.abs() <= 1e-12 * (1.0 + e0.abs() + e1.abs() + e2.abs()).powi(6),
                "S = {s}"
            );
        }
    }

    #[test]
    fn intersection_flags() {
        // real parabolic curve: ε_0 = 5t²/4, ε_1² = 8t³, ε_2 = t
        for t in [0.4f64, 1.0, 1.7] {
            let eps = [1.25 * t * t, (8.0 * t.powi(3)).sqrt(), t];
            let f = quartic_intersections(eps, 1e-9);
            assert!(f.real_parabolic_curve);
            assert!(
                quartic_discriminant(eps).abs() < 1e-10 * (1.0 + t).powi(6),
                "the curve lies on Δ = 0"
            );
            assert!(
                quartic_homoclinic_surface(eps).abs() < 1e-10 * (1.0 + t).powi(6),
                "the curve lies on the homoclinic surface"
            );
        }
        // triple parabolic: P = (z - s)³(z + 3s)
        for s in [0.5f64, 1.0] {
            let eps = [-3.0 * s.powi(4), 8.0 * s.powi(3), -6.0 * s * s];
            let f = quartic_intersections(eps, 1e-9);
            assert!(f.triple_parabolic);
        }
        let f = quartic_intersections([1.0, 0.0, 2.0], 1e-9);
        assert!(f.cusp_curve);
    }

    #[test]
    fn cusp_expansion_orders() {
        // ε_1 = t³, η_2 = t²: the residual ratio must be ≤ 10 t.
        for t in [1e-2f64, 1e-3] {
            let r = cusp_expansion_check(&[(t.powi(3), t * t)]);
            assert!(
                r.samples[0].residual_ratio <= 10.0 * t,
                "t = {t}: ratio = {}",
                r.samples[0].residual_ratio
            );
        }
        // ε_1 = 0: A ≈ -64 η_2³ = -64 t^6 in magnitude
        let t: f64 = 1e-2;
        let a = quartic_homoclinic_surface([1.0, 0.0, 2.0 + t * t]);
        assert!((a + 64.0 * t.powi(6)).abs() < 1e-2 * 64.0 * t.powi(6), "A = {a}");
        // A is even in ε_1, exactly
        let a_plus = quartic_homoclinic_surface([1.3, 0.7, 2.1]);
        let a_minus = quartic_homoclinic_surface([1.3, -0.7, 2.1]);
        assert_eq!(a_plus, a_minus);
    }

    #[test]
    fn sphere_representative_is_on_sphere() {
        let vf = PolyVF::new(vec![0.4, -1.2, 0.3]).unwrap();
        let rep = sphere_representative(&vf).unwrap();
        let n2: f64 = rep.eps.iter().map(|e| e * e).sum();
        assert!((n2 - 1.0).abs() < 1e-10);
    }
}
