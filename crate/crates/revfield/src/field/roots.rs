use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-coefficient polynomial, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub c: Vec<f64>,
}

impl Polynomial {
    pub fn new(c: Vec<f64>) -> Self {
        Polynomial { c }
    }

    pub fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.c.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.c.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Value and derivative in one pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.c.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.c.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        let c = self
            .c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &v)| j as f64 * v)
            .collect();
        Polynomial::new(c)
    }
}

/// All roots of a monic real polynomial by simultaneous Aberth–Ehrlich
/// iteration, polished with Newton steps.
///
/// Initial guesses sit on a circle at the Cauchy bound with an angular
/// offset breaking symmetry; for the degrees used here (≤ 20) this seeding
/// converges as reliably as eigenvalue-based seeds.
pub fn roots_monic(poly: &Polynomial) -> Result<Vec<Complex64>> {
    let n = poly.degree();
    assert!(
        (poly.c[n] - 1.0).abs() < 1e-12,
        "roots_monic expects a monic polynomial"
    );
    if n == 0 {
        return Ok(Vec::new());
    }

    let max_c = poly.c[..n].iter().fold(0.0f64, |m, &c| m.max(c.abs()));
    let radius = 1.0 + max_c;
    let coeff_scale = max_c.max(1.0);

    let mut z: Vec<Complex64> = (0..n)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64 + 0.43;
            Complex64::from_polar(radius, th)
        })
        .collect();

    let target = |zi: Complex64, pv: Complex64| -> bool {
        pv.norm() <= 1e-13 * coeff_scale * (1.0 + zi.norm()).powi(n as i32)
    };

    let mut done = false;
    for _ in 0..300 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = poly.eval_with_derivative(z[i]);
            if target(z[i], p) {
                continue;
            }
            let newton = if dp.norm() > 0.0 {
                p / dp
            } else {
                Complex64::new(1e-8, 1e-8)
            };
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 1e-300 {
                        s += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * s;
            let w = if denom.norm() > 1e-14 { newton / denom } else { newton };
            z[i] -= w;
            moved = moved.max(w.norm());
        }
        if moved < 1e-15 * radius {
            done = true;
            break;
        }
        if z.iter().all(|&zi| target(zi, poly.eval(zi))) {
            done = true;
            break;
        }
    }

    // Newton polish; near multiple roots Newton stalls at the cluster, which
    // is fine because the residual target is still met there.
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = poly.eval_with_derivative(*zi);
            if dp.norm() > 0.0 {
                let step = p / dp;
                if step.norm() < 0.5 * (1.0 + zi.norm()) {
                    *zi -= step;
                }
            }
        }
    }

    let loose = |zi: Complex64, pv: Complex64| -> bool {
        pv.norm() <= 1e-11 * coeff_scale * (1.0 + zi.norm()).powi(n as i32)
    };
    if !done && !z.iter().all(|&zi| loose(zi, poly.eval(zi))) {
        let worst = z
            .iter()
            .map(|&zi| poly.eval(zi).norm())
            .fold(0.0f64, f64::max);
        return Err(Error::Numeric(format!(
            "root refinement did not converge (worst residual {worst:.3e} for degree {n})"
        )));
    }

    z.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_roots() {
        // z^3 - z
        let p = Polynomial::new(vec![0.0, -1.0, 0.0, 1.0]);
        let r = roots_monic(&p).unwrap();
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] + 1.0).abs() < 1e-12);
        assert!(re[1].abs() < 1e-12);
        assert!((re[2] - 1.0).abs() < 1e-12);
        for z in r {
            assert!(z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn complex_pair() {
        // z^3 + z = z (z^2 + 1)
        let p = Polynomial::new(vec![0.0, 1.0, 0.0, 1.0]);
        let r = roots_monic(&p).unwrap();
        let mut count_imag = 0;
        for z in &r {
            if z.im.abs() > 0.5 {
                count_imag += 1;
                assert!((z.im.abs() - 1.0).abs() < 1e-12);
                assert!(z.re.abs() < 1e-12);
            }
        }
        assert_eq!(count_imag, 2);
    }

    #[test]
    fn near_double_root_cluster() {
        // (z - 1)^2 (z + 2), expanded: z^3 - 3 z + 2
        let p = Polynomial::new(vec![2.0, -3.0, 0.0, 1.0]);
        let r = roots_monic(&p).unwrap();
        let near_one: Vec<_> = r.iter().filter(|z| (*z - 1.0).norm() < 1e-4).collect();
        assert_eq!(near_one.len(), 2);
    }

    #[test]
    fn wilkinson_like_degree_8() {
        let roots: Vec<f64> = (1..=8).map(|i| i as f64 * 0.3 - 1.4).collect();
        let mut c = vec![0.0; 9];
        c[0] = 1.0;
        let mut deg = 0usize;
        for &r in &roots {
            // multiply by (z - r)
            for j in (1..=deg + 1).rev() {
                c[j] = c[j - 1] - r * c[j];
            }
            c[0] *= -r;
            deg += 1;
        }
        let p = Polynomial::new(c);
        let mut found = roots_monic(&p).unwrap();
        found.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (f, r) in found.iter().zip(roots.iter()) {
            assert!((f - r).norm() < 1e-9, "{f} vs {r}");
        }
    }
}
