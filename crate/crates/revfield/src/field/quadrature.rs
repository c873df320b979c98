//! Adaptive path quadrature for travel-time integrals `∫ dz/(iP(z))`.
//!
//! Each routine integrates an analytic integrand, so plain Gauss–Legendre
//! panels with interval halving converge fast; ray tails to infinity are
//! mapped to a finite interval with `u = 1/|z|`, which is smooth because the
//! integrand decays like `z^{-(k+1)}` with `k ≥ 2`.

use num_complex::Complex64;

use super::roots::Polynomial;

/// 15-point Gauss–Legendre nodes (positive half) and weights on [-1, 1].
const GL_X: [f64; 8] = [
    0.0,
    0.2011940939974345,
    0.3941513470775634,
    0.5709721726085388,
    0.7244177313601701,
    0.8482065834104272,
    0.9372733924007060,
    0.9879925180204854,
];
const GL_W: [f64; 8] = [
    0.2025782419255613,
    0.1984314853271116,
    0.1861610000155622,
    0.1662692058169939,
    0.1395706779261543,
    0.1071592204671719,
    0.0703660474881081,
    0.0307532419961173,
];

fn gl15_complex<F: Fn(Complex64) -> Complex64>(f: &F, a: Complex64, b: Complex64) -> Complex64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = GL_W[0] * f(mid);
    for i in 1..8 {
        let dx = half * GL_X[i];
        acc += GL_W[i] * (f(mid + dx) + f(mid - dx));
    }
    acc * half
}

fn adaptive_complex<F: Fn(Complex64) -> Complex64>(
    f: &F,
    a: Complex64,
    b: Complex64,
    whole: Complex64,
    tol: f64,
    depth: usize,
) -> Complex64 {
    let mid = 0.5 * (a + b);
    let left = gl15_complex(f, a, mid);
    let right = gl15_complex(f, mid, b);
    let err = (left + right - whole).norm();
    if err <= tol || depth >= 24 {
        return left + right;
    }
    adaptive_complex(f, a, mid, left, 0.5 * tol, depth + 1)
        + adaptive_complex(f, mid, b, right, 0.5 * tol, depth + 1)
}

/// `∫_a^b f(z) dz` along the straight segment.
pub fn quad_segment<F: Fn(Complex64) -> Complex64>(
    f: &F,
    a: Complex64,
    b: Complex64,
    tol: f64,
) -> Complex64 {
    if (b - a).norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let whole = gl15_complex(f, a, b);
    adaptive_complex(f, a, b, whole, tol, 0)
}

/// Line integral of `f` along a polyline.
pub fn quad_polyline<F: Fn(Complex64) -> Complex64>(f: &F, pts: &[Complex64], tol: f64) -> Complex64 {
    if pts.len() < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let total: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let mut acc = Complex64::new(0.0, 0.0);
    for w in pts.windows(2) {
        let seg = (w[1] - w[0]).norm();
        if seg == 0.0 {
            continue;
        }
        let seg_tol = (tol * seg / total).max(1e-18);
        acc += quad_segment(f, w[0], w[1], seg_tol);
    }
    acc
}

/// `1/(iP(z))` as a closure-friendly function.
pub fn reciprocal_field(poly: &Polynomial) -> impl Fn(Complex64) -> Complex64 + '_ {
    move |z| (Complex64::new(0.0, 1.0) * poly.eval(z)).inv()
}

/// Travel time from infinity to `z_start` along the ray through `z_start`:
/// `∫_∞^{z_start} dz/(iP(z))`.
pub fn quad_ray_tail(poly: &Polynomial, z_start: Complex64, tol: f64) -> Complex64 {
    let n = poly.degree();
    let r = z_start.norm();
    let theta = z_start.arg();
    let dir = Complex64::from_polar(1.0, theta);
    // q(u) = u^n P(e^{iθ}/u) has q(0) = e^{inθ} ≠ 0.
    let coeffs: Vec<Complex64> = (0..=n)
        .map(|j| poly.c[j] * Complex64::from_polar(1.0, theta * j as f64))
        .collect();
    let q = move |u: Complex64| {
        let mut acc = Complex64::new(0.0, 0.0);
        // ascending in u: coefficient of u^(n-j) is c_j e^{ijθ}
        for j in 0..=n {
            acc = acc * u + coeffs[j];
        }
        acc
    };
    let f = move |u: Complex64| {
        if u.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let un2 = u.powu((n - 2) as u32);
        -(dir * un2) / (Complex64::new(0.0, 1.0) * q(u))
    };
    quad_segment(&f, Complex64::new(0.0, 0.0), Complex64::new(1.0 / r, 0.0), tol)
}

/// `∫_a^b dx / P(x)` over a real interval free of real roots.
pub fn quad_real_interval(poly: &Polynomial, a: f64, b: f64, tol: f64) -> f64 {
    let f = |z: Complex64| Complex64::new(1.0 / poly.eval_real(z.re), 0.0);
    quad_segment(&f, Complex64::new(a, 0.0), Complex64::new(b, 0.0), tol).re
}

/// Improper real tail `∫_{x0}^{+∞} dx/P` (for `x0 > 0`) or
/// `∫_{-∞}^{x0} dx/P` (for `x0 < 0`), assuming no real roots beyond `x0`.
pub fn quad_real_tail(poly: &Polynomial, x0: f64, tol: f64) -> f64 {
    assert!(x0 != 0.0);
    let n = poly.degree();
    // x = 1/u: integrand u^{n-2}/q1(u), q1(u) = u^n P(1/u).
    let f = |z: Complex64| {
        let u = z.re;
        if u == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut q1 = 0.0;
        for j in 0..=n {
            q1 = q1 * u + poly.c[j];
        }
        Complex64::new(u.powi((n - 2) as i32) / q1, 0.0)
    };
    let u0 = 1.0 / x0;
    if x0 > 0.0 {
        quad_segment(&f, Complex64::new(0.0, 0.0), Complex64::new(u0, 0.0), tol).re
    } else {
        quad_segment(&f, Complex64::new(u0, 0.0), Complex64::new(0.0, 0.0), tol).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_circle_residue() {
        // ∮ dz/(i(z^3 - z)) around z = 1 equals 2π/P'(1) = π.
        let poly = Polynomial::new(vec![0.0, -1.0, 0.0, 1.0]);
        let f = reciprocal_field(&poly);
        let m = 64;
        let pts: Vec<Complex64> = (0..=m)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / m as f64;
                Complex64::new(1.0, 0.0) + Complex64::from_polar(0.3, th)
            })
            .collect();
        let v = quad_polyline(&f, &pts, 1e-13);
        assert!((v - Complex64::new(PI, 0.0)).norm() < 1e-11, "{v}");
    }

    #[test]
    fn ray_tail_matches_truncated_quadrature() {
        let poly = Polynomial::new(vec![0.5, -1.0, 0.0, 1.0]);
        let z0 = Complex64::from_polar(8.0, 0.7);
        let tail = quad_ray_tail(&poly, z0, 1e-14);
        // brute: integrate along the ray out to a large radius
        let f = reciprocal_field(&poly);
        let far = Complex64::from_polar(8.0e5, 0.7);
        let brute = -quad_segment(&f, z0, far, 1e-14);
        assert!((tail - brute).norm() < 1e-10, "{tail} vs {brute}");
    }

    #[test]
    fn real_tail_matches_truncation() {
        let poly = Polynomial::new(vec![0.5, -1.0, 0.0, 1.0]); // z^3 - z + .5, real root < 0
        let t = quad_real_tail(&poly, 2.0, 1e-14);
        let brute = quad_real_interval(&poly, 2.0, 1.0e6, 1e-14);
        assert!((t - brute).abs() < 1e-9, "{t} vs {brute}");
    }
}
