//! ₂F₁(1, b; b+1; z) at complex argument.
//!
//! This restricted family has the integral form b∫₀¹ t^(b−1)/(1−zt) dt, which
//! continues the function analytically to the plane cut along [1, ∞).

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::quadrature::{adaptive, Tolerance};
use crate::Complex;

const SERIES_RADIUS: f64 = 0.9;
const INVERSION_RADIUS: f64 = 1.1;

/// ₂F₁(1, b; b+1; z).
///
/// ```
/// use emf_sg::{special::hyp2f1_one_b, Complex};
/// // ₂F₁(1, 1; 2; z) = −ln(1−z)/z
/// let v = hyp2f1_one_b(1.0, Complex::new(0.5, 0.0)).unwrap();
/// assert!((v.re - 2.0 * 2f64.ln()).abs() < 1e-14);
/// ```
pub fn hyp2f1_one_b(b: f64, z: Complex) -> Result<Complex> {
    Ok(hyp2f1_one_b_minus_one(b, z)? + 1.0)
}

/// ₂F₁(1, b; b+1; z) − 1, without the cancellation that subtracting 1 from
/// the full value causes when |z| is tiny.
pub fn hyp2f1_one_b_minus_one(b: f64, z: Complex) -> Result<Complex> {
    check(b, z)?;
    let r = z.norm();
    if r == 0.0 {
        return Ok(Complex::new(0.0, 0.0));
    }
    if r < SERIES_RADIUS {
        return Ok(series_tail(b, z, 1));
    }
    if r > INVERSION_RADIUS && b.fract() != 0.0 {
        return Ok(inversion(b, z)? - 1.0);
    }
    Ok(by_quadrature(b, z)? - 1.0)
}

fn check(b: f64, z: Complex) -> Result<()> {
    if !b.is_finite() || (b <= 0.0 && b.fract() == 0.0) {
        return domain(format!("2F1(1,b;b+1;z) undefined for b = {b}"));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return domain("2F1 argument is not finite");
    }
    if z.im == 0.0 && z.re >= 1.0 {
        return domain(format!("2F1 argument {} lies on the branch cut [1, inf)", z.re));
    }
    Ok(())
}

/// Σ_{k ≥ k0} b/(b+k) zᵏ for |z| < 1.
fn series_tail(b: f64, z: Complex, k0: usize) -> Complex {
    let mut zk = z.powu(k0 as u32);
    let mut sum = Complex::new(0.0, 0.0);
    let mut k = k0;
    loop {
        let term = zk * (b / (b + k as f64));
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() || k > 5000 {
            return sum;
        }
        zk *= z;
        k += 1;
    }
}

/// Connection to argument 1/z:
/// F_b(z) = πb/sin(πb)·(−z)^(−b) + b/((1−b)z)·F_{1−b}(1/z).
fn inversion(b: f64, z: Complex) -> Result<Complex> {
    let w = z.inv();
    let head = (-z).powf(-b) * (PI * b / (PI * b).sin());
    let tail = hyp2f1_one_b(1.0 - b, w)? * w * (b / (1.0 - b));
    Ok(head + tail)
}

/// Shift the order to c = b+m > 0 so that the substitution t = u^(1/c) gives
/// the smooth integral F_c(z) = ∫₀¹ du / (1 − z u^(1/c)).
fn by_quadrature(b: f64, z: Complex) -> Result<Complex> {
    let m = if b > 0.0 { 0 } else { (-b).floor() as usize + 1 };
    let c = b + m as f64;
    let mut head = Complex::new(0.0, 0.0);
    let mut zk = Complex::new(1.0, 0.0);
    for k in 0..m {
        head += zk * (b / (b + k as f64));
        zk *= z;
    }
    let inv_c = 1.0 / c;
    let q = adaptive(
        |u: f64| (Complex::new(1.0, 0.0) - z * u.powf(inv_c)).inv(),
        &[0.0, 0.5, 0.9, 0.99, 1.0],
        Tolerance::new(1e-15, 1e-13),
        500,
    )?;
    Ok(head + zk * (b / c) * q.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    /// Independent route: direct quadrature of b∫₀¹ t^(b−1)/(1−zt) dt with t = u^(1/b), b > 0.
    fn oracle(b: f64, z: Complex) -> Complex {
        let tol = Tolerance::new(1e-15, 1e-13);
        let re = integrate(|u| (c(1.0, 0.0) - z * u.powf(1.0 / b)).inv().re, 0.0, 1.0, tol).unwrap();
        let im = integrate(|u| (c(1.0, 0.0) - z * u.powf(1.0 / b)).inv().im, 0.0, 1.0, tol).unwrap();
        c(re, im)
    }

    #[test]
    fn closed_forms() {
        assert_eq!(hyp2f1_one_b(0.3, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let v = hyp2f1_one_b(1.0, c(0.5, 0.0)).unwrap();
        assert!((v.re - 1.386_294_361_119_890_6).abs() < 1e-14);
        // −ln(1−j)/j = π/4 + j·ln(2)/2
        let v = hyp2f1_one_b(1.0, c(0.0, 1.0)).unwrap();
        assert!((v.re - std::f64::consts::FRAC_PI_4).abs() < 1e-12, "{v}");
        assert!((v.im - 0.346_573_590_279_972_6).abs() < 1e-12, "{v}");
        let o = oracle(1.0, c(0.0, 1.0));
        assert!((o - v).norm() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(hyp2f1_one_b(0.5, c(1.0, 0.0)).is_err());
        assert!(hyp2f1_one_b(0.5, c(3.0, 0.0)).is_err());
        assert!(hyp2f1_one_b(0.0, c(0.2, 0.0)).is_err());
        assert!(hyp2f1_one_b(-2.0, c(0.2, 0.0)).is_err());
        assert!(hyp2f1_one_b(0.5, c(3.0, 1e-9)).is_ok());
    }

    #[test]
    fn all_routes_agree_with_integral_form() {
        let bs = [0.615_384_615_384_615_4, 0.8, 1.0, 2.5, 0.3];
        let zs = [
            c(0.0, 0.95),
            c(-1.0, 0.0),
            c(0.0, -40.0),
            c(-1e6, 0.0),
            c(0.7, 0.7),
            c(1.05, 0.01),
            c(-3.0, 2.0),
            c(0.3, -5.0),
        ];
        for &b in &bs {
            for &z in &zs {
                let got = hyp2f1_one_b(b, z).unwrap();
                let want = oracle(b, z);
                assert!((got - want).norm() <= 1e-9 * want.norm(), "b={b} z={z} got={got} want={want}");
            }
        }
    }

    #[test]
    fn negative_order_large_argument() {
        // b = −2/α; compare the inversion route against the shifted quadrature.
        for &b in &[-0.615_384_615_384_615_4, -0.8, -1.3] {
            for &z in &[c(0.0, 3.0), c(0.0, -250.0), c(-20.0, 0.0), c(2.0, 2.0)] {
                let inv = inversion(b, z).unwrap();
                let quad = by_quadrature(b, z).unwrap();
                assert!((inv - quad).norm() <= 1e-10 * quad.norm(), "b={b} z={z} {inv} {quad}");
            }
        }
    }

    proptest! {
        #[test]
        fn matches_truncated_series(b in 0.05f64..4.0, neg in any::<bool>(), r in 0.0f64..0.5, th in -std::f64::consts::PI..std::f64::consts::PI) {
            let b = if neg && b.fract() != 0.0 { -b } else { b };
            let z = Complex::from_polar(r, th);
            let mut want = c(0.0, 0.0);
            let mut zk = c(1.0, 0.0);
            for k in 0..200 {
                want += zk * (b / (b + k as f64));
                zk *= z;
            }
            let got = hyp2f1_one_b(b, z).unwrap();
            prop_assert!((got - want).norm() <= 1e-9 * want.norm().max(1.0));
        }

        #[test]
        fn schwarz_reflection(b in 0.05f64..3.0, r in 0.0f64..50.0, th in 0.01f64..std::f64::consts::PI) {
            let z = Complex::from_polar(r, th);
            let a = hyp2f1_one_b(b, z).unwrap();
            let bb = hyp2f1_one_b(b, z.conj()).unwrap();
            prop_assert!((a.conj() - bb).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }
}
