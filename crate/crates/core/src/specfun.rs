//! Digamma and trigamma on the line `Re z = 1/2`.
//!
//! Both kernels push `z` to `|z| >= 12` with the upward recurrence and then
//! apply the Stirling-type asymptotic series through the `B12` Bernoulli term.
//! The truncation error there is below `1e-15`, so the result is limited by
//! the rounding of the recurrence sum.
//!
//! The line is pole-free, so nothing more general is needed. The right
//! half-plane versions are exported because the recurrence checks step off
//! the line to `3/2 + i v`.

use num_complex::Complex64;

const RECURRENCE_RADIUS: f64 = 12.0;

// B_{2k} / (2k) for k = 1..6
const DIGAMMA_COEFFS: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
];

// B_{2k} for k = 1..6
const TRIGAMMA_COEFFS: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// Value of the digamma function split into real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigammaEval {
    pub re_psi: f64,
    pub im_psi: f64,
}

impl DigammaEval {
    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.re_psi, self.im_psi)
    }
}

/// Digamma for `Re z > 0`.
pub fn digamma_right_half(z: Complex64) -> Complex64 {
    debug_assert!(z.re > 0.0, "digamma_right_half needs Re z > 0");
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.norm() < RECURRENCE_RADIUS {
        shift -= w.inv();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    // Horner in 1/w^2
    let mut series = Complex64::new(0.0, 0.0);
    for c in DIGAMMA_COEFFS.iter().rev() {
        series = (series + c) * inv2;
    }
    w.ln() - 0.5 * inv - series + shift
}

/// Trigamma for `Re z > 0`.
pub fn trigamma_right_half(z: Complex64) -> Complex64 {
    debug_assert!(z.re > 0.0, "trigamma_right_half needs Re z > 0");
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.norm() < RECURRENCE_RADIUS {
        shift += (w * w).inv();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    for c in TRIGAMMA_COEFFS.iter().rev() {
        series = (series + c) * inv2;
    }
    inv + 0.5 * inv2 + series * inv + shift
}

/// `Psi(1/2 + i v)`.
///
/// Evaluated at `|v|` and conjugated for negative `v`, so the real part is
/// exactly even and the imaginary part exactly odd. Non-finite `v` yields NaN.
pub fn digamma_half_line(v: f64) -> DigammaEval {
    if !v.is_finite() {
        return DigammaEval { re_psi: f64::NAN, im_psi: f64::NAN };
    }
    let w = digamma_right_half(Complex64::new(0.5, v.abs()));
    let im = if v < 0.0 { -w.im } else { w.im };
    DigammaEval { re_psi: w.re, im_psi: im }
}

/// `Psi'(1/2 + i v)`, with the same symmetry handling as [`digamma_half_line`].
pub fn trigamma_half_line(v: f64) -> Complex64 {
    if !v.is_finite() {
        return Complex64::new(f64::NAN, f64::NAN);
    }
    let w = trigamma_right_half(Complex64::new(0.5, v.abs()));
    if v < 0.0 {
        w.conj()
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    // Psi(z) = -gamma + sum_{k>=0} [1/(k+1) - 1/(k+z)], summed backwards over
    // N terms plus a leading-order tail estimate of psi(N+z) - psi(N+1).
    fn series_digamma(z: Complex64) -> Complex64 {
        let n = 1_000_000usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (0..n).rev() {
            let kf = k as f64;
            acc += (z - 1.0) / ((kf + 1.0) * (z + kf));
        }
        let a = z + n as f64;
        let b = Complex64::new(n as f64 + 1.0, 0.0);
        let tail = (a.ln() - b.ln()) - 0.5 * (a.inv() - b.inv())
            - (a * a).inv() / 12.0
            + (b * b).inv() / 12.0;
        -EULER_GAMMA + acc + tail
    }

    #[test]
    fn closed_form_at_one_half() {
        let p = digamma_half_line(0.0);
        assert!((p.re_psi - (-1.963_510_026_021_423_5)).abs() < 1e-14);
        assert_eq!(p.im_psi, 0.0);
        let t = trigamma_half_line(0.0);
        assert!((t.re - PI * PI / 2.0).abs() < 1e-13);
        assert!(t.im.abs() < 1e-15);
    }

    #[test]
    fn large_v_tends_to_log() {
        let p = digamma_half_line(10.0);
        assert!((p.re_psi - 10f64.ln()).abs() < 2e-3);
    }

    #[test]
    fn matches_series_at_point_seven() {
        let z = Complex64::new(0.5, 0.7);
        let s = series_digamma(z);
        let p = digamma_half_line(0.7).as_complex();
        assert!((p - s).norm() < 1e-10, "{p} vs {s}");
    }

    #[test]
    fn trigamma_matches_finite_difference() {
        // d/dv Psi(1/2 + i v) = i Psi'(1/2 + i v)
        let v = 1.3;
        let h = 1e-5;
        let d = (digamma_half_line(v + h).as_complex() - digamma_half_line(v - h).as_complex())
            / (2.0 * h);
        let expected = Complex64::new(0.0, 1.0) * trigamma_half_line(v);
        assert!((d - expected).norm() < 1e-6);
    }

    #[test]
    fn trigamma_decays_with_phase_minus_half_pi() {
        let t = trigamma_half_line(1e6);
        assert!(t.norm() < 2e-6);
        assert!((t.arg() + PI / 2.0).abs() < 1e-5);
    }

    #[test]
    fn symmetric_under_sign_flip() {
        for v in [1e-6, 0.3, 2.0, 55.0] {
            let a = digamma_half_line(v);
            let b = digamma_half_line(-v);
            assert_eq!(a.re_psi.to_bits(), b.re_psi.to_bits());
            assert_eq!(a.im_psi, -b.im_psi);
        }
    }

    #[test]
    fn non_finite_input_gives_nan() {
        assert!(digamma_half_line(f64::NAN).re_psi.is_nan());
        assert!(trigamma_half_line(f64::INFINITY).re.is_nan());
    }
}
