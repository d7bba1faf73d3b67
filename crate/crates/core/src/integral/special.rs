//! Sine integral, used for the closed-form tails of oscillatory integrands.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

const EULER: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 200;

/// `(Ci(x), Si(x))` for `x > 0`. Power series below 2, continued fraction for
/// `E1(ix)` above.
pub fn cisi(x: f64) -> (f64, f64) {
    let t = x.abs();
    if t == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let (ci, mut si) = if t > 2.0 {
        let h = e1_imag_cf(t);
        (-h.re, FRAC_PI_2 + h.im)
    } else {
        let (mut sums, mut sumc) = (0.0, 0.0);
        let (mut sum, mut sign, mut fact) = (0.0, 1.0, 1.0);
        let mut odd = true;
        for k in 1..=MAX_ITER {
            fact *= t / k as f64;
            let term = fact / k as f64;
            sum += sign * term;
            let err = term / sum.abs();
            if odd {
                sign = -sign;
                sums = sum;
                sum = sumc;
            } else {
                sumc = sum;
                sum = sums;
            }
            if err < EPS {
                break;
            }
            odd = !odd;
        }
        (sumc + t.ln() + EULER, sums)
    };
    if x < 0.0 {
        si = -si;
    }
    (ci, si)
}

/// `e^{-ix} E1(ix)` times `e^{ix}`, by modified Lentz on the continued fraction.
fn e1_imag_cf(t: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, t);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = one / b;
    let mut h = d;
    for i in 2..=MAX_ITER {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += Complex64::new(2.0, 0.0);
        d = one / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < EPS {
            break;
        }
    }
    Complex64::new(t.cos(), -t.sin()) * h
}

/// `π/2 − Si(x)` for `x ≥ 0`, without cancellation at large `x`.
pub fn si_complement(x: f64) -> f64 {
    if x > 2.0 {
        -e1_imag_cf(x).im
    } else {
        FRAC_PI_2 - cisi(x).1
    }
}

/// `∫_w^∞ sin(a t)/t dt` for `a ≥ 0`, `w > 0`.
pub fn sin_over_t_tail(a: f64, w: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        si_complement(a * w)
    }
}

/// `∫_w^∞ cos(a t)/t² dt` for `a ≥ 0`, `w > 0`.
pub fn cos_over_t2_tail(a: f64, w: f64) -> f64 {
    (a * w).cos() / w - a * sin_over_t_tail(a, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun table 5.1
        let (ci, si) = cisi(1.0);
        assert!((si - 0.946_083_070_367_183).abs() < 1e-14);
        assert!((ci - 0.337_403_922_900_968).abs() < 1e-14);
        let (ci, si) = cisi(10.0);
        assert!((si - 1.658_347_594_218_874).abs() < 1e-13);
        assert!((ci + 0.045_456_433_004_455).abs() < 1e-13);
    }

    #[test]
    fn branches_agree_near_switch() {
        let below = cisi(2.0 - 1e-12);
        let above = cisi(2.0 + 1e-12);
        assert!((below.0 - above.0).abs() < 1e-11);
        assert!((below.1 - above.1).abs() < 1e-11);
    }

    #[test]
    fn complement_at_large_argument() {
        // π/2 − Si(x) ≈ cos(x)/x for large x
        let x: f64 = 1e6;
        let approx = x.cos() / x;
        assert!((si_complement(x) - approx).abs() < 1e-11);
    }
}
