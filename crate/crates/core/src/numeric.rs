//! Multiprecision complex numbers as pairs of MPFR floats, plus rational reconstruction.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

#[derive(Clone, Debug)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

impl Complex {
    pub fn zero(prec: u32) -> Self {
        Complex { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn one(prec: u32) -> Self {
        Complex { re: Float::with_val(prec, 1), im: Float::new(prec) }
    }

    pub fn from_real(x: Float) -> Self {
        let prec = x.prec();
        Complex { re: x, im: Float::new(prec) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    /// e^{2πi·k/n}.
    pub fn root_of_unity(k: i64, n: u64, prec: u32) -> Self {
        let k = k.rem_euclid(n as i64) as u64;
        if (4 * k).is_multiple_of(n) {
            let (re, im) = [(1, 0), (0, 1), (-1, 0), (0, -1)][(4 * k / n) as usize];
            return Complex { re: Float::with_val(prec, re), im: Float::with_val(prec, im) };
        }
        let mut t = Float::with_val(prec + 8, Constant::Pi);
        t *= 2 * k;
        t /= n;
        let (s, c) = t.sin_cos(Float::new(prec + 8));
        Complex { re: Float::with_val(prec, c), im: Float::with_val(prec, s) }
    }

    pub fn add(&self, o: &Complex) -> Complex {
        Complex { re: Float::with_val(self.prec(), &self.re + &o.re), im: Float::with_val(self.prec(), &self.im + &o.im) }
    }

    pub fn sub(&self, o: &Complex) -> Complex {
        Complex { re: Float::with_val(self.prec(), &self.re - &o.re), im: Float::with_val(self.prec(), &self.im - &o.im) }
    }

    pub fn mul(&self, o: &Complex) -> Complex {
        let p = self.prec();
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        Complex { re, im }
    }

    pub fn scale(&self, s: &Float) -> Complex {
        Complex { re: Float::with_val(self.prec(), &self.re * s), im: Float::with_val(self.prec(), &self.im * s) }
    }

    pub fn scale_rat(&self, s: &Rational) -> Complex {
        Complex { re: Float::with_val(self.prec(), &self.re * s), im: Float::with_val(self.prec(), &self.im * s) }
    }

    pub fn add_assign(&mut self, o: &Complex) {
        self.re += &o.re;
        self.im += &o.im;
    }

    /// self += s·o for a real scalar s.
    pub fn add_scaled(&mut self, o: &Complex, s: &Float) {
        self.re += Float::with_val(self.prec(), &o.re * s);
        self.im += Float::with_val(self.prec(), &o.im * s);
    }

    pub fn conj(&self) -> Complex {
        Complex { re: self.re.clone(), im: Float::with_val(self.prec(), -&self.im) }
    }

    pub fn neg(&self) -> Complex {
        Complex { re: Float::with_val(self.prec(), -&self.re), im: Float::with_val(self.prec(), -&self.im) }
    }

    pub fn abs2(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())
    }

    pub fn abs(&self) -> Float {
        self.abs2().sqrt()
    }

    pub fn div(&self, o: &Complex) -> Complex {
        let d = o.abs2();
        let n = self.mul(&o.conj());
        Complex { re: n.re / &d, im: n.im / &d }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

/// 2^{-bits} as a float of the given precision.
pub fn two_pow_neg(bits: u32, prec: u32) -> Float {
    Float::with_val(prec, Float::i_exp(1, -(bits as i32)))
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// Best rational approximation of `x` with denominator ≤ `qmax`, by continued fractions
/// on the exact dyadic value of `x` (semiconvergents included).
pub fn best_rational(x: &Float, qmax: &Integer) -> Option<Rational> {
    let exact = x.to_rational()?;
    let mut num = exact.numer().clone();
    let mut den = exact.denom().clone();
    // convergents h/k
    let (mut h0, mut h1) = (Integer::from(0), Integer::from(1));
    let (mut k0, mut k1) = (Integer::from(1), Integer::from(0));
    loop {
        let (a, r) = num.clone().div_rem_floor(den.clone());
        let k2 = Integer::from(&a * &k1) + &k0;
        if k2 > *qmax {
            // largest admissible semiconvergent
            let t = (Integer::from(qmax - &k0)) / &k1;
            let cand_conv = Rational::from((h1.clone(), k1.clone()));
            if t > 0 {
                let hs = Integer::from(&t * &h1) + &h0;
                let ks = Integer::from(&t * &k1) + &k0;
                let semi = Rational::from((hs, ks));
                let dc = Rational::from(&cand_conv - &exact).abs();
                let ds = Rational::from(&semi - &exact).abs();
                return Some(if ds < dc { semi } else { cand_conv });
            }
            return Some(cand_conv);
        }
        let h2 = Integer::from(&a * &h1) + &h0;
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        if r == 0 {
            return Some(Rational::from((h1, k1)));
        }
        num = den;
        den = r;
    }
}

/// Reconstruct a rational from `x` known to within `err`, requiring the certified gap
/// |x − r| < 1/(4·qmax²) and |x − r| ≤ err.
pub fn reconstruct(x: &Float, err: &Float, qmax: &Integer) -> Option<Rational> {
    let r = best_rational(x, qmax)?;
    let prec = x.prec().max(err.prec());
    let diff = (Float::with_val(prec, x) - &r).abs();
    let gap = Float::with_val(prec, Float::with_val(prec, qmax).pow(2u32) * 4u32).recip();
    if diff <= *err && diff < gap && *err < gap {
        Some(r)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_unity() {
        let z = Complex::root_of_unity(1, 4, 128);
        assert_eq!(z.re, 0);
        assert_eq!(z.im, 1);
        let w = Complex::root_of_unity(1, 3, 128);
        let w3 = w.mul(&w).mul(&w);
        assert!((w3.re - 1u32).abs() < 1e-35);
        assert!(w3.im.abs() < 1e-35);
    }

    #[test]
    fn reconstruct_simple_fractions() {
        let q = Integer::from(1_000_000);
        let x = Float::with_val(200, Rational::from((-7, 12)));
        let err = two_pow_neg(150, 200);
        assert_eq!(reconstruct(&x, &err, &q), Some(Rational::from((-7, 12))));
        let x = Float::with_val(200, Float::with_val(200, 2).sqrt());
        assert_eq!(reconstruct(&x, &err, &q), None);
        let x = Float::with_val(200, 0);
        assert_eq!(reconstruct(&x, &err, &q), Some(Rational::new()));
    }

    #[test]
    fn best_rational_respects_bound() {
        let x = Float::with_val(200, Float::with_val(200, Constant::Pi));
        let r = best_rational(&x, &Integer::from(1000)).unwrap();
        assert_eq!(r, Rational::from((355, 113)));
    }
}
