//! Exact arithmetic in cyclotomic fields Q(ζ_n), stored in the power basis modulo Φ_n.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, RwLock};

use rug::{Float, Integer, Rational};

use crate::arith::{divisors, euler_phi, factor, gcd};
use crate::error::{Error, Result};
use crate::numeric::{two_pow_neg, Complex};

static PHI_CACHE: LazyLock<RwLock<HashMap<u64, Arc<Vec<i64>>>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

/// Coefficients of the n-th cyclotomic polynomial, constant term first.
pub fn cyclotomic_poly(n: u64) -> Arc<Vec<i64>> {
    assert!(n >= 1);
    if let Some(p) = PHI_CACHE.read().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by Φ_d for every proper divisor d
    let mut num: Vec<Integer> = vec![Integer::new(); n as usize + 1];
    num[0] = Integer::from(-1);
    num[n as usize] = Integer::from(1);
    for d in divisors(n) {
        if d == n {
            continue;
        }
        let phi_d = cyclotomic_poly(d);
        num = exact_div_monic(&num, &phi_d);
    }
    let coeffs: Vec<i64> = num
        .iter()
        .map(|c| c.to_i64().expect("cyclotomic coefficient exceeds 64 bits"))
        .collect();
    let arc = Arc::new(coeffs);
    PHI_CACHE.write().unwrap().entry(n).or_insert_with(|| arc.clone());
    arc
}

fn exact_div_monic(num: &[Integer], den: &[i64]) -> Vec<Integer> {
    let dn = den.len() - 1;
    let mut rem = num.to_vec();
    let qlen = num.len() - dn;
    let mut q = vec![Integer::new(); qlen];
    for i in (0..qlen).rev() {
        let c = rem[i + dn].clone();
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                if dj != 0 {
                    rem[i + j] -= Integer::from(&c * dj);
                }
            }
        }
        q[i] = c;
    }
    debug_assert!(rem.iter().all(|c| *c == 0));
    q
}

/// A p-adic valuation: a rational number or +∞.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValQ {
    Finite(Rational),
    Infinite,
}

impl ValQ {
    pub fn int(v: i64) -> Self {
        ValQ::Finite(Rational::from(v))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        ValQ::Finite(Rational::from((n, d)))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ValQ::Infinite)
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ValQ::Finite(r) => Some(r),
            ValQ::Infinite => None,
        }
    }

    pub fn add(&self, o: &ValQ) -> ValQ {
        match (self, o) {
            (ValQ::Finite(a), ValQ::Finite(b)) => ValQ::Finite(Rational::from(a + b)),
            _ => ValQ::Infinite,
        }
    }
}

impl PartialOrd for ValQ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ValQ {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ValQ::Infinite, ValQ::Infinite) => Ordering::Equal,
            (ValQ::Infinite, _) => Ordering::Greater,
            (_, ValQ::Infinite) => Ordering::Less,
            (ValQ::Finite(a), ValQ::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ValQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValQ::Finite(r) => write!(f, "{r}"),
            ValQ::Infinite => write!(f, "inf"),
        }
    }
}

/// p-adic valuation of a rational.
pub fn vp_rat(x: &Rational, p: u64) -> ValQ {
    if *x == 0 {
        return ValQ::Infinite;
    }
    let vn = crate::arith::vp_int(x.numer(), p).unwrap() as i64;
    let vd = crate::arith::vp_int(x.denom(), p).unwrap() as i64;
    ValQ::int(vn - vd)
}

/// An element of Q(ζ_n) as Σ c_i ζ_n^i, i < φ(n).
#[derive(Clone, Debug)]
pub struct CycNumber {
    order: u64,
    coeffs: Vec<Rational>,
}

/// Equality of values: numbers of different orders are compared in the common field.
impl PartialEq for CycNumber {
    fn eq(&self, o: &CycNumber) -> bool {
        if self.order == o.order {
            return self.coeffs == o.coeffs;
        }
        let (a, b) = self.lift_pair(o);
        a.coeffs == b.coeffs
    }
}

impl Eq for CycNumber {}

impl CycNumber {
    pub fn zero(order: u64) -> Self {
        let phi = euler_phi(order) as usize;
        CycNumber { order, coeffs: vec![Rational::new(); phi] }
    }

    pub fn one(order: u64) -> Self {
        Self::from_rational(order, Rational::from(1))
    }

    pub fn from_rational(order: u64, r: Rational) -> Self {
        let mut z = Self::zero(order);
        z.coeffs[0] = r;
        z
    }

    pub fn from_int(order: u64, v: i64) -> Self {
        Self::from_rational(order, Rational::from(v))
    }

    /// ζ_n^k.
    pub fn root_power(order: u64, k: i64) -> Self {
        let mut dense = vec![Integer::new(); order as usize];
        dense[k.rem_euclid(order as i64) as usize] = Integer::from(1);
        Self::from_dense_integers(order, dense, &Integer::from(1))
    }

    /// Builds Σ coeffs[i] ζ_n^i for arbitrary-length coefficient lists.
    pub fn from_coeffs(order: u64, coeffs: &[Rational]) -> Self {
        let n = order as usize;
        let mut dense = vec![Rational::new(); n];
        for (i, c) in coeffs.iter().enumerate() {
            dense[i % n] += c;
        }
        reduce_dense(order, dense)
    }

    /// Builds (Σ nums[k] ζ_n^k) / den where nums has length n (exponents mod n).
    pub fn from_dense_integers(order: u64, mut nums: Vec<Integer>, den: &Integer) -> Self {
        let n = order as usize;
        assert_eq!(nums.len(), n);
        let phi_poly = cyclotomic_poly(order);
        let phi = phi_poly.len() - 1;
        let support: Vec<(usize, i64)> =
            phi_poly.iter().enumerate().filter(|(_, c)| **c != 0).map(|(i, c)| (i, *c)).collect();
        for d in (phi..n).rev() {
            if nums[d] == 0 {
                continue;
            }
            let c = std::mem::take(&mut nums[d]);
            let shift = d - phi;
            for &(j, pj) in &support {
                if j == phi {
                    continue;
                }
                nums[shift + j] -= Integer::from(&c * pj);
            }
        }
        nums.truncate(phi);
        let coeffs = nums.into_iter().map(|c| Rational::from((c, den.clone()))).collect();
        CycNumber { order, coeffs }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0)
    }

    /// The rational value if this element lies in Q.
    pub fn to_rational(&self) -> Option<Rational> {
        if self.coeffs.iter().skip(1).all(|c| *c == 0) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Represent the same number in Q(ζ_{n2}).
    pub fn embed_to_order(&self, n2: u64) -> Result<CycNumber> {
        if !n2.is_multiple_of(self.order) {
            return Err(Error::Precondition(format!(
                "order {} does not divide target order {n2}",
                self.order
            )));
        }
        if n2 == self.order {
            return Ok(self.clone());
        }
        let step = (n2 / self.order) as usize;
        let mut dense = vec![Rational::new(); n2 as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            dense[i * step] = c.clone();
        }
        Ok(reduce_dense(n2, dense))
    }

    fn lift_pair(&self, o: &CycNumber) -> (CycNumber, CycNumber) {
        if self.order == o.order {
            return (self.clone(), o.clone());
        }
        let n = crate::arith::lcm(self.order, o.order);
        (self.embed_to_order(n).unwrap(), o.embed_to_order(n).unwrap())
    }

    pub fn add(&self, o: &CycNumber) -> CycNumber {
        if self.order != o.order {
            let (a, b) = self.lift_pair(o);
            return a.add(&b);
        }
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Rational::from(a + b)).collect();
        CycNumber { order: self.order, coeffs }
    }

    pub fn sub(&self, o: &CycNumber) -> CycNumber {
        if self.order != o.order {
            let (a, b) = self.lift_pair(o);
            return a.sub(&b);
        }
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Rational::from(a - b)).collect();
        CycNumber { order: self.order, coeffs }
    }

    pub fn neg(&self) -> CycNumber {
        CycNumber { order: self.order, coeffs: self.coeffs.iter().map(|c| Rational::from(-c)).collect() }
    }

    pub fn scale(&self, r: &Rational) -> CycNumber {
        CycNumber { order: self.order, coeffs: self.coeffs.iter().map(|c| Rational::from(c * r)).collect() }
    }

    pub fn mul(&self, o: &CycNumber) -> CycNumber {
        if self.order != o.order {
            let (a, b) = self.lift_pair(o);
            return a.mul(&b);
        }
        let n = self.order as usize;
        // clear denominators so the product runs over integers
        let (an, ad) = integerize(&self.coeffs);
        let (bn, bd) = integerize(&o.coeffs);
        let mut dense = vec![Integer::new(); n];
        for (i, a) in an.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in bn.iter().enumerate() {
                if *b == 0 {
                    continue;
                }
                let k = (i + j) % n;
                dense[k] += Integer::from(a * b);
            }
        }
        CycNumber::from_dense_integers(self.order, dense, &Integer::from(&ad * &bd))
    }

    pub fn pow(&self, mut e: u64) -> CycNumber {
        let mut base = self.clone();
        let mut acc = CycNumber::one(self.order);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// σ_j: ζ ↦ ζ^j.
    pub fn galois_apply(&self, j: i64) -> Result<CycNumber> {
        let n = self.order;
        let jr = j.rem_euclid(n as i64) as u64;
        if gcd(jr, n) != 1 {
            return Err(Error::Precondition(format!("gcd({j}, {n}) != 1")));
        }
        let mut dense = vec![Rational::new(); n as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            dense[(i as u64 * jr % n) as usize] = c.clone();
        }
        Ok(reduce_dense(n, dense))
    }

    /// Complex conjugation.
    pub fn conj(&self) -> CycNumber {
        self.galois_apply(-1).unwrap()
    }

    /// Field norm down to Q, computed as Res(Φ_n, f).
    pub fn norm(&self) -> Rational {
        let phi: Vec<Rational> = cyclotomic_poly(self.order).iter().map(|&c| Rational::from(c)).collect();
        let mut f = self.coeffs.clone();
        trim(&mut f);
        if f.is_empty() {
            return Rational::new();
        }
        resultant(&phi, &f)
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against Φ_n.
    pub fn inverse(&self) -> Result<CycNumber> {
        if self.is_zero() {
            return Err(Error::NotInvertible("zero has no inverse".into()));
        }
        let phi: Vec<Rational> = cyclotomic_poly(self.order).iter().map(|&c| Rational::from(c)).collect();
        let mut f = self.coeffs.clone();
        trim(&mut f);
        // invariant: r_i ≡ s_i·f mod Φ
        let (mut r0, mut r1) = (phi, f);
        let (mut s0, mut s1) = (Vec::<Rational>::new(), vec![Rational::from(1)]);
        while r1.len() > 1 {
            let (q, r) = poly_divrem(&r0, &r1);
            let s2 = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
        }
        let c = r1[0].clone();
        let inv_c = Rational::from(1) / c;
        let coeffs: Vec<Rational> = s1.iter().map(|x| Rational::from(x * &inv_c)).collect();
        Ok(CycNumber::from_coeffs(self.order, &coeffs))
    }

    pub fn div(&self, o: &CycNumber) -> Result<CycNumber> {
        Ok(self.mul(&o.inverse()?))
    }

    /// p-adic valuation for p-power orders (the unique place above p), normalized v_p(p) = 1.
    pub fn vp(&self, p: u64) -> Result<ValQ> {
        let f = factor(self.order);
        if !(f.is_empty() || (f.len() == 1 && f[0].0 == p)) {
            return Err(Error::ValuationUndefined { order: self.order, p });
        }
        if self.is_zero() {
            return Ok(ValQ::Infinite);
        }
        let phi = self.coeffs.len();
        if phi == 1 {
            return Ok(vp_rat(&self.coeffs[0], p));
        }
        // rewrite in powers of the uniformizer π = ζ − 1
        let mut shifted = vec![Rational::new(); phi];
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            for (i, s) in shifted.iter_mut().enumerate().take(k + 1) {
                *s += Rational::from(c * crate::arith::binomial(k as u64, i as u64));
            }
        }
        let mut best = ValQ::Infinite;
        for (i, c) in shifted.iter().enumerate() {
            if let ValQ::Finite(v) = vp_rat(c, p) {
                let cand = ValQ::Finite(v + Rational::from((i as i64, phi as i64)));
                if cand < best {
                    best = cand;
                }
            }
        }
        Ok(best)
    }

    /// Valuation via the norm: v_p(N(x))/φ(n).
    pub fn vp_by_norm(&self, p: u64) -> Result<ValQ> {
        let f = factor(self.order);
        if !(f.is_empty() || (f.len() == 1 && f[0].0 == p)) {
            return Err(Error::ValuationUndefined { order: self.order, p });
        }
        match vp_rat(&self.norm(), p) {
            ValQ::Infinite => Ok(ValQ::Infinite),
            ValQ::Finite(v) => Ok(ValQ::Finite(v / Rational::from(self.coeffs.len() as i64))),
        }
    }

    /// Evaluate at e^{2πik/n}; returns the value and an error bound ≤ 2^{-precision}(1 + Σ|c_i|).
    pub fn complex_embed(&self, k: i64, precision: u32) -> Result<(Complex, Float)> {
        let n = self.order;
        let kr = k.rem_euclid(n as i64) as u64;
        if gcd(kr, n) != 1 && n > 1 {
            return Err(Error::Precondition(format!("gcd({k}, {n}) != 1")));
        }
        let wp = precision + 32 + 64 - (self.coeffs.len() as u64).leading_zeros();
        let mut acc = Complex::zero(wp);
        let mut l1 = Float::with_val(wp, 1);
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let z = Complex::root_of_unity((kr as i64) * i as i64, n, wp);
            acc.add_assign(&z.scale_rat(c));
            l1 += Float::with_val(wp, c.clone().abs());
        }
        let err = two_pow_neg(precision, wp) * l1;
        Ok((acc, err))
    }
}

fn integerize(c: &[Rational]) -> (Vec<Integer>, Integer) {
    let mut den = Integer::from(1);
    for x in c {
        if *x.denom() != 1 {
            den.lcm_mut(x.denom());
        }
    }
    let nums = c
        .iter()
        .map(|x| {
            if *x.denom() == 1 && den == 1 {
                x.numer().clone()
            } else {
                x.numer() * Integer::from(&den / x.denom())
            }
        })
        .collect();
    (nums, den)
}

fn reduce_dense(order: u64, dense: Vec<Rational>) -> CycNumber {
    let (nums, den) = integerize(&dense);
    CycNumber::from_dense_integers(order, nums, &den)
}

fn trim(f: &mut Vec<Rational>) {
    while f.last().is_some_and(|c| *c == 0) {
        f.pop();
    }
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Rational::from(x * y);
        }
    }
    trim(&mut out);
    out
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    let mut out = vec![Rational::new(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(&mut out);
    out
}

/// Division with remainder of polynomials over Q (divisor nonzero, trimmed).
fn poly_divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut r = a.to_vec();
    trim(&mut r);
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let db = b.len() - 1;
    let lc_inv = Rational::from(1) / b[db].clone();
    let mut q = vec![Rational::new(); r.len() - db];
    for i in (0..q.len()).rev() {
        let c = Rational::from(&r[i + db] * &lc_inv);
        if c != 0 {
            for (j, bj) in b.iter().enumerate() {
                r[i + j] -= Rational::from(&c * bj);
            }
        }
        q[i] = c;
    }
    r.truncate(db);
    trim(&mut r);
    trim(&mut q);
    (q, r)
}

/// Resultant of two trimmed, nonzero polynomials over Q by the Euclidean recursion.
pub fn resultant(a: &[Rational], b: &[Rational]) -> Rational {
    let m = a.len() - 1;
    let n = b.len() - 1;
    if n == 0 {
        return b[0].clone().pow(m as u32);
    }
    if m == 0 {
        return a[0].clone().pow(n as u32);
    }
    let (_, r) = poly_divrem(a, b);
    if r.is_empty() {
        return Rational::new();
    }
    let dr = r.len() - 1;
    let sign = if (m * n) % 2 == 1 { -1 } else { 1 };
    let lc = b[n].clone().pow((m - dr) as u32);
    (lc * sign) * resultant(b, &r)
}

use rug::ops::Pow;

impl fmt::Display for CycNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})*z{}", self.order)?,
                _ => write!(f, "({c})*z{}^{i}", self.order)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn small_cyclotomic_polys() {
        assert_eq!(*cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(*cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(*cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        let p105 = cyclotomic_poly(105);
        assert_eq!(p105.len(), 49);
        assert_eq!(p105[7], -2);
    }

    #[test]
    fn embedding_examples() {
        let three = CycNumber::from_int(1, 3).embed_to_order(12).unwrap();
        assert_eq!(three, CycNumber::from_int(12, 3));
        let z3 = CycNumber::root_power(3, 1).embed_to_order(12).unwrap();
        assert_eq!(z3, CycNumber::root_power(12, 4));
        let x = CycNumber::one(5).add(&CycNumber::root_power(5, 1)).embed_to_order(10).unwrap();
        let y = CycNumber::one(10).add(&CycNumber::root_power(10, 2));
        assert_eq!(x, y);
        assert!(CycNumber::one(4).embed_to_order(6).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(CycNumber::from_int(1, 5).norm(), 5);
        assert_eq!(CycNumber::zero(7).norm(), 0);
        for p in [2u64, 3, 5, 7, 11, 13] {
            let x = CycNumber::root_power(p, 1).sub(&CycNumber::one(p));
            // N(ζ − 1) = ±p; the sign is (−1)^{p−1}
            assert_eq!(x.norm().abs(), p as i64);
        }
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(CycNumber::from_int(1, 3).vp(3).unwrap(), ValQ::int(1));
        for (p, m) in [(2u64, 1u32), (2, 3), (3, 2), (5, 1), (5, 2)] {
            let n = p.pow(m);
            let x = CycNumber::root_power(n, 1).sub(&CycNumber::one(n));
            let phi = (n - n / p) as i64;
            assert_eq!(x.vp(p).unwrap(), ValQ::frac(1, phi));
            assert_eq!(x.vp_by_norm(p).unwrap(), ValQ::frac(1, phi));
        }
        assert!(CycNumber::root_power(6, 1).vp(5).is_err());
        assert_eq!(CycNumber::zero(9).vp(3).unwrap(), ValQ::Infinite);
    }

    #[test]
    fn inverse_roundtrip() {
        let x = CycNumber::from_coeffs(9, &[r(2), r(0), r(-1), r(3)]);
        let y = x.inverse().unwrap();
        assert_eq!(x.mul(&y), CycNumber::one(9));
        assert!(CycNumber::zero(9).inverse().is_err());
    }

    #[test]
    fn galois_examples() {
        let x = CycNumber::from_coeffs(8, &[r(1), r(2), r(0), r(5)]);
        assert_eq!(x.galois_apply(1).unwrap(), x);
        assert!(x.galois_apply(2).is_err());
        let a = x.galois_apply(3).unwrap().galois_apply(5).unwrap();
        assert_eq!(a, x.galois_apply(15).unwrap());
    }

    #[test]
    fn embed_unit_and_i() {
        let (v, e) = CycNumber::one(1).complex_embed(1, 100).unwrap();
        assert!(Float::with_val(128, &v.re - 1u32).abs() <= e);
        let (v, e) = CycNumber::root_power(4, 1).complex_embed(1, 100).unwrap();
        assert!(v.re.clone().abs() <= e);
        assert!(Float::with_val(128, &v.im - 1u32).abs() <= e);
    }

    #[test]
    fn embed_abs2_matches_norm_for_quadratic_fields() {
        for n in [3u64, 4] {
            let x = CycNumber::from_coeffs(n, &[r(3), r(-2)]);
            let (v, _) = x.complex_embed(1, 200).unwrap();
            let diff = Float::with_val(200, v.abs2() - x.norm());
            assert!(diff.abs() < 1e-50);
        }
    }
}
