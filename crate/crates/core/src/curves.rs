//! Elliptic curves over Q: Hecke eigenvalues by point counting, coefficient tables,
//! torsion, Néron periods and the mod-2 image.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::arith::{factor, gcd, primes_up_to, spf_table};
use crate::error::{Error, Result};
use crate::fpcurve;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BadType {
    Split,
    Nonsplit,
    Additive,
}

impl BadType {
    /// a_ℓ at a prime of bad reduction.
    pub fn ap(self) -> i64 {
        match self {
            BadType::Split => 1,
            BadType::Nonsplit => -1,
            BadType::Additive => 0,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "split" => Some(BadType::Split),
            "nonsplit" => Some(BadType::Nonsplit),
            "additive" => Some(BadType::Additive),
            _ => None,
        }
    }
}

impl fmt::Display for BadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BadType::Split => "split",
            BadType::Nonsplit => "nonsplit",
            BadType::Additive => "additive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mod2Image {
    Full2Torsion,
    OneRationalPoint,
    Z3,
    S3,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub ainvs: [i64; 5],
    pub conductor: u64,
    pub bad_reduction: BTreeMap<u64, BadType>,
    /// Manin constant, 1 for the bundled optimal curves.
    pub manin: u64,
}

/// Good primes from here on are counted by baby-step giant-step.
const BSGS_FROM: u64 = 1000;

/// Primes ℓ | N up to this bound have their reduction type recounted during validation.
const BAD_RECOUNT_LIMIT: u64 = 1 << 20;

impl Curve {
    pub fn new(
        label: &str,
        ainvs: [i64; 5],
        conductor: u64,
        bad_reduction: BTreeMap<u64, BadType>,
        manin: u64,
    ) -> Result<Self> {
        let c = Curve { label: label.to_string(), ainvs, conductor, bad_reduction, manin };
        c.validate()?;
        Ok(c)
    }

    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::Validation { label: self.label.clone(), msg: msg.into() }
    }

    fn validate(&self) -> Result<()> {
        let d = self.discriminant();
        if d == 0 {
            return Err(self.fail("singular model (discriminant 0)"));
        }
        if self.conductor == 0 || self.manin == 0 {
            return Err(self.fail("conductor and Manin constant must be positive"));
        }
        let nf = factor(self.conductor);
        let mut dprimes: Vec<u64> = Vec::new();
        for (p, _) in &nf {
            if Integer::from(&d % *p) != 0 {
                return Err(self.fail(format!("{p} divides the conductor but not the discriminant")));
            }
        }
        let mut rest = Integer::from(d.abs_ref());
        for (p, _) in &nf {
            while Integer::from(&rest % *p) == 0 {
                rest /= *p;
            }
            dprimes.push(*p);
        }
        if rest != 1 {
            return Err(self.fail(format!("discriminant has bad primes outside the conductor (cofactor {rest})")));
        }
        let keys: Vec<u64> = self.bad_reduction.keys().copied().collect();
        if keys != dprimes {
            return Err(self.fail(format!("bad-reduction primes {keys:?} differ from conductor primes {dprimes:?}")));
        }
        for (p, e) in nf {
            let t = self.bad_reduction[&p];
            if (t == BadType::Additive) != (e >= 2) {
                return Err(self.fail(format!("{p}^{e} in the conductor is inconsistent with {t} reduction")));
            }
            if p <= BAD_RECOUNT_LIMIT {
                let counted = self.ap_by_count(p);
                if counted != t.ap() {
                    return Err(self.fail(format!("point count at {p} gives a_p = {counted}, catalog says {t}")));
                }
            }
        }
        Ok(())
    }

    pub fn b_invariants(&self) -> (i64, i64, i64, i64) {
        let [a1, a2, a3, a4, a6] = self.ainvs;
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        (b2, b4, b6, b8)
    }

    pub fn c_invariants(&self) -> (Integer, Integer) {
        let (b2, b4, b6, _) = self.b_invariants();
        let (b2, b4, b6) = (Integer::from(b2), Integer::from(b4), Integer::from(b6));
        let c4 = Integer::from(&b2 * &b2) - 24 * b4.clone();
        let c6 = -b2.clone().pow(3) + 36 * Integer::from(&b2 * &b4) - 216 * b6;
        (c4, c6)
    }

    pub fn discriminant(&self) -> Integer {
        let (b2, b4, b6, b8) = self.b_invariants();
        let (b2, b4, b6, b8) = (Integer::from(b2), Integer::from(b4), Integer::from(b6), Integer::from(b8));
        -Integer::from(&b2 * &b2) * &b8 - 8 * b4.clone().pow(3) - 27 * Integer::from(&b6 * &b6)
            + 9 * Integer::from(&b2 * &b4) * &b6
    }

    pub fn is_good(&self, ell: u64) -> bool {
        !self.conductor.is_multiple_of(ell)
    }

    /// a_ℓ; the bad-reduction value at primes dividing N.
    pub fn ap(&self, ell: u64) -> i64 {
        if let Some(t) = self.bad_reduction.get(&ell) {
            return t.ap();
        }
        if ell >= BSGS_FROM {
            let (c4, c6) = self.c_invariants();
            let red = |v: Integer| -> u64 {
                let r = v % ell;
                (if r < 0 { r + ell } else { r }).to_u64().unwrap()
            };
            // y² = x³ − 27c4·x − 54c6 has the same number of points for ℓ > 3
            let a = red(-27 * c4);
            let b = red(-54 * c6);
            if let Some(n) = fpcurve::group_order(a, b, ell) {
                return ell as i64 + 1 - n as i64;
            }
        }
        self.ap_by_count(ell)
    }

    /// ℓ + 1 − #Ẽ(F_ℓ), counting the singular point when there is one.
    fn ap_by_count(&self, ell: u64) -> i64 {
        if ell == 2 {
            let [a1, a2, a3, a4, a6] = self.ainvs;
            let mut n = 1i64;
            for x in 0..2i64 {
                for y in 0..2i64 {
                    let lhs = y * y + a1 * x * y + a3 * y;
                    let rhs = x * x * x + a2 * x * x + a4 * x + a6;
                    if (lhs - rhs).rem_euclid(2) == 0 {
                        n += 1;
                    }
                }
            }
            return 3 - n;
        }
        // a_ℓ = −Σ_x (f(x)/ℓ) with f = 4x³ + b2x² + 2b4x + b6, by finite differences
        let (b2, b4, b6, _) = self.b_invariants();
        let l = ell as i64;
        let r = |v: i64| v.rem_euclid(l) as u64;
        let leg = legendre_table(ell);
        let f0 = r(b6);
        // f(1) − f(0), second and third differences
        let mut f = f0;
        let mut d1 = r(4 + b2 + 2 * b4);
        let mut d2 = r(24 + 2 * b2);
        let d3 = r(24);
        let mut s = 0i64;
        let step = |x: u64, d: u64| if x + d >= ell { x + d - ell } else { x + d };
        for _ in 0..ell {
            s += leg[f as usize] as i64;
            f = step(f, d1);
            d1 = step(d1, d2);
            d2 = step(d2, d3);
        }
        -s
    }

    /// a_1, …, a_{n_max} (index 0 unused).
    pub fn an_table(&self, n_max: usize) -> CoeffTable {
        let mut a = vec![0i64; n_max + 1];
        if n_max >= 1 {
            a[1] = 1;
        }
        let primes = primes_up_to(n_max as u64);
        let aps: Vec<(u64, i64)> = primes.par_iter().map(|&p| (p, self.ap(p))).collect();
        let spf = spf_table(n_max + 1);
        let mut ap_of = vec![0i64; n_max + 1];
        for (p, v) in aps {
            ap_of[p as usize] = v;
        }
        for n in 2..=n_max {
            let p = spf[n] as usize;
            let mut m = n;
            let mut pk = 1usize;
            while m % p == 0 {
                m /= p;
                pk *= p;
            }
            a[n] = if m > 1 {
                a[pk] * a[m]
            } else if pk == p {
                ap_of[p]
            } else {
                let good = self.is_good(p as u64);
                let prev = a[pk / p];
                let prev2 = a[pk / p / p];
                ap_of[p] * prev - if good { p as i64 * prev2 } else { 0 }
            };
        }
        CoeffTable { label: self.label.clone(), a }
    }

    /// Candidate torsion bound gcd #Ẽ(F_ℓ) over the first `count` good odd primes.
    pub fn torsion_bound(&self, count: usize) -> u64 {
        let mut g = 0u64;
        let mut seen = 0;
        let mut ell = 3u64;
        while seen < count {
            if crate::arith::is_prime(ell) && self.is_good(ell) {
                g = gcd(g, (ell as i64 + 1 - self.ap(ell)) as u64);
                seen += 1;
            }
            ell += 2;
        }
        g
    }

    /// Rational torsion points other than O, on the model Y² = X³ − 27c4·X − 54c6.
    pub fn torsion_points_short(&self) -> Vec<(Integer, Integer)> {
        let (c4, c6) = self.c_invariants();
        let a = Integer::from(-27) * c4;
        let b = Integer::from(-54) * c6;
        let disc = Integer::from(-16) * (4 * a.clone().pow(3) + 27 * Integer::from(&b * &b));
        let mut ys = vec![Integer::new()];
        for y in square_divisor_roots(&disc) {
            ys.push(y.clone());
            ys.push(-y);
        }
        let mut pts = Vec::new();
        for y in ys {
            let c = &b - Integer::from(&y * &y);
            for x in integer_roots_cubic(&Integer::new(), &a, &c) {
                let p = ShortPoint::Affine(Rational::from(x.clone()), Rational::from(y.clone()));
                if short_point_order(&p, &a, 12).is_some() {
                    pts.push((x, y.clone()));
                }
            }
        }
        pts
    }

    /// #E(Q)_tors.
    pub fn torsion_order(&self) -> u64 {
        let n = 1 + self.torsion_points_short().len() as u64;
        let bound = self.torsion_bound(20);
        assert_eq!(bound % n, 0, "{}: torsion {n} does not divide the reduction bound {bound}", self.label);
        n
    }

    /// Real and imaginary Néron periods, as positive reals.
    pub fn periods(&self, precision: u32) -> Periods {
        let wp = precision + 40;
        let (b2, b4, b6, _) = self.b_invariants();
        let coeffs = [4.0, b2 as f64, 2.0 * b4 as f64, b6 as f64];
        let mut roots = real_cubic_roots_f64(coeffs);
        let big = [Float::with_val(wp, 4), Float::with_val(wp, b2), Float::with_val(wp, 2 * b4), Float::with_val(wp, b6)];
        let mut e: Vec<Float> = roots.drain(..).map(|r| newton_cubic(&big, Float::with_val(wp, r))).collect();
        e.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let pi = Float::with_val(wp, Constant::Pi);
        let positive = self.discriminant() > 0;
        let (omega_plus, omega_minus) = if positive {
            assert_eq!(e.len(), 3, "{}: positive discriminant needs three real roots", self.label);
            let s13 = Float::with_val(wp, &e[0] - &e[2]).sqrt();
            let s12 = Float::with_val(wp, &e[0] - &e[1]).sqrt();
            let s23 = Float::with_val(wp, &e[1] - &e[2]).sqrt();
            let w1 = Float::with_val(wp, &pi / agm(&s13, &s12, wp));
            let w2 = Float::with_val(wp, &pi / agm(&s13, &s23, wp));
            (w1 * 2u32, w2 * 2u32)
        } else {
            assert_eq!(e.len(), 1, "{}: negative discriminant needs one real root", self.label);
            let e1 = &e[0];
            let a = Float::with_val(wp, e1 * 3u32) + Float::with_val(wp, b2) / 4u32;
            let bsq = Float::with_val(wp, e1 * e1) * 3u32 + Float::with_val(wp, e1 * b2) / 2u32 + Float::with_val(wp, b4) / 2u32;
            let b = bsq.sqrt();
            let two_sqrt_b = Float::with_val(wp, b.clone().sqrt() * 2u32);
            let s_plus = Float::with_val(wp, Float::with_val(wp, &b * 2u32) + &a).sqrt();
            let s_minus = Float::with_val(wp, Float::with_val(wp, &b * 2u32) - &a).sqrt();
            let w1 = Float::with_val(wp, Float::with_val(wp, &pi * 2u32) / agm(&two_sqrt_b, &s_plus, wp));
            let im2 = Float::with_val(wp, &pi / agm(&two_sqrt_b, &s_minus, wp));
            (w1, im2 * 2u32)
        };
        Periods {
            omega_plus: Float::with_val(precision, omega_plus),
            omega_minus: Float::with_val(precision, omega_minus),
            real_components: if positive { 2 } else { 1 },
        }
    }

    /// Rational roots of the 2-division polynomial (as x-coordinates).
    pub fn two_torsion_x(&self) -> Vec<Rational> {
        let (b2, b4, b6, _) = self.b_invariants();
        // 16·(4x³ + b2x² + 2b4x + b6) = X³ + b2X² + 8b4X + 16b6 with X = 4x
        let roots = integer_roots_cubic(&Integer::from(b2), &Integer::from(8 * b4), &Integer::from(16 * b6));
        roots.into_iter().map(|r| Rational::from((r, 4))).collect()
    }

    pub fn mod2_image(&self) -> Mod2Image {
        match self.two_torsion_x().len() {
            3 => Mod2Image::Full2Torsion,
            1 => Mod2Image::OneRationalPoint,
            0 => {
                if self.discriminant().is_perfect_square() {
                    Mod2Image::Z3
                } else {
                    Mod2Image::S3
                }
            }
            n => unreachable!("a cubic has 0, 1 or 3 rational roots, found {n}"),
        }
    }

    /// Squarefree part of the discriminant, with sign; Q(√Δ) = Q(√d).
    pub fn discriminant_squarefree_part(&self) -> i64 {
        let d = self.discriminant();
        let sign = if d < 0 { -1 } else { 1 };
        let mut rest = Integer::from(d.abs_ref());
        let mut out = 1i64;
        for p in self.bad_reduction.keys().chain([2u64, 3].iter()) {
            let mut e = 0;
            while Integer::from(&rest % *p) == 0 {
                rest /= *p;
                e += 1;
            }
            if e % 2 == 1 {
                out *= *p as i64;
            }
        }
        assert_eq!(rest, 1);
        sign * out
    }
}

fn legendre_table(ell: u64) -> Vec<i8> {
    let mut t = vec![-1i8; ell as usize];
    t[0] = 0;
    // (y+1)² = y² + 2y + 1
    let mut sq = 0u64;
    for y in 0..ell / 2 {
        sq += 2 * y + 1;
        while sq >= ell {
            sq -= ell;
        }
        t[sq as usize] = 1;
    }
    t
}

#[derive(Clone, Debug)]
pub struct Periods {
    pub omega_plus: Float,
    /// |Ω⁻|, the imaginary Néron period divided by i.
    pub omega_minus: Float,
    pub real_components: u8,
}

/// Arithmetic–geometric mean of positive reals.
pub fn agm(a: &Float, b: &Float, prec: u32) -> Float {
    let mut a = Float::with_val(prec, a);
    let mut b = Float::with_val(prec, b);
    for _ in 0..(prec as usize + 64) {
        let diff = Float::with_val(prec, &a - &b).abs();
        if diff.is_zero() || diff.get_exp().unwrap_or(i32::MIN) < a.get_exp().unwrap_or(0) - prec as i32 + 2 {
            return a;
        }
        let na = Float::with_val(prec, &a + &b) / 2u32;
        let nb = Float::with_val(prec, &a * &b).sqrt();
        a = na;
        b = nb;
    }
    panic!("AGM did not converge");
}

fn newton_cubic(c: &[Float; 4], mut x: Float) -> Float {
    let prec = x.prec();
    for _ in 0..200 {
        let f = Float::with_val(prec, &c[0] * &x) + &c[1];
        let f = Float::with_val(prec, f * &x) + &c[2];
        let f = Float::with_val(prec, f * &x) + &c[3];
        let df = Float::with_val(prec, &c[0] * &x) * 3u32 + Float::with_val(prec, &c[1] * 2u32);
        let df = Float::with_val(prec, df * &x) + &c[2];
        if df.is_zero() {
            break;
        }
        let step = Float::with_val(prec, &f / &df);
        x -= &step;
        if step.is_zero() || step.get_exp().unwrap_or(i32::MIN) < x.get_exp().unwrap_or(0) - prec as i32 - 2 {
            break;
        }
    }
    x
}

/// Real roots of c0x³ + c1x² + c2x + c3 (c0 ≠ 0), to double precision, ascending.
pub fn real_cubic_roots_f64(c: [f64; 4]) -> Vec<f64> {
    let (a, b, cc) = (c[1] / c[0], c[2] / c[0], c[3] / c[0]);
    let f = |x: f64| ((x + a) * x + b) * x + cc;
    let bound = 1.0 + a.abs().max(b.abs()).max(cc.abs());
    // critical points split the line into monotone pieces
    let disc = a * a - 3.0 * b;
    let mut cuts = vec![-bound];
    if disc > 0.0 {
        let s = disc.sqrt();
        cuts.push((-a - s) / 3.0);
        cuts.push((-a + s) / 3.0);
    }
    cuts.push(bound);
    let mut roots: Vec<f64> = Vec::new();
    for w in cuts.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            if fhi == 0.0 {
                roots.push(hi);
            }
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * (1.0 + x.abs()));
    roots
}

/// Distinct integer roots of X³ + aX² + bX + c.
fn integer_roots_cubic(a: &Integer, b: &Integer, c: &Integer) -> Vec<Integer> {
    let eval = |x: &Integer| -> Integer {
        let t = Integer::from(x + a) * x + b;
        Integer::from(&t * x) + c
    };
    let approx = real_cubic_roots_f64([1.0, a.to_f64(), b.to_f64(), c.to_f64()]);
    let mut out: Vec<Integer> = Vec::new();
    for r in approx {
        let centre = Integer::from_f64(r.round()).unwrap_or_default();
        let spread = 2 + (r.abs() * 1e-9) as i64;
        for d in -spread..=spread {
            let x = Integer::from(&centre + d);
            if eval(&x) == 0 && !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out.sort();
    out
}

/// Positive y with y² | n.
fn square_divisor_roots(n: &Integer) -> Vec<Integer> {
    let mut rest = Integer::from(n.abs_ref());
    let mut fac: Vec<(u64, u32)> = Vec::new();
    for p in [2u64, 3] {
        let mut e = 0;
        while Integer::from(&rest % p) == 0 && rest != 0 {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            fac.push((p, e));
        }
    }
    let r = rest.to_u64().expect("cofactor fits in 64 bits");
    fac.extend(factor(r));
    let mut ys = vec![Integer::from(1)];
    for (p, e) in fac {
        let mut next = Vec::new();
        for y in &ys {
            let mut pk = Integer::from(1);
            for _ in 0..=e / 2 {
                next.push(Integer::from(y * &pk));
                pk *= p;
            }
        }
        ys = next;
    }
    ys
}

#[derive(Clone, Debug, PartialEq)]
enum ShortPoint {
    Infinity,
    Affine(Rational, Rational),
}

fn short_add(p: &ShortPoint, q: &ShortPoint, a: &Integer) -> ShortPoint {
    match (p, q) {
        (ShortPoint::Infinity, _) => q.clone(),
        (_, ShortPoint::Infinity) => p.clone(),
        (ShortPoint::Affine(x1, y1), ShortPoint::Affine(x2, y2)) => {
            let lam = if x1 == x2 {
                if Rational::from(y1 + y2) == 0 {
                    return ShortPoint::Infinity;
                }
                (Rational::from(x1 * x1) * 3u32 + a) / Rational::from(y1 * 2u32)
            } else {
                Rational::from(y2 - y1) / Rational::from(x2 - x1)
            };
            let x3 = Rational::from(&lam * &lam) - x1 - x2;
            let y3 = lam * Rational::from(x1 - &x3) - y1;
            ShortPoint::Affine(x3, y3)
        }
    }
}

/// Order of p if it is at most `max`, else None.
fn short_point_order(p: &ShortPoint, a: &Integer, max: u64) -> Option<u64> {
    let mut q = p.clone();
    for k in 1..=max {
        if q == ShortPoint::Infinity {
            return Some(k);
        }
        if let ShortPoint::Affine(x, y) = &q {
            // torsion points stay integral on this model
            if *x.denom() != 1 || *y.denom() != 1 {
                return None;
            }
        }
        q = short_add(&q, p, a);
    }
    None
}

/// a_E(1..n_max) for one curve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffTable {
    pub label: String,
    a: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffHeader {
    label: String,
    n_max: usize,
    version: u32,
}

const COEFF_CACHE_VERSION: u32 = 1;

impl CoeffTable {
    pub fn n_max(&self) -> usize {
        self.a.len() - 1
    }

    pub fn get(&self, n: usize) -> i64 {
        self.a[n]
    }

    /// Coefficients with a[0] = 0 as placeholder.
    pub fn as_slice(&self) -> &[i64] {
        &self.a
    }

    /// Binary little-endian i64 file plus a JSON header sidecar.
    pub fn write_cache(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let stem = dir.join(format!("{}.an", self.label));
        let mut bytes = Vec::with_capacity(8 * self.a.len());
        for v in &self.a[1..] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(stem.with_extension("an.bin"), bytes)?;
        let h = CoeffHeader { label: self.label.clone(), n_max: self.n_max(), version: COEFF_CACHE_VERSION };
        std::fs::write(stem.with_extension("an.json"), serde_json::to_vec(&h)?)?;
        Ok(())
    }

    /// Cached table if present with at least `n_max` entries.
    pub fn read_cache(dir: &Path, label: &str, n_max: usize) -> Result<Option<CoeffTable>> {
        let stem = dir.join(format!("{label}.an"));
        let hp = stem.with_extension("an.json");
        if !hp.exists() {
            return Ok(None);
        }
        let h: CoeffHeader = serde_json::from_slice(&std::fs::read(hp)?)?;
        if h.version != COEFF_CACHE_VERSION || h.label != label || h.n_max < n_max {
            return Ok(None);
        }
        let bytes = std::fs::read(stem.with_extension("an.bin"))?;
        if bytes.len() != 8 * h.n_max {
            return Ok(None);
        }
        let mut a = vec![0i64; n_max + 1];
        for (i, chunk) in bytes.chunks_exact(8).take(n_max).enumerate() {
            a[i + 1] = i64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(Some(CoeffTable { label: label.to_string(), a }))
    }
}

const BUNDLED: &str = include_str!("../data/catalog.csv");

/// The catalog shipped with the library.
pub fn bundled_catalog() -> Vec<Curve> {
    parse_catalog(BUNDLED).expect("bundled catalog is valid")
}

pub fn find_curve(catalog: &[Curve], label: &str) -> Option<Curve> {
    catalog.iter().find(|c| c.label == label).cloned()
}

pub fn load_catalog(path: &Path) -> Result<Vec<Curve>> {
    parse_catalog(&std::fs::read_to_string(path)?)
}

/// CSV with columns label,a1,a2,a3,a4,a6,conductor,bad_types[,manin];
/// bad_types like `2:additive;7:split`.
pub fn parse_catalog(text: &str) -> Result<Vec<Curve>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') || line.starts_with("label,") {
            continue;
        }
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 8 && cols.len() != 9 {
            return Err(err(format!("expected 8 or 9 columns, found {}", cols.len())));
        }
        let mut ainvs = [0i64; 5];
        for (k, slot) in ainvs.iter_mut().enumerate() {
            *slot = cols[1 + k].parse().map_err(|_| err(format!("bad integer {:?}", cols[1 + k])))?;
        }
        let conductor: u64 = cols[6].parse().map_err(|_| err(format!("bad conductor {:?}", cols[6])))?;
        let mut bad = BTreeMap::new();
        for item in cols[7].split(';').filter(|s| !s.trim().is_empty()) {
            let (p, t) = item.split_once(':').ok_or_else(|| err(format!("bad reduction entry {item:?}")))?;
            let p: u64 = p.trim().parse().map_err(|_| err(format!("bad prime {p:?}")))?;
            let t = BadType::parse(t).ok_or_else(|| err(format!("unknown reduction type {t:?}")))?;
            bad.insert(p, t);
        }
        let manin = match cols.get(8) {
            Some(m) => m.parse().map_err(|_| err(format!("bad Manin constant {m:?}")))?,
            None => 1,
        };
        out.push(Curve::new(cols[0], ainvs, conductor, bad, manin)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(label: &str) -> Curve {
        find_curve(&bundled_catalog(), label).unwrap()
    }

    #[test]
    fn catalog_loads() {
        let cat = bundled_catalog();
        assert_eq!(cat.len(), 20);
        assert!(parse_catalog("").unwrap().is_empty());
        let bad = "label,a1,a2,a3,a4,a6,conductor,bad_types\n11a1,0,-1,x,-10,-20,11,11:split\n";
        assert!(matches!(parse_catalog(bad), Err(Error::Parse { line: 2, .. })));
        let wrong = "11a1,0,-1,1,-10,-20,11,11:nonsplit\n";
        assert!(matches!(parse_catalog(wrong), Err(Error::Validation { .. })));
    }

    #[test]
    fn small_coefficients_11a1() {
        let t = curve("11a1").an_table(12);
        let want = [1, -2, -1, 2, 1, 2, -2, 0, -2, -2, 1, -2];
        assert_eq!(&t.as_slice()[1..], &want);
    }

    #[test]
    fn torsion_orders() {
        for (l, t) in [("11a1", 5), ("14a1", 6), ("15a1", 8), ("30a1", 6), ("37a1", 1), ("36a1", 6), ("196a1", 1)] {
            assert_eq!(curve(l).torsion_order(), t, "{l}");
        }
    }

    #[test]
    fn periods_11a1() {
        let p = curve("11a1").periods(128);
        assert!((p.omega_plus.to_f64() - 1.269_209_304_279_553).abs() < 1e-12);
        assert!(p.omega_minus.to_f64() > 0.0);
    }

    #[test]
    fn mod2_images() {
        assert_eq!(curve("196a1").mod2_image(), Mod2Image::Z3);
        assert_eq!(curve("11a1").mod2_image(), Mod2Image::S3);
        assert_eq!(curve("14a1").mod2_image(), Mod2Image::OneRationalPoint);
        assert_eq!(curve("15a1").mod2_image(), Mod2Image::Full2Torsion);
    }
}
