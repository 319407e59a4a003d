//! Taylor–Wiles and Kato prime sieves, their densities, the g-table of unit classes and
//! the census of primitive Dirichlet characters of fixed order.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde_json::{json, Value};

use crate::arith::{divisors, euler_phi, factor, gcd, invmod, mobius, mulmod, primes_up_to, rem_i, vp_u};
use crate::curves::{Curve, Mod2Image};
use crate::error::{Error, Result};
use crate::groupmeasure::rat_string;

#[derive(Clone, Debug, PartialEq)]
pub enum SieveKind {
    TaylorWiles,
    Kato,
}

#[derive(Clone, Debug)]
pub struct SieveReport {
    pub kind: SieveKind,
    pub labels: Vec<String>,
    pub p: u64,
    pub m: u32,
    pub bound: u64,
    pub matches: Vec<u64>,
    /// Primes ℓ ≤ X not dividing any conductor; the density denominator.
    pub considered: u64,
    pub empirical_density: Rational,
    pub predicted_density: Option<Rational>,
}

impl SieveReport {
    /// 95% Wilson score interval for the density.
    pub fn wilson_interval(&self) -> (f64, f64) {
        wilson(self.matches.len() as u64, self.considered, 1.959964)
    }

    pub fn density_f64(&self) -> f64 {
        self.empirical_density.to_f64()
    }

    pub fn to_json(&self) -> Value {
        let (lo, hi) = self.wilson_interval();
        json!({
            "kind": match self.kind { SieveKind::TaylorWiles => "tw", SieveKind::Kato => "kato" },
            "labels": self.labels,
            "p": self.p,
            "m": self.m,
            "bound": self.bound,
            "count": self.matches.len(),
            "considered": self.considered,
            "empirical_density": rat_string(&self.empirical_density),
            "density": self.density_f64(),
            "wilson95": [lo, hi],
            "predicted_density": self.predicted_density.as_ref().map(rat_string),
            "matches": self.matches,
        })
    }

    /// One row per matching prime.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,p,m,ell\n");
        let label = self.labels.join("+");
        for l in &self.matches {
            out.push_str(&format!("{label},{},{},{l}\n", self.p, self.m));
        }
        out
    }
}

pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let ph = k as f64 / n;
    let z2 = z * z;
    let centre = (ph + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (ph * (1.0 - ph) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// The 2-division polynomial 4x³ + b2x² + 2b4x + b6 reduced mod ℓ, leading coefficient first.
fn two_division_mod(curve: &Curve, l: u64) -> [u64; 4] {
    let (b2, b4, b6, _) = curve.b_invariants();
    [4 % l, rem_i(b2, l), rem_i(2 * b4, l), rem_i(b6, l)]
}

fn poly_mulmod(a: &[u64; 3], b: &[u64; 3], f: &[u64; 3], l: u64) -> [u64; 3] {
    // a, b, f low degree first; f is x³ + f2x² + f1x + f0 given as [f0, f1, f2]
    let mut prod = [0u64; 5];
    for i in 0..3 {
        for j in 0..3 {
            prod[i + j] = (prod[i + j] + mulmod(a[i], b[j], l)) % l;
        }
    }
    for k in (3..5).rev() {
        let c = prod[k];
        if c == 0 {
            continue;
        }
        prod[k] = 0;
        for i in 0..3 {
            prod[k - 3 + i] = (prod[k - 3 + i] + l - mulmod(c, f[i], l)) % l;
        }
    }
    [prod[0], prod[1], prod[2]]
}

fn poly_gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>, l: u64) -> usize {
    let trim = |v: &mut Vec<u64>| {
        while v.last() == Some(&0) {
            v.pop();
        }
    };
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let inv = invmod(*b.last().unwrap(), l).unwrap();
        while a.len() >= b.len() {
            let c = mulmod(*a.last().unwrap(), inv, l);
            let shift = a.len() - b.len();
            for (i, &bi) in b.iter().enumerate() {
                a[shift + i] = (a[shift + i] + l - mulmod(c, bi, l)) % l;
            }
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

/// Whether a cubic c0x³ + c1x² + c2x + c3 with c0 ≢ 0 has a root mod an odd prime ℓ.
pub fn cubic_has_root(c: [u64; 4], l: u64) -> bool {
    let inv = invmod(c[0], l).expect("leading coefficient must be a unit");
    let f = [mulmod(c[3], inv, l), mulmod(c[2], inv, l), mulmod(c[1], inv, l)];
    let mut acc = [1u64, 0, 0];
    let mut base = [0u64, 1, 0];
    let mut e = l;
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mulmod(&acc, &base, &f, l);
        }
        base = poly_mulmod(&base, &base, &f, l);
        e >>= 1;
    }
    // gcd(x^ℓ − x, f)
    let g = vec![acc[0], (acc[1] + l - 1) % l, acc[2]];
    let fv = vec![f[0], f[1], f[2], 1];
    poly_gcd_degree(fv, g, l) > 0
}

/// a_ℓ mod 2 without computing a_ℓ: odd exactly when Ẽ(F_ℓ) has no point of order 2.
pub fn ap_is_odd(curve: &Curve, l: u64) -> bool {
    if l == 2 {
        return curve.ap(2) % 2 != 0;
    }
    !cubic_has_root(two_division_mod(curve, l), l)
}

/// v_p(a_ℓ − 2) = 0, with the parity shortcut at p = 2.
fn tw_condition(curve: &Curve, p: u64, l: u64) -> bool {
    if p == 2 {
        ap_is_odd(curve, l)
    } else {
        (curve.ap(l) - 2).rem_euclid(p as i64) != 0
    }
}

fn sieve_primes(curves: &[Curve], bound: u64) -> Vec<u64> {
    primes_up_to(bound).into_iter().filter(|&l| curves.iter().all(|e| e.is_good(l))).collect()
}

fn check_p(p: u64) -> Result<()> {
    if !crate::arith::is_prime(p) {
        return Err(Error::Precondition(format!("p = {p} is not prime")));
    }
    Ok(())
}

/// Joint Taylor–Wiles primes ℓ ≤ X: ℓ ∤ ∏N_i, p^m | ℓ − 1 and p ∤ a_i(ℓ) − 2 for every curve.
pub fn tw_sieve(curves: &[Curve], p: u64, m: u32, bound: u64) -> Result<SieveReport> {
    check_p(p)?;
    if m == 0 {
        return Err(Error::Precondition("m must be at least 1".into()));
    }
    if curves.is_empty() {
        return Err(Error::Precondition("no curves given".into()));
    }
    let pm = p.checked_pow(m).ok_or_else(|| Error::Precondition("p^m overflows".into()))?;
    let primes = sieve_primes(curves, bound);
    let matches: Vec<u64> = primes
        .par_chunks(4096)
        .flat_map_iter(|block| {
            block
                .iter()
                .copied()
                .filter(|&l| l % pm == 1 && curves.iter().all(|e| tw_condition(e, p, l)))
                .collect::<Vec<_>>()
        })
        .collect();
    let considered = primes.len() as u64;
    let predicted = if p == 2 && curves.len() == 1 { Some(predicted_tw_density_mod2(&curves[0], m)) } else { None };
    Ok(SieveReport {
        kind: SieveKind::TaylorWiles,
        labels: curves.iter().map(|e| e.label.clone()).collect(),
        p,
        m,
        bound,
        empirical_density: density(matches.len() as u64, considered),
        matches,
        considered,
        predicted_density: predicted,
    })
}

/// Kato primes ℓ ≤ X: ℓ ∤ N, ℓ ≡ 1 mod p and a_ℓ ≡ 2 mod p.
pub fn kato_sieve(curve: &Curve, p: u64, bound: u64) -> Result<SieveReport> {
    check_p(p)?;
    let primes = sieve_primes(std::slice::from_ref(curve), bound);
    let matches: Vec<u64> = primes
        .par_chunks(4096)
        .flat_map_iter(|block| {
            block.iter().copied().filter(|&l| l % p == 1 && !tw_condition(curve, p, l)).collect::<Vec<_>>()
        })
        .collect();
    let considered = primes.len() as u64;
    let predicted = (p == 2).then(|| Rational::from(1) - predicted_tw_density_mod2(curve, 1));
    Ok(SieveReport {
        kind: SieveKind::Kato,
        labels: vec![curve.label.clone()],
        p,
        m: 1,
        bound,
        empirical_density: density(matches.len() as u64, considered),
        matches,
        considered,
        predicted_density: predicted,
    })
}

fn density(k: u64, n: u64) -> Rational {
    if n == 0 {
        Rational::new()
    } else {
        Rational::from((k, n))
    }
}

/// Chebotarev density of TW(E; 2, m): Frobenius acts on E[2] as a 3-cycle and ℓ ≡ 1 mod 2^m.
pub fn predicted_tw_density_mod2(curve: &Curve, m: u32) -> Rational {
    let cyclo = Rational::from((1, 1u64 << (m - 1)));
    match curve.mod2_image() {
        Mod2Image::Full2Torsion | Mod2Image::OneRationalPoint => Rational::new(),
        Mod2Image::Z3 => Rational::from((2, 3)) * cyclo,
        Mod2Image::S3 => {
            // 3-cycles lie over the split primes of Q(√Δ); ℓ ≡ 1 mod 2^m may already force that
            let d = curve.discriminant_squarefree_part();
            let inside = (d == -1 && m >= 2) || ((d == 2 || d == -2) && m >= 3);
            let split = if inside { cyclo } else { cyclo / 2u32 };
            Rational::from((2, 3)) * split
        }
    }
}

/// g(d, h) = #{a ∈ (Z/d)^× : gcd(a − 1, d) = h}.
pub fn g_table(d: u64, h: u64) -> Result<u64> {
    if d == 0 || h == 0 || !d.is_multiple_of(h) {
        return Err(Error::Precondition(format!("{h} does not divide {d}")));
    }
    let mut out = 1u64;
    for (p, m) in factor(d) {
        let k = vp_u(h, p);
        let pm = |e: u32| p.pow(e);
        out *= if k == 0 {
            pm(m) - 2 * pm(m - 1)
        } else if k < m {
            pm(m - k) - pm(m - k - 1)
        } else {
            1
        };
    }
    Ok(out)
}

/// g(d, h)/φ(d).
pub fn g_density(d: u64, h: u64) -> Result<Rational> {
    Ok(Rational::from((g_table(d, h)?, euler_phi(d))))
}

#[derive(Clone, Debug)]
pub struct CensusReport {
    pub d: u64,
    pub bound: u64,
    pub count: u64,
    pub restrict_primes: Option<Vec<u64>>,
    /// Slope of log(K(x)/x) against log log x over [X/2, X].
    pub fitted_exponent: Option<f64>,
    /// σ₀(d) − 2.
    pub predicted_exponent: i64,
}

impl CensusReport {
    pub fn to_json(&self) -> Value {
        json!({
            "d": self.d,
            "bound": self.bound,
            "count": self.count,
            "restrict_primes": self.restrict_primes,
            "fitted_exponent": self.fitted_exponent,
            "predicted_exponent": self.predicted_exponent,
        })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "d,bound,count,fitted_exponent,predicted_exponent\n{},{},{},{},{}\n",
            self.d,
            self.bound,
            self.count,
            self.fitted_exponent.map(|f| format!("{f:.6}")).unwrap_or_default(),
            self.predicted_exponent
        )
    }
}

/// Cyclic factor orders of (Z/p^e)^×.
fn unit_group_orders(p: u64, e: u32) -> Vec<u64> {
    match (p, e) {
        (_, 0) | (2, 1) => vec![],
        (2, 2) => vec![2],
        (2, _) => vec![2, 1 << (e - 2)],
        _ => vec![(p - 1) * p.pow(e - 1)],
    }
}

/// Number of characters mod p^e of order dividing n.
fn chars_dividing(p: u64, e: u32, n: u64) -> u64 {
    unit_group_orders(p, e).iter().map(|&o| gcd(o, n)).product()
}

/// Primitive characters mod p^e of order dividing n.
fn primitive_dividing(p: u64, e: u32, n: u64) -> u64 {
    chars_dividing(p, e, n) - chars_dividing(p, e - 1, n)
}

/// Adds Σ_{f ≤ X} sign·#{primitive χ of conductor f, χ^n = 1} into `cnt[f]`.
fn accumulate(cnt: &mut [i64], primes: &[u64], n: u64, sign: i64) {
    let x = (cnt.len() - 1) as u64;
    cnt[1] += sign;
    let mut stack: Vec<(usize, u64, i64)> = vec![(0, 1, sign)];
    while let Some((start, f, w)) = stack.pop() {
        for (i, &p) in primes.iter().enumerate().skip(start) {
            if f * p > x {
                break;
            }
            let mut pe = p;
            let mut e = 1u32;
            while f * pe <= x {
                let c = primitive_dividing(p, e, n) as i64;
                if c > 0 {
                    let g = f * pe;
                    cnt[g as usize] += w * c;
                    stack.push((i + 1, g, w * c));
                } else if e >= 2 && !n.is_multiple_of(p) {
                    break;
                }
                match pe.checked_mul(p) {
                    Some(v) => pe = v,
                    None => break,
                }
                e += 1;
            }
        }
    }
}

/// K_d(x) for every x ≤ X: primitive characters of order exactly d and conductor ≤ x.
pub fn census_counts(d: u64, bound: u64, restrict_primes: Option<&[u64]>) -> Result<Vec<u64>> {
    if d < 2 {
        return Err(Error::Precondition("order must be at least 2".into()));
    }
    let primes: Vec<u64> = match restrict_primes {
        None => primes_up_to(bound),
        Some(r) => {
            let mut v: Vec<u64> = r.iter().copied().filter(|&p| p <= bound).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    };
    let mut cnt = vec![0i64; bound.max(1) as usize + 1];
    for n in divisors(d) {
        let mu = mobius(d / n);
        if mu != 0 {
            accumulate(&mut cnt, &primes, n, mu);
        }
    }
    let mut out = Vec::with_capacity(cnt.len());
    let mut run = 0i64;
    for c in cnt {
        run += c;
        debug_assert!(run >= 0);
        out.push(run as u64);
    }
    out[0] = 0;
    Ok(out)
}

pub fn char_census(d: u64, bound: u64, restrict_primes: Option<&[u64]>) -> Result<CensusReport> {
    let counts = census_counts(d, bound, restrict_primes)?;
    Ok(CensusReport {
        d,
        bound,
        count: counts[bound as usize],
        restrict_primes: restrict_primes.map(|r| r.to_vec()),
        fitted_exponent: fit_log_exponent(&counts),
        predicted_exponent: divisors(d).len() as i64 - 2,
    })
}

/// Least-squares slope of log(K(x)/x) on log log x at 33 geometric points of [X/2, X].
fn fit_log_exponent(counts: &[u64]) -> Option<f64> {
    let x = (counts.len() - 1) as f64;
    if x < 64.0 {
        return None;
    }
    let mut pts = Vec::new();
    for i in 0..=32 {
        let t = (x / 2.0) * 2f64.powf(i as f64 / 32.0);
        let xi = (t as usize).min(counts.len() - 1);
        let k = counts[xi];
        if k == 0 {
            return None;
        }
        pts.push(((xi as f64).ln().ln(), (k as f64 / xi as f64).ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug)]
pub struct AlphaReport {
    pub p: u64,
    pub m: u32,
    pub bound: u64,
    /// Empirical d(TW(·; p, k)) for k = 1..m.
    pub densities: Vec<Rational>,
    pub alpha: Rational,
    /// d(TW(·; 2, 1))/2^{m−1}, reported for p = 2.
    pub tw2_lower_bound: Option<Rational>,
}

/// α = Σ_{k=1}^m (p^k − p^{k−1})·d(TW(·; p, k)) with empirical densities at the bound.
pub fn alpha_exponent(curves: &[Curve], p: u64, m: u32, bound: u64) -> Result<AlphaReport> {
    let mut densities = Vec::new();
    let mut alpha = Rational::new();
    for k in 1..=m {
        let r = tw_sieve(curves, p, k, bound)?;
        let w = Integer::from(p).pow(k) - Integer::from(p).pow(k - 1);
        alpha += Rational::from(&r.empirical_density * w);
        densities.push(r.empirical_density);
    }
    let tw2_lower_bound = (p == 2).then(|| Rational::from(&densities[0] / (1u64 << (m - 1))));
    Ok(AlphaReport { p, m, bound, densities, alpha, tw2_lower_bound })
}
