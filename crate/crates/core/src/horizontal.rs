//! Theta elements, their pushforwards to p-power digit groups, Euler-factor inversion at
//! Taylor–Wiles primes, and finite truncations ν_A of the horizontal p-adic L-function.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::arith::{crt, dlog_table, gcd, is_prime, primitive_root, vp_u};
use crate::curves::Curve;
use crate::cyclotomic::CycNumber;
use crate::dirichlet::DirichletGroup;
use crate::error::{Error, Result};
use crate::groupmeasure::{parse_rat, rat_string, Character, GroupShape, Measure, MAX_GROUP_SIZE};
use crate::modsym::ModularSymbols;

/// ℓ ∤ N, ℓ ≡ 1 mod p and a_ℓ − 2 a p-unit.
pub fn is_tw_prime(curve: &Curve, p: u64, ell: u64) -> bool {
    is_prime(ell) && curve.is_good(ell) && ell % p == 1 && (curve.ap(ell) - 2).rem_euclid(p as i64) != 0
}

/// ℓ ∤ N, ℓ ≡ 1 mod p and p | #E(F_ℓ), i.e. a_ℓ ≡ 2 mod p.
pub fn is_kato_prime(curve: &Curve, p: u64, ell: u64) -> bool {
    is_prime(ell) && curve.is_good(ell) && ell % p == 1 && (curve.ap(ell) - 2).rem_euclid(p as i64) == 0
}

fn check_primes(curve: &Curve, primes: &[u64]) -> Result<()> {
    for (i, &l) in primes.iter().enumerate() {
        if !is_prime(l) {
            return Err(Error::Precondition(format!("{l} is not prime")));
        }
        if !curve.is_good(l) {
            return Err(Error::Precondition(format!("{l} divides the conductor of {}", curve.label)));
        }
        if primes[..i].contains(&l) {
            return Err(Error::Precondition(format!("{l} repeated")));
        }
    }
    Ok(())
}

/// θ^±_L = Σ_{a ∈ (Z/L)^×} L^±(a/L)[a], on the shape [ℓ_1−1, …] via smallest primitive roots.
#[derive(Clone, Debug)]
pub struct ThetaTruncation {
    pub label: String,
    pub primes: Vec<u64>,
    pub generators: Vec<u64>,
    pub sign: i64,
    pub measure: Measure,
}

impl ThetaTruncation {
    pub fn modulus(&self) -> u64 {
        self.primes.iter().product()
    }

    /// Exponent vector of a unit a mod L.
    pub fn coordinates(&self, a: u64) -> Vec<u64> {
        coordinates(&self.primes, &self.generators, a)
    }
}

fn coordinates(primes: &[u64], gens: &[u64], a: u64) -> Vec<u64> {
    primes
        .iter()
        .zip(gens)
        .map(|(&l, &g)| {
            let target = a % l;
            let mut x = 1u64;
            let mut k = 0u64;
            while x != target {
                x = x * g % l;
                k += 1;
            }
            k
        })
        .collect()
}

pub fn theta_element(ms: &ModularSymbols, primes: &[u64], sign: i64) -> Result<ThetaTruncation> {
    check_primes(ms.curve(), primes)?;
    let shape = GroupShape::new(primes.iter().map(|l| l - 1).collect())?;
    let generators: Vec<u64> = primes.iter().map(|&l| primitive_root(l)).collect();
    let logs: Vec<Vec<u64>> = primes.iter().zip(&generators).map(|(&l, &g)| dlog_table(l, g)).collect();
    let l: u64 = primes.iter().product();
    let norm = Rational::from(ms.normalization());
    let mut measure = Measure::zero(&shape);
    for (a, v) in ms.symbols_mod(l)? {
        let x: Vec<u64> = primes.iter().zip(&logs).map(|(&q, t)| t[(a % q) as usize]).collect();
        measure.set(&x, Rational::from(v.part(sign) * &norm));
    }
    Ok(ThetaTruncation { label: ms.curve().label.clone(), primes: primes.to_vec(), generators, sign, measure })
}

#[derive(Clone, Debug)]
pub struct ThetaNormReport {
    pub pushed: Measure,
    pub predicted: Measure,
}

impl ThetaNormReport {
    pub fn holds(&self) -> bool {
        self.pushed == self.predicted
    }
}

/// π_A(θ_L) against ∏_{ℓ ∈ drop}(a_ℓ − [ℓ] − [ℓ̄])·θ_{L_A}.
pub fn verify_theta_norm_relation(ms: &ModularSymbols, primes: &[u64], drop: &[u64], sign: i64) -> Result<ThetaNormReport> {
    if drop.iter().any(|d| !primes.contains(d)) {
        return Err(Error::Precondition("drop set must be a subset of the primes".into()));
    }
    let full = theta_element(ms, primes, sign)?;
    let kept: Vec<u64> = primes.iter().copied().filter(|l| !drop.contains(l)).collect();
    let sub = theta_element(ms, &kept, sign)?;
    let keep_idx: Vec<usize> = (0..primes.len()).filter(|&i| !drop.contains(&primes[i])).collect();
    let pushed = full.measure.pushforward_by(sub.measure.shape(), |x| keep_idx.iter().map(|&i| x[i]).collect());
    let shape = sub.measure.shape().clone();
    let mut predicted = sub.measure.clone();
    for &ell in drop {
        let fwd = sub.coordinates(ell);
        let back: Vec<u64> = fwd.iter().zip(shape.orders()).map(|(&x, &o)| (o - x) % o).collect();
        let mut factor = Measure::identity(&shape).scale(&Rational::from(ms.curve().ap(ell)));
        factor.add_at(&fwd, &Rational::from(-1));
        factor.add_at(&back, &Rational::from(-1));
        predicted = predicted.convolve(&factor)?;
    }
    Ok(ThetaNormReport { pushed, predicted })
}

/// a_ℓ·δ_0 − [σ] − [−σ] on a p-primary shape; requires ℓ ∈ TW(E; p).
pub fn euler_unit(curve: &Curve, p: u64, ell: u64, shape: &GroupShape, sigma: &[u64]) -> Result<Measure> {
    if !is_tw_prime(curve, p, ell) {
        return Err(Error::Precondition(format!("{ell} is not a Taylor–Wiles prime for {} at p = {p}", curve.label)));
    }
    let mut m = Measure::identity(shape).scale(&Rational::from(curve.ap(ell)));
    let neg: Vec<u64> = sigma.iter().zip(shape.orders()).map(|(&x, &o)| (o - x % o) % o).collect();
    m.add_at(sigma, &Rational::from(-1));
    m.add_at(&neg, &Rational::from(-1));
    Ok(m)
}

/// A finite truncation ν^±_A on ∏ Z/p^{m_n}, A = exceptional ∪ tail.
#[derive(Clone, Debug, PartialEq)]
pub struct NuTruncation {
    pub label: String,
    pub p: u64,
    pub sign: i64,
    pub exceptional: Vec<u64>,
    pub tail: Vec<u64>,
    pub generators: BTreeMap<u64, u64>,
    pub measure: Measure,
}

#[derive(Serialize, Deserialize)]
struct NuJson {
    label: String,
    p: u64,
    sign: i64,
    exceptional: Vec<u64>,
    tail: Vec<u64>,
    generators: BTreeMap<u64, u64>,
    shape: Vec<u64>,
    coeffs: Vec<String>,
}

impl NuTruncation {
    /// Primes in coordinate order: exceptional first, then the tail.
    pub fn primes(&self) -> Vec<u64> {
        self.exceptional.iter().chain(&self.tail).copied().collect()
    }

    pub fn shape(&self) -> &GroupShape {
        self.measure.shape()
    }

    /// ρ_A(a) for a unit a mod L_A.
    pub fn digits(&self, a: u64) -> Vec<u64> {
        let primes = self.primes();
        let gens: Vec<u64> = primes.iter().map(|l| self.generators[l]).collect();
        coordinates(&primes, &gens, a).iter().zip(self.shape().orders()).map(|(k, o)| k % o).collect()
    }

    /// Every coefficient is p-integral.
    pub fn is_p_integral(&self) -> bool {
        self.measure.coeffs().iter().all(|c| !c.denom().is_divisible_u(self.p as u32))
    }

    pub fn to_json(&self) -> Result<String> {
        let j = NuJson {
            label: self.label.clone(),
            p: self.p,
            sign: self.sign,
            exceptional: self.exceptional.clone(),
            tail: self.tail.clone(),
            generators: self.generators.clone(),
            shape: self.shape().orders().to_vec(),
            coeffs: self.measure.coeffs().iter().map(rat_string).collect(),
        };
        Ok(serde_json::to_string(&j)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: NuJson = serde_json::from_str(text)?;
        let shape = GroupShape::new(j.shape)?;
        let coeffs = j
            .coeffs
            .iter()
            .map(|s| parse_rat(s).ok_or_else(|| Error::Precondition(format!("bad coefficient {s}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(NuTruncation {
            label: j.label,
            p: j.p,
            sign: j.sign,
            exceptional: j.exceptional,
            tail: j.tail,
            generators: j.generators,
            measure: Measure::from_coeffs(&shape, coeffs)?,
        })
    }
}

/// σ_n: ρ_{ℓ'}(ℓ_n mod ℓ') in every other coordinate, 0 in its own.
pub fn sigma_vector(primes: &[u64], gens: &[u64], orders: &[u64], own: usize) -> Vec<u64> {
    let ell = primes[own];
    (0..primes.len())
        .map(|i| {
            if i == own {
                0
            } else {
                coordinates(&primes[i..=i], &gens[i..=i], ell % primes[i])[0] % orders[i]
            }
        })
        .collect()
}

/// u^{-1}·μ for u = a·δ_0 − [σ] − [−σ], through the inverse on the cyclic group ⟨σ⟩.
fn divide_by_euler_unit(mu: &Measure, ap: i64, sigma: &[u64], p: u64) -> Result<Measure> {
    let shape = mu.shape();
    let orders = shape.orders();
    let mut m = 1u64;
    for (&s, &o) in sigma.iter().zip(orders) {
        m = m.max(o / gcd(s, o));
    }
    let cyc = GroupShape::new(vec![m])?;
    let mut u = Measure::identity(&cyc).scale(&Rational::from(ap));
    u.add_at(&[1 % m], &Rational::from(-1));
    u.add_at(&[(m - 1) % m], &Rational::from(-1));
    let w = u.invert(p)?;
    let (wn, wd) = w.integer_form();
    let (mn, md) = mu.integer_form();
    let n = shape.size();
    let mut out = vec![Integer::new(); n];
    let mut y = vec![0u64; orders.len()];
    for (i, c) in mn.iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let x = shape.element(i);
        for (k, wk) in wn.iter().enumerate() {
            if *wk == 0 {
                continue;
            }
            for (j, yj) in y.iter_mut().enumerate() {
                *yj = (x[j] + k as u64 * sigma[j]) % orders[j];
            }
            out[shape.index(&y)] += Integer::from(c * wk);
        }
    }
    let den = Integer::from(&md * &wd);
    Measure::from_coeffs(shape, out.into_iter().map(|c| Rational::from((c, den.clone()))).collect())
}

/// ν^±_A = ∏_{tail}(a_ℓ − [σ_ℓ] − [−σ_ℓ])^{-1}·ρ_A(θ^±_{L_A}).
pub fn nu_truncation(ms: &ModularSymbols, p: u64, exceptional: &[u64], tail: &[u64], sign: i64) -> Result<NuTruncation> {
    let curve = ms.curve();
    let primes: Vec<u64> = exceptional.iter().chain(tail).copied().collect();
    check_primes(curve, &primes)?;
    if !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not prime")));
    }
    if let Some(l) = primes.iter().find(|&&l| l % p != 1) {
        return Err(Error::Precondition(format!("{l} is not 1 mod {p}")));
    }
    if let Some(l) = tail.iter().find(|&&l| !is_tw_prime(curve, p, l)) {
        return Err(Error::Precondition(format!("{l} is not a Taylor–Wiles prime for {} at p = {p}", curve.label)));
    }
    let orders: Vec<u64> = primes.iter().map(|&l| p.pow(vp_u(l - 1, p))).collect();
    let size = orders.iter().try_fold(1u64, |a, &o| a.checked_mul(o));
    if size.is_none_or(|s| s > MAX_GROUP_SIZE) {
        return Err(Error::CapExceeded(format!("shape {orders:?} exceeds {MAX_GROUP_SIZE} elements")));
    }
    let shape = GroupShape::new(orders.clone())?;
    let gens: Vec<u64> = primes.iter().map(|&l| primitive_root(l)).collect();
    let logs: Vec<Vec<u64>> = primes.iter().zip(&gens).map(|(&l, &g)| dlog_table(l, g)).collect();
    let l: u64 = primes.iter().product();
    let norm = Rational::from(ms.normalization());
    let mut measure = Measure::zero(&shape);
    for (a, v) in ms.symbols_mod(l)? {
        let c = v.part(sign);
        if *c == 0 {
            continue;
        }
        let x: Vec<u64> = primes.iter().zip(&logs).zip(&orders).map(|((&q, t), &o)| t[(a % q) as usize] % o).collect();
        measure.add_at(&x, &Rational::from(c * &norm));
    }
    for n in exceptional.len()..primes.len() {
        let sigma = sigma_vector(&primes, &gens, &orders, n);
        measure = divide_by_euler_unit(&measure, curve.ap(primes[n]), &sigma, p)?;
    }
    Ok(NuTruncation {
        label: curve.label.clone(),
        p,
        sign,
        exceptional: exceptional.to_vec(),
        tail: tail.to_vec(),
        generators: primes.iter().copied().zip(gens).collect(),
        measure,
    })
}

/// Image of ν_A on the coordinates kept after forgetting some tail primes.
pub fn forget_tail(nu: &NuTruncation, drop: &[u64]) -> Result<NuTruncation> {
    if drop.iter().any(|d| !nu.tail.contains(d)) {
        return Err(Error::Precondition("only tail primes can be forgotten".into()));
    }
    let primes = nu.primes();
    let keep: Vec<usize> = (0..primes.len()).filter(|&i| !drop.contains(&primes[i])).collect();
    let target = nu.shape().sub_shape(&keep);
    let measure = nu.measure.pushforward_by(&target, |x| keep.iter().map(|&i| x[i]).collect());
    let tail: Vec<u64> = nu.tail.iter().copied().filter(|l| !drop.contains(l)).collect();
    let generators = nu.generators.iter().filter(|(l, _)| !drop.contains(l)).map(|(a, b)| (*a, *b)).collect();
    Ok(NuTruncation { tail, generators, measure, ..nu.clone() })
}

#[derive(Clone, Debug)]
pub struct InterpolationReport {
    pub character: Vec<u64>,
    pub conductor: u64,
    pub measure_side: CycNumber,
    pub l_side: CycNumber,
    /// θ(χ̄) before the Euler factors; zero off the sign.
    pub birch_stevens: CycNumber,
}

impl InterpolationReport {
    pub fn holds(&self) -> bool {
        self.measure_side == self.l_side
    }
}

/// ν(χ̃) against the modified value L*(χ̄) assembled from the Birch–Stevens sum, where
/// χ = χ̃∘ρ_A; the Euler factors are symmetric under χ ↔ χ̄.
pub fn interpolation_check(ms: &ModularSymbols, nu: &NuTruncation, chi: &Character) -> Result<InterpolationReport> {
    check_with(ms, nu, chi, &Mutex::new(HashMap::new()))
}

// inverses of a_ℓ − ζ_e^j − ζ_e^{−j}, keyed by (ℓ, j)
type EulerInverses = Mutex<HashMap<(u64, u64), CycNumber>>;

fn check_with(ms: &ModularSymbols, nu: &NuTruncation, chi: &Character, inverses: &EulerInverses) -> Result<InterpolationReport> {
    if chi.shape() != nu.shape() {
        return Err(Error::ShapeMismatch(nu.shape().orders().to_vec(), chi.shape().orders().to_vec()));
    }
    let curve = ms.curve();
    let primes = nu.primes();
    let orders = nu.shape().orders();
    let e = nu.shape().exponent();
    let measure_side = nu.measure.evaluate(chi)?;

    let support: Vec<usize> = (0..primes.len()).filter(|&i| chi.exps()[i] != 0).collect();
    let d: u64 = support.iter().map(|&i| primes[i]).product();
    let group = DirichletGroup::new(d);
    // χ(g_ℓ) = ζ_{p^m}^{e_ℓ} becomes ζ_{ℓ−1}^{e_ℓ(ℓ−1)/p^m} on the smallest primitive root
    let exps: Vec<u64> = group
        .factors()
        .iter()
        .map(|f| {
            let i = primes.iter().position(|&l| l == f.p).unwrap();
            assert_eq!(f.local_gen, nu.generators[&f.p]);
            chi.exps()[i] * ((f.p - 1) / orders[i]) % (f.p - 1)
        })
        .collect();
    let dchi = group.character(exps);
    let parity = dchi.parity();
    let birch_stevens = if parity != nu.sign {
        CycNumber::zero(e)
    } else {
        // Σ_x ν_x χ̃(x) pairs θ with χ̄ in the Birch–Stevens sum Σ_a χ̄(a) L(a/D)
        ms.birch_stevens_theta(&group, &dchi.conj())?.embed_to_order(e)?
    };
    let l_side = if parity != nu.sign {
        CycNumber::zero(e)
    } else {
        let mut v = birch_stevens.clone();
        let ord = dchi.order();
        let value_exp = |x: u64| -> u64 { dchi.value_exp(&group, x as i64).unwrap() * (e / ord) % e };
        let value = |x: u64| -> CycNumber { CycNumber::root_power(e, value_exp(x) as i64) };
        for (i, &ell) in primes.iter().enumerate() {
            let ap = CycNumber::from_int(e, curve.ap(ell));
            if i < nu.exceptional.len() && !d.is_multiple_of(ell) {
                let c = value(ell % d.max(1));
                v = v.mul(&ap.sub(&c).sub(&c.conj()));
            } else if i >= nu.exceptional.len() && d.is_multiple_of(ell) {
                // χ restricted mod D/ℓ, at ℓ
                let rest = d / ell;
                let x = if rest == 1 { 1 } else { crt(&[ell % rest, 1], &[rest, ell]) };
                let j = value_exp(x);
                let cached = inverses.lock().unwrap().get(&(ell, j)).cloned();
                let inv = match cached {
                    Some(inv) => inv,
                    None => {
                        let c = CycNumber::root_power(e, j as i64);
                        let inv = ap.sub(&c).sub(&c.conj()).inverse()?;
                        inverses.lock().unwrap().insert((ell, j), inv.clone());
                        inv
                    }
                };
                v = v.mul(&inv);
            }
        }
        v
    };
    Ok(InterpolationReport { character: chi.exps().to_vec(), conductor: d, measure_side, l_side, birch_stevens })
}

/// interpolation_check over every character of the truncation, in parallel.
pub fn interpolation_check_all(ms: &ModularSymbols, nu: &NuTruncation) -> Result<Vec<InterpolationReport>> {
    let inverses = Mutex::new(HashMap::new());
    nu.shape().characters().par_iter().map(|chi| check_with(ms, nu, chi, &inverses)).collect()
}

/// Convolution product of truncations on one shape and sign.
pub fn product_measure(nus: &[NuTruncation]) -> Result<Measure> {
    let first = nus.first().ok_or_else(|| Error::Precondition("empty product".into()))?;
    let mut acc = first.measure.clone();
    for nu in &nus[1..] {
        if nu.sign != first.sign || nu.p != first.p {
            return Err(Error::Precondition("factors must share p and sign".into()));
        }
        if nu.primes() != first.primes() {
            return Err(Error::Precondition("factors must use the same primes".into()));
        }
        acc = acc.convolve(&nu.measure)?;
    }
    Ok(acc)
}
