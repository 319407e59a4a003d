//! Kurihara numbers δ_Q, searches for their non-vanishing mod p, and the congruence with
//! the Kato–Kolyvagin derivatives of ν_E.

use std::collections::HashMap;

use rayon::prelude::*;
use rug::{Integer, Rational};
use serde_json::{json, Value};

use crate::arith::{crt, is_prime, mult_order, primes_up_to, primitive_root};
use crate::cyclotomic::{vp_rat, ValQ};
use crate::error::{Error, Result};
use crate::groupmeasure::{rat_string, DerivIndex};
use crate::horizontal::{interpolation_check, is_kato_prime, nu_truncation, NuTruncation};
use crate::modsym::ModularSymbols;

/// Largest ∏(q_i − 1) summed over.
pub const MAX_TUPLES: u64 = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct KuriharaDatum {
    pub label: String,
    pub p: u64,
    pub q: Vec<u64>,
    pub generators: Vec<u64>,
    pub delta: Rational,
    pub residue: u64,
}

impl KuriharaDatum {
    pub fn is_nonzero_mod_p(&self) -> bool {
        self.residue != 0
    }

    pub fn to_json(&self) -> Value {
        json!({
            "label": self.label,
            "p": self.p,
            "Q": self.q,
            "generators": self.generators,
            "delta": rat_string(&self.delta),
            "residue": self.residue,
        })
    }
}

/// Reduction of a p-integral rational mod p.
pub fn residue_mod_p(x: &Rational, p: u64) -> Result<u64> {
    if x.denom().is_divisible_u(p as u32) {
        return Err(Error::Unsupported(format!("{x} is not {p}-integral")));
    }
    let pz = Integer::from(p);
    let d = Integer::from(x.denom() % &pz);
    let inv = d.invert(&pz).map_err(|_| Error::Unsupported(format!("{x} is not {p}-integral")))?;
    let r = (x.numer() * inv) % &pz;
    let r = if r < 0 { r + &pz } else { r };
    Ok(r.to_u64().unwrap())
}

/// The standing hypotheses p ∤ c_E and p ∤ #E(Q)_tors.
pub fn check_hypotheses(ms: &ModularSymbols, p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not prime")));
    }
    let e = ms.curve();
    if e.manin.is_multiple_of(p) {
        return Err(Error::Refused(format!("p = {p} divides the Manin constant of {}", e.label)));
    }
    if e.torsion_order().is_multiple_of(p) {
        return Err(Error::Refused(format!("{} has a rational point of order {p}", e.label)));
    }
    Ok(())
}

fn check_q(ms: &ModularSymbols, p: u64, q: &[u64], generators: &[u64]) -> Result<()> {
    let e = ms.curve();
    if generators.len() != q.len() {
        return Err(Error::Precondition("one generator per prime".into()));
    }
    for (i, (&qi, &g)) in q.iter().zip(generators).enumerate() {
        if q[..i].contains(&qi) {
            return Err(Error::Precondition(format!("{qi} repeated")));
        }
        if !is_kato_prime(e, p, qi) {
            return Err(Error::Precondition(format!("{qi} is not a Kato prime for {} at p = {p}", e.label)));
        }
        if g % qi == 0 || mult_order(g % qi, qi) != qi - 1 {
            return Err(Error::Precondition(format!("{g} does not generate (Z/{qi})^×")));
        }
    }
    let size = q.iter().try_fold(1u64, |a, &qi| a.checked_mul(qi - 1));
    if size.is_none_or(|s| s > MAX_TUPLES) {
        return Err(Error::CapExceeded(format!("∏(q_i − 1) over {q:?} exceeds {MAX_TUPLES}")));
    }
    Ok(())
}

/// δ_Q = Σ_{a_i = 1}^{q_i − 1} (∏ a_i)·⟨∏ ζ_{q_i}^{a_i} / Q⟩⁺ with ζ_{q_i} ≡ 1 mod Q/q_i.
/// Smallest primitive roots are used when `generators` is None.
pub fn kurihara_number(ms: &ModularSymbols, p: u64, q: &[u64], generators: Option<&[u64]>) -> Result<KuriharaDatum> {
    check_hypotheses(ms, p)?;
    let generators: Vec<u64> = match generators {
        Some(g) => g.to_vec(),
        None => q.iter().map(|&qi| primitive_root(qi)).collect(),
    };
    check_q(ms, p, q, &generators)?;
    let modulus: u64 = q.iter().product();
    let delta = if q.is_empty() {
        ms.symbol(0, 1)?.plus
    } else {
        let table: HashMap<u64, Rational> = ms.symbols_mod(modulus)?.into_iter().map(|(a, v)| (a, v.plus)).collect();
        // powers[i][a] = ζ_{q_i}^a mod q_i
        let powers: Vec<Vec<u64>> = q
            .iter()
            .zip(&generators)
            .map(|(&qi, &g)| {
                let mut v = Vec::with_capacity(qi as usize);
                let mut x = 1u64;
                for _ in 0..qi {
                    v.push(x);
                    x = x * (g % qi) % qi;
                }
                v
            })
            .collect();
        let first = q[0];
        (1..first)
            .into_par_iter()
            .map(|a0| {
                let mut acc = Rational::new();
                let mut idx = vec![1u64; q.len()];
                idx[0] = a0;
                loop {
                    let residues: Vec<u64> = idx.iter().zip(&powers).map(|(&a, pw)| pw[a as usize]).collect();
                    let x = crt(&residues, q);
                    let w: Integer = idx.iter().map(|&a| Integer::from(a)).product();
                    acc += Rational::from(&table[&x] * w);
                    // advance the inner indices
                    let mut k = q.len();
                    loop {
                        if k == 1 {
                            return acc;
                        }
                        k -= 1;
                        if idx[k] + 1 < q[k] {
                            idx[k] += 1;
                            break;
                        }
                        idx[k] = 1;
                    }
                }
            })
            .reduce(Rational::new, |a, b| a + b)
    };
    let residue = residue_mod_p(&delta, p)?;
    Ok(KuriharaDatum { label: ms.curve().label.clone(), p, q: q.to_vec(), generators, delta, residue })
}

/// Kato primes up to `bound`, ascending.
pub fn kato_primes(ms: &ModularSymbols, p: u64, bound: u64) -> Vec<u64> {
    primes_up_to(bound).into_iter().filter(|&l| is_kato_prime(ms.curve(), p, l)).collect()
}

/// First Q (r ascending, then Kato primes ascending) with δ_Q ≢ 0 mod p, within the caps.
pub fn kurihara_search(ms: &ModularSymbols, p: u64, r_max: usize, bound: u64) -> Result<Option<KuriharaDatum>> {
    check_hypotheses(ms, p)?;
    let kato = kato_primes(ms, p, bound);
    for r in 0..=r_max {
        let mut found = None;
        for_each_subset(&kato, r, &mut |qs| {
            if found.is_some() {
                return Ok(());
            }
            if qs.iter().map(|q| q - 1).product::<u64>() > MAX_TUPLES {
                return Ok(());
            }
            let d = kurihara_number(ms, p, qs, None)?;
            if d.is_nonzero_mod_p() {
                found = Some(d);
            }
            Ok(())
        })?;
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

fn for_each_subset(items: &[u64], r: usize, f: &mut dyn FnMut(&[u64]) -> Result<()>) -> Result<()> {
    fn go(items: &[u64], r: usize, start: usize, cur: &mut Vec<u64>, f: &mut dyn FnMut(&[u64]) -> Result<()>) -> Result<()> {
        if cur.len() == r {
            return f(cur);
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, r, i + 1, cur, f)?;
            cur.pop();
        }
        Ok(())
    }
    go(items, r, 0, &mut Vec::new(), f)
}

#[derive(Clone, Debug)]
pub struct CongruenceReport {
    pub label: String,
    pub p: u64,
    pub q: Vec<u64>,
    pub tail: Vec<u64>,
    /// ν(D^r) with D^r the first derivative in every Q coordinate.
    pub derivative: Rational,
    pub datum: KuriharaDatum,
    /// The factor between ⟨·⟩⁺ and the coefficients of ν.
    pub normalization: u64,
    pub lhs_mod_p: u64,
    pub rhs_mod_p: u64,
}

impl CongruenceReport {
    pub fn holds(&self) -> bool {
        self.lhs_mod_p == self.rhs_mod_p
    }
}

/// ν(D^r) ≡ normalization·δ_Q mod p for ν = ν⁺ on exceptional Q and the given TW tail.
pub fn derivative_congruence(ms: &ModularSymbols, p: u64, q: &[u64], tail: &[u64]) -> Result<CongruenceReport> {
    if tail.iter().any(|l| q.contains(l)) {
        return Err(Error::Precondition("tail must be disjoint from Q".into()));
    }
    let nu = nu_truncation(ms, p, q, tail, 1)?;
    let gens: Vec<u64> = q.iter().map(|l| nu.generators[l]).collect();
    let datum = kurihara_number(ms, p, q, Some(&gens))?;
    let alpha = DerivIndex((0..nu.shape().rank()).map(|i| u64::from(i < q.len())).collect());
    let derivative = nu.measure.derivative(&alpha)?;
    let normalization = ms.normalization();
    let lhs_mod_p = residue_mod_p(&derivative, p)?;
    let rhs_mod_p = residue_mod_p(&Rational::from(&datum.delta * normalization), p)?;
    Ok(CongruenceReport {
        label: ms.curve().label.clone(),
        p,
        q: q.to_vec(),
        tail: tail.to_vec(),
        derivative,
        datum,
        normalization,
        lhs_mod_p,
        rhs_mod_p,
    })
}

#[derive(Clone, Debug)]
pub struct KolyvaginReport {
    pub label: String,
    pub p: u64,
    pub q: Vec<u64>,
    pub tail: Vec<u64>,
    pub r: usize,
    /// r/(p − 1).
    pub bound: Rational,
    /// Minimal v_p(ν(χ)) over the truncation and a character attaining it.
    pub min_valuation: ValQ,
    pub witness: Vec<u64>,
    pub conductor: u64,
    /// v_p(L(E, χ, 1)/Ω⁺) at the witness, read off the Birch–Stevens side.
    pub l_valuation: ValQ,
    /// Augmentation rank of ν when the shape has exponent p.
    pub augmentation_rank: Option<u64>,
}

impl KolyvaginReport {
    pub fn holds(&self) -> bool {
        self.min_valuation <= ValQ::Finite(self.bound.clone())
    }
}

/// Exhaustive scan for χ with v_p(ν(χ)) ≤ r/(p − 1), given δ_Q ≢ 0 mod p.
pub fn kolyvagin_valuation_bound(ms: &ModularSymbols, p: u64, q: &[u64], tail: &[u64]) -> Result<KolyvaginReport> {
    let cong = derivative_congruence(ms, p, q, tail)?;
    if !cong.datum.is_nonzero_mod_p() {
        return Err(Error::Precondition(format!("δ_Q vanishes mod {p} for Q = {q:?}")));
    }
    let nu: NuTruncation = nu_truncation(ms, p, q, tail, 1)?;
    let (vmin, chi) = nu.measure.min_valuation(p)?;
    let report = interpolation_check(ms, &nu, &chi)?;
    let norm = vp_rat(&Rational::from(ms.normalization()), p);
    let l_valuation = match report.birch_stevens.vp(p)? {
        ValQ::Finite(v) => match norm {
            ValQ::Finite(n) => ValQ::Finite(v - n),
            ValQ::Infinite => unreachable!(),
        },
        ValQ::Infinite => ValQ::Infinite,
    };
    let augmentation_rank = if nu.shape().orders().iter().all(|&o| o == p) && !nu.measure.is_zero() && nu.is_p_integral() {
        Some(nu.measure.augmentation_rank(p)?)
    } else {
        None
    };
    Ok(KolyvaginReport {
        label: ms.curve().label.clone(),
        p,
        q: q.to_vec(),
        tail: tail.to_vec(),
        r: q.len(),
        bound: Rational::from((q.len() as u64, p - 1)),
        min_valuation: vmin,
        witness: chi.exps().to_vec(),
        conductor: report.conductor,
        l_valuation,
        augmentation_rank,
    })
}
