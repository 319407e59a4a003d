//! Dirichlet characters through explicit generators of (Z/q)^×.

use serde::{Deserialize, Serialize};

use crate::arith::{crt, factor, gcd, invmod, lcm, powmod, primitive_root};
use crate::cyclotomic::CycNumber;
use crate::error::{Error, Result};
use crate::numeric::Complex;

/// One cyclic factor of (Z/q)^×: a generator (as a residue mod q, ≡ 1 at the other
/// prime powers), its order, and the prime power it lives on.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CyclicFactor {
    pub p: u64,
    pub pk: u64,
    pub local_gen: u64,
    pub generator: u64,
    pub order: u64,
}

/// The character group of (Z/q)^× with its discrete-log tables.
#[derive(Clone, Debug)]
pub struct DirichletGroup {
    modulus: u64,
    factors: Vec<CyclicFactor>,
    /// dlogs[j][a mod pk_j] = exponent of the local generator, u64::MAX for non-units
    dlogs: Vec<Vec<u64>>,
}

/// Generator of (Z/p^k)^× for odd p, kept compatible across k.
pub fn prime_power_generator(p: u64, k: u32) -> u64 {
    let g = primitive_root(p);
    if k == 1 {
        return g;
    }
    if powmod(g, p - 1, p * p) == 1 {
        g + p
    } else {
        g
    }
}

impl DirichletGroup {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1);
        let mut locals: Vec<(u64, u64, u64, u64)> = Vec::new(); // (p, pk, gen, order)
        for (p, k) in factor(q) {
            let pk = p.pow(k);
            if p == 2 {
                if k >= 2 {
                    locals.push((2, pk, pk - 1, 2));
                }
                if k >= 3 {
                    locals.push((2, pk, 5, pk / 4));
                }
            } else {
                locals.push((p, pk, prime_power_generator(p, k), pk / p * (p - 1)));
            }
        }
        let mut factors = Vec::new();
        let mut dlogs = Vec::new();
        for &(p, pk, g, ord) in &locals {
            let other = q / pk;
            let generator = if other == 1 { g % q } else { crt(&[g % pk, 1], &[pk, other]) };
            factors.push(CyclicFactor { p, pk, local_gen: g, generator, order: ord });
            dlogs.push(local_dlog_table(p, pk, g, ord));
        }
        DirichletGroup { modulus: q, factors, dlogs }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn factors(&self) -> &[CyclicFactor] {
        &self.factors
    }

    /// Exponent of the group (lcm of factor orders).
    pub fn exponent(&self) -> u64 {
        self.factors.iter().fold(1, |e, f| lcm(e, f.order))
    }

    pub fn size(&self) -> u64 {
        self.factors.iter().map(|f| f.order).product()
    }

    /// Coordinates of a unit a in terms of the generators; None for non-units.
    pub fn dlog(&self, a: i64) -> Option<Vec<u64>> {
        let q = self.modulus;
        let a = a.rem_euclid(q as i64) as u64;
        if gcd(a, q) != 1 {
            return None;
        }
        Some(
            self.factors
                .iter()
                .zip(&self.dlogs)
                .map(|(f, t)| t[(a % f.pk) as usize])
                .collect(),
        )
    }

    pub fn character(&self, exps: Vec<u64>) -> DirichletCharacter {
        assert_eq!(exps.len(), self.factors.len());
        let exps = exps.iter().zip(&self.factors).map(|(e, f)| e % f.order).collect();
        DirichletCharacter { modulus: self.modulus, factors: self.factors.clone(), exps }
    }

    pub fn trivial(&self) -> DirichletCharacter {
        self.character(vec![0; self.factors.len()])
    }

    /// All characters, exponent tuples in lexicographic order.
    pub fn characters(&self) -> Vec<DirichletCharacter> {
        let mut out = vec![Vec::<u64>::new()];
        for f in &self.factors {
            let mut next = Vec::with_capacity(out.len() * f.order as usize);
            for e in &out {
                for k in 0..f.order {
                    let mut v = e.clone();
                    v.push(k);
                    next.push(v);
                }
            }
            out = next;
        }
        out.into_iter().map(|e| self.character(e)).collect()
    }
}

fn local_dlog_table(p: u64, pk: u64, g: u64, ord: u64) -> Vec<u64> {
    let mut t = vec![u64::MAX; pk as usize];
    if p == 2 {
        // (Z/2^k)^× = ⟨−1⟩ × ⟨5⟩, units are ±5^k
        let is_sign = g == pk - 1;
        let five_ord = if pk >= 8 { pk / 4 } else { 1 };
        let mut x = 1u64;
        for k in 0..five_ord {
            t[x as usize] = if is_sign { 0 } else { k };
            t[(pk - x) as usize] = if is_sign { 1 } else { k };
            x = x * 5 % pk;
        }
        return t;
    }
    let mut x = 1u64;
    for k in 0..ord {
        t[x as usize] = k;
        x = x * g % pk;
    }
    t
}

/// A Dirichlet character: χ(g_j) = ζ_{o_j}^{exps_j} on the standard generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirichletCharacter {
    modulus: u64,
    factors: Vec<CyclicFactor>,
    exps: Vec<u64>,
}

impl DirichletCharacter {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn exps(&self) -> &[u64] {
        &self.exps
    }

    pub fn factors(&self) -> &[CyclicFactor] {
        &self.factors
    }

    pub fn order(&self) -> u64 {
        self.exps
            .iter()
            .zip(&self.factors)
            .fold(1, |acc, (&e, f)| lcm(acc, f.order / gcd(e, f.order)))
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// χ(a) as an exponent k with χ(a) = ζ_{ord χ}^k, or None when gcd(a, q) > 1.
    pub fn value_exp(&self, group: &DirichletGroup, a: i64) -> Option<u64> {
        let d = self.order();
        let logs = group.dlog(a)?;
        let mut k = 0u64;
        for ((&e, f), l) in self.exps.iter().zip(&self.factors).zip(logs) {
            k = (k + local_exp(e, l, f.order, d)) % d;
        }
        Some(k)
    }

    pub fn value(&self, group: &DirichletGroup, a: i64) -> Option<CycNumber> {
        let d = self.order();
        self.value_exp(group, a).map(|k| CycNumber::root_power(d, k as i64))
    }

    pub fn conj(&self) -> DirichletCharacter {
        let exps = self.exps.iter().zip(&self.factors).map(|(&e, f)| (f.order - e) % f.order).collect();
        DirichletCharacter { modulus: self.modulus, factors: self.factors.clone(), exps }
    }

    pub fn mul(&self, o: &DirichletCharacter) -> DirichletCharacter {
        assert_eq!(self.modulus, o.modulus);
        let exps = self
            .exps
            .iter()
            .zip(&o.exps)
            .zip(&self.factors)
            .map(|((a, b), f)| (a + b) % f.order)
            .collect();
        DirichletCharacter { modulus: self.modulus, factors: self.factors.clone(), exps }
    }

    pub fn pow(&self, j: u64) -> DirichletCharacter {
        let exps = self.exps.iter().zip(&self.factors).map(|(&e, f)| e * j % f.order).collect();
        DirichletCharacter { modulus: self.modulus, factors: self.factors.clone(), exps }
    }

    /// χ(−1) ∈ {1, −1}.
    pub fn parity(&self) -> i64 {
        let mut s = 1;
        for (&e, f) in self.exps.iter().zip(&self.factors) {
            let odd = if f.p == 2 {
                f.order == 2 && f.local_gen == f.pk - 1 && e % 2 == 1
            } else {
                e % 2 == 1
            };
            if odd {
                s = -s;
            }
        }
        s
    }

    /// Conductor, from the orders of the local components.
    pub fn conductor(&self) -> u64 {
        let mut cond = 1u64;
        for (p, local) in self.local_components() {
            let c = match p {
                2 => {
                    let (mut sign, mut five) = (0u64, 0u64);
                    for (e, f) in local {
                        if f.local_gen == f.pk - 1 {
                            sign = e;
                        } else {
                            five = f.order / gcd(e, f.order);
                        }
                    }
                    if five > 1 {
                        4 * five
                    } else if sign != 0 {
                        4
                    } else {
                        1
                    }
                }
                _ => {
                    let (e, f) = local[0];
                    let o = f.order / gcd(e, f.order);
                    if o == 1 {
                        1
                    } else {
                        let mut c = p;
                        let mut m = o;
                        while m.is_multiple_of(p) {
                            m /= p;
                            c *= p;
                        }
                        c
                    }
                }
            };
            cond *= c;
        }
        cond
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus
    }

    fn local_components(&self) -> Vec<(u64, Vec<(u64, &CyclicFactor)>)> {
        let mut out: Vec<(u64, Vec<(u64, &CyclicFactor)>)> = Vec::new();
        for (&e, f) in self.exps.iter().zip(&self.factors) {
            match out.last_mut() {
                Some((p, v)) if *p == f.p => v.push((e, f)),
                _ => out.push((f.p, vec![(e, f)])),
            }
        }
        out
    }

    /// The primitive character inducing this one, as a character of its conductor.
    pub fn primitive(&self) -> (DirichletGroup, DirichletCharacter) {
        let f = self.conductor();
        let g = DirichletGroup::new(f);
        let mut exps = vec![0u64; g.factors.len()];
        for (j, fac) in g.factors.iter().enumerate() {
            // evaluate self on the lifted generator of the smaller group
            let lift = lift_unit(fac.generator, f, self.modulus);
            let big = DirichletGroup::new(self.modulus);
            let k = self.value_exp(&big, lift as i64).unwrap();
            let d = self.order();
            // ζ_d^k = ζ_{o}^{e}
            assert_eq!((k * fac.order) % d, 0, "character does not factor through conductor");
            exps[j] = k * fac.order / d;
        }
        let chi = g.character(exps);
        (g, chi)
    }

    /// Gauss sum τ(χ) = Σ_a χ(a) e^{2πia/q} numerically.
    pub fn gauss_sum_numeric(&self, group: &DirichletGroup, prec: u32) -> Complex {
        let q = self.modulus;
        let d = self.order();
        let zd: Vec<Complex> = (0..d).map(|k| Complex::root_of_unity(k as i64, d, prec)).collect();
        let mut acc = Complex::zero(prec);
        for a in 1..=q {
            if let Some(k) = self.value_exp(group, a as i64) {
                let e = Complex::root_of_unity(a as i64, q, prec);
                acc.add_assign(&zd[k as usize].mul(&e));
            }
        }
        acc
    }

    pub fn value_numeric(&self, group: &DirichletGroup, a: i64, prec: u32) -> Complex {
        match self.value_exp(group, a) {
            Some(k) => Complex::root_of_unity(k as i64, self.order(), prec),
            None => Complex::zero(prec),
        }
    }
}

/// ζ_o^{e·l} written as a power of ζ_d; o/gcd(e, o) divides d.
fn local_exp(e: u64, l: u64, o: u64, d: u64) -> u64 {
    let g = gcd(e, o);
    let o2 = o / g;
    ((e / g) * (l % o2) % o2) * (d / o2)
}

/// Smallest positive integer ≡ a mod f that is a unit mod q (f | q).
pub fn lift_unit(a: u64, f: u64, q: u64) -> u64 {
    let mut x = a % f;
    if x == 0 {
        x = f;
    }
    while gcd(x, q) != 1 {
        x += f;
    }
    x
}

/// Errors if a character is not primitive.
pub fn require_primitive(chi: &DirichletCharacter) -> Result<()> {
    if chi.is_primitive() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "character mod {} has conductor {}",
            chi.modulus(),
            chi.conductor()
        )))
    }
}

/// Inverse of a mod q as a signed helper.
pub fn inv_mod_i(a: i64, q: u64) -> Option<u64> {
    invmod(a.rem_euclid(q as i64) as u64, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_conductor(g: &DirichletGroup, chi: &DirichletCharacter) -> u64 {
        let q = g.modulus();
        for f in crate::arith::divisors(q) {
            let ok = (1..=q as i64)
                .filter(|&a| gcd(a as u64, q) == 1 && (a as u64) % f == 1 % f)
                .all(|a| chi.value_exp(g, a) == Some(0));
            if ok {
                return f;
            }
        }
        q
    }

    #[test]
    fn dlog_is_a_homomorphism() {
        for q in [1u64, 2, 4, 8, 16, 9, 25, 60, 63, 72, 97, 100] {
            let g = DirichletGroup::new(q);
            let n = g.size();
            assert_eq!(n, crate::arith::euler_phi(q));
            for a in 1..q as i64 {
                for b in 1..q as i64 {
                    let (Some(la), Some(lb)) = (g.dlog(a), g.dlog(b)) else { continue };
                    let lab = g.dlog(a * b).unwrap();
                    for ((x, y), (z, f)) in la.iter().zip(&lb).zip(lab.iter().zip(g.factors())) {
                        assert_eq!((x + y) % f.order, *z, "q={q} a={a} b={b}");
                    }
                }
            }
        }
    }

    #[test]
    fn conductor_matches_brute_force() {
        for q in 1..=120u64 {
            let g = DirichletGroup::new(q);
            for chi in g.characters() {
                assert_eq!(chi.conductor(), brute_conductor(&g, &chi), "q={q} {:?}", chi.exps());
            }
        }
    }

    #[test]
    fn parity_matches_value_at_minus_one() {
        for q in [3u64, 4, 5, 8, 12, 16, 21, 40] {
            let g = DirichletGroup::new(q);
            for chi in g.characters() {
                let v = chi.value(&g, -1).unwrap();
                assert_eq!(v.to_rational().unwrap(), chi.parity());
            }
        }
    }

    #[test]
    fn primitive_induces_original() {
        for q in [12u64, 20, 36, 45, 48, 77] {
            let g = DirichletGroup::new(q);
            for chi in g.characters() {
                let (pg, pchi) = chi.primitive();
                assert!(pchi.is_primitive());
                for a in 1..q as i64 {
                    if let Some(v) = chi.value(&g, a) {
                        let w = pchi.value(&pg, a).unwrap();
                        assert!(v.sub(&w).is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn gauss_sum_abs_squared_is_modulus() {
        for q in [5u64, 7, 8, 13, 15, 16, 21] {
            let g = DirichletGroup::new(q);
            for chi in g.characters().into_iter().filter(|c| c.is_primitive()) {
                let t = chi.gauss_sum_numeric(&g, 128);
                let d = (t.abs2() - q).abs();
                assert!(d < 1e-30, "q={q}");
            }
        }
    }
}
