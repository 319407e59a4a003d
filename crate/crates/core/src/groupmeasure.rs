//! Group algebras Q[G] of finite abelian groups G = ∏ Z/d_i: Fourier evaluation,
//! specialization, inversion, Amice coefficients, μ/λ invariants, augmentation rank and
//! witness sets.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::arith::{binomial, euler_phi, factor, gcd, lcm, mobius};
use crate::cyclotomic::{vp_rat, CycNumber, ValQ};
use crate::error::{Error, Result};

/// Largest group handled by the dense representation.
pub const MAX_GROUP_SIZE: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupShape {
    orders: Vec<u64>,
}

impl GroupShape {
    pub fn new(orders: Vec<u64>) -> Result<Self> {
        if orders.contains(&0) {
            return Err(Error::Precondition("cyclic orders must be ≥ 1".into()));
        }
        let size = orders.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d));
        match size {
            Some(s) if s <= MAX_GROUP_SIZE => Ok(GroupShape { orders }),
            _ => Err(Error::UnsupportedShape(format!("|G| exceeds {MAX_GROUP_SIZE}: {orders:?}"))),
        }
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn size(&self) -> usize {
        self.orders.iter().product::<u64>() as usize
    }

    pub fn exponent(&self) -> u64 {
        self.orders.iter().fold(1, |e, &d| lcm(e, d))
    }

    /// The prime p if every order is a power of p (trivial factors allowed).
    pub fn primary_prime(&self) -> Option<u64> {
        let mut p = None;
        for &d in &self.orders {
            if d == 1 {
                continue;
            }
            let f = factor(d);
            if f.len() != 1 {
                return None;
            }
            match p {
                None => p = Some(f[0].0),
                Some(q) if q != f[0].0 => return None,
                _ => {}
            }
        }
        p
    }

    pub fn is_p_primary(&self, p: u64) -> bool {
        self.orders.iter().all(|&d| d == 1 || (factor(d).len() == 1 && d % p == 0))
    }

    /// Row-major index, first coordinate most significant.
    pub fn index(&self, x: &[u64]) -> usize {
        let mut idx = 0usize;
        for (xi, &d) in x.iter().zip(&self.orders) {
            idx = idx * d as usize + (*xi % d) as usize;
        }
        idx
    }

    pub fn element(&self, mut idx: usize) -> Vec<u64> {
        let mut x = vec![0u64; self.orders.len()];
        for i in (0..self.orders.len()).rev() {
            let d = self.orders[i] as usize;
            x[i] = (idx % d) as u64;
            idx /= d;
        }
        x
    }

    pub fn elements(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        (0..self.size()).map(move |i| self.element(i))
    }

    pub fn reduce(&self, x: &[i64]) -> Vec<u64> {
        x.iter().zip(&self.orders).map(|(&v, &d)| v.rem_euclid(d as i64) as u64).collect()
    }

    /// All characters in lexicographic order of exponent tuples.
    pub fn characters(&self) -> Vec<Character> {
        (0..self.size()).map(|i| Character { shape: self.clone(), exps: self.element(i) }).collect()
    }

    pub fn trivial_character(&self) -> Character {
        Character { shape: self.clone(), exps: vec![0; self.rank()] }
    }

    pub fn sub_shape(&self, idx: &[usize]) -> GroupShape {
        GroupShape { orders: idx.iter().map(|&i| self.orders[i]).collect() }
    }
}

/// χ(x) = ζ_e^{Σ k_i (e/d_i) x_i}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Character {
    shape: GroupShape,
    exps: Vec<u64>,
}

impl Character {
    pub fn new(shape: &GroupShape, exps: Vec<u64>) -> Result<Self> {
        if exps.len() != shape.rank() || exps.iter().zip(shape.orders()).any(|(k, d)| k >= d) {
            return Err(Error::Precondition(format!("bad exponents {exps:?} for shape {:?}", shape.orders())));
        }
        Ok(Character { shape: shape.clone(), exps })
    }

    pub fn shape(&self) -> &GroupShape {
        &self.shape
    }

    pub fn exps(&self) -> &[u64] {
        &self.exps
    }

    pub fn is_trivial(&self) -> bool {
        self.exps.iter().all(|&k| k == 0)
    }

    pub fn order(&self) -> u64 {
        self.exps
            .iter()
            .zip(self.shape.orders())
            .fold(1, |acc, (&k, &d)| lcm(acc, d / gcd(k, d)))
    }

    /// Multipliers c_i with χ(x) = ζ_e^{Σ c_i x_i}, e = shape exponent.
    fn multipliers(&self) -> Vec<u64> {
        let e = self.shape.exponent();
        self.exps.iter().zip(self.shape.orders()).map(|(&k, &d)| k * (e / d) % e).collect()
    }

    /// Exponent s with χ(x) = ζ_e^s.
    pub fn value_exp(&self, x: &[u64]) -> u64 {
        let e = self.shape.exponent();
        self.multipliers().iter().zip(x).fold(0, |acc, (c, xi)| (acc + c * (xi % e)) % e)
    }

    pub fn value(&self, x: &[u64]) -> CycNumber {
        CycNumber::root_power(self.shape.exponent(), self.value_exp(x) as i64)
    }

    pub fn mul(&self, o: &Character) -> Character {
        assert_eq!(self.shape, o.shape);
        let exps = self
            .exps
            .iter()
            .zip(&o.exps)
            .zip(self.shape.orders())
            .map(|((a, b), d)| (a + b) % d)
            .collect();
        Character { shape: self.shape.clone(), exps }
    }

    pub fn pow(&self, j: i64) -> Character {
        let exps = self
            .exps
            .iter()
            .zip(self.shape.orders())
            .map(|(&k, &d)| ((k as i64 * j).rem_euclid(d as i64)) as u64)
            .collect();
        Character { shape: self.shape.clone(), exps }
    }

    pub fn conj(&self) -> Character {
        self.pow(-1)
    }

    /// Is χ a p-th power in the character group, i.e. χ ∈ Ĝ^p?
    pub fn is_pth_power(&self, p: u64) -> bool {
        self.exps.iter().zip(self.shape.orders()).all(|(&k, &d)| {
            // k ∈ pZ/dZ; when p ∤ d every element is a p-th power
            d % p != 0 || k % p == 0
        })
    }

    /// Characters supported on the given coordinates only.
    pub fn supported_on(&self, idx: &[usize]) -> bool {
        self.exps.iter().enumerate().all(|(i, &k)| k == 0 || idx.contains(&i))
    }
}

/// Index into the box ∏[0, d_n) of derivative orders.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DerivIndex(pub Vec<u64>);

impl DerivIndex {
    pub fn weight(&self) -> u64 {
        self.0.iter().sum()
    }

    /// α = (1,…,1,0,…,0) with r ones.
    pub fn kolyvagin(rank: usize, r: usize) -> Self {
        DerivIndex((0..rank).map(|i| u64::from(i < r)).collect())
    }
}

/// An element Σ ν_x [x] of Q[G], stored densely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measure {
    shape: GroupShape,
    coeffs: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    orders: Vec<u64>,
    coeffs: Vec<(Vec<u64>, String)>,
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(i, c)| (self.shape.element(i), rat_string(c)))
            .collect();
        MeasureJson { orders: self.shape.orders.clone(), coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = MeasureJson::deserialize(d)?;
        let shape = GroupShape::new(j.orders).map_err(D::Error::custom)?;
        let mut m = Measure::zero(&shape);
        for (x, c) in j.coeffs {
            if x.len() != shape.rank() {
                return Err(D::Error::custom("coordinate length mismatch"));
            }
            let r = parse_rat(&c).ok_or_else(|| D::Error::custom(format!("bad rational {c}")))?;
            let i = shape.index(&x);
            m.coeffs[i] = r;
        }
        Ok(m)
    }
}

/// Rationals as "num/den" (or "num" when integral).
pub fn rat_string(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rat(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: Integer = n.trim().parse().ok()?;
            let d: Integer = d.trim().parse().ok()?;
            (d != 0).then(|| Rational::from((n, d)))
        }
        None => s.parse::<Integer>().ok().map(Rational::from),
    }
}

impl Measure {
    pub fn zero(shape: &GroupShape) -> Self {
        Measure { shape: shape.clone(), coeffs: vec![Rational::new(); shape.size()] }
    }

    /// δ_x.
    pub fn delta(shape: &GroupShape, x: &[u64]) -> Self {
        let mut m = Self::zero(shape);
        m.coeffs[shape.index(x)] = Rational::from(1);
        m
    }

    pub fn identity(shape: &GroupShape) -> Self {
        Self::delta(shape, &vec![0; shape.rank()])
    }

    pub fn from_coeffs(shape: &GroupShape, coeffs: Vec<Rational>) -> Result<Self> {
        if coeffs.len() != shape.size() {
            return Err(Error::Precondition("coefficient vector has the wrong length".into()));
        }
        Ok(Measure { shape: shape.clone(), coeffs })
    }

    pub fn from_ints(shape: &GroupShape, coeffs: &[i64]) -> Result<Self> {
        Self::from_coeffs(shape, coeffs.iter().map(|&c| Rational::from(c)).collect())
    }

    pub fn shape(&self) -> &GroupShape {
        &self.shape
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, x: &[u64]) -> &Rational {
        &self.coeffs[self.shape.index(x)]
    }

    pub fn set(&mut self, x: &[u64], v: Rational) {
        let i = self.shape.index(x);
        self.coeffs[i] = v;
    }

    pub fn add_at(&mut self, x: &[u64], v: &Rational) {
        let i = self.shape.index(x);
        self.coeffs[i] += v;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0)
    }

    pub fn add(&self, o: &Measure) -> Result<Measure> {
        self.check_shape(o)?;
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Rational::from(a + b)).collect();
        Ok(Measure { shape: self.shape.clone(), coeffs })
    }

    pub fn sub(&self, o: &Measure) -> Result<Measure> {
        self.check_shape(o)?;
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Rational::from(a - b)).collect();
        Ok(Measure { shape: self.shape.clone(), coeffs })
    }

    pub fn scale(&self, r: &Rational) -> Measure {
        Measure { shape: self.shape.clone(), coeffs: self.coeffs.iter().map(|c| Rational::from(c * r)).collect() }
    }

    fn check_shape(&self, o: &Measure) -> Result<()> {
        if self.shape != o.shape {
            return Err(Error::ShapeMismatch(self.shape.orders.clone(), o.shape.orders.clone()));
        }
        Ok(())
    }

    /// Sum of all coefficients, ν(𝟏).
    pub fn total(&self) -> Rational {
        self.coeffs.iter().fold(Rational::new(), |acc, c| acc + c)
    }

    /// Common-denominator form: ν_x = nums[x]/den.
    pub fn integer_form(&self) -> (Vec<Integer>, Integer) {
        let mut den = Integer::from(1);
        for c in &self.coeffs {
            if *c.denom() != 1 {
                den.lcm_mut(c.denom());
            }
        }
        let nums = self
            .coeffs
            .iter()
            .map(|c| c.numer() * Integer::from(&den / c.denom()))
            .collect();
        (nums, den)
    }

    /// Fourier evaluation ν(χ) = Σ_x ν_x χ(x), in Q(ζ_e) with e the shape exponent.
    pub fn evaluate(&self, chi: &Character) -> Result<CycNumber> {
        let v = self.evaluate_reduced(chi)?;
        v.embed_to_order(self.shape.exponent())
    }

    /// ν(χ) in the smallest field Q(ζ_{ord χ}).
    pub fn evaluate_reduced(&self, chi: &Character) -> Result<CycNumber> {
        if chi.shape != self.shape {
            return Err(Error::ShapeMismatch(self.shape.orders.clone(), chi.shape.orders.clone()));
        }
        let (nums, den) = self.integer_form();
        Ok(evaluate_integer_form(&self.shape, &nums, &den, chi))
    }

    /// ν(χ) for every character, in lexicographic character order.
    pub fn evaluate_all(&self) -> Vec<(Character, CycNumber)> {
        let (nums, den) = self.integer_form();
        self.shape
            .characters()
            .into_par_iter()
            .map(|chi| {
                let v = evaluate_integer_form(&self.shape, &nums, &den, &chi);
                (chi, v.embed_to_order(self.shape.exponent()).unwrap())
            })
            .collect()
    }

    /// Group-ring product.
    pub fn convolve(&self, o: &Measure) -> Result<Measure> {
        self.check_shape(o)?;
        let (an, ad) = self.integer_form();
        let (bn, bd) = o.integer_form();
        let n = self.shape.size();
        let elems: Vec<Vec<u64>> = self.shape.elements().collect();
        let mut out = vec![Integer::new(); n];
        let bnz: Vec<usize> = (0..n).filter(|&j| bn[j] != 0).collect();
        let mut z = vec![0u64; self.shape.rank()];
        for i in 0..n {
            if an[i] == 0 {
                continue;
            }
            for &j in &bnz {
                for (k, zk) in z.iter_mut().enumerate() {
                    *zk = (elems[i][k] + elems[j][k]) % self.shape.orders[k];
                }
                let idx = self.shape.index(&z);
                out[idx] += Integer::from(&an[i] * &bn[j]);
            }
        }
        let den = Integer::from(&ad * &bd);
        let coeffs = out.into_iter().map(|c| Rational::from((c, den.clone()))).collect();
        Ok(Measure { shape: self.shape.clone(), coeffs })
    }

    /// Image under x ↦ (x_i mod d'_i) for a coarser shape with d'_i | d_i.
    pub fn pushforward(&self, target: &GroupShape) -> Result<Measure> {
        if target.rank() != self.shape.rank()
            || target.orders.iter().zip(&self.shape.orders).any(|(t, s)| s % t != 0)
        {
            return Err(Error::Precondition(format!(
                "{:?} is not a componentwise quotient of {:?}",
                target.orders, self.shape.orders
            )));
        }
        let mut out = Measure::zero(target);
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let x = self.shape.element(i);
            out.coeffs[target.index(&x)] += c;
        }
        Ok(out)
    }

    /// Pushforward along an arbitrary map of groups given on elements.
    pub fn pushforward_by<F: Fn(&[u64]) -> Vec<u64>>(&self, target: &GroupShape, f: F) -> Measure {
        let mut out = Measure::zero(target);
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let x = self.shape.element(i);
            let y = f(&x);
            out.coeffs[target.index(&y)] += c;
        }
        out
    }

    /// Drop coordinates of order 1.
    pub fn squeeze(&self) -> Measure {
        let keep: Vec<usize> = (0..self.shape.rank()).filter(|&i| self.shape.orders[i] != 1).collect();
        let shape = self.shape.sub_shape(&keep);
        Measure { shape, coeffs: self.coeffs.clone() }
    }

    /// Specialize the factors in `factor_set` at χ0: ν_{χ0}(δ_x) = Σ_y χ0(y) ν_{(y,x)}.
    pub fn specialize(&self, factor_set: &[usize], chi0: &Character) -> Result<CycMeasure> {
        let r = self.shape.rank();
        if factor_set.iter().any(|&i| i >= r) {
            return Err(Error::Precondition("factor index out of range".into()));
        }
        let sub = self.shape.sub_shape(factor_set);
        if *chi0.shape() != sub {
            return Err(Error::ShapeMismatch(sub.orders.clone(), chi0.shape.orders.clone()));
        }
        let rest: Vec<usize> = (0..r).filter(|i| !factor_set.contains(i)).collect();
        let rest_shape = self.shape.sub_shape(&rest);
        let order = sub.exponent();
        let mut acc: Vec<Vec<Rational>> = vec![vec![Rational::new(); order as usize]; rest_shape.size()];
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let x = self.shape.element(i);
            let y: Vec<u64> = factor_set.iter().map(|&j| x[j]).collect();
            let z: Vec<u64> = rest.iter().map(|&j| x[j]).collect();
            let k = chi0.value_exp(&y);
            acc[rest_shape.index(&z)][k as usize] += c;
        }
        let coeffs = acc.into_iter().map(|v| CycNumber::from_coeffs(order, &v)).collect();
        Ok(CycMeasure { shape: rest_shape, order, coeffs })
    }

    /// ν(D^α) = Σ_x ν_x ∏ binom(x_n, α_n).
    pub fn derivative(&self, alpha: &DerivIndex) -> Result<Rational> {
        if alpha.0.len() != self.shape.rank() || alpha.0.iter().zip(&self.shape.orders).any(|(a, d)| a >= d) {
            return Err(Error::Precondition(format!("derivative index {:?} out of range", alpha.0)));
        }
        let mut acc = Rational::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let x = self.shape.element(i);
            let mut w = Integer::from(1);
            for (xn, an) in x.iter().zip(&alpha.0) {
                w *= binomial(*xn, *an);
                if w == 0 {
                    break;
                }
            }
            if w != 0 {
                acc += Rational::from(c * w);
            }
        }
        Ok(acc)
    }

    /// Amice coefficients b_ν(α) = ν(D^α) for α in the box, via per-axis binomial transforms.
    pub fn amice_coeffs(&self) -> AmiceCoeffs {
        let mut v = self.coeffs.clone();
        for axis in 0..self.shape.rank() {
            binomial_transform_axis(&self.shape, &mut v, axis, false);
        }
        AmiceCoeffs { shape: self.shape.clone(), coeffs: v }
    }

    /// Measure whose Amice polynomial is the given box polynomial.
    pub fn from_amice(a: &AmiceCoeffs) -> Measure {
        let mut v = a.coeffs.clone();
        for axis in 0..a.shape.rank() {
            binomial_transform_axis(&a.shape, &mut v, axis, true);
        }
        Measure { shape: a.shape.clone(), coeffs: v }
    }

    /// Inverse in Z_(p)[G] for p-primary G, by Fourier inversion over Galois orbits of
    /// characters. Fails when v_p(u(𝟏)) > 0.
    pub fn invert(&self, p: u64) -> Result<Measure> {
        if !self.shape.is_p_primary(p) {
            return Err(Error::Precondition(format!("shape {:?} is not {p}-primary", self.shape.orders)));
        }
        if let Some(c) = self.coeffs.iter().find(|c| vp_rat(c, p) < ValQ::int(0)) {
            return Err(Error::Precondition(format!("coefficient {c} is not {p}-integral")));
        }
        let total = self.total();
        if vp_rat(&total, p) != ValQ::int(0) {
            return Err(Error::NotInvertible(format!("v_{p}(u(1)) = {} > 0", vp_rat(&total, p))));
        }
        let n = self.shape.size();
        let (nums, den) = self.integer_form();
        let mut acc = vec![Rational::new(); n];
        for rep in orbit_representatives(&self.shape) {
            let o = rep.order();
            let w = evaluate_integer_form(&self.shape, &nums, &den, &rep).inverse()?;
            // t_m = Tr(w ζ_o^m)
            let t: Vec<Rational> = (0..o).map(|m| trace_times_root(&w, m)).collect();
            let e = self.shape.exponent();
            let scale = e / o;
            for (i, a) in acc.iter_mut().enumerate() {
                let x = self.shape.element(i);
                let k = rep.value_exp(&x) / scale;
                // ν_x picks up Tr(w·χ(−x))
                *a += &t[((o - k % o) % o) as usize];
            }
        }
        let g = Rational::from(n as u64);
        let coeffs: Vec<Rational> = acc.into_iter().map(|c| c / &g).collect();
        let inv = Measure { shape: self.shape.clone(), coeffs };
        debug_assert!(inv.coeffs.iter().all(|c| vp_rat(c, p) >= ValQ::int(0)));
        Ok(inv)
    }

    /// v_p(ν) = min_χ v_p(ν(χ)) with the lexicographically least witness.
    pub fn min_valuation(&self, p: u64) -> Result<(ValQ, Character)> {
        self.require_primary(p)?;
        let vals = self.valuations(p)?;
        let mut best = (ValQ::Infinite, self.shape.trivial_character());
        for (chi, v) in vals {
            if v < best.0 {
                best = (v, chi);
            }
        }
        Ok(best)
    }

    /// v_p(ν(χ)) for every character, lexicographic order.
    pub fn valuations(&self, p: u64) -> Result<Vec<(Character, ValQ)>> {
        self.require_primary(p)?;
        let (nums, den) = self.integer_form();
        self.shape
            .characters()
            .into_par_iter()
            .map(|chi| {
                let v = evaluate_integer_form(&self.shape, &nums, &den, &chi).vp(p)?;
                Ok((chi, v))
            })
            .collect()
    }

    fn require_primary(&self, p: u64) -> Result<()> {
        if self.shape.is_p_primary(p) {
            Ok(())
        } else {
            Err(Error::Precondition(format!("shape {:?} is not {p}-primary", self.shape.orders)))
        }
    }

    /// min_x v_p(ν_x).
    pub fn min_coeff_valuation(&self, p: u64) -> ValQ {
        self.coeffs.iter().map(|c| vp_rat(c, p)).min().unwrap_or(ValQ::Infinite)
    }

    /// Search for χ ≠ 𝟏 with v_p(ν(χ)) ≤ v_p(ν(𝟏)), recording whether the hypothesis
    /// v_p(ν(𝟏)) < v_p(|G|) + min_x v_p(ν_x) holds.
    pub fn max_modulus_witness(&self, p: u64) -> Result<MaxModulus> {
        let v1 = vp_rat(&self.total(), p);
        let vg = ValQ::int(crate::arith::vp_u(self.shape.size() as u64, p) as i64);
        let hypothesis = v1 < vg.add(&self.min_coeff_valuation(p));
        let witness = self
            .valuations(p)?
            .into_iter()
            .find(|(chi, v)| !chi.is_trivial() && *v <= v1)
            .map(|(chi, _)| chi);
        Ok(MaxModulus { hypothesis_holds: hypothesis, witness })
    }

    /// A set M with: for every χ some χ0 ∈ M has v_p(ν(χχ0)) = v_p(ν).
    pub fn witness_set(&self, p: u64) -> Result<WitnessSet> {
        if self.is_zero() {
            return Err(Error::Precondition("witness set of the zero measure".into()));
        }
        let vals: HashMap<Vec<u64>, ValQ> =
            self.valuations(p)?.into_iter().map(|(c, v)| (c.exps, v)).collect();
        let chars = self.shape.characters();
        let vmin = vals.values().min().cloned().unwrap();
        // twist so that the minimum is attained at the trivial character
        let chi_star = chars.iter().find(|c| vals[&c.exps] == vmin).unwrap().clone();
        let twisted = |psi: &Character| vals[&psi.mul(&chi_star).exps].clone();
        // greedy maximal subgroup M0 whose nontrivial members all have twisted valuation > vmin
        let mut m0: HashSet<Vec<u64>> = HashSet::from([self.shape.trivial_character().exps]);
        for psi in &chars {
            if m0.contains(&psi.exps) {
                continue;
            }
            let cand = subgroup_join(&self.shape, &m0, psi);
            let ok = cand.iter().all(|x| {
                let c = Character { shape: self.shape.clone(), exps: x.clone() };
                c.is_trivial() || twisted(&c) > vmin
            });
            if ok {
                m0 = cand;
            }
        }
        let mut members: Vec<Character> = m0
            .iter()
            .map(|x| Character { shape: self.shape.clone(), exps: x.clone() }.mul(&chi_star))
            .collect();
        members.sort_by(|a, b| a.exps.cmp(&b.exps));
        let subgroup_size = members.len();
        let covers = |ms: &[Character], chi: &Character| ms.iter().any(|m| vals[&chi.mul(m).exps] == vmin);
        let mut fallback = false;
        for chi in &chars {
            if !covers(&members, chi) {
                // cover the gap with a character realizing the minimum from χ
                fallback = true;
                let fix = chars.iter().find(|m| vals[&chi.mul(m).exps] == vmin).unwrap().clone();
                members.push(fix);
            }
        }
        Ok(WitnessSet { vmin, twist: chi_star, members, subgroup_size, fallback_used: fallback })
    }

    /// μ = min v_p(b_ν(α)), λ = min |α| among the minimizers.
    pub fn mu_lambda(&self, p: u64) -> MuLambda {
        let a = self.amice_coeffs();
        let mut best: Option<(ValQ, u64)> = None;
        for (i, b) in a.coeffs.iter().enumerate() {
            let v = vp_rat(b, p);
            if v.is_infinite() {
                continue;
            }
            let w: u64 = a.shape.element(i).iter().sum();
            best = match best {
                None => Some((v, w)),
                Some((bv, bw)) => {
                    if v < bv || (v == bv && w < bw) {
                        Some((v, w))
                    } else {
                        Some((bv, bw))
                    }
                }
            };
        }
        match best {
            None => MuLambda { mu: None, lambda: 0 },
            Some((ValQ::Finite(v), w)) => MuLambda { mu: Some(v.numer().to_i64().unwrap()), lambda: w },
            Some((ValQ::Infinite, _)) => unreachable!(),
        }
    }

    /// Largest r with ν ∈ I_r, for shapes of exponent p.
    pub fn augmentation_rank(&self, p: u64) -> Result<u64> {
        if self.shape.orders.iter().any(|&d| d != p && d != 1) {
            return Err(Error::UnsupportedShape(format!(
                "augmentation rank needs exponent {p}, got {:?}",
                self.shape.orders
            )));
        }
        if self.is_zero() {
            return Err(Error::Precondition("augmentation rank of the zero measure".into()));
        }
        if self.coeffs.iter().any(|c| vp_rat(c, p) < ValQ::int(0)) {
            return Err(Error::Precondition(format!("coefficients must be {p}-integral")));
        }
        if self.total() != 0 {
            return Ok(0);
        }
        let b = self.amice_coeffs();
        let mut r = 1u64;
        loop {
            if !augmentation_member(&b, p, r + 1) {
                return Ok(r);
            }
            r += 1;
            assert!(r < 10_000, "augmentation rank did not terminate");
        }
    }
}

/// Outcome of the maximum-modulus search.
#[derive(Clone, Debug)]
pub struct MaxModulus {
    pub hypothesis_holds: bool,
    pub witness: Option<Character>,
}

#[derive(Clone, Debug)]
pub struct WitnessSet {
    pub vmin: ValQ,
    pub twist: Character,
    pub members: Vec<Character>,
    /// Size of the greedy maximal subgroup before any fallback additions.
    pub subgroup_size: usize,
    pub fallback_used: bool,
}

impl WitnessSet {
    /// Exhaustive check of the defining property.
    pub fn verify(&self, nu: &Measure, p: u64) -> Result<bool> {
        let vals: HashMap<Vec<u64>, ValQ> = nu.valuations(p)?.into_iter().map(|(c, v)| (c.exps, v)).collect();
        Ok(nu
            .shape
            .characters()
            .iter()
            .all(|chi| self.members.iter().any(|m| vals[&chi.mul(m).exps] == self.vmin)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuLambda {
    /// None encodes μ = ∞ (the zero measure).
    pub mu: Option<i64>,
    pub lambda: u64,
}

/// Amice polynomial coefficients over the box ∏[0, d_n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmiceCoeffs {
    shape: GroupShape,
    coeffs: Vec<Rational>,
}

impl AmiceCoeffs {
    pub fn new(shape: &GroupShape, coeffs: Vec<Rational>) -> Self {
        assert_eq!(coeffs.len(), shape.size());
        AmiceCoeffs { shape: shape.clone(), coeffs }
    }

    /// Box polynomial from a list of (α, coefficient) terms.
    pub fn from_terms(shape: &GroupShape, terms: &[(Vec<u64>, i64)]) -> Self {
        let mut coeffs = vec![Rational::new(); shape.size()];
        for (a, c) in terms {
            coeffs[shape.index(a)] += Rational::from(*c);
        }
        AmiceCoeffs { shape: shape.clone(), coeffs }
    }

    pub fn shape(&self) -> &GroupShape {
        &self.shape
    }

    pub fn get(&self, alpha: &[u64]) -> &Rational {
        &self.coeffs[self.shape.index(alpha)]
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// f(T) at T_n = χ_n(1) − 1.
    pub fn evaluate_at(&self, chi: &Character) -> CycNumber {
        let e = self.shape.exponent();
        let ts: Vec<CycNumber> = chi
            .multipliers()
            .iter()
            .map(|&c| CycNumber::root_power(e, c as i64).sub(&CycNumber::one(e)))
            .collect();
        let mut acc = CycNumber::zero(e);
        for (i, b) in self.coeffs.iter().enumerate() {
            if *b == 0 {
                continue;
            }
            let alpha = self.shape.element(i);
            let mut term = CycNumber::from_rational(e, b.clone());
            for (t, &a) in ts.iter().zip(&alpha) {
                if a > 0 {
                    term = term.mul(&t.pow(a));
                }
            }
            acc = acc.add(&term);
        }
        acc
    }
}

/// A measure with cyclotomic coefficients (output of specialization).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycMeasure {
    shape: GroupShape,
    order: u64,
    coeffs: Vec<CycNumber>,
}

impl CycMeasure {
    pub fn shape(&self) -> &GroupShape {
        &self.shape
    }

    pub fn coeff(&self, x: &[u64]) -> &CycNumber {
        &self.coeffs[self.shape.index(x)]
    }

    pub fn evaluate(&self, chi: &Character) -> Result<CycNumber> {
        if chi.shape != self.shape {
            return Err(Error::ShapeMismatch(self.shape.orders.clone(), chi.shape.orders.clone()));
        }
        let e = self.shape.exponent();
        let l = lcm(e, self.order);
        let mut dense = vec![Rational::new(); l as usize];
        let (se, so) = (l / e, l / self.order);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let x = self.shape.element(i);
            let shift = chi.value_exp(&x) * se;
            for (j, cj) in c.coeffs().iter().enumerate() {
                if *cj != 0 {
                    dense[((j as u64 * so + shift) % l) as usize] += cj;
                }
            }
        }
        Ok(CycNumber::from_coeffs(l, &dense))
    }
}

fn evaluate_integer_form(shape: &GroupShape, nums: &[Integer], den: &Integer, chi: &Character) -> CycNumber {
    let o = chi.order();
    let e = shape.exponent();
    let scale = e / o;
    let mult: Vec<u64> = chi.multipliers();
    let mut buckets = vec![Integer::new(); o as usize];
    let rank = shape.rank();
    let mut x = vec![0u64; rank];
    let mut k = 0u64; // Σ c_i x_i mod e
    for num in nums {
        if *num != 0 {
            buckets[(k / scale) as usize] += num;
        }
        // odometer step, last coordinate fastest
        for i in (0..rank).rev() {
            x[i] += 1;
            k = (k + mult[i]) % e;
            if x[i] < shape.orders[i] {
                break;
            }
            x[i] = 0;
            k = (k + e - mult[i] * shape.orders[i] % e) % e;
        }
    }
    CycNumber::from_dense_integers(o, buckets, den)
}

/// One character from each cyclic subgroup of Ĝ (Galois orbits of characters).
fn orbit_representatives(shape: &GroupShape) -> Vec<Character> {
    let mut seen = vec![false; shape.size()];
    let mut reps = Vec::new();
    for chi in shape.characters() {
        let idx = shape.index(&chi.exps);
        if seen[idx] {
            continue;
        }
        let o = chi.order();
        for j in 1..=o {
            if gcd(j, o) == 1 {
                seen[shape.index(&chi.pow(j as i64).exps)] = true;
            }
        }
        reps.push(chi);
    }
    reps
}

/// Tr_{Q(ζ_o)/Q}(w·ζ_o^m) through Ramanujan sums.
fn trace_times_root(w: &CycNumber, m: u64) -> Rational {
    let o = w.order();
    let mut acc = Rational::new();
    for (i, c) in w.coeffs().iter().enumerate() {
        if *c == 0 {
            continue;
        }
        acc += Rational::from(c * ramanujan_sum(o, i as u64 + m));
    }
    acc
}

/// c_o(j) = Tr(ζ_o^j) = μ(o/g)·φ(o)/φ(o/g), g = gcd(j, o).
pub fn ramanujan_sum(o: u64, j: u64) -> i64 {
    let g = gcd(j % o, o);
    let g = if g == 0 { o } else { g };
    let t = o / g;
    mobius(t) * (euler_phi(o) / euler_phi(t)) as i64
}

fn binomial_transform_axis(shape: &GroupShape, v: &mut [Rational], axis: usize, inverse: bool) {
    let d = shape.orders[axis] as usize;
    if d == 1 {
        return;
    }
    let stride: usize = shape.orders[axis + 1..].iter().product::<u64>() as usize;
    let block = stride * d;
    let table: Vec<Vec<Integer>> = (0..d)
        .map(|a| (0..d).map(|x| binomial(x.max(a) as u64, x.min(a) as u64)).collect())
        .collect();
    let mut tmp = vec![Rational::new(); d];
    for base in (0..v.len()).step_by(block) {
        for off in 0..stride {
            for (a, t) in tmp.iter_mut().enumerate() {
                *t = Rational::new();
                for x in 0..d {
                    let c = &v[base + off + x * stride];
                    if *c == 0 {
                        continue;
                    }
                    if !inverse && x >= a {
                        // b(a) = Σ_x C(x, a) ν_x
                        *t += Rational::from(c * &table[a][x]);
                    } else if inverse && a <= x {
                        // ν_a = Σ_x (−1)^{x−a} C(x, a) b(x)
                        let s = Rational::from(c * &table[a][x]);
                        if (x - a) % 2 == 0 {
                            *t += s;
                        } else {
                            *t -= s;
                        }
                    }
                }
            }
            for (a, t) in tmp.iter().enumerate() {
                v[base + off + a * stride] = t.clone();
            }
        }
    }
}

fn subgroup_join(shape: &GroupShape, m: &HashSet<Vec<u64>>, psi: &Character) -> HashSet<Vec<u64>> {
    let mut out = m.clone();
    let o = psi.order();
    for x in m {
        let base = Character { shape: shape.clone(), exps: x.clone() };
        for j in 0..o {
            out.insert(base.mul(&psi.pow(j as i64)).exps);
        }
    }
    out
}

/// Is the box polynomial b in (monomials of degree r) + ((1+T_n)^p − 1) over Z_(p)?
fn augmentation_member(b: &AmiceCoeffs, p: u64, r: u64) -> bool {
    let shape = &b.shape;
    let rank = shape.rank();
    let k = r as u32 + 1;
    let modulus = Integer::from(p).pow(k);
    let pm = |x: &Integer| -> Integer { reduce_mod(x.clone(), &modulus) };
    // T^j reduced mod (1+T)^p − 1, as coefficient vectors of length p
    let maxdeg = (r + p) as usize;
    let mut red: Vec<Vec<Integer>> = Vec::with_capacity(maxdeg + 1);
    let rel: Vec<Integer> = (0..p).map(|i| binomial(p, i)).collect(); // T^p = −Σ_{1≤i<p} C(p,i)T^i
    let mut cur = vec![Integer::new(); p as usize];
    cur[0] = Integer::from(1);
    for _ in 0..=maxdeg {
        red.push(cur.clone());
        let mut next = vec![Integer::new(); p as usize];
        let top = cur[p as usize - 1].clone();
        for i in 1..p as usize {
            next[i] = cur[i - 1].clone();
        }
        for i in 1..p as usize {
            next[i] -= Integer::from(&top * &rel[i]);
        }
        cur = next.iter().map(&pm).collect();
    }
    let dim = shape.size();
    // generators: reduce(T^δ) for |δ| ≥ r with δ_n ≤ r + p − 1
    let mut gens: Vec<Vec<Integer>> = Vec::new();
    let dmax = (r + p - 1) as usize;
    let active: Vec<usize> = (0..rank).filter(|&i| shape.orders[i] == p).collect();
    let mut delta = vec![0usize; active.len()];
    loop {
        let w: usize = delta.iter().sum();
        if w as u64 >= r {
            let mut vec_ = vec![Integer::from(1)];
            for &dn in &delta {
                let rv = &red[dn];
                let mut nv = Vec::with_capacity(vec_.len() * p as usize);
                for a in &vec_ {
                    for c in rv {
                        nv.push(pm(&Integer::from(a * c)));
                    }
                }
                vec_ = nv;
            }
            // active coordinates are exactly the nontrivial axes, so the layout matches
            if vec_.iter().any(|c| *c != 0) {
                gens.push(vec_);
            }
        }
        let mut i = 0;
        loop {
            if i == delta.len() {
                return finish_membership(gens, b, p, k, &modulus, dim);
            }
            delta[i] += 1;
            if delta[i] <= dmax {
                break;
            }
            delta[i] = 0;
            i += 1;
        }
    }
}

fn finish_membership(gens: Vec<Vec<Integer>>, b: &AmiceCoeffs, p: u64, k: u32, modulus: &Integer, dim: usize) -> bool {
    let pm = |x: Integer| -> Integer { reduce_mod(x, modulus) };
    // the module also contains p^{r} I ⊇ p^{k-1} I, so adjoin p^{k−1}·T^α for α ≠ 0
    let mut rows = gens;
    let pk1 = Integer::from(p).pow(k - 1);
    for a in 1..dim {
        let mut v = vec![Integer::new(); dim];
        v[a] = pk1.clone();
        rows.push(v);
    }
    let target: Vec<Integer> = b
        .coeffs
        .iter()
        .map(|c| {
            let inv = Integer::from(c.denom().invert_ref(modulus).expect("p-integral coefficient"));
            pm(c.numer() * inv)
        })
        .collect();
    let echelon = howell_echelon(rows, p, k, modulus, dim);
    let mut t = target;
    for (col, v, row) in &echelon {
        if t[*col] == 0 {
            continue;
        }
        let tv = crate::arith::vp_int(&t[*col], p).unwrap();
        if tv < *v {
            return false;
        }
        let pv = Integer::from(p).pow(*v);
        let f = Integer::from(&t[*col] / &pv);
        for (tj, rj) in t.iter_mut().zip(row) {
            *tj = pm(&*tj - Integer::from(&f * rj));
        }
    }
    t.iter().all(|c| *c == 0)
}

/// Echelon form over Z/p^k with saturation rows; returns (pivot column, pivot valuation, row)
/// with each row's pivot entry exactly p^v.
fn howell_echelon(mut rows: Vec<Vec<Integer>>, p: u64, k: u32, modulus: &Integer, dim: usize) -> Vec<(usize, u32, Vec<Integer>)> {
    let pm = |x: Integer| -> Integer { reduce_mod(x, modulus) };
    let mut out = Vec::new();
    for col in 0..dim {
        let mut best: Option<(usize, u32)> = None;
        for (i, r) in rows.iter().enumerate() {
            if r[col] != 0 {
                let v = crate::arith::vp_int(&r[col], p).unwrap();
                if v < k && best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((i, v));
                }
            }
        }
        let Some((bi, v)) = best else { continue };
        let mut piv = rows.swap_remove(bi);
        let pv = Integer::from(p).pow(v);
        let unit = Integer::from(&piv[col] / &pv);
        let uinv = unit.invert(modulus).expect("unit part is invertible");
        for c in piv.iter_mut() {
            *c = pm(Integer::from(&*c * &uinv));
        }
        for r in rows.iter_mut() {
            if r[col] == 0 {
                continue;
            }
            let f = Integer::from(&r[col] / &pv);
            for (rc, pc) in r.iter_mut().zip(&piv) {
                *rc = pm(&*rc - Integer::from(&f * pc));
            }
        }
        // saturation: p^{k−v}·pivot row kills the pivot but may survive elsewhere
        let sat_f = Integer::from(p).pow(k - v);
        let sat: Vec<Integer> = piv.iter().map(|c| pm(Integer::from(c * &sat_f))).collect();
        if sat.iter().any(|c| *c != 0) {
            rows.push(sat);
        }
        rows.retain(|r| r.iter().any(|c| *c != 0));
        out.push((col, v, piv));
    }
    out
}

fn reduce_mod(x: Integer, m: &Integer) -> Integer {
    let mut r = x % m;
    if r < 0 {
        r += m;
    }
    r
}
