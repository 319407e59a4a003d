//! Seeded random measures and the exhaustive property battery for the group-algebra
//! layer, with independent oracles (direct character sums, linear-solve inversion).

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rug::{Integer, Rational};

use crate::arith::{binomial, vp_u};
use crate::cyclotomic::{vp_rat, CycNumber, ValQ};
use crate::error::Error;
use crate::groupmeasure::{AmiceCoeffs, Character, DerivIndex, GroupShape, Measure, MuLambda};

pub fn shapes_for(p: u64) -> Vec<Vec<u64>> {
    match p {
        2 => vec![
            vec![2],
            vec![4],
            vec![2, 2],
            vec![8],
            vec![4, 2],
            vec![2, 2, 2],
            vec![4, 4],
            vec![8, 2],
            vec![2, 2, 2, 2],
            vec![4, 2, 2],
            vec![16, 4],
            vec![2, 2, 2, 2, 2, 2],
        ],
        3 => vec![vec![3], vec![9], vec![3, 3], vec![27], vec![9, 3], vec![3, 3, 3], vec![9, 9], vec![3, 3, 3, 3]],
        5 => vec![vec![5], vec![25], vec![5, 5]],
        _ => vec![vec![p]],
    }
}

pub fn random_shape<R: Rng>(rng: &mut R, p: u64) -> GroupShape {
    GroupShape::new(shapes_for(p).choose(rng).unwrap().clone()).unwrap()
}

fn pow(p: u64, k: u32) -> i64 {
    (p as i64).pow(k)
}

/// Integer-coefficient measures drawn from several families so that the
/// hypotheses of the valuation statements are hit with reasonable frequency.
pub fn random_measure<R: Rng>(rng: &mut R, shape: &GroupShape, p: u64) -> Measure {
    let n = shape.size();
    let mode = rng.gen_range(0..6);
    let mut c: Vec<i64> = match mode {
        0 => (0..n).map(|_| rng.gen_range(-4..=4)).collect(),
        1 => {
            let mut v = vec![0i64; n];
            for _ in 0..rng.gen_range(1..=3) {
                v[rng.gen_range(0..n)] += rng.gen_range(-3..=3);
            }
            v
        }
        2 => {
            // ν(𝟏) divisible by p^j
            let mut v: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
            let j = rng.gen_range(1..=3);
            let t: i64 = v.iter().sum();
            v[0] -= t;
            v[0] += pow(p, j) * rng.gen_range(-1..=1);
            v
        }
        3 => {
            // augmentation ideal
            let mut v: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
            let t: i64 = v.iter().sum();
            v[0] -= t;
            v
        }
        4 => return amice_built(rng, shape, p),
        _ => {
            let k = rng.gen_range(0..=2);
            (0..n).map(|_| rng.gen_range(-2..=2) * pow(p, k)).collect()
        }
    };
    if c.iter().all(|&x| x == 0) {
        c[0] = 1;
    }
    Measure::from_ints(shape, &c).unwrap()
}

/// Measure from a random Amice polynomial whose low-degree part is divisible by p.
pub fn amice_built<R: Rng>(rng: &mut R, shape: &GroupShape, p: u64) -> Measure {
    let n = shape.size();
    let cut = rng.gen_range(0..=p);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let w: u64 = shape.element(i).iter().sum();
        let sparse = rng.gen_bool(0.6);
        let mut v = if sparse { 0 } else { rng.gen_range(-2..=2) };
        if w < cut {
            v *= p as i64;
        }
        b.push(Rational::from(v));
    }
    if b.iter().all(|x| *x == 0) {
        b[n - 1] = Rational::from(1);
    }
    Measure::from_amice(&AmiceCoeffs::new(shape, b))
}

/// Exact evaluations and valuations at every character.
pub struct Facts {
    pub values: Vec<(Character, CycNumber)>,
    pub vals: HashMap<Vec<u64>, ValQ>,
    pub v1: ValQ,
    pub vmin: ValQ,
}

impl Facts {
    pub fn new(nu: &Measure, p: u64) -> Self {
        let values = nu.evaluate_all();
        let vals: HashMap<Vec<u64>, ValQ> =
            values.iter().map(|(c, v)| (c.exps().to_vec(), v.vp(p).unwrap())).collect();
        let v1 = vals[&vec![0; nu.shape().rank()]].clone();
        let vmin = vals.values().min().cloned().unwrap();
        Facts { values, vals, v1, vmin }
    }

    pub fn v(&self, chi: &Character) -> &ValQ {
        &self.vals[chi.exps()]
    }
}

pub type Check = Result<bool, String>;

/// Direct character sum, independent of the bucketed evaluation.
pub fn brute_evaluate(nu: &Measure, chi: &Character) -> CycNumber {
    let e = nu.shape().exponent();
    let mut acc = CycNumber::zero(e);
    for (i, c) in nu.coeffs().iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let x = nu.shape().element(i);
        acc = acc.add(&chi.value(&x).scale(c));
    }
    acc
}

pub fn fourier_inversion(nu: &Measure, f: &Facts) -> Check {
    let s = nu.shape();
    let e = s.exponent();
    let g = Rational::from(s.size() as u64);
    for (i, c) in nu.coeffs().iter().enumerate() {
        let x = s.element(i);
        let mut dense = vec![Rational::new(); e as usize];
        for (chi, v) in &f.values {
            let shift = (e - chi.value_exp(&x)) % e;
            for (j, cj) in v.coeffs().iter().enumerate() {
                if *cj != 0 {
                    dense[((j as u64 + shift) % e) as usize] += cj;
                }
            }
        }
        let lhs = CycNumber::from_coeffs(e, &dense);
        if lhs != CycNumber::from_rational(e, Rational::from(c * &g)) {
            return Err(format!("Fourier inversion fails at {x:?}"));
        }
    }
    Ok(true)
}

pub fn max_modulus(nu: &Measure, p: u64, f: &Facts) -> Check {
    let vg = ValQ::int(vp_u(nu.shape().size() as u64, p) as i64);
    let hyp = f.v1 < vg.add(&nu.min_coeff_valuation(p));
    let found = f.values.iter().any(|(c, _)| !c.is_trivial() && *f.v(c) <= f.v1);
    let reported = nu.max_modulus_witness(p).map_err(|e| e.to_string())?;
    if reported.hypothesis_holds != hyp {
        return Err("hypothesis flag disagrees".into());
    }
    if reported.witness.is_some() != found {
        return Err("witness search disagrees with exhaustive scan".into());
    }
    if hyp && !found {
        return Err("maximum modulus principle violated".into());
    }
    Ok(hyp)
}

fn nontrivial_factors(s: &GroupShape) -> Vec<u64> {
    s.orders().iter().copied().filter(|&d| d > 1).collect()
}

pub fn refined_max_modulus(nu: &Measure, p: u64, f: &Facts) -> Check {
    if nu.is_zero() {
        return Ok(false);
    }
    let bound = nontrivial_factors(nu.shape()).iter().fold(Rational::new(), |acc, &d| {
        let m = vp_u(d, p);
        acc + Rational::from((1, p.pow(m - 1)))
    });
    let hyp = f.v1 < ValQ::Finite(bound);
    if !hyp {
        return Ok(false);
    }
    let ok = f.values.iter().any(|(c, _)| !c.is_pth_power(p) && *f.v(c) <= f.v1);
    if ok {
        Ok(true)
    } else {
        Err("refined maximum modulus violated".into())
    }
}

pub fn nonvanishing(nu: &Measure, p: u64, f: &Facts) -> Check {
    if nu.is_zero() {
        return Ok(false);
    }
    let rank = nontrivial_factors(nu.shape()).len() as i64;
    if f.v1 >= ValQ::int(rank) {
        return Ok(false);
    }
    if f.values.iter().any(|(c, v)| !c.is_pth_power(p) && !v.is_zero()) {
        Ok(true)
    } else {
        Err("non-vanishing condition violated".into())
    }
}

pub fn specialization<R: Rng>(rng: &mut R, nu: &Measure) -> Check {
    let s = nu.shape();
    let r = s.rank();
    if r < 2 {
        return Ok(false);
    }
    let i = rng.gen_range(0..r);
    let sub = s.sub_shape(&[i]);
    let chi0 = Character::new(&sub, vec![rng.gen_range(0..s.orders()[i])]).unwrap();
    let spec = nu.specialize(&[i], &chi0).map_err(|e| e.to_string())?;
    let e = s.exponent();
    for chi in spec.shape().characters() {
        let mut exps = chi.exps().to_vec();
        exps.insert(i, chi0.exps()[0]);
        let full = Character::new(s, exps).unwrap();
        let lhs = spec.evaluate(&chi).unwrap().embed_to_order(e).unwrap();
        let rhs = brute_evaluate(nu, &full);
        if lhs != rhs {
            return Err(format!("specialization mismatch at {:?}", full.exps()));
        }
    }
    Ok(true)
}

/// Solve u * x = δ_0 as a |G|×|G| linear system over Q.
pub fn invert_by_linear_solve(u: &Measure) -> Option<Measure> {
    let s = u.shape();
    let n = s.size();
    let elems: Vec<Vec<u64>> = s.elements().collect();
    // row z, column y: u_{z−y}
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|z| {
            let mut row: Vec<Rational> = (0..n)
                .map(|y| {
                    let d: Vec<u64> = elems[z]
                        .iter()
                        .zip(&elems[y])
                        .zip(s.orders())
                        .map(|((a, b), o)| (a + o - b) % o)
                        .collect();
                    u.coeff(&d).clone()
                })
                .collect();
            row.push(Rational::from(u64::from(z == 0)));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| m[r][col] != 0)?;
        m.swap(col, piv);
        let inv = Rational::from(1) / m[col][col].clone();
        for c in col..=n {
            m[col][c] *= &inv;
        }
        for r in 0..n {
            if r != col && m[r][col] != 0 {
                let f = m[r][col].clone();
                for c in col..=n {
                    let t = Rational::from(&f * &m[col][c]);
                    m[r][c] -= t;
                }
            }
        }
    }
    let x: Vec<Rational> = m.into_iter().map(|row| row[n].clone()).collect();
    Some(Measure::from_coeffs(s, x).unwrap())
}

pub fn invertibility(nu: &Measure, p: u64, f: &Facts, with_oracle: bool) -> Check {
    let res = nu.invert(p);
    if f.v1 == ValQ::int(0) {
        let inv = res.map_err(|e| format!("expected invertible: {e}"))?;
        if nu.convolve(&inv).unwrap() != Measure::identity(nu.shape()) {
            return Err("u * u^-1 ≠ δ_0".into());
        }
        if inv.coeffs().iter().any(|c| vp_rat(c, p) < ValQ::int(0)) {
            return Err("inverse not p-integral".into());
        }
        if with_oracle && invert_by_linear_solve(nu) != Some(inv) {
            return Err("inverse disagrees with linear solve".into());
        }
        Ok(true)
    } else {
        match res {
            Err(Error::NotInvertible(_)) => Ok(false),
            other => Err(format!("expected not-invertible, got {other:?}")),
        }
    }
}

pub fn amice_interpolation<R: Rng>(rng: &mut R, nu: &Measure, f: &Facts, samples: usize) -> Check {
    let a = nu.amice_coeffs();
    for _ in 0..samples {
        let (chi, v) = f.values.choose(rng).unwrap();
        if a.evaluate_at(chi) != *v {
            return Err(format!("Amice interpolation fails at {:?}", chi.exps()));
        }
    }
    Ok(true)
}

fn digit_shape(s: &GroupShape, p: u64) -> GroupShape {
    GroupShape::new(s.orders().iter().map(|&d| if d == 1 { 1 } else { p }).collect()).unwrap()
}

pub fn derivative_congruence(nu: &Measure, p: u64) -> Check {
    let s = nu.shape();
    let ds = digit_shape(s, p);
    let bar = nu.pushforward(&ds).unwrap();
    for alpha in ds.elements() {
        let a = DerivIndex(alpha.clone());
        let lhs = nu.derivative(&a).unwrap();
        let rhs = bar.derivative(&a).unwrap();
        if vp_rat(&(lhs - rhs), p) < ValQ::int(1) {
            return Err(format!("derivative congruence fails at {alpha:?}"));
        }
    }
    Ok(true)
}

/// f mod (p, T_n^p) expanded from ∏ (1+T_n)^{x_n} by repeated multiplication.
pub fn dual_numbers(nu: &Measure, p: u64) -> Check {
    let s = nu.shape();
    let ds = digit_shape(s, p);
    let bar = nu.pushforward(&ds).unwrap();
    let pi = p as i64;
    let modp = |r: &Rational| -> i64 {
        let d = r.denom().mod_u(p as u32) as i64;
        let n = Integer::from(r.numer() % p).to_i64().unwrap();
        let inv = (1..pi).find(|k| (k * d) % pi == 1).unwrap();
        (n * inv).rem_euclid(pi)
    };
    let mut f = vec![0i64; ds.size()];
    for (i, c) in bar.coeffs().iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let x = ds.element(i);
        let mut poly = vec![0i64; ds.size()];
        poly[0] = 1;
        for (axis, &xn) in x.iter().enumerate() {
            for _ in 0..xn {
                // multiply by (1 + T_axis), truncating T_axis^p
                let mut next = poly.clone();
                for (j, &pc) in poly.iter().enumerate() {
                    if pc == 0 {
                        continue;
                    }
                    let mut a = ds.element(j);
                    if a[axis] + 1 < ds.orders()[axis] {
                        a[axis] += 1;
                        let k = ds.index(&a);
                        next[k] = (next[k] + pc) % pi;
                    }
                }
                poly = next;
            }
        }
        let cm = modp(c);
        for (fj, pj) in f.iter_mut().zip(&poly) {
            *fj = (*fj + cm * pj).rem_euclid(pi);
        }
    }
    for alpha in ds.elements() {
        let lhs = modp(&nu.derivative(&DerivIndex(alpha.clone())).unwrap());
        if lhs != f[ds.index(&alpha)] {
            return Err(format!("dual-number congruence fails at {alpha:?}"));
        }
    }
    Ok(true)
}

fn is_exponent_p(s: &GroupShape, p: u64) -> bool {
    s.orders().iter().all(|&d| d == p || d == 1)
}

pub fn kato_kolyvagin(nu: &Measure, p: u64, f: &Facts) -> Check {
    let s = nu.shape();
    if !is_exponent_p(s, p) || s.rank() > 4 || nu.is_zero() {
        return Ok(false);
    }
    let ml = nu.mu_lambda(p);
    let mu = ValQ::int(ml.mu.unwrap());
    let mut applied = false;
    for r in 1..=s.rank() {
        let d = nu.derivative(&DerivIndex::kolyvagin(s.rank(), r)).unwrap();
        if vp_rat(&d, p) != mu {
            continue;
        }
        applied = true;
        let idx: Vec<usize> = (0..r).collect();
        let bound = mu.add(&ValQ::frac(r as i64, p as i64 - 1));
        let ok = f.values.iter().any(|(c, _)| c.supported_on(&idx) && *f.v(c) <= bound);
        if !ok {
            return Err(format!("Kato–Kolyvagin bound fails for r = {r}"));
        }
    }
    Ok(applied)
}

/// (Z/p^m)^n with n ≥ 1.
fn homogeneous_m(s: &GroupShape, p: u64) -> Option<u32> {
    let o = s.orders();
    if o.is_empty() || o.iter().any(|&d| d != o[0]) || o[0] == 1 || !s.is_p_primary(p) {
        return None;
    }
    Some(vp_u(o[0], p))
}

pub fn weierstrass(nu: &Measure, p: u64, f: &Facts) -> Check {
    let Some(m) = homogeneous_m(nu.shape(), p) else { return Ok(false) };
    let ml = nu.mu_lambda(p);
    let Some(mu) = ml.mu else { return Ok(false) };
    let lam = ml.lambda;
    let den = (p.pow(m) - p.pow(m - 1)) as i64;
    let mut applied = false;
    if lam + 2 <= p || (lam + 1 == p && m == 1) {
        applied = true;
        let want = ValQ::int(mu).add(&ValQ::frac(lam as i64, den));
        if f.vmin != want {
            return Err(format!("Weierstrass equality fails: v = {}, μ = {mu}, λ = {lam}", f.vmin));
        }
    }
    let a = nu.amice_coeffs();
    for (i, b) in a.coeffs().iter().enumerate() {
        let alpha = nu.shape().element(i);
        let w: u64 = alpha.iter().sum();
        if w == 0 || w + 2 > p || vp_rat(b, p) != ValQ::int(mu) {
            continue;
        }
        applied = true;
        let bound = ValQ::int(mu).add(&ValQ::frac(w as i64, den));
        let ok = f.values.iter().any(|(c, _)| {
            c.exps().iter().zip(&alpha).all(|(&k, &an)| (k != 0) == (an != 0)) && *f.v(c) <= bound
        });
        if !ok {
            return Err(format!("support-restricted bound fails at α = {alpha:?}"));
        }
    }
    Ok(applied)
}

pub fn augmentation(nu: &Measure, p: u64, f: &Facts) -> Check {
    let s = nu.shape();
    if !is_exponent_p(s, p) || nu.is_zero() || nu.total() != 0 {
        return Ok(false);
    }
    let r = nu.augmentation_rank(p).map_err(|e| e.to_string())?;
    let want = match &f.vmin {
        ValQ::Finite(v) => Rational::from(v * (p - 1)),
        ValQ::Infinite => return Err("nonzero measure with infinite valuation".into()),
    };
    if r != want {
        return Err(format!("r_aug = {r} but (p−1)·v_p = {want}"));
    }
    Ok(true)
}

pub fn witness(nu: &Measure, p: u64) -> Check {
    if nu.is_zero() {
        return Ok(false);
    }
    let ws = nu.witness_set(p).map_err(|e| e.to_string())?;
    if !ws.verify(nu, p).unwrap() {
        return Err("witness set property fails".into());
    }
    Ok(!ws.fallback_used)
}

/// f = p + T_1⋯T_r on (Z/p)^r.
pub fn counterexample_equality(p: u64, r: usize) -> Measure {
    let s = GroupShape::new(vec![p; r]).unwrap();
    let a = AmiceCoeffs::from_terms(&s, &[(vec![0; r], p as i64), (vec![1; r], 1)]);
    Measure::from_amice(&a)
}

/// f = ((T+1)^p − 1)/T on Z/p.
pub fn counterexample_support(p: u64) -> Measure {
    let s = GroupShape::new(vec![p]).unwrap();
    let terms: Vec<(Vec<u64>, i64)> =
        (1..=p).map(|k| (vec![k - 1], binomial(p, k).to_i64().unwrap())).collect();
    Measure::from_amice(&AmiceCoeffs::from_terms(&s, &terms))
}

#[derive(Default, Debug)]
pub struct SuiteReport {
    pub measures: usize,
    pub hits: HashMap<&'static str, usize>,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn record(&mut self, name: &'static str, r: Check) {
        match r {
            Ok(true) => *self.hits.entry(name).or_default() += 1,
            Ok(false) => {
                self.hits.entry(name).or_default();
            }
            Err(e) => self.failures.push(format!("{name}: {e}")),
        }
    }
}

/// The full property battery over `count` seeded random measures.
pub fn run_suite(seed: u64, count: usize) -> SuiteReport {
    run_suite_with(seed, count, false)
}

/// As `run_suite`; with `corrupt` set, one coefficient of each measure is perturbed after its
/// character values were computed, which the Fourier check must detect.
pub fn run_suite_with(seed: u64, count: usize, corrupt: bool) -> SuiteReport {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::default();
    for k in 0..count {
        let p = [2u64, 3, 5][k % 3];
        let shape = random_shape(&mut rng, p);
        let nu = random_measure(&mut rng, &shape, p);
        let f = Facts::new(&nu, p);
        rep.measures += 1;
        if corrupt {
            let mut bad = nu.clone();
            let i = rng.gen_range(0..shape.size());
            let x = shape.element(i);
            bad.add_at(&x, &Rational::from(1));
            rep.record("fourier", fourier_inversion(&bad, &f));
            continue;
        }
        rep.record("fourier", if k % 10 == 0 { fourier_inversion(&nu, &f) } else { Ok(false) });
        rep.record("max_modulus", max_modulus(&nu, p, &f));
        rep.record("refined_max_modulus", refined_max_modulus(&nu, p, &f));
        rep.record("nonvanishing", nonvanishing(&nu, p, &f));
        rep.record("specialization", specialization(&mut rng, &nu));
        rep.record("invertibility", invertibility(&nu, p, &f, shape.size() <= 27));
        rep.record("amice", amice_interpolation(&mut rng, &nu, &f, 4));
        rep.record("derivative_congruence", derivative_congruence(&nu, p));
        rep.record("dual_numbers", dual_numbers(&nu, p));
        rep.record("kato_kolyvagin", kato_kolyvagin(&nu, p, &f));
        rep.record("weierstrass", weierstrass(&nu, p, &f));
        rep.record("witness_set", witness(&nu, p));
        let aug = if is_exponent_p(&shape, p) && shape.size() <= 125 {
            let mut c = nu.coeffs().to_vec();
            let t = nu.total();
            c[0] -= t;
            let nu0 = Measure::from_coeffs(&shape, c).unwrap();
            if nu0.is_zero() {
                Ok(false)
            } else {
                let f0 = Facts::new(&nu0, p);
                augmentation(&nu0, p, &f0)
            }
        } else {
            Ok(false)
        };
        rep.record("augmentation", aug);
    }
    rep
}

/// The two counterexample families: both must violate the statements they target.
pub fn counterexamples_behave() -> Result<(), String> {
    for (p, r) in [(2u64, 2usize), (2, 3), (3, 3), (3, 4)] {
        let nu = counterexample_equality(p, r);
        let ml = nu.mu_lambda(p);
        let f = Facts::new(&nu, p);
        let predicted = ValQ::int(ml.mu.unwrap()).add(&ValQ::frac(ml.lambda as i64, p as i64 - 1));
        if ml.lambda as usize != r || f.vmin == predicted || f.vmin != ValQ::int(1) {
            return Err(format!("p + T_1⋯T_{r} at p = {p} does not break the equality as expected"));
        }
    }
    for p in [2u64, 3, 5, 7] {
        let nu = counterexample_support(p);
        let ml = nu.mu_lambda(p);
        let f = Facts::new(&nu, p);
        if ml != (MuLambda { mu: Some(0), lambda: p - 1 }) {
            return Err(format!("unexpected invariants {ml:?} at p = {p}"));
        }
        let bound = ValQ::int(1);
        if f.values.iter().any(|(c, _)| !c.is_trivial() && *f.v(c) <= bound) {
            return Err(format!("((T+1)^p−1)/T at p = {p} unexpectedly satisfies the support bound"));
        }
        if f.vmin != ValQ::int(1) {
            return Err(format!("equality should still hold for λ = p−1, m = 1 at p = {p}"));
        }
    }
    Ok(())
}
