//! Verification batteries shared by the command-line tool and the acceptance run.
//! Each returns a `Tally` of named checks; an `Err` means a computation could not
//! be carried out, a failure inside the tally means an identity did not hold.

use std::collections::BTreeMap;

use rug::Float;

use crate::arith::{gcd, invmod, is_prime, mult_order, powmod, primitive_root, vp_u};
use crate::arithstat::{census_counts, g_table};
use crate::dirichlet::DirichletGroup;
use crate::error::Result;
use crate::horizontal::{forget_tail, interpolation_check_all, is_tw_prime, nu_truncation, NuTruncation};
use crate::kurihara::{check_hypotheses, derivative_congruence, kato_primes, kurihara_number};
use crate::modsym::{numeric_twisted_l, ModularSymbols};
use crate::numeric::Complex;

#[derive(Clone, Debug, Default)]
pub struct Tally {
    pub checks: BTreeMap<String, u64>,
    pub failures: Vec<String>,
    pub skipped: Vec<String>,
}

impl Tally {
    pub fn check(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        *self.checks.entry(name.to_string()).or_default() += 1;
        if !ok {
            self.failures.push(format!("{name}: {}", detail()));
        }
    }

    pub fn skip(&mut self, why: impl Into<String>) {
        self.skipped.push(why.into());
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.checks.values().sum()
    }

    pub fn merge(&mut self, o: Tally) {
        for (k, v) in o.checks {
            *self.checks.entry(k).or_default() += v;
        }
        self.failures.extend(o.failures);
        self.skipped.extend(o.skipped);
    }
}

/// The first `count` Taylor–Wiles primes for (E, p) avoiding `skip`.
pub fn first_tw_primes(ms: &ModularSymbols, p: u64, count: usize, skip: &[u64]) -> Vec<u64> {
    (3..1_000_000u64).filter(|&l| is_tw_prime(ms.curve(), p, l) && !skip.contains(&l)).take(count).collect()
}

/// Every horizontal norm relation with q1·ℓ ≤ bound, both projections, every a0.
pub fn norm_relation_lattice(ms: &ModularSymbols, bound: u64) -> Result<Tally> {
    let n = ms.curve().conductor;
    let mut t = Tally::default();
    for ell in (2..=bound).filter(|&l| is_prime(l) && !n.is_multiple_of(l)) {
        for q1 in 1..=bound / ell {
            if gcd(q1, ell) != 1 || gcd(q1, n) != 1 {
                continue;
            }
            for a0 in (0..q1.max(1)).filter(|&a| gcd(a, q1) == 1) {
                let r = ms.verify_norm_relation(q1, ell, a0 as i64)?;
                t.check("norm_relation", r.holds(), || {
                    format!("{} q1={q1} ℓ={ell} a0={a0}: difference {}", ms.curve().label, r.difference)
                });
            }
        }
    }
    Ok(t)
}

/// Every cached symbol reconstructed again at precision+64 must be identical.
pub fn reconstruction_gate(ms: &ModularSymbols) -> Result<Tally> {
    let mut t = Tally::default();
    let cached = ms.cached().len();
    let bad = ms.reverify_cache()?;
    *t.checks.entry("reconstruction".into()).or_default() += cached as u64;
    for (a, q) in bad {
        t.failures.push(format!("reconstruction: {} ⟨{a}/{q}⟩ changed at precision+64", ms.curve().label));
    }
    Ok(t)
}

/// Interpolation at every character and p-integrality of one truncation.
pub fn verify_truncation(ms: &ModularSymbols, nu: &NuTruncation) -> Result<Tally> {
    let mut t = Tally::default();
    t.check("p_integral", nu.is_p_integral(), || format!("{} p={} has a p in a denominator", nu.label, nu.p));
    for r in interpolation_check_all(ms, nu)? {
        t.check("interpolation", r.holds(), || {
            format!("{} p={} sign {} χ={:?}: {} vs {}", nu.label, nu.p, nu.sign, r.character, r.measure_side, r.l_side)
        });
    }
    Ok(t)
}

/// Truncations on the first `tail_len` TW primes (capped at `max_size` elements), both signs:
/// interpolation at every character and compatibility under forgetting every tail subset.
pub fn interpolation_suite(ms: &ModularSymbols, p: u64, tail_len: usize, max_size: u64) -> Result<Tally> {
    let mut t = Tally::default();
    let mut tail = Vec::new();
    let mut size = 1u64;
    for l in first_tw_primes(ms, p, tail_len, &[]) {
        let o = p.pow(vp_u(l - 1, p));
        if size * o > max_size {
            break;
        }
        size *= o;
        tail.push(l);
    }
    for sign in [1i64, -1] {
        let nu = nu_truncation(ms, p, &[], &tail, sign)?;
        t.merge(verify_truncation(ms, &nu)?);
        for mask in 1..1u32 << tail.len() {
            let drop: Vec<u64> = (0..tail.len()).filter(|i| mask >> i & 1 == 1).map(|i| tail[i]).collect();
            let kept: Vec<u64> = tail.iter().copied().filter(|l| !drop.contains(l)).collect();
            let direct = nu_truncation(ms, p, &[], &kept, sign)?;
            let ok = forget_tail(&nu, &drop)? == direct;
            t.check("compatibility", ok, || format!("{} p={p} tail {tail:?} drop {drop:?}", ms.curve().label));
        }
    }
    Ok(t)
}

/// θ(χ) against normalization·τ(χ̄)·L(E, χ, 1)/Ω^± from the smoothed series, for every
/// primitive χ with order in `orders` and conductor ≤ `max_conductor` coprime to N.
pub fn birch_stevens_numeric(ms: &ModularSymbols, max_conductor: u64, orders: &[u64], tol: f64) -> Result<Tally> {
    let prec = 128;
    let mut t = Tally::default();
    let periods = ms.periods();
    let norm = Float::with_val(prec, ms.normalization());
    for q in 2..=max_conductor {
        if gcd(q, ms.curve().conductor) != 1 {
            continue;
        }
        let g = DirichletGroup::new(q);
        for chi in g.characters() {
            if !chi.is_primitive() || !orders.contains(&chi.order()) {
                continue;
            }
            let th = ms.birch_stevens_theta(&g, &chi)?;
            let (emb, _) = th.complex_embed(1, prec)?;
            let tau_bar = chi.conj().gauss_sum_numeric(&g, prec);
            let l = numeric_twisted_l(ms.curve(), &g, &chi, 1.0, prec);
            let omega = if chi.parity() == 1 {
                Complex::from_real(Float::with_val(prec, &periods.omega_plus))
            } else {
                Complex { re: Float::new(prec), im: Float::with_val(prec, &periods.omega_minus) }
            };
            let expect = tau_bar.mul(&l).scale(&norm).div(&omega);
            let size = expect.abs().to_f64();
            let err = emb.sub(&expect).abs().to_f64();
            let ok = if size > 1e-20 { err / size < tol } else { err < 1e-20 };
            t.check("birch_stevens_numeric", ok, || {
                format!("{} χ mod {q} {:?}: error {err:e} at size {size:e}", ms.curve().label, chi.exps())
            });
        }
    }
    Ok(t)
}

/// Kurihara checks at one (E, p): the r = 0 value against the numeric L(E,1)/Ω⁺, the generator
/// transformation law, and the derivative congruence with and without a TW tail prime.
pub fn kurihara_suite(ms: &ModularSymbols, p: u64, kato_bound: u64, configs: usize) -> Result<Tally> {
    let mut t = Tally::default();
    let label = ms.curve().label.clone();
    if let Err(e) = check_hypotheses(ms, p) {
        t.skip(format!("{label} p={p}: {e}"));
        return Ok(t);
    }
    let prec = 128;
    let d0 = kurihara_number(ms, p, &[], None)?;
    let central = ms.symbol(0, 1)?.plus;
    t.check("r0_exact", d0.delta == central, || format!("{label} p={p}: δ_∅ = {} vs ⟨0⟩⁺ = {central}", d0.delta));
    let g1 = DirichletGroup::new(1);
    let l = numeric_twisted_l(ms.curve(), &g1, &g1.trivial(), 1.0, prec);
    let ratio = Float::with_val(prec, &l.re / &ms.periods().omega_plus);
    let diff = Float::with_val(prec, &ratio - &d0.delta).abs().to_f64();
    t.check("r0_numeric", diff < 1e-20, || format!("{label} p={p}: |L(E,1)/Ω⁺ − δ_∅| = {diff:e}"));

    let kato = kato_primes(ms, p, kato_bound);
    for &q in kato.iter().take(configs) {
        let g0 = primitive_root(q);
        let base = kurihara_number(ms, p, &[q], Some(&[g0]))?;
        for g in (2..q).filter(|&g| mult_order(g, q) == q - 1).take(4) {
            let k = (1..q - 1).find(|&k| powmod(g0, k, q) == g).unwrap_or(1);
            let d = kurihara_number(ms, p, &[q], Some(&[g]))?;
            let want = base.residue * invmod(k % p, p).unwrap_or(0) % p;
            t.check("generator_law", d.residue == want && d.is_nonzero_mod_p() == base.is_nonzero_mod_p(), || {
                format!("{label} p={p} q={q} g={g}: residue {} expected {want}", d.residue)
            });
        }
    }
    let qs: Vec<Vec<u64>> = std::iter::once(vec![]).chain(kato.iter().take(configs).map(|&q| vec![q])).collect();
    for q in qs {
        let mut seen = None;
        for tail in [vec![], first_tw_primes(ms, p, 1, &q)] {
            let r = derivative_congruence(ms, p, &q, &tail)?;
            t.check("derivative_congruence", r.holds(), || {
                format!("{label} p={p} Q={q:?} tail={tail:?}: {} vs {}", r.lhs_mod_p, r.rhs_mod_p)
            });
            if let Some(prev) = &seen {
                t.check("tail_invariance", &r.derivative == prev, || format!("{label} p={p} Q={q:?}"));
            }
            seen = Some(r.derivative.clone());
        }
    }
    Ok(t)
}

/// Cumulative counts of primitive characters of each order d ≤ `max_order`, conductor ≤ x,
/// by enumerating every character of every (Z/q)^×.
pub fn brute_census(x: u64, max_order: u64) -> Vec<Vec<u64>> {
    let mut by_order = vec![vec![0u64; x as usize + 1]; max_order as usize + 1];
    for q in 1..=x {
        let g = DirichletGroup::new(q);
        for chi in g.characters() {
            let d = chi.order();
            if d <= max_order && chi.is_primitive() {
                by_order[d as usize][q as usize] += 1;
            }
        }
    }
    for row in by_order.iter_mut() {
        for q in 1..row.len() {
            row[q] += row[q - 1];
        }
    }
    by_order
}

/// Exact census counts against the character-table oracle, and g-table row sums.
pub fn census_oracle(x: u64, max_order: u64) -> Result<Tally> {
    let mut t = Tally::default();
    let brute = brute_census(x, max_order);
    for d in 2..=max_order {
        let counts = census_counts(d, x, None)?;
        let bad = (1..=x as usize).find(|&i| counts[i] != brute[d as usize][i]);
        t.check("census_counts", bad.is_none(), || {
            let i = bad.unwrap();
            format!("d={d} X={i}: {} vs brute {}", counts[i], brute[d as usize][i])
        });
        t.check("census_monotone", counts.windows(2).all(|w| w[0] <= w[1]), || format!("d={d}"));
    }
    for d in 1..=1000u64 {
        let row: u64 = crate::arith::divisors(d).into_iter().map(|h| g_table(d, h)).sum::<Result<u64>>()?;
        t.check("g_row_sums", row == crate::arith::euler_phi(d), || format!("d={d}: {row}"));
    }
    Ok(t)
}
