use hpadic::arith::{gcd, invmod, mult_order};
use hpadic::curves::{bundled_catalog, find_curve};
use hpadic::dirichlet::DirichletGroup;
use hpadic::horizontal::is_tw_prime;
use hpadic::kurihara::{
    derivative_congruence, kato_primes, kolyvagin_valuation_bound, kurihara_number, kurihara_search,
};
use hpadic::modsym::{numeric_twisted_l, ModularSymbols};
use hpadic::{Error, ValQ};
use rug::Float;

fn engine(label: &str) -> ModularSymbols {
    ModularSymbols::new(find_curve(&bundled_catalog(), label).unwrap()).unwrap()
}

fn tw_primes(ms: &ModularSymbols, p: u64, count: usize, skip: &[u64]) -> Vec<u64> {
    (3..2000).filter(|&l| is_tw_prime(ms.curve(), p, l) && !skip.contains(&l)).take(count).collect()
}

#[test]
fn empty_q_gives_the_central_value() {
    for label in ["11a1", "15a1", "17a1", "26b1", "37b1"] {
        let ms = engine(label);
        let g = DirichletGroup::new(1);
        let l = numeric_twisted_l(ms.curve(), &g, &g.trivial(), 1.0, 128);
        let ratio = Float::with_val(128, &l.re / &ms.periods().omega_plus);
        for p in [3u64, 5, 7] {
            let Ok(d) = kurihara_number(&ms, p, &[], None) else { continue };
            assert_eq!(d.delta, ms.symbol(0, 1).unwrap().plus);
            let diff = Float::with_val(128, &ratio - &d.delta).abs().to_f64();
            assert!(diff < 1e-25, "{label}: {diff:e}");
            assert!(d.is_nonzero_mod_p());
        }
    }
}

#[test]
fn standing_hypotheses_are_enforced() {
    let ms = engine("11a1");
    assert!(matches!(kurihara_number(&ms, 5, &[], None), Err(Error::Refused(_))));
    assert!(matches!(derivative_congruence(&ms, 5, &[], &[]), Err(Error::Refused(_))));
    // 7 is not 1 mod 3
    assert!(matches!(kurihara_number(&ms, 3, &[7], None), Err(Error::Precondition(_))));
    let tw = tw_primes(&ms, 3, 1, &[])[0];
    assert!(matches!(kurihara_number(&ms, 3, &[tw], None), Err(Error::Precondition(_))));
    let kato = kato_primes(&ms, 3, 2000);
    let big: Vec<u64> = kato.iter().rev().take(2).copied().collect();
    assert!(matches!(kurihara_number(&ms, 3, &big, None), Err(Error::CapExceeded(_))));
}

/// Every generator of (Z/q)^×.
fn generators(q: u64) -> Vec<u64> {
    (2..q).filter(|&g| mult_order(g, q) == q - 1).collect()
}

#[test]
fn generator_change_scales_by_the_inverse_exponent() {
    for (label, p) in [("37a1", 3u64), ("43a1", 5), ("37a1", 7)] {
        let ms = engine(label);
        for q in kato_primes(&ms, p, 120).into_iter().take(3) {
            let g0 = hpadic::arith::primitive_root(q);
            let base = kurihara_number(&ms, p, &[q], Some(&[g0])).unwrap();
            for g in generators(q).into_iter().take(12) {
                let d = kurihara_number(&ms, p, &[q], Some(&[g])).unwrap();
                // g = g0^k ⇒ δ' ≡ k^{-1}·δ mod p
                let k = (0..q - 1).find(|&k| hpadic::arith::powmod(g0, k, q) == g).unwrap();
                assert_eq!(gcd(k, q - 1), 1);
                let want = base.residue * invmod(k % p, p).unwrap() % p;
                assert_eq!(d.residue, want, "{label} q={q} g={g}");
                assert_eq!(d.is_nonzero_mod_p(), base.is_nonzero_mod_p());
            }
        }
    }
}

#[test]
fn two_prime_numbers_are_symmetric_and_generator_stable() {
    let ms = engine("37a1");
    let p = 3;
    let ks = kato_primes(&ms, p, 80);
    let (a, b) = (ks[0], ks[1]);
    let d = kurihara_number(&ms, p, &[a, b], None).unwrap();
    let swapped = kurihara_number(&ms, p, &[b, a], None).unwrap();
    assert_eq!(d.delta, swapped.delta);
    for ga in generators(a).into_iter().take(2) {
        for gb in generators(b).into_iter().take(3) {
            let e = kurihara_number(&ms, p, &[a, b], Some(&[ga, gb])).unwrap();
            assert_eq!(e.is_nonzero_mod_p(), d.is_nonzero_mod_p());
        }
    }
}

#[test]
fn rank_one_search_finds_a_certificate() {
    for label in ["37a1", "43a1"] {
        let ms = engine(label);
        assert_eq!(ms.symbol(0, 1).unwrap().plus, 0);
        for p in [3u64, 5, 7] {
            let d = kurihara_search(&ms, p, 1, 500).unwrap().expect("certificate");
            assert_eq!(d.q.len(), 1, "{label} p={p}");
            assert!(d.is_nonzero_mod_p());
            let j = d.to_json();
            for key in ["label", "p", "Q", "generators", "delta", "residue"] {
                assert!(j.get(key).is_some());
            }
        }
    }
}

#[test]
fn rank_two_curve_needs_two_primes() {
    let ms = engine("389a1");
    let p = 3;
    let ks = kato_primes(&ms, p, 120);
    for &q in &ks {
        assert!(!kurihara_number(&ms, p, &[q], None).unwrap().is_nonzero_mod_p());
    }
    let found = kurihara_search(&ms, p, 2, 120).unwrap();
    if let Some(d) = found {
        assert_eq!(d.q.len(), 2);
    }
}

#[test]
fn derivative_congruence_on_rank_zero_curves() {
    for label in ["11a1", "15a1", "17a1", "21a1"] {
        let ms = engine(label);
        for p in [3u64, 7] {
            if kurihara_number(&ms, p, &[], None).is_err() {
                continue;
            }
            let kato = kato_primes(&ms, p, 200);
            let configs: Vec<Vec<u64>> = std::iter::once(vec![]).chain(kato.iter().take(2).map(|&q| vec![q])).collect();
            for q in configs {
                let tails = [vec![], tw_primes(&ms, p, 1, &q)];
                let mut seen = None;
                for tail in tails {
                    let r = derivative_congruence(&ms, p, &q, &tail).unwrap();
                    assert!(r.holds(), "{label} p={p} Q={q:?} tail={tail:?}");
                    // forgetting the tail is exact, so the derivative does not move at all
                    if let Some(prev) = &seen {
                        assert_eq!(&r.derivative, prev);
                    }
                    seen = Some(r.derivative.clone());
                }
            }
        }
    }
}

#[test]
fn derivative_congruence_on_rank_one_curves() {
    for (label, p) in [("37a1", 3u64), ("43a1", 3), ("37a1", 5)] {
        let ms = engine(label);
        for q in kato_primes(&ms, p, 120).into_iter().take(3) {
            let r = derivative_congruence(&ms, p, &[q], &[]).unwrap();
            assert!(r.holds(), "{label} q={q}");
            assert_eq!(r.normalization, ms.normalization());
            let t = derivative_congruence(&ms, p, &[q], &tw_primes(&ms, p, 1, &[q])).unwrap();
            assert!(t.holds());
            assert_eq!(t.derivative, r.derivative);
        }
    }
}

#[test]
fn kolyvagin_bounds() {
    // r = 0: the trivial character already has valuation 0
    let ms = engine("11a1");
    let rep = kolyvagin_valuation_bound(&ms, 3, &[], &tw_primes(&ms, 3, 1, &[])).unwrap();
    assert!(rep.holds());
    assert_eq!(rep.min_valuation, ValQ::int(0));
    assert_eq!(rep.conductor, 1);
    assert_eq!(rep.augmentation_rank, Some(0));

    // r = 1 on a rank-one curve, shape Z/p on the Kato coordinate
    for (label, p) in [("37a1", 3u64), ("43a1", 5), ("37a1", 7)] {
        let ms = engine(label);
        let cert = kurihara_search(&ms, p, 1, 500).unwrap().unwrap();
        let q = cert.q.clone();
        let rep = kolyvagin_valuation_bound(&ms, p, &q, &[]).unwrap();
        assert!(rep.holds(), "{label} p={p}");
        if !(q[0] - 1).is_multiple_of(p * p) {
            assert_eq!(rep.min_valuation, ValQ::frac(1, p as i64 - 1));
            assert_eq!(rep.l_valuation, rep.min_valuation);
            assert_eq!(rep.conductor, q[0]);
            assert_eq!(rep.augmentation_rank, Some(1));
        }
        // conjugate witnesses share the valuation
        let nu = hpadic::horizontal::nu_truncation(&ms, p, &q, &[], 1).unwrap();
        let chi = hpadic::groupmeasure::Character::new(nu.shape(), rep.witness.clone()).unwrap();
        let v = nu.measure.evaluate(&chi).unwrap().vp(p).unwrap();
        for j in 2..p as i64 {
            let w = nu.measure.evaluate(&chi.pow(j)).unwrap().vp(p).unwrap();
            assert_eq!(w, v);
        }
    }
}

#[test]
fn search_order_is_ascending() {
    let ms = engine("37a1");
    let p = 3;
    let d = kurihara_search(&ms, p, 1, 500).unwrap().unwrap();
    for &q in kato_primes(&ms, p, 500).iter().take_while(|&&q| q < d.q[0]) {
        assert!(!kurihara_number(&ms, p, &[q], None).unwrap().is_nonzero_mod_p());
    }
}
