use hpadic::arith::{is_prime, vp_u};
use hpadic::curves::{bundled_catalog, find_curve};
use hpadic::dirichlet::DirichletGroup;
use hpadic::groupmeasure::{GroupShape, Measure};
use hpadic::horizontal::{
    euler_unit, forget_tail, interpolation_check_all, is_kato_prime, is_tw_prime, nu_truncation, product_measure,
    sigma_vector, theta_element, verify_theta_norm_relation, NuTruncation,
};
use hpadic::modsym::ModularSymbols;
use hpadic::CycNumber;
use rug::Rational;

fn engine(label: &str) -> ModularSymbols {
    ModularSymbols::new(find_curve(&bundled_catalog(), label).unwrap()).unwrap()
}

fn tw_primes(ms: &ModularSymbols, p: u64, count: usize, skip: &[u64]) -> Vec<u64> {
    (3..)
        .filter(|&l| is_tw_prime(ms.curve(), p, l) && !skip.contains(&l))
        .take(count)
        .collect()
}

#[test]
fn empty_theta_is_the_central_value() {
    let ms = engine("11a1");
    let th = theta_element(&ms, &[], 1).unwrap();
    assert_eq!(th.measure.coeffs(), &[Rational::from(2)]);
    let nu = nu_truncation(&ms, 3, &[], &[], 1).unwrap();
    assert_eq!(nu.measure.coeffs(), &[Rational::from(2)]);
}

#[test]
fn theta_at_trivial_character_is_the_total() {
    let ms = engine("37a1");
    let th = theta_element(&ms, &[5, 7], 1).unwrap();
    let total: Rational = th.measure.coeffs().iter().sum();
    let triv = th.measure.shape().trivial_character();
    assert_eq!(th.measure.evaluate(&triv).unwrap(), CycNumber::from_rational(th.measure.shape().exponent(), total));
}

#[test]
fn theta_evaluation_matches_birch_stevens() {
    let ms = engine("11a1");
    for primes in [vec![7u64], vec![13], vec![3, 7], vec![5, 13]] {
        let l: u64 = primes.iter().product();
        let g = DirichletGroup::new(l);
        for sign in [1i64, -1] {
            let th = theta_element(&ms, &primes, sign).unwrap();
            for chi in th.measure.shape().characters() {
                if chi.exps().contains(&0) {
                    continue;
                }
                let dchi = g.character(chi.exps().to_vec());
                assert!(dchi.is_primitive());
                let lhs = th.measure.evaluate(&chi).unwrap();
                if dchi.parity() != sign {
                    assert!(lhs.is_zero());
                    continue;
                }
                let bs = ms.birch_stevens_theta(&g, &dchi.conj()).unwrap();
                assert_eq!(lhs, bs, "{primes:?} {:?}", chi.exps());
                assert_eq!(lhs.is_zero(), bs.is_zero());
            }
        }
    }
}

#[test]
fn theta_norm_relations() {
    for label in ["11a1", "37a1", "14a1"] {
        let ms = engine(label);
        let n = ms.curve().conductor;
        let ps: Vec<u64> = (2..40).filter(|&l| is_prime(l) && !n.is_multiple_of(l)).collect();
        for (i, &l1) in ps.iter().enumerate() {
            for &l2 in &ps[i + 1..] {
                if l1 * l2 > 200 {
                    continue;
                }
                for drop in [vec![], vec![l1], vec![l2], vec![l1, l2]] {
                    for sign in [1, -1] {
                        let r = verify_theta_norm_relation(&ms, &[l1, l2], &drop, sign).unwrap();
                        assert!(r.holds(), "{label} {l1}·{l2} drop {drop:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn single_dropped_prime_matches_hecke_sum() {
    let ms = engine("11a1");
    for ell in [3u64, 7, 13] {
        let r = verify_theta_norm_relation(&ms, &[ell], &[ell], 1).unwrap();
        assert!(r.holds());
        let total = r.pushed.coeffs()[0].clone();
        let expect = Rational::from(ms.curve().ap(ell) - 2) * ms.l_plus_minus(0, 1).unwrap().plus;
        assert_eq!(total, expect);
    }
}

#[test]
fn euler_units() {
    let ms = engine("11a1");
    let e = ms.curve();
    let shape = GroupShape::new(vec![3, 9]).unwrap();
    for ell in tw_primes(&ms, 3, 6, &[]) {
        let u = euler_unit(e, 3, ell, &shape, &[1, 4]).unwrap();
        assert_eq!(u.total(), Rational::from(e.ap(ell) - 2));
        let inv = u.invert(3).unwrap();
        assert_eq!(inv.convolve(&u).unwrap(), Measure::identity(&shape));
    }
    let kato = (3..200).find(|&l| is_kato_prime(e, 3, l)).unwrap();
    assert!(euler_unit(e, 3, kato, &shape, &[0, 0]).is_err());
}

#[test]
fn sigma_digits() {
    let primes = [7u64, 13, 19];
    let gens: Vec<u64> = primes.iter().map(|&l| hpadic::arith::primitive_root(l)).collect();
    let orders = [3u64, 3, 9];
    for own in 0..3 {
        let s = sigma_vector(&primes, &gens, &orders, own);
        assert_eq!(s[own], 0);
        for i in 0..3 {
            if i != own {
                let table = hpadic::arith::dlog_table(primes[i], gens[i]);
                assert_eq!(s[i], table[(primes[own] % primes[i]) as usize] % orders[i]);
            }
        }
    }
}

fn subsets(v: &[u64]) -> Vec<Vec<u64>> {
    (0..1u32 << v.len()).map(|m| v.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &x)| x).collect()).collect()
}

#[test]
fn nu_truncations_are_compatible_and_interpolate() {
    let cases: [(&str, u64, usize); 4] = [("11a1", 3, 3), ("11a1", 2, 3), ("37a1", 3, 2), ("14a1", 5, 2)];
    for (label, p, k) in cases {
        let ms = engine(label);
        let tail = tw_primes(&ms, p, k, &[]);
        let orders: u64 = tail.iter().map(|&l| p.pow(vp_u(l - 1, p))).product();
        assert!(orders <= 10_000);
        for sign in [1i64, -1] {
            let nu = nu_truncation(&ms, p, &[], &tail, sign).unwrap();
            assert!(nu.is_p_integral(), "{label} p={p}");
            if p > 2 && sign == -1 {
                assert!(nu.measure.is_zero());
            }
            for r in interpolation_check_all(&ms, &nu).unwrap() {
                assert!(r.holds(), "{label} p={p} sign {sign} χ={:?}", r.character);
            }
            for drop in subsets(&tail) {
                let small: Vec<u64> = tail.iter().copied().filter(|l| !drop.contains(l)).collect();
                let direct = nu_truncation(&ms, p, &[], &small, sign).unwrap();
                assert_eq!(forget_tail(&nu, &drop).unwrap(), direct, "{label} drop {drop:?}");
            }
        }
    }
}

#[test]
fn exceptional_kato_prime_interpolates() {
    let ms = engine("11a1");
    let kato = (3..400).find(|&l| is_kato_prime(ms.curve(), 3, l)).unwrap();
    let tail = tw_primes(&ms, 3, 2, &[kato]);
    let nu = nu_truncation(&ms, 3, &[kato], &tail, 1).unwrap();
    for r in interpolation_check_all(&ms, &nu).unwrap() {
        assert!(r.holds(), "χ={:?}", r.character);
    }
    // the exceptional coordinate is never forgotten
    assert!(forget_tail(&nu, &[kato]).is_err());
}

#[test]
fn products_multiply_evaluations() {
    let a = engine("11a1");
    let b = engine("37a1");
    let joint: Vec<u64> = (3..)
        .filter(|&l| is_tw_prime(a.curve(), 3, l) && is_tw_prime(b.curve(), 3, l))
        .take(2)
        .collect();
    let na = nu_truncation(&a, 3, &[], &joint, 1).unwrap();
    let nb = nu_truncation(&b, 3, &[], &joint, 1).unwrap();
    let prod = product_measure(&[na.clone(), nb.clone()]).unwrap();
    for chi in prod.shape().characters() {
        let lhs = prod.evaluate(&chi).unwrap();
        let rhs = na.measure.evaluate(&chi).unwrap().mul(&nb.measure.evaluate(&chi).unwrap());
        assert_eq!(lhs, rhs);
    }
    assert_eq!(product_measure(std::slice::from_ref(&na)).unwrap(), na.measure);
    let delta = NuTruncation { measure: Measure::identity(na.shape()), ..na.clone() };
    assert_eq!(product_measure(&[na.clone(), delta]).unwrap(), na.measure);
}

#[test]
fn json_roundtrip() {
    let ms = engine("11a1");
    let tail = tw_primes(&ms, 3, 2, &[]);
    let nu = nu_truncation(&ms, 3, &[], &tail, 1).unwrap();
    let text = nu.to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["label", "p", "sign", "exceptional", "tail", "generators", "shape", "coeffs"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(NuTruncation::from_json(&text).unwrap(), nu);
}

#[test]
fn witness_set_certifies_minimal_valuation_on_nu() {
    let ms = engine("11a1");
    let tail = tw_primes(&ms, 3, 2, &[]);
    let nu = nu_truncation(&ms, 3, &[], &tail, 1).unwrap();
    if nu.measure.is_zero() {
        return;
    }
    let ws = nu.measure.witness_set(3).unwrap();
    assert!(ws.verify(&nu.measure, 3).unwrap());
    assert!(!ws.members.is_empty());
}
