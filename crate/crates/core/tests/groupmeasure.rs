
use hpadic::properties::{self as gm, Facts};
use hpadic::arith::binomial;
use hpadic::groupmeasure::{AmiceCoeffs, Character, DerivIndex, GroupShape, Measure, MuLambda};
use hpadic::{CycNumber, Error, ValQ};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rug::Rational;

fn shape(o: &[u64]) -> GroupShape {
    GroupShape::new(o.to_vec()).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const PRIMES: [u64; 3] = [2, 3, 5];

#[test]
fn evaluate_matches_direct_sum_on_z4_z2() {
    let mut r = rng(7);
    let s = shape(&[4, 2]);
    for _ in 0..20 {
        let nu = gm::random_measure(&mut r, &s, 2);
        for chi in s.characters() {
            assert_eq!(nu.evaluate(&chi).unwrap(), gm::brute_evaluate(&nu, &chi));
        }
    }
}

#[test]
fn evaluate_rejects_shape_mismatch() {
    let nu = Measure::identity(&shape(&[3]));
    let chi = shape(&[9]).trivial_character();
    assert!(matches!(nu.evaluate(&chi), Err(Error::ShapeMismatch(..))));
}

#[test]
fn specialize_at_trivial_is_pushforward() {
    let mut r = rng(11);
    let s = shape(&[3, 3, 3]);
    let nu = gm::random_measure(&mut r, &s, 3);
    let spec = nu.specialize(&[1], &shape(&[3]).trivial_character()).unwrap();
    let proj = nu.pushforward_by(&shape(&[3, 3]), |x| vec![x[0], x[2]]);
    for x in shape(&[3, 3]).elements() {
        assert_eq!(spec.coeff(&x).to_rational().unwrap(), *proj.coeff(&x));
    }
}

#[test]
fn specialize_single_point() {
    let s = shape(&[3, 9]);
    let nu = Measure::delta(&s, &[2, 5]);
    let chi0 = Character::new(&shape(&[3]), vec![1]).unwrap();
    let spec = nu.specialize(&[0], &chi0).unwrap();
    let val = chi0.value(&[2]);
    for x in shape(&[9]).elements() {
        let want = if x == [5] { val.clone() } else { CycNumber::zero(3) };
        assert_eq!(*spec.coeff(&x), want);
    }
    assert!(nu.specialize(&[4], &chi0).is_err());
}

#[test]
fn pushforward_is_a_ring_map() {
    let mut r = rng(3);
    let (big, small) = (shape(&[9]), shape(&[3]));
    for _ in 0..30 {
        let a = gm::random_measure(&mut r, &big, 3);
        let b = gm::random_measure(&mut r, &big, 3);
        let lhs = a.convolve(&b).unwrap().pushforward(&small).unwrap();
        let rhs = a.pushforward(&small).unwrap().convolve(&b.pushforward(&small).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(a.pushforward(&small).unwrap().total(), a.total());
        assert_eq!(a.pushforward(&big).unwrap(), a);
    }
    assert!(Measure::identity(&big).pushforward(&shape(&[2])).is_err());
}

#[test]
fn convolution_is_fourier_multiplicative() {
    let mut r = rng(5);
    let s = shape(&[2, 2, 4]);
    for _ in 0..10 {
        let a = gm::random_measure(&mut r, &s, 2);
        let b = gm::random_measure(&mut r, &s, 2);
        let c = a.convolve(&b).unwrap();
        for chi in s.characters() {
            assert_eq!(c.evaluate(&chi).unwrap(), a.evaluate(&chi).unwrap().mul(&b.evaluate(&chi).unwrap()));
        }
        assert_eq!(a.convolve(&Measure::identity(&s)).unwrap(), a);
    }
}

#[test]
fn inverse_matches_linear_solve() {
    let mut r = rng(13);
    let mut done = 0;
    while done < 25 {
        let p = PRIMES[done % 3];
        let s = gm::random_shape(&mut r, p);
        if s.size() > 27 {
            continue;
        }
        let mut nu = gm::random_measure(&mut r, &s, p);
        let t = nu.total();
        nu.add_at(&vec![0; s.rank()], &(Rational::from(1) - t));
        let inv = nu.invert(p).unwrap();
        assert_eq!(gm::invert_by_linear_solve(&nu), Some(inv));
        done += 1;
    }
}

#[test]
fn min_valuation_of_root_difference() {
    for p in [2u64, 3, 5, 7] {
        let s = shape(&[p]);
        let nu = Measure::delta(&s, &[1]).sub(&Measure::identity(&s)).unwrap();
        let (v, chi) = nu.min_valuation(p).unwrap();
        assert_eq!(v, ValQ::frac(1, p as i64 - 1));
        assert_eq!(chi.exps(), &[1]);
        let z = CycNumber::root_power(p, 1).sub(&CycNumber::one(p));
        assert_eq!(z.norm().abs(), p);
    }
    let s = shape(&[3, 3]);
    let (v, chi) = Measure::zero(&s).min_valuation(3).unwrap();
    assert!(v.is_infinite() && chi.is_trivial());
}

#[test]
fn max_modulus_examples() {
    for p in PRIMES {
        let s = shape(&[p]);
        let w = Measure::delta(&s, &[1]).max_modulus_witness(p).unwrap();
        assert!(w.hypothesis_holds && w.witness.is_some());
        let full = Measure::from_ints(&s, &vec![1; p as usize]).unwrap();
        let w = full.max_modulus_witness(p).unwrap();
        assert!(!w.hypothesis_holds && w.witness.is_none());
    }
    let mut r = rng(17);
    let s = shape(&[3, 3, 3]);
    for _ in 0..20 {
        let mut nu = gm::random_measure(&mut r, &s, 3);
        let t = nu.total();
        nu.add_at(&[0, 0, 0], &(Rational::from(1) - t));
        assert!(nu.max_modulus_witness(3).unwrap().witness.is_some());
    }
}

#[test]
fn witness_set_examples() {
    let s = shape(&[3, 3]);
    let mut inv = Measure::identity(&s);
    inv.add_at(&[1, 2], &Rational::from(1));
    let ws = inv.witness_set(3).unwrap();
    assert_eq!(ws.members.len(), 1);
    assert!(ws.members[0].is_trivial());
    for p in [2u64, 3, 5] {
        let s = shape(&[p, p]);
        let mut h = Measure::zero(&s);
        for a in 0..p {
            h.set(&[a, 0], Rational::from(1));
        }
        let ws = h.witness_set(p).unwrap();
        assert!(ws.verify(&h, p).unwrap());
        assert_eq!(ws.members.len() as u64, p);
        assert!(!ws.fallback_used);
        let mut nu = Measure::identity(&s).scale(&Rational::from(p));
        nu.add_at(&[1, 0], &Rational::from(1));
        nu.add_at(&[0, 0], &Rational::from(-1));
        let ws = nu.witness_set(p).unwrap();
        assert!(ws.verify(&nu, p).unwrap());
        // |M| ≤ p^{⌊v_p(ν(𝟏))⌋} = p
        assert!(ws.members.len() as u64 <= p);
    }
    assert!(Measure::zero(&shape(&[3])).witness_set(3).is_err());
}

#[test]
fn derivative_examples() {
    let mut r = rng(19);
    let s = shape(&[4, 2]);
    let nu = gm::random_measure(&mut r, &s, 2);
    assert_eq!(nu.derivative(&DerivIndex(vec![0, 0])).unwrap(), nu.total());
    let d = Measure::delta(&s, &[3, 1]);
    for alpha in s.elements() {
        let want = binomial(3, alpha[0]) * binomial(1, alpha[1]);
        assert_eq!(d.derivative(&DerivIndex(alpha)).unwrap(), want);
    }
    assert!(nu.derivative(&DerivIndex(vec![4, 0])).is_err());
}

#[test]
fn amice_examples() {
    let s = shape(&[3, 3]);
    let a = Measure::identity(&s).amice_coeffs();
    for (i, b) in a.coeffs().iter().enumerate() {
        assert_eq!(*b, u32::from(i == 0));
    }
    let a = Measure::delta(&shape(&[5]), &[1]).amice_coeffs();
    assert_eq!(a.coeffs().iter().map(|c| c.to_f64() as i32).collect::<Vec<_>>(), vec![1, 1, 0, 0, 0]);
    let mut r = rng(23);
    let nu = gm::random_measure(&mut r, &s, 3);
    let chi = Character::new(&s, vec![1, 2]).unwrap();
    assert_eq!(nu.amice_coeffs().evaluate_at(&chi), nu.evaluate(&chi).unwrap());
}

#[test]
fn mu_lambda_examples() {
    for p in PRIMES {
        let s = shape(&[p, p, p]);
        let nu = Measure::identity(&s).scale(&Rational::from(p));
        assert_eq!(nu.mu_lambda(p), MuLambda { mu: Some(1), lambda: 0 });
        for r in 1..=3usize {
            let mut alpha = vec![0u64; 3];
            alpha.iter_mut().take(r).for_each(|a| *a = 1);
            let nu = Measure::from_amice(&AmiceCoeffs::from_terms(&s, &[(alpha, 1)]));
            assert_eq!(nu.mu_lambda(p), MuLambda { mu: Some(0), lambda: r as u64 });
        }
        assert_eq!(Measure::zero(&s).mu_lambda(p), MuLambda { mu: None, lambda: 0 });
    }
}

/// Automorphism of (Z/p^m)^n: permute coordinates and scale each by a unit.
fn twist_coordinates(nu: &Measure, perm: &[usize], units: &[u64]) -> Measure {
    let s = nu.shape().clone();
    nu.pushforward_by(&s, |x| {
        perm.iter().zip(units).zip(s.orders()).map(|((&j, &u), &d)| x[j] * u % d).collect()
    })
}

#[test]
fn counterexample_families() {
    gm::counterexamples_behave().unwrap();
}

#[test]
fn kolyvagin_polynomial_is_outside_the_hypothesis() {
    // T_1^p T_2 − T_1 T_2^p reduced into the (Z/p)^2 box; the proposition's hypothesis fails
    for p in [2u64, 3, 5] {
        let s = shape(&[p, p]);
        let single = |k: u64| -> Vec<Rational> {
            // T^k reduced mod (1+T)^p − 1
            let mut v = vec![Rational::new(); p as usize];
            let mut cur = vec![Rational::new(); p as usize];
            cur[0] = Rational::from(1);
            for _ in 0..k {
                let top = cur[p as usize - 1].clone();
                let mut next = vec![Rational::new(); p as usize];
                for i in 1..p as usize {
                    next[i] = cur[i - 1].clone() - Rational::from(&top * binomial(p, i as u64));
                }
                cur = next;
            }
            v.clone_from(&cur);
            v
        };
        let (tp, t1) = (single(p), single(1));
        let mut b = vec![Rational::new(); s.size()];
        for i in 0..p as usize {
            for j in 0..p as usize {
                let idx = s.index(&[i as u64, j as u64]);
                b[idx] += Rational::from(&tp[i] * &t1[j]) - Rational::from(&t1[i] * &tp[j]);
            }
        }
        let nu = Measure::from_amice(&AmiceCoeffs::new(&s, b));
        let f = Facts::new(&nu, p);
        // at p = 2 the polynomial is already zero in the group ring
        let Some(mu) = nu.mu_lambda(p).mu else {
            assert_eq!(p, 2);
            continue;
        };
        let d2 = nu.derivative(&DerivIndex::kolyvagin(2, 2)).unwrap();
        let hyp = hpadic::cyclotomic::vp_rat(&d2, p) == ValQ::int(mu);
        assert!(!hyp || gm::kato_kolyvagin(&nu, p, &f).is_ok());
    }
}

#[test]
fn augmentation_examples() {
    for p in PRIMES {
        let s = shape(&[p, p, p]);
        let nu = Measure::delta(&s, &[1, 0, 2 % p]).sub(&Measure::identity(&s)).unwrap();
        assert_eq!(nu.augmentation_rank(p).unwrap(), 1);
        assert_eq!(Measure::identity(&s).augmentation_rank(p).unwrap(), 0);
    }
    assert!(matches!(Measure::identity(&shape(&[9])).augmentation_rank(3), Err(Error::UnsupportedShape(_))));
}

fn seed_and_prime() -> impl Strategy<Value = (u64, u64)> {
    (any::<u64>(), 0usize..3).prop_map(|(s, i)| (s, PRIMES[i]))
}

fn draw(seed: u64, p: u64) -> (ChaCha8Rng, Measure, Facts) {
    let mut r = rng(seed);
    let s = gm::random_shape(&mut r, p);
    let nu = gm::random_measure(&mut r, &s, p);
    let f = Facts::new(&nu, p);
    (r, nu, f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fourier_inversion((seed, p) in seed_and_prime()) {
        let (_, nu, f) = draw(seed, p);
        prop_assert!(gm::fourier_inversion(&nu, &f).is_ok());
    }

    #[test]
    fn discrete_maximum_modulus((seed, p) in seed_and_prime()) {
        let (_, nu, f) = draw(seed, p);
        let r = gm::max_modulus(&nu, p, &f);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn refined_maximum_modulus_and_nonvanishing((seed, p) in seed_and_prime()) {
        let (_, nu, f) = draw(seed, p);
        prop_assert!(gm::refined_max_modulus(&nu, p, &f).is_ok());
        prop_assert!(gm::nonvanishing(&nu, p, &f).is_ok());
    }

    #[test]
    fn specialization_identity((seed, p) in seed_and_prime()) {
        let (mut r, nu, _) = draw(seed, p);
        prop_assert!(gm::specialization(&mut r, &nu).is_ok());
    }

    #[test]
    fn invertibility_criterion((seed, p) in seed_and_prime()) {
        let (_, nu, f) = draw(seed, p);
        let r = gm::invertibility(&nu, p, &f, nu.shape().size() <= 16);
        prop_assert!(r.is_ok(), "{:?}", r);
    }

    #[test]
    fn amice_interpolation_and_inverse((seed, p) in seed_and_prime()) {
        let (mut r, nu, f) = draw(seed, p);
        prop_assert!(gm::amice_interpolation(&mut r, &nu, &f, 6).is_ok());
        prop_assert_eq!(Measure::from_amice(&nu.amice_coeffs()), nu);
    }

    #[test]
    fn derivative_and_dual_number_congruences((seed, p) in seed_and_prime()) {
        let (_, nu, _) = draw(seed, p);
        prop_assert!(gm::derivative_congruence(&nu, p).is_ok());
        prop_assert!(gm::dual_numbers(&nu, p).is_ok());
    }

    #[test]
    fn kato_kolyvagin_bound((seed, p) in seed_and_prime()) {
        let (_, nu, f) = draw(seed, p);
        prop_assert!(gm::kato_kolyvagin(&nu, p, &f).is_ok());
    }

    #[test]
    fn horizontal_weierstrass((seed, p) in seed_and_prime()) {
        let mut r = rng(seed);
        let s = gm::random_shape(&mut r, p);
        let nu = gm::amice_built(&mut r, &s, p);
        let f = Facts::new(&nu, p);
        let res = gm::weierstrass(&nu, p, &f);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn witness_sets_verify((seed, p) in seed_and_prime()) {
        let (_, nu, _) = draw(seed, p);
        prop_assert!(gm::witness(&nu, p).is_ok());
    }

    #[test]
    fn augmentation_rank_equals_scaled_valuation(seed in any::<u64>(), pi in 0usize..3, n in 1usize..=3) {
        let p = PRIMES[pi];
        let s = GroupShape::new(vec![p; n]).unwrap();
        let mut r = rng(seed);
        let mut nu = gm::random_measure(&mut r, &s, p);
        let t = nu.total();
        nu.add_at(&vec![0; n], &(-t));
        prop_assume!(!nu.is_zero());
        let f = Facts::new(&nu, p);
        let res = gm::augmentation(&nu, p, &f);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn mu_is_coordinate_independent(seed in any::<u64>(), pi in 0usize..3) {
        let p = PRIMES[pi];
        let mut r = rng(seed);
        let s = GroupShape::new(vec![p; 2 + (pi == 0) as usize]).unwrap();
        let nu = gm::amice_built(&mut r, &s, p);
        let mut perm: Vec<usize> = (0..s.rank()).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut r);
        let units: Vec<u64> = (0..s.rank()).map(|_| rand::Rng::gen_range(&mut r, 1..p)).collect();
        let tw = twist_coordinates(&nu, &perm, &units);
        let (a, b) = (nu.mu_lambda(p), tw.mu_lambda(p));
        prop_assert_eq!(a.mu, b.mu);
        if a.lambda < p {
            prop_assert_eq!(a.lambda, b.lambda);
        }
    }

    #[test]
    fn json_roundtrip(seed in any::<u64>(), pi in 0usize..3) {
        let p = PRIMES[pi];
        let (_, nu, _) = draw(seed, p);
        let back: Measure = serde_json::from_str(&serde_json::to_string(&nu).unwrap()).unwrap();
        prop_assert_eq!(back, nu);
    }
}
