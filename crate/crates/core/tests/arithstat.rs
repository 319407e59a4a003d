use std::collections::BTreeSet;
use std::time::Instant;

use hpadic::arith::{euler_phi, gcd, is_prime, prime_divisors, primes_up_to};
use hpadic::arithstat::{
    alpha_exponent, ap_is_odd, census_counts, char_census, g_table, kato_sieve, tw_sieve, SieveKind,
};
use hpadic::curves::{bundled_catalog, find_curve, Curve, Mod2Image};
use hpadic::dirichlet::DirichletGroup;
use hpadic::horizontal::{is_kato_prime, is_tw_prime};
use proptest::prelude::*;
use rug::Rational;

fn curve(label: &str) -> Curve {
    find_curve(&bundled_catalog(), label).unwrap()
}

#[test]
fn parity_shortcut_matches_point_counts() {
    for label in ["11a1", "14a1", "37a1", "196a1", "389a1"] {
        let e = curve(label);
        for l in primes_up_to(20_000).into_iter().filter(|&l| l > 2 && e.is_good(l)) {
            assert_eq!(ap_is_odd(&e, l), e.ap(l) % 2 != 0, "{label} ℓ={l}");
        }
    }
}

#[test]
fn sieves_match_the_definitions() {
    let cat = bundled_catalog();
    for e in cat.iter().take(8) {
        for p in [2u64, 3, 5, 7] {
            let tw = tw_sieve(std::slice::from_ref(e), p, 1, 5000).unwrap();
            let kato = kato_sieve(e, p, 5000).unwrap();
            let want_tw: Vec<u64> = (2..=5000).filter(|&l| is_tw_prime(e, p, l)).collect();
            let want_kato: Vec<u64> = (2..=5000).filter(|&l| is_kato_prime(e, p, l)).collect();
            assert_eq!(tw.matches, want_tw, "{} p={p}", e.label);
            assert_eq!(kato.matches, want_kato, "{} p={p}", e.label);
            assert_eq!(tw.kind, SieveKind::TaylorWiles);
            for &q in &kato.matches {
                // #E(F_q) = q + 1 − a_q
                assert_eq!((q as i64 + 1 - e.ap(q)).rem_euclid(p as i64), 0);
            }
        }
    }
}

#[test]
fn joint_sieve_is_the_intersection() {
    let a = curve("11a1");
    let b = curve("37a1");
    for p in [3u64, 5] {
        let joint = tw_sieve(&[a.clone(), b.clone()], p, 1, 20_000).unwrap();
        let sa: BTreeSet<u64> = tw_sieve(std::slice::from_ref(&a), p, 1, 20_000).unwrap().matches.into_iter().collect();
        let sb: BTreeSet<u64> = tw_sieve(std::slice::from_ref(&b), p, 1, 20_000).unwrap().matches.into_iter().collect();
        let want: Vec<u64> = sa.intersection(&sb).copied().collect();
        assert_eq!(joint.matches, want);
        assert!(joint.predicted_density.is_none());
    }
}

#[test]
fn kato_and_tw_partition_the_split_primes() {
    for label in ["11a1", "37a1", "196a1"] {
        let e = curve(label);
        for p in [2u64, 3, 5, 7] {
            let x = 100_000;
            let tw = tw_sieve(std::slice::from_ref(&e), p, 1, x).unwrap();
            let kato = kato_sieve(&e, p, x).unwrap();
            let a: BTreeSet<u64> = tw.matches.iter().copied().collect();
            let b: BTreeSet<u64> = kato.matches.iter().copied().collect();
            assert!(a.is_disjoint(&b));
            let all: BTreeSet<u64> = primes_up_to(x).into_iter().filter(|&l| l % p == 1 && e.is_good(l)).collect();
            let union: BTreeSet<u64> = a.union(&b).copied().collect();
            assert_eq!(union, all, "{label} p={p}");
            let frac = Rational::from((all.len() as u64, tw.considered));
            assert_eq!(Rational::from(&tw.empirical_density + &kato.empirical_density), frac);
        }
    }
}

#[test]
fn rational_p_torsion_empties_the_tw_set() {
    // 11a1 has a rational 5-torsion point, so 5 | #E(F_ℓ) for every good ℓ
    let tw = tw_sieve(&[curve("11a1")], 5, 1, 50_000).unwrap();
    assert!(tw.matches.is_empty());
    let a = alpha_exponent(&[curve("11a1")], 5, 2, 20_000).unwrap();
    assert_eq!(a.alpha, 0);
}

#[test]
fn tw_sets_are_nested() {
    for label in ["11a1", "196a1", "37a1"] {
        let e = curve(label);
        for p in [2u64, 3] {
            let mut prev: Option<BTreeSet<u64>> = None;
            for m in 1..=4 {
                let s: BTreeSet<u64> =
                    tw_sieve(std::slice::from_ref(&e), p, m, 200_000).unwrap().matches.into_iter().collect();
                if let Some(prev) = &prev {
                    assert!(s.is_subset(prev), "{label} p={p} m={m}");
                }
                prev = Some(s);
            }
        }
    }
}

#[test]
fn mod2_densities_at_one_million() {
    let start = Instant::now();
    let cases = [("196a1", Mod2Image::Z3, 2.0 / 3.0), ("11a1", Mod2Image::S3, 1.0 / 3.0)];
    for (label, image, target) in cases {
        let e = curve(label);
        assert_eq!(e.mod2_image(), image);
        let r = tw_sieve(std::slice::from_ref(&e), 2, 1, 1_000_000).unwrap();
        let d = r.density_f64();
        assert!((d - target).abs() < 0.02, "{label}: {d}");
        assert_eq!(r.predicted_density.clone().unwrap().to_f64(), target);
        let (lo, hi) = r.wilson_interval();
        assert!(lo < d && d < hi);
    }
    assert!(start.elapsed().as_secs() < 300);
}

#[test]
fn alpha_matches_the_image_heuristics() {
    let s3 = alpha_exponent(&[curve("11a1")], 2, 1, 300_000).unwrap();
    assert!((s3.alpha.to_f64() - 1.0 / 3.0).abs() < 0.02, "{}", s3.alpha.to_f64());
    let z3 = alpha_exponent(&[curve("196a1")], 2, 2, 300_000).unwrap();
    assert!((z3.alpha.to_f64() - 4.0 / 3.0).abs() < 0.04, "{}", z3.alpha.to_f64());
    assert!(z3.tw2_lower_bound.unwrap() <= z3.alpha);
    // one rational 2-torsion point: Frobenius always fixes a root
    let e = curve("14a1");
    assert_eq!(e.mod2_image(), Mod2Image::OneRationalPoint);
    assert_eq!(alpha_exponent(&[e], 2, 2, 50_000).unwrap().alpha, 0);
}

#[test]
fn g_rows_count_units_by_gcd() {
    for d in 1..=1000u64 {
        let row: u64 = hpadic::arith::divisors(d).into_iter().map(|h| g_table(d, h).unwrap()).sum();
        assert_eq!(row, euler_phi(d), "d={d}");
    }
    for d in 1..=150u64 {
        for h in hpadic::arith::divisors(d) {
            let brute = (1..=d).filter(|&a| gcd(a, d) == 1 && gcd(a - 1, d) == h).count() as u64;
            let brute = if d == 1 { 1 } else { brute };
            assert_eq!(g_table(d, h).unwrap(), brute, "g({d},{h})");
        }
    }
    assert_eq!(g_table(27, 27).unwrap(), 1);
    assert_eq!(g_table(9, 3).unwrap(), 2);
}

/// Brute force: tally primitive characters by order over every modulus q ≤ X.
fn brute_census(x: u64) -> Vec<Vec<u64>> {
    let mut by_order = vec![vec![0u64; x as usize + 1]; 13];
    for q in 1..=x {
        let g = DirichletGroup::new(q);
        for chi in g.characters() {
            let d = chi.order();
            if d <= 12 && chi.is_primitive() {
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

#[test]
fn census_matches_character_tables() {
    let brute = brute_census(300);
    for d in 2..=12u64 {
        let counts = census_counts(d, 300, None).unwrap();
        for x in 1..=300usize {
            assert_eq!(counts[x], brute[d as usize][x], "d={d} X={x}");
        }
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn prime_order_conductors() {
    for p in [3u64, 5, 7] {
        let counts = census_counts(p, 2000, None).unwrap();
        for f in 2..=2000u64 {
            let here = counts[f as usize] - counts[f as usize - 1];
            let admissible = prime_divisors(f).iter().all(|&l| l % p == 1 || l == p);
            if !admissible {
                assert_eq!(here, 0, "p={p} f={f}");
            }
        }
        let supported: Vec<u64> = primes_up_to(2000).into_iter().filter(|&l| l % p == 1 || l == p).collect();
        assert_eq!(census_counts(p, 2000, Some(&supported)).unwrap(), counts);
    }
}

#[test]
fn census_growth_exponents() {
    let r = char_census(3, 1_000_000, None).unwrap();
    assert_eq!(r.predicted_exponent, 0);
    assert!(r.fitted_exponent.unwrap().abs() < 0.3, "{:?}", r.fitted_exponent);
    // d = 6: the secondary term of x·P₂(log x) keeps the window slope near 1.64 at this range
    let a = char_census(6, 100_000, None).unwrap().fitted_exponent.unwrap();
    let b = char_census(6, 1_000_000, None).unwrap();
    assert_eq!(b.predicted_exponent, 2);
    let fb = b.fitted_exponent.unwrap();
    assert!((1.0..2.0).contains(&fb) && (fb - a).abs() < 0.1, "{a} {fb}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn census_restriction_is_monotone(d in 2u64..13, x in 50u64..400, cut in 3u64..60) {
        let allowed: Vec<u64> = primes_up_to(x).into_iter().filter(|&l| l < cut || is_prime(l) && l % 4 == 1).collect();
        let full = census_counts(d, x, None).unwrap();
        let part = census_counts(d, x, Some(&allowed)).unwrap();
        for i in 0..=x as usize {
            prop_assert!(part[i] <= full[i]);
        }
    }
}
