use hpadic::arith::{gcd, is_prime, primes_up_to};
use hpadic::curves::{agm, bundled_catalog, find_curve, parse_catalog, CoeffTable, Curve, Mod2Image};
use rug::Float;

fn naive_count(e: &Curve, ell: u64) -> i64 {
    let [a1, a2, a3, a4, a6] = e.ainvs.map(|v| v.rem_euclid(ell as i64) as u64);
    let mut n = 1i64;
    for x in 0..ell {
        let rhs = (x * x % ell * x + a2 * x % ell * x + a4 * x + a6) % ell;
        for y in 0..ell {
            let lhs = (y * y + a1 * x % ell * y + a3 * y) % ell;
            if lhs == rhs {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn ap_matches_naive_count_up_to_1000() {
    for e in bundled_catalog() {
        for ell in primes_up_to(1000) {
            if !e.is_good(ell) {
                continue;
            }
            assert_eq!(ell as i64 + 1 - e.ap(ell), naive_count(&e, ell), "{} at {ell}", e.label);
        }
    }
}

#[test]
fn hasse_bound_to_ten_thousand() {
    for e in bundled_catalog() {
        for ell in primes_up_to(10_000) {
            if e.is_good(ell) {
                let a = e.ap(ell);
                assert!((a * a) as u64 <= 4 * ell, "{} at {ell}", e.label);
            }
        }
    }
}

#[test]
fn bad_primes_follow_reduction_type() {
    for e in bundled_catalog() {
        for (&p, t) in &e.bad_reduction {
            assert_eq!(e.ap(p), t.ap());
            assert!(e.ap(p) * e.ap(p) <= 1);
        }
    }
    let e = find_curve(&bundled_catalog(), "27a1").unwrap();
    assert_eq!(e.ap(3), 0);
}

#[test]
fn coefficient_table_is_multiplicative() {
    for e in bundled_catalog() {
        let t = e.an_table(10_000);
        assert_eq!(t.get(1), 1);
        assert_eq!(t.get(12), t.get(4) * t.get(3));
        for m in 2..=100usize {
            for n in 2..=10_000 / m {
                if gcd(m as u64, n as u64) == 1 {
                    assert_eq!(t.get(m * n), t.get(m) * t.get(n), "{} at {m}·{n}", e.label);
                }
            }
        }
    }
}

#[test]
fn hecke_relation_on_non_coprime_pairs() {
    for e in bundled_catalog() {
        let t = e.an_table(4000);
        for (m, n) in [(2usize, 2usize), (4, 6), (9, 3), (25, 5), (12, 18), (7, 49), (8, 12), (10, 30)] {
            let g = gcd(m as u64, n as u64) as usize;
            let mut rhs = 0i64;
            for d in 1..=g {
                if g.is_multiple_of(d) && gcd(d as u64, e.conductor) == 1 {
                    rhs += d as i64 * t.get(m * n / (d * d));
                }
            }
            assert_eq!(t.get(m) * t.get(n), rhs, "{} at ({m},{n})", e.label);
        }
    }
}

#[test]
fn torsion_is_consistent() {
    for e in bundled_catalog() {
        let n = e.torsion_order();
        assert!((1..=10).contains(&n) || n == 12);
        // divides the bound from 20 further primes
        let mut g = 0u64;
        let mut seen = 0;
        let mut ell = 101u64;
        while seen < 20 {
            if is_prime(ell) && e.is_good(ell) {
                g = gcd(g, (ell as i64 + 1 - e.ap(ell)) as u64);
                seen += 1;
            }
            ell += 2;
        }
        assert_eq!(g % n, 0, "{}", e.label);
    }
    let trivial: Vec<_> = ["37a1", "43a1", "389a1", "196a1"]
        .iter()
        .map(|l| find_curve(&bundled_catalog(), l).unwrap().torsion_order())
        .collect();
    assert_eq!(trivial, vec![1, 1, 1, 1]);
}

#[test]
fn agm_fixed_point() {
    let one = Float::with_val(128, 1);
    assert_eq!(agm(&one, &one, 128), 1);
    let two = Float::with_val(128, 2);
    let g = agm(&one, &two, 128).to_f64();
    assert!((g - 1.456_791_031_046_907).abs() < 1e-15);
}

#[test]
fn periods_are_stable_under_precision_doubling() {
    for e in bundled_catalog() {
        let a = e.periods(100);
        let b = e.periods(200);
        let tol = Float::with_val(200, Float::i_exp(1, -95));
        let d1 = Float::with_val(200, &a.omega_plus - &b.omega_plus).abs();
        let d2 = Float::with_val(200, &a.omega_minus - &b.omega_minus).abs();
        assert!(d1 < tol && d2 < tol, "{}", e.label);
        assert_eq!(a.real_components, if e.discriminant() > 0 { 2 } else { 1 });
    }
}

#[test]
fn known_real_periods() {
    let cat = bundled_catalog();
    let p = find_curve(&cat, "37a1").unwrap().periods(128);
    assert!((p.omega_plus.to_f64() - 5.986_917_292_463_92).abs() < 1e-10);
    let p = find_curve(&cat, "11a1").unwrap().periods(128);
    assert!((p.omega_plus.to_f64() - 1.269_209_304_279_55).abs() < 1e-12);
}

#[test]
fn mod2_classification() {
    let cat = bundled_catalog();
    for e in &cat {
        let img = e.mod2_image();
        let rational_2torsion = e.two_torsion_x().len();
        let tors_even = e.torsion_order() % 2 == 0;
        assert_eq!(rational_2torsion > 0, tors_even, "{}", e.label);
        if img == Mod2Image::Z3 {
            assert!(e.discriminant().is_perfect_square());
        }
    }
    assert_eq!(find_curve(&cat, "37a1").unwrap().mod2_image(), Mod2Image::S3);
}

#[test]
fn coefficient_cache_roundtrip() {
    let dir = std::env::temp_dir().join(format!("hpadic-an-{}", std::process::id()));
    let e = find_curve(&bundled_catalog(), "11a1").unwrap();
    let t = e.an_table(500);
    t.write_cache(&dir).unwrap();
    assert_eq!(CoeffTable::read_cache(&dir, "11a1", 300).unwrap().unwrap().as_slice(), &t.as_slice()[..301]);
    assert!(CoeffTable::read_cache(&dir, "11a1", 600).unwrap().is_none());
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn catalog_validation_names_the_curve() {
    let err = parse_catalog("99z9,0,0,1,-1,0,38,2:split;19:split\n").unwrap_err();
    assert!(err.to_string().contains("99z9"));
}

fn legendre_sum_ap(e: &Curve, ell: u64) -> i64 {
    let (b2, b4, b6, _) = e.b_invariants();
    let r = |v: i64| v.rem_euclid(ell as i64) as u64;
    let (b2, b4, b6) = (r(b2), r(2 * b4), r(b6));
    let mut s = 0i64;
    for x in 0..ell {
        let f = (4 * x % ell * x % ell * x + b2 * x % ell * x + b4 * x + b6) % ell;
        if f != 0 {
            s += if hpadic::arith::powmod(f, (ell - 1) / 2, ell) == 1 { 1 } else { -1 };
        }
    }
    -s
}

#[test]
fn large_prime_ap_matches_character_sum() {
    let cat = bundled_catalog();
    for label in ["11a1", "37a1", "389a1", "196a1"] {
        let e = find_curve(&cat, label).unwrap();
        for ell in primes_up_to(6000).into_iter().filter(|&l| l >= 1000) {
            assert_eq!(e.ap(ell), legendre_sum_ap(&e, ell), "{label} at {ell}");
        }
    }
}
