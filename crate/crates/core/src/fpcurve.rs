//! Group orders of y² = x³ + Ax + B over F_ℓ by baby-step giant-step on points of the
//! curve and of its quadratic twist.

use std::collections::HashMap;

use crate::arith::{invmod, isqrt, powmod};

type Pt = Option<(u64, u64)>;

struct Fp {
    l: u64,
    a: u64,
}

impl Fp {
    fn mul(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.l as u128) as u64
    }

    fn add(&self, p: Pt, q: Pt) -> Pt {
        let (Some((x1, y1)), Some((x2, y2))) = (p, q) else {
            return p.or(q);
        };
        let l = self.l;
        let lam = if x1 == x2 {
            if (y1 + y2) % l == 0 {
                return None;
            }
            let num = (3 * self.mul(x1, x1) + self.a) % l;
            self.mul(num, invmod(2 * y1 % l, l)?)
        } else {
            self.mul((y2 + l - y1) % l, invmod((x2 + l - x1) % l, l)?)
        };
        let x3 = (self.mul(lam, lam) + 2 * l - x1 - x2) % l;
        let y3 = (self.mul(lam, (x1 + l - x3) % l) + l - y1) % l;
        Some((x3, y3))
    }

    fn neg(&self, p: Pt) -> Pt {
        p.map(|(x, y)| (x, (self.l - y) % self.l))
    }

    fn mul_pt(&self, mut k: u64, p: Pt) -> Pt {
        let mut acc = None;
        let mut base = p;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    /// All k ∈ [0, span] with (lo + k)·P = O, or None when P has small order.
    fn multiples_in(&self, p: Pt, lo: u64, span: u64) -> Option<Vec<u64>> {
        let m = isqrt(span + 1) + 1;
        let mut baby = HashMap::with_capacity(m as usize);
        let mut r = None;
        for j in 0..m {
            if j > 0 && r.is_none() {
                return None;
            }
            if let Some(pt) = r {
                baby.insert(pt, j);
            }
            r = self.add(r, p);
        }
        let giant = self.neg(self.mul_pt(m, p));
        let mut target = self.neg(self.mul_pt(lo, p));
        let mut out = Vec::new();
        for i in 0..=span / m + 1 {
            let j = match target {
                None => Some(0),
                Some(pt) => baby.get(&pt).copied(),
            };
            if let Some(j) = j {
                let k = i * m + j;
                if k <= span {
                    out.push(k);
                }
            }
            target = self.add(target, giant);
        }
        Some(out)
    }
}

/// #E(F_ℓ) for y² = x³ + ax + b, ℓ > 3 with nonzero discriminant; None if undecided.
pub fn group_order(a: u64, b: u64, l: u64) -> Option<u64> {
    let c = l + 1;
    let w = 2 * isqrt(l) + 2;
    let lo = c.saturating_sub(w).max(1);
    let span = c + w - lo;
    let mut cands: Vec<u64> = (lo..=lo + span).collect();
    let mut x = 0u64;
    let mut tries = 0;
    while cands.len() > 1 && tries < 200 {
        x += 1;
        if x >= l {
            return None;
        }
        let f = (((x * x % l) * x) % l + a * x % l + b) % l;
        if f == 0 {
            continue;
        }
        tries += 1;
        let sq = powmod(f, (l - 1) / 2, l) == 1;
        // points of the twist by d = f(x): (d·x, d²) on y² = x³ + a d² x + b d³
        let (curve, pt) = if sq {
            (Fp { l, a }, (x, tonelli(f, l)?))
        } else {
            let d2 = f * f % l;
            (Fp { l, a: a * d2 % l }, (f * x % l, d2))
        };
        let Some(ks) = curve.multiples_in(Some(pt), lo, span) else { continue };
        let hits: Vec<u64> = ks.iter().map(|k| lo + k).collect();
        cands.retain(|&n| {
            let target = if sq { n } else { 2 * c - n };
            hits.contains(&target)
        });
    }
    (cands.len() == 1).then(|| cands[0])
}

/// Square root mod an odd prime.
fn tonelli(n: u64, p: u64) -> Option<u64> {
    let mul = |x: u64, y: u64| ((x as u128 * y as u128) % p as u128) as u64;
    if p % 4 == 3 {
        let r = powmod(n, (p + 1) / 4, p);
        return (mul(r, r) == n % p).then_some(r);
    }
    let (mut q, mut s) = (p - 1, 0);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| powmod(z, (p - 1) / 2, p) == p - 1)?;
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(n, q, p);
    let mut r = powmod(n, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul(t2, t2);
            i += 1;
            if i == m {
                return None;
            }
        }
        let mut b = c;
        for _ in 0..m - i - 1 {
            b = mul(b, b);
        }
        m = i;
        c = mul(b, b);
        t = mul(t, c);
        r = mul(r, b);
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: u64, b: u64, l: u64) -> u64 {
        let mut n = 1;
        for x in 0..l {
            let f = (x * x % l * x + a * x + b) % l;
            n += if f == 0 { 1 } else if powmod(f, (l - 1) / 2, l) == 1 { 2 } else { 0 };
        }
        n
    }

    #[test]
    fn matches_naive_count() {
        for l in [1009u64, 1013, 2003, 4099, 7919] {
            for (a, b) in [(1u64, 1u64), (0, 7), (5, 0), (l - 1, 3)] {
                assert_eq!(group_order(a, b, l), Some(naive(a, b, l)), "{l} {a} {b}");
            }
        }
    }

    #[test]
    fn square_roots() {
        for p in [13u64, 17, 97, 1009, 7681] {
            for n in 1..50 {
                if let Some(r) = tonelli(n, p) {
                    assert_eq!(r * r % p, n % p);
                }
            }
        }
    }
}
