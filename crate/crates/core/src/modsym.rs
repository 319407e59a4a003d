//! Modular symbols ⟨a/q⟩± of elliptic curves, from bounded period integrals and rational
//! reconstruction, together with additive twists, norm relations and Birch–Stevens sums.

use std::collections::HashMap;
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::sync::{Arc, RwLock};

use rug::float::Constant;
use rug::{Assign, Float, Integer, Rational};

use crate::arith::{factor, gcd, gcd_i, invmod, is_prime, rem_i};
use crate::curves::{CoeffTable, Curve, Periods};
use crate::cyclotomic::CycNumber;
use crate::dirichlet::{require_primitive, DirichletCharacter, DirichletGroup};
use crate::error::{Error, Result};
use crate::numeric::{reconstruct, two_pow_neg, Complex};

pub const DEFAULT_PRECISION: u32 = 192;
pub const DEFAULT_QMAX: u64 = 1_000_000;

/// A complex value with an absolute error bound.
#[derive(Clone, Debug)]
pub struct PeriodIntegral {
    pub value: Complex,
    pub error_bound: Float,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolValue {
    pub plus: Rational,
    pub minus: Rational,
}

impl SymbolValue {
    pub fn zero() -> Self {
        SymbolValue { plus: Rational::new(), minus: Rational::new() }
    }

    pub fn add(&self, o: &SymbolValue) -> SymbolValue {
        SymbolValue { plus: Rational::from(&self.plus + &o.plus), minus: Rational::from(&self.minus + &o.minus) }
    }

    pub fn sub(&self, o: &SymbolValue) -> SymbolValue {
        SymbolValue { plus: Rational::from(&self.plus - &o.plus), minus: Rational::from(&self.minus - &o.minus) }
    }

    pub fn scale(&self, s: &Rational) -> SymbolValue {
        SymbolValue { plus: Rational::from(&self.plus * s), minus: Rational::from(&self.minus * s) }
    }

    pub fn is_zero(&self) -> bool {
        self.plus == 0 && self.minus == 0
    }

    /// The projection for a sign (+1 or −1).
    pub fn part(&self, sign: i64) -> &Rational {
        if sign >= 0 {
            &self.plus
        } else {
            &self.minus
        }
    }
}

impl fmt::Display for SymbolValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(+ {}, - {})", self.plus, self.minus)
    }
}

#[derive(Clone, Debug)]
pub struct SymbolConfig {
    pub precision: u32,
    pub qmax: u64,
    /// Recompute every batch at precision+64 bits and require the identical rationals.
    pub verify_extra: bool,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        SymbolConfig { precision: DEFAULT_PRECISION, qmax: DEFAULT_QMAX, verify_extra: true }
    }
}

/// Symbol engine for one curve. Cheap to share across threads; results are cached.
pub struct ModularSymbols {
    curve: Curve,
    config: SymbolConfig,
    periods: Periods,
    /// L(a/q) = Λ(a/q + iy) − w·Λ(M(a/q + iy)) with M the Atkin–Lehner-type matrix.
    w: i64,
    coeffs: RwLock<Arc<CoeffTable>>,
    cache: RwLock<HashMap<(u64, u64), SymbolValue>>,
}

impl fmt::Debug for ModularSymbols {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModularSymbols").field("curve", &self.curve.label).field("w", &self.w).finish()
    }
}

/// Sign ±1 of the involution, found by comparing two splittings of the path to i∞ at q = 1.
fn find_involution_sign(curve: &Curve, coeffs: &CoeffTable, prec: u32) -> Result<i64> {
    let wp = prec.min(128);
    let mut vals = Vec::new();
    for s in [1.1f64, 1.37] {
        let raw = raw_batch(curve, coeffs, 1, Float::with_val(wp, s), wp)?;
        vals.push((raw.f1[0].re.clone(), raw.f2[0].re.clone()));
    }
    let mut best = None;
    for w in [1i64, -1] {
        let l1 = Float::with_val(wp, &vals[0].0 - Float::with_val(wp, &vals[0].1 * w));
        let l2 = Float::with_val(wp, &vals[1].0 - Float::with_val(wp, &vals[1].1 * w));
        let d = (l1 - l2).abs().to_f64();
        best = match best {
            Some((bw, bd)) if bd <= d => Some((bw, bd)),
            _ => Some((w, d)),
        };
    }
    let (w, d) = best.unwrap();
    if d > 1e-20 {
        return Err(Error::Validation { label: curve.label.clone(), msg: format!("no consistent involution sign ({d:e})") });
    }
    Ok(w)
}

struct RawBatch {
    /// F1(b) = Σ_n a_n/n e^{−2πn y1} ζ_q^{nb}, F2 likewise at y2, for b = 0..q.
    f1: Vec<Complex>,
    f2: Vec<Complex>,
    error: Float,
}

/// Truncation length and tail bound 4e^{−2π(T+1)y}/(1−e^{−2πy}) ≤ 2^{−bits}.
fn truncation(y: &Float, bits: u32) -> usize {
    let yf = y.to_f64();
    let denom = -(-2.0 * std::f64::consts::PI * yf).exp_m1();
    let need = (bits as f64 + 2.0) * std::f64::consts::LN_2 + (4.0 / denom).ln();
    (need / (2.0 * std::f64::consts::PI * yf)).ceil() as usize + 1
}

fn tail_bound(y: &Float, t: usize, prec: u32) -> Float {
    let two_pi_y = Float::with_val(prec, Constant::Pi) * 2u32 * y;
    let num = Float::with_val(prec, -Float::with_val(prec, &two_pi_y * (t as u64 + 1))).exp() * 4u32;
    let den = Float::with_val(prec, 1) - Float::with_val(prec, -two_pi_y).exp();
    num / den
}

/// Residue sums S_j = Σ_{n≡j (q), n≤T} a_n/n·r^n.
fn residue_sums(a: &[i64], q: u64, y: &Float, t: usize, wp: u32) -> Vec<Float> {
    let r = Float::with_val(wp, -(Float::with_val(wp, Constant::Pi) * 2u32 * y)).exp();
    let mut s = vec![Float::new(wp); q as usize];
    let mut pw = Float::with_val(wp, 1);
    let mut term = Float::new(wp);
    for (n, &an) in a.iter().enumerate().take(t + 1).skip(1) {
        pw *= &r;
        if an == 0 {
            continue;
        }
        term.assign(&pw * an);
        term /= n as u32;
        s[n % q as usize] += &term;
    }
    s
}

/// F(b) = Σ_j s_j ζ_q^{jb} for all b, factored along the CRT decomposition of q.
fn crt_dft(s: &[Float], wp: u32) -> Vec<Complex> {
    let q = s.len() as u64;
    let moduli: Vec<u64> = factor(q).into_iter().map(|(p, e)| p.pow(e)).collect();
    let mut strides = vec![1usize; moduli.len()];
    for i in (0..moduli.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * moduli[i + 1] as usize;
    }
    let pos = |j: u64| -> usize { moduli.iter().zip(&strides).map(|(&m, &st)| (j % m) as usize * st).sum() };
    let mut data = vec![Complex::zero(wp); q as usize];
    for (j, v) in s.iter().enumerate() {
        data[pos(j as u64)] = Complex::from_real(Float::with_val(wp, v));
    }
    // ζ_q^x = ∏ ζ_{q_i}^{u_i x_i} with u_i = (q/q_i)^{-1} mod q_i
    for (ax, &m) in moduli.iter().enumerate() {
        let u = if m == 1 { 0 } else { invmod((q / m) % m, m).unwrap() };
        let roots: Vec<Complex> = (0..m).map(|k| Complex::root_of_unity((u * k % m) as i64, m, wp)).collect();
        let st = strides[ax];
        let block = st * m as usize;
        let mut line = vec![Complex::zero(wp); m as usize];
        for base in (0..q as usize).step_by(block) {
            for off in 0..st {
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + off + k * st].clone();
                }
                for b in 0..m as usize {
                    let mut acc = Complex::zero(wp);
                    for (jj, v) in line.iter().enumerate() {
                        if v.re.is_zero() && v.im.is_zero() {
                            continue;
                        }
                        acc.add_assign(&v.mul(&roots[(jj * b) % m as usize]));
                    }
                    data[base + off + b * st] = acc;
                }
            }
        }
    }
    (0..q).map(|b| data[pos(b)].clone()).collect()
}

/// Both Fourier sums at all residues b mod q; y1 = s/(q√N), y2 = 1/(N q² y1).
fn raw_batch(curve: &Curve, coeffs: &CoeffTable, q: u64, s: Float, prec: u32) -> Result<RawBatch> {
    let n = curve.conductor;
    let gp = prec + 16;
    let rt = (n as f64).sqrt() * q as f64;
    let sf = s.to_f64();
    let ymin_f = (sf / rt).min(1.0 / (sf * rt));
    let t = truncation(&Float::with_val(53, ymin_f), prec + 2);
    if t > coeffs.n_max() {
        return Err(Error::Precondition(format!("coefficient table too short: need {t}")));
    }
    // rounding: (T + q + 16)·8·M·2^{-wp}, M ≤ 2/(1 − e^{−2πy}); y1, y2 exact to wp bits
    let m = 2.0 / -(-2.0 * std::f64::consts::PI * ymin_f).exp_m1();
    let slack = ((t as f64 + q as f64 + 16.0) * 8.0 * m).log2().ceil() as u32;
    let wp = prec + 8 + slack;
    let sqrt_n = Float::with_val(wp, n).sqrt();
    let s = Float::with_val(wp, &s);
    let y1 = Float::with_val(wp, &s / Float::with_val(wp, &sqrt_n * q));
    let y2 = Float::with_val(wp, Float::with_val(wp, &sqrt_n * q) * &s).recip();
    let ymin = Float::with_val(gp, if y1 < y2 { &y1 } else { &y2 });
    let a = coeffs.as_slice();
    let same = s == 1;
    let s1 = residue_sums(a, q, &y1, t, wp);
    let s2 = if same { s1.clone() } else { residue_sums(a, q, &y2, t, wp) };
    let f1 = crt_dft(&s1, wp);
    let f2 = if same { f1.clone() } else { crt_dft(&s2, wp) };
    let mut error = tail_bound(&ymin, t, gp);
    error += two_pow_neg(prec + 4, gp);
    Ok(RawBatch { f1, f2, error })
}

impl ModularSymbols {
    pub fn new(curve: Curve) -> Result<Self> {
        Self::with_config(curve, SymbolConfig::default())
    }

    pub fn with_config(curve: Curve, config: SymbolConfig) -> Result<Self> {
        Self::with_coefficients(curve, config, None)
    }

    /// As `with_config`, reusing a precomputed coefficient table when long enough.
    pub fn with_coefficients(curve: Curve, config: SymbolConfig, table: Option<CoeffTable>) -> Result<Self> {
        if config.precision < 64 {
            return Err(Error::Precondition("precision must be at least 64 bits".into()));
        }
        let wp = config.precision + config.precision / 4 + 40;
        let periods = curve.periods(wp);
        let start = table.unwrap_or_else(|| curve.an_table(4096.max(truncation_for(&curve, 1, 1.37, 128))));
        let need = truncation_for(&curve, 1, 1.37, 128);
        let start = if start.n_max() >= need { start } else { curve.an_table(need) };
        let w = find_involution_sign(&curve, &start, 128)?;
        Ok(ModularSymbols {
            curve,
            config,
            periods,
            w,
            coeffs: RwLock::new(Arc::new(start)),
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn config(&self) -> &SymbolConfig {
        &self.config
    }

    pub fn periods(&self) -> &Periods {
        &self.periods
    }

    /// The global root number ε_E, equal to −w.
    pub fn root_number(&self) -> i64 {
        -self.w
    }

    /// 2·c_E·#E(Q)_tors, the factor between ⟨·⟩ and L^±.
    pub fn normalization(&self) -> u64 {
        2 * self.curve.manin * self.curve.torsion_order()
    }

    pub fn coefficients(&self) -> Arc<CoeffTable> {
        self.coeffs.read().unwrap().clone()
    }

    fn coeffs_for(&self, n: usize) -> Arc<CoeffTable> {
        {
            let c = self.coeffs.read().unwrap();
            if c.n_max() >= n {
                return c.clone();
            }
        }
        let mut c = self.coeffs.write().unwrap();
        if c.n_max() < n {
            let target = n.max(c.n_max() * 2);
            *c = Arc::new(self.curve.an_table(target));
        }
        c.clone()
    }

    /// Extend the coefficient table so every modulus up to `q_max` needs no regrowth.
    pub fn reserve(&self, q_max: u64) {
        let extra = if self.config.verify_extra { 64 } else { 0 };
        self.coeffs_for(truncation_for(&self.curve, q_max, 1.0, self.config.precision + extra));
    }

    fn check_modulus(&self, q: u64) -> Result<()> {
        if q == 0 {
            return Err(Error::Precondition("q must be positive".into()));
        }
        if gcd(q, self.curve.conductor) != 1 {
            return Err(Error::Unsupported(format!("q = {q} shares a factor with N = {}", self.curve.conductor)));
        }
        Ok(())
    }

    /// L(f_E, a/q, 1) for every unit a mod q (None elsewhere), with y1 = s/(q√N).
    pub fn additive_l_batch(&self, q: u64, s: f64, precision: u32) -> Result<Vec<Option<PeriodIntegral>>> {
        self.check_modulus(q)?;
        let gp = precision + 16;
        let sf = Float::with_val(gp, s);
        let yf = s / (q as f64 * (self.curve.conductor as f64).sqrt());
        let y2 = 1.0 / (s * q as f64 * (self.curve.conductor as f64).sqrt());
        let t = truncation(&Float::with_val(53, yf.min(y2)), precision + 2);
        let coeffs = self.coeffs_for(t);
        let raw = raw_batch(&self.curve, &coeffs, q, sf, precision)?;
        let n = self.curve.conductor;
        let mut out = vec![None; q as usize];
        for a in 0..q {
            if gcd(a, q) != 1 {
                continue;
            }
            let cp = if q == 1 { 0 } else { invmod((a * (n % q)) % q, q).unwrap() };
            let b2 = (q - cp) % q;
            let second = raw.f2[b2 as usize].scale(&Float::with_val(gp, self.w));
            let value = raw.f1[a as usize].sub(&second);
            let error_bound = Float::with_val(gp, &raw.error * 2u32);
            out[a as usize] = Some(PeriodIntegral { value, error_bound });
        }
        Ok(out)
    }

    /// L(f_E, a/q, 1) = −2πi∫_{a/q}^{i∞} f_E(z)dz.
    pub fn additive_l(&self, a: i64, q: u64) -> Result<PeriodIntegral> {
        self.additive_l_at(a, q, 1.0, self.config.precision)
    }

    /// As `additive_l` with the splitting point scaled by `s`.
    pub fn additive_l_at(&self, a: i64, q: u64, s: f64, precision: u32) -> Result<PeriodIntegral> {
        if gcd_i(a, q as i64) != 1 {
            return Err(Error::Precondition(format!("gcd({a}, {q}) != 1")));
        }
        let r = rem_i(a, q);
        Ok(self.additive_l_batch(q, s, precision)?.swap_remove(r as usize).unwrap())
    }

    fn reconstruct_batch(&self, q: u64, precision: u32) -> Result<Vec<Option<SymbolValue>>> {
        let batch = self.additive_l_batch(q, 1.0, precision)?;
        let gp = precision + 16;
        let qmax = Integer::from(self.config.qmax);
        let op = Float::with_val(gp, &self.periods.omega_plus);
        let om = Float::with_val(gp, &self.periods.omega_minus);
        let slack = two_pow_neg(precision, gp);
        let mut out = vec![None; q as usize];
        for (a, pi) in batch.into_iter().enumerate() {
            let Some(pi) = pi else { continue };
            let xp = Float::with_val(gp, &pi.value.re / &op);
            let xm = Float::with_val(gp, &pi.value.im / &om);
            let ep = Float::with_val(gp, &pi.error_bound / &op) + &slack;
            let em = Float::with_val(gp, &pi.error_bound / &om) + &slack;
            let plus = reconstruct(&xp, &ep, &qmax)
                .ok_or_else(|| Error::ReconstructionFailed { what: format!("{} <{a}/{q}>+", self.curve.label) })?;
            let minus = reconstruct(&xm, &em, &qmax)
                .ok_or_else(|| Error::ReconstructionFailed { what: format!("{} <{a}/{q}>-", self.curve.label) })?;
            out[a] = Some(SymbolValue { plus, minus });
        }
        Ok(out)
    }

    /// All symbols ⟨a/q⟩ for units a mod q, computed together and cached.
    pub fn symbols_mod(&self, q: u64) -> Result<Vec<(u64, SymbolValue)>> {
        self.check_modulus(q)?;
        let units: Vec<u64> = (0..q).filter(|&a| gcd(a, q) == 1).collect();
        {
            let c = self.cache.read().unwrap();
            if units.iter().all(|&a| c.contains_key(&(a, q))) {
                return Ok(units.iter().map(|&a| (a, c[&(a, q)].clone())).collect());
            }
        }
        let vals = self.reconstruct_batch(q, self.config.precision)?;
        if self.config.verify_extra {
            let again = self.reconstruct_batch(q, self.config.precision + 64)?;
            for a in &units {
                if vals[*a as usize] != again[*a as usize] {
                    return Err(Error::ReconstructionFailed {
                        what: format!("{} <{a}/{q}> changed at precision+64", self.curve.label),
                    });
                }
            }
        }
        let mut c = self.cache.write().unwrap();
        let mut res = Vec::with_capacity(units.len());
        for a in units {
            let v = vals[a as usize].clone().unwrap();
            c.insert((a, q), v.clone());
            res.push((a, v));
        }
        Ok(res)
    }

    /// ⟨a/q⟩± with a taken mod q.
    pub fn symbol(&self, a: i64, q: u64) -> Result<SymbolValue> {
        self.check_modulus(q)?;
        if gcd_i(a, q as i64) != 1 {
            return Err(Error::Precondition(format!("gcd({a}, {q}) != 1")));
        }
        let r = rem_i(a, q);
        if let Some(v) = self.cache.read().unwrap().get(&(r, q)) {
            return Ok(v.clone());
        }
        let all = self.symbols_mod(q)?;
        Ok(all.into_iter().find(|(b, _)| *b == r).unwrap().1)
    }

    /// L^±(a/q) = 2·c_E·#tor·⟨a/q⟩±.
    pub fn l_plus_minus(&self, a: i64, q: u64) -> Result<SymbolValue> {
        Ok(self.symbol(a, q)?.scale(&Rational::from(self.normalization())))
    }

    pub fn cached(&self) -> Vec<((u64, u64), SymbolValue)> {
        let c = self.cache.read().unwrap();
        let mut v: Vec<_> = c.iter().map(|(k, s)| (*k, s.clone())).collect();
        v.sort_by_key(|(k, _)| (k.1, k.0));
        v
    }

    /// Recompute every cached symbol at precision+64 and list the keys that differ.
    pub fn reverify_cache(&self) -> Result<Vec<(u64, u64)>> {
        let keys = self.cached();
        let mut moduli: Vec<u64> = keys.iter().map(|((_, q), _)| *q).collect();
        moduli.dedup();
        let mut bad = Vec::new();
        for q in moduli {
            let again = self.reconstruct_batch(q, self.config.precision + 64)?;
            for ((a, q2), v) in &keys {
                if *q2 == q && again[*a as usize].as_ref() != Some(v) {
                    bad.push((*a, q));
                }
            }
        }
        Ok(bad)
    }

    /// Append cached symbols as CSV rows label,a,q,plus_num,plus_den,minus_num,minus_den.
    pub fn save_cache(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let existing = if path.exists() { read_symbol_rows(path)? } else { Vec::new() };
        let have: std::collections::HashSet<(String, u64, u64)> =
            existing.into_iter().map(|(l, a, q, _)| (l, a, q)).collect();
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        for ((a, q), v) in self.cached() {
            if have.contains(&(self.curve.label.clone(), a, q)) {
                continue;
            }
            writeln!(
                f,
                "{},{a},{q},{},{},{},{}",
                self.curve.label,
                v.plus.numer(),
                v.plus.denom(),
                v.minus.numer(),
                v.minus.denom()
            )?;
        }
        Ok(())
    }

    /// Load rows for this curve; returns the number of symbols loaded.
    pub fn load_cache(&self, path: &Path) -> Result<usize> {
        if !path.exists() {
            return Ok(0);
        }
        let rows = read_symbol_rows(path)?;
        let mut c = self.cache.write().unwrap();
        let mut k = 0;
        for (label, a, q, v) in rows {
            if label == self.curve.label {
                c.insert((a, q), v);
                k += 1;
            }
        }
        Ok(k)
    }

    /// Σ_{a≡a0 (q1)} L(a/(q1ℓ)) against a_ℓL(a0/q1) − L(ℓa0/q1) − L(ℓ̄a0/q1), on symbols.
    pub fn verify_norm_relation(&self, q1: u64, ell: u64, a0: i64) -> Result<NormRelationReport> {
        if !is_prime(ell) {
            return Err(Error::Precondition(format!("{ell} is not prime")));
        }
        if gcd(q1, ell) != 1 || gcd(q1 * ell, self.curve.conductor) != 1 {
            return Err(Error::Precondition(format!("need gcd(q1, ℓ) = 1 and gcd(q1ℓ, N) = 1 for ({q1}, {ell})")));
        }
        if gcd_i(a0, q1 as i64) != 1 {
            return Err(Error::Precondition(format!("{a0} is not a unit mod {q1}")));
        }
        let q = q1 * ell;
        let a0r = rem_i(a0, q1);
        let mut lhs = SymbolValue::zero();
        for (a, v) in self.symbols_mod(q)? {
            if a % q1 == a0r {
                lhs = lhs.add(&v);
            }
        }
        let ap = Rational::from(self.curve.ap(ell));
        let lbar = if q1 == 1 { 0 } else { invmod(ell % q1, q1).unwrap() };
        let rhs = self
            .symbol(a0r as i64, q1)?
            .scale(&ap)
            .sub(&self.symbol(((ell % q1.max(1)) * a0r % q1.max(1)) as i64, q1)?)
            .sub(&self.symbol((lbar * a0r % q1.max(1)) as i64, q1)?);
        let difference = lhs.sub(&rhs);
        Ok(NormRelationReport { q1, ell, a0: a0r, lhs, rhs, difference })
    }

    /// θ(χ) = Σ_a χ̄(a)·L^±(a/q) in Q(ζ_{ord χ}), sign the parity of χ.
    pub fn birch_stevens_theta(&self, group: &DirichletGroup, chi: &DirichletCharacter) -> Result<CycNumber> {
        require_primitive(chi)?;
        let q = chi.modulus();
        self.check_modulus(q)?;
        let d = chi.order();
        let sign = chi.parity();
        let cbar = chi.conj();
        let mut num = vec![Rational::new(); d as usize];
        for (a, v) in self.symbols_mod(q)? {
            let k = cbar.value_exp(group, a as i64).unwrap();
            num[k as usize] += v.part(sign);
        }
        let norm = Rational::from(self.normalization());
        let mut coeffs = vec![Rational::new(); d as usize];
        for (k, c) in num.into_iter().enumerate() {
            coeffs[k] = c * &norm;
        }
        Ok(CycNumber::from_coeffs(d, &coeffs))
    }
}

fn truncation_for(curve: &Curve, q: u64, s: f64, prec: u32) -> usize {
    let rt = (curve.conductor as f64).sqrt() * q as f64;
    let y = (s / rt).min(1.0 / (s * rt));
    truncation(&Float::with_val(53, y), prec + 2)
}

type SymbolRow = (String, u64, u64, SymbolValue);

pub fn read_symbol_rows(path: &Path) -> Result<Vec<SymbolRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("label,") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
        if f.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let int = |s: &str| s.trim().parse::<Integer>().map_err(|_| bad("bad integer"));
        let u = |s: &str| s.trim().parse::<u64>().map_err(|_| bad("bad integer"));
        let rat = |n: Integer, d: Integer| {
            if d <= 0 {
                Err(bad("nonpositive denominator"))
            } else {
                Ok(Rational::from((n, d)))
            }
        };
        let plus = rat(int(f[3])?, int(f[4])?)?;
        let minus = rat(int(f[5])?, int(f[6])?)?;
        out.push((f[0].to_string(), u(f[1])?, u(f[2])?, SymbolValue { plus, minus }));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct NormRelationReport {
    pub q1: u64,
    pub ell: u64,
    pub a0: u64,
    pub lhs: SymbolValue,
    pub rhs: SymbolValue,
    pub difference: SymbolValue,
}

impl NormRelationReport {
    pub fn holds(&self) -> bool {
        self.difference.is_zero()
    }
}

/// Root number of E from the q = 1 functional equation, independent of the symbol engine.
pub fn numeric_root_number(curve: &Curve, prec: u32) -> i64 {
    let rt = (curve.conductor as f64).sqrt();
    let t = truncation(&Float::with_val(53, 1.0 / (1.3 * rt)), prec);
    let a = curve.an_table(t);
    let sqrt_n = Float::with_val(prec, curve.conductor).sqrt();
    let sums = |x: f64| -> Float {
        let y = Float::with_val(prec, x) / &sqrt_n;
        let r = Float::with_val(prec, -(Float::with_val(prec, Constant::Pi) * 2u32 * y)).exp();
        let mut pw = Float::with_val(prec, 1);
        let mut acc = Float::new(prec);
        for n in 1..=t {
            pw *= &r;
            acc += Float::with_val(prec, &pw * a.get(n)) / n as u32;
        }
        acc
    };
    let (a1, b1, a2, b2) = (sums(1.0), sums(1.0), sums(1.3), sums(1.0 / 1.3));
    let plus = (Float::with_val(prec, &a1 + &b1) - Float::with_val(prec, &a2 + &b2)).abs();
    let minus = (Float::with_val(prec, &a1 - &b1) - Float::with_val(prec, &a2 - &b2)).abs();
    if plus < minus {
        1
    } else {
        -1
    }
}

/// L(E, χ, 1) for primitive χ mod q with gcd(q, N) = 1, from the smoothed two-sum
/// Σ a_nχ(n)/n e^{−2πnt/A} + ε' Σ a_nχ̄(n)/n e^{−2πn/(tA)}, A = q√N,
/// ε' = ε_E χ(N) τ(χ)²/q.
pub fn numeric_twisted_l(curve: &Curve, group: &DirichletGroup, chi: &DirichletCharacter, t: f64, prec: u32) -> Complex {
    let q = chi.modulus();
    let big_a = q as f64 * (curve.conductor as f64).sqrt();
    let ymin = (t / big_a).min(1.0 / (t * big_a));
    let nmax = truncation(&Float::with_val(53, ymin), prec);
    let a = curve.an_table(nmax);
    let eps_e = numeric_root_number(curve, prec);
    let tau = chi.gauss_sum_numeric(group, prec);
    let chin = chi.value_numeric(group, curve.conductor as i64, prec);
    let eps = tau.mul(&tau).mul(&chin).scale(&Float::with_val(prec, eps_e)).scale(&Float::with_val(prec, q).recip());
    let d = chi.order();
    let roots: Vec<Complex> = (0..d).map(|k| Complex::root_of_unity(k as i64, d, prec)).collect();
    let pi2 = Float::with_val(prec, Constant::Pi) * 2u32;
    let big_a = Float::with_val(prec, curve.conductor).sqrt() * q;
    let t = Float::with_val(prec, t);
    let r1 = Float::with_val(prec, -Float::with_val(prec, &pi2 * &t) / &big_a).exp();
    let r2 = Float::with_val(prec, -Float::with_val(prec, &pi2 / &t) / &big_a).exp();
    let (mut p1, mut p2) = (Float::with_val(prec, 1), Float::with_val(prec, 1));
    let mut s1 = Complex::zero(prec);
    let mut s2 = Complex::zero(prec);
    for n in 1..=nmax {
        p1 *= &r1;
        p2 *= &r2;
        let an = a.get(n);
        if an == 0 {
            continue;
        }
        let Some(k) = chi.value_exp(group, n as i64) else { continue };
        let z = &roots[k as usize];
        let c1 = Float::with_val(prec, &p1 * an) / n as u32;
        let c2 = Float::with_val(prec, &p2 * an) / n as u32;
        s1.add_scaled(z, &c1);
        s2.add_scaled(&z.conj(), &c2);
    }
    s1.add(&eps.mul(&s2))
}
