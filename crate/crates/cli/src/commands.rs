use hpadic::arith::{gcd, vp_u};
use hpadic::arithstat::{self as stat, SieveReport};
use hpadic::groupmeasure::rat_string;
use hpadic::horizontal::{nu_truncation, theta_element, NuTruncation};
use hpadic::kurihara::{derivative_congruence, kolyvagin_valuation_bound, kurihara_number, kurihara_search};
use serde_json::{json, Value};

use crate::context::{CliError, Context};
use crate::output::{csv_row, list, Output};

/// Character tables larger than this are refused.
pub const EVALUATE_ALL_LIMIT: usize = 10_000;

pub fn symbols(ctx: &Context, label: &str) -> Result<Output, CliError> {
    let ms = ctx.engine(label)?;
    let n = ms.curve().conductor;
    let bound = ctx.bound(30);
    let norm = ms.normalization();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for q in 1..=bound {
        if gcd(q, n) != 1 {
            eprintln!("notice: skipping q = {q}, which shares a factor with N = {n}");
            skipped.push(q);
            continue;
        }
        for (a, v) in ms.symbols_mod(q)? {
            rows.push((a, q, v));
        }
    }
    ctx.persist(&ms)?;

    let mut csv = String::from("label,a,q,plus,minus,l_plus,l_minus\n");
    let mut text = format!("{label}: ⟨a/q⟩± for q ≤ {bound}; L^± = {norm}·⟨a/q⟩±\n");
    let mut js = Vec::new();
    for (a, q, v) in &rows {
        let l = ms.l_plus_minus(*a as i64, *q)?;
        let cells = [rat_string(&v.plus), rat_string(&v.minus), rat_string(&l.plus), rat_string(&l.minus)];
        csv.push_str(&csv_row([label.to_string(), a.to_string(), q.to_string()].into_iter().chain(cells.clone())));
        text.push_str(&format!("{a}/{q}\t{}\t{}\t(L: {}, {})\n", cells[0], cells[1], cells[2], cells[3]));
        js.push(json!({"a": a, "q": q, "plus": cells[0], "minus": cells[1], "l_plus": cells[2], "l_minus": cells[3]}));
    }
    let json = json!({
        "label": label,
        "conductor": n,
        "normalization": ms.normalization(),
        "skipped": skipped,
        "symbols": js,
    });
    Ok(Output { json, csv, text })
}

pub fn theta(ctx: &Context, label: &str, primes: &[u64], sign: i64) -> Result<Output, CliError> {
    check_sign(sign)?;
    let ms = ctx.engine(label)?;
    let th = theta_element(&ms, primes, sign)?;
    ctx.persist(&ms)?;
    let l = th.modulus();
    let mut csv = String::from("a,coordinates,coefficient\n");
    let mut text = format!(
        "θ^{}_{l} for {label} on shape [{}], generators [{}]\n",
        if sign == 1 { "+" } else { "-" },
        list(th.measure.shape().orders()),
        list(&th.generators)
    );
    let mut js = Vec::new();
    for a in (1..l.max(2)).filter(|&a| gcd(a, l) == 1) {
        let x = th.coordinates(a);
        let c = rat_string(th.measure.coeff(&x));
        csv.push_str(&csv_row([a.to_string(), list(&x), c.clone()]));
        text.push_str(&format!("[{a}]\t{c}\n"));
        js.push(json!({"a": a, "coordinates": x, "coefficient": c}));
    }
    let json = json!({
        "label": label,
        "primes": primes,
        "generators": th.generators,
        "sign": sign,
        "shape": th.measure.shape().orders(),
        "coefficients": js,
    });
    Ok(Output { json, csv, text })
}

fn check_sign(sign: i64) -> Result<(), CliError> {
    if sign == 1 || sign == -1 {
        Ok(())
    } else {
        Err(CliError::usage(format!("sign must be 1 or -1, got {sign}")))
    }
}

pub fn nu(
    ctx: &Context,
    label: &str,
    p: u64,
    exceptional: &[u64],
    tail: &[u64],
    sign: i64,
    evaluate_all: bool,
) -> Result<Output, CliError> {
    check_sign(sign)?;
    if evaluate_all && p >= 2 {
        // |G| = ∏ p^{v_p(ℓ − 1)}, known before any symbol is computed
        let size = exceptional.iter().chain(tail).fold(1u128, |acc, &l| {
            acc.saturating_mul(p.pow(vp_u(l.saturating_sub(1).max(1), p)) as u128)
        });
        if size > EVALUATE_ALL_LIMIT as u128 {
            return Err(CliError::usage(format!(
                "--evaluate-all on a group of order {size} (limit {EVALUATE_ALL_LIMIT}); drop tail primes or pick ones with a smaller p-part of ℓ − 1"
            )));
        }
    }
    let ms = ctx.engine(label)?;
    let nu = nu_truncation(&ms, p, exceptional, tail, sign)?;
    ctx.persist(&ms)?;
    let nu_json: Value = serde_json::from_str(&nu.to_json()?).expect("serialized truncation is valid JSON");
    let mut json = json!({ "nu": nu_json, "p_integral": nu.is_p_integral() });
    let mut text = format!(
        "ν^{}_A for {label} at p = {p}, exceptional [{}], tail [{}], shape [{}]\n",
        if sign == 1 { "+" } else { "-" },
        list(exceptional),
        list(tail),
        list(nu.shape().orders())
    );
    let csv;
    if evaluate_all {
        let values = nu.measure.evaluate_all();
        let mut rows = Vec::new();
        let mut c = String::from("character,value,valuation\n");
        for (chi, v) in &values {
            let val = v.vp(p)?;
            c.push_str(&csv_row([list(chi.exps()), v.to_string(), val.to_string()]));
            text.push_str(&format!("χ[{}]\t{v}\tv_p = {val}\n", list(chi.exps())));
            rows.push(json!({"character": chi.exps(), "value": v.to_string(), "valuation": val.to_string()}));
        }
        json["characters"] = Value::Array(rows);
        csv = c;
    } else {
        let mut c = String::from("coordinates,coefficient\n");
        for (i, coeff) in nu.measure.coeffs().iter().enumerate() {
            let x = nu.shape().element(i);
            c.push_str(&csv_row([list(&x), rat_string(coeff)]));
            text.push_str(&format!("[{}]\t{}\n", list(&x), rat_string(coeff)));
        }
        csv = c;
    }
    Ok(Output { json, csv, text })
}

/// Accepts either a full `nu` report or the bare truncation object.
pub fn load_nu(text: &str) -> Result<NuTruncation, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::usage(format!("not JSON: {e}")))?;
    let inner = v.pointer("/result/nu").or_else(|| v.get("nu")).unwrap_or(&v);
    Ok(NuTruncation::from_json(&inner.to_string())?)
}

fn sieve_output(r: &SieveReport) -> Output {
    let (lo, hi) = r.wilson_interval();
    let mut text = format!(
        "{} primes for {} at p = {}, m = {}, ℓ ≤ {}: {} of {} (density {:.5}, 95% [{lo:.5}, {hi:.5}])\n",
        match r.kind {
            hpadic::arithstat::SieveKind::TaylorWiles => "Taylor–Wiles",
            hpadic::arithstat::SieveKind::Kato => "Kato",
        },
        r.labels.join(", "),
        r.p,
        r.m,
        r.bound,
        r.matches.len(),
        r.considered,
        r.density_f64()
    );
    if let Some(d) = &r.predicted_density {
        text.push_str(&format!("predicted density {d} ≈ {:.5}\n", d.to_f64()));
    }
    Output { json: r.to_json(), csv: r.to_csv(), text }
}

pub fn tw_sieve(ctx: &Context, labels: &[String], p: u64, m: u32) -> Result<Output, CliError> {
    let curves = labels.iter().map(|l| ctx.curve(l)).collect::<Result<Vec<_>, _>>()?;
    let r = stat::tw_sieve(&curves, p, m, ctx.bound(1_000_000))?;
    Ok(sieve_output(&r))
}

pub fn kato_sieve(ctx: &Context, label: &str, p: u64) -> Result<Output, CliError> {
    let r = stat::kato_sieve(&ctx.curve(label)?, p, ctx.bound(1_000_000))?;
    Ok(sieve_output(&r))
}

pub fn census(ctx: &Context, d: u64, restrict: Option<&[u64]>) -> Result<Output, CliError> {
    let r = stat::char_census(d, ctx.bound(1_000_000), restrict)?;
    let text = format!(
        "primitive characters of order {d}, conductor ≤ {}: {}\nfitted exponent {} (heuristic σ₀(d) − 2 = {})\n",
        r.bound,
        r.count,
        r.fitted_exponent.map(|f| format!("{f:.4}")).unwrap_or_else(|| "n/a".into()),
        r.predicted_exponent
    );
    Ok(Output { json: r.to_json(), csv: r.to_csv(), text })
}

#[allow(clippy::too_many_arguments)]
pub fn kurihara(
    ctx: &Context,
    label: &str,
    p: u64,
    q: Option<&[u64]>,
    generators: Option<&[u64]>,
    r_max: usize,
    tail: Option<&[u64]>,
    kolyvagin: bool,
) -> Result<Output, CliError> {
    let ms = ctx.engine(label)?;
    let datum = match q {
        Some(q) => Some(kurihara_number(&ms, p, q, generators)?),
        None => {
            if generators.is_some() {
                return Err(CliError::usage("--generators needs --q"));
            }
            kurihara_search(&ms, p, r_max, ctx.bound(500))?
        }
    };
    let mut json = json!({ "label": label, "p": p, "datum": datum.as_ref().map(|d| d.to_json()) });
    let mut csv = String::from("label,p,Q,generators,delta,residue\n");
    let mut text = String::new();
    match &datum {
        Some(d) => {
            csv.push_str(&csv_row([
                label.to_string(),
                p.to_string(),
                list(&d.q),
                list(&d.generators),
                rat_string(&d.delta),
                d.residue.to_string(),
            ]));
            text.push_str(&format!(
                "{label}, p = {p}, Q = [{}], generators [{}]: δ_Q = {} ≡ {} mod {p}\n",
                list(&d.q),
                list(&d.generators),
                d.delta,
                d.residue
            ));
        }
        None => text.push_str(&format!("{label}, p = {p}: no Q with r ≤ {r_max} and δ_Q ≢ 0 found\n")),
    }
    if let (Some(d), Some(tail)) = (&datum, tail) {
        let c = derivative_congruence(&ms, p, &d.q, tail)?;
        text.push_str(&format!(
            "ν(D^r) = {} ≡ {} and {}·δ_Q ≡ {} mod {p}: {}\n",
            c.derivative,
            c.lhs_mod_p,
            c.normalization,
            c.rhs_mod_p,
            if c.holds() { "holds" } else { "FAILS" }
        ));
        json["congruence"] = json!({
            "tail": tail,
            "derivative": rat_string(&c.derivative),
            "normalization": c.normalization,
            "lhs_mod_p": c.lhs_mod_p,
            "rhs_mod_p": c.rhs_mod_p,
            "holds": c.holds(),
        });
    }
    if let (Some(d), true) = (&datum, kolyvagin) {
        let k = kolyvagin_valuation_bound(&ms, p, &d.q, tail.unwrap_or(&[]))?;
        text.push_str(&format!(
            "min v_p(ν(χ)) = {} ≤ {} at χ[{}] of conductor {}; v_p(L(E,χ,1)/Ω⁺) = {}\n",
            k.min_valuation,
            k.bound,
            list(&k.witness),
            k.conductor,
            k.l_valuation
        ));
        json["kolyvagin"] = json!({
            "r": k.r,
            "bound": rat_string(&k.bound),
            "min_valuation": k.min_valuation.to_string(),
            "witness": k.witness,
            "conductor": k.conductor,
            "l_valuation": k.l_valuation.to_string(),
            "augmentation_rank": k.augmentation_rank,
            "holds": k.holds(),
        });
    }
    ctx.persist(&ms)?;
    Ok(Output { json, csv, text })
}
