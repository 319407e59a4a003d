use hpadic::arithstat::char_census;
use hpadic::properties::{counterexamples_behave, run_suite_with};
use hpadic::suites::{
    birch_stevens_numeric, census_oracle, interpolation_suite, kurihara_suite, norm_relation_lattice,
    reconstruction_gate, verify_truncation, Tally,
};
use serde_json::{json, Value};

use crate::commands::load_nu;
use crate::context::{CliError, Context};
use crate::output::{csv_row, Output};
use crate::{Suite, VerifyArgs};

const FAILURES_SHOWN: usize = 20;

fn labels(ctx: &Context, args: &VerifyArgs, default_count: usize) -> Vec<String> {
    match &args.labels {
        Some(l) => l.clone(),
        None => ctx.catalog.iter().take(default_count).map(|c| c.label.clone()).collect(),
    }
}

/// Runs one suite; the flag is false when any check failed.
pub fn run(ctx: &Context, args: &VerifyArgs) -> Result<(Output, bool), CliError> {
    let mut extra = json!({});
    let name = match args.suite {
        Suite::Measures => "measures",
        Suite::Normrel => "normrel",
        Suite::Interp => "interp",
        Suite::Kurihara => "kurihara",
        Suite::Census => "census",
    };
    let needs_curves = matches!(args.suite, Suite::Normrel | Suite::Kurihara) || (args.suite == Suite::Interp && args.input.is_none());
    let mut t = Tally::default();
    if needs_curves && ctx.catalog.is_empty() {
        t.skip("catalog is empty");
    } else {
        match args.suite {
            Suite::Measures => {
                let r = run_suite_with(ctx.global.seed, args.count, args.corrupt);
                for (k, v) in &r.hits {
                    t.checks.insert(k.to_string(), *v as u64);
                }
                for f in &r.failures {
                    let name = f.split(':').next().unwrap_or("measures");
                    *t.checks.entry(name.to_string()).or_default() += 1;
                }
                t.failures.extend(r.failures);
                extra["measures"] = json!(r.measures);
                if !args.corrupt {
                    let c = counterexamples_behave();
                    t.check("counterexamples", c.is_ok(), || c.unwrap_err());
                }
            }
            Suite::Normrel => {
                let bound = ctx.bound(200);
                for label in labels(ctx, args, 10) {
                    let ms = ctx.engine(&label)?;
                    t.merge(norm_relation_lattice(&ms, bound)?);
                    t.merge(reconstruction_gate(&ms)?);
                    ctx.persist(&ms)?;
                }
            }
            Suite::Interp => match &args.input {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                    let nu = load_nu(&text)?;
                    let ms = ctx.engine(&nu.label)?;
                    let again = hpadic::horizontal::nu_truncation(&ms, nu.p, &nu.exceptional, &nu.tail, nu.sign)?;
                    t.check("recomputed", again == nu, || format!("{} differs from a fresh computation", path.display()));
                    t.merge(verify_truncation(&ms, &nu)?);
                    ctx.persist(&ms)?;
                }
                None => {
                    let conductor = ctx.bound(30);
                    for label in labels(ctx, args, 3) {
                        let ms = ctx.engine(&label)?;
                        for p in [2u64, 3] {
                            t.merge(interpolation_suite(&ms, p, 3, 10_000)?);
                        }
                        t.merge(birch_stevens_numeric(&ms, conductor, &[2, 3, 4, 5], 1e-10)?);
                        ctx.persist(&ms)?;
                    }
                }
            },
            Suite::Kurihara => {
                let bound = ctx.bound(200);
                for label in labels(ctx, args, usize::MAX) {
                    let ms = ctx.engine(&label)?;
                    if ms.symbol(0, 1)?.plus == 0 {
                        t.skip(format!("{label}: L(E,1) = 0"));
                        continue;
                    }
                    for p in [3u64, 5, 7] {
                        t.merge(kurihara_suite(&ms, p, bound, 2)?);
                    }
                    ctx.persist(&ms)?;
                }
            }
            Suite::Census => {
                t.merge(census_oracle(ctx.bound(300), 12)?);
                let mut fits = Vec::new();
                for d in [3u64, 6] {
                    let r = char_census(d, args.fit_bound, None)?;
                    let fit = r.fitted_exponent.unwrap_or(f64::NAN);
                    let within = (fit - r.predicted_exponent as f64).abs() <= 0.3;
                    if args.strict_fit {
                        t.check("growth_exponent", within, || {
                            format!("d={d}: fitted {fit:.3} vs σ₀(d) − 2 = {}", r.predicted_exponent)
                        });
                    }
                    fits.push(json!({"d": d, "bound": args.fit_bound, "fitted": fit, "predicted": r.predicted_exponent, "within_0.3": within}));
                }
                extra["fits"] = Value::Array(fits);
            }
        }
    }
    Ok((render(name, &t, extra), t.ok()))
}

fn render(name: &str, t: &Tally, extra: Value) -> Output {
    let json = json!({
        "suite": name,
        "passed": t.ok(),
        "total": t.total(),
        "checks": t.checks,
        "failures": t.failures,
        "skipped": t.skipped,
        "extra": extra,
    });
    let mut csv = String::from("suite,check,count\n");
    for (k, v) in &t.checks {
        csv.push_str(&csv_row([name.to_string(), k.clone(), v.to_string()]));
    }
    let mut text = format!(
        "{name}: {} checks, {} failures{}\n",
        t.total(),
        t.failures.len(),
        if t.skipped.is_empty() { String::new() } else { format!(", {} skipped", t.skipped.len()) }
    );
    for (k, v) in &t.checks {
        text.push_str(&format!("  {k}: {v}\n"));
    }
    for s in &t.skipped {
        text.push_str(&format!("  skipped: {s}\n"));
    }
    for f in t.failures.iter().take(FAILURES_SHOWN) {
        text.push_str(&format!("  FAIL {f}\n"));
    }
    if t.failures.len() > FAILURES_SHOWN {
        text.push_str(&format!("  … {} more\n", t.failures.len() - FAILURES_SHOWN));
    }
    if let Some(fits) = extra.get("fits").and_then(|f| f.as_array()) {
        for f in fits {
            text.push_str(&format!(
                "  growth exponent d={}: fitted {:.3} at X = {}, heuristic {}\n",
                f["d"], f["fitted"].as_f64().unwrap_or(f64::NAN), f["bound"], f["predicted"]
            ));
        }
    }
    Output { json, csv, text }
}
