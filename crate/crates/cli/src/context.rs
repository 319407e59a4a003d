use std::path::PathBuf;

use hpadic::curves::{bundled_catalog, find_curve, load_catalog, CoeffTable, Curve};
use hpadic::modsym::{ModularSymbols, SymbolConfig};
use serde_json::{json, Value};

use crate::output::Output;
use crate::{Format, Global};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn verification(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl From<hpadic::Error> for CliError {
    fn from(e: hpadic::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

pub struct Context {
    pub global: Global,
    pub catalog: Vec<Curve>,
}

impl Context {
    pub fn new(global: Global) -> Result<Self, CliError> {
        let catalog = match &global.catalog {
            Some(path) => load_catalog(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?,
            None => bundled_catalog(),
        };
        Ok(Context { global, catalog })
    }

    pub fn bound(&self, default: u64) -> u64 {
        self.global.bound.unwrap_or(default)
    }

    pub fn curve(&self, label: &str) -> Result<Curve, CliError> {
        find_curve(&self.catalog, label).ok_or_else(|| CliError::usage(format!("unknown curve label {label}")))
    }

    /// Symbol caches are keyed by label and precision so a precision change never reuses stale rows.
    fn symbol_cache(&self, label: &str) -> Option<PathBuf> {
        self.global.cache.as_ref().map(|d| d.join("symbols").join(format!("{label}-p{}.csv", self.global.precision)))
    }

    fn coeff_cache(&self) -> Option<PathBuf> {
        self.global.cache.as_ref().map(|d| d.join("an"))
    }

    pub fn engine(&self, label: &str) -> Result<ModularSymbols, CliError> {
        let curve = self.curve(label)?;
        let config = SymbolConfig { precision: self.global.precision, qmax: self.global.qmax, verify_extra: true };
        let table = match self.coeff_cache() {
            Some(dir) => CoeffTable::read_cache(&dir, label, 4096)?,
            None => None,
        };
        let ms = ModularSymbols::with_coefficients(curve, config, table)?;
        if let Some(path) = self.symbol_cache(label) {
            ms.load_cache(&path)?;
        }
        Ok(ms)
    }

    /// Write back whatever the engine computed.
    pub fn persist(&self, ms: &ModularSymbols) -> Result<(), CliError> {
        if let Some(path) = self.symbol_cache(&ms.curve().label) {
            ms.save_cache(&path)?;
        }
        if let Some(dir) = self.coeff_cache() {
            let table = ms.coefficients();
            let have = CoeffTable::read_cache(&dir, &table.label, table.n_max())?;
            if have.is_none() {
                table.write_cache(&dir)?;
            }
        }
        Ok(())
    }

    pub fn config_json(&self) -> Value {
        let g = &self.global;
        json!({
            "catalog": g.catalog.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "bundled".into()),
            "cache": g.cache.as_ref().map(|p| p.display().to_string()),
            "precision": g.precision,
            "qmax": g.qmax,
            "bound": g.bound,
            "seed": g.seed,
            "threads": g.threads,
        })
    }

    pub fn emit(&self, out: &Output) {
        let text = match self.global.format {
            Format::Json => {
                let doc = json!({
                    "version": env!("CARGO_PKG_VERSION"),
                    "config": self.config_json(),
                    "result": out.json,
                });
                format!("{}\n", serde_json::to_string_pretty(&doc).unwrap())
            }
            Format::Csv => format!(
                "# hpadic {} precision={} qmax={} seed={}\n{}",
                env!("CARGO_PKG_VERSION"),
                self.global.precision,
                self.global.qmax,
                self.global.seed,
                out.csv
            ),
            Format::Text => out.text.clone(),
        };
        print!("{text}");
    }
}
