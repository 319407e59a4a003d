use serde_json::Value;

/// One report in all three renderings.
pub struct Output {
    pub json: Value,
    pub csv: String,
    pub text: String,
}

/// Builds csv rows from any displayable cells.
pub fn csv_row<I, T>(cells: I) -> String
where
    I: IntoIterator<Item = T>,
    T: std::fmt::Display,
{
    let cells: Vec<String> = cells.into_iter().map(|c| quote(&c.to_string())).collect();
    format!("{}\n", cells.join(","))
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn list(v: &[u64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}
