//! CSV output with `#`-prefixed metadata lines.

use sha2::{Digest, Sha256};

use crate::real::Real;
use crate::sampler::SampleSet;

/// Ordered `key: value` metadata; always starts with the crate version.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Metadata { entries: vec![("version".into(), crate::VERSION.into())] }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// One `# key: value` line per entry.
    pub fn header(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("# {k}: {}\n", v.replace('\n', " "))).collect()
    }
}

/// First 16 hex digits of the SHA-256 of the compact JSON of `value`.
pub fn config_hash(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))[..16].to_string()
}

/// Metadata header followed by `body` (which carries its own column line).
pub fn csv(meta: &Metadata, body: &str) -> String {
    let mut s = meta.header();
    s.push_str(body);
    s
}

/// Rows `q,p,value` for a `d = 1` grid.
pub fn grid_csv_body(column: &str, rows: &[(f64, f64, f64)]) -> String {
    let mut s = format!("q,p,{column}\n");
    for (q, p, v) in rows {
        s.push_str(&format!("{q},{p},{v:e}\n"));
    }
    s
}

/// Columns `q_1..q_d,p_1..p_d`, one row per sample.
pub fn samples_csv_body<T: Real>(samples: &SampleSet<T>) -> String {
    let d = samples.dim;
    let names: Vec<String> = (1..=d).map(|i| format!("q_{i}")).chain((1..=d).map(|i| format!("p_{i}"))).collect();
    let mut s = names.join(",");
    s.push('\n');
    for z in samples.iter() {
        let row: Vec<String> = z.iter().map(|v| format!("{:e}", v.f64())).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Parses CSV text written by this module into its metadata and data rows,
/// skipping the column line.
pub fn read_csv(text: &str) -> (Vec<(String, String)>, Vec<Vec<f64>>) {
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else if !seen_columns {
            seen_columns = true;
        } else if !line.is_empty() {
            rows.push(line.split(',').map(|c| c.trim_matches('"').parse().unwrap_or(f64::NAN)).collect());
        }
    }
    (meta, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let meta = Metadata::new().with("seed", 7).with("eps", 0.05);
        let text = csv(&meta, &grid_csv_body("value", &[(0.0, 1.0, -2.5), (0.5, 1.0, 3e-12)]));
        assert!(text.starts_with("# version: "));
        let (m, rows) = read_csv(&text);
        assert_eq!(m[1], ("seed".into(), "7".into()));
        assert_eq!(rows, vec![vec![0.0, 1.0, -2.5], vec![0.5, 1.0, 3e-12]]);
    }

    #[test]
    fn hash_is_stable() {
        let v = serde_json::json!({ "a": 1, "b": [1, 2] });
        assert_eq!(config_hash(&v), config_hash(&v.clone()));
        assert_eq!(config_hash(&v).len(), 16);
    }
}
