//! Output rendering shared by the subcommands.

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// One `key: value` line of the text report.
pub struct Row {
    key: String,
    value: String,
}

impl Row {
    pub fn num(key: &str, value: f64) -> Self {
        let a = value.abs();
        let value = if a != 0.0 && a.is_finite() && !(1e-4..1e12).contains(&a) {
            format!("{value:e}")
        } else {
            value.to_string()
        };
        Self {
            key: key.to_string(),
            value,
        }
    }

    pub fn text(key: &str, value: String) -> Self {
        Self {
            key: key.to_string(),
            value,
        }
    }
}

pub struct Report {
    json: Value,
    rows: Vec<Row>,
    csv: Option<String>,
    pub warnings: Vec<String>,
    pub failed: bool,
}

pub fn csv_table<T: Serialize>(rows: &[T]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

impl Report {
    pub fn new(json: Value, rows: Vec<Row>) -> Self {
        Self {
            json,
            rows,
            csv: None,
            warnings: Vec::new(),
            failed: false,
        }
    }

    pub fn with_table<T: Serialize>(mut self, table: Vec<T>) -> Self {
        self.csv = csv_table(&table).ok();
        self
    }

    pub fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }

    pub fn with_warning(mut self, w: String) -> Self {
        self.warnings.push(w);
        self
    }

    pub fn failed_if(mut self, failed: bool) -> Self {
        self.failed |= failed;
        self
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, String> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.json).map_err(|e| e.to_string())?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => match &self.csv {
                Some(csv) => Ok(csv.clone().into_bytes()),
                None => {
                    #[derive(Serialize)]
                    struct Pair<'a> {
                        quantity: &'a str,
                        value: &'a str,
                    }
                    let pairs: Vec<Pair> = self
                        .rows
                        .iter()
                        .map(|r| Pair {
                            quantity: &r.key,
                            value: &r.value,
                        })
                        .collect();
                    csv_table(&pairs).map(String::into_bytes)
                }
            },
            Format::Text => {
                let width = self.rows.iter().map(|r| r.key.chars().count()).max().unwrap_or(0);
                let mut out = String::new();
                for r in &self.rows {
                    out.push_str(&format!("{:<width$}  {}\n", r.key, r.value));
                }
                Ok(out.into_bytes())
            }
        }
    }
}
