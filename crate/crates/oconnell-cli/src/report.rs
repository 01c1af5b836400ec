//! Report rows and the CSV/JSON emitters. The CSV column order is fixed
//! and floats carry 17 significant digits so reports are bit-stable.

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "method,N,a,t,h,value,error,warnings,seed,wall_time_ms";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportRow {
    pub method: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub a: f64,
    pub t: f64,
    pub h: f64,
    pub value: f64,
    pub error: f64,
    pub warnings: String,
    pub seed: u64,
    pub wall_time_ms: u64,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv(rows: &[ReportRow]) -> anyhow::Result<String> {
    if rows.is_empty() {
        anyhow::bail!("refusing to emit an empty report");
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        if r.warnings.contains(',') || r.method.contains(',') {
            anyhow::bail!("method/warnings fields must not contain commas");
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.method,
            r.n,
            fmt(r.a),
            fmt(r.t),
            fmt(r.h),
            fmt(r.value),
            fmt(r.error),
            r.warnings,
            r.seed,
            r.wall_time_ms
        ));
    }
    Ok(out)
}

pub fn to_json(rows: &[ReportRow]) -> anyhow::Result<String> {
    if rows.is_empty() {
        anyhow::bail!("refusing to emit an empty report");
    }
    Ok(serde_json::to_string_pretty(rows)? + "\n")
}
