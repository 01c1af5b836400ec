//! Run configuration: defaults, then the JSON config file, then CLI flags,
//! in increasing precedence. Every invalid field reports its name.

use std::path::PathBuf;

use oconnell::kernel::DriftSpec;
use oconnell::numkit::QuadConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub nu_hat: Option<Vec<f64>>,
    pub a: Option<f64>,
    pub t: Option<f64>,
    pub h: Option<serde_json::Value>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub gh_order: Option<usize>,
    pub gl_order: Option<usize>,
    pub format: Option<String>,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub drift: DriftSpec,
    pub t: f64,
    pub h_values: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub quad: QuadConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub timing: bool,
}

pub struct Overrides {
    pub nu_hat: Option<String>,
    pub a: Option<f64>,
    pub t: Option<f64>,
    pub h: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub gh_order: Option<usize>,
    pub gl_order: Option<usize>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub timing: bool,
}

fn parse_h_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    if let Ok(single) = spec.parse::<f64>() {
        return Ok(vec![single]);
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        anyhow::bail!("h must be a number or lo:hi:step, got {spec:?}");
    }
    let lo: f64 = parts[0].parse().map_err(|_| anyhow::anyhow!("h: bad lo in {spec:?}"))?;
    let hi: f64 = parts[1].parse().map_err(|_| anyhow::anyhow!("h: bad hi in {spec:?}"))?;
    let step: f64 = parts[2].parse().map_err(|_| anyhow::anyhow!("h: bad step in {spec:?}"))?;
    if step <= 0.0 || hi < lo {
        anyhow::bail!("h grid needs step > 0 and hi >= lo, got {spec:?}");
    }
    let mut values = Vec::new();
    let mut v = lo;
    while v <= hi + step * 1e-9 {
        values.push(v);
        v += step;
    }
    Ok(values)
}

pub fn resolve(file: Option<FileConfig>, cli: Overrides) -> anyhow::Result<Resolved> {
    let file = file.unwrap_or_default();
    let nu_hat: Vec<f64> = match &cli.nu_hat {
        Some(s) => s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow::anyhow!("nu-hat: {p:?} is not a number"))
            })
            .collect::<anyhow::Result<_>>()?,
        None => file.nu_hat.clone().unwrap_or_else(|| vec![-0.5, 0.5]),
    };
    let a = cli.a.or(file.a).unwrap_or(0.5);
    let drift = DriftSpec::new(nu_hat, a).map_err(|e| anyhow::anyhow!("nu-hat/a: {e}"))?;
    let t = cli.t.or(file.t).unwrap_or(1.0);
    if t <= 0.0 || !t.is_finite() {
        anyhow::bail!("t must be positive, got {t}");
    }
    let h_values = match &cli.h {
        Some(s) => parse_h_grid(s)?,
        None => match &file.h {
            Some(serde_json::Value::Number(n)) => {
                vec![n.as_f64().ok_or_else(|| anyhow::anyhow!("h: bad number"))?]
            }
            Some(serde_json::Value::String(s)) => parse_h_grid(s)?,
            Some(other) => anyhow::bail!("h: expected a number or \"lo:hi:step\", got {other}"),
            None => vec![0.0],
        },
    };
    let samples = cli.samples.or(file.samples).unwrap_or(100_000);
    let seed = cli.seed.or(file.seed).unwrap_or(42);
    let mut quad = QuadConfig::default();
    if let Some(gh) = cli.gh_order.or(file.gh_order) {
        quad.gh_order = gh;
    }
    if let Some(gl) = cli.gl_order.or(file.gl_order) {
        quad.gl_order = gl;
    }
    quad.validate().map_err(|e| anyhow::anyhow!("gh-order/gl-order: {e}"))?;
    let format = match cli
        .format
        .or(file.format)
        .unwrap_or_else(|| "csv".into())
        .as_str()
    {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => anyhow::bail!("format must be csv or json, got {other:?}"),
    };
    let out = cli.out.or_else(|| file.out.map(PathBuf::from));
    Ok(Resolved {
        drift,
        t,
        h_values,
        samples,
        seed,
        quad,
        format,
        out,
        timing: cli.timing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare() -> Overrides {
        Overrides {
            nu_hat: None,
            a: None,
            t: None,
            h: None,
            samples: None,
            seed: None,
            gh_order: None,
            gl_order: None,
            format: None,
            out: None,
            timing: false,
        }
    }

    #[test]
    fn defaults_resolve_to_the_canonical_configuration() {
        let r = resolve(None, bare()).unwrap();
        assert_eq!(r.drift.nu_hat(), &[-0.5, 0.5]);
        assert_eq!(r.drift.a(), 0.5);
        assert_eq!(r.t, 1.0);
        assert_eq!(r.h_values, vec![0.0]);
    }

    #[test]
    fn h_grid_parses_inclusive() {
        assert_eq!(parse_h_grid("-2:2:0.5").unwrap().len(), 9);
        assert_eq!(parse_h_grid("1.5").unwrap(), vec![1.5]);
        assert!(parse_h_grid("2:1:0.5").is_err());
        assert!(parse_h_grid("a:b:c").is_err());
    }

    #[test]
    fn cli_overrides_file() {
        let file = FileConfig {
            a: Some(0.4),
            t: Some(2.0),
            ..Default::default()
        };
        let mut cli = bare();
        cli.a = Some(0.25);
        let r = resolve(Some(file), cli).unwrap();
        assert_eq!(r.drift.a(), 0.25);
        assert_eq!(r.t, 2.0);
    }

    #[test]
    fn invalid_fields_name_themselves() {
        let mut cli = bare();
        cli.nu_hat = Some("0.1,oops".into());
        let err = resolve(None, cli).unwrap_err().to_string();
        assert!(err.contains("nu-hat"), "{err}");
    }
}
