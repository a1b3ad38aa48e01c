//! Configuration file handling and argument parsing helpers.
//!
//! Every command reads an optional JSON config file; command-line flags
//! override individual fields. Model specs accept short forms for the
//! built-in families so the common invocations fit on one line.

use anyhow::{bail, Context, Result};
use ladder_core::increments::{IncrementModel, ModelSpec};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Optional defaults loaded from `--config <file>`. Any field a command
/// does not use is simply ignored by that command.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<ModelSpec>,
    pub n: Option<u64>,
    pub n_grid: Option<Vec<u64>>,
    /// drift grid as decimal strings, parsed exactly
    pub a_grid: Option<Vec<String>>,
    pub v_grid: Option<Vec<f64>>,
    pub mult_grid: Option<Vec<f64>>,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub route: Option<String>,
    pub tilt: Option<bool>,
    pub moment: Option<u32>,
    pub cap: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

/// Parse a model argument:
///
/// * `pm1` — the symmetric ±1 walk
/// * `biased:<a>` — the ±1 walk with mean −a (decimal string)
/// * `gaussian:<a>` — unit-variance Gaussian steps with mean −a
/// * `@<path>` — a `ModelSpec` JSON file
/// * `{...}` — inline `ModelSpec` JSON
pub fn parse_model_spec(arg: &str) -> Result<ModelSpec> {
    if arg == "pm1" {
        return Ok(ModelSpec::BiasedPm1 { drift: "0".into() });
    }
    if let Some(a) = arg.strip_prefix("biased:") {
        return Ok(ModelSpec::BiasedPm1 { drift: a.into() });
    }
    if let Some(a) = arg.strip_prefix("gaussian:") {
        return Ok(ModelSpec::GaussianUnit {
            drift: a.parse().with_context(|| format!("gaussian drift {a:?}"))?,
        });
    }
    if let Some(path) = arg.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading model file {path}"))?;
        return serde_json::from_str(&text).with_context(|| format!("parsing model file {path}"));
    }
    if arg.trim_start().starts_with('{') {
        return serde_json::from_str(arg).context("parsing inline model JSON");
    }
    bail!("unrecognized model {arg:?}; expected pm1, biased:<a>, gaussian:<a>, @file, or JSON");
}

/// Flag value wins over the config file; a model must come from one of them.
pub fn resolve_spec(flag: Option<&str>, file: &FileConfig) -> Result<ModelSpec> {
    match (flag, &file.model) {
        (Some(arg), _) => parse_model_spec(arg),
        (None, Some(spec)) => Ok(spec.clone()),
        (None, None) => bail!("no model given; pass --model or put one in the config file"),
    }
}

pub fn resolve_model(flag: Option<&str>, file: &FileConfig) -> Result<IncrementModel> {
    Ok(IncrementModel::from_spec(resolve_spec(flag, file)?)?)
}

/// The same base family at a different drift, for scans over a.
pub fn respec_drift(spec: &ModelSpec, a: &str) -> Result<ModelSpec> {
    let mut out = spec.clone();
    match &mut out {
        ModelSpec::BiasedPm1 { drift } => *drift = a.into(),
        ModelSpec::Lattice { drift, .. } | ModelSpec::ParetoTail { drift, .. } => {
            *drift = Some(a.into())
        }
        ModelSpec::GaussianUnit { drift } => {
            *drift = a.parse().with_context(|| format!("gaussian drift {a:?}"))?
        }
    }
    Ok(out)
}

/// Integer grid: `"1,2,5"`, `"0:14"` (inclusive, step 1), `"0:100:5"`,
/// or `"250:4000:x2"` (geometric, factor after `x`).
pub fn parse_u64_grid(s: &str) -> Result<Vec<u64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [_] => s
            .split(',')
            .map(|t| t.trim().parse::<u64>().with_context(|| format!("grid entry {t:?}")))
            .collect::<Result<Vec<_>>>()?,
        [lo, hi] => range_grid(lo, hi, "1")?,
        [lo, hi, step] => range_grid(lo, hi, step)?,
        _ => bail!("bad grid {s:?}"),
    };
    if grid.is_empty() {
        bail!("grid {s:?} is empty");
    }
    Ok(grid)
}

fn range_grid(lo: &str, hi: &str, step: &str) -> Result<Vec<u64>> {
    let lo: u64 = lo.trim().parse().with_context(|| format!("grid bound {lo:?}"))?;
    let hi: u64 = hi.trim().parse().with_context(|| format!("grid bound {hi:?}"))?;
    let mut grid = Vec::new();
    if let Some(f) = step.trim().strip_prefix('x') {
        let f: u64 = f.parse().with_context(|| format!("grid factor {step:?}"))?;
        if f < 2 || lo == 0 {
            bail!("geometric grid needs factor ≥ 2 and a positive start");
        }
        let mut n = lo;
        while n <= hi {
            grid.push(n);
            n = n.saturating_mul(f);
        }
    } else {
        let step: u64 = step.trim().parse().with_context(|| format!("grid step {step:?}"))?;
        if step == 0 {
            bail!("grid step must be positive");
        }
        let mut n = lo;
        while n <= hi {
            grid.push(n);
            n = match n.checked_add(step) {
                Some(v) => v,
                None => break,
            };
        }
    }
    Ok(grid)
}

/// Comma-separated float grid.
pub fn parse_f64_grid(s: &str) -> Result<Vec<f64>> {
    let grid = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("grid entry {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() {
        bail!("grid {s:?} is empty");
    }
    Ok(grid)
}

/// Comma-separated drift grid, kept as decimal strings so lattice
/// drifts stay exact.
pub fn parse_a_grid(s: &str) -> Result<Vec<String>> {
    let grid: Vec<String> = s.split(',').map(|t| t.trim().to_string()).collect();
    if grid.iter().any(|t| t.is_empty()) || grid.is_empty() {
        bail!("bad drift grid {s:?}");
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!(parse_u64_grid("1,2,5").unwrap(), vec![1, 2, 5]);
        assert_eq!(parse_u64_grid("0:4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_u64_grid("0:10:5").unwrap(), vec![0, 5, 10]);
        assert_eq!(parse_u64_grid("250:1000:x2").unwrap(), vec![250, 500, 1000]);
        assert!(parse_u64_grid("5:1").unwrap_err().to_string().contains("empty"));
        assert!(parse_u64_grid("0:8:x2").is_err());
    }

    #[test]
    fn model_shorthands_parse() {
        assert!(matches!(
            parse_model_spec("pm1").unwrap(),
            ModelSpec::BiasedPm1 { .. }
        ));
        assert!(matches!(
            parse_model_spec("biased:0.125").unwrap(),
            ModelSpec::BiasedPm1 { .. }
        ));
        assert!(matches!(
            parse_model_spec("gaussian:0.25").unwrap(),
            ModelSpec::GaussianUnit { .. }
        ));
        assert!(parse_model_spec("nope").is_err());
        let inline = r#"{"kind":"biased_pm1","drift":"0.1"}"#;
        assert!(parse_model_spec(inline).is_ok());
    }

    #[test]
    fn drift_respec_covers_all_kinds() {
        let b = parse_model_spec("biased:0.5").unwrap();
        match respec_drift(&b, "0.25").unwrap() {
            ModelSpec::BiasedPm1 { drift } => assert_eq!(drift, "0.25"),
            _ => unreachable!(),
        }
        let g = parse_model_spec("gaussian:0.5").unwrap();
        match respec_drift(&g, "0.25").unwrap() {
            ModelSpec::GaussianUnit { drift } => assert_eq!(drift, 0.25),
            _ => unreachable!(),
        }
    }
}
