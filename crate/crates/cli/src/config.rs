//! Flat `key = value` run configuration.
//!
//! ```text
//! # Poisson on the preset window
//! family = poisson
//! beta = 0.5 1.0 1.0
//! bounds = 0 15
//! grid_step = 0.01
//! ```
//!
//! Blank lines and text after `#` are ignored. Keys may use `-` or `_`.

use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every setting a run can take. `None` means "not given here"; layers are
/// merged with [`RunConfig::overlay`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub family: Option<String>,
    pub trials: Option<u32>,
    pub beta: Option<[f64; 3]>,
    pub row: Option<usize>,
    pub bounds: Option<[f64; 2]>,
    pub power: Option<f64>,
    pub sigma2: Option<f64>,
    pub transform: Option<String>,
    pub grid_step: Option<f64>,
    pub grid_fallback: Option<bool>,
    pub format: Option<String>,
    pub dilution: Option<Vec<f64>>,
    pub design: Option<[f64; 3]>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub n_per_point: Option<u32>,
    pub dispersion: Option<f64>,
    pub oracle: Option<String>,
    pub simulation: Option<bool>,
}

macro_rules! overlay_fields {
    ($self:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $self.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Values set in `top` win.
    pub fn overlay(mut self, top: &RunConfig) -> RunConfig {
        overlay_fields!(self, top; family, trials, beta, row, bounds, power, sigma2, transform, grid_step,
            grid_fallback, format, dilution, design, seed, replicates, n_per_point, dispersion, oracle, simulation);
        self
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        parse(&text).map_err(|(line, msg)| CliError::Config(format!("{}:{line}: {msg}", path.display())))
    }
}

fn one<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse '{v}' for {key}"))
}

fn many<T: FromStr, const N: usize>(key: &str, v: &str) -> Result<[T; N], String> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != N {
        return Err(format!("{key} takes {N} values, got {}", parts.len()));
    }
    let vals = parts.iter().map(|p| one(key, p)).collect::<Result<Vec<T>, _>>()?;
    vals.try_into().map_err(|_| unreachable!())
}

fn flag(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("{key} must be true or false, got '{v}'")),
    }
}

/// Parses config text; errors carry the 1-based line number.
pub fn parse(text: &str) -> Result<RunConfig, (usize, String)> {
    let mut c = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| (i + 1, m);
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        if v.is_empty() {
            return Err(err(format!("{key} has no value")));
        }
        let k = key.as_str();
        match k {
            "family" => c.family = Some(v.to_string()),
            "trials" => c.trials = Some(one(k, v).map_err(err)?),
            "beta" => c.beta = Some(many(k, v).map_err(err)?),
            "row" => c.row = Some(one(k, v).map_err(err)?),
            "bounds" => c.bounds = Some(many(k, v).map_err(err)?),
            "power" => c.power = Some(one(k, v).map_err(err)?),
            "sigma2" => c.sigma2 = Some(one(k, v).map_err(err)?),
            "transform" => c.transform = Some(v.to_string()),
            "grid_step" => c.grid_step = Some(one(k, v).map_err(err)?),
            "grid_fallback" => c.grid_fallback = Some(flag(k, v).map_err(err)?),
            "format" => c.format = Some(v.to_string()),
            "dilution" => {
                let d = v.split_whitespace().map(|p| one(k, p)).collect::<Result<Vec<f64>, _>>().map_err(err)?;
                c.dilution = Some(d);
            }
            "design" => c.design = Some(many(k, v).map_err(err)?),
            "seed" => c.seed = Some(one(k, v).map_err(err)?),
            "replicates" => c.replicates = Some(one(k, v).map_err(err)?),
            "n_per_point" => c.n_per_point = Some(one(k, v).map_err(err)?),
            "dispersion" => c.dispersion = Some(one(k, v).map_err(err)?),
            "oracle" => c.oracle = Some(v.to_string()),
            "simulation" => c.simulation = Some(flag(k, v).map_err(err)?),
            _ => return Err(err(format!("unknown key '{key}'"))),
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let c = parse("# header\nfamily = poisson  # trailing\n\nbeta = 0.5 1 1\nbounds=0 15\ngrid-step = 0.05\n").unwrap();
        assert_eq!(c.family.as_deref(), Some("poisson"));
        assert_eq!(c.beta, Some([0.5, 1.0, 1.0]));
        assert_eq!(c.bounds, Some([0.0, 15.0]));
        assert_eq!(c.grid_step, Some(0.05));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse("family = gamma\nbeta = 1 2\n").unwrap_err().0, 2);
        assert_eq!(parse("\n\nfmaily = gamma\n").unwrap_err().0, 3);
        assert_eq!(parse("seed = x\n").unwrap_err().0, 1);
        assert_eq!(parse("just words\n").unwrap_err().0, 1);
    }

    #[test]
    fn overlay_prefers_top() {
        let base = parse("family = gamma\nseed = 3\n").unwrap();
        let top = RunConfig { family: Some("poisson".into()), ..RunConfig::default() };
        let m = base.overlay(&top);
        assert_eq!(m.family.as_deref(), Some("poisson"));
        assert_eq!(m.seed, Some(3));
    }
}
