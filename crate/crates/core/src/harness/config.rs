//! `key = value` config files and the compact parameter string.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimators::DenoiserParams;

/// Parses `key = value` lines. Blank lines and `#` comments are ignored;
/// keys may be written with or without a leading `--`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", n + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

/// Applies `C=4,c=2,cprime=4,rho-min=8,T=3,strict-kappa=false` style
/// overrides to `base`.
pub fn parse_params(spec: &str, base: &DenoiserParams) -> Result<DenoiserParams> {
    let mut p = base.clone();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) =
            item.split_once('=').ok_or_else(|| Error::Config(format!("parameter {item:?} is not key=value")))?;
        let (k, v) = (k.trim(), v.trim());
        let num = || v.parse::<f64>().map_err(|_| Error::Config(format!("{k}: bad number {v:?}")));
        let int = || v.parse::<usize>().map_err(|_| Error::Config(format!("{k}: bad integer {v:?}")));
        match k {
            "C" => p.cost_ratio = num()?,
            "c" => p.confidence = num()?,
            "cprime" | "c'" => p.confidence_enlarged = num()?,
            "rho-min" | "rho_min" => p.min_retained = Some(int()?),
            "T" => p.iterations = int()?,
            "strict-kappa" => p.strict_kappa = v.parse().map_err(|_| Error::Config(format!("{k}: bad bool {v:?}")))?,
            other => return Err(Error::Config(format!("unknown parameter {other:?}"))),
        }
    }
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let c = parse_config("# comment\nm = 64\n--bits=2,3 # trailing\n\n").unwrap();
        assert_eq!(c["m"], "64");
        assert_eq!(c["bits"], "2,3");
        assert!(parse_config("novalue").is_err());
    }

    #[test]
    fn params_string() {
        let p = parse_params("C=4,c=2,cprime=4,rho-min=8,T=3", &DenoiserParams::default()).unwrap();
        assert_eq!(p.min_retained, Some(8));
        assert_eq!(p.iterations, 3);
        let p = parse_params("C=8, strict-kappa=true", &DenoiserParams::default()).unwrap();
        assert_eq!(p.cost_ratio, 8.0);
        assert!(p.strict_kappa);
        assert!(parse_params("x=1", &DenoiserParams::default()).is_err());
        assert!(parse_params("c=4,cprime=2", &DenoiserParams::default()).is_err());
    }
}
