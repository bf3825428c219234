//! Building blocks of the `emf-sg` command-line tool: threshold grids, the
//! fixed-precision CSV dialect and the run manifest that every output file
//! points to by hash.
//!
//! ```
//! use emf_sg::cli::{format_float, parse_grid};
//!
//! assert_eq!(parse_grid("-10:1:20").unwrap().len(), 31);
//! assert_eq!(parse_grid("-50").unwrap(), vec![-50.0]);
//! assert_eq!(format_float(0.1), "1.00000000e-1");
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analytic::AnalyticOptions;
use crate::error::{Error, Result};
use crate::simulate::McOptions;
use crate::units::NetworkParams;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parse `start:step:stop` (inclusive, up to rounding) or a single number.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Config(format!("bad grid `{text}`: {why}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad("expected numbers")))
        .collect::<Result<_>>()?;
    if parts.iter().any(|x| !x.is_finite()) {
        return Err(bad("values must be finite"));
    }
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, step, stop] => {
            if !(step > 0.0) {
                return Err(bad("step must be positive"));
            }
            if stop < start {
                return Err(bad("grid is empty (stop < start)"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if n > 1_000_000 {
                return Err(bad("more than 10^6 points"));
            }
            Ok((0..n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad("expected start:step:stop or a single value")),
    }
}

/// Nine significant digits in scientific notation; NaN and infinities print empty.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        String::new()
    }
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, format_float)
}

/// What a run did, in enough detail to repeat it. The hash covers every
/// field except the wall time, so identical runs share a hash.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: Option<String>,
    /// Command arguments with thresholds converted to linear units.
    pub arguments: BTreeMap<String, String>,
    pub network: NetworkParams,
    pub quadrature: AnalyticOptions,
    pub mc: McOptions,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<String>, network: NetworkParams, quadrature: AnalyticOptions, mc: McOptions) -> Self {
        Self {
            tool: "emf-sg".into(),
            version: VERSION.into(),
            command: command.into(),
            config_path,
            arguments: BTreeMap::new(),
            network,
            quadrature,
            seed: mc.seed,
            mc,
            wall_time_s: None,
        }
    }

    pub fn arg(&mut self, key: &str, value: impl ToString) {
        self.arguments.insert(key.into(), value.to_string());
    }

    pub fn arg_list(&mut self, key: &str, values: &[f64]) {
        let joined = values.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(" ");
        self.arguments.insert(key.into(), joined);
    }

    /// TOML rendering of the manifest.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize manifest: {e}")))
    }

    /// First 16 hex digits of the SHA-256 of the manifest without wall time.
    pub fn hash(&self) -> Result<String> {
        let mut timeless = self.clone();
        timeless.wall_time_s = None;
        let digest = Sha256::digest(timeless.to_toml()?.as_bytes());
        let mut out = String::with_capacity(16);
        for b in &digest[..8] {
            write!(out, "{b:02x}").expect("writing to a String cannot fail");
        }
        Ok(out)
    }

    /// First CSV line.
    pub fn csv_banner(&self) -> Result<String> {
        Ok(format!("# emf-sg v{VERSION} manifest={}", self.hash()?))
    }
}
