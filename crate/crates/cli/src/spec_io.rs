//! Urn spec files: a JSON document with the capacity, the default initial
//! average, and one curve per increment.
//!
//! ```json
//! {
//!   "K": 2,
//!   "psi_init": 1.0,
//!   "pi": [
//!     { "kind": "poly", "coeffs": [0.2, 0.05] },
//!     { "kind": "pwl",  "knots": [[0.0, 0.4], [2.0, 0.25]] }
//!   ]
//! }
//! ```
//!
//! The `pi` list is indexed `k = 1..K`; `π₀` is always the derived
//! complement. `psi_init` defaults to `K/2` when omitted.

use std::path::Path;

use serde::{Deserialize, Serialize};
use urn_ldp::{UrnCurve, UrnSpec};

use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct SpecFile {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default)]
    pub psi_init: Option<f64>,
    pub pi: Vec<CurveSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveSpec {
    Poly { coeffs: Vec<f64> },
    Pwl { knots: Vec<(f64, f64)> },
}

impl From<&CurveSpec> for UrnCurve {
    fn from(c: &CurveSpec) -> UrnCurve {
        match c {
            CurveSpec::Poly { coeffs } => UrnCurve::Poly { coeffs: coeffs.clone() },
            CurveSpec::Pwl { knots } => UrnCurve::Pwl { knots: knots.clone() },
        }
    }
}

/// A parsed spec plus the simulation default for the initial average.
pub struct LoadedSpec {
    pub spec: UrnSpec,
    pub psi_init: f64,
}

pub fn parse_spec(text: &str) -> Result<LoadedSpec, CliError> {
    let file: SpecFile =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("spec file: {e}")))?;
    let components: Vec<UrnCurve> = file.pi.iter().map(UrnCurve::from).collect();
    let spec = UrnSpec::new(file.k, components)
        .map_err(|e| CliError::Config(format!("spec file: {e}")))?;
    let psi_init = file.psi_init.unwrap_or(file.k as f64 / 2.0);
    if !(0.0..=file.k as f64).contains(&psi_init) {
        return Err(CliError::Config(format!(
            "psi_init = {psi_init} outside [0, {}]",
            file.k
        )));
    }
    Ok(LoadedSpec { spec, psi_init })
}

pub fn load_spec(path: &Path) -> Result<LoadedSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_spec(&text)
}
