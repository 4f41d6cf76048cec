//! Run configuration files and the kernel specification grammar.
//!
//! A config is a JSON object:
//!
//! ```json
//! {"case": "case1", "nu": 100, "kernel": "geometric:0.25", "T": 1000,
//!  "p": 10, "n_experiments": 1000, "seed": 42}
//! ```
//!
//! Optional keys: `case`, `p` (default 10), `n_experiments` (default 1000),
//! `cap_negatives` (default true), `components` (default `[0, 1, 2]`,
//! clipped to `p + 1`). Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use inar_core::estimate::DEFAULT_LAG_ORDER;
use inar_core::model::{params_from_spec, ModelParams};
use inar_core::montecarlo::McConfig;
use inar_core::Error;

use crate::error::{CliError, CliResult};

const DEFAULT_EXPERIMENTS: usize = 1000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    case: Option<String>,
    nu: f64,
    kernel: String,
    #[serde(rename = "T")]
    len: usize,
    p: Option<usize>,
    n_experiments: Option<usize>,
    seed: u64,
    cap_negatives: Option<bool>,
    components: Option<Vec<usize>>,
}

/// Validated configuration. Serialises to the canonical form that is hashed
/// into the config digest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub case: Option<String>,
    pub nu: f64,
    pub kernel: String,
    #[serde(rename = "T")]
    pub len: usize,
    pub p: usize,
    pub n_experiments: usize,
    pub seed: u64,
    pub cap_negatives: bool,
    pub components: Vec<usize>,
    #[serde(skip)]
    pub params: ModelParams,
}

impl RunConfig {
    pub fn mc_config(&self) -> McConfig {
        McConfig {
            params: self.params.clone(),
            len: self.len,
            p: self.p,
            n_experiments: self.n_experiments,
            base_seed: self.seed,
            cap_negatives: self.cap_negatives,
        }
    }

    pub fn digest(&self) -> String {
        digest_json(self)
    }
}

/// First 16 hex digits of the SHA-256 of the compact JSON form of `value`.
pub fn digest_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serialises");
    Sha256::digest(&bytes)[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;

    let params = build_params(raw.nu, &raw.kernel)?;
    if raw.len < 2 {
        return Err(CliError::validation("T", "must be at least 2"));
    }
    let p = raw.p.unwrap_or(DEFAULT_LAG_ORDER);
    if p > raw.len - 1 {
        return Err(CliError::validation(
            "p",
            format!("must not exceed T - 1 = {}", raw.len - 1),
        ));
    }
    let n_experiments = raw.n_experiments.unwrap_or(DEFAULT_EXPERIMENTS);
    if n_experiments == 0 {
        return Err(CliError::validation("n_experiments", "must be at least 1"));
    }
    let components = match raw.components {
        Some(list) => {
            if let Some(bad) = list.iter().find(|&&c| c > p) {
                return Err(CliError::validation(
                    "components",
                    format!("index {bad} exceeds p = {p}"),
                ));
            }
            list
        }
        None => (0..=p.min(2)).collect(),
    };

    Ok(RunConfig {
        case: raw.case,
        nu: raw.nu,
        kernel: raw.kernel,
        len: raw.len,
        p,
        n_experiments,
        seed: raw.seed,
        cap_negatives: raw.cap_negatives.unwrap_or(true),
        components,
        params,
    })
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(idx) => message[..idx].to_string(),
        None => message.to_string(),
    }
}

/// Model parameters from `nu` and a kernel specification (`none`,
/// `geometric:<ratio>`, `lags:[a1, a2, ...]`).
pub fn build_params(nu: f64, kernel: &str) -> CliResult<ModelParams> {
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(CliError::validation(
            "nu",
            format!("must be finite and nonnegative, got {nu}"),
        ));
    }
    params_from_spec(nu, kernel).map_err(|e| match e {
        Error::InvalidParameter { field, reason } => CliError::validation(field, reason),
        Error::NonStationaryKernel { l1_norm } => {
            CliError::validation("kernel", format!("l1 norm {l1_norm} is not below 1"))
        }
        other => other.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE1: &str = r#"{"nu": 100, "kernel": "geometric:0.25", "T": 1000, "p": 10, "n_experiments": 1000, "seed": 42}"#;

    #[test]
    fn minimal_case1() {
        let cfg = parse_config(CASE1).unwrap();
        assert_eq!(cfg.len, 1000);
        assert_eq!(cfg.p, 10);
        assert_eq!(cfg.params.kernel.len(), 19);
        assert!(cfg.cap_negatives);
        assert_eq!(cfg.components, vec![0, 1, 2]);
    }

    #[test]
    fn negative_nu_names_field() {
        let err = parse_config(&CASE1.replace("\"nu\": 100", "\"nu\": -1")).unwrap_err();
        assert_eq!(err.kind(), "ValidationError");
        assert!(err.to_string().contains("`nu`"));
    }

    #[test]
    fn unknown_key_names_key() {
        let err =
            parse_config(&CASE1.replace("\"seed\": 42", "\"seed\": 42, \"alpha_decay\": 0.3"))
                .unwrap_err();
        assert_eq!(err.kind(), "ParseError");
        assert!(err.to_string().contains("alpha_decay"));
        assert!(err.to_string().starts_with("line 1, column"));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_config("{\n  \"nu\": 100,\n  \"kernel\": }").unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kernel_errors_name_kernel() {
        for bad in [
            "geometric:1",
            "geometric:x",
            "lags:0.8",
            "exp:0.2",
            "lags:[0.9, 0.2]",
        ] {
            let err = build_params(1.0, bad).unwrap_err();
            assert_eq!(err.kind(), "ValidationError", "{bad}");
            assert!(err.to_string().starts_with("`kernel`"), "{bad}");
        }
    }

    #[test]
    fn nonstationary_and_negative_kernels_rejected() {
        assert!(build_params(1.0, "lags:[0.6, 0.5]").is_err());
        assert!(build_params(1.0, "lags:[0.6, -0.1]").is_err());
        assert!(build_params(0.0, "none").is_ok());
    }

    #[test]
    fn lag_order_and_components_checked() {
        let err = parse_config(&CASE1.replace("\"T\": 1000", "\"T\": 5")).unwrap_err();
        assert!(err.to_string().contains("`p`"));
        let err =
            parse_config(&CASE1.replace("\"seed\": 42", "\"seed\": 42, \"components\": [11]"))
                .unwrap_err();
        assert!(err.to_string().contains("`components`"));
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = parse_config(CASE1).unwrap();
        let b = parse_config(&CASE1.replace(", ", ",\n  ")).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = parse_config(&CASE1.replace("\"seed\": 42", "\"seed\": 43")).unwrap();
        assert_ne!(a.digest(), c.digest());
    }
}
