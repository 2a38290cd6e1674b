//! JSON experiment configuration.
//!
//! An experiment file is a single JSON object:
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "setA": { "type": "finite", "points": [[-3.0], [2.0]] },
//!   "setB": { "type": "finite", "points": [[-3.0], [6.0]] },
//!   "lambda": { "type": "constant", "value": 0.5 },
//!   "mu": { "type": "constant", "value": 0.5 },
//!   "start": [0.0],
//!   "tie_policy": "lex_min",
//!   "max_iter": 100000,
//!   "gap_tol": 1e-10,
//!   "record_every": 1,
//!   "seed": 0
//! }
//! ```
//!
//! `tie_policy`, `max_iter`, `gap_tol`, `record_every`, and `seed` are
//! optional and default to the values shown. Schema violations are reported
//! with a JSON-pointer path to the offending field; semantic violations
//! (dimension mismatches, invalid schedule parameters, …) reuse the same
//! error shape with the pointer of the field that failed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ClosedSet, Point, TiePolicy};
use crate::schedules::Schedule;
use crate::solver::MarpConfig;

/// Environment variable that overrides the config file's `seed`.
pub const SEED_ENV_VAR: &str = "MARP_SEED";

/// Default iteration cap.
pub const DEFAULT_MAX_ITER: u64 = 100_000;
/// Default relative gap tolerance.
pub const DEFAULT_GAP_TOL: f64 = 1e-10;
/// Default trajectory recording stride.
pub const DEFAULT_RECORD_EVERY: u64 = 1;
/// Default seed for sampled cone/regularity queries driven by a config.
pub const DEFAULT_SEED: u64 = 0;

fn default_max_iter() -> u64 {
    DEFAULT_MAX_ITER
}

fn default_gap_tol() -> f64 {
    DEFAULT_GAP_TOL
}

fn default_record_every() -> u64 {
    DEFAULT_RECORD_EVERY
}

/// One experiment: the two sets, the relaxation schedules, the start point,
/// and run controls. See the module docs for the JSON layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Ambient dimension; every set and the start point must live in it.
    pub dimension: usize,
    #[serde(rename = "setA")]
    pub set_a: ClosedSet,
    #[serde(rename = "setB")]
    pub set_b: ClosedSet,
    pub lambda: Schedule,
    pub mu: Schedule,
    /// Starting point `y₋₁`.
    pub start: Point,
    #[serde(default)]
    pub tie_policy: TiePolicy,
    #[serde(default = "default_max_iter")]
    pub max_iter: u64,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Seed for sampled cone/regularity queries; the solver itself is
    /// deterministic and ignores it. Overridden by the `MARP_SEED` env var.
    #[serde(default)]
    pub seed: u64,
}

/// Escape one JSON-pointer reference token (RFC 6901: `~` → `~0`, `/` → `~1`).
fn escape_token(tok: &str) -> String {
    tok.replace('~', "~0").replace('/', "~1")
}

/// Convert a `serde_path_to_error` path into a JSON pointer. The root path
/// maps to `/` so every reported location is non-empty.
fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&escape_token(key));
            }
            Segment::Seq { index } => {
                out.push('/');
                out.push_str(&index.to_string());
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(&escape_token(variant));
            }
            Segment::Unknown => {
                out.push_str("/?");
            }
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

impl ExperimentConfig {
    /// Parse and validate a JSON experiment document. Schema errors carry a
    /// JSON-pointer path; semantic errors point at the offending field.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| Error::config(json_pointer(e.path()), e.inner().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read and parse a config file.
    pub fn load(path: &std::path::Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::parse(&text)
    }

    /// Semantic validation beyond the JSON schema.
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::config("/dimension", "dimension must be at least 1"));
        }
        self.set_a
            .validate()
            .map_err(|e| Error::config("/setA", e.to_string()))?;
        self.set_b
            .validate()
            .map_err(|e| Error::config("/setB", e.to_string()))?;
        if self.set_a.dimension() != self.dimension {
            return Err(Error::config(
                "/setA",
                format!(
                    "set lives in dimension {}, config declares {}",
                    self.set_a.dimension(),
                    self.dimension
                ),
            ));
        }
        if self.set_b.dimension() != self.dimension {
            return Err(Error::config(
                "/setB",
                format!(
                    "set lives in dimension {}, config declares {}",
                    self.set_b.dimension(),
                    self.dimension
                ),
            ));
        }
        self.lambda
            .validate()
            .map_err(|e| Error::config("/lambda", e.to_string()))?;
        self.mu
            .validate()
            .map_err(|e| Error::config("/mu", e.to_string()))?;
        if self.start.len() != self.dimension {
            return Err(Error::config(
                "/start",
                format!(
                    "start has {} coordinates, config declares dimension {}",
                    self.start.len(),
                    self.dimension
                ),
            ));
        }
        if self.start.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("/start", "start must be finite"));
        }
        if self.tie_policy == TiePolicy::All {
            return Err(Error::config(
                "/tie_policy",
                "tie policy 'all' enumerates nearest points and cannot select a unique one; \
                 use lex_min or nearest_to_previous",
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::config("/max_iter", "max_iter must be at least 1"));
        }
        if !(self.gap_tol.is_finite() && self.gap_tol > 0.0) {
            return Err(Error::config("/gap_tol", "gap_tol must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::config(
                "/record_every",
                "record_every must be at least 1",
            ));
        }
        Ok(())
    }

    /// The seed to use, honoring the `MARP_SEED` environment override.
    pub fn effective_seed(&self) -> Result<u64> {
        match std::env::var(SEED_ENV_VAR) {
            Ok(v) => v.trim().parse::<u64>().map_err(|_| {
                Error::config(
                    "/seed",
                    format!("{SEED_ENV_VAR} must be a non-negative integer, got {v:?}"),
                )
            }),
            Err(_) => Ok(self.seed),
        }
    }

    /// Build the solver configuration (validates first).
    pub fn to_marp_config(&self) -> Result<MarpConfig> {
        self.validate()?;
        let mut cfg = MarpConfig::new(
            self.set_a.clone(),
            self.set_b.clone(),
            self.lambda.clone(),
            self.mu.clone(),
            self.start.clone(),
        );
        cfg.tie_policy = self.tie_policy;
        cfg.max_iter = self.max_iter;
        cfg.gap_tol = self.gap_tol;
        cfg.record_every = self.record_every;
        Ok(cfg)
    }

    /// Pretty-printed JSON with fields in declaration order (deterministic).
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }
}
