use std::path::PathBuf;

use mpsup::mps::DEFAULT_AMP_CAP;
use mpsup::numkernel::DEFAULT_RANK_TOL;
use mpsup::structure::StructureConfig;
use serde::Serialize;
use serde_json::{json, Value};

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub tol_rank: f64,
    pub amp_cap: usize,
    pub perm_samples: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub normalized: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tol_rank: DEFAULT_RANK_TOL,
            amp_cap: DEFAULT_AMP_CAP,
            perm_samples: 50,
            format: OutputFormat::Json,
            out: None,
            normalized: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        if !(self.tol_rank > 0.0) || !self.tol_rank.is_finite() {
            return Err(Failure::Input(format!("--tol-rank must be positive, got {}", self.tol_rank)));
        }
        if self.amp_cap == 0 {
            return Err(Failure::Input("--amp-cap must be at least 1".into()));
        }
        Ok(())
    }

    pub fn structure(&self) -> StructureConfig {
        StructureConfig {
            tol_rank: self.tol_rank,
            seed: self.seed,
            amp_cap: self.amp_cap,
            ..StructureConfig::default()
        }
    }

    /// Settings that influence results, echoed into every JSON output.
    pub fn echo(&self) -> Value {
        json!({
            "seed": self.seed,
            "tol_rank": self.tol_rank,
            "amp_cap": self.amp_cap,
            "perm_samples": self.perm_samples,
            "normalized": self.normalized,
        })
    }
}
