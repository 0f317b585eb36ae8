use std::path::Path;

use mpsup::io::{load_msv, read_mps};
use mpsup::mps::StateVector;
use mpsup::permlab::{certify_mps_up, permutation_family, CertReport};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::failure::Failure;

/// Loads a `.msv` state vector or materializes an MPS JSON file.
pub fn load_state(path: &Path, n: Option<usize>, cfg: &RunConfig) -> Result<StateVector, Failure> {
    let psi = if path.extension().is_some_and(|e| e == "msv") {
        load_msv(path, cfg.amp_cap)?
    } else {
        read_mps(path)?.materialize(n, cfg.amp_cap)?
    };
    Ok(if cfg.normalized { psi.normalized() } else { psi })
}

#[derive(Clone, Debug)]
pub struct Certification {
    pub report: CertReport,
    pub eps: f64,
    pub pass: bool,
}

pub fn certify(psi: &StateVector, bond: usize, eps: f64, cfg: &RunConfig) -> Result<Certification, Failure> {
    if bond == 0 {
        return Err(Failure::Input("--bond must be at least 1".into()));
    }
    if !(eps >= 0.0) {
        return Err(Failure::Input(format!("--eps must be non-negative, got {eps}")));
    }
    let perms = permutation_family(psi.n(), cfg.perm_samples, cfg.seed)?;
    let report = certify_mps_up(psi, bond, &perms, cfg.tol_rank)?;
    let pass = report.pass(eps);
    Ok(Certification { report, eps, pass })
}

impl Certification {
    pub fn to_json(&self, cfg: &RunConfig) -> Value {
        let worst = &self.report.permutations[self.report.worst];
        json!({
            "command": "certify",
            "config": cfg.echo(),
            "bond": self.report.bond,
            "eps": self.eps,
            "eps_star": self.report.eps_star,
            "pass": self.pass,
            "permutations_checked": self.report.permutations.len(),
            "worst": {
                "order": worst.order,
                "eps": worst.eps,
                "worst_cut": worst.worst_cut,
            },
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,eps,worst_cut\n");
        for p in &self.report.permutations {
            let order: Vec<String> = p.order.iter().map(|k| k.to_string()).collect();
            out.push_str(&format!("{},{:e},{}\n", order.join(" "), p.eps, p.worst_cut));
        }
        out
    }
}
