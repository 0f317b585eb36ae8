use mpsup::gallery::{dicke_mps, ghz, weight_mps, WeightStateSpec};
use mpsup::io::MpsFile;
use mpsup::mps::{unit_radius, SiteTensor, TiMps};
use mpsup::numkernel::{c, CMat};
use mpsup::random::{random_tensor, seeded};

use crate::config::RunConfig;
use crate::failure::Failure;

pub const KINDS: [&str; 6] = ["ghz", "w", "dicke", "weight", "random", "neel"];

#[derive(Clone, Debug, Default)]
pub struct GenParams {
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub bond: Option<usize>,
    pub k: Option<usize>,
    pub a: Option<usize>,
    pub delta: Option<usize>,
}

fn need(v: Option<usize>, flag: &str, kind: &str) -> Result<usize, Failure> {
    v.ok_or_else(|| Failure::Input(format!("'{kind}' needs --{flag}")))
}

/// `A^0 = |0><1|`, `A^1 = |1><0|`: the period-two Néel tensor.
pub fn neel_tensor() -> SiteTensor {
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    SiteTensor::new(vec![
        CMat::from_row_slice(2, 2, &[zero, one, zero, zero]),
        CMat::from_row_slice(2, 2, &[zero, zero, one, zero]),
    ])
    .expect("2x2 matrices")
}

pub fn generate(kind: &str, p: &GenParams, cfg: &RunConfig) -> Result<MpsFile, Failure> {
    Ok(match kind {
        "ghz" => {
            let n = need(p.n, "n", kind)?;
            let (_, mps) = ghz(p.d.unwrap_or(2), n, cfg.amp_cap)?;
            MpsFile::Ti { mps, n: Some(n) }
        }
        "w" => {
            let n = need(p.n, "n", kind)?;
            MpsFile::Chain {
                chain: dicke_mps(1, n)?,
                n: Some(n),
            }
        }
        "dicke" => {
            let n = need(p.n, "n", kind)?;
            MpsFile::Chain {
                chain: dicke_mps(need(p.k, "k", kind)?, n)?,
                n: Some(n),
            }
        }
        "weight" => {
            let n = need(p.n, "n", kind)?;
            let a = need(p.a, "a", kind)?;
            let spec = WeightStateSpec::new(a, p.delta.unwrap_or(a), n)?;
            MpsFile::Chain {
                chain: weight_mps(spec)?,
                n: Some(n),
            }
        }
        "random" => {
            let d = p.d.unwrap_or(2);
            let bond = p.bond.unwrap_or(2);
            let a = unit_radius(&random_tensor(&mut seeded(cfg.seed), d, bond, bond))?;
            MpsFile::Ti {
                mps: TiMps::new(a)?,
                n: p.n,
            }
        }
        "neel" => MpsFile::Ti {
            mps: TiMps::new(neel_tensor())?,
            n: p.n,
        },
        other => {
            return Err(Failure::Input(format!(
                "unknown generator '{other}'; valid kinds: {}",
                KINDS.join(", ")
            )))
        }
    })
}
