use mpsup::io::{canonical_form_json, MpsFile};
use mpsup::mps::{Boundary, TiMps};
use mpsup::numkernel::C64;
use mpsup::structure::{
    block_injectivity_length, block_projectors, canonical_form, detect_period, eta, injectivity_length, is_normal,
    product_from_canonical, ProductOutcome,
};
use mpsup::Error;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::failure::Failure;

fn pair(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Recovers a TI tensor from a file. Chains qualify when they close with a
/// trace and repeat one tensor.
pub fn ti_from_file(file: &MpsFile) -> Result<(TiMps, Option<usize>), Failure> {
    match file {
        MpsFile::Ti { mps, n } => Ok((mps.clone(), *n)),
        MpsFile::Chain { chain, n } => {
            let first = &chain.sites()[0];
            let uniform = chain.sites().iter().all(|s| s == first);
            if *chain.boundary() != Boundary::Trace || !uniform {
                return Err(Failure::Input(
                    "analyze needs a translation-invariant MPS (one tensor, trace boundary)".into(),
                ));
            }
            Ok((TiMps::new(first.clone())?, n.or(Some(chain.len()))))
        }
    }
}

/// Structural report of a TI MPS at length `n` (default: four periods).
pub fn analyze(file: &MpsFile, n: Option<usize>, cfg: &RunConfig) -> Result<Value, Failure> {
    let sc = cfg.structure();
    let (mps, stored_n) = ti_from_file(file)?;
    let a = mps.tensor();
    let normality = is_normal(a, &sc)?;
    let period = detect_period(a, &sc)?;
    let n = n.or(stored_n).unwrap_or(4 * period);
    if n == 0 || !n.is_multiple_of(period) {
        return Err(Failure::Input(format!("N = {n} is not a positive multiple of the period {period}")));
    }
    let cf = canonical_form(a, n, &sc)?;
    let active = cf.active(n)?;

    let mut blocks = Vec::with_capacity(cf.blocks.len());
    for (j, b) in cf.blocks.iter().enumerate() {
        let e = eta(&b.tensor, &sc)?;
        blocks.push(json!({
            "index": j,
            "D": b.bond(),
            "r": b.multiplicity(),
            "mu": b.mu.iter().map(|&m| pair(m)).collect::<Vec<_>>(),
            "eta": e.eta,
            "factor_rank": e.factor_rank,
            "active": active[j],
        }));
    }

    let mut lengths = serde_json::Map::new();
    if normality.normal {
        lengths.insert("injectivity_length".into(), json!(injectivity_length(a, &sc)?));
    }
    let lbi = block_injectivity_length(&cf, &sc)?;
    lengths.insert("block_injectivity_length".into(), json!(lbi));

    let angles = match block_projectors(&cf, lbi, &sc) {
        Ok(rep) => json!({
            "length": rep.length,
            "blocks": rep.blocks.iter().enumerate().map(|(j, b)| json!({
                "index": j,
                "cos_theta": b.cos_theta,
                "sin_theta": (1.0 - b.cos_theta * b.cos_theta).max(0.0).sqrt(),
                "projector_norm": b.opnorm,
                "csc_theta": if b.csc_theta.is_finite() { json!(b.csc_theta) } else { Value::Null },
            })).collect::<Vec<_>>(),
        }),
        Err(e @ Error::TooLarge { .. }) => json!({ "length": lbi, "skipped": e.to_string() }),
        Err(e) => return Err(e.into()),
    };

    let product = match product_from_canonical(&cf, n)? {
        ProductOutcome::Product(dec) => {
            let reconstruction_error = match (mps.materialize(n, cfg.amp_cap), dec.reconstruct(cfg.amp_cap)) {
                (Ok(psi), Ok(rec)) if psi.norm() > 0.0 => json!(psi.distance(&rec)? / psi.norm()),
                _ => Value::Null,
            };
            let normalized = dec.normalized_coefficients();
            json!({
                "kind": "product",
                "cluster_size": dec.cluster_size,
                "clusters": dec.clusters,
                "state_norm": dec.state_norm,
                "terms": dec.terms.iter().zip(normalized).map(|(t, bn)| json!({
                    "beta": pair(t.beta),
                    "beta_normalized": pair(bn),
                    "phi": t.phi.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
                "reconstruction_error": reconstruction_error,
            })
        }
        ProductOutcome::Obstruction(obs) => {
            let message = obs
                .blocks
                .iter()
                .map(|b| format!("block D={}", b.bond))
                .collect::<Vec<_>>()
                .join(", ");
            json!({
                "kind": "obstruction",
                "blocks": obs.blocks.iter().map(|b| json!({ "index": b.index, "D": b.bond })).collect::<Vec<_>>(),
                "message": message,
            })
        }
    };

    Ok(json!({
        "command": "analyze",
        "config": cfg.echo(),
        "N": n,
        "d": a.d(),
        "bond": a.dl(),
        "normal": normality.normal,
        "commutant_dim": normality.certificate.commutant_dim,
        "peripheral": normality.peripheral,
        "period": period,
        "block_count": cf.blocks.len(),
        "blocks": blocks,
        "lengths": Value::Object(lengths),
        "angles": angles,
        "product": product,
        "canonical_form": canonical_form_json(&cf),
    }))
}

/// One row per block and weight, for `--format csv`.
pub fn analyze_csv(report: &Value) -> String {
    let mut out = String::from("block,D,r,mu_index,mu_re,mu_im,eta\n");
    for b in report["blocks"].as_array().into_iter().flatten() {
        for (q, mu) in b["mu"].as_array().into_iter().flatten().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{:e},{:e},{:e}\n",
                b["index"],
                b["D"],
                b["r"],
                q,
                mu[0].as_f64().unwrap_or(f64::NAN),
                mu[1].as_f64().unwrap_or(f64::NAN),
                b["eta"].as_f64().unwrap_or(f64::NAN),
            ));
        }
    }
    out
}
