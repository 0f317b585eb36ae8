//! File formats: MPS JSON, the `.msv` state-vector binary, canonical-form
//! JSON and Schmidt-spectrum CSV.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Result};
use crate::mps::{checked_cap, Boundary, MpsChain, SiteTensor, StateVector, TiMps};
use crate::numkernel::{CMat, C64};
use crate::permlab::SchmidtReport;
use crate::structure::CanonicalForm;

pub const MSV_MAGIC: &[u8; 7] = b"MPSUP1\0";

type Pair = [f64; 2];

#[derive(Serialize, Deserialize)]
struct MpsJson {
    kind: String,
    d: usize,
    tensors: Vec<Vec<Vec<Vec<Pair>>>>,
    boundary: BoundaryJson,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BoundaryJson {
    Named(String),
    Matrix { matrix: Vec<Vec<Pair>> },
}

/// Contents of an MPS JSON file.
#[derive(Clone, Debug)]
pub enum MpsFile {
    Ti { mps: TiMps, n: Option<usize> },
    Chain { chain: MpsChain, n: Option<usize> },
}

impl MpsFile {
    /// Length stored in the file, or the chain length.
    pub fn n(&self) -> Option<usize> {
        match self {
            MpsFile::Ti { n, .. } => *n,
            MpsFile::Chain { chain, n } => n.or(Some(chain.len())),
        }
    }

    pub fn materialize(&self, n: Option<usize>, cap: usize) -> Result<StateVector> {
        match self {
            MpsFile::Ti { mps, n: stored } => match n.or(*stored) {
                Some(n) => mps.materialize(n, cap),
                None => invalid("a TI MPS needs a length N to materialize"),
            },
            MpsFile::Chain { chain, .. } => chain.materialize(cap),
        }
    }
}

fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

fn matrix_rows(m: &CMat) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|a| (0..m.ncols()).map(|b| pair(m[(a, b)])).collect()).collect()
}

fn matrix_json(m: &CMat) -> Value {
    json!(matrix_rows(m))
}

fn tensor_rows(t: &SiteTensor) -> Vec<Vec<Vec<Pair>>> {
    t.mats().iter().map(matrix_rows).collect()
}

pub fn tensor_json(t: &SiteTensor) -> Value {
    json!(tensor_rows(t))
}

fn parse_matrix(rows: &[Vec<Pair>], what: &str) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return invalid(format!("{what} is empty"));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return invalid(format!("{what} has ragged rows"));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return invalid(format!("{what} has non-finite entries"));
    }
    Ok(CMat::from_fn(nrows, ncols, |a, b| C64::new(rows[a][b][0], rows[a][b][1])))
}

fn parse_site(raw: &[Vec<Vec<Pair>>], d: usize, site: usize) -> Result<SiteTensor> {
    if raw.len() != d {
        return invalid(format!(
            "physical dimension mismatch at site {site}: {} matrices, d = {d}",
            raw.len()
        ));
    }
    let mats = raw
        .iter()
        .enumerate()
        .map(|(i, m)| parse_matrix(m, &format!("matrix {i} at site {site}")))
        .collect::<Result<Vec<_>>>()?;
    let (dl, dr) = (mats[0].nrows(), mats[0].ncols());
    if mats.iter().any(|m| m.nrows() != dl || m.ncols() != dr) {
        return invalid(format!("matrices at site {site} have different shapes"));
    }
    SiteTensor::new(mats)
}

pub fn parse_mps_json(text: &str) -> Result<MpsFile> {
    let raw: MpsJson = serde_json::from_str(text)?;
    if raw.d == 0 {
        return invalid("d must be positive");
    }
    if raw.tensors.is_empty() {
        return invalid("no tensors");
    }
    let sites = raw
        .tensors
        .iter()
        .enumerate()
        .map(|(k, t)| parse_site(t, raw.d, k + 1))
        .collect::<Result<Vec<_>>>()?;
    let boundary = match raw.boundary {
        BoundaryJson::Named(s) if s == "trace" => Boundary::Trace,
        BoundaryJson::Named(s) => return invalid(format!("unknown boundary {s:?}")),
        BoundaryJson::Matrix { matrix } => Boundary::Matrix(parse_matrix(&matrix, "boundary matrix")?),
    };
    match raw.kind.as_str() {
        "ti" => {
            if sites.len() != 1 {
                return invalid(format!("a TI MPS has one tensor, found {}", sites.len()));
            }
            if !matches!(boundary, Boundary::Trace) {
                return invalid("a TI MPS uses the trace boundary");
            }
            let mps = TiMps::new(sites.into_iter().next().expect("one site"))?;
            Ok(MpsFile::Ti { mps, n: raw.n })
        }
        "chain" => {
            if let Some(n) = raw.n {
                if n != sites.len() {
                    return invalid(format!("N = {n} but {} tensors", sites.len()));
                }
            }
            Ok(MpsFile::Chain {
                chain: MpsChain::new(sites, boundary)?,
                n: raw.n,
            })
        }
        other => invalid(format!("unknown kind {other:?}, expected \"ti\" or \"chain\"")),
    }
}

pub fn mps_json(file: &MpsFile) -> Value {
    let (kind, d, tensors, boundary, n) = match file {
        MpsFile::Ti { mps, n } => ("ti", mps.d(), vec![tensor_rows(mps.tensor())], json!("trace"), *n),
        MpsFile::Chain { chain, n } => {
            let boundary = match chain.boundary() {
                Boundary::Trace => json!("trace"),
                Boundary::Matrix(x) => json!({ "matrix": matrix_json(x) }),
            };
            ("chain", chain.d(), chain.sites().iter().map(tensor_rows).collect(), boundary, *n)
        }
    };
    let mut v = json!({ "kind": kind, "d": d, "tensors": tensors, "boundary": boundary });
    if let Some(n) = n {
        v["N"] = json!(n);
    }
    v
}

pub fn read_mps(path: &Path) -> Result<MpsFile> {
    parse_mps_json(&fs::read_to_string(path)?)
}

pub fn write_mps(path: &Path, file: &MpsFile) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&mps_json(file))? + "\n")?;
    Ok(())
}

pub fn write_msv(mut w: impl Write, psi: &StateVector) -> Result<()> {
    let (Ok(d), Ok(n)) = (u32::try_from(psi.d()), u32::try_from(psi.n())) else {
        return invalid("d or N does not fit in u32");
    };
    w.write_all(MSV_MAGIC)?;
    w.write_all(&d.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    for z in psi.amps() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_msv(mut r: impl Read, cap: usize) -> Result<StateVector> {
    let mut magic = [0u8; 7];
    r.read_exact(&mut magic)?;
    if &magic != MSV_MAGIC {
        return invalid("not an .msv file (bad magic)");
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let d = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    if d == 0 || n == 0 {
        return invalid("d and N must be positive");
    }
    let len = checked_cap(d, n, cap, ".msv state")?;
    let mut bytes = vec![0u8; len * 16];
    r.read_exact(&mut bytes)?;
    let amps = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect();
    StateVector::new(d, n, amps)
}

pub fn save_msv(path: &Path, psi: &StateVector) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_msv(&mut f, psi)?;
    f.flush()?;
    Ok(())
}

pub fn load_msv(path: &Path, cap: usize) -> Result<StateVector> {
    read_msv(std::io::BufReader::new(fs::File::open(path)?), cap)
}

pub fn canonical_form_json(cf: &CanonicalForm) -> Value {
    let blocks: Vec<Value> = cf
        .blocks
        .iter()
        .map(|b| {
            json!({
                "D": b.bond(),
                "r": b.multiplicity(),
                "mu": b.mu.iter().map(|&z| pair(z)).collect::<Vec<_>>(),
                "tensor": tensor_json(&b.tensor),
            })
        })
        .collect();
    json!({
        "p": cf.period,
        "blocks": blocks,
        "gauge": matrix_json(&cf.gauge),
        "scale": cf.scale,
        "null_dim": cf.null_dim,
    })
}

/// Label of a bipartition in CSV output: the sites of `S` joined by `+`.
pub fn cut_label(sites: &[usize]) -> String {
    sites.iter().map(usize::to_string).collect::<Vec<_>>().join("+")
}

pub fn schmidt_csv(reports: &[SchmidtReport]) -> String {
    let mut out = String::from("cut,sigma_index,sigma_value\n");
    for r in reports {
        let cut = cut_label(r.bipartition.sites());
        for (k, s) in r.sigma.iter().enumerate() {
            out.push_str(&format!("{cut},{k},{s:e}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{dicke_mps, ghz};
    use crate::mps::DEFAULT_AMP_CAP;
    use crate::permlab::{schmidt_spectrum, Bipartition};

    #[test]
    fn mps_json_round_trip() {
        let chain = dicke_mps(2, 5).unwrap();
        let file = MpsFile::Chain { chain: chain.clone(), n: Some(5) };
        let back = parse_mps_json(&mps_json(&file).to_string()).unwrap();
        assert_eq!(back.materialize(None, DEFAULT_AMP_CAP).unwrap(), chain.materialize(DEFAULT_AMP_CAP).unwrap());

        let (_, ti) = ghz(2, 3, DEFAULT_AMP_CAP).unwrap();
        let file = MpsFile::Ti { mps: ti, n: None };
        let text = mps_json(&file).to_string();
        assert!(text.contains("\"trace\""));
        let back = parse_mps_json(&text).unwrap();
        assert_eq!(back.n(), None);
        assert!(back.materialize(None, DEFAULT_AMP_CAP).is_err());
        assert_eq!(back.materialize(Some(4), DEFAULT_AMP_CAP).unwrap().amps()[15], C64::new(1.0, 0.0));
    }

    #[test]
    fn mps_json_rejects_bad_input() {
        let bad_bonds = r#"{"kind":"chain","d":1,"tensors":[
            [[[[1,0],[0,0]]]],
            [[[[1,0]],[[0,0]],[[0,0]]]]
        ],"boundary":"trace"}"#;
        let err = parse_mps_json(bad_bonds).unwrap_err().to_string();
        assert!(err.contains("bond mismatch at site 2"), "{err}");
        assert!(parse_mps_json("{").is_err());
        let bad_kind = r#"{"kind":"tree","d":1,"tensors":[[[[[1,0]]]]],"boundary":"trace"}"#;
        assert!(parse_mps_json(bad_kind).is_err());
        let bad_d = r#"{"kind":"ti","d":2,"tensors":[[[[[1,0]]]]],"boundary":"trace"}"#;
        assert!(parse_mps_json(bad_d).is_err());
    }

    #[test]
    fn msv_round_trip() {
        let psi = dicke_mps(1, 4).unwrap().materialize(DEFAULT_AMP_CAP).unwrap().scaled(C64::new(0.5, -0.25));
        let mut buf = Vec::new();
        write_msv(&mut buf, &psi).unwrap();
        assert_eq!(&buf[..7], MSV_MAGIC);
        assert_eq!(buf.len(), 7 + 8 + 16 * 16);
        assert_eq!(read_msv(buf.as_slice(), DEFAULT_AMP_CAP).unwrap(), psi);
        assert!(read_msv(&buf[..20], DEFAULT_AMP_CAP).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_msv(bad.as_slice(), DEFAULT_AMP_CAP).is_err());
        assert!(read_msv(buf.as_slice(), 8).is_err());
    }

    #[test]
    fn schmidt_csv_rows() {
        let psi = dicke_mps(1, 4).unwrap().materialize(DEFAULT_AMP_CAP).unwrap();
        let rep = schmidt_spectrum(&psi, &Bipartition::new(4, vec![0, 2]).unwrap(), 1e-10).unwrap();
        let csv = schmidt_csv(&[rep]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "cut,sigma_index,sigma_value");
        assert!(lines[1].starts_with("0+2,0,"));
    }
}
