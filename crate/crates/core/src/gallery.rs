//! Named states and their MPS constructions: weight (Dicke, W) states, GHZ,
//! the two-term border approximation of W, a CP-rank probe by alternating
//! least squares and the rank table built from them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mps::{checked_cap, Boundary, MpsChain, SiteTensor, StateVector, TiMps};
use crate::numkernel::{c, pinv, CMat, CVec, C64, DEFAULT_RANK_TOL};
use crate::permlab::{schmidt_spectrum, Bipartition};
use crate::random::{random_matrix, seeded};

/// `chi_{a,delta,N}`: uniform superposition of strings in `{0..delta}^N`
/// whose digits sum to `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WeightStateSpec {
    pub a: usize,
    pub delta: usize,
    pub n: usize,
}

impl WeightStateSpec {
    pub fn new(a: usize, delta: usize, n: usize) -> Result<Self> {
        if delta == 0 || n == 0 {
            return invalid("weight state needs delta >= 1 and N >= 1");
        }
        if a > n * delta {
            return invalid(format!("weight {a} exceeds N * delta = {}", n * delta));
        }
        Ok(Self { a, delta, n })
    }

    pub fn d(&self) -> usize {
        self.delta + 1
    }
}

pub fn weight_state(spec: WeightStateSpec, normalized: bool, cap: usize) -> Result<StateVector> {
    let d = spec.d();
    let len = checked_cap(d, spec.n, cap, "weight state")?;
    let mut amps = vec![C64::new(0.0, 0.0); len];
    let mut count = 0usize;
    for (idx, amp) in amps.iter_mut().enumerate() {
        let mut rest = idx;
        let mut sum = 0;
        for _ in 0..spec.n {
            sum += rest % d;
            rest /= d;
        }
        if sum == spec.a {
            *amp = C64::new(1.0, 0.0);
            count += 1;
        }
    }
    if normalized && count > 0 {
        let s = 1.0 / (count as f64).sqrt();
        amps.iter_mut().for_each(|z| *z *= s);
    }
    StateVector::new(d, spec.n, amps)
}

pub fn w_state(n: usize, normalized: bool, cap: usize) -> Result<StateVector> {
    weight_state(WeightStateSpec::new(1, 1, n)?, normalized, cap)
}

pub fn dicke_state(excitations: usize, n: usize, normalized: bool, cap: usize) -> Result<StateVector> {
    weight_state(WeightStateSpec::new(excitations, 1, n)?, normalized, cap)
}

/// Chain with `A^k = sum_j |j><j+k|` on `C^{a+1}` and boundary `X = |a><0|`,
/// so that `Tr[X A^{i_1} ... A^{i_N}] = <0| A^{i_1} ... A^{i_N} |a>` counts
/// strings of total weight `a`.
pub fn weight_mps(spec: WeightStateSpec) -> Result<MpsChain> {
    let bond = spec.a + 1;
    let site = SiteTensor::from_fn(spec.d(), bond, bond, |k, i, j| {
        if j == i + k {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })?;
    let mut x = CMat::zeros(bond, bond);
    x[(spec.a, 0)] = c(1.0, 0.0);
    MpsChain::new(vec![site; spec.n], Boundary::Matrix(x))
}

/// Dicke state `D_{n,N}` with bond dimension `min(n, N-n) + 1`; for
/// `n > N/2` the construction for `N - n` is used with `0` and `1` swapped.
pub fn dicke_mps(excitations: usize, n: usize) -> Result<MpsChain> {
    if excitations > n {
        return invalid(format!("Dicke state needs n <= N, got n = {excitations}, N = {n}"));
    }
    if 2 * excitations <= n {
        return weight_mps(WeightStateSpec::new(excitations, 1, n)?);
    }
    let chain = weight_mps(WeightStateSpec::new(n - excitations, 1, n)?)?;
    let flipped: Vec<SiteTensor> = chain
        .sites()
        .iter()
        .map(|s| SiteTensor::new(vec![s.mat(1).clone(), s.mat(0).clone()]))
        .collect::<Result<_>>()?;
    MpsChain::new(flipped, chain.boundary().clone())
}

/// `sum_i |i>^{⊗N}` as a dense state and as the diagonal TI tensor `A^i = E_ii`.
pub fn ghz(d: usize, n: usize, cap: usize) -> Result<(StateVector, TiMps)> {
    if d == 0 || n == 0 {
        return invalid("GHZ state needs d >= 1 and N >= 1");
    }
    let len = checked_cap(d, n, cap, "GHZ state")?;
    let mut amps = vec![C64::new(0.0, 0.0); len];
    let step = if d == 1 { 1 } else { (len - 1) / (d - 1) };
    for i in 0..d {
        amps[i * step] = C64::new(1.0, 0.0);
    }
    let tensor = SiteTensor::from_fn(d, d, d, |i, a, b| {
        if a == i && b == i {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })?;
    Ok((StateVector::new(d, n, amps)?, TiMps::new(tensor)?))
}

#[derive(Clone, Debug)]
pub struct BorderW {
    pub approx: StateVector,
    /// `||approx - W_N||` for the unnormalized `W_N`.
    pub error: f64,
}

/// `(1/2ε) ([|0> + ε|1>]^{⊗N} - [|0> - ε|1>]^{⊗N})`, a two-product-term
/// approximation of `W_N`.
pub fn border_w(n: usize, eps: f64, cap: usize) -> Result<BorderW> {
    if !(eps > 0.0) || !eps.is_finite() {
        return invalid("border_w needs eps > 0");
    }
    let plus = CVec::from_vec(vec![c(1.0, 0.0), c(eps, 0.0)]);
    let minus = CVec::from_vec(vec![c(1.0, 0.0), c(-eps, 0.0)]);
    let p = StateVector::product(&vec![plus; n], cap)?;
    let m = StateVector::product(&vec![minus; n], cap)?;
    let approx = p.sub(&m)?.scaled(c(1.0 / (2.0 * eps), 0.0));
    let error = approx.distance(&w_state(n, false, cap)?)?;
    Ok(BorderW { approx, error })
}

/// `sqrt(sum_{odd w >= 3} C(N, w) ε^{2(w-1)})`.
pub fn border_w_closed_form(n: usize, eps: f64) -> f64 {
    (3..=n)
        .step_by(2)
        .map(|w| binomial(n, w) * eps.powi(2 * (w as i32 - 1)))
        .sum::<f64>()
        .sqrt()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

// ---------------------------------------------------------------------------
// CP rank probe

#[derive(Clone, Debug, Serialize)]
pub struct CpProbe {
    pub rank: usize,
    /// Best relative residual `||psi - sum_r ⊗_j phi_rj|| / ||psi||`.
    pub best_residual: f64,
    /// Best residual for every rank from 1 to `rank`.
    pub residual_by_rank: Vec<f64>,
}

impl CpProbe {
    pub fn success(&self, tol: f64) -> bool {
        self.best_residual <= tol
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AlsOptions {
    pub max_iter: usize,
    /// Stop once the relative residual changes by less than this.
    pub change_tol: f64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            change_tol: 1e-12,
        }
    }
}

/// Alternating least squares for ranks `1..=r`. Rank `q` starts once from
/// the best rank `q - 1` factors padded with a small random column and
/// `restarts` times from complex Gaussian factors; a rank `q - 1` fit padded
/// with a zero column is itself a rank `q` fit, so residuals never increase
/// with `q`.
pub fn cp_rank_probe(psi: &StateVector, r: usize, restarts: usize, seed: u64) -> Result<CpProbe> {
    cp_rank_probe_with(psi, r, restarts, seed, AlsOptions::default())
}

pub fn cp_rank_probe_with(psi: &StateVector, r: usize, restarts: usize, seed: u64, opts: AlsOptions) -> Result<CpProbe> {
    if r == 0 {
        return invalid("cp_rank_probe needs r >= 1");
    }
    let norm = psi.norm();
    if norm == 0.0 {
        return Ok(CpProbe {
            rank: r,
            best_residual: 0.0,
            residual_by_rank: vec![0.0; r],
        });
    }
    let target = psi.normalized();
    let (d, n) = (psi.d(), psi.n());
    let mut best: Option<(f64, Vec<CMat>)> = None;
    let mut residual_by_rank = Vec::with_capacity(r);
    for q in 1..=r {
        let mut round: Option<(f64, Vec<CMat>)> = None;
        let mut consider = |res: f64, factors: Vec<CMat>| {
            if round.as_ref().is_none_or(|(b, _)| res < *b) {
                round = Some((res, factors));
            }
        };
        if let Some((prev_res, prev)) = &best {
            let mut rng = seeded(seed ^ (q as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let padded: Vec<CMat> = prev
                .iter()
                .map(|f| {
                    let mut g = f.clone().insert_column(q - 1, c(0.0, 0.0));
                    let col = random_matrix(&mut rng, d, 1) * c(1e-3, 0.0);
                    g.set_column(q - 1, &col.column(0));
                    g
                })
                .collect();
            let (res, f) = als(&target, padded, opts)?;
            consider(res, f);
            let zero_padded: Vec<CMat> = prev.iter().map(|f| f.clone().insert_column(q - 1, c(0.0, 0.0))).collect();
            consider(*prev_res, zero_padded);
        }
        let fits: Vec<(f64, Vec<CMat>)> = (0..restarts)
            .into_par_iter()
            .map(|k| {
                let mut rng = seeded(seed.wrapping_add((q as u64) << 32).wrapping_add(k as u64));
                let init: Vec<CMat> = (0..n).map(|_| random_matrix(&mut rng, d, q)).collect();
                als(&target, init, opts)
            })
            .collect::<Result<_>>()?;
        for (res, f) in fits {
            consider(res, f);
        }
        let chosen = round.expect("at least one candidate per rank");
        residual_by_rank.push(chosen.0);
        best = Some(chosen);
    }
    Ok(CpProbe {
        rank: r,
        best_residual: *residual_by_rank.last().expect("r >= 1"),
        residual_by_rank,
    })
}

/// Runs ALS sweeps from `factors` (one `d x r` matrix per site) and returns
/// the final relative residual against the unit-norm `target`. Each update
/// solves the normal equations `U G = T_(j) conj(K)` with the Gram matrix
/// `G` formed as a Hadamard product of the other factors' Grams.
fn als(target: &StateVector, mut factors: Vec<CMat>, opts: AlsOptions) -> Result<(f64, Vec<CMat>)> {
    let n = target.n();
    let unfoldings: Vec<CMat> = (0..n).map(|j| unfold(target, j)).collect();
    let target_vec = CVec::from_column_slice(target.amps());
    let mut prev = residual(&target_vec, &factors);
    for _ in 0..opts.max_iter {
        for j in 0..n {
            let r = factors[j].ncols();
            let mut gram = CMat::from_element(r, r, c(1.0, 0.0));
            for (k, f) in factors.iter().enumerate() {
                if k != j {
                    gram.component_mul_assign(&(f.transpose() * f.conjugate()));
                }
            }
            let kr = khatri_rao(&factors, Some(j));
            factors[j] = &unfoldings[j] * kr.conjugate() * pinv(&gram, 1e-14)?;
        }
        let res = residual(&target_vec, &factors);
        let done = (prev - res).abs() < opts.change_tol || res < 1e-14;
        prev = res;
        if done {
            break;
        }
    }
    Ok((prev, factors))
}

/// Mode-`j` unfolding: rows `i_j`, columns the remaining digits big-endian.
fn unfold(psi: &StateVector, j: usize) -> CMat {
    let d = psi.d();
    let mut m = CMat::zeros(d, psi.amps().len() / d);
    for (idx, z) in psi.amps().iter().enumerate() {
        let digits = psi.digits_of(idx);
        let col = digits
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .fold(0, |acc, (_, &x)| acc * d + x);
        m[(digits[j], col)] = *z;
    }
    m
}

/// Column-wise Kronecker product of all factors except `skip`, rows ordered
/// big-endian like the columns of `unfold(_, skip)`.
fn khatri_rao(factors: &[CMat], skip: Option<usize>) -> CMat {
    let r = factors[0].ncols();
    let mut acc = CMat::from_element(1, r, c(1.0, 0.0));
    for (k, f) in factors.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        let (rows, d) = (acc.nrows(), f.nrows());
        let mut next = CMat::zeros(rows * d, r);
        for q in 0..r {
            for a in 0..rows {
                for x in 0..d {
                    next[(a * d + x, q)] = acc[(a, q)] * f[(x, q)];
                }
            }
        }
        acc = next;
    }
    acc
}

fn residual(target: &CVec, factors: &[CMat]) -> f64 {
    let kr = khatri_rao(factors, None);
    let ones = CVec::from_element(kr.ncols(), c(1.0, 0.0));
    (target - kr * ones).norm()
}

// ---------------------------------------------------------------------------
// rank table

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub state: String,
    pub quantity: String,
    pub value: String,
    /// `reference` for literature values, `measured` for computed ones.
    pub provenance: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RankTable {
    pub n: usize,
    pub rows: Vec<TableRow>,
}

impl RankTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,quantity,value,provenance\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.state, r.quantity, r.value, r.provenance));
        }
        out
    }

    pub fn get(&self, state: &str, quantity: &str, provenance: &str) -> Option<&str> {
        self.rows
            .iter()
            .find(|r| r.state == state && r.quantity == quantity && r.provenance == provenance)
            .map(|r| r.value.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct TableOptions {
    pub cap: usize,
    pub tol_rank: f64,
    pub seed: u64,
    /// ALS restarts per rank; the probe runs only for `N <= 6` and `d <= 3`.
    pub als_restarts: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            cap: crate::mps::DEFAULT_AMP_CAP,
            tol_rank: DEFAULT_RANK_TOL,
            seed: 0,
            als_restarts: 10,
        }
    }
}

/// Residual below which an ALS fit counts as an exact decomposition.
pub const ALS_SUCCESS_TOL: f64 = 1e-8;

struct Entry {
    name: String,
    chain: MpsChain,
    state: StateVector,
    bond_ref: String,
    tensor_rank_ref: String,
    border_rank_ref: String,
    als_max_rank: usize,
}

pub fn table2_report(n: usize, opts: &TableOptions) -> Result<RankTable> {
    if n < 2 {
        return invalid("rank table needs N >= 2");
    }
    let mut entries = Vec::new();
    entries.push(Entry {
        name: format!("W_{n}"),
        chain: weight_mps(WeightStateSpec::new(1, 1, n)?)?,
        state: w_state(n, true, opts.cap)?,
        bond_ref: "2".into(),
        tensor_rank_ref: n.to_string(),
        border_rank_ref: "2".into(),
        als_max_rank: n + 1,
    });
    for k in 0..=n {
        let lo = k.min(n - k);
        let hi = k.max(n - k);
        let tensor_rank = if lo == 0 { 1 } else { hi + 1 };
        entries.push(Entry {
            name: format!("D_{k}_{n}"),
            chain: dicke_mps(k, n)?,
            state: dicke_state(k, n, true, opts.cap)?,
            bond_ref: (lo + 1).to_string(),
            tensor_rank_ref: tensor_rank.to_string(),
            border_rank_ref: (lo + 1).to_string(),
            als_max_rank: tensor_rank + 1,
            });
    }
    for a in 1..=3usize.min(n) {
        let spec = WeightStateSpec::new(a, a, n)?;
        entries.push(Entry {
            name: format!("chi_{a}_{n}"),
            chain: weight_mps(spec)?,
            state: weight_state(spec, true, opts.cap)?,
            bond_ref: (a + 1).to_string(),
            tensor_rank_ref: if a == 1 { n.to_string() } else { format!(">={}", n + 1) },
            border_rank_ref: (a + 1).to_string(),
            als_max_rank: n + 2,
            });
    }

    let mut rows = Vec::new();
    let mut push = |state: &str, quantity: &str, value: String, provenance: &str| {
        rows.push(TableRow {
            state: state.to_string(),
            quantity: quantity.to_string(),
            value,
            provenance: provenance.to_string(),
        })
    };
    for e in &entries {
        let cut = Bipartition::contiguous(n, n / 2)?;
        let schmidt = schmidt_spectrum(&e.state, &cut, opts.tol_rank)?.rank;
        push(&e.name, "bond_dimension", e.bond_ref.clone(), "reference");
        push(&e.name, "bond_dimension", e.chain.max_bond().to_string(), "measured");
        push(&e.name, "schmidt_rank_balanced", schmidt.to_string(), "measured");
        push(&e.name, "tensor_rank", e.tensor_rank_ref.clone(), "reference");
        push(&e.name, "border_rank", e.border_rank_ref.clone(), "reference");
        if n <= 6 && e.state.d() <= 3 {
            let probe = cp_rank_probe(&e.state, e.als_max_rank, opts.als_restarts, opts.seed)?;
            let smallest = probe
                .residual_by_rank
                .iter()
                .position(|&r| r <= ALS_SUCCESS_TOL)
                .map(|q| (q + 1).to_string())
                .unwrap_or_else(|| format!(">{}", e.als_max_rank));
            push(&e.name, "als_exact_rank", smallest, "measured");
            let border: usize = e.border_rank_ref.parse().unwrap_or(1);
            if border >= 1 && border <= probe.residual_by_rank.len() {
                push(
                    &e.name,
                    "als_residual_at_border_rank",
                    format!("{:.6e}", probe.residual_by_rank[border - 1]),
                    "measured",
                );
            }
        }
    }
    Ok(RankTable { n, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::DEFAULT_AMP_CAP;

    fn support(psi: &StateVector) -> Vec<usize> {
        psi.amps().iter().enumerate().filter(|(_, z)| z.norm() > 0.5).map(|(i, _)| i).collect()
    }

    #[test]
    fn weight_state_examples() {
        let w = weight_state(WeightStateSpec::new(1, 1, 3).unwrap(), false, DEFAULT_AMP_CAP).unwrap();
        assert_eq!(support(&w), vec![1, 2, 4]);
        let zero = weight_state(WeightStateSpec::new(0, 2, 3).unwrap(), false, DEFAULT_AMP_CAP).unwrap();
        assert_eq!(support(&zero), vec![0]);
        let chi = weight_state(WeightStateSpec::new(2, 2, 2).unwrap(), false, DEFAULT_AMP_CAP).unwrap();
        // |02>, |11>, |20> with base-3 indices 2, 4, 6
        assert_eq!(support(&chi), vec![2, 4, 6]);
        assert!(WeightStateSpec::new(5, 1, 4).is_err());
        let wn = w_state(4, true, DEFAULT_AMP_CAP).unwrap();
        assert!((wn.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dicke_mps_examples() {
        let w = dicke_mps(1, 3).unwrap();
        assert_eq!(w.max_bond(), 2);
        assert_eq!(support(&w.materialize(DEFAULT_AMP_CAP).unwrap()), vec![1, 2, 4]);
        let d24 = dicke_mps(2, 4).unwrap().materialize(DEFAULT_AMP_CAP).unwrap();
        assert_eq!(support(&d24).len(), 6);
        assert_eq!(d24, dicke_state(2, 4, false, DEFAULT_AMP_CAP).unwrap());
        let d0 = dicke_mps(0, 4).unwrap();
        assert_eq!(d0.max_bond(), 1);
        assert_eq!(support(&d0.materialize(DEFAULT_AMP_CAP).unwrap()), vec![0]);
        let d46 = dicke_mps(4, 6).unwrap();
        assert_eq!(d46.max_bond(), 3);
        assert_eq!(d46.materialize(DEFAULT_AMP_CAP).unwrap(), dicke_state(4, 6, false, DEFAULT_AMP_CAP).unwrap());
    }

    #[test]
    fn ghz_examples() {
        let (s, t) = ghz(2, 3, DEFAULT_AMP_CAP).unwrap();
        assert_eq!(support(&s), vec![0, 7]);
        assert_eq!(t.materialize(3, DEFAULT_AMP_CAP).unwrap(), s);
        let (s, _) = ghz(3, 2, DEFAULT_AMP_CAP).unwrap();
        assert_eq!(support(&s), vec![0, 4, 8]);
    }

    #[test]
    fn border_w_examples() {
        let e1 = border_w(4, 0.1, DEFAULT_AMP_CAP).unwrap().error;
        let e2 = border_w(4, 0.05, DEFAULT_AMP_CAP).unwrap().error;
        assert!((e1 - 2e-2).abs() < 1e-4);
        assert!((e2 - 5e-3).abs() < 1e-5);
        assert!((e1 / e2 - 4.0).abs() < 0.01);
        assert!((e1 - border_w_closed_form(4, 0.1)).abs() <= 1e-12 * e1);
        assert!(border_w(4, 0.0, DEFAULT_AMP_CAP).is_err());
    }

    #[test]
    fn cp_probe_product_and_w3() {
        let v = vec![CVec::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]); 3];
        let prod = StateVector::product(&v, DEFAULT_AMP_CAP).unwrap();
        assert!(cp_rank_probe(&prod, 1, 3, 1).unwrap().success(1e-10));
        let w3 = w_state(3, true, DEFAULT_AMP_CAP).unwrap();
        let p = cp_rank_probe(&w3, 3, 10, 2).unwrap();
        assert!(p.success(1e-8), "{p:?}");
        assert!(p.residual_by_rank.windows(2).all(|w| w[1] <= w[0]));
        // rank 2 is approached but not attained: longer runs keep lowering it
        let short = cp_rank_probe(&w3, 2, 5, 2).unwrap().best_residual;
        let long = cp_rank_probe_with(&w3, 2, 5, 2, AlsOptions { max_iter: 4000, change_tol: 0.0 }).unwrap().best_residual;
        assert!(short > 1e-8 && long > 1e-8);
        assert!(long < short, "{long} vs {short}");
    }

    #[test]
    fn table_rows() {
        let t = table2_report(6, &TableOptions { als_restarts: 3, ..Default::default() }).unwrap();
        assert_eq!(t.get("W_6", "bond_dimension", "measured"), Some("2"));
        assert_eq!(t.get("W_6", "schmidt_rank_balanced", "measured"), Some("2"));
        assert_eq!(t.get("D_2_6", "bond_dimension", "measured"), Some("3"));
        assert_eq!(t.get("chi_3_6", "bond_dimension", "measured"), Some("4"));
        assert!(t.to_csv().starts_with("state,quantity,value,provenance\n"));
    }
}
