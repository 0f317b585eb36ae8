//! Structural analysis of translation-invariant tensors: normality, period,
//! canonical form, injectivity lengths, inverse maps, block projectors, the
//! purity constant η and product (GHZ-like) decompositions.

use std::ops::Range;

use crate::error::{invalid, Error, Result};
use crate::mps::{
    block_sites, checked_cap, left_canonical, transfer_matrix, SiteTensor, StateVector, TiMps,
    DEFAULT_AMP_CAP, PERIPHERAL_TOL,
};
use crate::numkernel::{
    condition_number, eig, null_space_abs, orthonormal_basis, pinv, spectral_norm, subspace_cosine,
    svd, unvec_col, vec_col, CMat, CVec, C64, DEFAULT_RANK_TOL,
};
use crate::random::{complex_gaussian, seeded, SeededRng};

/// Relative tolerance for commutant and intertwiner null spaces.
const COMMUTANT_TOL: f64 = 1e-9;
/// Relative spread under which eigenvalues of a commutant element are merged.
const CLUSTER_TOL: f64 = 1e-6;
/// Mixed-transfer radius window for deciding gauge equivalence of blocks.
const EQUIVALENCE_TOL: f64 = 1e-6;
/// Phase tolerance for matching peripheral eigenvalues to roots of unity.
const PHASE_TOL: f64 = 1e-8;
/// Blocks whose Frobenius norm is below this fraction of the input are zero.
const ZERO_BLOCK_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct StructureConfig {
    pub tol_rank: f64,
    pub seed: u64,
    pub amp_cap: usize,
    pub max_period: usize,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            tol_rank: DEFAULT_RANK_TOL,
            seed: 0,
            amp_cap: DEFAULT_AMP_CAP,
            max_period: 12,
        }
    }
}

fn require_square(a: &SiteTensor, what: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        invalid(format!("{what}: bonds are {}x{}, need square", a.dl(), a.dr()))
    }
}

fn tensor_norm(a: &SiteTensor) -> f64 {
    a.mats().iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// normality and injectivity

#[derive(Clone, Debug)]
pub struct NormalityCertificate {
    /// Dimension of `{X : X A^i = A^i X for all i}`.
    pub commutant_dim: usize,
    pub spectral_radius: f64,
    /// Length at which the products span all `D x D` matrices, if reached.
    pub injectivity_length: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct NormalityReport {
    pub normal: bool,
    /// Moduli of the peripheral transfer eigenvalues (unscaled), with multiplicity.
    pub peripheral: Vec<f64>,
    pub certificate: NormalityCertificate,
}

pub fn is_normal(a: &SiteTensor, cfg: &StructureConfig) -> Result<NormalityReport> {
    require_square(a, "is_normal")?;
    let commutant_dim = commutant_basis(a, COMMUTANT_TOL)?.len();
    let spec = transfer_matrix(a, None)?.spectrum()?;
    let r = spec[0].norm();
    let peripheral: Vec<f64> = if r > 0.0 {
        spec.iter()
            .filter(|v| v.norm() >= r * (1.0 - PERIPHERAL_TOL))
            .map(|v| v.norm())
            .collect()
    } else {
        Vec::new()
    };
    let spectral_ok = peripheral.len() == 1 && (spec[0].re - r).abs() <= 1e-8 * r;
    // A trivial commutant with a simple peripheral eigenvalue still admits
    // block-triangular tensors; reaching full span rules those out.
    let injectivity_length = if commutant_dim == 1 && spectral_ok {
        span_growth(a, injectivity_cap(a.dl()), cfg.tol_rank)?
    } else {
        None
    };
    Ok(NormalityReport {
        normal: commutant_dim == 1 && spectral_ok && injectivity_length.is_some(),
        peripheral,
        certificate: NormalityCertificate {
            commutant_dim,
            spectral_radius: r,
            injectivity_length,
        },
    })
}

/// `ceil(2 D^2 (6 + log2 D))`, the worst-case injectivity length of a normal tensor.
pub fn injectivity_cap(bond: usize) -> usize {
    let d = bond as f64;
    (2.0 * d * d * (6.0 + d.log2())).ceil() as usize
}

/// Smallest `L <= cap` at which `span{A^{i_1} ... A^{i_L}}` has dimension `D^2`.
fn span_growth(a: &SiteTensor, cap: usize, tol: f64) -> Result<Option<usize>> {
    let dim = a.dl();
    let full = dim * dim;
    // Carry U Σ of the stacked words rather than an orthonormal basis, which
    // would promote round-off directions to unit weight at every step.
    let mut frame = weighted_frame(&a.mats().iter().map(vec_col).collect::<Vec<_>>(), tol)?;
    for length in 1..=cap {
        if frame.len() == full {
            return Ok(Some(length));
        }
        if frame.is_empty() {
            return Ok(None);
        }
        let next: Vec<CVec> = frame
            .iter()
            .flat_map(|b| {
                let m = unvec_col(b, dim, dim);
                a.mats().iter().map(move |ai| vec_col(&(&m * ai)))
            })
            .collect();
        frame = weighted_frame(&next, tol)?;
    }
    Ok(None)
}

/// Columns `sigma_k u_k / sigma_max` for the singular values above `tol * sigma_max`.
fn weighted_frame(vectors: &[CVec], tol: f64) -> Result<Vec<CVec>> {
    let s = svd(&CMat::from_columns(vectors))?;
    let smax = s.sigma_max();
    Ok((0..s.rank(tol))
        .map(|k| s.u.column(k) * C64::new(s.sigma[k] / smax, 0.0))
        .collect())
}

pub fn injectivity_length(a: &SiteTensor, cfg: &StructureConfig) -> Result<usize> {
    require_square(a, "injectivity_length")?;
    let cap = injectivity_cap(a.dl());
    span_growth(a, cap, cfg.tol_rank)?.ok_or(Error::NotNormalOrBug { cap })
}

/// Physical realization of the blocked tensor: the `d^L x D_l D_r` matrix
/// with entry `[w, a + b D_l] = (A^{w_1} ... A^{w_L})_{ab}`.
pub fn physical_realization(a: &SiteTensor, length: usize, cap: usize) -> Result<CMat> {
    let blocked = block_sites(a, length, cap)?;
    Ok(blocked.bond_by_physical().transpose())
}

/// Left inverse of the blocked tensor, a `D^2 x d^L` matrix `M` with
/// `M * physical_realization(A, L) = I`.
#[derive(Clone, Debug)]
pub struct InverseTensor {
    pub length: usize,
    pub bond: usize,
    pub matrix: CMat,
}

impl InverseTensor {
    /// `M * T` for the blocked tensor's realization `T`.
    pub fn compose(&self, a: &SiteTensor, cap: usize) -> Result<CMat> {
        let t = physical_realization(a, self.length, cap)?;
        if t.nrows() != self.matrix.ncols() {
            return invalid("inverse and tensor have different physical dimensions");
        }
        Ok(&self.matrix * t)
    }
}

pub fn tensor_inverse(a: &SiteTensor, length: usize, cfg: &StructureConfig) -> Result<InverseTensor> {
    require_square(a, "tensor_inverse")?;
    let t = physical_realization(a, length, cfg.amp_cap)?;
    let needed = a.dl() * a.dl();
    let rank = svd(&t)?.rank(cfg.tol_rank);
    if rank < needed {
        return Err(Error::NotInjective { length, rank, needed });
    }
    Ok(InverseTensor {
        length,
        bond: a.dl(),
        matrix: pinv(&t, cfg.tol_rank)?,
    })
}

// ---------------------------------------------------------------------------
// block decomposition

/// Basis of the commutant `{X : X A^i = A^i X}`, as matrices.
fn commutant_basis(a: &SiteTensor, tol: f64) -> Result<Vec<CMat>> {
    let dim = a.dl();
    let n = dim * dim;
    let eye = CMat::identity(dim, dim);
    let mut system = CMat::zeros(n * a.d(), n);
    for (i, ai) in a.mats().iter().enumerate() {
        // vec(X A - A X) = (A^T ⊗ I - I ⊗ A) vec X
        let block = ai.transpose().kronecker(&eye) - eye.kronecker(ai);
        system.view_mut((i * n, 0), (n, n)).copy_from(&block);
    }
    Ok(null_space_abs(&system, tol * 2.0 * tensor_norm(a))?
        .iter()
        .map(|v| unvec_col(v, dim, dim))
        .collect())
}

/// Invariant-subspace bases `S_k` (columns) whose concatenation `S` is
/// invertible with `S^{-1} A^i S` block diagonal and every block irreducible.
fn split(a: &SiteTensor, rng: &mut SeededRng, depth: usize) -> Result<Vec<CMat>> {
    let dim = a.dl();
    if dim == 1 {
        return Ok(vec![CMat::identity(1, 1)]);
    }
    let basis = commutant_basis(a, COMMUTANT_TOL)?;
    if basis.len() <= 1 {
        return Ok(vec![CMat::identity(dim, dim)]);
    }
    if depth >= dim {
        return Err(Error::DecompositionFailed(format!("no irreducible split after {depth} levels")));
    }
    // A second independent element is drawn when the first one is degenerate.
    for _attempt in 0..2 {
        let x = basis
            .iter()
            .fold(CMat::zeros(dim, dim), |acc, b| acc + b * complex_gaussian(rng));
        let values = eig(&x)?.values;
        let clusters = cluster_values(&values);
        if clusters.len() < 2 {
            continue;
        }
        let mut subspaces = Vec::with_capacity(clusters.len());
        for (center, size) in &clusters {
            let shifted = &x - CMat::identity(dim, dim) * *center;
            let ns = null_space_abs(&shifted, 1e-8 * x.norm())?;
            if ns.len() != *size {
                return Err(Error::DecompositionFailed(
                    "commutant is not semisimple; tensor is not a direct sum of irreducible blocks".into(),
                ));
            }
            subspaces.push(CMat::from_columns(&ns));
        }
        let s = hcat(&subspaces);
        let (w, blocks) = extract_blocks(a, &s, &ranges_of(&subspaces))?;
        let _ = w;
        let mut out = Vec::new();
        for (sk, bk) in subspaces.iter().zip(&blocks) {
            for t in split(bk, rng, depth + 1)? {
                out.push(sk * t);
            }
        }
        return Ok(out);
    }
    Err(Error::DecompositionFailed(
        "commutant is not semisimple; tensor is not a direct sum of irreducible blocks".into(),
    ))
}

/// Greedy clustering of eigenvalues; returns (center, size) per cluster.
fn cluster_values(values: &[C64]) -> Vec<(C64, usize)> {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut clusters: Vec<(C64, Vec<C64>)> = Vec::new();
    for &v in values {
        match clusters
            .iter_mut()
            .find(|(c, _)| (v - c).norm() <= CLUSTER_TOL * scale)
        {
            Some((c, members)) => {
                members.push(v);
                *c = members.iter().sum::<C64>() / members.len() as f64;
            }
            None => clusters.push((v, vec![v])),
        }
    }
    clusters.into_iter().map(|(c, m)| (c, m.len())).collect()
}

fn hcat(parts: &[CMat]) -> CMat {
    let cols: Vec<CVec> = parts
        .iter()
        .flat_map(|p| p.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
        .collect();
    CMat::from_columns(&cols)
}

fn ranges_of(parts: &[CMat]) -> Vec<Range<usize>> {
    let mut start = 0;
    parts
        .iter()
        .map(|p| {
            let r = start..start + p.ncols();
            start = r.end;
            r
        })
        .collect()
}

/// `W = S^{-1}` and the diagonal blocks `W_k A S_k`, checking that the
/// off-diagonal part vanishes.
fn extract_blocks(a: &SiteTensor, s: &CMat, ranges: &[Range<usize>]) -> Result<(CMat, Vec<SiteTensor>)> {
    let cond = condition_number(s)?;
    if !(cond < 1e12) {
        return Err(Error::DecompositionFailed(format!("block basis is ill-conditioned (cond {cond:e})")));
    }
    let w = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DecompositionFailed("block basis is singular".into()))?;
    let mut blocks: Vec<Vec<CMat>> = vec![Vec::new(); ranges.len()];
    let mut off = 0.0f64;
    let mut total = 0.0f64;
    for ai in a.mats() {
        let t = &w * ai * s;
        total += t.norm_squared();
        let mut inside = vec![usize::MAX; t.nrows()];
        for (k, r) in ranges.iter().enumerate() {
            blocks[k].push(t.view((r.start, r.start), (r.len(), r.len())).into_owned());
            inside[r.clone()].fill(k);
        }
        for (col, &kc) in inside.iter().enumerate() {
            for (row, &kr) in inside.iter().enumerate() {
                if kr != kc {
                    off += t[(row, col)].norm_sqr();
                }
            }
        }
    }
    let rel = if total > 0.0 { (off / total).sqrt() } else { 0.0 };
    if rel > 1e-8 * cond.max(1.0) {
        return Err(Error::DecompositionFailed(format!(
            "invariant subspaces do not decouple (off-diagonal weight {rel:.2e})"
        )));
    }
    let blocks = blocks.into_iter().map(SiteTensor::new).collect::<Result<Vec<_>>>()?;
    Ok((w, blocks))
}

struct Decomposition {
    bases: Vec<CMat>,
    blocks: Vec<SiteTensor>,
}

fn decompose(a: &SiteTensor, rng: &mut SeededRng) -> Result<Decomposition> {
    let bases = split(a, rng, 0)?;
    let s = hcat(&bases);
    let (_, blocks) = extract_blocks(a, &s, &ranges_of(&bases))?;
    Ok(Decomposition { bases, blocks })
}

// ---------------------------------------------------------------------------
// period

/// Period `p`: the lcm over irreducible blocks of the order of their
/// peripheral transfer eigenvalues.
pub fn detect_period(a: &SiteTensor, cfg: &StructureConfig) -> Result<usize> {
    require_square(a, "detect_period")?;
    let mut rng = seeded(cfg.seed);
    let dec = decompose(a, &mut rng)?;
    let scale = tensor_norm(a);
    let mut period = 1usize;
    for block in &dec.blocks {
        if tensor_norm(block) <= ZERO_BLOCK_TOL * scale {
            continue;
        }
        let spec = transfer_matrix(block, None)?.spectrum()?;
        let r = spec[0].norm();
        for v in spec.iter().map(|v| v / r).filter(|v| (v.norm() - 1.0).abs() <= PHASE_TOL) {
            let phase = v / v.norm();
            let p = (1..=cfg.max_period)
                .find(|&p| {
                    let turns = phase.arg() * p as f64 / std::f64::consts::TAU;
                    (turns - turns.round()).abs() * std::f64::consts::TAU <= PHASE_TOL * p as f64
                })
                .ok_or_else(|| {
                    Error::PeriodUndetected(format!(
                        "peripheral phase {:.12} is not a root of unity of order <= {}",
                        phase.arg(),
                        cfg.max_period
                    ))
                })?;
            period = lcm(period, p);
        }
    }
    Ok(period)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

// ---------------------------------------------------------------------------
// canonical form

/// One gauge class of the canonical form: a normal representative `A_j`
/// with spectral radius of `E_j` equal to one, repeated with weights `mu`.
#[derive(Clone, Debug)]
pub struct CfBlock {
    pub tensor: SiteTensor,
    pub mu: Vec<C64>,
}

impl CfBlock {
    pub fn bond(&self) -> usize {
        self.tensor.dl()
    }

    pub fn multiplicity(&self) -> usize {
        self.mu.len()
    }
}

/// `gauge * A_blocked * gauge^{-1} = scale * (⊕_j ⊕_q mu_{j,q} A_j) ⊕ 0_{null_dim}`,
/// where `A_blocked` groups `period` sites.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub period: usize,
    pub blocks: Vec<CfBlock>,
    pub gauge: CMat,
    /// Largest `|mu|` before normalization; all reported `|mu| <= 1`.
    pub scale: f64,
    /// Total dimension of the vanishing one-dimensional blocks.
    pub null_dim: usize,
}

impl CanonicalForm {
    pub fn bond(&self) -> usize {
        self.gauge.nrows()
    }

    /// Physical dimension of the blocked tensor.
    pub fn blocked_d(&self) -> usize {
        self.blocks.first().map(|b| b.tensor.d()).unwrap_or(0)
    }

    fn blocked_length(&self, n: usize) -> Result<usize> {
        if n == 0 || !n.is_multiple_of(self.period) {
            return invalid(format!("N = {n} is not a positive multiple of the period {}", self.period));
        }
        Ok(n / self.period)
    }

    /// `alpha_j(N) = sum_q mu_{j,q}^{N/p}`.
    pub fn weights(&self, n: usize) -> Result<Vec<C64>> {
        let nb = self.blocked_length(n)? as i32;
        Ok(self.blocks.iter().map(|b| b.mu.iter().map(|m| m.powi(nb)).sum()).collect())
    }

    /// Blocks with `alpha_j(N) = 0` at relative tolerance `1e-12` are inactive.
    pub fn active(&self, n: usize) -> Result<Vec<bool>> {
        let nb = self.blocked_length(n)? as i32;
        Ok(self
            .blocks
            .iter()
            .map(|b| {
                let sum: C64 = b.mu.iter().map(|m| m.powi(nb)).sum();
                let mag: f64 = b.mu.iter().map(|m| m.norm().powi(nb)).sum();
                sum.norm() > 1e-12 * mag
            })
            .collect())
    }

    /// `c_N = || sum_j alpha_j psi_j ||` with `psi_j` the representative states.
    pub fn normalization(&self, n: usize) -> Result<f64> {
        let nb = self.blocked_length(n)?;
        let alpha = self.weights(n)?;
        let mut total = C64::new(0.0, 0.0);
        for (j, bj) in self.blocks.iter().enumerate() {
            for (k, bk) in self.blocks.iter().enumerate() {
                let overlap = transfer_matrix(&bj.tensor, Some(&bk.tensor))?.trace_power(nb);
                total += alpha[k].conj() * alpha[j] * overlap;
            }
        }
        Ok(total.re.max(0.0).sqrt())
    }

    /// `scale^{N/p} sum_j alpha_j psi_j`, equal to the materialized input.
    pub fn materialize(&self, n: usize, cap: usize) -> Result<StateVector> {
        let nb = self.blocked_length(n)?;
        let alpha = self.weights(n)?;
        let factor = C64::new(self.scale.powi(nb as i32), 0.0);
        let mut acc: Option<StateVector> = None;
        for (b, w) in self.blocks.iter().zip(alpha) {
            let psi = TiMps::new(b.tensor.clone())?.materialize(nb, cap)?.scaled(w * factor);
            acc = Some(match acc {
                None => psi,
                Some(prev) => prev.add(&psi)?,
            });
        }
        match acc {
            Some(s) => Ok(s),
            None => StateVector::zeros(self.blocked_d().max(1), nb, cap),
        }
    }

    /// Block-diagonal tensor `scale * (⊕ mu A_j) ⊕ 0` in canonical coordinates.
    pub fn block_diagonal(&self) -> Result<SiteTensor> {
        let dim = self.bond();
        let d = self.blocked_d();
        let mut mats = vec![CMat::zeros(dim, dim); d];
        let mut off = 0;
        for b in &self.blocks {
            let bd = b.bond();
            for mu in &b.mu {
                for (i, m) in mats.iter_mut().enumerate() {
                    m.view_mut((off, off), (bd, bd))
                        .copy_from(&(b.tensor.mat(i) * (mu * self.scale)));
                }
                off += bd;
            }
        }
        SiteTensor::new(mats)
    }

    /// `gauge^{-1} * block_diagonal * gauge`, which reproduces the blocked input.
    pub fn reassemble(&self) -> Result<SiteTensor> {
        let inv = self
            .gauge
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DecompositionFailed("gauge is singular".into()))?;
        self.block_diagonal()?.map(|m| &inv * m * &self.gauge)
    }
}

struct ActiveBlock {
    basis: CMat,
    tensor: SiteTensor,
}

pub fn canonical_form(a: &SiteTensor, n: usize, cfg: &StructureConfig) -> Result<CanonicalForm> {
    require_square(a, "canonical_form")?;
    let period = detect_period(a, cfg)?;
    if n == 0 || !n.is_multiple_of(period) {
        return invalid(format!("period {period} does not divide N = {n}"));
    }
    let blocked = block_sites(a, period, cfg.amp_cap)?;
    let mut rng = seeded(cfg.seed.wrapping_add(1));
    let dec = decompose(&blocked, &mut rng)?;

    let input_norm = tensor_norm(&blocked);
    let mut null_bases = Vec::new();
    let mut active = Vec::new();
    for (basis, tensor) in dec.bases.into_iter().zip(dec.blocks) {
        if tensor_norm(&tensor) <= ZERO_BLOCK_TOL * input_norm {
            null_bases.push(basis);
        } else {
            active.push(ActiveBlock { basis, tensor });
        }
    }

    // Gauge classes: (representative, members as (mu_raw, basis in class gauge)).
    let mut classes: Vec<(SiteTensor, Vec<(C64, CMat)>)> = Vec::new();
    for blk in active {
        let spec = transfer_matrix(&blk.tensor, None)?.spectrum()?;
        let rho = spec[0].norm();
        let peripheral = spec.iter().filter(|v| v.norm() >= rho * (1.0 - PERIPHERAL_TOL)).count();
        if peripheral != 1 {
            return Err(Error::DecompositionFailed(format!(
                "irreducible block of dimension {} is not normal after blocking",
                blk.tensor.dl()
            )));
        }
        let unit = blk.tensor.scaled(C64::new(1.0 / rho.sqrt(), 0.0));
        let mut placed = false;
        for (rep, members) in classes.iter_mut() {
            if rep.dl() != unit.dl() {
                continue;
            }
            let lead = transfer_matrix(rep, Some(&unit))?.spectrum()?[0];
            if (lead.norm() - 1.0).abs() > EQUIVALENCE_TOL {
                continue;
            }
            let omega = lead.conj() / lead.norm();
            let y = intertwiner(&unit, rep, omega)?;
            members.push((omega * rho.sqrt(), &blk.basis * y));
            placed = true;
            break;
        }
        if !placed {
            classes.push((unit, vec![(C64::new(rho.sqrt(), 0.0), blk.basis)]));
        }
    }

    let scale = classes
        .iter()
        .flat_map(|(_, m)| m.iter().map(|(mu, _)| mu.norm()))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::DecompositionFailed("tensor has no non-vanishing block".into()));
    }

    for (rep, members) in classes.iter_mut() {
        members.sort_by_key(|(mu, _)| mu_key(*mu));
        // The leading member carries a real positive weight; the representative
        // absorbs its phase so that only relative phases remain in mu.
        let lead = members[0].0;
        let phase = lead / lead.norm();
        *rep = rep.scaled(phase);
        for (mu, _) in members.iter_mut() {
            *mu *= phase.conj() / scale;
        }
        members.sort_by_key(|(mu, _)| mu_key(*mu));
    }
    classes.sort_by_key(|(rep, members)| {
        let top = members.iter().map(|(mu, _)| mu.norm()).fold(0.0, f64::max);
        (std::cmp::Reverse(quantize(top)), std::cmp::Reverse(rep.dl()))
    });

    let mut columns: Vec<CMat> = Vec::new();
    let mut blocks = Vec::with_capacity(classes.len());
    for (rep, members) in classes {
        let mut mu = Vec::with_capacity(members.len());
        for (m, basis) in members {
            mu.push(m);
            columns.push(basis);
        }
        blocks.push(CfBlock { tensor: rep, mu });
    }
    let null_dim = null_bases.iter().map(|b| b.ncols()).sum();
    columns.extend(null_bases);
    let s = hcat(&columns);
    let gauge = s
        .try_inverse()
        .ok_or_else(|| Error::DecompositionFailed("assembled gauge is singular".into()))?;
    let cf = CanonicalForm {
        period,
        blocks,
        gauge,
        scale,
        null_dim,
    };

    let rebuilt = cf.reassemble()?;
    let err: f64 = rebuilt
        .mats()
        .iter()
        .zip(blocked.mats())
        .map(|(x, y)| (x - y).norm_squared())
        .sum::<f64>()
        .sqrt();
    if err > 1e-6 * input_norm {
        return Err(Error::DecompositionFailed(format!(
            "reassembly error {:.2e} relative to input",
            err / input_norm
        )));
    }
    Ok(cf)
}

/// Invertible `Y` with `unit^i Y = omega Y rep^i`.
fn intertwiner(unit: &SiteTensor, rep: &SiteTensor, omega: C64) -> Result<CMat> {
    let dim = rep.dl();
    let n = dim * dim;
    let eye = CMat::identity(dim, dim);
    let mut system = CMat::zeros(n * rep.d(), n);
    for i in 0..rep.d() {
        let block = eye.kronecker(unit.mat(i)) - rep.mat(i).transpose().kronecker(&eye) * omega;
        system.view_mut((i * n, 0), (n, n)).copy_from(&block);
    }
    let ns = null_space_abs(&system, COMMUTANT_TOL * (tensor_norm(unit) + tensor_norm(rep)))?;
    let y = ns
        .first()
        .map(|v| unvec_col(v, dim, dim))
        .ok_or_else(|| Error::DecompositionFailed("equivalent blocks have no intertwiner".into()))?;
    let cond = condition_number(&y)?;
    if !(cond < 1e12) {
        return Err(Error::DecompositionFailed(format!("intertwiner is singular (cond {cond:e})")));
    }
    Ok(y)
}

fn quantize(x: f64) -> i64 {
    (x * 1e8).round() as i64
}

/// Sort key for weights: modulus descending, then phase ascending.
fn mu_key(mu: C64) -> (std::cmp::Reverse<i64>, i64) {
    (std::cmp::Reverse(quantize(mu.norm())), quantize(mu.arg()))
}

// ---------------------------------------------------------------------------
// block injectivity and projectors

/// Orthonormal basis of `V_{j,L} = {sum_w Tr[X A_j^w] |w> : X}`.
fn block_subspace(a: &SiteTensor, length: usize, cfg: &StructureConfig) -> Result<Vec<CVec>> {
    let t = physical_realization(a, length, cfg.amp_cap)?;
    let cols: Vec<CVec> = t.column_iter().map(|c| c.into_owned()).collect();
    orthonormal_basis(&cols, cfg.tol_rank)
}

/// Rank of the concatenated spanning sets of all `V_{j,L}`.
pub fn joint_span_rank(cf: &CanonicalForm, length: usize, cfg: &StructureConfig) -> Result<usize> {
    let mut cols = Vec::new();
    for b in &cf.blocks {
        let t = physical_realization(&b.tensor, length, cfg.amp_cap)?;
        cols.extend(t.column_iter().map(|c| c.into_owned()));
    }
    Ok(svd(&CMat::from_columns(&cols))?.rank(cfg.tol_rank))
}

pub fn block_injectivity_length(cf: &CanonicalForm, cfg: &StructureConfig) -> Result<usize> {
    if cf.blocks.is_empty() {
        return invalid("canonical form has no blocks");
    }
    let mut l0 = 1;
    for b in &cf.blocks {
        l0 = l0.max(injectivity_length(&b.tensor, cfg)?);
    }
    let nblocks = cf.blocks.len();
    let cap = (3 * (nblocks - 1) * (l0 + 1)).max(l0);
    let needed: usize = cf.blocks.iter().map(|b| b.bond() * b.bond()).sum();
    for length in 1..=cap {
        checked_cap(cf.blocked_d(), length, cfg.amp_cap, "block-injectivity search")?;
        if joint_span_rank(cf, length, cfg)? == needed {
            return Ok(length);
        }
    }
    Err(Error::DecompositionSuspect { cap })
}

#[derive(Clone, Debug)]
pub struct BlockAngle {
    pub basis: Vec<CVec>,
    pub cos_theta: f64,
    pub projector: CMat,
    pub opnorm: f64,
    /// `1 / sin(theta)`.
    pub csc_theta: f64,
    /// `||P^2 - P||`.
    pub idempotency_error: f64,
    /// `||P v - v||` over the basis of `V_{i,L}`.
    pub range_error: f64,
    /// `||P v||` over a basis of the complement `V_{i,L}^c`.
    pub kernel_error: f64,
}

#[derive(Clone, Debug)]
pub struct AngleReport {
    pub length: usize,
    pub blocks: Vec<BlockAngle>,
}

pub fn block_projectors(cf: &CanonicalForm, length: usize, cfg: &StructureConfig) -> Result<AngleReport> {
    let required = block_injectivity_length(cf, cfg)?;
    if length < required {
        return Err(Error::NotBlockInjective { length, required });
    }
    let ambient = checked_cap(cf.blocked_d(), length, cfg.amp_cap, "block projector")?;
    checked_cap(ambient, 2, cfg.amp_cap, "dense block projector")?;
    let bases = cf
        .blocks
        .iter()
        .map(|b| block_subspace(&b.tensor, length, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut blocks = Vec::with_capacity(bases.len());
    for (i, own) in bases.iter().enumerate() {
        let others: Vec<CVec> = bases
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, b)| b.iter().cloned())
            .collect();
        let complement = orthonormal_basis(&others, cfg.tol_rank)?;
        let bi = CMat::from_columns(own);
        let (projector, cos_theta) = if complement.is_empty() {
            (&bi * bi.adjoint(), 0.0)
        } else {
            let bc = CMat::from_columns(&complement);
            let joint = hcat(&[bi.clone(), bc]);
            let g = pinv(&joint, cfg.tol_rank)?;
            let rows = g.rows(0, own.len()).into_owned();
            (&bi * rows, subspace_cosine(own, &complement)?)
        };
        let opnorm = spectral_norm(&projector)?;
        let sin2 = (1.0 - cos_theta * cos_theta).max(0.0);
        let csc_theta = if sin2 > 0.0 { 1.0 / sin2.sqrt() } else { f64::INFINITY };
        let idempotency_error = (&projector * &projector - &projector).norm();
        let range_error = (&projector * &bi - &bi).norm();
        let kernel_error = if complement.is_empty() {
            0.0
        } else {
            (&projector * CMat::from_columns(&complement)).norm()
        };
        blocks.push(BlockAngle {
            basis: own.clone(),
            cos_theta,
            projector,
            opnorm,
            csc_theta,
            idempotency_error,
            range_error,
            kernel_error,
        });
    }
    Ok(AngleReport { length, blocks })
}

// ---------------------------------------------------------------------------
// eta

#[derive(Clone, Debug)]
pub struct EtaReport {
    /// `Tr[rho_1^2]` of the one-site reduced state in the thermodynamic limit.
    pub eta: f64,
    pub rho1: CMat,
    /// `D^2 x d` matrix with columns `vec(A_L^i Λ^{1/2})`.
    pub factor: CMat,
    pub factor_rank: usize,
}

pub fn eta(a: &SiteTensor, cfg: &StructureConfig) -> Result<EtaReport> {
    let g = left_canonical(a)?;
    let sqrt_lambda = CMat::from_diagonal(&CVec::from_iterator(
        g.lambda.len(),
        g.lambda.iter().map(|l| C64::new(l.max(0.0).sqrt(), 0.0)),
    ));
    let cols: Vec<CVec> = g.a_l.mats().iter().map(|m| vec_col(&(m * &sqrt_lambda))).collect();
    let factor = CMat::from_columns(&cols);
    // (rho_1)_{ij} = Tr[A^i Λ A^j†] = <c_j, c_i>
    let rho1 = (factor.adjoint() * &factor).transpose();
    let eta = (&rho1 * &rho1).trace().re;
    let factor_rank = svd(&factor)?.rank(cfg.tol_rank);
    Ok(EtaReport {
        eta,
        rho1,
        factor,
        factor_rank,
    })
}

// ---------------------------------------------------------------------------
// product decomposition

#[derive(Clone, Debug)]
pub struct ProductTerm {
    pub beta: C64,
    /// Unit vector on a cluster of `cluster_size` sites.
    pub phi: CVec,
}

/// `psi = sum_i beta_i phi_i^{⊗ N/p}` for the unnormalized materialized state.
#[derive(Clone, Debug)]
pub struct ProductDecomposition {
    pub cluster_size: usize,
    pub clusters: usize,
    pub terms: Vec<ProductTerm>,
    /// Norm of the state the terms reproduce.
    pub state_norm: f64,
}

impl ProductDecomposition {
    /// Coefficients of the unit-norm state.
    pub fn normalized_coefficients(&self) -> Vec<C64> {
        self.terms
            .iter()
            .map(|t| if self.state_norm > 0.0 { t.beta / self.state_norm } else { t.beta })
            .collect()
    }

    pub fn reconstruct(&self, cap: usize) -> Result<StateVector> {
        let mut acc: Option<StateVector> = None;
        for t in &self.terms {
            let factors = vec![t.phi.clone(); self.clusters];
            let psi = StateVector::product(&factors, cap)?.scaled(t.beta);
            acc = Some(match acc {
                None => psi,
                Some(prev) => prev.add(&psi)?,
            });
        }
        acc.ok_or_else(|| Error::InvalidInput("decomposition has no terms".into()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionBlock {
    pub index: usize,
    pub bond: usize,
}

/// Canonical-form blocks of bond dimension above one, which rule out a
/// product decomposition.
#[derive(Clone, Debug)]
pub struct StructuralObstruction {
    pub blocks: Vec<ObstructionBlock>,
}

#[derive(Clone, Debug)]
pub enum ProductOutcome {
    Product(ProductDecomposition),
    Obstruction(StructuralObstruction),
}

pub fn product_decompose(a: &SiteTensor, n: usize, cfg: &StructureConfig) -> Result<ProductOutcome> {
    let cf = canonical_form(a, n, cfg)?;
    product_from_canonical(&cf, n)
}

pub fn product_from_canonical(cf: &CanonicalForm, n: usize) -> Result<ProductOutcome> {
    let wide: Vec<ObstructionBlock> = cf
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.bond() > 1)
        .map(|(index, b)| ObstructionBlock { index, bond: b.bond() })
        .collect();
    if !wide.is_empty() {
        return Ok(ProductOutcome::Obstruction(StructuralObstruction { blocks: wide }));
    }
    let alpha = cf.weights(n)?;
    let nb = n / cf.period;
    let factor = cf.scale.powi(nb as i32);
    let mut terms = Vec::with_capacity(cf.blocks.len());
    for (b, w) in cf.blocks.iter().zip(alpha) {
        let v = CVec::from_iterator(b.tensor.d(), b.tensor.mats().iter().map(|m| m[(0, 0)]));
        let norm = v.norm();
        let mut phi = v.unscale(norm);
        let first = phi.iter().copied().find(|z| z.norm() > 1e-10).unwrap_or(C64::new(1.0, 0.0));
        let phase = first / first.norm();
        phi.iter_mut().for_each(|z| *z /= phase);
        let pushed = (phase * norm).powi(nb as i32);
        terms.push(ProductTerm {
            beta: w * pushed * factor,
            phi,
        });
    }
    let state_norm = cf.normalization(n)? * factor;
    Ok(ProductOutcome::Product(ProductDecomposition {
        cluster_size: cf.period,
        clusters: nb,
        terms,
        state_norm,
    }))
}
