//! Permutations of particles, Schmidt spectra across arbitrary bipartitions,
//! certification of the MPS-under-permutations property, the rank-counting
//! probe, two inequality checkers and the ergodicity profile of a chain.
//!
//! Sites are 0-based in the API. A permutation `pi` moves the particle at
//! position `k` to position `pi(k)`.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::mps::{checked_cap, MpsChain, SiteTensor, StateVector, TiMps};
use crate::numkernel::{eigh, spectral_norm, superoperator, svd, vec_col, CMat, CVec, C64};
use crate::random::seeded;
use crate::structure::{injectivity_length, tensor_inverse, StructureConfig};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    /// `image[k] = pi(k)`, 0-based.
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; image.len()];
        for &x in &image {
            if x >= image.len() || std::mem::replace(&mut seen[x], true) {
                return invalid("permutation image is not a bijection");
            }
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Self {
        Self { image: (0..n).collect() }
    }

    /// Builds the permutation whose new arrangement lists `order[j]` at
    /// position `j`, i.e. `pi(order[j]) = j`.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let mut image = vec![usize::MAX; order.len()];
        for (j, &k) in order.iter().enumerate() {
            if k >= order.len() || image[k] != usize::MAX {
                return invalid("order is not a rearrangement of 0..N");
            }
            image[k] = j;
        }
        Ok(Self { image })
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn apply(&self, k: usize) -> usize {
        self.image[k]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.image.len()];
        for (k, &x) in self.image.iter().enumerate() {
            inv[x] = k;
        }
        Self { image: inv }
    }

    /// Particle found at each position after permuting: `order[pi(k)] = k`.
    pub fn order(&self) -> Vec<usize> {
        self.inverse().image
    }

    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut image: Vec<usize> = (0..n).collect();
        image.shuffle(rng);
        Self { image }
    }
}

/// `pi(2k-1) = k`, `pi(2k) = ceil(N/2) + k` in 1-based labels: odd
/// particles go to the first half, even particles to the second.
pub fn interleave_permutation(nt: usize) -> Result<Permutation> {
    if nt < 2 {
        return invalid("interleave permutation needs N >= 2");
    }
    let half = nt.div_ceil(2);
    let image = (0..nt).map(|k| if k % 2 == 0 { k / 2 } else { half + k / 2 }).collect();
    Permutation::new(image)
}

/// Particles `k, 2k, ..., N` (1-based) first, then the rest in order.
pub fn comb_permutation(n: usize, k: usize) -> Result<Permutation> {
    if k == 0 || n == 0 || !n.is_multiple_of(k) {
        return invalid(format!("comb permutation needs k | N, got N = {n}, k = {k}"));
    }
    let mut order: Vec<usize> = (0..n).filter(|j| (j + 1) % k == 0).collect();
    order.extend((0..n).filter(|j| (j + 1) % k != 0));
    Permutation::from_order(&order)
}

/// `U_pi psi`: the digit of particle `k` lands at position `pi(k)`.
pub fn permute_state(psi: &StateVector, pi: &Permutation) -> Result<StateVector> {
    if pi.len() != psi.n() {
        return invalid(format!("permutation of {} sites applied to {} sites", pi.len(), psi.n()));
    }
    let dims = vec![psi.d(); psi.n()];
    let amps = permute_modes(psi.amps(), &dims, pi);
    StateVector::new(psi.d(), psi.n(), amps)
}

// ---------------------------------------------------------------------------
// mixed-radix tensors (big-endian modes)

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Moves mode `k` to position `pi(k)`.
fn permute_modes(amps: &[C64], dims: &[usize], pi: &Permutation) -> Vec<C64> {
    let mut new_dims = vec![0; dims.len()];
    for (k, &dk) in dims.iter().enumerate() {
        new_dims[pi.apply(k)] = dk;
    }
    let new_strides = strides(&new_dims);
    // Stride in the output of each input mode.
    let target: Vec<usize> = (0..dims.len()).map(|k| new_strides[pi.apply(k)]).collect();
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    let mut digits = vec![0usize; dims.len()];
    let mut pos = 0usize;
    for &z in amps {
        out[pos] = z;
        // increment the big-endian counter over input modes
        for k in (0..dims.len()).rev() {
            digits[k] += 1;
            pos += target[k];
            if digits[k] < dims[k] {
                break;
            }
            pos -= target[k] * dims[k];
            digits[k] = 0;
        }
    }
    out
}

/// Applies `m` (rows x dims[k]) to mode `k`.
fn apply_mode(amps: &[C64], dims: &[usize], k: usize, m: &CMat) -> (Vec<C64>, Vec<usize>) {
    let left: usize = dims[..k].iter().product();
    let right: usize = dims[k + 1..].iter().product();
    let (rows, cols) = m.shape();
    let mut out = vec![C64::new(0.0, 0.0); left * rows * right];
    for l in 0..left {
        for j in 0..cols {
            let src = &amps[(l * cols + j) * right..(l * cols + j + 1) * right];
            for r in 0..rows {
                let coef = m[(r, j)];
                if coef == C64::new(0.0, 0.0) {
                    continue;
                }
                let dst = &mut out[(l * rows + r) * right..(l * rows + r + 1) * right];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += coef * s;
                }
            }
        }
    }
    let mut new_dims = dims.to_vec();
    new_dims[k] = rows;
    (out, new_dims)
}

/// Row-major reshape of the first `m` modes against the rest.
fn cut_matrix(amps: &[C64], dims: &[usize], m: usize) -> CMat {
    let rows: usize = dims[..m].iter().product();
    let cols: usize = dims[m..].iter().product();
    CMat::from_row_slice(rows, cols, amps)
}

// ---------------------------------------------------------------------------
// bipartitions and Schmidt spectra

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bipartition {
    n: usize,
    sites: Vec<usize>,
}

impl Bipartition {
    /// `sites` is a nonempty proper subset of `0..n`.
    pub fn new(n: usize, mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        sites.dedup();
        if sites.is_empty() || sites.len() >= n || sites.iter().any(|&s| s >= n) {
            return invalid(format!("bipartition {sites:?} is not a nonempty proper subset of {n} sites"));
        }
        Ok(Self { n, sites })
    }

    /// First `m` sites.
    pub fn contiguous(n: usize, m: usize) -> Result<Self> {
        Self::new(n, (0..m).collect())
    }

    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        Self::new(n, (0..n).filter(|k| mask >> k & 1 == 1).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            sites: (0..self.n).filter(|k| !self.sites.contains(k)).collect(),
        }
    }

    /// Moves the subset to the front, both halves keeping their order.
    pub fn to_front(&self) -> Permutation {
        let mut order = self.sites.clone();
        order.extend((0..self.n).filter(|k| !self.sites.contains(k)));
        Permutation::from_order(&order).expect("subset and complement partition the sites")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SchmidtReport {
    pub bipartition: Bipartition,
    /// Descending singular values of the `d^|S| x d^(N-|S|)` reshape.
    pub sigma: Vec<f64>,
    pub rank: usize,
    pub norm: f64,
}

impl SchmidtReport {
    /// `sqrt(sum_{i >= D} sigma_i^2) / ||psi||`, the optimal relative error
    /// of a Schmidt-rank-`D` approximation.
    pub fn truncation_error(&self, bond: usize) -> f64 {
        if self.norm == 0.0 {
            return 0.0;
        }
        let tail: f64 = self.sigma.iter().skip(bond).map(|s| s * s).sum();
        (tail.sqrt() / self.norm).min(1.0)
    }

    pub fn purity(&self) -> f64 {
        if self.norm == 0.0 {
            return 0.0;
        }
        self.sigma.iter().map(|s| s.powi(4)).sum::<f64>() / self.norm.powi(4)
    }
}

pub fn schmidt_spectrum(psi: &StateVector, s: &Bipartition, tol: f64) -> Result<SchmidtReport> {
    if s.n() != psi.n() {
        return invalid(format!("bipartition of {} sites for a state of {} sites", s.n(), psi.n()));
    }
    let dims = vec![psi.d(); psi.n()];
    let moved = permute_modes(psi.amps(), &dims, &s.to_front());
    let sv = svd(&cut_matrix(&moved, &dims, s.sites().len()))?;
    let rank = sv.rank(tol);
    Ok(SchmidtReport {
        bipartition: s.clone(),
        sigma: sv.sigma,
        rank,
        norm: psi.norm(),
    })
}

pub fn subsystem_purity(psi: &StateVector, s: &Bipartition) -> Result<f64> {
    Ok(schmidt_spectrum(psi, s, crate::numkernel::DEFAULT_RANK_TOL)?.purity())
}

// ---------------------------------------------------------------------------
// certification

#[derive(Clone, Debug, Serialize)]
pub struct PermutationResult {
    /// Particle order after permuting (0-based labels).
    pub order: Vec<usize>,
    /// Worst relative truncation error over contiguous cuts.
    pub eps: f64,
    /// Number of particles left of the worst cut.
    pub worst_cut: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertReport {
    pub bond: usize,
    pub permutations: Vec<PermutationResult>,
    pub eps_star: f64,
    /// Index into `permutations` attaining `eps_star`.
    pub worst: usize,
}

impl CertReport {
    pub fn pass(&self, eps: f64) -> bool {
        self.eps_star <= eps
    }
}

/// Exhaustive for `N <= 8`; otherwise the identity, the interleave and comb
/// permutations, and `samples` seeded uniform draws.
pub fn permutation_family(n: usize, samples: usize, seed: u64) -> Result<Vec<Permutation>> {
    if n == 0 {
        return invalid("permutation family needs N >= 1");
    }
    if n <= 8 {
        return Ok(all_permutations(n));
    }
    let mut family = vec![Permutation::identity(n), interleave_permutation(n)?];
    for k in 2..n {
        if n.is_multiple_of(k) {
            family.push(comb_permutation(n, k)?);
        }
    }
    let mut rng = seeded(seed);
    family.extend((0..samples).map(|_| Permutation::random(n, &mut rng)));
    let mut seen = BTreeSet::new();
    family.retain(|p| seen.insert(p.clone()));
    Ok(family)
}

fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(Permutation { image: current.clone() });
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).expect("successor exists");
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

pub fn certify_mps_up(psi: &StateVector, bond: usize, perms: &[Permutation], tol: f64) -> Result<CertReport> {
    let n = psi.n();
    if n > 64 {
        return invalid("certification supports at most 64 sites");
    }
    if perms.is_empty() {
        return invalid("certification needs at least one permutation");
    }
    if let Some(p) = perms.iter().find(|p| p.len() != n) {
        return invalid(format!("permutation of {} sites for a state of {n} sites", p.len()));
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let key = |mask: u64| mask.min(full & !mask);

    // Each contiguous cut of a permuted state is the bipartition of the
    // particles placed left of the cut; errors depend only on that subset.
    let mut cuts_per_perm = Vec::with_capacity(perms.len());
    let mut needed = BTreeSet::new();
    for p in perms {
        let order = p.order();
        let mut mask = 0u64;
        let mut keys = Vec::with_capacity(n.saturating_sub(1));
        for &particle in order.iter().take(n - 1) {
            mask |= 1 << particle;
            let k = key(mask);
            needed.insert(k);
            keys.push(k);
        }
        cuts_per_perm.push(keys);
    }
    let needed: Vec<u64> = needed.into_iter().collect();
    let errors: Vec<f64> = needed
        .par_iter()
        .map(|&mask| {
            let s = Bipartition::from_mask(n, mask)?;
            Ok(schmidt_spectrum(psi, &s, tol)?.truncation_error(bond))
        })
        .collect::<Result<Vec<_>>>()?;
    let table: HashMap<u64, f64> = needed.into_iter().zip(errors).collect();

    let permutations: Vec<PermutationResult> = perms
        .iter()
        .zip(&cuts_per_perm)
        .map(|(p, keys)| {
            let (worst_cut, eps) = keys
                .iter()
                .enumerate()
                .map(|(m, k)| (m + 1, table[k]))
                .fold((0, 0.0f64), |best, cur| if cur.1 > best.1 { cur } else { best });
            PermutationResult {
                order: p.order(),
                eps,
                worst_cut,
            }
        })
        .collect();
    let (worst, eps_star) = permutations
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, r)| if r.eps > best.1 { (i, r.eps) } else { best });
    Ok(CertReport {
        bond,
        permutations,
        eps_star,
        worst,
    })
}

// ---------------------------------------------------------------------------
// rank counting

#[derive(Clone, Debug, Serialize)]
pub struct RankProbe {
    pub predicted: u128,
    pub measured: usize,
    /// Sites grouped into each inverted block.
    pub block_lengths: Vec<usize>,
}

impl RankProbe {
    pub fn matches(&self) -> bool {
        self.predicted == self.measured as u128
    }
}

/// Blocks the TI state into `Ñ = floor(N / L_I)` injective blocks, applies
/// their left inverses, interleaves and measures the half-cut rank.
pub fn rank_counting_probe_ti(a: &TiMps, n: usize, cfg: &StructureConfig) -> Result<RankProbe> {
    let bond = a.bond();
    let li = injectivity_length(a.tensor(), cfg)?;
    let nt = n / li;
    if nt < 2 {
        return invalid(format!("N = {n} gives fewer than two blocks of length {li}"));
    }
    let extra = n - nt * li;
    let lengths: Vec<usize> = (0..nt).map(|k| if k < extra { li + 1 } else { li }).collect();
    checked_cap(bond * bond, nt, cfg.amp_cap, "inverted state")?;
    let psi = a.materialize(n, cfg.amp_cap)?;
    let mut inverses = HashMap::new();
    for &len in &lengths {
        if let std::collections::hash_map::Entry::Vacant(e) = inverses.entry(len) {
            e.insert(tensor_inverse(a.tensor(), len, cfg)?.matrix);
        }
    }
    let mut dims: Vec<usize> = lengths.iter().map(|&len| a.d().pow(len as u32)).collect();
    let mut amps = psi.into_amps();
    for (k, len) in lengths.iter().enumerate() {
        (amps, dims) = apply_mode(&amps, &dims, k, &inverses[len]);
    }
    let measured = interleaved_cut_rank(&amps, &dims, cfg.tol_rank)?;
    let predicted = (bond as u128).pow(2 * (nt / 2) as u32);
    Ok(RankProbe {
        predicted,
        measured,
        block_lengths: lengths,
    })
}

/// Per-site version for a chain of individually injective sites; the
/// boundary matrix is absorbed into the first site.
pub fn rank_counting_probe_chain(chain: &MpsChain, cfg: &StructureConfig) -> Result<RankProbe> {
    let n = chain.len();
    if n < 2 {
        return invalid("rank counting needs at least two sites");
    }
    let closed = chain.with_trace_boundary()?;
    let pair_dims: Vec<usize> = closed.sites().iter().map(|s| s.dl() * s.dr()).collect();
    let total = pair_dims
        .iter()
        .try_fold(1usize, |acc, &x| acc.checked_mul(x))
        .filter(|&t| t <= cfg.amp_cap)
        .ok_or_else(|| Error::TooLarge {
            what: "inverted chain state".into(),
            needed: pair_dims.iter().map(|&x| x as u128).product(),
            cap: cfg.amp_cap as u128,
        })?;
    let _ = total;
    let psi = closed.materialize(cfg.amp_cap)?;
    let mut dims = vec![chain.d(); n];
    let mut amps = psi.into_amps();
    for (k, site) in closed.sites().iter().enumerate() {
        (amps, dims) = apply_mode(&amps, &dims, k, &site_inverse(site, cfg.tol_rank)?);
    }
    let measured = interleaved_cut_rank(&amps, &dims, cfg.tol_rank)?;
    let bonds = closed.bond_dims();
    let start = if n.is_multiple_of(2) { 0 } else { 1 };
    let predicted = bonds[start..].iter().map(|&b| b as u128).product();
    Ok(RankProbe {
        predicted,
        measured,
        block_lengths: vec![1; n],
    })
}

fn site_inverse(site: &SiteTensor, tol: f64) -> Result<CMat> {
    let t = site.bond_by_physical().transpose();
    let needed = site.dl() * site.dr();
    let rank = svd(&t)?.rank(tol);
    if rank < needed {
        return Err(Error::NotInjective { length: 1, rank, needed });
    }
    crate::numkernel::pinv(&t, tol)
}

fn interleaved_cut_rank(amps: &[C64], dims: &[usize], tol: f64) -> Result<usize> {
    let nt = dims.len();
    let pi = interleave_permutation(nt)?;
    let moved = permute_modes(amps, dims, &pi);
    let mut new_dims = vec![0; nt];
    for (k, &dk) in dims.iter().enumerate() {
        new_dims[pi.apply(k)] = dk;
    }
    Ok(svd(&cut_matrix(&moved, &new_dims, nt.div_ceil(2)))?.rank(tol))
}

// ---------------------------------------------------------------------------
// inequality checkers

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Slack allowed in the inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-12;

fn require_unit(psi: &StateVector, what: &str) -> Result<()> {
    let n = psi.norm();
    if (n - 1.0).abs() > 1e-10 {
        return invalid(format!("{what} has norm {n}, expected 1"));
    }
    Ok(())
}

/// `|Tr rho_1^2 - Tr rho_2^2| <= 4 ||psi_1 - psi_2||` on subsystem `S`.
pub fn purity_gap_bound_check(psi1: &StateVector, psi2: &StateVector, s: &Bipartition) -> Result<InequalityCheck> {
    psi1.same_shape(psi2)?;
    require_unit(psi1, "psi1")?;
    require_unit(psi2, "psi2")?;
    let lhs = (subsystem_purity(psi1, s)? - subsystem_purity(psi2, s)?).abs();
    let rhs = 4.0 * psi1.distance(psi2)?;
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + INEQUALITY_SLACK,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapCloseness {
    pub distance: f64,
    pub bound: f64,
    pub holds: bool,
    pub gap: f64,
    pub energies: [f64; 2],
}

/// For `H >= 0` with unique ground state and gap `Δ`, two states of energy at
/// most `ε` are within `2 sqrt(ε / Δ)` once both are phase-aligned with the
/// ground state.
pub fn gap_closeness_bound(h: &CMat, psi1: &StateVector, psi2: &StateVector) -> Result<GapCloseness> {
    psi1.same_shape(psi2)?;
    require_unit(psi1, "psi1")?;
    require_unit(psi2, "psi2")?;
    let dim = psi1.amps().len();
    if h.shape() != (dim, dim) {
        return invalid(format!("Hamiltonian is {}x{}, states have dimension {dim}", h.nrows(), h.ncols()));
    }
    if (h - h.adjoint()).norm() > 1e-10 * h.norm().max(1.0) {
        return invalid("Hamiltonian is not Hermitian");
    }
    let e = eigh(h)?;
    if e.values[0].abs() > 1e-9 {
        return invalid(format!("ground energy is {:e}, expected 0", e.values[0]));
    }
    if dim < 2 || e.values[1] - e.values[0] <= 1e-9 {
        return invalid("ground space is degenerate");
    }
    let gap = e.values[1] - e.values[0];
    let ground: CVec = e.vectors.column(0).into_owned();
    let align = |psi: &StateVector| -> (CVec, f64) {
        let mut v = psi.as_cvec();
        let ov = ground.dotc(&v);
        if ov.norm() > 0.0 {
            v *= ov.conj() / ov.norm();
        }
        let energy = v.dotc(&(h * &v)).re.max(0.0);
        (v, energy)
    };
    let (v1, e1) = align(psi1);
    let (v2, e2) = align(psi2);
    let distance = (v1 - v2).norm();
    let bound = 2.0 * (e1.max(e2) / gap).sqrt();
    Ok(GapCloseness {
        distance,
        bound,
        holds: distance <= bound + INEQUALITY_SLACK,
        gap,
        energies: [e1, e2],
    })
}

// ---------------------------------------------------------------------------
// ergodicity

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicityReport {
    /// `(x, s, ||E_{x,x+s} - sigma_x Tr||)` over all start sites `x` and separations `s`.
    pub distances: Vec<(usize, usize, f64)>,
    /// `(s, max_x d(x, x+s))`.
    pub profile: Vec<(usize, f64)>,
    pub xi: f64,
    pub c: f64,
    pub r_squared: f64,
    /// Set when every distance is below `1e-14`.
    pub exact_replacement: bool,
}

const DISTANCE_FLOOR: f64 = 1e-14;

/// Channels `Φ_k(X) = sum_i A_k^i X A_k^i†` composed as
/// `E_{x,y} = Φ_x ∘ ... ∘ Φ_y`, compared against the replacement channel
/// `X -> sigma_x Tr X`, where `sigma_x` is the normalized image of the
/// identity under the longest available composition. The distances decay
/// only for trace-preserving channels (`sum_i A^i† A^i = I`, as produced by
/// [`crate::mps::left_canonical`]).
pub fn ergodicity_profile(chain: &MpsChain, max_sep: usize) -> Result<ErgodicityReport> {
    let n = chain.len();
    for (k, s) in chain.sites().iter().enumerate() {
        if !s.is_square() {
            return invalid(format!("site {} has non-square bonds", k + 1));
        }
        let r = crate::mps::transfer_matrix(s, None)?.spectral_radius()?;
        if r > 1.0 + 1e-9 {
            return invalid(format!("site {} is not normalized (transfer radius {r})", k + 1));
        }
    }
    let dim = chain.sites()[0].dl();
    let superops: Vec<CMat> = chain
        .sites()
        .iter()
        .map(|s| superoperator(dim, dim, |x| s.channel(x)))
        .collect();

    let mut sigmas = vec![CMat::identity(dim, dim); n];
    let mut acc = CMat::identity(dim, dim);
    for x in (0..n).rev() {
        acc = chain.sites()[x].channel(&acc);
        let tr = acc.trace();
        if tr.norm() == 0.0 {
            return invalid(format!("channel product from site {} annihilates the identity", x + 1));
        }
        acc /= tr;
        sigmas[x] = acc.clone();
    }
    let trace_row = vec_col(&CMat::identity(dim, dim)).adjoint();

    let rows: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let replacement = vec_col(&sigmas[x]) * &trace_row;
            let mut prod = CMat::identity(dim * dim, dim * dim);
            let mut out = Vec::new();
            for (s, op) in superops[x..n.min(x + max_sep + 1)].iter().enumerate() {
                prod = &prod * op;
                out.push((x, s, spectral_norm(&(&prod - &replacement))?));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let distances: Vec<(usize, usize, f64)> = rows.into_iter().flatten().collect();

    let mut profile: Vec<(usize, f64)> = Vec::new();
    for &(_, s, d) in &distances {
        if s >= profile.len() {
            profile.resize(s + 1, (0, 0.0));
        }
        profile[s] = (s, profile[s].1.max(d));
    }
    let points: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(_, d)| *d > DISTANCE_FLOOR)
        .map(|&(s, d)| (s as f64, d.ln()))
        .collect();
    if points.is_empty() {
        return Ok(ErgodicityReport {
            distances,
            profile,
            xi: 0.0,
            c: 0.0,
            r_squared: 1.0,
            exact_replacement: true,
        });
    }
    let (slope, intercept, r_squared) = linear_fit(&points);
    let xi = if slope < 0.0 { -1.0 / slope } else { f64::INFINITY };
    Ok(ErgodicityReport {
        distances,
        profile,
        xi,
        c: intercept.exp(),
        r_squared,
        exact_replacement: false,
    })
}

/// Least squares `y = slope x + intercept`, with the coefficient of determination.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my, 1.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r_squared)
}
