//! Matrix product states: site tensors, chains, dense materialization,
//! transfer matrices, blocking, gauges and the left-canonical gauge.
//!
//! Amplitude indices are big-endian: for `N` sites of dimension `d` the basis
//! string `i_1 ... i_N` sits at `sum_k i_k d^(N-k)`, so site 1 is the most
//! significant digit and a contiguous cut after site `m` is a plain
//! `d^m x d^(N-m)` row-major reshape.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numkernel::{
    condition_number, eig, eigh, psd_sqrt, superoperator, unvec_col, CMat, CVec, C64,
};

/// Default limit on the number of amplitudes of any dense state.
pub const DEFAULT_AMP_CAP: usize = 1 << 24;

/// Tensor `A^{i}_{a b}` with physical index `i < d` and bond indices
/// `a < dl`, `b < dr`, stored as `d` matrices of shape `dl x dr`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    mats: Vec<CMat>,
}

impl SiteTensor {
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return invalid("site tensor needs physical dimension >= 1");
        };
        let (dl, dr) = first.shape();
        if dl == 0 || dr == 0 {
            return invalid("site tensor bond dimensions must be >= 1");
        }
        if mats.iter().any(|m| m.shape() != (dl, dr)) {
            return invalid("site tensor matrices have different shapes");
        }
        if !mats.iter().all(crate::numkernel::is_finite) {
            return invalid("site tensor has non-finite entries");
        }
        Ok(Self { mats })
    }

    pub fn from_fn(d: usize, dl: usize, dr: usize, f: impl Fn(usize, usize, usize) -> C64) -> Result<Self> {
        Self::new((0..d).map(|i| CMat::from_fn(dl, dr, |a, b| f(i, a, b))).collect())
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    pub fn dl(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn dr(&self) -> usize {
        self.mats[0].ncols()
    }

    pub fn is_square(&self) -> bool {
        self.dl() == self.dr()
    }

    pub fn mats(&self) -> &[CMat] {
        &self.mats
    }

    pub fn mat(&self, i: usize) -> &CMat {
        &self.mats[i]
    }

    pub fn entry(&self, i: usize, a: usize, b: usize) -> C64 {
        self.mats[i][(a, b)]
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            mats: self.mats.iter().map(|m| m * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Result<Self> {
        Self::new(self.mats.iter().map(f).collect())
    }

    /// Realization as a `D_l D_r x d` matrix: column `i` is the column-major
    /// vectorization of `A^i`.
    pub fn bond_by_physical(&self) -> CMat {
        let cols: Vec<CVec> = self.mats.iter().map(crate::numkernel::vec_col).collect();
        CMat::from_columns(&cols)
    }

    /// Channel `X -> sum_i A^i X A^i†`.
    pub fn channel(&self, x: &CMat) -> CMat {
        self.mats
            .iter()
            .fold(CMat::zeros(self.dl(), self.dl()), |acc, a| acc + a * x * a.adjoint())
    }

    /// Dual channel `X -> sum_i A^i† X A^i`.
    pub fn dual_channel(&self, x: &CMat) -> CMat {
        self.mats
            .iter()
            .fold(CMat::zeros(self.dr(), self.dr()), |acc, a| acc + a.adjoint() * x * a)
    }

    fn require_square(&self, what: &str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            invalid(format!("{what}: bonds are {}x{}, need square", self.dl(), self.dr()))
        }
    }
}

/// Translation-invariant MPS tensor (square bonds, trace boundary).
#[derive(Clone, Debug, PartialEq)]
pub struct TiMps {
    tensor: SiteTensor,
}

impl TiMps {
    pub fn new(tensor: SiteTensor) -> Result<Self> {
        tensor.require_square("TI MPS")?;
        Ok(Self { tensor })
    }

    pub fn tensor(&self) -> &SiteTensor {
        &self.tensor
    }

    pub fn bond(&self) -> usize {
        self.tensor.dl()
    }

    pub fn d(&self) -> usize {
        self.tensor.d()
    }

    pub fn to_chain(&self, n: usize) -> Result<MpsChain> {
        MpsChain::new(vec![self.tensor.clone(); n], Boundary::Trace)
    }

    /// `Tr[A^{i_1} ... A^{i_N}]` for every basis string; no normalization.
    pub fn materialize(&self, n: usize, cap: usize) -> Result<StateVector> {
        if n == 0 {
            return invalid("materialize: N must be >= 1");
        }
        materialize_sites(&vec![&self.tensor; n], None, cap)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    /// Periodic closure, `Tr[A^{[1]} ... A^{[N]}]`.
    Trace,
    /// `Tr[X A^{[1]} ... A^{[N]}]` with `X` of shape `D_{N+1} x D_1`.
    Matrix(CMat),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsChain {
    sites: Vec<SiteTensor>,
    boundary: Boundary,
}

impl MpsChain {
    pub fn new(sites: Vec<SiteTensor>, boundary: Boundary) -> Result<Self> {
        if sites.is_empty() {
            return invalid("chain needs at least one site");
        }
        let d = sites[0].d();
        for (k, s) in sites.iter().enumerate() {
            if s.d() != d {
                return invalid(format!("physical dimension mismatch at site {}", k + 1));
            }
            if k > 0 && sites[k - 1].dr() != s.dl() {
                return invalid(format!("bond mismatch at site {}", k + 1));
            }
        }
        let d_first = sites[0].dl();
        let d_last = sites[sites.len() - 1].dr();
        match &boundary {
            Boundary::Trace if d_first != d_last => {
                return invalid(format!(
                    "bond mismatch at site 1: trace closure needs D_(N+1) = D_1, got {d_last} and {d_first}"
                ))
            }
            Boundary::Matrix(x) if x.shape() != (d_last, d_first) => {
                return invalid(format!(
                    "boundary matrix is {}x{}, chain needs {d_last}x{d_first}",
                    x.nrows(),
                    x.ncols()
                ))
            }
            _ => {}
        }
        if let Boundary::Matrix(x) = &boundary {
            if !crate::numkernel::is_finite(x) {
                return invalid("boundary matrix has non-finite entries");
            }
        }
        Ok(Self { sites, boundary })
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn d(&self) -> usize {
        self.sites[0].d()
    }

    /// Left bond dimensions `D_[1], ..., D_[N]`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dl()).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.dl().max(s.dr())).max().unwrap_or(1)
    }

    pub fn materialize(&self, cap: usize) -> Result<StateVector> {
        let refs: Vec<&SiteTensor> = self.sites.iter().collect();
        let closing = match &self.boundary {
            Boundary::Trace => None,
            Boundary::Matrix(x) => Some(x),
        };
        materialize_sites(&refs, closing, cap)
    }

    /// Same state with the boundary matrix absorbed into the first site, so
    /// the closure is a plain trace.
    pub fn with_trace_boundary(&self) -> Result<Self> {
        match &self.boundary {
            Boundary::Trace => Ok(self.clone()),
            Boundary::Matrix(x) => {
                let mut sites = self.sites.clone();
                sites[0] = sites[0].map(|a| x * a)?;
                Self::new(sites, Boundary::Trace)
            }
        }
    }
}

/// Dense amplitudes in `(C^d)^{⊗N}`, big-endian index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    d: usize,
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(d: usize, n: usize, amps: Vec<C64>) -> Result<Self> {
        if d == 0 || n == 0 {
            return invalid("state vector needs d >= 1 and N >= 1");
        }
        let len = checked_pow(d, n).ok_or_else(|| Error::TooLarge {
            what: "state vector".into(),
            needed: u128::MAX,
            cap: usize::MAX as u128,
        })?;
        if amps.len() != len {
            return invalid(format!("state vector has {} amplitudes, d^N = {len}", amps.len()));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("state vector has non-finite amplitudes");
        }
        Ok(Self { d, n, amps })
    }

    pub fn zeros(d: usize, n: usize, cap: usize) -> Result<Self> {
        let len = checked_cap(d, n, cap, "state vector")?;
        Ok(Self {
            d,
            n,
            amps: vec![C64::new(0.0, 0.0); len],
        })
    }

    /// Product state `v_1 ⊗ ... ⊗ v_N`.
    pub fn product(factors: &[CVec], cap: usize) -> Result<Self> {
        let Some(first) = factors.first() else {
            return invalid("product state needs at least one factor");
        };
        let d = first.len();
        if factors.iter().any(|f| f.len() != d) {
            return invalid("product factors have different dimensions");
        }
        checked_cap(d, factors.len(), cap, "product state")?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for f in factors {
            let mut next = Vec::with_capacity(amps.len() * d);
            for a in &amps {
                for x in f.iter() {
                    next.push(a * x);
                }
            }
            amps = next;
        }
        Self::new(d, factors.len(), amps)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn amp(&self, digits: &[usize]) -> C64 {
        self.amps[self.index_of(digits)]
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &x| acc * self.d + x)
    }

    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for k in (0..self.n).rev() {
            out[k] = index % self.d;
            index /= self.d;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(C64::new(1.0 / n, 0.0))
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            d: self.d,
            n: self.n,
            amps: self.amps.iter().map(|z| z * s).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            d: self.d,
            n: self.n,
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            d: self.d,
            n: self.n,
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.d != other.d || self.n != other.n {
            return invalid(format!(
                "state shapes differ: (d={}, N={}) vs (d={}, N={})",
                self.d, self.n, other.d, other.n
            ));
        }
        Ok(())
    }

    pub fn as_cvec(&self) -> CVec {
        CVec::from_column_slice(&self.amps)
    }
}

pub(crate) fn checked_pow(d: usize, n: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..n {
        acc = acc.checked_mul(d)?;
    }
    Some(acc)
}

/// `d^n` if it fits under `cap`, else `TooLarge`.
pub(crate) fn checked_cap(d: usize, n: usize, cap: usize, what: &str) -> Result<usize> {
    match checked_pow(d, n) {
        Some(len) if len <= cap => Ok(len),
        other => Err(Error::TooLarge {
            what: what.to_string(),
            needed: other.map(|v| v as u128).unwrap_or(u128::MAX),
            cap: cap as u128,
        }),
    }
}

fn materialize_sites(sites: &[&SiteTensor], closing: Option<&CMat>, cap: usize) -> Result<StateVector> {
    let d = sites[0].d();
    let n = sites.len();
    let len = checked_cap(d, n, cap, "materialized state")?;
    for k in 1..n {
        if sites[k - 1].dr() != sites[k].dl() || sites[k].d() != d {
            return invalid(format!("bond mismatch at site {}", k + 1));
        }
    }
    let d_first = sites[0].dl();
    let d_last = sites[n - 1].dr();
    if closing.is_none() && d_first != d_last {
        return invalid("bond mismatch at site 1: trace closure");
    }
    let mut amps = vec![C64::new(0.0, 0.0); len];
    // One sweep per left boundary index `a`; `row` holds the partial
    // products <a| A^{i_1} ... A^{i_k}, indexed by (prefix, right bond).
    for a in 0..d_first {
        let mut width = sites[0].dr();
        let mut row: Vec<C64> = Vec::with_capacity(d * width);
        for i in 0..d {
            row.extend(sites[0].mat(i).row(a).iter().copied());
        }
        for site in &sites[1..] {
            let next_width = site.dr();
            let prefixes = row.len() / width;
            let mut next = vec![C64::new(0.0, 0.0); prefixes * d * next_width];
            for p in 0..prefixes {
                let left = &row[p * width..(p + 1) * width];
                for i in 0..d {
                    let m = site.mat(i);
                    let out = &mut next[(p * d + i) * next_width..(p * d + i + 1) * next_width];
                    for (b, &lb) in left.iter().enumerate() {
                        if lb == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for (cidx, o) in out.iter_mut().enumerate() {
                            *o += lb * m[(b, cidx)];
                        }
                    }
                }
            }
            row = next;
            width = next_width;
        }
        for (p, amp) in amps.iter_mut().enumerate() {
            let partial = &row[p * width..(p + 1) * width];
            *amp += match closing {
                None => partial[a],
                Some(x) => partial.iter().enumerate().map(|(b, v)| v * x[(b, a)]).sum(),
            };
        }
    }
    StateVector::new(d, n, amps)
}

/// Transfer matrix `E = sum_i A^i ⊗ conj(B^i)` acting on column-major
/// vectorized matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferOp(pub CMat);

impl TransferOp {
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn power(&self, n: usize) -> CMat {
        let dim = self.0.nrows();
        let mut result = CMat::identity(dim, dim);
        let mut base = self.0.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        result
    }

    pub fn trace_power(&self, n: usize) -> C64 {
        self.power(n).trace()
    }

    pub fn spectrum(&self) -> Result<Vec<C64>> {
        Ok(eig(&self.0)?.values)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.spectrum()?.first().map(|v| v.norm()).unwrap_or(0.0))
    }
}

pub fn transfer_matrix(a: &SiteTensor, b: Option<&SiteTensor>) -> Result<TransferOp> {
    let b = b.unwrap_or(a);
    a.require_square("transfer_matrix")?;
    b.require_square("transfer_matrix")?;
    if a.d() != b.d() {
        return invalid(format!("transfer_matrix: physical dimensions {} and {} differ", a.d(), b.d()));
    }
    let dim = a.dl() * b.dl();
    let mut e = CMat::zeros(dim, dim);
    for (ai, bi) in a.mats().iter().zip(b.mats()) {
        e += ai.kronecker(&bi.map(|z| z.conj()));
    }
    Ok(TransferOp(e))
}

/// Groups `p` consecutive sites: `Ã^{i_1...i_p} = A^{i_1} ... A^{i_p}`, with
/// the blocked physical index big-endian in `(i_1, ..., i_p)`.
pub fn block_sites(a: &SiteTensor, p: usize, cap: usize) -> Result<SiteTensor> {
    if p == 0 {
        return invalid("block_sites: p must be >= 1");
    }
    if p == 1 {
        return Ok(a.clone());
    }
    a.require_square("block_sites")?;
    checked_cap(a.d(), p, cap, "blocked physical dimension")?;
    let mut mats: Vec<CMat> = a.mats().to_vec();
    for _ in 1..p {
        let mut next = Vec::with_capacity(mats.len() * a.d());
        for m in &mats {
            for ai in a.mats() {
                next.push(m * ai);
            }
        }
        mats = next;
    }
    SiteTensor::new(mats)
}

/// `A^i -> X A^i X^{-1}`.
pub fn gauge_transform(a: &SiteTensor, x: &CMat) -> Result<SiteTensor> {
    a.require_square("gauge_transform")?;
    if !x.is_square() || x.nrows() != a.dl() {
        return invalid(format!(
            "gauge_transform: gauge is {}x{}, bond dimension is {}",
            x.nrows(),
            x.ncols(),
            a.dl()
        ));
    }
    let cond = condition_number(x)?;
    if !(cond < 1e12) {
        return invalid(format!("gauge_transform: gauge is singular or ill-conditioned (cond = {cond:e})"));
    }
    let xinv = x
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("gauge_transform: gauge is singular".into()))?;
    a.map(|m| x * m * &xinv)
}

/// `A` scaled so that its transfer matrix has spectral radius one.
pub fn unit_radius(a: &SiteTensor) -> Result<SiteTensor> {
    let r = transfer_matrix(a, None)?.spectral_radius()?;
    if r == 0.0 {
        return invalid("transfer matrix is nilpotent");
    }
    Ok(a.scaled(C64::new(1.0 / r.sqrt(), 0.0)))
}

/// Block-diagonal tensor `⊕_j mu_j A_j`.
pub fn direct_sum(parts: &[(C64, &SiteTensor)]) -> Result<SiteTensor> {
    let Some((_, first)) = parts.first() else {
        return invalid("direct sum of no tensors");
    };
    let d = first.d();
    if parts.iter().any(|(_, t)| t.d() != d || !t.is_square()) {
        return invalid("direct sum needs square tensors with equal d");
    }
    let dim: usize = parts.iter().map(|(_, t)| t.dl()).sum();
    let mats = (0..d)
        .map(|i| {
            let mut m = CMat::zeros(dim, dim);
            let mut off = 0;
            for (mu, t) in parts {
                let k = t.dl();
                m.view_mut((off, off), (k, k)).copy_from(&(t.mat(i) * *mu));
                off += k;
            }
            m
        })
        .collect();
    SiteTensor::new(mats)
}

/// Left-canonical gauge of a normal tensor.
///
/// `a_l = gauge * (scale * A) * gauge^{-1}` with `sum_i a_l^i† a_l^i = I`,
/// and `lambda` (descending, trace one) the diagonal fixed point of the
/// channel `X -> sum_i a_l^i X a_l^i†`.
#[derive(Clone, Debug)]
pub struct CanonicalGauge {
    pub a_l: SiteTensor,
    pub lambda: Vec<f64>,
    pub gauge: CMat,
    pub scale: f64,
}

impl CanonicalGauge {
    pub fn lambda_matrix(&self) -> CMat {
        let n = self.lambda.len();
        CMat::from_fn(n, n, |i, j| if i == j { C64::new(self.lambda[i], 0.0) } else { C64::new(0.0, 0.0) })
    }
}

/// Relative window used to call an eigenvalue peripheral.
pub(crate) const PERIPHERAL_TOL: f64 = 1e-8;

pub fn left_canonical(a: &SiteTensor) -> Result<CanonicalGauge> {
    a.require_square("left_canonical")?;
    let dim = a.dl();
    let spec = transfer_matrix(a, None)?.spectrum()?;
    let r = spec[0].norm();
    if r == 0.0 {
        return Err(Error::NotNormal("transfer matrix is nilpotent".into()));
    }
    let peripheral = spec.iter().filter(|v| v.norm() >= r * (1.0 - PERIPHERAL_TOL)).count();
    if peripheral != 1 {
        return Err(Error::NotNormal(format!(
            "{peripheral} eigenvalues on the peripheral circle of radius {r:.6e}"
        )));
    }
    let scale = 1.0 / r.sqrt();
    let a_s = a.scaled(C64::new(scale, 0.0));

    let rho = fixed_point(dim, |x| a_s.dual_channel(x))?;
    let y = psd_sqrt(&rho)?;
    let yinv = y
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotNormal("left fixed point is singular".into()))?;
    let a1 = a_s.map(|m| &y * m * &yinv)?;

    let sigma = fixed_point(dim, |x| a1.channel(x))?;
    let dec = eigh(&sigma)?;
    // eigh is ascending; Lambda is reported descending.
    let order: Vec<usize> = (0..dim).rev().collect();
    let mut u = CMat::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &dec.vectors.column(src));
    }
    let total: f64 = dec.values.iter().sum();
    let lambda: Vec<f64> = order.iter().map(|&k| dec.values[k] / total).collect();
    let a_l = a1.map(|m| u.adjoint() * m * &u)?;
    let gauge = u.adjoint() * y;
    Ok(CanonicalGauge {
        a_l,
        lambda,
        gauge,
        scale,
    })
}

/// Leading eigenvector of a positive map on `dim x dim` matrices, returned
/// as a Hermitian positive definite matrix with trace `dim`.
fn fixed_point(dim: usize, map: impl Fn(&CMat) -> CMat) -> Result<CMat> {
    let s = superoperator(dim, dim, map);
    let e = eig(&s)?;
    let v: CVec = e.vectors.column(0).into_owned();
    let mut x = unvec_col(&v, dim, dim);
    let tr = x.trace();
    if tr.norm() == 0.0 {
        return Err(Error::NotNormal("fixed point has zero trace".into()));
    }
    x /= tr / tr.norm();
    let x = (&x + x.adjoint()).unscale(2.0);
    let ev = eigh(&x)?;
    let (lo, hi) = (ev.values[0], ev.values[dim - 1]);
    if !(lo > 1e-12 * hi) {
        return Err(Error::NotNormal(format!(
            "fixed point is not positive definite (eigenvalues {lo:.3e} .. {hi:.3e})"
        )));
    }
    let t = x.trace().re;
    Ok(x * C64::new(dim as f64 / t, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::c;
    use crate::random::{random_gauge, random_tensor, seeded};

    pub(crate) fn ghz_tensor() -> SiteTensor {
        SiteTensor::from_fn(2, 2, 2, |i, a, b| if a == i && b == i { c(1.0, 0.0) } else { c(0.0, 0.0) }).unwrap()
    }

    #[test]
    fn product_tensor_materializes_000() {
        let a = SiteTensor::new(vec![CMat::from_element(1, 1, c(1.0, 0.0)), CMat::zeros(1, 1)]).unwrap();
        let psi = TiMps::new(a).unwrap().materialize(3, DEFAULT_AMP_CAP).unwrap();
        let mut expect = [c(0.0, 0.0); 8];
        expect[0] = c(1.0, 0.0);
        assert_eq!(psi.amps(), &expect[..]);
    }

    #[test]
    fn ghz_materializes() {
        let psi = TiMps::new(ghz_tensor()).unwrap().materialize(3, DEFAULT_AMP_CAP).unwrap();
        for (k, z) in psi.amps().iter().enumerate() {
            let want = if k == 0 || k == 7 { 1.0 } else { 0.0 };
            assert_eq!(*z, c(want, 0.0));
        }
    }

    #[test]
    fn w_chain_materializes() {
        // A^0 = I_2, A^1 = |1><2|, X = |2><1| (1-based kets)
        let a0 = CMat::identity(2, 2);
        let mut a1 = CMat::zeros(2, 2);
        a1[(0, 1)] = c(1.0, 0.0);
        let mut x = CMat::zeros(2, 2);
        x[(1, 0)] = c(1.0, 0.0);
        let site = SiteTensor::new(vec![a0, a1]).unwrap();
        let chain = MpsChain::new(vec![site; 3], Boundary::Matrix(x)).unwrap();
        let psi = chain.materialize(DEFAULT_AMP_CAP).unwrap();
        for (k, z) in psi.amps().iter().enumerate() {
            let want = if [4, 2, 1].contains(&k) { 1.0 } else { 0.0 };
            assert_eq!(*z, c(want, 0.0), "index {k}");
        }
    }

    #[test]
    fn materialize_errors() {
        let a = random_tensor(&mut seeded(1), 2, 2, 2);
        let ti = TiMps::new(a.clone()).unwrap();
        assert!(matches!(ti.materialize(30, 1 << 20), Err(Error::TooLarge { .. })));
        let b = random_tensor(&mut seeded(2), 2, 3, 2);
        let err = MpsChain::new(vec![a, b], Boundary::Trace).unwrap_err();
        assert!(err.to_string().contains("bond mismatch at site 2"), "{err}");
    }

    #[test]
    fn transfer_matrix_examples() {
        let s = 0.5f64.sqrt();
        let a = SiteTensor::new(vec![CMat::from_element(1, 1, c(s, 0.0)), CMat::from_element(1, 1, c(s, 0.0))]).unwrap();
        let e = transfer_matrix(&a, None).unwrap();
        assert!((e.0[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);

        let e = transfer_matrix(&ghz_tensor(), None).unwrap();
        let mut want = CMat::zeros(4, 4);
        want[(0, 0)] = c(1.0, 0.0);
        want[(3, 3)] = c(1.0, 0.0);
        assert_eq!(e.0, want);

        let p0 = SiteTensor::new(vec![CMat::from_element(1, 1, c(1.0, 0.0)), CMat::zeros(1, 1)]).unwrap();
        let p1 = SiteTensor::new(vec![CMat::zeros(1, 1), CMat::from_element(1, 1, c(1.0, 0.0))]).unwrap();
        assert_eq!(transfer_matrix(&p0, Some(&p1)).unwrap().0[(0, 0)], c(0.0, 0.0));

        let three = random_tensor(&mut seeded(3), 3, 2, 2);
        assert!(transfer_matrix(&p0, Some(&three)).is_err());
    }

    #[test]
    fn block_sites_examples() {
        let a = random_tensor(&mut seeded(4), 2, 2, 2);
        assert_eq!(block_sites(&a, 1, DEFAULT_AMP_CAP).unwrap(), a);
        let g = block_sites(&ghz_tensor(), 2, DEFAULT_AMP_CAP).unwrap();
        assert_eq!(g.d(), 4);
        assert_eq!(g.mat(0), ghz_tensor().mat(0));
        assert_eq!(g.mat(3), ghz_tensor().mat(1));
        assert_eq!(g.mat(1), &CMat::zeros(2, 2));
        assert_eq!(g.mat(2), &CMat::zeros(2, 2));
        assert!(matches!(block_sites(&a, 40, 1 << 20), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn blocked_state_matches_regrouped_state() {
        let a = random_tensor(&mut seeded(5), 2, 2, 2);
        let blocked = block_sites(&a, 3, DEFAULT_AMP_CAP).unwrap();
        let big = TiMps::new(a).unwrap().materialize(6, DEFAULT_AMP_CAP).unwrap();
        let small = TiMps::new(blocked).unwrap().materialize(2, DEFAULT_AMP_CAP).unwrap();
        // big-endian digits regroup with no reordering
        let err: f64 = big.amps().iter().zip(small.amps()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-12 * big.norm());
    }

    #[test]
    fn gauge_examples() {
        let a = random_tensor(&mut seeded(6), 2, 2, 2);
        let same = gauge_transform(&a, &CMat::identity(2, 2)).unwrap();
        assert!(same.mats().iter().zip(a.mats()).all(|(x, y)| (x - y).norm() < 1e-14));

        let swap = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let g = gauge_transform(&ghz_tensor(), &swap).unwrap();
        assert_eq!(g.mat(0), ghz_tensor().mat(1));
        let s1 = TiMps::new(g).unwrap().materialize(4, DEFAULT_AMP_CAP).unwrap();
        let s0 = TiMps::new(ghz_tensor()).unwrap().materialize(4, DEFAULT_AMP_CAP).unwrap();
        assert_eq!(s0, s1);

        let x = random_gauge(&mut seeded(7), 2);
        let b = gauge_transform(&a, &x).unwrap();
        let before = TiMps::new(a.clone()).unwrap().materialize(5, DEFAULT_AMP_CAP).unwrap();
        let after = TiMps::new(b).unwrap().materialize(5, DEFAULT_AMP_CAP).unwrap();
        assert!(before.distance(&after).unwrap() <= 1e-9 * before.norm());

        let singular = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(gauge_transform(&a, &singular), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn left_canonical_d1() {
        let a = SiteTensor::new(vec![CMat::from_element(1, 1, c(3.0, 0.0)), CMat::from_element(1, 1, c(0.0, 4.0))]).unwrap();
        let g = left_canonical(&a).unwrap();
        assert!((g.a_l.entry(0, 0, 0) - c(0.6, 0.0)).norm() < 1e-14);
        assert!((g.a_l.entry(1, 0, 0) - c(0.0, 0.8)).norm() < 1e-14);
        assert!((g.lambda[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn left_canonical_rejects_ghz() {
        assert!(matches!(left_canonical(&ghz_tensor()), Err(Error::NotNormal(_))));
    }
}
