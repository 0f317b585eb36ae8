//! Seeded random constructions used by experiments and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::mps::SiteTensor;
use crate::numkernel::{c, svd, CMat, CVec, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    // Fill row by row so the stream order is independent of storage order.
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_iterator(n, (0..n).map(|_| complex_gaussian(rng)))
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let v = random_vector(rng, n);
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-ish unitary from the polar factor of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let s = svd(&random_matrix(rng, n, n)).expect("finite gaussian matrix");
    s.u * s.vh
}

/// Random site tensor with i.i.d. complex Gaussian entries.
pub fn random_tensor<R: Rng + ?Sized>(rng: &mut R, d: usize, dl: usize, dr: usize) -> SiteTensor {
    let mats = (0..d).map(|_| random_matrix(rng, dl, dr)).collect();
    SiteTensor::new(mats).expect("consistent shapes")
}

/// Random tensor with `sum_i A^i† A^i = I` (left isometric), `d * D >= D`.
pub fn random_left_isometric<R: Rng + ?Sized>(rng: &mut R, d: usize, bond: usize) -> SiteTensor {
    // Stack the d matrices vertically into a (d*D) x D isometry.
    let s = svd(&random_matrix(rng, d * bond, bond)).expect("finite gaussian matrix");
    let iso = s.u * s.vh;
    let mats = (0..d)
        .map(|i| iso.view((i * bond, 0), (bond, bond)).into_owned())
        .collect();
    SiteTensor::new(mats).expect("consistent shapes")
}

/// Random invertible matrix with singular values drawn from `[0.5, 2]`.
pub fn random_gauge<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let mut d = CMat::zeros(n, n);
    for k in 0..n {
        d[(k, k)] = c(rng.random_range(0.5..2.0), 0.0);
    }
    u * d * v
}
