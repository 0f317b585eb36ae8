use mpsup::mps::{left_canonical, transfer_matrix, SiteTensor, StateVector};
use mpsup::numkernel::{c, kron, CMat, CVec, C64};
use mpsup::permlab::gap_closeness_bound;
use mpsup::random::{random_left_isometric, random_tensor, random_unit_vector, seeded};
use mpsup::structure::{block_injectivity_length, eta, CanonicalForm, CfBlock, StructureConfig};
use rand::Rng;

fn aklt() -> SiteTensor {
    let s = (2.0f64 / 3.0).sqrt();
    let plus = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let zero = CMat::from_row_slice(2, 2, &[c(-1.0 / 3f64.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0 / 3f64.sqrt(), 0.0)]);
    let minus = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0), c(0.0, 0.0)]);
    SiteTensor::new(vec![plus, zero, minus]).unwrap()
}

#[test]
fn isometric_tensor_needs_no_gauge() {
    let a = random_left_isometric(&mut seeded(3), 3, 2);
    let g = left_canonical(&a).unwrap();
    let mut sum = CMat::zeros(2, 2);
    for m in g.a_l.mats() {
        sum += m.adjoint() * m;
    }
    assert!((sum - CMat::identity(2, 2)).norm() < 1e-10);
    assert!((g.scale - 1.0).abs() < 1e-10);
    // gauge = phase * unitary
    let gram = g.gauge.adjoint() * &g.gauge;
    let phase = gram[(0, 0)];
    assert!((gram - CMat::identity(2, 2) * phase).norm() < 1e-9 * phase.norm());

    let lam = g.lambda_matrix();
    let image = g.a_l.channel(&lam);
    assert!((image - &lam).norm() < 1e-10);
}

#[test]
fn aklt_is_left_canonical_with_known_spectrum() {
    let a = aklt();
    let g = left_canonical(&a).unwrap();
    let mut sum = CMat::zeros(2, 2);
    for m in g.a_l.mats() {
        sum += m.adjoint() * m;
    }
    assert!((sum - CMat::identity(2, 2)).norm() < 1e-10);
    let e = transfer_matrix(&g.a_l, None).unwrap();
    let spec = e.spectrum().unwrap();
    assert!((spec[0] - c(1.0, 0.0)).norm() < 1e-10);
    let l2 = spec[1].norm();
    assert!((l2 - 1.0 / 3.0).abs() < 1e-10);
    for n in 1..=12 {
        let tr = e.trace_power(n).re;
        assert!((tr - 1.0).abs() <= 3.0 * l2.powi(n as i32) + 1e-12, "N = {n}: {tr}");
    }
}

#[test]
fn nearly_parallel_d1_blocks_are_block_injective_at_one() {
    let cos: f64 = 0.99;
    let b1 = SiteTensor::new(vec![CMat::from_element(1, 1, c(1.0, 0.0)), CMat::zeros(1, 1)]).unwrap();
    let b2 = SiteTensor::new(vec![
        CMat::from_element(1, 1, c(cos, 0.0)),
        CMat::from_element(1, 1, c((1.0 - cos * cos).sqrt(), 0.0)),
    ])
    .unwrap();
    let cf = CanonicalForm {
        period: 1,
        blocks: vec![
            CfBlock { tensor: b1, mu: vec![c(1.0, 0.0)] },
            CfBlock { tensor: b2, mu: vec![c(1.0, 0.0)] },
        ],
        gauge: CMat::identity(2, 2),
        scale: 1.0,
        null_dim: 0,
    };
    assert_eq!(block_injectivity_length(&cf, &StructureConfig::default()).unwrap(), 1);
}

/// Single-site purity of the infinite chain from transfer matrices alone:
/// `rho_ij = Tr[E_ij E^(N-1)] / Tr[E^N]` for large `N`.
fn transfer_purity(a: &SiteTensor, n: usize) -> f64 {
    let e = transfer_matrix(a, None).unwrap();
    let r = e.spectral_radius().unwrap();
    let scaled = e.matrix() / c(r, 0.0);
    let mut power = CMat::identity(scaled.nrows(), scaled.ncols());
    for _ in 0..n - 1 {
        power = &power * &scaled;
    }
    let norm = (&power * &scaled).trace();
    let d = a.d();
    let mut purity = 0.0;
    for i in 0..d {
        for j in 0..d {
            let eij = kron(a.mat(i), &a.mat(j).map(|z| z.conj())) / c(r, 0.0);
            purity += ((eij * &power).trace() / norm).norm_sqr();
        }
    }
    purity
}

#[test]
fn eta_matches_transfer_matrix_purity() {
    let cfg = StructureConfig::default();
    for seed in 0..5 {
        let a = random_tensor(&mut seeded(40 + seed), 2, 2, 2);
        let from_eta = eta(&a, &cfg).unwrap().eta;
        let oracle = transfer_purity(&a, 400);
        assert!((from_eta - oracle).abs() < 1e-6, "seed {seed}: {from_eta} vs {oracle}");
    }
}

#[test]
fn gap_closeness_on_diagonal_hamiltonians() {
    let mut rng = seeded(77);
    let dim = 8;
    for _ in 0..500 {
        let gap = rng.random_range(0.1..2.0);
        let mut energies: Vec<f64> = (0..dim).map(|_| gap + rng.random_range(0.0..5.0)).collect();
        let ground = rng.random_range(0..dim);
        energies[ground] = 0.0;
        let h = CMat::from_diagonal(&CVec::from_iterator(dim, energies.iter().map(|&e| c(e, 0.0))));
        let mut low = || {
            let mut v = random_unit_vector(&mut rng, dim) * c(10f64.powf(rng.random_range(-3.0..0.0)), 0.0);
            v[ground] += C64::from_polar(1.0, rng.random_range(0.0..6.28));
            let v = &v / c(v.norm(), 0.0);
            StateVector::new(2, 3, v.iter().copied().collect()).unwrap()
        };
        let (p1, p2) = (low(), low());
        let r = gap_closeness_bound(&h, &p1, &p2).unwrap();
        assert!(r.holds, "{r:?}");
    }
}
