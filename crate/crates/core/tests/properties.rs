use mpsup::gallery::{border_w, dicke_mps, dicke_state, weight_mps, weight_state, WeightStateSpec};
use mpsup::io::{mps_json, parse_mps_json, read_msv, write_msv, MpsFile};
use mpsup::mps::{
    block_sites, direct_sum, gauge_transform, left_canonical, transfer_matrix, unit_radius, SiteTensor, StateVector,
    TiMps, DEFAULT_AMP_CAP,
};
use mpsup::numkernel::{c, CMat, C64, DEFAULT_RANK_TOL};
use mpsup::permlab::{
    certify_mps_up, permutation_family, permute_state, schmidt_spectrum, subsystem_purity, Bipartition, Permutation,
};
use mpsup::random::{random_gauge, random_tensor, random_unit_vector, seeded};
use mpsup::structure::{canonical_form, product_decompose, ProductOutcome, StructureConfig};
use proptest::prelude::*;

fn random_state(seed: u64, d: usize, n: usize) -> StateVector {
    let v = random_unit_vector(&mut seeded(seed), d.pow(n as u32));
    StateVector::new(d, n, v.iter().copied().collect()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn shift(n: usize) -> Permutation {
    Permutation::new((0..n).map(|k| (k + 1) % n).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norm_is_trace_of_transfer_power(seed in 0u64..1000, d in 1usize..=3, bond in 1usize..=3, n in 1usize..=6) {
        let a = random_tensor(&mut seeded(seed), d, bond, bond);
        let psi = TiMps::new(a.clone()).unwrap().materialize(n, DEFAULT_AMP_CAP).unwrap();
        let tr = transfer_matrix(&a, None).unwrap().trace_power(n);
        prop_assert!(close(psi.norm().powi(2), tr.re, 1e-10));
        prop_assert!(tr.im.abs() <= 1e-10 * tr.norm().max(1.0));
    }

    #[test]
    fn blocked_transfer_is_transfer_power(seed in 0u64..1000, bond in 1usize..=3, p in 1usize..=3) {
        let a = random_tensor(&mut seeded(seed), 2, bond, bond);
        let blocked = transfer_matrix(&block_sites(&a, p, DEFAULT_AMP_CAP).unwrap(), None).unwrap();
        let power = transfer_matrix(&a, None).unwrap().power(p);
        prop_assert!((blocked.matrix() - &power).norm() <= 1e-10 * power.norm().max(1.0));
    }

    #[test]
    fn left_canonical_is_isometric_and_preserves_the_state(seed in 0u64..1000, bond in 1usize..=3) {
        let a = random_tensor(&mut seeded(seed), 2, bond, bond);
        let g = left_canonical(&a).unwrap();
        let mut sum = CMat::zeros(bond, bond);
        for m in g.a_l.mats() {
            sum += m.adjoint() * m;
        }
        prop_assert!((sum - CMat::identity(bond, bond)).norm() <= 1e-9);
        let lambda_trace: f64 = g.lambda.iter().sum();
        prop_assert!(close(lambda_trace, 1.0, 1e-10));
        let psi = TiMps::new(a).unwrap().materialize(4, DEFAULT_AMP_CAP).unwrap().normalized();
        let phi = TiMps::new(g.a_l).unwrap().materialize(4, DEFAULT_AMP_CAP).unwrap().normalized();
        prop_assert!(psi.inner(&phi).norm() >= 1.0 - 1e-9);
    }

    #[test]
    fn purity_is_symmetric_under_complement(seed in 0u64..1000, n in 2usize..=6, raw_mask in 1u64..63) {
        let psi = random_state(seed, 2, n);
        let mask = raw_mask % ((1 << n) - 2) + 1;
        let s = Bipartition::from_mask(n, mask).unwrap();
        let p = subsystem_purity(&psi, &s).unwrap();
        let q = subsystem_purity(&psi, &s.complement()).unwrap();
        prop_assert!(close(p, q, 1e-10));
        prop_assert!(p <= 1.0 + 1e-12 && p > 0.0);
    }

    #[test]
    fn schmidt_weights_sum_to_norm_squared(seed in 0u64..1000, n in 2usize..=6, m in 1usize..=5) {
        let psi = random_state(seed, 2, n).scaled(c(1.7, 0.3));
        let s = Bipartition::contiguous(n, m.min(n - 1)).unwrap();
        let rep = schmidt_spectrum(&psi, &s, DEFAULT_RANK_TOL).unwrap();
        let total: f64 = rep.sigma.iter().map(|x| x * x).sum();
        prop_assert!(close(total, psi.norm().powi(2), 1e-10));
        prop_assert!(rep.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn schmidt_spectrum_follows_the_permutation(seed in 0u64..1000, n in 2usize..=6, raw_mask in 1u64..63) {
        let psi = random_state(seed, 2, n);
        let pi = Permutation::random(n, &mut seeded(seed + 1));
        let mask = raw_mask % ((1 << n) - 2) + 1;
        let s = Bipartition::from_mask(n, mask).unwrap();
        let moved = Bipartition::new(n, s.sites().iter().map(|&k| pi.apply(k)).collect()).unwrap();
        let before = schmidt_spectrum(&psi, &s, DEFAULT_RANK_TOL).unwrap();
        let after = schmidt_spectrum(&permute_state(&psi, &pi).unwrap(), &moved, DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(before.rank, after.rank);
        for (x, y) in before.sigma.iter().zip(&after.sigma) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn permutation_round_trip(seed in 0u64..1000, d in 2usize..=3, n in 1usize..=5) {
        let psi = random_state(seed, d, n);
        let pi = Permutation::random(n, &mut seeded(seed + 7));
        let there = permute_state(&psi, &pi).unwrap();
        prop_assert!(close(there.norm(), psi.norm(), 1e-12));
        let back = permute_state(&there, &pi.inverse()).unwrap();
        prop_assert!(back.distance(&psi).unwrap() <= 1e-12);
    }

    #[test]
    fn ti_states_are_shift_invariant(seed in 0u64..1000, bond in 1usize..=3, n in 2usize..=6) {
        let a = random_tensor(&mut seeded(seed), 2, bond, bond);
        let psi = TiMps::new(a).unwrap().materialize(n, DEFAULT_AMP_CAP).unwrap();
        let shifted = permute_state(&psi, &shift(n)).unwrap();
        prop_assert!(shifted.distance(&psi).unwrap() <= 1e-10 * psi.norm().max(1.0));
    }

    #[test]
    fn certificate_is_scale_invariant(seed in 0u64..1000, n in 2usize..=5, scale in 0.1f64..10.0) {
        let psi = random_state(seed, 2, n);
        let perms = permutation_family(n, 10, seed).unwrap();
        let a = certify_mps_up(&psi, 2, &perms, DEFAULT_RANK_TOL).unwrap();
        let b = certify_mps_up(&psi.scaled(c(scale, 0.0)), 2, &perms, DEFAULT_RANK_TOL).unwrap();
        prop_assert!((a.eps_star - b.eps_star).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.eps_star));
    }

    #[test]
    fn dicke_mps_matches_dense_dicke(n in 1usize..=8, k in 0usize..=8) {
        prop_assume!(k <= n);
        let dense = dicke_state(k, n, false, DEFAULT_AMP_CAP).unwrap();
        let mps = dicke_mps(k, n).unwrap().materialize(DEFAULT_AMP_CAP).unwrap();
        prop_assert!(dense.distance(&mps).unwrap() <= 1e-12 * dense.norm().max(1.0));
        let weight = weight_state(WeightStateSpec::new(k, 1, n).unwrap(), false, DEFAULT_AMP_CAP).unwrap();
        prop_assert!(dense.distance(&weight).unwrap() <= 1e-12);
    }

    #[test]
    fn weight_mps_matches_dense_weight_state(a in 0usize..=4, delta in 1usize..=3, n in 1usize..=5) {
        prop_assume!(a <= delta * n);
        let spec = WeightStateSpec::new(a, delta, n).unwrap();
        let dense = weight_state(spec, false, DEFAULT_AMP_CAP).unwrap();
        let mps = weight_mps(spec).unwrap().materialize(DEFAULT_AMP_CAP).unwrap();
        prop_assert!(dense.distance(&mps).unwrap() <= 1e-12 * dense.norm().max(1.0));
    }

    #[test]
    fn border_w_error_shrinks_with_eps(n in 3usize..=7, e in 0.01f64..0.5) {
        let big = border_w(n, e, DEFAULT_AMP_CAP).unwrap().error;
        let small = border_w(n, e / 2.0, DEFAULT_AMP_CAP).unwrap().error;
        prop_assert!(small < big);
    }

    #[test]
    fn canonical_form_reproduces_the_state(seed in 0u64..1000, bond in 1usize..=3) {
        let mut rng = seeded(seed);
        let a = random_tensor(&mut rng, 2, bond, bond);
        let x = random_gauge(&mut rng, bond);
        let a = gauge_transform(&a, &x).unwrap();
        let cf = canonical_form(&a, 4, &StructureConfig::default()).unwrap();
        prop_assert_eq!(cf.blocks.len(), 1);
        let psi = TiMps::new(a).unwrap().materialize(4, DEFAULT_AMP_CAP).unwrap();
        let rebuilt = cf.materialize(4, DEFAULT_AMP_CAP).unwrap();
        prop_assert!(psi.distance(&rebuilt).unwrap() <= 1e-8 * psi.norm());
    }

    #[test]
    fn ghz_like_sums_decompose(seed in 0u64..1000, terms in 2usize..=3, n in 2usize..=5) {
        let mut rng = seeded(seed);
        let scalars: Vec<SiteTensor> = (0..terms)
            .map(|_| unit_radius(&random_tensor(&mut rng, 2, 1, 1)).unwrap())
            .collect();
        let weights: Vec<C64> = (0..terms).map(|j| c(1.0 - 0.2 * j as f64, 0.0)).collect();
        let parts: Vec<(C64, &SiteTensor)> = weights.iter().copied().zip(scalars.iter()).collect();
        let x = random_gauge(&mut rng, terms);
        let a = gauge_transform(&direct_sum(&parts).unwrap(), &x).unwrap();
        let psi = TiMps::new(a.clone()).unwrap().materialize(n, DEFAULT_AMP_CAP).unwrap();
        match product_decompose(&a, n, &StructureConfig::default()).unwrap() {
            ProductOutcome::Product(dec) => {
                prop_assert_eq!(dec.terms.len(), terms);
                let rec = dec.reconstruct(DEFAULT_AMP_CAP).unwrap();
                prop_assert!(psi.distance(&rec).unwrap() <= 1e-8 * psi.norm());
            }
            ProductOutcome::Obstruction(o) => prop_assert!(false, "unexpected obstruction {:?}", o.blocks),
        }
    }

    #[test]
    fn msv_round_trip(seed in 0u64..1000, d in 1usize..=3, n in 1usize..=4) {
        let psi = random_state(seed, d, n);
        let mut buf = Vec::new();
        write_msv(&mut buf, &psi).unwrap();
        let back = read_msv(buf.as_slice(), DEFAULT_AMP_CAP).unwrap();
        prop_assert_eq!(back, psi);
    }

    #[test]
    fn mps_json_round_trip(seed in 0u64..1000, d in 1usize..=3, bond in 1usize..=3) {
        let a = random_tensor(&mut seeded(seed), d, bond, bond);
        let file = MpsFile::Ti { mps: TiMps::new(a.clone()).unwrap(), n: Some(3) };
        let text = serde_json::to_string(&mps_json(&file)).unwrap();
        match parse_mps_json(&text).unwrap() {
            MpsFile::Ti { mps, n } => {
                prop_assert_eq!(n, Some(3));
                prop_assert_eq!(mps.tensor(), &a);
            }
            MpsFile::Chain { .. } => prop_assert!(false, "kind changed"),
        }
    }
}
