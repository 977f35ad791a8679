use besselk::covariance::io::{read_locations_path, read_matrix_binary, write_locations, write_matrix_binary};
use besselk::covariance::{
    distance, generate_covariance, generate_covariance_entrywise, lower_tile_digests, morton_order,
    normalize_locations, permute, with_workers, LocationSet, MaternParams, MORTON_BITS,
};
use besselk::gp::{synthetic_locations, Cholesky};
use besselk::special::QuadratureConfig;
use proptest::collection::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_locations(n: usize, seed: u64) -> LocationSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LocationSet::new((0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()).unwrap()
}

#[test]
fn tiled_equals_entrywise_and_factorizes() {
    let locs = random_locations(120, 11);
    let theta = MaternParams::new(1.0, 0.1, 0.5).unwrap();
    let cfg = QuadratureConfig::default();
    let reference = generate_covariance_entrywise(&locs, &theta, &cfg).unwrap();
    for ts in [1, 7, 64, 256] {
        let m = generate_covariance(&locs, &theta, &cfg, ts).unwrap();
        assert!(
            m.as_slice().iter().zip(reference.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()),
            "tile size {ts}"
        );
    }
    let c = locs.coords();
    for j in 0..c.len() {
        for i in 0..c.len() {
            let exp = (-distance(c[i], c[j]) / 0.1).exp();
            assert!((reference.get(i, j) - exp).abs() <= 1e-7);
        }
    }
    assert!(Cholesky::factor(reference).is_ok());
}

#[test]
fn worker_count_does_not_change_bits() {
    let locs = synthetic_locations(300, 5).unwrap();
    let theta = MaternParams::new(1.5, 0.2, 1.3).unwrap();
    let cfg = QuadratureConfig::default();
    let one = with_workers(1, || lower_tile_digests(&locs, &theta, &cfg, 64)).unwrap().unwrap();
    let three = with_workers(3, || lower_tile_digests(&locs, &theta, &cfg, 64)).unwrap().unwrap();
    assert_eq!(one, three);
    let a = with_workers(1, || generate_covariance(&locs, &theta, &cfg, 64)).unwrap().unwrap();
    let b = with_workers(3, || generate_covariance(&locs, &theta, &cfg, 64)).unwrap().unwrap();
    assert_eq!(a, b);
}

#[test]
fn files_roundtrip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let locs = random_locations(40, 2);
    let z: Vec<f64> = (0..40).map(|i| (i as f64).sin() / 3.0).collect();
    let lp = dir.path().join("locs.csv");
    write_locations(&locs, Some(&z), std::fs::File::create(&lp).unwrap()).unwrap();
    let (back, zb) = read_locations_path(&lp).unwrap();
    assert_eq!(back, locs);
    assert_eq!(zb.unwrap(), z);

    let m = generate_covariance(&locs, &MaternParams::new(2.0, 0.3, 2.2).unwrap(), &QuadratureConfig::default(), 16)
        .unwrap();
    let mp = dir.path().join("m.bin");
    write_matrix_binary(&m, std::fs::File::create(&mp).unwrap()).unwrap();
    let mb = read_matrix_binary(std::fs::File::open(&mp).unwrap()).unwrap();
    assert!(m.as_slice().iter().zip(mb.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn morton_order_is_a_permutation(pts in vec((0.0f64..100.0, 0.0f64..100.0), 2..80)) {
        let mut coords: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
        coords.dedup();
        prop_assume!(coords.len() >= 2);
        let norm = normalize_locations(&LocationSet::new(coords.clone()).unwrap()).unwrap();
        let (sorted, perm) = morton_order(&norm, MORTON_BITS).unwrap();
        let mut seen = perm.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..coords.len()).collect::<Vec<_>>());
        prop_assert_eq!(sorted.coords(), &permute(norm.coords(), &perm)[..]);
        let keys: Vec<u64> = sorted.coords().iter().map(|&c| besselk::covariance::morton_key(c, MORTON_BITS)).collect();
        prop_assert!(keys.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn covariance_is_symmetric_with_variance_diagonal(
        seed in 0u64..1000,
        sigma_sq in 0.1f64..5.0,
        beta in 0.01f64..1.0,
        nu in 0.1f64..5.0,
    ) {
        let locs = random_locations(25, seed);
        let m = generate_covariance(&locs, &MaternParams::new(sigma_sq, beta, nu).unwrap(), &QuadratureConfig::default(), 8)
            .unwrap();
        for i in 0..25 {
            prop_assert_eq!(m.get(i, i), sigma_sq);
            for j in 0..i {
                prop_assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
                prop_assert!(m.get(i, j) > 0.0 && m.get(i, j) <= sigma_sq);
            }
        }
    }
}
