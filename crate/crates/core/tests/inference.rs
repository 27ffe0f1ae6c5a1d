use oja_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normal_sample(n: usize, k: usize, seed: u64) -> DataMatrix64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n).map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    DataMatrix::new(rows).unwrap()
}

fn groups(n: usize) -> Vec<u8> {
    (0..n).map(|i| (i % 3) as u8).collect()
}

#[test]
fn chi_square_tail_and_quantile_agree() {
    for df in 1..6 {
        for p in [0.5, 0.1, 0.05, 0.01] {
            let q = chi_square_quantile(1.0 - p, df).unwrap();
            assert!((chi_square_sf(q, df).unwrap() - p).abs() < 1e-9);
        }
    }
    assert!(matches!(chi_square_sf(1.0, 0), Err(OjaError::InvalidInput(_))));
}

#[test]
fn shifted_sample_is_detected() {
    let x = normal_sample(60, 2, 5);
    let far = DataMatrix::new(x.rows().iter().map(|r| vec![r[0] + 2.0, r[1]]).collect()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let t = one_sample_test(&far, &[0.0, 0.0], ScoreKind::SignedRank, &TestConfig::default(), &mut rng).unwrap();
    assert!(t.p_value < 1e-6, "{}", t.p_value);
    assert_eq!(t.null_value, NullValue::Location(vec![0.0, 0.0]));
}

#[test]
fn permutation_p_value_is_a_replicate_fraction() {
    let x = normal_sample(15, 2, 6);
    let cfg = TestConfig { method: Method::Permutation, replications: 99, ..TestConfig::default() };
    let a = one_sample_test(&x, &[0.1, 0.1], ScoreKind::Sign, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = one_sample_test(&x, &[0.1, 0.1], ScoreKind::Sign, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.replications, 99);
    let hits = a.p_value * 100.0;
    assert!((hits - hits.round()).abs() < 1e-9 && hits >= 1.0);
}

#[test]
fn c_sample_statistic_is_label_and_affine_invariant() {
    let x = normal_sample(24, 2, 7);
    let g = groups(24);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = TestConfig { center: CenterSpec::Mean, ..TestConfig::default() };
    let base = c_sample_test(&x, &g, ScoreKind::Rank, &cfg, &mut rng).unwrap();
    assert_eq!(base.df, 4);
    assert_eq!(base.null_value, NullValue::EqualLocations);

    let renamed: Vec<&str> = g.iter().map(|&v| ["z", "y", "x"][v as usize]).collect();
    let r = c_sample_test(&x, &renamed, ScoreKind::Rank, &cfg, &mut rng).unwrap();
    assert!((r.q - base.q).abs() <= 1e-10 * base.q.max(1.0));

    let a = Matrix64::from_rows(&[vec![1.5, -0.4], vec![0.7, 2.0]]);
    let moved = x.affine(&a, &[3.0, -1.0]);
    for kind in [ScoreKind::Rank, ScoreKind::Sign] {
        let t0 = c_sample_test(&x, &g, kind, &cfg, &mut rng).unwrap();
        let t1 = c_sample_test(&moved, &g, kind, &cfg, &mut rng).unwrap();
        assert!((t0.q - t1.q).abs() <= 1e-8 * t0.q.max(1.0), "{kind:?}: {} vs {}", t0.q, t1.q);
    }
}

#[test]
fn c_sample_input_errors() {
    let x = normal_sample(12, 2, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let cfg = TestConfig::default();
    assert!(matches!(c_sample_test(&x, &groups(11), ScoreKind::Rank, &cfg, &mut rng), Err(OjaError::DimensionMismatch { .. })));
    assert!(matches!(c_sample_test(&x, &[0u8; 12], ScoreKind::Rank, &cfg, &mut rng), Err(OjaError::InvalidInput(_))));
    assert!(matches!(c_sample_test(&x, &groups(12), ScoreKind::SignedRank, &cfg, &mut rng), Err(OjaError::InvalidInput(_))));
}
