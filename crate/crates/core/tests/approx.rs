use oja_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normal_sample(n: usize, k: usize, seed: u64) -> DataMatrix64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n).map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    DataMatrix::new(rows).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn approximations_land_near_the_oracle() {
    let cfg = MedianConfig::default();
    for seed in 0..5 {
        let x = normal_sample(12, 2, 40 + seed);
        let best = brute_force_median(&x).unwrap().objective;
        for alg in [Algorithm::Grid, Algorithm::Evolutionary] {
            let r = compute_median(&x, alg, &cfg, &mut rng(seed)).unwrap();
            assert!(r.objective >= best * (1.0 - 1e-12), "{alg:?} beat the oracle");
            assert!(r.objective <= best * 1.01, "seed {seed} {alg:?}: {} vs {best}", r.objective);
            assert_eq!(r.check_objective(&x).unwrap(), r.objective);
        }
    }
}

#[test]
fn whitening_is_affine_invariant_in_objective() {
    let x = normal_sample(15, 2, 9);
    let stretched = DataMatrix::new(x.rows().iter().map(|r| vec![1000.0 * r[0], 0.01 * r[1] + r[0] * 0.005]).collect()).unwrap();
    let det = 1000.0 * 0.01;
    let a = compute_median(&x, Algorithm::Evolutionary, &MedianConfig::default(), &mut rng(1)).unwrap();
    let b = compute_median(&stretched, Algorithm::Evolutionary, &MedianConfig::default(), &mut rng(1)).unwrap();
    assert!((b.objective / det - a.objective).abs() <= 1e-3 * a.objective);
}

#[test]
fn averaging_runs_reports_the_mean_point() {
    let x = normal_sample(10, 2, 17);
    let r = median_averaged(&x, Algorithm::Evolutionary, &MedianConfig::default(), 4, &mut rng(3)).unwrap();
    let Some(Diagnostic::Matrix(runs)) = r.diagnostics.get("runs") else { panic!("runs missing") };
    assert_eq!(runs.len(), 4);
    for j in 0..2 {
        let mean = runs.iter().map(|p| p[j]).sum::<f64>() / 4.0;
        assert!((r.point[j] - mean).abs() <= 1e-12);
    }
    assert_eq!(r.objective, oja_objective(&x, &r.point, &Subsets::All).unwrap());
    assert_eq!(r.diagnostics.get("sp"), Some(&Diagnostic::Count(4)));

    let again = median_averaged(&x, Algorithm::Evolutionary, &MedianConfig::default(), 4, &mut rng(3)).unwrap();
    assert_eq!(r, again);
    assert!(matches!(
        median_averaged(&x, Algorithm::Evolutionary, &MedianConfig::default(), 0, &mut rng(3)),
        Err(OjaError::InvalidInput(_))
    ));
}

#[test]
fn single_run_average_is_the_run() {
    let x = normal_sample(10, 2, 18);
    let a = median_averaged(&x, Algorithm::Grid, &MedianConfig::default(), 1, &mut rng(4)).unwrap();
    let b = compute_median(&x, Algorithm::Grid, &MedianConfig::default(), &mut rng(4)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn knot_test_on_the_unit_square() {
    let x = DataMatrix64::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let sample = enumerate_hyperplanes(&x).unwrap().hyperplanes;
    // the square's center is its Oja median; a corner is not
    assert_eq!(knot_test(&[0.5, 0.5], &sample, 0.05).unwrap().decision, KnotDecision::Keep);
    let corner = knot_test(&[2.0, 2.0], &sample, 0.05).unwrap();
    assert_eq!(corner.decision, KnotDecision::Reject);
    assert!(corner.statistic > chi_square_quantile(0.95, corner.df).unwrap());
}

#[test]
fn reference_medians() {
    let x = DataMatrix64::new(vec![vec![0.0, 5.0], vec![1.0, -2.0], vec![4.0, 0.0], vec![2.0, 1.0], vec![3.0, 3.0]]).unwrap();
    assert_eq!(marginal_median(&x).unwrap(), vec![2.0, 1.0]);
    let s = spatial_median(&x, 1e-12, 10_000).unwrap();
    assert!(s.converged);
    // optimality: the unit vectors to the other observations sum to at most
    // one per observation sitting at the median
    let mut g = [0.0; 2];
    let mut at = 0.0;
    for r in x.rows() {
        let d = ((r[0] - s.point[0]).powi(2) + (r[1] - s.point[1]).powi(2)).sqrt();
        if d < 1e-9 {
            at += 1.0;
            continue;
        }
        for j in 0..2 {
            g[j] += (s.point[j] - r[j]) / d;
        }
    }
    assert!((g[0] * g[0] + g[1] * g[1]).sqrt() <= at + 1e-6, "{g:?} {:?}", s.point);
    let iv = univariate_median_interval(&[4.0, 1.0, 3.0, 2.0]).unwrap();
    assert_eq!(iv.midpoint(), 2.5);
}
