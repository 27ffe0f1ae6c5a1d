use oja_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normal_sample(n: usize, k: usize, seed: u64) -> DataMatrix64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n).map(|_| (0..k).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    DataMatrix::new(rows).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn exact_and_bounded_match_oracle_in_the_plane() {
    for seed in 0..20 {
        let n = 6 + (seed as usize % 5);
        let x = normal_sample(n, 2, 100 + seed);
        let o = brute_force_median(&x).unwrap();
        let e = exact_median(&x, &ExactConfig::default()).unwrap();
        let b = bounded_exact_median(&x, &BoundedConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert!(rel_close(e.objective, o.objective, 1e-9), "seed {seed}: exact {} oracle {}", e.objective, o.objective);
        assert!(rel_close(b.objective, o.objective, 1e-9), "seed {seed}: bounded {} oracle {}", b.objective, o.objective);
    }
}

#[test]
fn exact_and_bounded_match_oracle_in_space() {
    for seed in 0..10 {
        let n = 5 + (seed as usize % 4);
        let x = normal_sample(n, 3, 500 + seed);
        let o = brute_force_median(&x).unwrap();
        let e = exact_median(&x, &ExactConfig::default()).unwrap();
        let b = bounded_exact_median(&x, &BoundedConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert!(rel_close(e.objective, o.objective, 1e-9), "seed {seed}: exact {} oracle {}", e.objective, o.objective);
        assert!(rel_close(b.objective, o.objective, 1e-9), "seed {seed}: bounded {} oracle {}", b.objective, o.objective);
    }
}

#[test]
fn bounded_matches_exact_across_seeds() {
    let x = normal_sample(10, 2, 77);
    let e = exact_median(&x, &ExactConfig::default()).unwrap();
    for seed in 1..=5 {
        let b = bounded_exact_median(&x, &BoundedConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert!(rel_close(b.objective, e.objective, 1e-9), "seed {seed}");
    }
}

#[test]
fn exact_walk_decreases_strictly() {
    let x = normal_sample(12, 2, 9);
    let e = exact_median(&x, &ExactConfig::default()).unwrap();
    let Some(Diagnostic::Matrix(t)) = e.diagnostics.get("objective_trace") else { panic!("trace missing") };
    for w in t[0].windows(2) {
        assert!(w[1] < w[0]);
    }
}

#[test]
fn exact_result_sits_on_hyperplanes() {
    let x = normal_sample(9, 3, 4);
    let e = exact_median(&x, &ExactConfig::default()).unwrap();
    let h = enumerate_hyperplanes(&x).unwrap();
    let on = h
        .hyperplanes
        .iter()
        .filter(|p| !p.is_degenerate() && p.distance(&e.point) <= 1e-8 * x.scale())
        .count();
    assert!(on >= 2);
}
