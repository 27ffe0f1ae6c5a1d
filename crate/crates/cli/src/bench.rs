//! Runtime table over algorithms, sample sizes and dimensions.

use std::fmt::Write;
use std::time::Instant;

use clap::Args;
use oja_core::{brute_force_median, compute_median, Algorithm, DataMatrix64, MedianConfig};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::CliError;

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "exact,bounded")]
    alg: Vec<String>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "20")]
    n: Vec<usize>,
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

fn sample(n: usize, k: usize, rng: &mut ChaCha8Rng) -> DataMatrix64 {
    let rows = (0..n).map(|_| (0..k).map(|_| StandardNormal.sample(&mut *rng)).collect()).collect();
    DataMatrix64::new(rows).expect("simulated rows are rectangular and finite")
}

fn cell_rng(seed: u64, n: usize, k: usize, rep: usize, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 40) ^ ((k as u64) << 32) ^ rep as u64);
    r.set_stream(stream);
    r
}

pub fn run(a: &BenchArgs) -> Result<String, CliError> {
    let algs = a
        .alg
        .iter()
        .map(|s| s.parse::<Algorithm>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = MedianConfig::default();
    let mut out = String::from("alg,n,k,rep,wall_time,objective,objective_gap_to_oracle\n");
    for &k in &a.k {
        for &n in &a.n {
            for rep in 0..a.reps {
                let x = sample(n, k, &mut cell_rng(a.seed, n, k, rep, 0));
                let oracle = brute_force_median(&x).ok().map(|o| o.objective);
                for &alg in &algs {
                    let t = Instant::now();
                    let r = compute_median(&x, alg, &cfg, &mut cell_rng(a.seed, n, k, rep, 1));
                    let secs = t.elapsed().as_secs_f64();
                    let (obj, gap) = match &r {
                        Ok(r) => (r.objective.to_string(), oracle.map_or(String::new(), |o| (r.objective - o).to_string())),
                        Err(_) => (String::new(), String::new()),
                    };
                    writeln!(out, "{},{n},{k},{rep},{secs},{obj},{gap}", alg.name()).expect("writing to a String");
                }
            }
        }
    }
    Ok(out)
}
