//! `oja`: Oja medians, scores, scatter matrices and location tests on CSV data.

mod bench;
mod input;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oja_core::{
    c_sample_test, median_averaged, one_sample_test, oja_rcm, oja_scm, resolve_center, scores, score_cov,
    set_enumeration_cap, Algorithm, CenterSpec64, MedianConfig, Method, NullValue, OjaError, ScoreFamily, ScoreKind,
    TestConfig, TestResult64,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use output::{num, vector, Doc};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(OjaError),
}

impl From<OjaError> for CliError {
    fn from(e: OjaError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_resource_guard() => 3,
            CliError::Core(OjaError::InvalidInput(_) | OjaError::DimensionMismatch { .. } | OjaError::TooFewObservations { .. }) => 2,
            CliError::Core(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => f.write_str(s),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "oja", version, about = "Oja median, Oja scores and affine-invariant location tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a multivariate Oja median.
    Median(MedianArgs),
    /// Sign, rank or signed-rank scores of every observation.
    Scores(ScoresArgs),
    /// Sign or rank covariance matrix.
    Scm(ScmArgs),
    /// One-sample location test.
    Test1(Test1Args),
    /// C-sample test of equal locations.
    Testc(TestcArgs),
    /// Time the median algorithms on simulated normal data (CSV output).
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgArg {
    Exact,
    Bounded,
    Grid,
    Evolutionary,
    Oracle,
}

impl From<AlgArg> for Algorithm {
    fn from(a: AlgArg) -> Self {
        match a {
            AlgArg::Exact => Algorithm::Exact,
            AlgArg::Bounded => Algorithm::Bounded,
            AlgArg::Grid => Algorithm::Grid,
            AlgArg::Evolutionary => Algorithm::Evolutionary,
            AlgArg::Oracle => Algorithm::Oracle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Sign,
    Rank,
    Signedrank,
}

impl From<KindArg> for ScoreKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sign => ScoreKind::Sign,
            KindArg::Rank => ScoreKind::Rank,
            KindArg::Signedrank => ScoreKind::SignedRank,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Oja,
    Marginal,
    Spatial,
}

impl From<FamilyArg> for ScoreFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Oja => ScoreFamily::Oja,
            FamilyArg::Marginal => ScoreFamily::Marginal,
            FamilyArg::Spatial => ScoreFamily::Spatial,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScmType {
    Sign,
    Rank,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Approx,
    Permutation,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Approx => Method::Asymptotic,
            MethodArg::Permutation => Method::Permutation,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OneSampleScores {
    Sign,
    Signedrank,
}

#[derive(Clone, Copy, ValueEnum)]
enum CSampleScores {
    Sign,
    Rank,
}

fn parse_center(s: &str) -> Result<CenterSpec64, String> {
    match s {
        "ojaMedian" => Ok(CenterSpec64::default()),
        "compMedian" => Ok(CenterSpec64::CompMedian),
        "spatialMedian" => Ok(CenterSpec64::SpatialMedian),
        "mean" => Ok(CenterSpec64::Mean),
        _ => parse_vector(s).map(CenterSpec64::Explicit).map_err(|_| {
            format!("expected ojaMedian, compMedian, spatialMedian, mean or a comma-separated point, got '{s}'")
        }),
    }
}

#[derive(Clone)]
struct Point(Vec<f64>);

fn parse_point(s: &str) -> Result<Point, String> {
    parse_vector(s).map(Point)
}

fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| match t.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("bad number '{t}'")),
        })
        .collect()
}

#[derive(Args)]
struct MedianArgs {
    /// CSV file, or `-` for standard input.
    input: String,
    #[arg(long, value_enum, default_value = "evolutionary")]
    alg: AlgArg,
    /// Average the point over this many independent runs.
    #[arg(long, default_value_t = 1)]
    sp: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Skip whitening for the evolutionary algorithm.
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    tuning: Tuning,
}

/// Algorithm control parameters; unset values keep the library defaults.
#[derive(Args)]
struct Tuning {
    /// Bounded: stop cutting once the box volume ratio falls below this.
    #[arg(long)]
    volume_ratio: Option<f64>,
    /// Bounded: maximum number of cuts.
    #[arg(long)]
    max_cuts: Option<usize>,
    /// Grid: final knot spacing.
    #[arg(long)]
    spacing_threshold: Option<f64>,
    /// Grid: level of the knot elimination test.
    #[arg(long)]
    alpha: Option<f64>,
    /// Grid: hyperplanes sampled per elimination round.
    #[arg(long)]
    hyperplanes_per_round: Option<usize>,
    /// Evolutionary: initial mutation standard deviation.
    #[arg(long)]
    sigma_init: Option<f64>,
    /// Evolutionary: mutations per step.
    #[arg(long)]
    mutations: Option<usize>,
    /// Evolutionary: steps between variance adaptations.
    #[arg(long)]
    sigma_ada: Option<usize>,
    /// Evolutionary: variance adaptation factor.
    #[arg(long)]
    ada_factor: Option<f64>,
    /// Evolutionary: decades of variance decrease before stopping.
    #[arg(long)]
    sigma_log10_dec: Option<f64>,
    /// Evolutionary: tuples sampled for the criterion.
    #[arg(long)]
    n_subsets_used: Option<usize>,
    /// Evolutionary: use every tuple.
    #[arg(long)]
    use_all_subsets: bool,
    /// Evolutionary: step limit.
    #[arg(long)]
    max_steps: Option<usize>,
}

impl Tuning {
    fn config(&self, raw: bool) -> MedianConfig {
        let mut c = MedianConfig { raw, ..MedianConfig::default() };
        if let Some(v) = self.volume_ratio {
            c.bounded.volume_ratio = v;
        }
        if let Some(v) = self.max_cuts {
            c.bounded.max_cuts = v;
        }
        c.grid.spacing_threshold = self.spacing_threshold.or(c.grid.spacing_threshold);
        if let Some(v) = self.alpha {
            c.grid.alpha = v;
        }
        if let Some(v) = self.hyperplanes_per_round {
            c.grid.hyperplanes_per_round = v;
        }
        if let Some(v) = self.sigma_init {
            c.evo.sigma_init = v;
        }
        if let Some(v) = self.mutations {
            c.evo.mutations = v;
        }
        if let Some(v) = self.sigma_ada {
            c.evo.sigma_ada = v;
        }
        if let Some(v) = self.ada_factor {
            c.evo.ada_factor = v;
        }
        if let Some(v) = self.sigma_log10_dec {
            c.evo.sigma_log10_dec = v;
        }
        c.evo.n_subsets_used = self.n_subsets_used.or(c.evo.n_subsets_used);
        c.evo.use_all_subsets |= self.use_all_subsets;
        if let Some(v) = self.max_steps {
            c.evo.max_steps = v;
        }
        c
    }
}

#[derive(Args)]
struct ScoresArgs {
    input: String,
    #[arg(long, value_enum, default_value = "sign")]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "oja")]
    family: FamilyArg,
    /// ojaMedian, compMedian, spatialMedian, mean, or x1,...,xk.
    #[arg(long, value_parser = parse_center, default_value = "ojaMedian")]
    center: CenterSpec64,
}

#[derive(Args)]
struct ScmArgs {
    input: String,
    #[arg(long, value_enum, default_value = "oja")]
    family: FamilyArg,
    #[arg(long = "type", value_enum, default_value = "sign")]
    kind: ScmType,
    #[arg(long, value_parser = parse_center, default_value = "ojaMedian")]
    center: CenterSpec64,
}

#[derive(Args)]
struct Test1Args {
    input: String,
    /// Hypothesised location v1,...,vk.
    #[arg(long, value_parser = parse_point)]
    mu: Option<Point>,
    #[arg(long, value_enum, default_value = "sign")]
    scores: OneSampleScores,
    #[arg(long, value_enum, default_value = "approx")]
    method: MethodArg,
    /// Permutation replicates.
    #[arg(long = "B", default_value_t = 1000)]
    b: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct TestcArgs {
    input: String,
    /// Group column: header name, or 1-based position without a header.
    #[arg(long)]
    group: String,
    #[arg(long, value_enum, default_value = "rank")]
    scores: CSampleScores,
    #[arg(long, value_enum, default_value = "approx")]
    method: MethodArg,
    #[arg(long = "B", default_value_t = 1000)]
    b: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Center of the sign scores.
    #[arg(long, value_parser = parse_center, default_value = "ojaMedian")]
    center: CenterSpec64,
}

fn center_value(c: Option<&Vec<f64>>) -> Value {
    c.map_or(Value::Null, |v| vector(v))
}

fn cmd_median(a: &MedianArgs) -> Result<String, CliError> {
    let x = input::read_table(&a.input)?.data(None)?;
    let alg: Algorithm = a.alg.into();
    let cfg = a.tuning.config(a.raw);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let r = median_averaged(&x, alg, &cfg, a.sp, &mut rng)?;
    let mut diag = serde_json::Map::new();
    diag.insert("iterations".into(), Value::from(r.iterations as u64));
    diag.insert("hyperplanes_used".into(), Value::from(r.hyperplanes_used as u64));
    if let Some(v) = r.region_volume_ratio {
        diag.insert("region_volume_ratio".into(), num(v));
    }
    diag.extend(output::diagnostics(&r.diagnostics));
    Ok(Doc::new()
        .put("algorithm", r.algorithm.name())
        .put("point", vector(&r.point))
        .put("objective", num(r.objective))
        .put("diagnostics", Value::Object(diag))
        .put("seed", a.seed)
        .render())
}

fn kind_name(k: ScoreKind) -> &'static str {
    match k {
        ScoreKind::Sign => "sign",
        ScoreKind::Rank => "rank",
        ScoreKind::SignedRank => "signedrank",
    }
}

fn family_name(f: ScoreFamily) -> &'static str {
    match f {
        ScoreFamily::Oja => "oja",
        ScoreFamily::Marginal => "marginal",
        ScoreFamily::Spatial => "spatial",
    }
}

fn cmd_scores(a: &ScoresArgs) -> Result<String, CliError> {
    let x = input::read_table(&a.input)?.data(None)?;
    let s = scores(&x, a.family.into(), a.kind.into(), &a.center)?;
    Ok(Doc::new()
        .put("kind", kind_name(s.kind))
        .put("family", family_name(s.family))
        .put("center", center_value(s.center.as_ref()))
        .put("scores", output::rows(&s.scores))
        .put("column_sums", vector(&s.column_sums()))
        .render())
}

fn cmd_scm(a: &ScmArgs) -> Result<String, CliError> {
    let x = input::read_table(&a.input)?.data(None)?;
    let family: ScoreFamily = a.family.into();
    let (m, center) = match (family, a.kind) {
        (ScoreFamily::Oja, ScmType::Sign) => (oja_scm(&x, &a.center)?, Some(resolve_center(&x, &a.center)?)),
        (ScoreFamily::Oja, ScmType::Rank) => (oja_rcm(&x)?, None),
        (f, t) => {
            let kind = if matches!(t, ScmType::Sign) { ScoreKind::Sign } else { ScoreKind::Rank };
            let s = scores(&x, f, kind, &a.center)?;
            (score_cov(&s), s.center)
        }
    };
    Ok(Doc::new()
        .put("family", family_name(family))
        .put("type", if matches!(a.kind, ScmType::Sign) { "sign" } else { "rank" })
        .put("center", center_value(center.as_ref()))
        .put("matrix", output::matrix(&m))
        .render())
}

fn test_doc(r: &TestResult64, seed: u64) -> String {
    let null = match &r.null_value {
        NullValue::Location(mu) => vector(mu),
        NullValue::EqualLocations => Value::from("equal locations"),
    };
    Doc::new()
        .put("scores", kind_name(r.score_kind))
        .put("method", if r.method == Method::Permutation { "permutation" } else { "approx" })
        .put("null_value", null)
        .put("statistic", num(r.q))
        .put("df", r.df as u64)
        .put("p_value", num(r.p_value))
        .put("replications", r.replications as u64)
        .put("rank_deficient", r.rank_deficient)
        .put("replicate_seed", r.seed.map_or(Value::Null, Value::from))
        .put("seed", seed)
        .render()
}

fn cmd_test1(a: &Test1Args) -> Result<String, CliError> {
    let x = input::read_table(&a.input)?.data(None)?;
    let mu = a.mu.clone().map_or_else(|| vec![0.0; x.k()], |p| p.0);
    let kind = match a.scores {
        OneSampleScores::Sign => ScoreKind::Sign,
        OneSampleScores::Signedrank => ScoreKind::SignedRank,
    };
    let cfg = TestConfig { method: a.method.into(), replications: a.b, ..TestConfig::default() };
    let r = one_sample_test(&x, &mu, kind, &cfg, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    Ok(test_doc(&r, a.seed))
}

fn cmd_testc(a: &TestcArgs) -> Result<String, CliError> {
    let t = input::read_table(&a.input)?;
    let g = t.column(&a.group)?;
    let x = t.data(Some(g))?;
    let kind = match a.scores {
        CSampleScores::Sign => ScoreKind::Sign,
        CSampleScores::Rank => ScoreKind::Rank,
    };
    let cfg = TestConfig { method: a.method.into(), replications: a.b, center: a.center.clone() };
    let r = c_sample_test(&x, &t.labels(g), kind, &cfg, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    Ok(test_doc(&r, a.seed))
}

fn apply_env() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("OJA_MAX_ENUM") {
        let cap = v.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("OJA_MAX_ENUM must be a positive integer, got '{v}'")))?;
        set_enumeration_cap(cap);
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<String, CliError> {
    apply_env()?;
    match &cli.command {
        Command::Median(a) => cmd_median(a),
        Command::Scores(a) => cmd_scores(a),
        Command::Scm(a) => cmd_scm(a),
        Command::Test1(a) => cmd_test1(a),
        Command::Testc(a) => cmd_testc(a),
        Command::Bench(a) => bench::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("oja: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
