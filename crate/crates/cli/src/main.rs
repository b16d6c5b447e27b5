mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use arm_forge::bench::{
    emit_report, gen_synthetic, log_slope, run_bench, sweep_dimensions, write_curve_csv, BenchReport, ReportFormat,
    SyntheticSpec,
};
use arm_forge::datasets::{raw_tables, Source};
use arm_forge::eval::{kfold_cv, select_features, write_cv_csv, Model};
use arm_forge::ingest::{
    builtin_schema, load_and_preprocess, load_csv, preprocess_with_stats, write_db_csv, Dataset, PreprocessStats,
    RawTable, Schema,
};
use arm_forge::{export_rules, generate_rules, mine, Algorithm, Error, RuleFormat, RuleKind, Thresholds, TransactionDb};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::JobConfig;

#[derive(Parser, Debug)]
#[command(name = "arm-forge", version, about = "Association rule mining, benchmarking and rule-based feature selection")]
struct Cli {
    /// TOML job file; command-line flags take precedence over its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine frequent itemsets and write the common and exception rules
    Mine(MineArgs),
    /// Time the miners and write a comparison report
    Bench(BenchArgs),
    /// Select features from mined rules and cross-validate classifiers
    Classify(ClassifyArgs),
    /// Generate a synthetic database, optionally sweeping its width
    Synth(SynthArgs),
    /// Discretize raw tables with a schema and write the encoded rows
    Preprocess(PreprocessArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Raw CSV file; repeat to union several files
    #[arg(long, value_name = "PATH")]
    input: Vec<PathBuf>,

    /// builtin:dataset1, builtin:dataset2, infer, or a schema TOML path
    #[arg(long, value_name = "SRC")]
    schema: Option<String>,

    /// Target attribute, overriding the schema's
    #[arg(long, value_name = "NAME")]
    target: Option<String>,

    /// Seed for surrogate data and fold assignment (default 42)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    /// Minimum support of common rules (default 0.7)
    #[arg(long, value_name = "FRACTION")]
    min_support: Option<f64>,

    /// Minimum confidence of emitted rules (default 0.9)
    #[arg(long, value_name = "FRACTION")]
    min_confidence: Option<f64>,

    /// Minimum CPIR of emitted rules (default 0.6)
    #[arg(long, value_name = "VALUE", allow_hyphen_values = true)]
    min_cpir: Option<f64>,

    /// Prefilter probability; defaults to the exception lower bound
    #[arg(long, value_name = "FRACTION")]
    min_prob: Option<f64>,

    /// Exception support interval (LO, HI] (default 0.2,0.4)
    #[arg(long, value_name = "LO,HI")]
    exception_range: Option<String>,
}

#[derive(Args, Debug)]
struct MineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,

    /// apriori, fptree or faster
    #[arg(long, value_name = "NAME")]
    algorithm: Option<String>,

    /// Score every consequent instead of only target values
    #[arg(long)]
    all_consequents: bool,

    /// Rules file format
    #[arg(long, value_enum, default_value_t = RulesFormat::Csv)]
    format: RulesFormat,

    /// Rules file to write
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,

    /// Algorithm to time; repeat for several (default: all three)
    #[arg(long, value_name = "NAME")]
    algorithm: Vec<String>,

    /// Repetitions per job (default 10); the first is discarded when at least 3
    #[arg(long)]
    reps: Option<usize>,

    /// Report format
    #[arg(long, value_enum, default_value_t = BenchFormat::Csv)]
    format: BenchFormat,

    /// Fail unless median time is faster < fpgrowth < apriori and faster
    /// tests fewer candidates than apriori
    #[arg(long)]
    assert_ordering: bool,

    /// Report file to write
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,

    /// Miner used for feature selection
    #[arg(long, value_name = "NAME")]
    algorithm: Option<String>,

    /// nb, lr, dt or majority; repeat for several (default: all four)
    #[arg(long, value_name = "NAME")]
    model: Vec<String>,

    /// Cross-validation folds (default 10)
    #[arg(long)]
    folds: Option<usize>,

    /// Cross-validation results file to write
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Rows to generate
    #[arg(long, default_value_t = 1000)]
    rows: usize,

    /// Attributes per row
    #[arg(long, default_value_t = 10)]
    attributes: usize,

    /// Distinct values per attribute
    #[arg(long, default_value_t = 3)]
    values: usize,

    /// Probability of each attribute's modal value
    #[arg(long, default_value_t = 0.6)]
    skew: f64,

    /// Generator seed (default 42)
    #[arg(long)]
    seed: Option<u64>,

    /// Synthetic database file to write
    #[arg(long, value_name = "PATH")]
    out: PathBuf,

    /// Sweep the attribute count over LO..HI (inclusive) and record candidate counts
    #[arg(long, value_name = "LO..HI")]
    sweep: Option<String>,

    /// Minimum support used by the sweep
    #[arg(long, value_name = "FRACTION", default_value_t = 0.05)]
    sweep_support: f64,

    /// Algorithm for the sweep; repeat for several (default: apriori and faster)
    #[arg(long, value_name = "NAME")]
    algorithm: Vec<String>,

    /// Curve CSV written by the sweep
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Encoded table to write
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RulesFormat {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BenchFormat {
    Csv,
    Markdown,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidThresholds(_)
            | Error::InvalidArgument(_)
            | Error::UnknownDataset(_)
            | Error::Schema(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

const DEFAULT_SEED: u64 = 42;
const DEFAULT_REPS: usize = 10;
const DEFAULT_FOLDS: usize = 10;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ARM_FORGE_LOG", "warn")).init();
    let cli = Cli::parse();
    let config = match cli.config.as_deref().map(JobConfig::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Mine(a) => cmd_mine(a, &config),
        Command::Bench(a) => cmd_bench(a, &config),
        Command::Classify(a) => cmd_classify(a, &config),
        Command::Synth(a) => cmd_synth(a, &config),
        Command::Preprocess(a) => cmd_preprocess(a, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn seed(flag: Option<u64>, config: &JobConfig) -> u64 {
    flag.or(config.seed).unwrap_or(DEFAULT_SEED)
}

fn parse_range(s: &str) -> Result<(f64, f64), Failure> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| invalid(format!("exception range {s:?} is not LO,HI")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| invalid(format!("exception range bound {v:?} is not a number")))
    };
    Ok((parse(lo)?, parse(hi)?))
}

fn thresholds(args: &ThresholdArgs, config: &JobConfig) -> Result<Thresholds, Failure> {
    let d = Thresholds::default();
    let range = match &args.exception_range {
        Some(s) => parse_range(s)?,
        None => config
            .exception_range
            .unwrap_or((d.exception_support.lo, d.exception_support.hi)),
    };
    let mut t = Thresholds::new(
        args.min_support.or(config.min_support).unwrap_or(d.min_support),
        args.min_confidence.or(config.min_confidence).unwrap_or(d.min_confidence),
        args.min_cpir.or(config.min_cpir).unwrap_or(d.min_cpir),
        range,
    )?;
    if let Some(p) = args.min_prob.or(config.min_prob) {
        t = t.with_min_prob(p)?;
    }
    Ok(t)
}

fn algorithms(flags: &[String], config: &JobConfig, default: &[Algorithm]) -> Result<Vec<Algorithm>, Failure> {
    let names = if flags.is_empty() {
        config.algorithm.clone().map(|a| a.into_vec()).unwrap_or_default()
    } else {
        flags.to_vec()
    };
    if names.is_empty() {
        return Ok(default.to_vec());
    }
    let mut out = Vec::new();
    for n in names {
        let a: Algorithm = n.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

fn single_algorithm(flag: &Option<String>, config: &JobConfig) -> Result<Algorithm, Failure> {
    let flags: Vec<String> = flag.iter().cloned().collect();
    let algs = algorithms(&flags, config, &[Algorithm::Faster])?;
    match algs.as_slice() {
        [a] => Ok(*a),
        _ => Err(invalid("exactly one algorithm is expected")),
    }
}

enum SchemaSource {
    Builtin(Dataset),
    Infer,
    File(PathBuf),
}

fn schema_source(spec: &str) -> Result<SchemaSource, Failure> {
    if let Some(tag) = spec.strip_prefix("builtin:") {
        return Ok(SchemaSource::Builtin(tag.parse()?));
    }
    if spec == "infer" {
        return Ok(SchemaSource::Infer);
    }
    Ok(SchemaSource::File(PathBuf::from(spec)))
}

fn union(tables: Vec<RawTable>) -> Result<RawTable, Failure> {
    let mut it = tables.into_iter();
    let mut raw = it.next().ok_or_else(|| invalid("no input tables"))?;
    for t in it {
        raw.append(t)?;
    }
    Ok(raw)
}

struct Loaded {
    db: TransactionDb,
    tag: String,
    stats: PreprocessStats,
}

/// Resolves inputs and schema into a preprocessed database.
fn load(args: &InputArgs, config: &JobConfig) -> Result<Loaded, Failure> {
    let spec = args
        .schema
        .clone()
        .or_else(|| config.schema.clone())
        .unwrap_or_else(|| "builtin:dataset1".into());
    let inputs = if args.input.is_empty() {
        config.input.clone().unwrap_or_default()
    } else {
        args.input.clone()
    };
    let target = args.target.clone().or_else(|| config.target.clone());
    let retarget = |mut schema: Schema| -> Result<Schema, Failure> {
        if let Some(t) = &target {
            schema.target = t.clone();
            schema.validate()?;
        }
        Ok(schema)
    };

    let (db, tag, stats) = match schema_source(&spec)? {
        SchemaSource::Builtin(ds) => {
            let schema = retarget(builtin_schema(ds))?;
            let raw = if inputs.is_empty() {
                let (tables, source) = raw_tables(ds, seed(args.seed, config))?;
                if let Source::Surrogate { .. } = source {
                    eprintln!("note: {} data from {source}", schema.name);
                }
                union(tables)?
            } else {
                let delim = schema.delimiter_byte()?;
                union(inputs.iter().map(|p| load_csv(p, delim)).collect::<arm_forge::Result<_>>()?)?
            };
            let (db, stats) = preprocess_with_stats(&raw, &schema)?;
            (db, schema.name.clone(), stats)
        }
        SchemaSource::Infer => {
            if inputs.is_empty() {
                return Err(invalid("--schema infer needs --input"));
            }
            let target = target.clone().ok_or_else(|| invalid("--schema infer needs --target"))?;
            let raw = union(inputs.iter().map(|p| load_csv(p, b',')).collect::<arm_forge::Result<_>>()?)?;
            let schema = Schema::infer(&raw, &target)?;
            let (db, stats) = preprocess_with_stats(&raw, &schema)?;
            (db, file_tag(&inputs[0]), stats)
        }
        SchemaSource::File(path) => {
            if inputs.is_empty() {
                return Err(invalid("a schema file needs --input"));
            }
            let schema = retarget(Schema::load(&path)?)?;
            let (db, stats) = load_and_preprocess(&inputs, &schema)?;
            let tag = if schema.name.is_empty() { file_tag(&path) } else { schema.name.clone() };
            (db, tag, stats)
        }
    };
    Ok(Loaded { db, tag, stats })
}

fn file_tag(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn write_file(path: &Path, write: impl FnOnce(&mut io::BufWriter<fs::File>) -> arm_forge::Result<()>) -> CmdResult {
    let file = fs::File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let mut w = io::BufWriter::new(file);
    write(&mut w)?;
    w.flush().map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn cmd_mine(args: MineArgs, config: &JobConfig) -> CmdResult {
    let th = thresholds(&args.thresholds, config)?;
    let algorithm = single_algorithm(&args.algorithm, config)?;
    let loaded = load(&args.input, config)?;
    let db = &loaded.db;
    let t0 = Instant::now();
    let freq = mine(db, algorithm, &th)?;
    let target = if args.all_consequents { None } else { db.target() };
    let rules = generate_rules(&freq, db, &th, target)?;
    let elapsed = t0.elapsed().as_secs_f64();
    let format = match args.format {
        RulesFormat::Csv => RuleFormat::Csv,
        RulesFormat::Jsonl => RuleFormat::Jsonl,
    };
    export_rules(&rules, format, &args.out)?;
    println!("dataset: {} ({} rows, {} items)", loaded.tag, db.n_rows(), db.n_items());
    println!(
        "algorithm: {algorithm}, frequent itemsets: {}, candidates: {}, iterations: {}",
        freq.len(),
        freq.candidate_count,
        freq.iteration_count
    );
    println!(
        "rules: {} common, {} exception",
        rules.count(RuleKind::Common),
        rules.count(RuleKind::Exception)
    );
    println!("elapsed: {elapsed:.4} s");
    Ok(())
}

fn ordering_violations(reports: &[BenchReport]) -> Vec<String> {
    let get = |a: Algorithm| reports.iter().find(|r| r.algorithm == a);
    let mut bad = Vec::new();
    let (Some(ap), Some(fp), Some(fa)) = (get(Algorithm::Apriori), get(Algorithm::FpGrowth), get(Algorithm::Faster))
    else {
        bad.push("ordering needs apriori, fpgrowth and faster".to_string());
        return bad;
    };
    if !(fa.overall.median < fp.overall.median && fp.overall.median < ap.overall.median) {
        bad.push(format!(
            "median times faster {:.6} s, fpgrowth {:.6} s, apriori {:.6} s are not strictly increasing",
            fa.overall.median, fp.overall.median, ap.overall.median
        ));
    }
    if fa.candidate_count >= ap.candidate_count {
        bad.push(format!(
            "faster tested {} candidates, apriori {}",
            fa.candidate_count, ap.candidate_count
        ));
    }
    bad
}

fn cmd_bench(args: BenchArgs, config: &JobConfig) -> CmdResult {
    let th = thresholds(&args.thresholds, config)?;
    let algs = algorithms(&args.algorithm, config, &Algorithm::ALL)?;
    let reps = args.reps.or(config.reps).unwrap_or(DEFAULT_REPS);
    if reps == 0 {
        return Err(invalid("--reps must be at least 1"));
    }
    let loaded = load(&args.input, config)?;
    let reports = algs
        .iter()
        .map(|&a| run_bench(&loaded.db, a, &th, reps, &loaded.tag))
        .collect::<arm_forge::Result<Vec<_>>>()?;
    let format = match args.format {
        BenchFormat::Csv => ReportFormat::Csv,
        BenchFormat::Markdown => ReportFormat::Markdown,
    };
    emit_report(&reports, format, &args.out)?;
    for r in &reports {
        println!(
            "{:>8}: median {:.6} s, candidates {}, iterations {}, frequent itemsets {}",
            r.algorithm.as_str(),
            r.overall.median,
            r.candidate_count,
            r.iteration_count,
            r.frequent_itemsets
        );
    }
    if args.assert_ordering {
        let bad = ordering_violations(&reports);
        if !bad.is_empty() {
            return Err(Failure::Runtime(format!("ordering check failed: {}", bad.join("; "))));
        }
        println!("ordering: ok");
    }
    Ok(())
}

fn cmd_classify(args: ClassifyArgs, config: &JobConfig) -> CmdResult {
    let th = thresholds(&args.thresholds, config)?;
    let algorithm = single_algorithm(&args.algorithm, config)?;
    let names = if args.model.is_empty() {
        config.model.clone().map(|m| m.into_vec()).unwrap_or_default()
    } else {
        args.model.clone()
    };
    let models = if names.is_empty() {
        Model::ALL.to_vec()
    } else {
        names.iter().map(|m| m.parse()).collect::<arm_forge::Result<Vec<Model>>>()?
    };
    let folds = args.folds.or(config.folds).unwrap_or(DEFAULT_FOLDS);
    let seed = seed(args.input.seed, config);
    let loaded = load(&args.input, config)?;
    let db = &loaded.db;
    if folds > db.n_rows() {
        return Err(invalid(format!("{folds} folds exceed {} rows", db.n_rows())));
    }
    let freq = mine(db, algorithm, &th)?;
    let rules = generate_rules(&freq, db, &th, db.target())?;
    let features = select_features(&rules)?;
    let total = db.attributes().len() - 1;
    println!(
        "selected {} of {} attributes: {}",
        features.len(),
        total,
        features.attributes.iter().cloned().collect::<Vec<_>>().join(", ")
    );
    let mut results = Vec::new();
    for &m in &models {
        for fs in [None, Some(&features)] {
            let r = kfold_cv(db, m, folds, fs, seed)?;
            println!("{:>20} {:>8}: mean accuracy {:.4}", m.as_str(), r.mode.to_string(), r.mean);
            results.push(r);
        }
    }
    write_file(&args.out, |w| write_cv_csv(&results, w))
}

fn parse_sweep(s: &str) -> Result<(usize, usize), Failure> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| invalid(format!("sweep {s:?} is not LO..HI")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| invalid(format!("sweep bound {v:?} is not a count")))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo == 0 || lo > hi {
        return Err(invalid(format!("sweep {s:?} must satisfy 1 <= LO <= HI")));
    }
    Ok((lo, hi))
}

fn cmd_synth(args: SynthArgs, config: &JobConfig) -> CmdResult {
    let spec = SyntheticSpec {
        n_rows: args.rows,
        n_attributes: args.attributes,
        values_per_attribute: args.values,
        skew: args.skew,
        seed: seed(args.seed, config),
    };
    let sweep = args.sweep.as_deref().map(parse_sweep).transpose()?;
    if sweep.is_some() && args.curve.is_none() {
        return Err(invalid("--sweep needs --curve"));
    }
    if !(0.0..=1.0).contains(&args.sweep_support) {
        return Err(invalid(format!("--sweep-support {} is not in [0, 1]", args.sweep_support)));
    }
    let algs = algorithms(&args.algorithm, config, &[Algorithm::Apriori, Algorithm::Faster])?;
    let db = gen_synthetic(&spec)?;
    write_file(&args.out, |w| write_db_csv(&db, w))?;
    println!("wrote {} rows over {} attributes", db.n_rows(), spec.n_attributes);
    if let (Some((lo, hi)), Some(curve)) = (sweep, &args.curve) {
        let points = sweep_dimensions(&spec, lo..=hi, args.sweep_support, &algs)?;
        write_file(curve, |w| write_curve_csv(&points, w))?;
        for &a in &algs {
            match log_slope(&points, a) {
                Some(s) => println!("{:>8}: log(candidates) slope {s:.4} per attribute", a.as_str()),
                None => println!("{:>8}: slope undefined", a.as_str()),
            }
        }
    }
    Ok(())
}

fn cmd_preprocess(args: PreprocessArgs, config: &JobConfig) -> CmdResult {
    let loaded = load(&args.input, config)?;
    write_file(&args.out, |w| write_db_csv(&loaded.db, w))?;
    let s = &loaded.stats;
    println!(
        "{}: {} source rows, {} with missing values, {} duplicates, {} kept, {} items",
        loaded.tag,
        s.source_rows,
        s.missing_rows,
        s.duplicate_rows,
        s.kept_rows,
        loaded.db.n_items()
    );
    Ok(())
}
