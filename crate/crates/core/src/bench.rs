//! Timing and work-counter harness, plus the synthetic database generator
//! used for the dimensionality sweep.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::apriori::mine_frequent_apriori;
use crate::error::{Error, Result};
use crate::faster::FasterMiner;
use crate::fpgrowth::mine_fpgrowth;
use crate::frequent::{mine, Algorithm, FrequentItemsets};
use crate::rulegen::{generate_class_rules, generate_rules};
use crate::types::{Thresholds, TransactionDb, TransactionDbBuilder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub samples: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
}

impl TimingStats {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        assert!(!samples.is_empty(), "at least one timing sample");
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        TimingStats {
            min: sorted[0],
            median,
            mean: samples.iter().sum::<f64>() / n as f64,
            samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub algorithm: Algorithm,
    pub dataset: String,
    pub repetitions: usize,
    pub overall: TimingStats,
    /// One class-targeted job per value of the target attribute.
    pub per_class: Vec<(String, TimingStats)>,
    pub candidate_count: u64,
    pub iteration_count: usize,
    pub n_rows: usize,
    pub distinct_items: usize,
    pub frequent_itemsets: usize,
    pub rules: usize,
}

/// Repetition count after the warm-up run is discarded.
pub fn kept_repetitions(repetitions: usize) -> usize {
    if repetitions >= 3 {
        repetitions - 1
    } else {
        repetitions
    }
}

fn time_reps<T>(repetitions: usize, mut job: impl FnMut() -> Result<T>) -> Result<(Vec<f64>, T)> {
    let mut samples = Vec::with_capacity(repetitions);
    let mut last = None;
    for _ in 0..repetitions {
        let t0 = Instant::now();
        let out = job()?;
        samples.push(t0.elapsed().as_secs_f64().max(f64::MIN_POSITIVE));
        last = Some(out);
    }
    if repetitions >= 3 {
        samples.remove(0);
    }
    Ok((samples, last.expect("repetitions >= 1")))
}

/// Times mining plus rule generation. Ingestion is outside the timed region.
pub fn run_bench(
    db: &TransactionDb,
    algorithm: Algorithm,
    thresholds: &Thresholds,
    repetitions: usize,
    dataset: &str,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    thresholds.validate()?;
    let target = db.target();
    let (samples, (freq, rules)) = time_reps(repetitions, || {
        let freq = mine(db, algorithm, thresholds)?;
        let rules = generate_rules(&freq, db, thresholds, target)?;
        Ok((freq, rules))
    })?;

    let mut per_class = Vec::new();
    if let Some(t) = target {
        let attr = db.attribute_index(t).expect("target is an attribute");
        for class in db.items_of_attribute(attr) {
            let (s, _) = time_reps(repetitions, || {
                let freq = mine(db, algorithm, thresholds)?;
                generate_class_rules(&freq, db, thresholds, class)
            })?;
            per_class.push((db.render(class), TimingStats::from_samples(s)));
        }
    }

    Ok(BenchReport {
        algorithm,
        dataset: dataset.to_string(),
        repetitions,
        overall: TimingStats::from_samples(samples),
        per_class,
        candidate_count: freq.candidate_count,
        iteration_count: freq.iteration_count,
        n_rows: db.n_rows(),
        distinct_items: db.n_items(),
        frequent_itemsets: freq.len(),
        rules: rules.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidArgument(format!("unknown report format {other:?}"))),
        }
    }
}

pub const REPORT_COLUMNS: [&str; 13] = [
    "algorithm",
    "dataset",
    "scope",
    "repetitions",
    "min_s",
    "median_s",
    "mean_s",
    "candidate_count",
    "iteration_count",
    "n_rows",
    "distinct_items",
    "frequent_itemsets",
    "rules",
];

/// Columns holding wall-clock measurements; everything else is deterministic.
pub const TIMING_COLUMNS: [&str; 3] = ["min_s", "median_s", "mean_s"];

fn report_rows(r: &BenchReport) -> Vec<Vec<String>> {
    let row = |scope: &str, t: &TimingStats| {
        vec![
            r.algorithm.to_string(),
            r.dataset.clone(),
            scope.to_string(),
            r.repetitions.to_string(),
            format!("{:.6}", t.min),
            format!("{:.6}", t.median),
            format!("{:.6}", t.mean),
            r.candidate_count.to_string(),
            r.iteration_count.to_string(),
            r.n_rows.to_string(),
            r.distinct_items.to_string(),
            r.frequent_itemsets.to_string(),
            r.rules.to_string(),
        ]
    };
    let mut out = vec![row("overall", &r.overall)];
    for (class, t) in &r.per_class {
        out.push(row(&format!("class:{class}"), t));
    }
    out
}

/// CSV keeps input order, one overall row plus one row per class for each
/// report. Markdown shows overall rows only, sorted by median time.
pub fn report_to_string(reports: &[BenchReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(REPORT_COLUMNS)?;
            for r in reports {
                for row in report_rows(r) {
                    w.write_record(&row)?;
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("report is UTF-8"))
        }
        ReportFormat::Markdown => {
            let mut sorted: Vec<&BenchReport> = reports.iter().collect();
            sorted.sort_by(|a, b| a.overall.median.total_cmp(&b.overall.median));
            let mut s = String::new();
            s.push_str("| algorithm | dataset | reps | min (s) | median (s) | mean (s) | candidates | iterations | rows | items | frequent | rules |\n");
            s.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
            for r in sorted {
                let t = &r.overall;
                s.push_str(&format!(
                    "| {} | {} | {} | {:.6} | {:.6} | {:.6} | {} | {} | {} | {} | {} | {} |\n",
                    r.algorithm,
                    r.dataset,
                    r.repetitions,
                    t.min,
                    t.median,
                    t.mean,
                    r.candidate_count,
                    r.iteration_count,
                    r.n_rows,
                    r.distinct_items,
                    r.frequent_itemsets,
                    r.rules
                ));
            }
            Ok(s)
        }
    }
}

pub fn emit_report(reports: &[BenchReport], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, report_to_string(reports, format)?).map_err(|e| Error::io(path, e))
}

/// One parsed row of a CSV report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub dataset: String,
    pub scope: String,
    pub repetitions: usize,
    pub min_s: f64,
    pub median_s: f64,
    pub mean_s: f64,
    pub candidate_count: u64,
    pub iteration_count: usize,
    pub n_rows: usize,
    pub distinct_items: usize,
    pub frequent_itemsets: usize,
    pub rules: usize,
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    if r.headers()?.iter().ne(REPORT_COLUMNS) {
        return Err(Error::MissingHeader);
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::InvalidArgument(format!("bad number {s:?}")))
        }
        out.push(ReportRow {
            algorithm: rec[0].parse()?,
            dataset: rec[1].to_string(),
            scope: rec[2].to_string(),
            repetitions: num(&rec[3])?,
            min_s: num(&rec[4])?,
            median_s: num(&rec[5])?,
            mean_s: num(&rec[6])?,
            candidate_count: num(&rec[7])?,
            iteration_count: num(&rec[8])?,
            n_rows: num(&rec[9])?,
            distinct_items: num(&rec[10])?,
            frequent_itemsets: num(&rec[11])?,
            rules: num(&rec[12])?,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_attributes: usize,
    pub values_per_attribute: usize,
    /// Probability of each attribute's modal value; the rest is spread evenly.
    pub skew: f64,
    pub seed: u64,
}

/// Rows of one value per attribute. Attribute `a` draws its modal value
/// `v0` with probability `skew`, otherwise one of the others uniformly.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<TransactionDb> {
    if spec.n_attributes == 0 {
        return Err(Error::InvalidArgument("synthetic spec has zero attributes".into()));
    }
    if spec.values_per_attribute == 0 {
        return Err(Error::InvalidArgument("synthetic spec has zero values per attribute".into()));
    }
    if !(0.0..=1.0).contains(&spec.skew) {
        return Err(Error::InvalidArgument(format!("skew {} is not in [0, 1]", spec.skew)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let names: Vec<String> = (0..spec.n_attributes).map(|a| format!("A{a:02}")).collect();
    let mut b = TransactionDbBuilder::with_attributes(names);
    let others = spec.values_per_attribute - 1;
    let mut row = vec![String::new(); spec.n_attributes];
    for _ in 0..spec.n_rows {
        for cell in row.iter_mut() {
            let v = if others == 0 || rng.random::<f64>() < spec.skew {
                0
            } else {
                1 + rng.random_range(0..others)
            };
            *cell = format!("v{v}");
        }
        b.push_row(&row)?;
    }
    b.build(None)
}

/// One point of the dimensionality sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub d: usize,
    pub algorithm: Algorithm,
    pub candidate_count: u64,
    pub iteration_count: usize,
    pub frequent_itemsets: usize,
}

/// Mining-only sweep over the number of attributes. Faster Apriori runs
/// with its prefilter at `min_support`.
pub fn sweep_dimensions(
    base: &SyntheticSpec,
    dims: impl IntoIterator<Item = usize>,
    min_support: f64,
    algorithms: &[Algorithm],
) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for d in dims {
        let db = gen_synthetic(&SyntheticSpec {
            n_attributes: d,
            ..*base
        })?;
        for &algorithm in algorithms {
            let f: FrequentItemsets = match algorithm {
                Algorithm::Apriori => mine_frequent_apriori(&db, min_support)?,
                Algorithm::FpGrowth => mine_fpgrowth(&db, min_support)?,
                Algorithm::Faster => FasterMiner::new(min_support, min_support).run(&db)?.1,
            };
            log::info!("d={d} {algorithm}: {} candidates", f.candidate_count);
            out.push(CurvePoint {
                d,
                algorithm,
                candidate_count: f.candidate_count,
                iteration_count: f.iteration_count,
                frequent_itemsets: f.len(),
            });
        }
    }
    Ok(out)
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["d", "algorithm", "candidate_count", "iteration_count", "frequent_itemsets"])?;
    for p in points {
        w.write_record([
            p.d.to_string(),
            p.algorithm.to_string(),
            p.candidate_count.to_string(),
            p.iteration_count.to_string(),
            p.frequent_itemsets.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Least-squares slope of `ln(candidate_count)` against `d` for one algorithm.
pub fn log_slope(points: &[CurvePoint], algorithm: Algorithm) -> Option<f64> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.algorithm == algorithm && p.candidate_count > 0)
        .map(|p| (p.d as f64, (p.candidate_count as f64).ln()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            n_rows: 50,
            n_attributes: 4,
            values_per_attribute: 3,
            skew: 0.5,
            seed: 11,
        }
    }

    #[test]
    fn full_skew_rows_are_identical() {
        let db = gen_synthetic(&SyntheticSpec { skew: 1.0, ..spec() }).unwrap();
        let first = &db.transactions()[0];
        assert!(db.transactions().iter().all(|t| t == first));
    }

    #[test]
    fn zero_attributes_is_an_error() {
        assert!(gen_synthetic(&SyntheticSpec { n_attributes: 0, ..spec() }).is_err());
    }

    #[test]
    fn warm_up_is_dropped_from_three_reps() {
        assert_eq!(kept_repetitions(1), 1);
        assert_eq!(kept_repetitions(2), 2);
        assert_eq!(kept_repetitions(10), 9);
        let (s, _) = time_reps(5, || Ok(())).unwrap();
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn median_of_even_samples() {
        let t = TimingStats::from_samples(vec![4.0, 1.0, 3.0, 2.0]);
        assert_eq!((t.min, t.median, t.mean), (1.0, 2.5, 2.5));
    }

    #[test]
    fn slope_of_exponential_curve() {
        let pts: Vec<CurvePoint> = (10..=20)
            .map(|d| CurvePoint {
                d,
                algorithm: Algorithm::Apriori,
                candidate_count: (2f64.powi(d as i32)) as u64,
                iteration_count: 1,
                frequent_itemsets: 0,
            })
            .collect();
        let s = log_slope(&pts, Algorithm::Apriori).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-9);
    }
}
