//! Access to the two student-record datasets.
//!
//! When `ARM_FORGE_UCI_DIR` points at a directory holding the original UCI
//! files (`student-mat.csv` and `student-por.csv` for dataset1, `DATA.csv`
//! for dataset2) those are loaded. Otherwise a seeded surrogate with the same
//! raw column layout is generated. The surrogate draws every attribute from
//! fixed marginals, except for a few attributes whose distribution depends on
//! the grade class so that class rules exist at the default thresholds.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{builtin_schema, load_csv, preprocess_with_stats, Dataset, PreprocessStats, RawTable};
use crate::types::TransactionDb;

pub const UCI_DIR_ENV: &str = "ARM_FORGE_UCI_DIR";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Uci(PathBuf),
    Surrogate { seed: u64 },
}

impl Source {
    pub fn is_surrogate(&self) -> bool {
        matches!(self, Source::Surrogate { .. })
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Uci(dir) => write!(f, "UCI files in {}", dir.display()),
            Source::Surrogate { seed } => write!(f, "surrogate (seed {seed})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub db: TransactionDb,
    pub stats: PreprocessStats,
    pub source: Source,
}

fn uci_files(dataset: Dataset) -> &'static [&'static str] {
    match dataset {
        Dataset::Dataset1 => &["student-mat.csv", "student-por.csv"],
        Dataset::Dataset2 => &["DATA.csv"],
    }
}

/// Picks `;` or `,` by which occurs more often in the header line.
fn sniff_delimiter(path: &Path) -> Result<u8> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().next().unwrap_or("");
    let semis = first.matches(';').count();
    let commas = first.matches(',').count();
    Ok(if semis > commas { b';' } else { b',' })
}

/// Raw tables for a dataset: the UCI files when available, else the surrogate.
pub fn raw_tables(dataset: Dataset, seed: u64) -> Result<(Vec<RawTable>, Source)> {
    if let Some(dir) = std::env::var_os(UCI_DIR_ENV).map(PathBuf::from) {
        let paths: Vec<PathBuf> = uci_files(dataset).iter().map(|f| dir.join(f)).collect();
        if paths.iter().all(|p| p.is_file()) {
            let tables = paths
                .iter()
                .map(|p| load_csv(p, sniff_delimiter(p)?))
                .collect::<Result<Vec<_>>>()?;
            return Ok((tables, Source::Uci(dir)));
        }
        log::warn!("{UCI_DIR_ENV} is set but {:?} are missing; using the surrogate", uci_files(dataset));
    }
    let tables = match dataset {
        Dataset::Dataset1 => surrogate_dataset1(seed),
        Dataset::Dataset2 => vec![surrogate_dataset2(seed)],
    };
    Ok((tables, Source::Surrogate { seed }))
}

pub fn load_dataset(dataset: Dataset, seed: u64) -> Result<LoadedDataset> {
    let (tables, source) = raw_tables(dataset, seed)?;
    let mut tables = tables.into_iter();
    let mut raw = tables.next().expect("at least one table");
    for t in tables {
        raw.append(t)?;
    }
    let (db, stats) = preprocess_with_stats(&raw, &builtin_schema(dataset))?;
    Ok(LoadedDataset {
        dataset,
        db,
        stats,
        source,
    })
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

/// Draws from `labels` with `weights`.
fn draw<R: Rng>(rng: &mut R, labels: &[&str], weights: &[f64]) -> String {
    labels[pick(rng, weights)].to_string()
}

/// Value `hit` with probability `p`, otherwise one of `rest` uniformly.
fn planted<R: Rng>(rng: &mut R, p: f64, hit: &str, rest: &[&str]) -> String {
    if rng.random::<f64>() < p {
        hit.to_string()
    } else {
        rest[rng.random_range(0..rest.len())].to_string()
    }
}

fn yes_no<R: Rng>(rng: &mut R, p_yes: f64) -> String {
    if rng.random::<f64>() < p_yes { "yes" } else { "no" }.to_string()
}

const D1_HEADER: [&str; 33] = [
    "school", "sex", "age", "address", "famsize", "Pstatus", "Medu", "Fedu", "Mjob", "Fjob", "reason",
    "guardian", "traveltime", "studytime", "failures", "schoolsup", "famsup", "paid", "activities",
    "nursery", "higher", "internet", "romantic", "famrel", "freetime", "goout", "Dalc", "Walc", "health",
    "absences", "G1", "G2", "G3",
];

fn d1_row<R: Rng>(rng: &mut R) -> Vec<String> {
    // 0 = Bad (G3 < 10), 1 = Average, 2 = Good (G3 >= 15).
    let class = pick(rng, &[0.3, 0.5, 0.2]);
    let g3: i32 = match class {
        0 => rng.random_range(0..10),
        1 => rng.random_range(10..15),
        _ => rng.random_range(15..=20),
    };
    let near = |rng: &mut R, g: i32| (g + rng.random_range(-2..=2)).clamp(0, 20).to_string();
    let g1 = near(rng, g3);
    let g2 = near(rng, g3);
    let s15 = ["1", "2", "3", "4", "5"];

    let studytime = if class == 0 {
        planted(rng, 0.9, "1", &["2", "3", "4"])
    } else {
        draw(rng, &s15[..4], &[0.1, 0.55, 0.25, 0.1])
    };
    let goout = if class == 0 {
        planted(rng, 0.9, "4", &["1", "2", "3"])
    } else {
        draw(rng, &s15, &[0.1, 0.3, 0.45, 0.1, 0.05])
    };
    let reason = if class == 1 {
        planted(rng, 0.85, "course", &["home", "reputation", "other"])
    } else {
        draw(rng, &["home", "reputation", "course", "other"], &[0.35, 0.3, 0.2, 0.15])
    };
    let absences = if class == 1 {
        rng.random_range(1..=5)
    } else if rng.random::<f64>() < 0.5 {
        0
    } else {
        rng.random_range(6..=40)
    };
    // Students without higher-education plans carry most past failures.
    let higher = yes_no(rng, [0.8, 0.93, 0.99][class]);
    let failures = if higher == "no" {
        draw(rng, &["0", "1", "2", "3"], &[0.1, 0.5, 0.25, 0.15])
    } else {
        match class {
            0 => draw(rng, &["0", "1", "2", "3"], &[0.9, 0.07, 0.02, 0.01]),
            1 => draw(rng, &["0", "1", "2", "3"], &[0.98, 0.015, 0.005, 0.0]),
            _ => draw(rng, &["0", "1"], &[0.995, 0.005]),
        }
    };
    let medu = draw(rng, &["0", "1", "2", "3", "4"], &[0.01, 0.15, 0.27, 0.22, 0.35]);

    vec![
        draw(rng, &["GP", "MS"], &[0.7, 0.3]),
        draw(rng, &["F", "M"], &[0.53, 0.47]),
        draw(rng, &["15", "16", "17", "18", "19", "20", "21", "22"], &[0.18, 0.27, 0.26, 0.21, 0.06, 0.01, 0.005, 0.005]),
        draw(rng, &["U", "R"], &[0.72, 0.28]),
        draw(rng, &["GT3", "LE3"], &[0.7, 0.3]),
        draw(rng, &["T", "A"], &[0.88, 0.12]),
        medu,
        draw(rng, &["0", "1", "2", "3", "4"], &[0.01, 0.22, 0.3, 0.25, 0.22]),
        draw(rng, &["teacher", "health", "services", "at_home", "other"], &[0.12, 0.08, 0.25, 0.2, 0.35]),
        draw(rng, &["teacher", "health", "services", "at_home", "other"], &[0.06, 0.04, 0.28, 0.06, 0.56]),
        reason,
        draw(rng, &["mother", "father", "other"], &[0.7, 0.23, 0.07]),
        draw(rng, &["1", "2", "3", "4"], &[0.6, 0.3, 0.07, 0.03]),
        studytime,
        failures,
        yes_no(rng, 0.11),
        yes_no(rng, 0.61),
        yes_no(rng, 0.21),
        yes_no(rng, 0.49),
        yes_no(rng, 0.8),
        higher,
        yes_no(rng, 0.8),
        yes_no(rng, 0.36),
        draw(rng, &s15, &[0.03, 0.05, 0.16, 0.48, 0.28]),
        draw(rng, &s15, &[0.06, 0.16, 0.4, 0.28, 0.1]),
        goout,
        draw(rng, &s15, &[0.7, 0.18, 0.07, 0.02, 0.03]),
        draw(rng, &s15, &[0.38, 0.23, 0.2, 0.13, 0.06]),
        draw(rng, &s15, &[0.13, 0.12, 0.2, 0.17, 0.38]),
        absences.to_string(),
        g1,
        g2,
        g3.to_string(),
    ]
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> RawTable {
    RawTable {
        header: header.iter().map(|h| h.to_string()).collect(),
        n_source_rows: rows.len(),
        rows,
    }
}

/// Math (395 rows) and Portuguese (649 rows) course tables.
pub fn surrogate_dataset1(seed: u64) -> Vec<RawTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1);
    let mat = (0..395).map(|_| d1_row(&mut rng)).collect();
    let por = (0..649).map(|_| d1_row(&mut rng)).collect();
    vec![table(&D1_HEADER, mat), table(&D1_HEADER, por)]
}

fn d2_header() -> Vec<String> {
    let mut h = vec!["STUDENT ID".to_string()];
    h.extend((1..=30).map(|i| i.to_string()));
    h.push("COURSE ID".into());
    h.push("GRADE".into());
    h
}

fn codes(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn draw_code<R: Rng>(rng: &mut R, weights: &[f64]) -> String {
    (pick(rng, weights) + 1).to_string()
}

fn planted_code<R: Rng>(rng: &mut R, p: f64, hit: usize, n: usize) -> String {
    let rest: Vec<String> = codes(n).into_iter().filter(|c| *c != hit.to_string()).collect();
    let rest: Vec<&str> = rest.iter().map(String::as_str).collect();
    planted(rng, p, &hit.to_string(), &rest)
}

/// 147 coded survey rows.
pub fn surrogate_dataset2(seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD2);
    let rows = (0..147)
        .map(|i| {
            let rng = &mut rng;
            let class = pick(rng, &[0.45, 0.33, 0.22]);
            let grade = match class {
                0 => rng.random_range(0..=2),
                1 => rng.random_range(3..=5),
                _ => rng.random_range(6..=7),
            };
            let mut r = vec![format!("STUDENT{}", i + 1)];
            r.push(draw_code(rng, &[0.45, 0.48, 0.07]));
            r.push(draw_code(rng, &[0.4, 0.6]));
            r.push(draw_code(rng, &[0.17, 0.71, 0.12]));
            r.push(draw_code(rng, &[0.01, 0.02, 0.52, 0.24, 0.21]));
            r.push(draw_code(rng, &[0.33, 0.67]));
            r.push(draw_code(rng, &[0.4, 0.6]));
            r.push(draw_code(rng, &[0.45, 0.55]));
            r.push(draw_code(rng, &[0.75, 0.1, 0.06, 0.05, 0.04]));
            r.push(draw_code(rng, &[0.65, 0.25, 0.02, 0.08]));
            r.push(draw_code(rng, &[0.45, 0.35, 0.18, 0.02]));
            r.push(draw_code(rng, &[0.45, 0.25, 0.2, 0.08, 0.01, 0.01]));
            r.push(draw_code(rng, &[0.25, 0.25, 0.3, 0.15, 0.03, 0.02]));
            r.push(draw_code(rng, &[0.15, 0.25, 0.25, 0.15, 0.2]));
            r.push(draw_code(rng, &[0.85, 0.08, 0.07]));
            r.push(draw_code(rng, &[0.06, 0.7, 0.08, 0.06, 0.05, 0.05]));
            r.push(draw_code(rng, &[0.15, 0.3, 0.25, 0.2, 0.1]));
            // Weekly study hours: Bad students mostly under 5h.
            r.push(if class == 0 {
                planted_code(rng, 0.9, 2, 5)
            } else {
                draw_code(rng, &[0.1, 0.1, 0.45, 0.25, 0.1])
            });
            r.push(draw_code(rng, &[0.1, 0.7, 0.2]));
            r.push(draw_code(rng, &[0.1, 0.65, 0.25]));
            r.push(draw_code(rng, &[0.7, 0.3]));
            // Project impact: Good students positive.
            r.push(if class == 2 {
                planted_code(rng, 0.95, 1, 3)
            } else {
                draw_code(rng, &[0.5, 0.1, 0.4])
            });
            r.push(draw_code(rng, &[0.75, 0.25, 0.0]));
            r.push(draw_code(rng, &[0.75, 0.2, 0.05]));
            // Exam preparation date: Bad students cram.
            r.push(if class == 0 {
                planted_code(rng, 0.9, 1, 3)
            } else {
                draw_code(rng, &[0.35, 0.6, 0.05])
            });
            // Note taking and discussion: Average students always.
            r.push(if class == 1 {
                planted_code(rng, 0.85, 3, 3)
            } else {
                draw_code(rng, &[0.05, 0.65, 0.3])
            });
            r.push(draw_code(rng, &[0.05, 0.6, 0.35]));
            r.push(if class == 1 {
                planted_code(rng, 0.85, 3, 3)
            } else {
                draw_code(rng, &[0.05, 0.7, 0.25])
            });
            r.push(draw_code(rng, &[0.2, 0.7, 0.1]));
            r.push(draw_code(rng, &[0.2, 0.3, 0.25, 0.15, 0.1]));
            r.push(draw_code(rng, &[0.1, 0.3, 0.3, 0.2, 0.1]));
            r.push(rng.random_range(1..=9).to_string());
            r.push(grade.to_string());
            r
        })
        .collect();
    let header = d2_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    table(&header, rows)
}
