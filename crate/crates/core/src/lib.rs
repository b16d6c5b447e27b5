//! Frequent itemset mining and association rule extraction with a
//! probability-prefiltered, database-shrinking Apriori variant, classic
//! Apriori and FP-Growth baselines, common/exception rule classification by
//! CPIR, ingestion of tabular student records, a benchmark harness and a
//! cross-validated feature-selection evaluation.

pub mod apriori;
pub mod bench;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod faster;
pub mod fixtures;
pub mod fpgrowth;
pub mod frequent;
pub mod ingest;
pub mod measures;
pub mod rulegen;
pub mod types;

pub use error::{Error, Result};
pub use faster::{explain_reduction, mine_frequent_faster, prefilter, CountingMode, FasterMiner, PrefilterReport, ReductionTrace};
pub use frequent::{mine, Algorithm, FrequentItemsets};
pub use rulegen::{brute_force_oracle, export_rules, generate_rules, RuleFormat, RuleSet};
pub use types::{
    min_count, Item, ItemId, Itemset, Rule, RuleKind, SupportInterval, Thresholds, Transaction, TransactionDb,
    TransactionDbBuilder,
};
