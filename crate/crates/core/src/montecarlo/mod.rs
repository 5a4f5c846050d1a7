//! Replicated experiments, aggregation, and theory-versus-simulation checks.

pub mod checks;
pub mod insights;
pub mod lemmas;
pub mod rng;
pub mod stats;
pub mod suites;
pub mod sweep;

pub use checks::{check_bounds, check_exact, CheckOutcome};
pub use insights::{insight_checks, InsightEntry, InsightReport, InsightSuite};
pub use lemmas::{verify_lemma_suite, LemmaReport};
pub use stats::{NeumaierSum, Summary};
pub use suites::{run_cases, standard_cases, CheckCase, CheckReport, Expectation};
pub use sweep::{run_sweep, Metric, SweepRecord, SweepSpec, SweepVariable};
