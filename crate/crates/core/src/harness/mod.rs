//! Scenario configuration, workload generation, ground truth and the
//! experiment driver.

mod experiment;
mod oracle;
mod scenario;

pub use experiment::{
    build_instance, descriptor, mean_ci, mix, run, run_query, run_replication, summary, sweep, write_csv, Approach,
    Instance, MetricRecord, QueryRun, Replication, CSV_HEADER,
};
pub use oracle::{oracle_timeline, precision_recall, timelines_agree};
pub use scenario::Scenario;
