//! Running accepted queries, chart specifications with a repair loop, and
//! the archive of replayable test cases.

mod chart;
mod execute;
mod testcase;

pub use chart::{
    chart_prompt, generate_chart, parse_chart_response, validate_chart, ChartAttempt, ChartError, ChartKind,
    ChartOutcome, ChartSpec, SAMPLE_COLUMNS, SAMPLE_ROWS,
};
pub use execute::{execute_query, ColumnType, ExecuteError, Page, PageInfo, ResultColumn, ResultSet, Value};
pub use testcase::{
    replay_testcase, Difference, ReplayError, ReplayOutcome, StorageError, TestCaseParts, TestCaseRecord,
    TestCaseStore, NUMERIC_TOLERANCE, SNAPSHOT_ROWS,
};
