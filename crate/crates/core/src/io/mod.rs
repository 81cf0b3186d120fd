//! Matrix Market files and the batch pipeline behind the CLI.

pub mod mtx;
pub mod run;

pub use mtx::{parse_matrix_market, read_matrix_market, write_matrix_market, write_matrix_market_to};
pub use run::{
    auto_dispatch, init_threads_from_env, prepare, run, run_matrix, solve, InputKind, MethodChoice, Normalization,
    OutputFormat, PreparedChain, Report, RunConfig, SccReduction,
};
