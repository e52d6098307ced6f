//! Observables and Weyl expectation values from signed spectrogram densities.

mod estimate;
mod experiment;
mod histogram;
mod observable;
mod oracle;

pub use estimate::{
    batch_means, combine_samples, deterministic_expectation, estimate_expectation, integrate_mu, order_seed,
    sample_orders, ExpectationResult, BATCHES, DETERMINISTIC_NODES,
};
pub use experiment::{convergence_experiment, loglog_slope, ConvergenceRow, ConvergenceTable};
pub use histogram::{weighted_histogram, HistGrid, SignedGrid, MAX_BINS};
pub use observable::{parse_observable, Expr, Func, Observable, Polynomial};
pub use oracle::{gaussian_weyl_oracle, OracleValue, ORACLE_NODES};
