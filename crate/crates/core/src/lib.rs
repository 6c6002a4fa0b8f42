//! Dense symmetric indefinite `LDL^T` factorization with randomized complete
//! pivoting, Bunch-Kaufman and bounded Bunch-Kaufman baselines, a matrix
//! gallery and a benchmark harness.
//!
//! ```
//! use rcp_ldlt::{factor, solve, FactorConfig, SymMatrix};
//!
//! let a = SymMatrix::from_rows([[0.0, 1.0], [1.0, 0.0]]).unwrap();
//! let f = factor(&a, &FactorConfig::default()).unwrap();
//! let x = solve(&f, &[1.0, 2.0]).x;
//! assert_eq!(x, vec![2.0, 1.0]);
//! ```

pub mod bench;
pub mod dense;
pub mod factor;
pub mod gallery;
pub mod metrics;
pub mod parallel;
pub mod pivot;
pub mod sketch;
pub mod solve;

pub use dense::{DenseMatrix, Permutation, SymMatrix};
pub use factor::{
    factor, factor_robust, BlockDiag, BlockPattern, FactorConfig, FactorError, Factorization, GrowthTracking,
    PivotBatch, Strategy,
};
pub use metrics::{GrowthStats, OpCounters};
pub use parallel::Execution;
pub use solve::{solve, solve_many, SolveReport};
