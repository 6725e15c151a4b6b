//! Goal-oriented global sensitivity analysis for constrained optimization.
//!
//! The crate computes variance-based (Sobol) and kernel-based (HSIC with an
//! indicator-thresholded output, "HSIC-IT") sensitivity indices of a
//! constrained minimization problem, screens the inputs that do not matter
//! for reaching low feasible objective values, freezes them with a random or
//! greedy rule, and runs multistart studies of a derivative-free local
//! optimizer on the reduced problems.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`problem`] | problem definitions, batched evaluation, feasibility |
//! | [`sampling`] | seeded uniform and maximin LHS designs, quantiles |
//! | [`thresholding`] | sublevel set and the three output transforms |
//! | [`sobol`] | pick-freeze and given-data Sobol indices |
//! | [`kernels`] | kernels, Gram matrices, centering, median heuristic |
//! | [`hsic`] | MMD, HSIC, HSIC-IT and repeated index tables |
//! | [`optimize`] | screening, freezing, reduction, optimizer, study harness |
//! | [`benchmarks`] | closed-form test problems |
//! | [`cli`] | command-line front end |

pub mod benchmarks;
pub mod cli;
pub mod hsic;
pub mod kernels;
pub mod optimize;
pub mod problem;
pub mod sampling;
pub mod sobol;
pub mod thresholding;

mod error;

pub use error::{Error, Result};
pub use problem::{BoxDomain, EvaluatedDesign, ProblemSpec};
pub use sampling::Seed;
