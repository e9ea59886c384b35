//! Top-k multiclass SVM: exact projections onto the top-k simplex and cone,
//! top-k hinge losses, and a Prox-SDCA trainer.

pub mod bench;
pub mod error;
pub mod io;
pub mod losses;
pub mod numkit;
pub mod oracle;
pub mod projections;
pub mod solver;

pub use error::{Error, Result};
pub use io::{read_libsvm, read_model, write_libsvm, write_model, Dataset};
pub use losses::{LossSpec, LossVariant, MarginVector};
pub use numkit::DenseMatrix;
pub use solver::{predict_scores, train, Model, SolverConfig, TrainReport};
