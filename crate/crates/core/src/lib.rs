pub mod cli;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod mc;
pub mod solver;
pub mod theory;
pub mod var;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use var::{Dataset, RegressionProblem, VarModel};
