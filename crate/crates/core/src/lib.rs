//! Polynomial approximation of smooth functions on `[-1, 1]^d` from random
//! samples.

pub mod error;
pub mod harness;
pub mod multi_index;
pub mod oracles;
pub mod poly_basis;
pub mod rng;
pub mod sampling;
pub mod sr_lasso;
pub mod test_functions;
pub mod weighted_ls;

pub use error::{Error, Result};
pub use harness::{run_experiment, ExperimentConfig, ExperimentOutput, Method, OutputFormat, RecordRow, CSV_HEADER};
pub use multi_index::{IndexSet, MultiIndex};
pub use poly_basis::{BasisFamily, CoefVector, DesignMatrix, Points};
pub use sampling::{Grid, GridDistribution, SampleSet, SamplingStrategy};
pub use sr_lasso::{CsConfig, CsResult, CsSampling, LambdaPolicy};
pub use test_functions::Target;
pub use weighted_ls::{AlsConfig, AlsSampling, Noise, Scaling};
