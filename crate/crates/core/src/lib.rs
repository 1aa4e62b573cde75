//! Sufficient dimension reduction for metric-space valued responses.
//!
//! Responses live in a metric space (univariate distributions, SPD matrices,
//! the unit sphere). A kernel of the response distance turns each observed
//! response into a real-valued ensemble member, and classical SDR estimators
//! are averaged over the ensemble to recover the central subspace of the
//! Euclidean predictors.

pub mod error;
pub mod experiment;
pub mod fit;
pub mod forward;
pub mod inverse;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod moment;
pub mod simulate;

pub use error::{Result, SdrError};
pub use fit::{fit, FitOptions, FitReport, Method};
pub use kernels::{KernelFamily, KernelSpec};
pub use linalg::{projection_distance, PredictorMatrix};
pub use metrics::{MetricKind, ResponseSet};
pub use simulate::{ModelId, SimConfig};
