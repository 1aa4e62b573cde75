use thiserror::Error;

pub type Result<T> = std::result::Result<T, SdrError>;

#[derive(Debug, Error)]
pub enum SdrError {
    #[error("sample lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e}, floor {floor:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64, floor: f64 },

    #[error("vector is not unit length (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("response {0} does not match metric {1}")]
    IncompatibleMetric(&'static str, &'static str),

    #[error("distance between responses {i} and {j}: {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<SdrError>,
    },

    #[error("all off-diagonal distances are zero; cannot select a kernel bandwidth")]
    DegenerateDistances,

    #[error("invalid kernel parameter: {0}")]
    InvalidKernel(String),

    #[error("sample covariance is singular (smallest eigenvalue {min_eigenvalue:.3e})")]
    SingularCovariance { min_eigenvalue: f64 },

    #[error("predictor column {0} has zero variance")]
    ZeroVariance(usize),

    #[error("basis is rank deficient")]
    RankDeficient,

    #[error("kernel column is constant; cannot slice")]
    DegenerateColumn,

    #[error("{skipped} of {total} ensemble members are degenerate")]
    TooManyDegenerate { skipped: usize, total: usize },

    #[error("local weighted least squares at center {0} is singular")]
    SingularLocalFit(usize),

    #[error("MAVE basis update system is singular")]
    SingularMaveSystem,

    #[error("invalid model configuration: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<SdrError>,
    },
}

impl SdrError {
    pub(crate) fn at_stage(self, stage: &'static str) -> SdrError {
        SdrError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage and pair wrappers.
    pub fn root(&self) -> &SdrError {
        match self {
            SdrError::Stage { source, .. } | SdrError::Pair { source, .. } => source.root(),
            other => other,
        }
    }

    /// Whether the failure comes from the input data rather than from a
    /// numerical breakdown during fitting.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self.root(),
            SdrError::LengthMismatch { .. }
                | SdrError::NonFinite(_)
                | SdrError::Empty(_)
                | SdrError::DimMismatch { .. }
                | SdrError::ShapeMismatch(_)
                | SdrError::NotSymmetric { .. }
                | SdrError::NotPositiveDefinite { .. }
                | SdrError::NotUnit { .. }
                | SdrError::IncompatibleMetric(..)
                | SdrError::ZeroVariance(_)
        )
    }
}

impl SdrError {
    /// Whether the failure comes from invalid options rather than data or
    /// numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self.root(),
            SdrError::InvalidKernel(_) | SdrError::InvalidModel(_) | SdrError::InvalidArgument(_)
        )
    }

    /// Name of the outermost pipeline stage that failed, if recorded.
    pub fn stage_name(&self) -> Option<&'static str> {
        match self {
            SdrError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
