use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh generation failed: {0}")]
    Mesh(String),

    #[error("invalid boundary conditions: {0}")]
    BoundaryConditions(String),

    #[error("no pressure gauge and no zero-stress boundary")]
    GaugeError,

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("Newton iteration did not converge after {iterations} iterations (relative residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("point ({0}, {1}) lies outside the mesh")]
    PointOutsideMesh(f64, f64),

    #[error("segment at height {y} from x = {x0} to {x1} is not contained in the mesh")]
    SegmentOutsideMesh { y: f64, x0: f64, x1: f64 },

    #[error("averaging kernel integrates to {0}, expected 1")]
    KernelNotNormalized(f64),

    #[error("cell truncation height {height} too low for crest height {crest}")]
    TruncationTooLow { height: f64, crest: f64 },

    #[error("decay fit needs at least {needed} samples above the crest, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("the quadratic constraint system is singular")]
    SingularConstraintSystem,

    #[error("mean wall shear {0:e} is too small to define a slip amount")]
    DegenerateShear(f64),

    #[error("slip law needs at least one sample")]
    EmptySamples,

    #[error("slip sites must be strictly increasing")]
    NonMonotoneSites,

    #[error("slip amount {value:e} at x1 = {x1} is not positive")]
    NonPositiveSlip { x1: f64, value: f64 },

    #[error("outer iteration did not converge within {0} iterations")]
    MaxIterationsExceeded(usize),

    #[error("micro solve at site {site} (s = {position}) failed: {source}")]
    MicroSite {
        site: usize,
        position: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("profile tables have mismatched grids")]
    GridMismatch,

    #[error("no reattachment point found before x1 = {0}")]
    NoReattachment(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Wraps the error with the name of the experiment stage that produced it.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable identifier used by the CLI error record.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Mesh(_) => "mesh",
            Error::BoundaryConditions(_) => "boundary_conditions",
            Error::GaugeError => "gauge",
            Error::SingularSystem(_) => "singular_system",
            Error::NewtonDivergence { .. } => "newton_divergence",
            Error::PointOutsideMesh(..) => "point_outside_mesh",
            Error::SegmentOutsideMesh { .. } => "segment_outside_mesh",
            Error::KernelNotNormalized(_) => "kernel_not_normalized",
            Error::TruncationTooLow { .. } => "truncation_too_low",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::SingularConstraintSystem => "singular_constraint_system",
            Error::DegenerateShear(_) => "degenerate_shear",
            Error::EmptySamples => "empty_samples",
            Error::NonMonotoneSites => "non_monotone_sites",
            Error::NonPositiveSlip { .. } => "non_positive_slip",
            Error::MaxIterationsExceeded(_) => "max_iterations_exceeded",
            Error::MicroSite { .. } => "micro_site",
            Error::Stage { .. } => "stage",
            Error::GridMismatch => "grid_mismatch",
            Error::NoReattachment(_) => "no_reattachment",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
