use thiserror::Error;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Points or rectangles that cannot support the requested operation
    /// (coincident eyes, out-of-bounds patches, bad landmark ordering).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A malformed annotation record or manifest row.
    #[error("parse error{}: {msg}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Parse { row: Option<usize>, msg: String },

    /// Unsupported or corrupt image data.
    #[error("image format error: {0}")]
    ImageFormat(String),

    /// A class is too small to stratify into the requested folds.
    #[error("stratification error: {0}")]
    Stratification(String),

    /// All class means coincide; no discriminant direction exists.
    #[error("degenerate discriminant: {0}")]
    DegenerateDiscriminant(String),

    /// The SMO solver exhausted its budget before reaching KKT tolerance.
    #[error("convergence error: {msg} (duality gap {gap:.3e})")]
    Convergence { msg: String, gap: f64 },

    /// Bad magic, wrong version, or a model that does not match its inputs.
    #[error("model error: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    /// Prefix the error message with the context of the sample being processed.
    pub fn with_context(self, ctx: &str) -> Self {
        match self {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{ctx}: {m}")),
            Error::Geometry(m) => Error::Geometry(format!("{ctx}: {m}")),
            Error::Parse { row, msg } => Error::Parse {
                row,
                msg: format!("{ctx}: {msg}"),
            },
            Error::ImageFormat(m) => Error::ImageFormat(format!("{ctx}: {m}")),
            Error::Stratification(m) => Error::Stratification(format!("{ctx}: {m}")),
            Error::DegenerateDiscriminant(m) => {
                Error::DegenerateDiscriminant(format!("{ctx}: {m}"))
            }
            Error::Convergence { msg, gap } => Error::Convergence {
                msg: format!("{ctx}: {msg}"),
                gap,
            },
            Error::Model(m) => Error::Model(format!("{ctx}: {m}")),
            Error::Io(e) => Error::Model(format!("{ctx}: {e}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
