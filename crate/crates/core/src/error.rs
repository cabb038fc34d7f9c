use thiserror::Error;

/// Failure modes surfaced by the library.
///
/// `Schema` and `Geometry` are rejections of the input (the CLI maps them to
/// exit code 2); `Degenerate` and `Estimator` mean a quantity could not be
/// produced at the requested certification level.
#[derive(Debug, Error)]
pub enum Error {
    /// A scenario file violated the schema: wrong type, missing field,
    /// unknown variant, or an out-of-range value.
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    /// The geometry is inconsistent: nesting violated, base point outside
    /// the inner domain, empty interval, and so on.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A hypothesis of the inequality under test fails, so no verdict is
    /// meaningful (for example a nonpositive boundary sup in a bound that
    /// divides by it).
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// An estimator could not meet its contract: walk budget exhausted,
    /// quadrature failed to converge, or a certified side is unavailable
    /// for the requested geometry.
    #[error("estimator error: {0}")]
    Estimator(String),

    /// Underlying I/O failure while reading scenarios or writing reports.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON in a scenario file.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn geometry(message: impl Into<String>) -> Self {
        Error::Geometry(message.into())
    }

    pub fn degenerate(message: impl Into<String>) -> Self {
        Error::Degenerate(message.into())
    }

    pub fn estimator(message: impl Into<String>) -> Self {
        Error::Estimator(message.into())
    }
}
