use crate::data_model::{Channel, YearMonth};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("CPI table has no entry for {0}")]
    MissingCpiMonth(YearMonth),

    #[error("invalid CPI table: {0}")]
    InvalidCpi(String),

    #[error("no eligible rows for channel {channel} in years {from}..={to}")]
    EmptyFrame { channel: Channel, from: i32, to: i32 },

    #[error("year {year} has no rows in the estimation window")]
    EmptyYear { year: i32 },

    #[error("fit has no intercept for year {year}")]
    MissingIntercept { year: i32 },

    #[error("insufficient data in window around year {year}: {rows} rows for {params} parameters")]
    InsufficientData { year: i32, rows: usize, params: usize },

    #[error("tau {tau} does not exceed the zero-amount share {zero_share:.4} in year {year}")]
    QuantileBelowMass { year: i32, tau: f64, zero_share: f64 },

    #[error("chain break in year {year}: growth factor 1 + {rate} is not positive")]
    ChainBreak { year: i32, rate: f64 },

    #[error("horizon {t0}..{t_end} leaves no year pair to compare")]
    HorizonTooShort { t0: i32, t_end: i32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quantile solver failed: {0}")]
    Solver(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("missing required columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("{year}: {source}")]
    InYear {
        year: i32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_year(self, year: i32) -> Error {
        match self {
            Error::InYear { .. } => self,
            other => Error::InYear {
                year,
                source: Box::new(other),
            },
        }
    }

    /// Strips any year context added by [`Error::in_year`].
    pub fn root(&self) -> &Error {
        match self {
            Error::InYear { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors raised by the numeric layer rather than by bad input or IO.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self.root(),
            Error::EmptyYear { .. }
                | Error::MissingIntercept { .. }
                | Error::InsufficientData { .. }
                | Error::QuantileBelowMass { .. }
                | Error::ChainBreak { .. }
                | Error::Solver(_)
        )
    }
}
