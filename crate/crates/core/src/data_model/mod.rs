//! Case records, CPI adjustment, covariate selection, strata and model frames.

mod case;
mod cpi;
mod frame;
pub mod io;
pub mod schema;
mod stratum;

pub use case::{CaseFlags, CaseRecord, Outcome};
pub use cpi::{adjust_cases, cpi_adjust, CpiTable, YearMonth};
pub use frame::{build_model_frame, build_model_frame_indexed, Channel, DropCounts, ModelFrame};
pub use schema::{CovariateSpec, SpecMode};
pub use stratum::{filter_stratum, stratum_indices, StateLists, Stratum, StratumKind};
