use thiserror::Error;

/// Errors shared across the crate.
///
/// `is_resource_limit` distinguishes "the input asked for more work than the
/// configured caps allow" from plain input errors; the CLI maps the two onto
/// different exit codes.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("instance JSON at {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("metric validation failed: {0}")]
    MetricInvalid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty center set")]
    EmptyCenterSet,

    #[error("groups overlap: point '{point}' belongs to groups '{first}' and '{second}'")]
    OverlappingGroups {
        point: String,
        first: String,
        second: String,
    },

    #[error("{what} would enumerate {required} candidates, above the cap of {cap}; raise the cap or shrink k / the candidate set")]
    CapExceeded {
        what: &'static str,
        required: String,
        cap: u64,
    },

    #[error("simplex hit the pivot limit of {limit} (objective {objective} after {limit} pivots)")]
    PivotLimit { limit: usize, objective: f64 },

    #[error("linear program is infeasible (phase-1 residual {residual})")]
    Infeasible { residual: f64 },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// True when the failure is a configured resource cap, not bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. } | Error::PivotLimit { .. }
        )
    }
}
