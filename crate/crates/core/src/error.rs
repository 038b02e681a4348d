use thiserror::Error;

use crate::gaussian::GaussInt;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("row not unimodular: ({0}, {1})")]
    RowNotUnimodular(GaussInt, GaussInt),

    #[error("chart degenerate: |v| = {0} is within 1e-3 of pi/2")]
    ChartDegenerate(f64),

    #[error("reduction did not terminate within {0} steps")]
    NonTermination(usize),

    #[error("quadrature tolerance {tolerance:e} not reached; estimate {estimate}, error {error:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("dedup unsound at this base point: {0}")]
    DedupUnsound(String),

    #[error("enumeration audit failed: {0}")]
    AuditFailed(String),

    #[error("candidate budget {budget} exceeded at enumeration bound B = {bound}")]
    CandidateBudget { budget: u64, bound: f64 },

    #[error("spacing violation: {0}")]
    Spacing(String),

    #[error("packing infeasible: placed {placed} of {wanted} points after {attempts} rejections")]
    PackingInfeasible {
        placed: usize,
        wanted: usize,
        attempts: usize,
    },

    #[error("ill-conditioned 2x2 system (|det| = {0:e})")]
    IllConditioned(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
