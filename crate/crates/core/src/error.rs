use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    Trace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("Kraus operators are not trace preserving (completeness defect {0:e})")]
    IncompleteKraus(f64),

    #[error("process matrix is not completely positive (min Choi eigenvalue {0:e})")]
    NotCompletelyPositive(f64),

    #[error("{name} must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("measurement records are not informationally complete")]
    NotInformationallyComplete,

    #[error("reference state has a singular photon-2 marginal")]
    SingularReference,

    #[error("{failed} of {total} Monte-Carlo replicates failed to reconstruct")]
    MonteCarloFailures { failed: usize, total: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn ensure(ok: bool, name: &'static str, requirement: &'static str, value: f64) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            requirement,
            value,
        })
    }
}
