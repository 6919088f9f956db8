use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),

    #[error("singular complement: complementary diagonal {diagonal:e} with off-diagonal {off_diagonal:e}")]
    SingularComplement { diagonal: f64, off_diagonal: f64 },

    #[error("information must be positive, got {0:e}")]
    NonpositiveInformation(f64),

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("objective is not finite at x = {x} (value {value})")]
    NonFiniteObjective { x: f64, value: f64 },

    #[error("cutoff {cutoff} too small: truncation deficit {deficit:e}")]
    CutoffTooSmall { cutoff: usize, deficit: f64 },
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
) -> Result<()> {
    if !(value >= lo && value <= hi) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "out of range",
        });
    }
    Ok(())
}
