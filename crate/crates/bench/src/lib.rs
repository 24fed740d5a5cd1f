//! Command implementations behind the `minvol-bench` binary: instance
//! generation, single solves, `(σ, λ)` sweeps and PCA scatter data.

pub mod commands;
pub mod config;
pub mod solve;
pub mod sweep;

/// Exit status for a failed command.
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Maps an error chain to the process exit code: numerical faults give 3,
/// everything else (bad input, bad config, I/O) gives 2.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<minvol_core::Error>(),
            Some(minvol_core::Error::NumericalFault { .. })
        )
    });
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}
