//! Command-line harness for gibbs-tv: instance files, run records and verification suites.

pub mod instance;
pub mod record;
pub mod suite;

use gibbs_tv::ErrorClass;

pub use instance::{emit_instance, parse_instance, read_instance, Instance, InstanceError};
pub use record::{InputDigest, RunRecord};

/// Process exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code when a verification suite has failing checks.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code for malformed or invalid input.
pub const EXIT_INVALID_INPUT: i32 = 2;
/// Exit code when an estimator's preconditions do not hold.
pub const EXIT_GATE: i32 = 3;
/// Exit code when an oracle cannot answer (for example, enumeration beyond its cap).
pub const EXIT_ORACLE: i32 = 4;

/// Maps an error to the process exit code.
pub fn exit_code(error: &anyhow::Error) -> i32 {
    for cause in error.chain() {
        if cause.downcast_ref::<InstanceError>().is_some() {
            return EXIT_INVALID_INPUT;
        }
        if let Some(e) = cause.downcast_ref::<gibbs_tv::Error>() {
            return match e.class() {
                ErrorClass::InvalidInput => EXIT_INVALID_INPUT,
                ErrorClass::Gate => EXIT_GATE,
                ErrorClass::Oracle => EXIT_ORACLE,
            };
        }
    }
    EXIT_INVALID_INPUT
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        let gate = anyhow::Error::from(gibbs_tv::Error::Gate("x".into())).context("estimating");
        assert_eq!(exit_code(&gate), EXIT_GATE);
        let oracle = anyhow::Error::from(gibbs_tv::Error::TooLarge {
            what: "enumeration",
            size: 30,
            cap: 20,
        });
        assert_eq!(exit_code(&oracle), EXIT_ORACLE);
        let input = anyhow::Error::from(parse_instance("{").unwrap_err());
        assert_eq!(exit_code(&input), EXIT_INVALID_INPUT);
    }
}
