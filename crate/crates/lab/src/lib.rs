//! Command-line lab over `doublestable-core`: configuration, commands and
//! result files.

pub mod commands;
pub mod config;
pub mod output;

use doublestable_core::Error;

/// 2 for bad parameters or input files, 3 for numerical failures, 1 for I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parameter(_) | Error::Format(_) => 2,
        Error::Numerical(_) => 3,
        Error::Io(_) => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parameter("x".into())), 2);
        assert_eq!(exit_code(&Error::Format("x".into())), 2);
        assert_eq!(exit_code(&Error::Numerical("x".into())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 1);
    }
}
