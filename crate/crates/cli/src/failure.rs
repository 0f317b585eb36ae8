use std::fmt;
use std::process::ExitCode;

/// Outcome classes mapped onto process exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Malformed input, bad flags, size caps or I/O problems (exit 1).
    Input(String),
    /// The analysis could not establish the expected structure (exit 2).
    Structural(String),
    /// A certificate was computed and did not pass (exit 3).
    Certification(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Structural(_) => 2,
            Failure::Certification(_) => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "{m}"),
            Failure::Structural(m) => write!(f, "structural failure: {m}"),
            Failure::Certification(m) => write!(f, "certification failed: {m}"),
        }
    }
}

impl From<mpsup::Error> for Failure {
    fn from(e: mpsup::Error) -> Self {
        use mpsup::Error as E;
        match e {
            E::InvalidInput(_) | E::TooLarge { .. } | E::Io(_) | E::Json(_) => Failure::Input(e.to_string()),
            E::NotNormal(_)
            | E::PeriodUndetected(_)
            | E::DecompositionFailed(_)
            | E::NotNormalOrBug { .. }
            | E::DecompositionSuspect { .. }
            | E::NotInjective { .. }
            | E::NotBlockInjective { .. } => Failure::Structural(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(format!("json error: {e}"))
    }
}
