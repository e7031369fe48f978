use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs. Exit code 2.
    Config(String),
    /// The library rejected the problem. Exit code 1.
    Domain(rqsvt::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Domain(_) => "domain",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind(), "message": self.to_string() } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => f.write_str(m),
            CliError::Domain(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rqsvt::Error> for CliError {
    fn from(e: rqsvt::Error) -> Self {
        match e {
            // input files are part of the configuration
            rqsvt::Error::Parse { .. } => CliError::Config(e.to_string()),
            other => CliError::Domain(other),
        }
    }
}

pub fn config<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}
