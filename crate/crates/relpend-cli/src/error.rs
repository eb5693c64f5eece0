use std::fmt;

/// CLI-level failures; every variant maps to exit code 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// Config validation: every violation, not just the first.
    Config(Vec<String>),
    Io(String),
    Run(relpend::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Config(issues) => {
                writeln!(f, "invalid configuration ({} issue(s)):", issues.len())?;
                for issue in issues {
                    writeln!(f, "  - {issue}")?;
                }
                Ok(())
            }
            CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Run(_) => "run",
        }
    }
}

impl From<relpend::Error> for CliError {
    fn from(e: relpend::Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
