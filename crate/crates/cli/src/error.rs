use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] platform_menus::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Model(e) => e.category(),
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Csv(_) => "csv",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "usage" => 2,
            "io" | "csv" => 3,
            "parse" => 4,
            "domain" => 5,
            "regime" => 6,
            "unsupported" => 7,
            "singular" => 8,
            "solver" => 9,
            _ => 10,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
