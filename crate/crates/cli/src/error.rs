use std::fmt;

use syllogic::bench::BenchError;
use syllogic::dataset::DatasetError;
use syllogic::generate::GenError;
use syllogic::kb::KbError;

/// Failure classes. Each has its own exit code; 2 is left to argument
/// parsing errors reported by clap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Io,
    Kb,
    Formula,
    Gen,
    Dataset,
    ProofInvalid,
    ProofParse,
    Plan,
    BenchFailures,
    Assistant,
    NotProved,
    Budget,
    HintFile,
}

impl Kind {
    pub fn code(self) -> i32 {
        match self {
            Kind::Io => 3,
            Kind::Kb => 4,
            Kind::Formula => 5,
            Kind::Gen => 6,
            Kind::Dataset => 7,
            Kind::ProofInvalid => 8,
            Kind::ProofParse => 9,
            Kind::Plan => 10,
            Kind::BenchFailures => 11,
            Kind::Assistant => 12,
            Kind::NotProved => 13,
            Kind::Budget => 14,
            Kind::HintFile => 15,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Io => "io",
            Kind::Kb => "kb",
            Kind::Formula => "formula",
            Kind::Gen => "gen",
            Kind::Dataset => "dataset",
            Kind::ProofInvalid => "proof-invalid",
            Kind::ProofParse => "proof-parse",
            Kind::Plan => "plan",
            Kind::BenchFailures => "bench-failures",
            Kind::Assistant => "assistant",
            Kind::NotProved => "not-proved",
            Kind::Budget => "budget",
            Kind::HintFile => "hint-file",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub msg: String,
}

impl CliError {
    pub fn new(kind: Kind, msg: impl fmt::Display) -> CliError {
        CliError {
            kind,
            msg: msg.to_string(),
        }
    }

    /// The single stderr line: `error[code=NAME]: message`, newlines folded.
    pub fn line(&self) -> String {
        let msg = self.msg.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error[code={}]: {msg}", self.kind.name())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(Kind::Io, e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new(Kind::Io, e)
    }
}

impl From<KbError> for CliError {
    fn from(e: KbError) -> Self {
        let kind = match e {
            KbError::Io { .. } => Kind::Io,
            _ => Kind::Kb,
        };
        CliError::new(kind, e)
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::new(Kind::Gen, e)
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let kind = match e {
            DatasetError::Io(_) | DatasetError::Json(_) => Kind::Io,
            _ => Kind::Dataset,
        };
        CliError::new(kind, e)
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        let kind = match &e {
            BenchError::Plan(_) | BenchError::Toml(_) => Kind::Plan,
            BenchError::Kb(KbError::Io { .. }) => Kind::Io,
            BenchError::Kb(_) => Kind::Kb,
            BenchError::Gen(_) => Kind::Gen,
            BenchError::HintFile(_) => Kind::HintFile,
            BenchError::Io(_) | BenchError::Csv(_) | BenchError::Json(_) => Kind::Io,
        };
        CliError::new(kind, e)
    }
}
