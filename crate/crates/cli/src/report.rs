use serde::Serialize;
use serde_json::Value;

use crate::document::SpecDocument;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_HYPOTHESIS: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Validation { kind: &'static str, field: Option<String>, message: String, line: Option<usize>, column: Option<usize> },
    Io { path: String, message: String },
    /// A hypothesis of the requested criterion is not met; `partial` holds
    /// whatever could still be computed.
    Hypothesis { message: String, partial: Option<Value> },
}

impl Failure {
    pub fn validation(kind: &'static str, message: impl Into<String>) -> Self {
        Failure::Validation { kind, field: None, message: message.into(), line: None, column: None }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Hypothesis { .. } => EXIT_HYPOTHESIS,
            _ => EXIT_INPUT,
        }
    }
}

impl From<bernconv::Error> for Failure {
    fn from(e: bernconv::Error) -> Self {
        use bernconv::Error as E;
        let kind = match &e {
            E::HypothesisViolation(_) | E::DominationViolation { .. } => {
                return Failure::Hypothesis { message: e.to_string(), partial: None };
            }
            E::InvalidSpec { field, message } => {
                return Failure::Validation {
                    kind: "invalid_spec",
                    field: Some(field.clone()),
                    message: message.clone(),
                    line: None,
                    column: None,
                };
            }
            E::TailUnbounded { .. } => "tail_unbounded",
            E::FactorOutOfRange { .. } => "factor_out_of_range",
            E::DimensionMismatch { .. } => "dimension_mismatch",
            E::SpaceMismatch(_) => "space_mismatch",
            E::LevelTooLarge { .. } => "level_too_large",
            E::Domain { .. } => "domain",
            E::Range(_) => "range",
            E::Resolution { .. } => "resolution",
        };
        Failure::validation(kind, e.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub tool_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecDocument>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.into(), tool_version: TOOL_VERSION, spec: None, seed: None, result: None, warnings: Vec::new(), error: None }
    }

    pub fn with_spec(mut self, doc: &SpecDocument) -> Self {
        self.spec = Some(doc.clone());
        self
    }

    pub fn with_result<T: Serialize>(mut self, value: &T) -> Self {
        self.result = Some(serde_json::to_value(value).expect("report values serialize"));
        self
    }

    pub fn failed(command: &str, spec: Option<SpecDocument>, failure: Failure) -> Self {
        let mut r = Report::new(command);
        r.spec = spec;
        r.error = Some(match failure {
            Failure::Validation { kind, field, message, line, column } => ErrorBody { kind, message, field, line, column },
            Failure::Io { path, message } => ErrorBody { kind: "io", message, field: Some(path), line: None, column: None },
            Failure::Hypothesis { message, partial } => {
                r.result = partial;
                ErrorBody { kind: "hypothesis", message, field: None, line: None, column: None }
            }
        });
        r
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
