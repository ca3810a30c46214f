use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use bernconv::product::CoordinateLawSeq;
use bernconv::spec::{ConvolutionSpec, DigitLaw, ScaleSeq};

use crate::report::Failure;

/// On-disk form of a spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub scales: ScaleSeq,
    pub digits: DigitLaw,
}

impl SpecDocument {
    pub fn to_spec(&self) -> Result<ConvolutionSpec, Failure> {
        ConvolutionSpec::new(self.scales.clone(), self.digits.clone()).map_err(Failure::from)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io { path: path.display().to_string(), message: e.to_string() })
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Failure::Validation {
            kind: "invalid_spec",
            field: (path != ".").then_some(path),
            message: inner.to_string(),
            line: Some(inner.line()),
            column: Some(inner.column()),
        }
    })
}

pub fn load_spec(path: &Path) -> Result<(SpecDocument, ConvolutionSpec), Failure> {
    let doc: SpecDocument = parse(&read(path)?)?;
    let spec = doc.to_spec()?;
    Ok((doc, spec))
}

pub fn load_laws(path: &Path) -> Result<CoordinateLawSeq, Failure> {
    let seq: CoordinateLawSeq = parse(&read(path)?)?;
    seq.validate()?;
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected_with_path() {
        let text = r#"{"scales": {"kind": "geometric", "lambda": 0.3, "extra": 1}, "digits": {"kind": "constant", "p0": 0.5}}"#;
        match parse::<SpecDocument>(text) {
            Err(Failure::Validation { field, message, .. }) => {
                assert_eq!(field.as_deref(), Some("scales"));
                assert!(message.contains("extra"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip() {
        let text = r#"{"name": "cantor", "scales": {"kind": "cantor_like", "coef": 2.0, "base": 3}, "digits": {"kind": "constant", "p0": 0.5}}"#;
        let doc: SpecDocument = parse(text).unwrap();
        let back: SpecDocument = parse(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(doc, back);
        assert!(doc.to_spec().is_ok());
    }
}
