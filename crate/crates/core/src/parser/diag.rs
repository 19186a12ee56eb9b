use std::fmt;

use serde::Serialize;

use crate::lang::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub span: SourceSpan,
    pub severity: Severity,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn error(span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            span,
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            span,
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.span.line, self.span.column, self.message)
    }
}

/// Flat JSON record `{line, column, severity, message}`.
impl Serialize for ParseDiagnostic {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("ParseDiagnostic", 4)?;
        s.serialize_field("line", &self.span.line)?;
        s.serialize_field("column", &self.span.column)?;
        s.serialize_field("severity", &self.severity)?;
        s.serialize_field("message", &self.message)?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serializes_flat() {
        let d = ParseDiagnostic::error(SourceSpan::new(3, 7, 2), "expected `;`");
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"line":3,"column":7,"severity":"error","message":"expected `;`"}"#
        );
    }
}
