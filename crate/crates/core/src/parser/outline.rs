use serde::Serialize;

use crate::lang::{Program, SourceSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlineKind {
    Interface,
    Class,
    Method,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutlineEntry {
    pub kind: OutlineKind,
    pub name: String,
    /// Owning class for methods.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub owner: Option<String>,
    pub line: u32,
    pub column: u32,
}

/// Interfaces, classes and class methods in source order.
pub fn outline(p: &Program) -> Vec<OutlineEntry> {
    let mut out = Vec::new();
    let entry = |kind, name: &str, owner: Option<&str>, span: SourceSpan| OutlineEntry {
        kind,
        name: name.to_string(),
        owner: owner.map(str::to_string),
        line: span.line,
        column: span.column,
    };
    for i in &p.interfaces {
        out.push(entry(OutlineKind::Interface, &i.name, None, i.span));
    }
    for c in &p.classes {
        out.push(entry(OutlineKind::Class, &c.name, None, c.span));
        for m in &c.methods {
            out.push(entry(OutlineKind::Method, &m.name, Some(&c.name), m.span));
        }
    }
    out.sort_by_key(|e| (e.line, e.column));
    out
}
