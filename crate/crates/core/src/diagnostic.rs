//! Diagnostics shared by the loader, the validator and the meta-model checks.
//!
//! Every finding carries a code from [`DiagnosticCode`]; the set is closed so
//! that CI consumers can match on codes without parsing messages. The
//! line-oriented rendering is
//!
//! ```text
//! <severity>:<code>:<path>:<line>:<message>
//! ```
//!
//! with `path` and `line` left empty when the finding has no location.

use std::cmp::Ordering;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The documented registry of diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagnosticCode {
    // entity files
    NoFrontmatter,
    MalformedFrontmatter,
    UnknownEntityType,
    MissingRequiredField,
    IdFilenameMismatch,
    ReadFailure,
    MisplacedEntity,
    // entity content
    RelationshipKeyNotAllowed,
    NamingConvention,
    EmptyName,
    InvalidStatus,
    CardinalityViolation,
    UnknownField,
    StubDescriptionTooLong,
    // cross-entity
    DuplicateId,
    DanglingTarget,
    EndpointTypeMismatch,
    OrphanEntity,
    // meta-model
    DuplicateTypeName,
    DuplicateRelationshipName,
    DuplicateFrontmatterKey,
    UndefinedEntityType,
    UnresolvedRelationshipKey,
    MissingCoreField,
    InvalidTypeName,
    SelfReferenceShape,
}

impl DiagnosticCode {
    pub const ALL: [DiagnosticCode; 26] = [
        DiagnosticCode::NoFrontmatter,
        DiagnosticCode::MalformedFrontmatter,
        DiagnosticCode::UnknownEntityType,
        DiagnosticCode::MissingRequiredField,
        DiagnosticCode::IdFilenameMismatch,
        DiagnosticCode::ReadFailure,
        DiagnosticCode::MisplacedEntity,
        DiagnosticCode::RelationshipKeyNotAllowed,
        DiagnosticCode::NamingConvention,
        DiagnosticCode::EmptyName,
        DiagnosticCode::InvalidStatus,
        DiagnosticCode::CardinalityViolation,
        DiagnosticCode::UnknownField,
        DiagnosticCode::StubDescriptionTooLong,
        DiagnosticCode::DuplicateId,
        DiagnosticCode::DanglingTarget,
        DiagnosticCode::EndpointTypeMismatch,
        DiagnosticCode::OrphanEntity,
        DiagnosticCode::DuplicateTypeName,
        DiagnosticCode::DuplicateRelationshipName,
        DiagnosticCode::DuplicateFrontmatterKey,
        DiagnosticCode::UndefinedEntityType,
        DiagnosticCode::UnresolvedRelationshipKey,
        DiagnosticCode::MissingCoreField,
        DiagnosticCode::InvalidTypeName,
        DiagnosticCode::SelfReferenceShape,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::NoFrontmatter => "NoFrontmatter",
            DiagnosticCode::MalformedFrontmatter => "MalformedFrontmatter",
            DiagnosticCode::UnknownEntityType => "UnknownEntityType",
            DiagnosticCode::MissingRequiredField => "MissingRequiredField",
            DiagnosticCode::IdFilenameMismatch => "IdFilenameMismatch",
            DiagnosticCode::ReadFailure => "ReadFailure",
            DiagnosticCode::MisplacedEntity => "MisplacedEntity",
            DiagnosticCode::RelationshipKeyNotAllowed => "RelationshipKeyNotAllowed",
            DiagnosticCode::NamingConvention => "NamingConvention",
            DiagnosticCode::EmptyName => "EmptyName",
            DiagnosticCode::InvalidStatus => "InvalidStatus",
            DiagnosticCode::CardinalityViolation => "CardinalityViolation",
            DiagnosticCode::UnknownField => "UnknownField",
            DiagnosticCode::StubDescriptionTooLong => "StubDescriptionTooLong",
            DiagnosticCode::DuplicateId => "DuplicateId",
            DiagnosticCode::DanglingTarget => "DanglingTarget",
            DiagnosticCode::EndpointTypeMismatch => "EndpointTypeMismatch",
            DiagnosticCode::OrphanEntity => "OrphanEntity",
            DiagnosticCode::DuplicateTypeName => "DuplicateTypeName",
            DiagnosticCode::DuplicateRelationshipName => "DuplicateRelationshipName",
            DiagnosticCode::DuplicateFrontmatterKey => "DuplicateFrontmatterKey",
            DiagnosticCode::UndefinedEntityType => "UndefinedEntityType",
            DiagnosticCode::UnresolvedRelationshipKey => "UnresolvedRelationshipKey",
            DiagnosticCode::MissingCoreField => "MissingCoreField",
            DiagnosticCode::InvalidTypeName => "InvalidTypeName",
            DiagnosticCode::SelfReferenceShape => "SelfReferenceShape",
        }
    }

    pub fn parse(s: &str) -> Option<DiagnosticCode> {
        DiagnosticCode::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Location {
    pub path: PathBuf,
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub severity: Severity,
    pub entity_id: Option<String>,
    pub message: String,
    pub location: Option<Location>,
}

impl Diagnostic {
    pub fn error(code: DiagnosticCode, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Error,
            entity_id: None,
            message: message.into(),
            location: None,
        }
    }

    pub fn warning(code: DiagnosticCode, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, message)
        }
    }

    pub fn for_entity(mut self, id: impl Into<String>) -> Self {
        self.entity_id = Some(id.into());
        self
    }

    pub fn at(mut self, path: impl Into<PathBuf>, line: Option<usize>) -> Self {
        self.location = Some(Location {
            path: path.into(),
            line,
        });
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// The stable `severity:code:path:line:message` rendering.
    pub fn to_line(&self) -> String {
        let (path, line) = match &self.location {
            Some(loc) => (
                loc.path.display().to_string(),
                loc.line.map(|l| l.to_string()).unwrap_or_default(),
            ),
            None => (String::new(), String::new()),
        };
        // keep the record on one line
        let message = self.message.replace(['\n', '\r'], " ");
        format!("{}:{}:{}:{}:{}", self.severity, self.code, path, line, message)
    }

    fn sort_key(&self) -> (String, usize, DiagnosticCode, &str, &str) {
        let (path, line) = match &self.location {
            Some(loc) => (loc.path.display().to_string(), loc.line.unwrap_or(0)),
            None => (String::new(), 0),
        };
        (
            path,
            line,
            self.code,
            self.entity_id.as_deref().unwrap_or(""),
            &self.message,
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Total order used for deterministic output: path, line, code, then
/// entity id and message as tie breakers.
pub fn compare(a: &Diagnostic, b: &Diagnostic) -> Ordering {
    a.sort_key().cmp(&b.sort_key())
}

/// Sorts and removes exact duplicates.
pub fn normalize(diagnostics: &mut Vec<Diagnostic>) {
    diagnostics.sort_by(compare);
    diagnostics.dedup();
}
