//! Knowledge-base curation core: meta-model, entity store, validation,
//! curation cycles, analytics and multi-team governance.

pub mod analytics;
pub mod cycle;
pub mod diagnostic;
pub mod entity;
pub mod frontmatter;
pub mod governance;
pub mod kb;
pub mod metamodel;
pub mod naming;
pub mod validator;
pub mod workspace;

pub use diagnostic::{Diagnostic, DiagnosticCode, Location, Severity};
pub use entity::{parse_entity, parse_entity_text, serialize_entity, CurationDepth, Entity, EntityError, FieldValue, Status, Targets};
pub use kb::{load_kb, Direction, Edge, KbError, KnowledgeBase};
pub use metamodel::{
    builtin_metamodel, load_metamodel, load_metamodel_dir, validate_metamodel, Cardinality, EntityTypeDef,
    MetaModel, MetaModelError, RelationshipTypeDef,
};
pub use validator::{ci_check, validate_entity, validate_kb, ExitStatus, ValidationReport};
pub use workspace::Workspace;
pub use cycle::agent::{AdapterError, AgentAdapter, ScriptedAgent};
pub use cycle::log::{load_logs, parse_cycle_log, render_cycle_log, CycleLogRecord, LogLoadError};
pub use cycle::{Answer, Attempt, ChecklistItem, CycleError, CycleState, LogDetails, NewCycle, Review, Sandbox, Verdict};
pub use analytics::{
    compute_series, detect_convergence, entity_breakdown, fit_power_law, fit_power_law_values, promotion_candidates,
    render_report, reuse_ratio, synthetic_series, AnalyticsError, ConvergenceReport, CycleSeries, PowerLawFit,
    ReportFormat,
};
pub use governance::{
    apply_changeset, check_changeset, detect_conflicts, diff_kb, ChangeSet, Conflict, ConflictKind, GovernanceError,
};
