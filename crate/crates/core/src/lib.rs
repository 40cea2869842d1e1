//! Failure management for smart devices in a public facility.
//!
//! Heterogeneous device telemetry (log lines, status tables, camera captions)
//! is normalized into [`DeviceEvent`]s, fused into [`CorrelatedIncident`]s,
//! and combined with product-manual knowledge to answer operator queries
//! along four workflow paths: availability, fault status, cause analysis and
//! the comprehensive report.

pub mod facility;
pub mod fusion;
pub mod gateway;
pub mod ingest;
pub mod knowledge;
pub mod registry;
pub mod router;
pub mod simgen;
pub mod taxonomy;
pub mod time;

pub use facility::{Facility, FacilityError, FacilitySnapshot, IngestReport, Reject};
pub use fusion::{correlate, CorrelatedIncident, FusionConfig, IncidentStatus};
pub use gateway::{
    render_prompt, Backend, CaptionResult, CompletionRequest, CompletionResponse, ContextBlock,
    Gateway, GatewayConfig, GatewayError, ImageInput, Slot, Slots, TemplateId,
};
pub use ingest::{DeviceEvent, EventSource, EventStore, FaultCode, Severity, VisionObservation};
pub use knowledge::{KnowledgeBase, KnowledgeHit, KnowledgeIndex, ManualEntry, Section};
pub use registry::{DeviceDescriptor, DeviceKind, Registry, Zone};
pub use router::{
    AnswerBundle, Clarification, Facts, QueryIntent, QueryOutcome, QueryPath, Router, RouterError,
};
