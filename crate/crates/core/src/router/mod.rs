//! Operator query routing: a keyword cascade picks one of four workflow
//! paths, slots are completed from the registry, and the path executes
//! against an immutable facility snapshot. Narrative text always comes from
//! the gateway; facts and citations are computed here.

mod classify;
mod paths;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::facility::FacilitySnapshot;
use crate::fusion::FusionError;
use crate::gateway::{render_prompt, CompletionRequest, Gateway, GatewayError, Slot};
use crate::registry::{DeviceKind, RegistryError};
use crate::time::{serde_ts, Timestamp};

pub use classify::{classify, Classification};
pub use paths::{
    availability_facts, cause_hits, comprehensive_report,
    AvailabilityFacts, CauseFacts, ComprehensiveReport, EventCounts, FaultFacts, IncidentAnalysis,
    KindAdvice, ReportTotals, ZoneReport,
};

#[derive(Debug, Error)]
pub enum RouterError {
    #[error("empty utterance")]
    EmptyUtterance,
    #[error("unknown zone {0}")]
    UnknownZone(String),
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("zone is required for this path")]
    MissingZone,
    #[error("snapshot inconsistency: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

impl From<RegistryError> for RouterError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::UnknownDevice(d) => Self::UnknownDevice(d),
            RegistryError::UnknownZone(z) => Self::UnknownZone(z),
            other => Self::Inconsistent(other.to_string()),
        }
    }
}

impl From<FusionError> for RouterError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::UnknownZone(z) => Self::UnknownZone(z),
            other => Self::Inconsistent(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QueryPath {
    #[serde(rename = "PATH1_AVAILABILITY")]
    Path1Availability,
    #[serde(rename = "PATH2_FAULT_STATUS")]
    Path2FaultStatus,
    #[serde(rename = "PATH3_CAUSE")]
    Path3Cause,
    #[serde(rename = "PATH4_REPORT")]
    Path4Report,
}

impl QueryPath {
    pub const ALL: [QueryPath; 4] = [
        QueryPath::Path1Availability,
        QueryPath::Path2FaultStatus,
        QueryPath::Path3Cause,
        QueryPath::Path4Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Path1Availability => "PATH1_AVAILABILITY",
            Self::Path2FaultStatus => "PATH2_FAULT_STATUS",
            Self::Path3Cause => "PATH3_CAUSE",
            Self::Path4Report => "PATH4_REPORT",
        }
    }
}

/// Half-open `[start, end)` interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    #[serde(with = "serde_ts")]
    pub start: Timestamp,
    #[serde(with = "serde_ts")]
    pub end: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryIntent {
    pub path: QueryPath,
    pub zone: Option<String>,
    pub device_kind: Option<DeviceKind>,
    pub device_id: Option<String>,
    pub time_range: Option<TimeRange>,
}

impl QueryIntent {
    pub fn new(path: QueryPath) -> Self {
        Self { path, zone: None, device_kind: None, device_id: None, time_range: None }
    }

    pub fn in_zone(mut self, zone: &str) -> Self {
        self.zone = Some(zone.into());
        self
    }

    pub fn for_device(mut self, device_id: &str) -> Self {
        self.device_id = Some(device_id.into());
        self
    }

    pub fn of_kind(mut self, kind: DeviceKind) -> Self {
        self.device_kind = Some(kind);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Facts {
    Availability(AvailabilityFacts),
    FaultStatus(FaultFacts),
    Cause(CauseFacts),
    Report(ComprehensiveReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerBundle {
    pub intent: QueryIntent,
    pub facts: Facts,
    /// Event ids and manual entry ids backing the facts, sorted.
    pub citations: Vec<String>,
    pub rendered_text: String,
    pub backend: crate::gateway::Backend,
    /// Latest event timestamp in the snapshot the answer was computed on.
    #[serde(default, with = "crate::time::serde_ts_opt")]
    pub as_of: Option<Timestamp>,
    /// Requests sent to the gateway, in order.
    #[serde(skip)]
    pub requests: Vec<CompletionRequest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clarification {
    pub message: String,
    pub missing: Vec<String>,
    pub intent: Option<QueryIntent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum QueryOutcome {
    Answer(AnswerBundle),
    Clarification(Clarification),
}

/// Stateless between requests; clones share the gateway.
#[derive(Debug, Clone)]
pub struct Router {
    gateway: Gateway,
}

impl Router {
    pub fn new(gateway: Gateway) -> Self {
        Self { gateway }
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    /// Classifies and answers one utterance.
    pub async fn answer(
        &self,
        utterance: &str,
        zone_hint: Option<&str>,
        snapshot: &FacilitySnapshot,
    ) -> Result<QueryOutcome, RouterError> {
        if utterance.trim().is_empty() {
            return Err(RouterError::EmptyUtterance);
        }
        if let Some(zone) = zone_hint {
            snapshot.registry.require_zone(zone)?;
        }
        let intent = match classify(utterance, zone_hint, &snapshot.registry) {
            Classification::Intent(intent) => intent,
            Classification::Clarification(c) => return Ok(QueryOutcome::Clarification(c)),
            Classification::NoRule(partial) => match self.fallback(utterance, partial).await? {
                Some(intent) => intent,
                None => {
                    return Ok(QueryOutcome::Clarification(Clarification {
                        message: "I can answer questions about device availability, faults, their causes, \
                                  or give a comprehensive report. Which one do you need?"
                            .into(),
                        missing: vec!["path".into()],
                        intent: None,
                    }))
                }
            },
        };
        let bundle = self.run(&intent, Some(utterance.trim()), snapshot).await?;
        Ok(QueryOutcome::Answer(bundle))
    }

    /// Asks a remote model to pick a path when no keyword fired. The stub
    /// never guesses.
    async fn fallback(&self, utterance: &str, partial: QueryIntent) -> Result<Option<QueryIntent>, RouterError> {
        if self.gateway.backend() == crate::gateway::Backend::Stub {
            return Ok(None);
        }
        let req = CompletionRequest {
            template: crate::gateway::TemplateId::Availability,
            system_prompt: "Classify the operator question. Reply with exactly one of: PATH1_AVAILABILITY, \
                            PATH2_FAULT_STATUS, PATH3_CAUSE, PATH4_REPORT, UNKNOWN."
                .into(),
            user_prompt: utterance.to_string(),
            context_blocks: Vec::new(),
            max_tokens: 8,
            temperature: 0.0,
        };
        let reply = self.gateway.complete(&req).await?;
        let path = QueryPath::ALL
            .into_iter()
            .find(|p| reply.text.trim().eq_ignore_ascii_case(p.as_str()));
        Ok(path.and_then(|path| {
            let intent = QueryIntent { path, ..partial };
            let ok = match path {
                QueryPath::Path1Availability => intent.zone.is_some(),
                QueryPath::Path3Cause => {
                    intent.device_id.is_some() || (intent.zone.is_some() && intent.device_kind.is_some())
                }
                _ => true,
            };
            ok.then_some(intent)
        }))
    }

    pub async fn execute(&self, intent: &QueryIntent, snapshot: &FacilitySnapshot) -> Result<AnswerBundle, RouterError> {
        self.run(intent, None, snapshot).await
    }

    pub async fn execute_path1(&self, intent: &QueryIntent, snapshot: &FacilitySnapshot) -> Result<AnswerBundle, RouterError> {
        self.run(&QueryIntent { path: QueryPath::Path1Availability, ..intent.clone() }, None, snapshot).await
    }

    pub async fn execute_path2(&self, intent: &QueryIntent, snapshot: &FacilitySnapshot) -> Result<AnswerBundle, RouterError> {
        self.run(&QueryIntent { path: QueryPath::Path2FaultStatus, ..intent.clone() }, None, snapshot).await
    }

    pub async fn execute_path3(&self, intent: &QueryIntent, snapshot: &FacilitySnapshot) -> Result<AnswerBundle, RouterError> {
        self.run(&QueryIntent { path: QueryPath::Path3Cause, ..intent.clone() }, None, snapshot).await
    }

    pub async fn execute_path4(&self, intent: &QueryIntent, snapshot: &FacilitySnapshot) -> Result<AnswerBundle, RouterError> {
        self.run(&QueryIntent { path: QueryPath::Path4Report, ..intent.clone() }, None, snapshot).await
    }

    async fn run(
        &self,
        intent: &QueryIntent,
        question: Option<&str>,
        snapshot: &FacilitySnapshot,
    ) -> Result<AnswerBundle, RouterError> {
        let plan = paths::plan(intent, snapshot)?;
        let mut requests = Vec::new();
        let mut texts = Vec::new();
        for (template, mut slots) in plan.prompts {
            if let Some(q) = question {
                slots.insert("question".into(), Slot::Text(q.to_string()));
            }
            let req = render_prompt(template, &slots)?;
            texts.push(self.gateway.complete(&req).await?.text);
            requests.push(req);
        }
        Ok(AnswerBundle {
            intent: intent.clone(),
            facts: plan.facts,
            citations: plan.citations.into_iter().collect(),
            rendered_text: texts.join("\n\n"),
            backend: self.gateway.backend(),
            as_of: snapshot.as_of(),
            requests,
        })
    }
}
