use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CompletionRequest, ContextBlock, GatewayError, TemplateId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Slot {
    Text(String),
    Blocks(Vec<ContextBlock>),
}

pub type Slots = BTreeMap<String, Slot>;

const SYSTEM_PROMPT: &str = "You are the failure-management assistant for a library's smart devices. \
Answer only from the labeled context blocks. Cite every claim with the block label in square brackets. \
If the context holds no evidence for something, say so instead of guessing.";

/// Slots a template needs: `(text slots, block slots)`. Any template also
/// takes an optional `evidence` block slot, appended after the others, and
/// an optional `question` text slot.
pub fn required_slots(template: TemplateId) -> (&'static [&'static str], &'static [&'static str]) {
    match template {
        TemplateId::Availability => (&["zone"], &["devices"]),
        TemplateId::FaultStatus => (&["zone"], &["incidents"]),
        TemplateId::CauseAnalysis => (&["device"], &["timeline", "causes"]),
        TemplateId::PreventionAdvice => (&["device_kind"], &["advice"]),
        TemplateId::ComprehensiveReport => (&["scope"], &["sections"]),
    }
}

fn text<'a>(slots: &'a Slots, name: &str) -> Result<&'a str, GatewayError> {
    match slots.get(name) {
        Some(Slot::Text(t)) if !t.trim().is_empty() => Ok(t),
        Some(Slot::Blocks(_)) => Err(GatewayError::InvalidRequest(format!("slot {name} must be text"))),
        _ => Err(GatewayError::MissingSlot { name: name.into() }),
    }
}

fn blocks<'a>(slots: &'a Slots, name: &str) -> Result<&'a [ContextBlock], GatewayError> {
    match slots.get(name) {
        Some(Slot::Blocks(b)) => Ok(b),
        Some(Slot::Text(_)) => Err(GatewayError::InvalidRequest(format!("slot {name} must be blocks"))),
        None => Err(GatewayError::MissingSlot { name: name.into() }),
    }
}

fn count(n: usize, one: &str, many: &str) -> String {
    if n == 1 {
        format!("1 {one}")
    } else {
        format!("{n} {many}")
    }
}

/// Assembles a completion request. Pure: equal slots give equal requests.
pub fn render_prompt(template: TemplateId, slots: &Slots) -> Result<CompletionRequest, GatewayError> {
    let (texts, block_names) = required_slots(template);
    for name in texts {
        text(slots, name)?;
    }
    for name in block_names {
        blocks(slots, name)?;
    }

    let mut context_blocks: Vec<ContextBlock> = Vec::new();
    for name in block_names {
        context_blocks.extend(blocks(slots, name)?.iter().cloned());
    }
    if slots.contains_key("evidence") {
        context_blocks.extend(blocks(slots, "evidence")?.iter().cloned());
    }

    let task = match template {
        TemplateId::Availability => {
            let zone = text(slots, "zone")?;
            let n = blocks(slots, "devices")?.len();
            if n == 0 {
                format!("Zone {zone} has 0 registered devices. State that no devices are deployed there.")
            } else {
                format!(
                    "Zone {zone} has {}. Say which are available and which are out of service, \
                     citing the incident behind each outage.",
                    count(n, "registered device", "registered devices")
                )
            }
        }
        TemplateId::FaultStatus => {
            let zone = text(slots, "zone")?;
            let n = blocks(slots, "incidents")?.len();
            if n == 0 {
                format!("Zone {zone} has 0 open incidents. State that no anomalies are currently reported.")
            } else {
                format!(
                    "Zone {zone} has {}. Summarize each: device, fault code, severity and when it started.",
                    count(n, "open incident", "open incidents")
                )
            }
        }
        TemplateId::CauseAnalysis => {
            let device = text(slots, "device")?;
            let causes = blocks(slots, "causes")?.len();
            let guidance = if causes == 0 {
                "No manual entry covers this fault; say that manual guidance is unavailable.".to_string()
            } else {
                "Explain the most likely cause and the remedy from the manual excerpts.".to_string()
            };
            format!("Explain why device {device} is malfunctioning using its event timeline. {guidance}")
        }
        TemplateId::PreventionAdvice => {
            let kind = text(slots, "device_kind")?;
            format!("Give preventive maintenance advice for {kind} devices from the manual excerpts.")
        }
        TemplateId::ComprehensiveReport => {
            let scope = text(slots, "scope")?;
            format!(
                "Write a comprehensive risk assessment for {scope}: availability per zone, open incidents, \
                 likely causes and prevention advice. Keep the zone order of the context."
            )
        }
    };
    let user_prompt = match slots.get("question") {
        Some(Slot::Text(q)) if !q.trim().is_empty() => format!("Operator question: {}\n\n{task}", q.trim()),
        _ => task,
    };

    Ok(CompletionRequest {
        template,
        system_prompt: SYSTEM_PROMPT.to_string(),
        user_prompt,
        context_blocks,
        max_tokens: 512,
        temperature: 0.0,
    })
}
