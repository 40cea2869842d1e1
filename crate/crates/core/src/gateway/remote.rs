use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{CaptionResult, CompletionRequest, ContextBlock, GatewayConfig, GatewayError, Origin};

const CAPTION_INSTRUCTION: &str = "Describe this frame in one sentence. Reply with JSON only: \
{\"caption\": string, \"overlay_timestamp\": string or null (the on-screen clock as YYYY-MM-DD HH:MM:SS), \
\"anomaly\": boolean (true if a device shows an error, damage or abnormal state)}.";

fn endpoint(cfg: &GatewayConfig) -> String {
    format!("{}/v1/chat/completions", cfg.base_url.trim_end_matches('/'))
}

fn render_block(block: &ContextBlock, allow_manual: bool) -> String {
    if block.origin == Origin::Manual && !allow_manual {
        format!("[{}] (manual excerpt withheld)", block.label)
    } else {
        format!("[{}] {}", block.label, block.text)
    }
}

/// JSON body for a chat completion.
pub(crate) fn completion_body(cfg: &GatewayConfig, req: &CompletionRequest) -> Value {
    let mut user = req.user_prompt.clone();
    if !req.context_blocks.is_empty() {
        user.push_str("\n\nContext:\n");
        let blocks: Vec<String> = req
            .context_blocks
            .iter()
            .map(|b| render_block(b, cfg.allow_manual_egress))
            .collect();
        user.push_str(&blocks.join("\n"));
    }
    json!({
        "model": cfg.model,
        "messages": [
            {"role": "system", "content": req.system_prompt},
            {"role": "user", "content": user},
        ],
        "max_tokens": req.max_tokens,
        "temperature": req.temperature,
        "stream": false,
    })
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

async fn post(client: &reqwest::Client, cfg: &GatewayConfig, body: &Value) -> Result<String, GatewayError> {
    let mut attempt = 0;
    loop {
        attempt += 1;
        let mut builder = client.post(endpoint(cfg)).json(body);
        if let Some(key) = &cfg.api_key {
            builder = builder.bearer_auth(key);
        }
        match builder.send().await {
            Ok(resp) if resp.status().is_success() => {
                let reply: ChatReply = resp
                    .json()
                    .await
                    .map_err(|e| GatewayError::MalformedBackendReply(e.to_string()))?;
                let text = reply
                    .choices
                    .into_iter()
                    .next()
                    .map(|c| c.message.content)
                    .filter(|t| !t.trim().is_empty())
                    .ok_or_else(|| GatewayError::MalformedBackendReply("no choices".into()))?;
                return Ok(text);
            }
            Ok(resp) => {
                return Err(GatewayError::BackendUnavailable(format!("HTTP {}", resp.status())));
            }
            Err(e) if attempt < 2 => {
                tracing::warn!(error = %e, "llm request failed; retrying once");
            }
            Err(e) if e.is_timeout() => return Err(GatewayError::Timeout),
            Err(e) => return Err(GatewayError::BackendUnavailable(e.to_string())),
        }
    }
}

pub(super) async fn complete(
    client: &reqwest::Client,
    cfg: &GatewayConfig,
    req: &CompletionRequest,
) -> Result<String, GatewayError> {
    post(client, cfg, &completion_body(cfg, req)).await
}

#[derive(Deserialize)]
struct CaptionReply {
    caption: String,
    #[serde(default)]
    overlay_timestamp: Option<String>,
    #[serde(default)]
    anomaly: bool,
}

pub(super) async fn caption(
    client: &reqwest::Client,
    cfg: &GatewayConfig,
    image: &[u8],
) -> Result<CaptionResult, GatewayError> {
    let data = base64::engine::general_purpose::STANDARD.encode(image);
    let body = json!({
        "model": cfg.model,
        "messages": [{
            "role": "user",
            "content": [
                {"type": "text", "text": CAPTION_INSTRUCTION},
                {"type": "image_url", "image_url": {"url": format!("data:image/jpeg;base64,{data}")}},
            ],
        }],
        "temperature": 0.0,
        "stream": false,
    });
    let text = post(client, cfg, &body).await?;
    let trimmed = text
        .trim()
        .trim_start_matches("```json")
        .trim_start_matches("```")
        .trim_end_matches("```")
        .trim();
    let reply: CaptionReply =
        serde_json::from_str(trimmed).map_err(|e| GatewayError::UnparsableReply(e.to_string()))?;
    Ok(CaptionResult {
        caption: reply.caption,
        overlay_timestamp_text: reply.overlay_timestamp.filter(|t| !t.trim().is_empty()),
        anomaly: reply.anomaly,
    })
}
