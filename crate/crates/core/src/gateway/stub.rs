use std::fs;
use std::path::PathBuf;

use serde::Deserialize;

use super::{CaptionResult, CompletionRequest, GatewayError, ImageInput};

pub(super) const CLOSING_LINE: &str = "Cite the bracketed labels above when acting on this answer.";

pub(super) fn complete(req: &CompletionRequest) -> String {
    let mut out = format!("[{}]\n", req.template.as_str());
    if req.context_blocks.is_empty() {
        out.push_str("- (no context)\n");
    }
    for block in &req.context_blocks {
        let first = block.text.lines().next().unwrap_or("").trim();
        out.push_str(&format!("- [{}] {}\n", block.label, first));
    }
    out.push_str(CLOSING_LINE);
    out
}

#[derive(Deserialize)]
struct Sidecar {
    caption: String,
    #[serde(default, alias = "ts", alias = "captured_at_text")]
    overlay_timestamp: Option<String>,
    #[serde(default)]
    anomaly: bool,
}

fn sidecar_path(input: &ImageInput) -> Result<PathBuf, GatewayError> {
    match input {
        ImageInput::Bytes(_) => Err(GatewayError::NoSidecar(PathBuf::from("<bytes>"))),
        ImageInput::Path(p) if p.to_string_lossy().ends_with(".meta.json") => Ok(p.clone()),
        ImageInput::Path(p) => {
            let mut name = p.file_name().unwrap_or_default().to_os_string();
            name.push(".meta.json");
            Ok(p.with_file_name(name))
        }
    }
}

pub(super) fn caption(input: &ImageInput) -> Result<CaptionResult, GatewayError> {
    let path = sidecar_path(input)?;
    let text = fs::read_to_string(&path).map_err(|_| GatewayError::NoSidecar(path.clone()))?;
    let sidecar: Sidecar = serde_json::from_str(&text)
        .map_err(|e| GatewayError::UnparsableReply(format!("{}: {e}", path.display())))?;
    Ok(CaptionResult {
        caption: sidecar.caption,
        overlay_timestamp_text: sidecar.overlay_timestamp,
        anomaly: sidecar.anomaly,
    })
}
