#![allow(dead_code)]

use std::path::Path;

use fsm_api::{serve, ServiceConfig, ServiceHandle};
use fsm_core::simgen::write_fleet;
use serde_json::Value;
use tempfile::TempDir;

pub struct Service {
    pub dir: TempDir,
    pub handle: ServiceHandle,
    pub base: String,
    pub http: reqwest::Client,
}

pub fn config(dir: &Path) -> ServiceConfig {
    ServiceConfig {
        port: 0,
        data_dir: dir.to_path_buf(),
        ..ServiceConfig::load_with(None, |_| None).unwrap()
    }
}

/// Fixture fleet and manuals in a fresh data directory, served on an
/// ephemeral localhost port with the stub backend.
pub async fn start() -> Service {
    let dir = tempfile::tempdir().unwrap();
    write_fleet(dir.path()).unwrap();
    let handle = serve(&config(dir.path())).await.unwrap();
    let base = format!("http://{}", handle.addr());
    Service { dir, handle, base, http: reqwest::Client::new() }
}

impl Service {
    pub async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }

    pub async fn post_json(&self, path: &str, body: &Value) -> (u16, Value) {
        let r = self.http.post(format!("{}{path}", self.base)).json(body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }

    pub async fn post_text(&self, path: &str, body: &str) -> (u16, Value) {
        let r = self
            .http
            .post(format!("{}{path}", self.base))
            .header("content-type", "text/plain")
            .body(body.to_string())
            .send()
            .await
            .unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }

    pub async fn query(&self, utterance: &str) -> (u16, Value) {
        self.post_json("/v1/query", &serde_json::json!({ "utterance": utterance })).await
    }
}

pub fn assert_api_error(body: &Value, status: u16, code: &str) {
    assert_eq!(body["http_status"], status, "{body}");
    assert_eq!(body["code"], code, "{body}");
    assert!(body["message"].as_str().is_some_and(|m| !m.is_empty()), "{body}");
    assert!(fsm_api::ERROR_CODES.contains(&code));
}
