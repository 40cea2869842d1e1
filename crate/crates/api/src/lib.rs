//! Local REST service over the failure-management pipeline.
//!
//! Ingest endpoints parse, store and re-fuse synchronously, so an accepted
//! event is visible to the very next query. Queries run on the snapshot
//! published by the last completed write.

pub mod config;
mod error;
mod routes;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::http::StatusCode;
use fsm_core::{Facility, FacilityError, Gateway, Registry, Router};
use thiserror::Error;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use config::{ConfigError, ServiceConfig};
pub use error::{ApiError, ERROR_CODES};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("port already in use: {0}")]
    PortInUse(SocketAddr),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    pub facility: Arc<Facility>,
    pub router: Router,
}

impl AppState {
    pub fn new(facility: Facility, gateway: Gateway) -> Self {
        Self { facility: Arc::new(facility), router: Router::new(gateway) }
    }

    /// Opens the registry and data directory named by `config`.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServeError> {
        let registry_path = config.registry_path();
        if !registry_path.is_file() {
            return Err(ServeError::BadConfig(format!(
                "registry manifest not found: {}",
                registry_path.display()
            )));
        }
        let registry = Registry::load(&registry_path)
            .map_err(|e| ServeError::BadConfig(format!("{}: {e}", registry_path.display())))?;
        std::fs::create_dir_all(&config.data_dir)?;
        let facility = Facility::open(&config.data_dir, registry, config.fusion).map_err(|e| match e {
            FacilityError::Fusion(f) => ServeError::BadConfig(f.to_string()),
            other => ServeError::BadConfig(format!("{}: {other}", config.data_dir.display())),
        })?;
        Ok(Self::new(facility, Gateway::new(config.gateway.clone())))
    }
}

/// The full route table, with JSON bodies for unknown paths and methods.
pub fn app(state: Arc<AppState>) -> axum::Router {
    routes::routes()
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed")
        })
        .with_state(state)
}

pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: oneshot::Sender<()>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(self) -> std::io::Result<()> {
        let _ = self.shutdown.send(());
        self.task.await.map_err(std::io::Error::other)?
    }

    /// Runs until the server stops on its own.
    pub async fn wait(self) -> std::io::Result<()> {
        let Self { shutdown, task, .. } = self;
        let result = task.await.map_err(std::io::Error::other)?;
        drop(shutdown);
        result
    }
}

pub async fn serve(config: &ServiceConfig) -> Result<ServiceHandle, ServeError> {
    let state = AppState::from_config(config)?;
    serve_state(config.addr(), Arc::new(state)).await
}

pub async fn serve_state(addr: SocketAddr, state: Arc<AppState>) -> Result<ServiceHandle, ServeError> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => ServeError::PortInUse(addr),
        _ => ServeError::Io(e),
    })?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app(state))
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    tracing::info!(%addr, "listening");
    Ok(ServiceHandle { addr, shutdown: tx, task })
}
