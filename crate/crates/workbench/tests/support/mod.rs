//! In-process HTTP helpers shared by the service tests.

#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use rpl_workbench::service::{router, AppState};
use rpl_workbench::store::Store;

pub struct Client {
    pub state: Arc<AppState>,
}

impl Client {
    pub fn open(store: &Path) -> Self {
        Self::with_timeout(store, Duration::from_secs(60))
    }

    pub fn with_timeout(store: &Path, timeout: Duration) -> Self {
        Self {
            state: AppState::with_timeout(Store::open(store).expect("store opens"), timeout),
        }
    }

    pub async fn send(&self, method: Method, uri: &str, body: Option<String>) -> (StatusCode, String) {
        let mut req = Request::builder().method(method).uri(uri);
        if body.is_some() {
            req = req.header("content-type", "application/json");
        }
        let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
        let resp = router(self.state.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    pub async fn get(&self, uri: &str) -> (StatusCode, String) {
        self.send(Method::GET, uri, None).await
    }

    pub async fn post(&self, uri: &str, body: serde_json::Value) -> (StatusCode, String) {
        self.send(Method::POST, uri, Some(body.to_string())).await
    }
}
