//! HTTP client for remote recommenders speaking the batch protocol.
//!
//! Request: `POST <endpoint>` with `{"queries": [[item_id, ...], ...], "k": n}`.
//! Response: `{"predictions": [[{"item_id": "...", "score": 1.0}, ...], ...]}`,
//! order-aligned with the request. Only HTTP 200 counts as success; failed
//! attempts are retried with exponential backoff starting at 100 ms.
//!
//! Responses are validated against the prediction contract. Offending items
//! (duplicates, query echoes, overflow past `k`) are stripped rather than
//! failing the run, and every strip is counted.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::ItemId;
use crate::error::{RecError, Result};
use crate::models::{PredictionList, RecModel};

#[derive(Clone, Debug)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Additional attempts after the first failure.
    pub max_retries: u32,
    /// Queries per POST.
    pub batch_size: usize,
    /// Optional bearer token sent as an `Authorization` header.
    pub bearer_token: Option<String>,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            timeout_ms: 5_000,
            max_retries: 2,
            batch_size: 128,
            bearer_token: None,
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    queries: &'a [Vec<ItemId>],
    k: usize,
}

#[derive(Deserialize)]
struct WireResponse {
    predictions: Vec<Vec<WireItem>>,
}

#[derive(Deserialize)]
struct WireItem {
    item_id: ItemId,
    #[serde(default)]
    score: Option<f64>,
}

pub struct RemoteModel {
    config: RemoteConfig,
    agent: ureq::Agent,
    sanitized: AtomicU64,
}

impl RemoteModel {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build();
        RemoteModel {
            config,
            agent,
            sanitized: AtomicU64::new(0),
        }
    }

    fn post_once(&self, body: &str) -> std::result::Result<String, String> {
        let mut request = self
            .agent
            .post(&self.config.endpoint)
            .set("content-type", "application/json");
        if let Some(token) = &self.config.bearer_token {
            request = request.set("authorization", &format!("Bearer {token}"));
        }
        match request.send_string(body) {
            Ok(resp) if resp.status() == 200 => resp
                .into_string()
                .map_err(|e| format!("reading response body: {e}")),
            Ok(resp) => Err(format!("unexpected status {}", resp.status())),
            Err(ureq::Error::Status(code, _)) => Err(format!("status {code}")),
            Err(ureq::Error::Transport(t)) => Err(format!("transport: {t}")),
        }
    }

    fn post_with_retries(&self, body: &str) -> Result<String> {
        let mut backoff = Duration::from_millis(100);
        let mut last_err = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            match self.post_once(body) {
                Ok(body) => return Ok(body),
                Err(e) => {
                    log::warn!(
                        "remote model call failed (attempt {}/{}): {e}",
                        attempt + 1,
                        self.config.max_retries + 1
                    );
                    last_err = e;
                }
            }
        }
        Err(RecError::Remote(format!(
            "{} after {} attempts: {last_err}",
            self.config.endpoint,
            self.config.max_retries + 1
        )))
    }

    /// Enforces the prediction contract on one returned list, stripping
    /// violating items and counting each strip.
    fn sanitize(&self, query: &[ItemId], k: usize, raw: Vec<WireItem>) -> PredictionList {
        let mut items: Vec<ItemId> = Vec::new();
        let mut scores: Vec<Option<f64>> = Vec::new();
        let mut stripped = 0u64;
        for wire in raw {
            let dup = items.iter().any(|i| *i == wire.item_id);
            let echoed = query.iter().any(|q| *q == wire.item_id);
            if dup || echoed || items.len() >= k {
                stripped += 1;
                continue;
            }
            items.push(wire.item_id);
            scores.push(wire.score);
        }
        // Scores survive only when complete and non-increasing.
        let scores = if !items.is_empty() && scores.iter().all(Option::is_some) {
            let values: Vec<f64> = scores.into_iter().map(Option::unwrap).collect();
            if values.windows(2).any(|w| w[0] < w[1]) {
                stripped += 1;
                None
            } else {
                Some(values)
            }
        } else {
            None
        };
        if stripped > 0 {
            self.sanitized.fetch_add(stripped, Ordering::Relaxed);
        }
        PredictionList { items, scores }
    }
}

impl RecModel for RemoteModel {
    fn name(&self) -> &str {
        "remote"
    }

    fn predict(&self, queries: &[Vec<ItemId>], k: usize) -> Result<Vec<PredictionList>> {
        let mut out = Vec::with_capacity(queries.len());
        for batch in queries.chunks(self.config.batch_size.max(1)) {
            let body = serde_json::to_string(&WireRequest { queries: batch, k })
                .map_err(|e| RecError::Remote(format!("encode request: {e}")))?;
            let response = self.post_with_retries(&body)?;
            let parsed: WireResponse = serde_json::from_str(&response)
                .map_err(|e| RecError::Remote(format!("malformed response: {e}")))?;
            if parsed.predictions.len() != batch.len() {
                return Err(RecError::Remote(format!(
                    "response carries {} prediction lists for {} queries",
                    parsed.predictions.len(),
                    batch.len()
                )));
            }
            for (query, raw) in batch.iter().zip(parsed.predictions) {
                out.push(self.sanitize(query, k, raw));
            }
        }
        Ok(out)
    }

    fn sanitization_count(&self) -> u64 {
        self.sanitized.load(Ordering::Relaxed)
    }

    fn is_deterministic(&self) -> bool {
        false
    }
}
