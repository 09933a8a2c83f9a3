//! In-repo mock HTTP server speaking the remote batch protocol.
//!
//! Used by the integration tests and handy for testing client integrations:
//! a handler closure decides the reply per call, so fixed responses, flaky
//! sequences and malformed payloads are all a few lines each.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::Deserialize;

use crate::dataset::ItemId;
use crate::error::{RecError, Result};
use crate::models::RecModel;

/// A parsed request as the mock handler sees it.
#[derive(Clone, Debug, Deserialize)]
pub struct MockRequest {
    pub queries: Vec<Vec<ItemId>>,
    pub k: usize,
    /// 0-based index of this call since server start.
    #[serde(skip)]
    pub call_index: usize,
}

/// What the handler sends back.
#[derive(Clone, Debug)]
pub enum MockReply {
    /// Valid protocol reply: one scored list per query.
    Predictions(Vec<Vec<(ItemId, Option<f64>)>>),
    /// Arbitrary status and body, for misbehaving-server scenarios.
    Raw { status: u16, body: String },
}

impl MockReply {
    fn into_response(self) -> tiny_http::Response<std::io::Cursor<Vec<u8>>> {
        match self {
            MockReply::Predictions(lists) => {
                let predictions: Vec<Vec<serde_json::Value>> = lists
                    .into_iter()
                    .map(|list| {
                        list.into_iter()
                            .map(|(item_id, score)| match score {
                                Some(s) => serde_json::json!({"item_id": item_id, "score": s}),
                                None => serde_json::json!({"item_id": item_id}),
                            })
                            .collect()
                    })
                    .collect();
                let body = serde_json::json!({ "predictions": predictions }).to_string();
                tiny_http::Response::from_string(body).with_status_code(200)
            }
            MockReply::Raw { status, body } => {
                tiny_http::Response::from_string(body).with_status_code(status)
            }
        }
    }
}

pub struct MockRecServer {
    server: Arc<tiny_http::Server>,
    url: String,
    calls: Arc<AtomicUsize>,
    worker: Option<JoinHandle<()>>,
}

impl MockRecServer {
    /// Starts the server on an ephemeral local port.
    pub fn start<H>(handler: H) -> Result<Self>
    where
        H: Fn(&MockRequest) -> MockReply + Send + Sync + 'static,
    {
        let server = Arc::new(
            tiny_http::Server::http("127.0.0.1:0")
                .map_err(|e| RecError::Remote(format!("mock server: {e}")))?,
        );
        let addr = server
            .server_addr()
            .to_ip()
            .expect("tcp listener has an ip address");
        let url = format!("http://{addr}");
        let calls = Arc::new(AtomicUsize::new(0));

        let worker_server = Arc::clone(&server);
        let worker_calls = Arc::clone(&calls);
        let worker = std::thread::spawn(move || {
            for mut request in worker_server.incoming_requests() {
                let call_index = worker_calls.fetch_add(1, Ordering::SeqCst);
                let mut body = String::new();
                let _ = request.as_reader().read_to_string(&mut body);
                let reply = match serde_json::from_str::<MockRequest>(&body) {
                    Ok(mut parsed) => {
                        parsed.call_index = call_index;
                        handler(&parsed)
                    }
                    Err(e) => MockReply::Raw {
                        status: 400,
                        body: format!("bad request: {e}"),
                    },
                };
                let _ = request.respond(reply.into_response());
            }
        });

        Ok(MockRecServer {
            server,
            url,
            calls,
            worker: Some(worker),
        })
    }

    /// Serves a local model over the wire protocol, so client behavior can
    /// be compared against calling the model directly.
    pub fn serving_model<M>(model: M) -> Result<Self>
    where
        M: RecModel + 'static,
    {
        Self::start(move |req| match model.predict(&req.queries, req.k) {
            Ok(preds) => MockReply::Predictions(
                preds
                    .into_iter()
                    .map(|p| {
                        let scores = p.scores.clone();
                        p.items
                            .into_iter()
                            .enumerate()
                            .map(|(i, item)| (item, scores.as_ref().map(|s| s[i])))
                            .collect()
                    })
                    .collect(),
            ),
            Err(e) => MockReply::Raw {
                status: 500,
                body: e.to_string(),
            },
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Requests handled since start.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Drop for MockRecServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{RemoteConfig, RemoteModel};

    fn ids(raw: &[&str]) -> Vec<ItemId> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn echo_roundtrip_passes_lists_through() {
        let server = MockRecServer::start(|req| {
            MockReply::Predictions(
                req.queries
                    .iter()
                    .map(|_| vec![("x".to_string(), Some(2.0)), ("y".to_string(), Some(1.0))])
                    .collect(),
            )
        })
        .unwrap();
        let model = RemoteModel::new(RemoteConfig::new(server.url()));
        let preds = model.predict(&[ids(&["a"]), ids(&["b"])], 5).unwrap();
        assert_eq!(preds.len(), 2);
        assert_eq!(preds[0].items, ids(&["x", "y"]));
        assert_eq!(preds[0].scores, Some(vec![2.0, 1.0]));
        assert_eq!(model.sanitization_count(), 0);
    }

    #[test]
    fn duplicate_item_stripped_and_counted() {
        let server = MockRecServer::start(|_| {
            MockReply::Predictions(vec![vec![
                ("x".to_string(), None),
                ("x".to_string(), None),
                ("y".to_string(), None),
            ]])
        })
        .unwrap();
        let model = RemoteModel::new(RemoteConfig::new(server.url()));
        let preds = model.predict(&[ids(&["a"])], 5).unwrap();
        assert_eq!(preds[0].items, ids(&["x", "y"]));
        assert_eq!(model.sanitization_count(), 1);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let server = MockRecServer::start(|_| {
            MockReply::Predictions(vec![
                vec![("x".to_string(), None)],
                vec![("y".to_string(), None)],
                vec![("z".to_string(), None)],
            ])
        })
        .unwrap();
        let model = RemoteModel::new(RemoteConfig::new(server.url()));
        let err = model.predict(&[ids(&["a"]), ids(&["b"])], 5).unwrap_err();
        assert!(err.to_string().contains("3 prediction lists for 2 queries"));
    }

    #[test]
    fn flaky_server_heals_within_retries() {
        let server = MockRecServer::start(|req| {
            if req.call_index < 2 {
                MockReply::Raw {
                    status: 500,
                    body: "boom".into(),
                }
            } else {
                MockReply::Predictions(vec![vec![("x".to_string(), None)]])
            }
        })
        .unwrap();
        let mut config = RemoteConfig::new(server.url());
        config.max_retries = 3;
        let model = RemoteModel::new(config);
        let preds = model.predict(&[ids(&["a"])], 5).unwrap();
        assert_eq!(preds[0].items, ids(&["x"]));
        assert_eq!(server.call_count(), 3);
    }

    #[test]
    fn persistent_failure_exhausts_retries() {
        let server = MockRecServer::start(|_| MockReply::Raw {
            status: 503,
            body: "down".into(),
        })
        .unwrap();
        let mut config = RemoteConfig::new(server.url());
        config.max_retries = 1;
        let model = RemoteModel::new(config);
        let err = model.predict(&[ids(&["a"])], 5).unwrap_err();
        assert!(err.to_string().contains("2 attempts"));
        assert_eq!(server.call_count(), 2);
    }
}
