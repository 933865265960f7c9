//! Blocking JSON client for components exposed as web services.
//!
//! Request: `POST <endpoint>` with `{"question": "<text>"}`.
//! Response: status 200 and `{"items": ["<iri>", ...]}`. Anything else is a
//! failed invocation that yields an empty annotation set.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::model::{canonical_triples, AnnotationSet, QaTask, Question};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpBinding {
    pub endpoint: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub retries: u32,
}

fn default_timeout() -> u64 {
    5000
}

impl HttpBinding {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpBinding {
            endpoint: endpoint.into(),
            timeout_ms: default_timeout(),
            retries: 0,
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    question: &'a str,
}

#[derive(Deserialize)]
struct Response {
    items: Vec<String>,
}

fn call_once(agent: &ureq::Agent, endpoint: &str, text: &str) -> Result<Vec<String>, String> {
    let mut resp = agent
        .post(endpoint)
        .send_json(Request { question: text })
        .map_err(|e| e.to_string())?;
    if resp.status().as_u16() != 200 {
        return Err(format!("status {}", resp.status()));
    }
    resp.body_mut()
        .read_json::<Response>()
        .map(|r| r.items)
        .map_err(|e| format!("bad response body: {e}"))
}

pub(crate) fn invoke(binding: &HttpBinding, component_id: &str, task: QaTask, question: &Question) -> AnnotationSet {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(binding.timeout_ms)))
        .http_status_as_error(false)
        .build()
        .into();
    let started = Instant::now();
    let mut last_err = String::new();
    for attempt in 0..=binding.retries {
        match call_once(&agent, &binding.endpoint, &question.text) {
            Ok(items) => {
                let items: BTreeSet<String> = if task.scored_as() == QaTask::Qb {
                    canonical_triples(items.iter().map(String::as_str))
                } else {
                    items.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
                };
                return AnnotationSet {
                    task: task.scored_as(),
                    items,
                    source_component: component_id.to_string(),
                    latency_ms: started.elapsed().as_secs_f64() * 1000.0,
                    failed: false,
                };
            }
            Err(e) => {
                log::debug!("{component_id}: attempt {} failed: {e}", attempt + 1);
                last_err = e;
            }
        }
    }
    log::warn!(
        "component `{component_id}` at {} failed on question `{}`: {last_err}",
        binding.endpoint,
        question.id
    );
    AnnotationSet {
        task: task.scored_as(),
        items: BTreeSet::new(),
        source_component: component_id.to_string(),
        latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        failed: true,
    }
}
