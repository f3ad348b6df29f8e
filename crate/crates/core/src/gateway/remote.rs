//! JSON-over-HTTP client for model servers.
//!
//! One `POST` per call to the role's endpoint:
//!
//! | role    | request                                   | response                                    |
//! |---------|-------------------------------------------|---------------------------------------------|
//! | `ner`   | `{"text"}`                                | `{"entities":[{"text","type","start","end"}]}` |
//! | `qg`    | `{"answer","answer_type","context"}`      | `{"question"}`                              |
//! | `cg`    | `{"answer","question"}`                   | `{"claim"}`                                 |
//! | `dense` | `{"claim","k"}`                           | `{"results":[{"para_id","score"}]}`         |
//! | `nli`   | `{"claim","evidence"}`                    | `{"logits":[s,r,n]}`                        |
//!
//! Offsets are character offsets. A dense server answers `404` when it has
//! no index for the active corpus. Transport failures are retried once;
//! every request is idempotent.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ClaimModel, DenseModel, Entity, GatewayError, NerModel, NliLogits, NliModel, QuestionModel, Role};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const PROBE_TIMEOUT: Duration = Duration::from_secs(2);
const RETRIES: usize = 1;

/// Counting semaphore bounding in-flight requests per backend.
#[derive(Debug)]
struct Limiter {
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl Limiter {
    fn new(max: usize) -> Self {
        Limiter {
            max: max.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteBackend {
    role: Role,
    endpoint: String,
    agent: ureq::Agent,
    probe: ureq::Agent,
    limiter: Limiter,
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
}

impl RemoteBackend {
    pub fn new(role: Role, endpoint: impl Into<String>, timeout: Duration, max_in_flight: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let probe = ureq::Agent::config_builder()
            .timeout_global(Some(PROBE_TIMEOUT))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend {
            role,
            endpoint: endpoint.into(),
            agent,
            probe,
            limiter: Limiter::new(max_in_flight),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn call<Req: Serialize, Resp: DeserializeOwned>(&self, body: &Req) -> Result<Resp, GatewayError> {
        let _permit = self.limiter.acquire();
        let mut attempt = 0;
        let mut response = loop {
            match self.agent.post(&self.endpoint).send_json(body) {
                Ok(r) => break r,
                Err(e) if attempt < RETRIES => {
                    tracing::debug!(role = %self.role, error = %e, "retrying after transport error");
                    attempt += 1;
                }
                Err(e) => {
                    return Err(GatewayError::Transport {
                        role: self.role,
                        message: e.to_string(),
                    })
                }
            }
        };
        let status = response.status();
        if status == 404 && self.role == Role::Dense {
            let msg = response
                .body_mut()
                .read_json::<ErrorBody>()
                .map(|b| b.error)
                .unwrap_or_else(|_| "no dense index for corpus".into());
            return Err(GatewayError::UnknownCorpus(msg));
        }
        if !status.is_success() {
            let msg = response
                .body_mut()
                .read_to_string()
                .unwrap_or_default();
            return Err(GatewayError::Backend {
                role: self.role,
                message: format!("HTTP {status}: {}", msg.trim()),
            });
        }
        response.body_mut().read_json::<Resp>().map_err(|e| GatewayError::Backend {
            role: self.role,
            message: format!("malformed response: {e}"),
        })
    }

    /// True when the endpoint answers HTTP at all, whatever the status.
    fn probe(&self) -> bool {
        self.probe.get(&self.endpoint).call().is_ok()
    }
}

#[derive(Serialize)]
struct NerRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct WireEntity {
    text: String,
    #[serde(rename = "type")]
    entity_type: String,
    start: usize,
    end: usize,
}

#[derive(Deserialize)]
struct NerResponse {
    entities: Vec<WireEntity>,
}

#[derive(Serialize)]
struct QgRequest<'a> {
    answer: &'a str,
    answer_type: &'a str,
    context: &'a str,
}

#[derive(Deserialize)]
struct QgResponse {
    question: String,
}

#[derive(Serialize)]
struct CgRequest<'a> {
    answer: &'a str,
    question: &'a str,
}

#[derive(Deserialize)]
struct CgResponse {
    claim: String,
}

#[derive(Serialize)]
struct DenseRequest<'a> {
    claim: &'a str,
    k: usize,
}

#[derive(Deserialize)]
struct DenseHit {
    para_id: String,
    score: f64,
}

#[derive(Deserialize)]
struct DenseResponse {
    results: Vec<DenseHit>,
}

#[derive(Serialize)]
struct NliRequest<'a> {
    claim: &'a str,
    evidence: &'a str,
}

#[derive(Deserialize)]
struct NliResponse {
    logits: [f64; 3],
}

impl NerModel for RemoteBackend {
    fn ner(&self, text: &str) -> Result<Vec<Entity>, GatewayError> {
        let r: NerResponse = self.call(&NerRequest { text })?;
        Ok(r.entities
            .into_iter()
            .map(|e| Entity {
                text: e.text,
                entity_type: e.entity_type,
                span: (e.start, e.end),
            })
            .collect())
    }

    fn reachable(&self) -> bool {
        self.probe()
    }
}

impl QuestionModel for RemoteBackend {
    fn generate_question(&self, answer: &Entity, context: &str) -> Result<String, GatewayError> {
        let r: QgResponse = self.call(&QgRequest {
            answer: &answer.text,
            answer_type: &answer.entity_type,
            context,
        })?;
        Ok(r.question)
    }

    fn reachable(&self) -> bool {
        self.probe()
    }
}

impl ClaimModel for RemoteBackend {
    fn generate_claim(&self, answer: &str, question: &str) -> Result<String, GatewayError> {
        let r: CgResponse = self.call(&CgRequest { answer, question })?;
        Ok(r.claim)
    }

    fn reachable(&self) -> bool {
        self.probe()
    }
}

impl DenseModel for RemoteBackend {
    fn dense_search(&self, claim: &str, k: usize) -> Result<Vec<(String, f64)>, GatewayError> {
        let r: DenseResponse = self.call(&DenseRequest { claim, k })?;
        Ok(r.results.into_iter().map(|h| (h.para_id, h.score)).collect())
    }

    fn reachable(&self) -> bool {
        self.probe()
    }
}

impl NliModel for RemoteBackend {
    fn nli(&self, claim: &str, evidence: &str) -> Result<NliLogits, GatewayError> {
        let r: NliResponse = self.call(&NliRequest { claim, evidence })?;
        Ok(NliLogits(r.logits))
    }

    fn reachable(&self) -> bool {
        self.probe()
    }
}
