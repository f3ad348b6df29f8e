#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

use factsearch_core::calibration::TemperatureScaler;
use factsearch_core::corpus::{Corpus, Paragraph};
use factsearch_core::gateway::config::BackendsConfig;
use factsearch_core::lexical::build_index;
use factsearch_service::config::RetrievalDefaults;
use factsearch_service::Pipeline;

pub const TOPICS: [&str; 10] = [
    "Indianapolis cruiser sank Pacific torpedo",
    "Prague castle Vltava bridge gothic",
    "Nixon visited Beijing treaty diplomacy",
    "Everest summit expedition Sherpa climbers",
    "Danube river delta Vienna Budapest",
    "Marie Curie radium Nobel chemistry",
    "Apollo lunar landing astronauts Houston",
    "Titanic iceberg Atlantic lifeboats Southampton",
    "Beethoven symphony Vienna deafness composer",
    "Amazon rainforest basin Manaus biodiversity",
];

pub const SECTION_WORDS: [&str; 3] = ["overview", "history", "legacy"];

/// Ten pages of three paragraphs each.
pub fn fixture_corpus() -> Corpus {
    let mut ps = Vec::new();
    for (i, topic) in TOPICS.iter().enumerate() {
        let title = topic.split(' ').next().unwrap();
        for (j, section) in SECTION_WORDS.iter().enumerate() {
            let body = format!("The {section} of {topic} is covered here in paragraph {j} of page {i}.");
            ps.push(Paragraph::new(&format!("page{i}"), title, j, &body));
        }
    }
    Corpus::from_paragraphs("fixture", "en", ps).unwrap()
}

pub fn pipeline_with(corpus: Corpus, backends: &BackendsConfig, t: f64) -> Pipeline {
    let index = Arc::new(build_index(&corpus));
    Pipeline {
        gateway: backends.build_gateway(Some(index.clone())).unwrap(),
        corpus: Arc::new(corpus),
        index,
        scaler: TemperatureScaler::new(t).unwrap(),
        url_template: Some("https://example.org/wiki/{title}".into()),
        retrieval: RetrievalDefaults::default(),
    }
}

pub fn stub_pipeline() -> Pipeline {
    pipeline_with(fixture_corpus(), &BackendsConfig::all_stub(0), 1.5)
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, serde_json::Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| serde_json::Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

/// A port nothing listens on.
pub fn dead_endpoint(path: &str) -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = l.local_addr().unwrap().port();
    drop(l);
    format!("http://127.0.0.1:{port}/{path}")
}
