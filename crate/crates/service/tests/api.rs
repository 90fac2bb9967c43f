use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use cmu_service::{router, Limits, ServiceConfig, ENDPOINTS};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(method: &str, path: &str, body: Option<Value>, config: ServiceConfig) -> (StatusCode, Vec<u8>, axum::http::HeaderMap) {
    let app = router(config).unwrap();
    let req = Request::builder()
        .method(method)
        .uri(path)
        .header(header::CONTENT_TYPE, "application/json")
        .header(header::ORIGIN, "http://ui.example")
        .body(match body {
            Some(v) => Body::from(serde_json::to_vec(&v).unwrap()),
            None => Body::empty(),
        })
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes, headers)
}

async fn post(path: &str, body: Value) -> (StatusCode, Value) {
    let (status, bytes, _) = call("POST", path, Some(body), ServiceConfig::default()).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn small_cm() -> Value {
    json!({ "tp": 26, "fn": 0, "fp": 2, "tn": 6 })
}

fn metric<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["metrics"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["metric"] == name)
        .unwrap()
}

#[tokio::test]
async fn health() {
    let (status, bytes, _) = call("GET", "/api/health", None, ServiceConfig::default()).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["status"], "ok");
}

#[tokio::test]
async fn analyze_small_cm() {
    let (status, v) = post("/api/analyze", json!({ "cm": small_cm(), "seed": 7 })).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let report = &v["report"];
    assert_eq!(report["seed"], 7);
    let tpr = metric(report, "TPR");
    assert!((tpr["hpd_low"].as_f64().unwrap() - 0.89).abs() <= 0.01);
    assert!((tpr["hpd_high"].as_f64().unwrap() - 1.0).abs() <= 0.01);
    let tnr = metric(report, "TNR");
    assert!((tnr["hpd_low"].as_f64().unwrap() - 0.43).abs() <= 0.02);
    assert!((tnr["hpd_high"].as_f64().unwrap() - 0.95).abs() <= 0.02);

    let hists = v["histograms"].as_array().unwrap();
    assert_eq!(hists.len(), 11);
    for h in hists {
        let edges: Vec<f64> = serde_json::from_value(h["bin_edges"].clone()).unwrap();
        let dens: Vec<f64> = serde_json::from_value(h["densities"].clone()).unwrap();
        assert_eq!(dens.len(), 200);
        let area: f64 = dens.iter().zip(edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum();
        assert!((area - 1.0).abs() < 1e-6);
        assert!(dens.iter().all(|&d| d >= 0.0));
    }
}

#[tokio::test]
async fn table_form_cm_and_fixed_prevalence() {
    let body = json!({
        "cm": [[26, 0], [2, 6]],
        "prevalence": { "mode": "fixed", "value": 0.5 },
        "seed": 1,
        "bins": 0
    });
    let (status, v) = post("/api/analyze", body).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let prev = metric(&v["report"], "PREV");
    assert_eq!(prev["mu"], 0.0);
    assert_eq!(prev["point_estimate"], 0.5);
    assert_eq!(v["histograms"].as_array().unwrap().len(), 0);
}

#[tokio::test]
async fn identical_bodies_identical_responses() {
    let body = json!({ "cm": small_cm(), "seed": 123, "samples": 5000 });
    let a = call("POST", "/api/analyze", Some(body.clone()), ServiceConfig::default()).await;
    let b = call("POST", "/api/analyze", Some(body), ServiceConfig::default()).await;
    assert_eq!(a.1, b.1);
}

#[tokio::test]
async fn improper_posterior_is_422() {
    let body = json!({ "cm": { "tp": 5, "fn": 0, "fp": 0, "tn": 0 }, "prior": "haldane", "seed": 1 });
    let (status, v) = post("/api/analyze", body).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "ImproperPosterior");
    assert!(v["error"]["message"].as_str().unwrap().contains("Laplace or Jeffreys"));
}

#[tokio::test]
async fn malformed_bodies_are_400() {
    let (status, bytes, _) = call("POST", "/api/analyze", None, ServiceConfig::default()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["error"]["code"], "ParseError");

    let (status, v) = post("/api/analyze", json!({ "cm": { "tp": 1, "fn": 2 } })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "ParseError");

    let (status, v) = post("/api/analyze", json!({ "cm": { "tp": 0, "fn": 0, "fp": 0, "tn": 0 } })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "EmptyMatrix");

    let (status, v) = post("/api/analyze", json!({ "cm": small_cm(), "credibility": 1.5 })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "InvalidArgument");
}

#[tokio::test]
async fn bm_endpoint() {
    let (status, v) = post("/api/bm", json!({ "cm": small_cm(), "seed": 3 })).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let (inf, dec) = (v["r_inf"].as_f64().unwrap(), v["r_dec"].as_f64().unwrap());
    assert!(inf > 0.99);
    assert!((inf + dec - 1.0).abs() < 0.015);
    assert_eq!(v["summary"]["metric"], "BM");
}

#[tokio::test]
async fn predictive_endpoint() {
    let body = json!({ "cm": { "tp": 1, "fn": 0, "fp": 0, "tn": 0 }, "model": "dirichlet", "n_synth": 1, "draws": 50000, "seed": 9 });
    let (status, v) = post("/api/predictive", body).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let support = v["distribution"]["support"].as_array().unwrap();
    assert_eq!(support.len(), 2);
    assert!((support[1]["probability"].as_f64().unwrap() - 0.6).abs() < 0.01);
    assert_eq!(v["components"].as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn leaderboard_endpoint() {
    let body = json!({
        "submissions": [
            { "name": "a", "accuracy": 0.94, "n": 100 },
            { "name": "b", "accuracy": "90%", "n": 100 },
            { "name": "c", "accuracy": "0.850" }
        ],
        "n": 1000,
        "prizes": [100, 50],
        "draws": 20000,
        "seed": 4
    });
    let (status, v) = post("/api/leaderboard", body).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["prob_best"]["name"], "a");
    assert_eq!(v["submissions"][2]["n"], 1000);
    assert_eq!(v["submissions"][2]["decimals"], 3);
    let total: f64 = v["prizes"]["expected"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!((total - 150.0).abs() < 1e-9);

    let csv = json!({ "csv": "name,accuracy,n\nx,0.9,100\ny,0.8,100\n", "seed": 1, "draws": 1000 });
    let (status, v) = post("/api/leaderboard", csv).await;
    assert_eq!(status, StatusCode::OK, "{v}");

    let both = json!({ "csv": "name,accuracy,n\nx,0.9,100\n", "submissions": [{ "name": "y", "accuracy": 0.5, "n": 2 }] });
    let (status, _) = post("/api/leaderboard", both).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let bad = json!({ "submissions": [{ "name": "a", "accuracy": 0.5004, "n": 10 }, { "name": "b", "accuracy": 0.5, "n": 10 }] });
    let (status, v) = post("/api/leaderboard", bad).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "RoundingInconsistent");
}

#[tokio::test]
async fn samplesize_endpoint_and_caps() {
    let body = json!({ "target_mu": 0.2, "ns": [30, 60, 100, 200], "sims": 1000, "seed": 41 });
    let (status, v) = post("/api/samplesize", body).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["bound_n"], 100);
    assert!(v["plan"]["result_n"].as_u64().is_some());
    assert_eq!(v["plan"]["curve"].as_array().unwrap().len(), 4);

    let (status, v) = post("/api/samplesize", json!({ "target_mu": 0.2, "sims": 5000 })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "LimitExceeded");

    let ns: Vec<u64> = (1..=41).map(|i| i * 10).collect();
    let (status, v) = post("/api/samplesize", json!({ "target_mu": 0.2, "ns": ns })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "LimitExceeded");

    let (status, v) = post("/api/samplesize", json!({ "target_mu": 0.001, "ns": [10, 20], "sims": 200, "seed": 1 })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "TargetUnreachable");
}

#[tokio::test]
async fn default_grid_fits_service_cap() {
    let (status, v) = post("/api/samplesize", json!({ "target_mu": 0.2, "sims": 200, "seed": 2 })).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert!(v["plan"]["curve"].as_array().unwrap().len() <= Limits::SERVICE.max_grid);
}

#[tokio::test]
async fn cors_only_when_configured() {
    let body = json!({ "cm": small_cm(), "seed": 1, "samples": 100, "bins": 0 });
    let (_, _, headers) = call("POST", "/api/analyze", Some(body.clone()), ServiceConfig::default()).await;
    assert!(headers.get(header::ACCESS_CONTROL_ALLOW_ORIGIN).is_none());
    let config = ServiceConfig {
        allow_origin: Some("http://ui.example".into()),
        ..Default::default()
    };
    let (_, _, headers) = call("POST", "/api/analyze", Some(body), config).await;
    assert_eq!(headers[header::ACCESS_CONTROL_ALLOW_ORIGIN], "http://ui.example");
}

#[tokio::test]
async fn every_endpoint_is_routed() {
    for e in ENDPOINTS {
        let body = (e.method == "POST").then(|| json!({}));
        let (status, _, _) = call(e.method, e.path, body, ServiceConfig::default()).await;
        assert_ne!(status, StatusCode::NOT_FOUND, "{}", e.path);
        assert_ne!(status, StatusCode::METHOD_NOT_ALLOWED, "{}", e.path);
    }
}
