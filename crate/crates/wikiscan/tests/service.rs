use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use wikiscan::config::{MetadataMode, PipelineConfig};
use wikiscan::ingest::{read_corpus, CorpusFormat};
use wikiscan::pipeline::run_pipeline;
use wikiscan::scanner::Scanner;
use wikiscan::server::router;
use wikiscan::xtools::{fetch_fixture, fixture_path};

struct World {
    dir: tempfile::TempDir,
    cfg: PipelineConfig,
    /// Corpus titles that have an articleinfo fixture.
    titles: Vec<String>,
    /// A corpus title without one.
    unfetched: String,
}

fn world() -> World {
    let dir = tempfile::tempdir().unwrap();
    wikiscan::fixture::write(dir.path(), 2000, 7, 50).unwrap();
    let cfg = PipelineConfig::load(&dir.path().join("pipeline.toml")).unwrap();
    run_pipeline(&cfg, false).unwrap();
    let xdir = dir.path().join("xtools");
    let corpus = read_corpus(&cfg.paths.corpus, CorpusFormat::Jsonl).unwrap().records;
    let (with, without): (Vec<_>, Vec<_>) = corpus.into_iter().map(|a| a.title).partition(|t| fixture_path(&xdir, t).exists());
    World { dir, cfg, titles: with, unfetched: without[0].clone() }
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post_scan(body: Value) -> Request<Body> {
    Request::post("/scan").header("content-type", "application/json").body(Body::from(body.to_string())).unwrap()
}

fn enc(t: &str) -> String {
    percent_encoding::utf8_percent_encode(t, percent_encoding::NON_ALPHANUMERIC).to_string()
}

#[tokio::test]
async fn endpoints() {
    let w = world();
    let scanner = Arc::new(Scanner::from_config(&w.cfg).unwrap());
    let app = router(scanner.clone());
    let title = &w.titles[0];

    let (s, v) = call(&app, get("/health")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["model_id"], scanner.model_id());
    assert_eq!(v["titles"], 2000);

    let (s, v) = call(&app, get(&format!("/search?q={}&limit=5", enc(title)))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v[0]["title"], title.as_str());
    assert_eq!(v[0]["score"], 1.0);
    assert!(v.as_array().unwrap().len() <= 5);
    assert_eq!(call(&app, get("/search?q=")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, get("/search")).await.0, StatusCode::BAD_REQUEST);

    let (s, v) = call(&app, get(&format!("/article/{}/metadata", enc(title)))).await;
    assert_eq!(s, StatusCode::OK);
    let expected = fetch_fixture(&w.dir.path().join("xtools"), title).unwrap();
    assert_eq!(v["metadata"], serde_json::to_value(&expected).unwrap());
    assert_eq!(v["title"], title.as_str());
    assert!(v["page_url"].as_str().unwrap().starts_with("https://arz.wikipedia.org/wiki/"));

    let (s, v) = call(&app, get("/article/nothing%20here/metadata")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["retryable"], false);
    let (s, v) = call(&app, get(&format!("/article/{}/metadata", enc(&w.unfetched)))).await;
    assert_eq!(s, StatusCode::BAD_GATEWAY);
    assert_eq!(v["retryable"], true);

    let (s, v) = call(&app, post_scan(json!({ "title": title }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["model_id"], scanner.model_id());
    assert!(["human-generated", "template-translated"].contains(&v["label"].as_str().unwrap()));
    assert_eq!(call(&app, post_scan(json!({ "title": "nothing here" }))).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, post_scan(json!({ "title": w.unfetched }))).await.0, StatusCode::BAD_GATEWAY);
    assert!(call(&app, post_scan(json!({ "name": 1 }))).await.0.is_client_error());

    let (s, v) = call(&app, get("/model")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["model_type"], "gbt");
    assert_eq!(v["model_id"], scanner.model_id());
    assert_eq!(v["feature_config"]["mode"], "metadata");
    assert!(v["summary"]["n_train"].as_u64().unwrap() > 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn http_verdicts_equal_cli_scan() {
    let w = world();
    let app = router(Arc::new(Scanner::from_config(&w.cfg).unwrap()));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    let client = reqwest::Client::new();
    assert!(client.get(format!("http://{addr}/health")).send().await.unwrap().status().is_success());

    let cfg_path = w.dir.path().join("pipeline.toml");
    assert!(w.titles.len() >= 20);
    let mut labels = std::collections::BTreeSet::new();
    for title in &w.titles[..20] {
        let online: Value =
            client.post(format!("http://{addr}/scan")).json(&json!({ "title": title })).send().await.unwrap().json().await.unwrap();
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_wikiscan"))
            .args(["--config", cfg_path.to_str().unwrap(), "scan", title])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let offline: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(online, offline, "{title}");
        labels.insert(online["label"].as_str().unwrap().to_string());
    }
    assert_eq!(labels.len(), 2, "both classes appear among the 20 titles");
}

#[test]
fn refuses_to_start_without_model() {
    let w = world();
    let mut cfg = w.cfg.clone();
    cfg.service.model = Some(w.dir.path().join("absent.json"));
    let e = Scanner::from_config(&cfg).err().unwrap();
    assert_eq!(e.exit_code(), 2);
    std::fs::write(w.dir.path().join("garbage.json"), "{}").unwrap();
    cfg.service.model = Some(w.dir.path().join("garbage.json"));
    assert_eq!(Scanner::from_config(&cfg).err().unwrap().exit_code(), 2);

    std::fs::remove_file(w.cfg.paths.out_dir.join("model.json")).unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_wikiscan"))
        .args(["--config", w.dir.path().join("pipeline.toml").to_str().unwrap(), "serve", "--port", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[tokio::test]
async fn live_upstream_failure_is_502() {
    let w = world();
    let upstream = axum::Router::new().fallback(|| async { (StatusCode::SERVICE_UNAVAILABLE, "down") });
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, upstream).await.unwrap() });

    let mut cfg = w.cfg.clone();
    cfg.service.metadata = MetadataMode::Live;
    cfg.service.xtools_base = format!("http://{addr}");
    let app = router(Arc::new(Scanner::from_config(&cfg).unwrap()));
    let (s, v) = call(&app, post_scan(json!({ "title": w.titles[0] }))).await;
    assert_eq!(s, StatusCode::BAD_GATEWAY);
    assert_eq!(v["retryable"], true);
}

#[test]
fn corpus_metadata_mode_needs_no_fixtures() {
    let w = world();
    let mut cfg = w.cfg.clone();
    cfg.service.metadata = MetadataMode::Corpus;
    let scanner = Scanner::from_config(&cfg).unwrap();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let v = rt.block_on(scanner.scan(&w.unfetched)).unwrap();
    assert_eq!(v.title, w.unfetched);
    assert!(v.summary.is_some());
}
