use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use riskctl::service::{router, AppState};
use riskgrid::project::ProjectAssessment;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn project_json(file: &str) -> Value {
    let text = std::fs::read_to_string(fixture(file)).unwrap();
    serde_json::to_value(ProjectAssessment::from_toml_str(&text).unwrap()).unwrap()
}

fn demo_app(data: &Path) -> Router {
    router(AppState::open(Some(&fixture("figure2.rules")), data).unwrap())
}

fn seeded_app(data: &Path) -> Router {
    router(AppState::open(None, data).unwrap())
}

#[tokio::test]
async fn assess_is_identical_to_cli_golden() {
    let tmp = tempfile::tempdir().unwrap();
    let app = demo_app(tmp.path());
    let (status, _) = call(
        &app,
        "PUT",
        "/api/projects/demo",
        Some(project_json("site_b.toml")),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, body) = call(
        &app,
        "POST",
        "/api/projects/demo/assess?threshold=high&mode=strict",
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body,
        std::fs::read_to_string(fixture("golden/assess_site_b.json")).unwrap()
    );
    let (_, text) = call(&app, "POST", "/api/projects/demo/assess?format=text", None).await;
    assert_eq!(
        text,
        std::fs::read_to_string(fixture("golden/assess_site_b.txt")).unwrap()
    );

    let (status, stored) = call(&app, "GET", "/api/projects/demo", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        serde_json::from_str::<Value>(&stored).unwrap(),
        project_json("site_b.toml")
    );
}

#[tokio::test]
async fn compare_is_identical_to_cli_golden() {
    let tmp = tempfile::tempdir().unwrap();
    let app = demo_app(tmp.path());
    let mut b = project_json("site_b.toml");
    b["project"]["id"] = json!("site_b");
    let mut c = project_json("site_c.toml");
    c["project"]["id"] = json!("site_c");
    assert_eq!(
        call(&app, "PUT", "/api/projects/site_b", Some(b)).await.0,
        StatusCode::CREATED
    );
    assert_eq!(
        call(&app, "PUT", "/api/projects/site_c", Some(c)).await.0,
        StatusCode::CREATED
    );
    let (status, body) = call(
        &app,
        "POST",
        "/api/compare",
        Some(json!({ "projects": ["site_b", "site_c"] })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(
        body,
        std::fs::read_to_string(fixture("golden/compare_b_c.json")).unwrap()
    );

    let (status, _) = call(
        &app,
        "POST",
        "/api/compare",
        Some(json!({ "projects": ["site_b"] })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn factors_come_in_four_groups() {
    let tmp = tempfile::tempdir().unwrap();
    let app = seeded_app(tmp.path());
    let (status, body) = call(&app, "GET", "/api/factors", None).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&body).unwrap();
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 4);
    let total: usize = groups
        .iter()
        .map(|g| g["factors"].as_array().unwrap().len())
        .sum();
    assert_eq!(total, 23);

    let (_, rules) = call(&app, "GET", "/api/rules", None).await;
    let rules: Value = serde_json::from_str(&rules).unwrap();
    assert_eq!(rules["rules"].as_array().unwrap().len(), 36);
    assert!(rules["rules"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| !r["description"].as_str().unwrap().is_empty()));
}

#[tokio::test]
async fn events_use_optimistic_versions() {
    let tmp = tempfile::tempdir().unwrap();
    let app = seeded_app(tmp.path());
    let batch = json!({
        "expected_version": 1,
        "events": [
            { "kind": "confirm", "rule_id": 1, "note": "held" },
            { "kind": "refute", "rule_id": 2 }
        ]
    });
    let (status, body) = call(&app, "POST", "/api/kb/events", Some(batch.clone())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["version"], 3);

    let (status, body) = call(&app, "POST", "/api/kb/events", Some(batch)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(serde_json::from_str::<Value>(&body).unwrap()["errors"].is_array());

    let single = json!({ "expected_version": 3, "kind": "retire_rule", "rule_id": 11 });
    assert_eq!(
        call(&app, "POST", "/api/kb/events", Some(single)).await.0,
        StatusCode::CREATED
    );

    let (_, kb) = call(&app, "GET", "/api/kb", None).await;
    let kb: Value = serde_json::from_str(&kb).unwrap();
    assert_eq!(kb["version"], 4);
    assert_eq!(kb["changelog"].as_array().unwrap().len(), 4);

    // A batch with one bad event persists nothing.
    let mixed = json!({
        "expected_version": 4,
        "events": [{ "kind": "confirm", "rule_id": 3 }, { "kind": "confirm", "rule_id": 99 }]
    });
    assert_eq!(
        call(&app, "POST", "/api/kb/events", Some(mixed)).await.0,
        StatusCode::BAD_REQUEST
    );
    let (_, kb) = call(&app, "GET", "/api/kb", None).await;
    assert_eq!(serde_json::from_str::<Value>(&kb).unwrap()["version"], 4);

    // The store on disk agrees with the service.
    let reopened = seeded_app(tmp.path());
    let (_, kb) = call(&reopened, "GET", "/api/kb", None).await;
    assert_eq!(serde_json::from_str::<Value>(&kb).unwrap()["version"], 4);
}

#[tokio::test]
async fn errors_are_categorised() {
    let tmp = tempfile::tempdir().unwrap();
    let app = seeded_app(tmp.path());
    assert_eq!(
        call(&app, "GET", "/api/projects/ghost", None).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        call(&app, "POST", "/api/projects/ghost/assess", None)
            .await
            .0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        call(&app, "GET", "/api/nothing", None).await.0,
        StatusCode::NOT_FOUND
    );

    let mut wrong_scope = project_json("offshore.toml");
    wrong_scope["bindings"]["site"]["IN"]["time_zone_difference"] = json!("high");
    wrong_scope["bindings"]["task"]["BUILD"]["process_phase"] = json!("lunch");
    let (status, body) = call(&app, "PUT", "/api/projects/offshore", Some(wrong_scope)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let errors = serde_json::from_str::<Value>(&body).unwrap()["errors"]
        .as_array()
        .unwrap()
        .clone();
    assert_eq!(errors.len(), 2, "{body}");
    assert!(errors
        .iter()
        .any(|e| e["error"] == "wrong_scope" && e["factor"] == "time_zone_difference"));

    let (status, _) = call(
        &app,
        "PUT",
        "/api/projects/other",
        Some(project_json("offshore.toml")),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    assert_eq!(
        call(
            &app,
            "PUT",
            "/api/projects/offshore",
            Some(project_json("offshore.toml"))
        )
        .await
        .0,
        StatusCode::CREATED
    );
    assert_eq!(
        call(
            &app,
            "PUT",
            "/api/projects/offshore",
            Some(project_json("offshore.toml"))
        )
        .await
        .0,
        StatusCode::OK
    );
    let (status, _) = call(
        &app,
        "POST",
        "/api/projects/offshore/assess?threshold=extreme",
        None,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, body) = call(
        &app,
        "POST",
        "/api/projects/offshore/assess?mode=assume_nominal",
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");

    let (status, _) = call(
        &app,
        "POST",
        "/api/kb/events",
        Some(json!({ "kind": "confirm", "rule_id": 1 })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}
