use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use proptest::prelude::*;
use tower::ServiceExt;

use super::*;
use crate::model::Dialogue;
use crate::testkit::dialogue;

fn corpus(n: usize) -> Vec<Dialogue> {
    (0..n)
        .map(|i| {
            dialogue(
                &format!("D{i}"),
                &[(
                    "",
                    "i need a hotel",
                    Some("somewhere cheap please"),
                    &[("hotel-pricerange", "cheap")],
                )],
            )
        })
        .collect()
}

fn evaluators(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn judgment(d: &str, e: &str, bias_free: bool, quality_ok: bool, slot_consistent: bool) -> Judgment {
    Judgment {
        dialogue_id: d.into(),
        evaluator_id: e.into(),
        bias_free,
        quality_ok,
        slot_consistent,
        note: None,
        submitted_at: None,
    }
}

fn store(n: usize, evals: &[&str]) -> JudgmentStore {
    let evals = evaluators(evals);
    let tasks = sample_tasks(&corpus(n), 1.0, 3, &evals).unwrap();
    JudgmentStore::in_memory(tasks, &evals)
}

#[test]
fn empty_store_has_no_ratios() {
    let s = store(4, &["a"]).summary();
    assert_eq!(s.judgments, 0);
    assert_eq!(s.per_judgment.quality_ok.value(), None);
    assert_eq!(s.per_dialogue_consensus.bias_free.value(), None);
    assert_eq!(s.coverage.value(), Some(0.0));
}

#[test]
fn one_negative_quality_vote_out_of_six() {
    let s = store(2, &["a", "b", "c"]);
    for d in ["D0", "D1"] {
        for e in ["a", "b", "c"] {
            let quality = !(d == "D1" && e == "b");
            assert_eq!(
                s.submit(judgment(d, e, true, quality, true)).unwrap(),
                SubmitOutcome::Created
            );
        }
    }
    let sum = s.summary();
    assert_eq!(
        (sum.per_judgment.quality_ok.correct, sum.per_judgment.quality_ok.total),
        (5, 6)
    );
    assert_eq!(
        (
            sum.per_dialogue_consensus.quality_ok.correct,
            sum.per_dialogue_consensus.quality_ok.total
        ),
        (1, 2)
    );
    assert_eq!(sum.coverage.value(), Some(1.0));
}

#[test]
fn resubmission_is_latest_wins_and_audited() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    let evals = evaluators(&["a"]);
    let tasks = sample_tasks(&corpus(3), 1.0, 3, &evals).unwrap();
    let s = JudgmentStore::open(&path, tasks.clone(), &evals).unwrap();
    s.submit(judgment("D0", "a", true, true, true)).unwrap();
    assert_eq!(
        s.submit(judgment("D0", "a", true, true, true)).unwrap(),
        SubmitOutcome::Unchanged
    );
    assert_eq!(
        s.submit(judgment("D0", "a", true, true, false)).unwrap(),
        SubmitOutcome::Updated { revision: 2 }
    );
    assert_eq!(s.summary().per_judgment.slot_consistent.value(), Some(0.0));
    drop(s);

    let lines = std::fs::read_to_string(&path).unwrap();
    assert_eq!(lines.lines().count(), 2);
    let reopened = JudgmentStore::open(&path, tasks, &evals).unwrap();
    assert_eq!(
        reopened.judgments(),
        vec![{
            let mut j = judgment("D0", "a", true, true, false);
            j.submitted_at = reopened.judgments()[0].submitted_at;
            j
        }]
    );
    assert_eq!(reopened.summary().per_judgment.slot_consistent.value(), Some(0.0));
}

#[test]
fn rejects_unsampled_dialogue_and_unknown_evaluator() {
    let s = store(2, &["a"]);
    assert!(matches!(
        s.submit(judgment("D9", "a", true, true, true)),
        Err(AnnotateError::UnknownDialogue(_))
    ));
    assert!(matches!(
        s.submit(judgment("D0", "zed", true, true, true)),
        Err(AnnotateError::UnknownEvaluator(_))
    ));
    assert!(matches!(s.next_task("zed"), Err(AnnotateError::UnknownEvaluator(_))));
}

#[test]
fn open_registration_on_first_fetch() {
    let tasks = sample_tasks(&corpus(2), 1.0, 3, &[]).unwrap();
    let s = JudgmentStore::in_memory(tasks, &[]);
    assert!(s.submit(judgment("D0", "new", true, true, true)).is_err());
    assert_eq!(s.next_task("new").unwrap().unwrap().dialogue_id, "D0");
    s.submit(judgment("D0", "new", true, true, true)).unwrap();
    assert_eq!(s.next_task("new").unwrap().unwrap().dialogue_id, "D1");
    s.submit(judgment("D1", "new", true, true, true)).unwrap();
    assert_eq!(s.next_task("new").unwrap(), None);
}

#[test]
fn export_writes_latest_judgments() {
    let dir = tempfile::tempdir().unwrap();
    let s = store(2, &["a", "b"]);
    s.submit(judgment("D1", "b", false, true, true)).unwrap();
    s.submit(judgment("D0", "a", true, true, true)).unwrap();
    let out = dir.path().join("judgments.jsonl");
    assert_eq!(s.export(&out).unwrap(), 2);
    let text = std::fs::read_to_string(out).unwrap();
    let first: Judgment = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first.dialogue_id, "D0");
}

proptest! {
    #[test]
    fn replay_is_idempotent_and_order_free(
        ops in prop::collection::vec((0usize..3, 0usize..2, any::<bool>(), any::<bool>(), any::<bool>()), 0..30),
        seed in any::<u64>(),
    ) {
        let names = ["a", "b"];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        let evals = evaluators(&names);
        let tasks = sample_tasks(&corpus(3), 1.0, 1, &evals).unwrap();
        let s = JudgmentStore::open(&path, tasks.clone(), &evals).unwrap();
        for &(d, e, b, q, c) in &ops {
            s.submit(judgment(&format!("D{d}"), names[e], b, q, c)).unwrap();
        }
        let expected = s.summary();
        drop(s);
        let once = JudgmentStore::open(&path, tasks.clone(), &evals).unwrap();
        prop_assert_eq!(once.summary(), expected.clone());
        drop(once);
        let twice = JudgmentStore::open(&path, tasks.clone(), &evals).unwrap();
        prop_assert_eq!(twice.summary(), expected.clone());

        // Journal lines from different pairs commute.
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        lines.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled = dir.path().join("shuffled.jsonl");
        std::fs::write(&shuffled, lines.join("\n")).unwrap();
        let reordered = JudgmentStore::open(&shuffled, tasks, &evals).unwrap();
        prop_assert_eq!(reordered.summary(), expected);
    }
}

fn service(n: usize, evals: &[&str]) -> Arc<AnnotateService> {
    let evals = evaluators(evals);
    let c = corpus(n);
    let tasks = sample_tasks(&c, 0.5, 11, &evals).unwrap();
    Arc::new(AnnotateService::new(c, JudgmentStore::in_memory(tasks, &evals)))
}

async fn call(svc: &Arc<AnnotateService>, req: Request<Body>) -> (StatusCode, serde_json::Value) {
    let resp = router(svc.clone(), None).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null),
    )
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(body: serde_json::Value) -> Request<Body> {
    Request::post("/api/judgments")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

#[tokio::test]
async fn http_task_flow() {
    let svc = service(4, &["a"]);
    let (status, body) = call(&svc, get("/api/tasks?evaluator=a")).await;
    assert_eq!(status, StatusCode::OK);
    let id = body["task"]["dialogue_id"].as_str().unwrap().to_string();
    assert_eq!(body["dialogue"]["id"], id.as_str());
    assert_eq!(body["dialogue"]["turns"][0]["user2"]["text"], "somewhere cheap please");
    assert_eq!(body["progress"]["total"], 2);

    let (status, _) = call(&svc, get(&format!("/api/dialogues/{id}"))).await;
    assert_eq!(status, StatusCode::OK);

    let verdict = serde_json::json!({
        "dialogue_id": id, "evaluator_id": "a",
        "bias_free": true, "quality_ok": true, "slot_consistent": false
    });
    let (status, body) = call(&svc, post(verdict.clone())).await;
    assert_eq!(
        (status, body["status"].as_str()),
        (StatusCode::CREATED, Some("created"))
    );
    let (status, body) = call(&svc, post(verdict)).await;
    assert_eq!((status, body["status"].as_str()), (StatusCode::OK, Some("unchanged")));

    let (_, body) = call(&svc, get("/api/tasks?evaluator=a")).await;
    assert_ne!(body["task"]["dialogue_id"], id.as_str());
    assert_eq!(body["progress"]["judged"], 1);

    let (status, body) = call(&svc, get("/api/summary")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["judgments"], 1);
    assert_eq!(body["per_judgment"]["slot_consistent"]["value"], 0.0);
    assert_eq!(body["coverage"]["value"], 0.5);
}

#[tokio::test]
async fn http_errors() {
    let svc = service(4, &["a"]);
    assert_eq!(call(&svc, get("/api/tasks")).await.0, StatusCode::BAD_REQUEST);
    let (status, body) = call(&svc, get("/api/tasks?evaluator=mallory")).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::FORBIDDEN, Some("unknown_evaluator"))
    );
    let (status, body) = call(&svc, get("/api/dialogues/nope")).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::NOT_FOUND, Some("unknown_dialogue"))
    );
    let unsampled = ["D0", "D1", "D2", "D3"]
        .into_iter()
        .find(|d| !svc.store().is_sampled(d))
        .unwrap();
    let bad = serde_json::json!({
        "dialogue_id": unsampled, "evaluator_id": "a",
        "bias_free": true, "quality_ok": true, "slot_consistent": true
    });
    let (status, body) = call(&svc, post(bad)).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::NOT_FOUND, Some("unknown_dialogue"))
    );
    let resp = router(svc.clone(), None)
        .oneshot(
            Request::post("/api/judgments")
                .header("content-type", "application/json")
                .body(Body::from("{\"dialogue_id\": 3}"))
                .unwrap(),
        )
        .await
        .unwrap();
    assert!(resp.status().is_client_error());
}

#[tokio::test]
async fn http_serves_static_bundle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>ui</html>").unwrap();
    let svc = service(2, &["a"]);
    let resp = router(svc, Some(dir.path().to_path_buf()))
        .oneshot(get("/"))
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    assert_eq!(&bytes[..], b"<html>ui</html>");
}
