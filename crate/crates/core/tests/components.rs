use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use pipeforge::components::{
    build_matrix, micro_f_score, AdapterBinding, HttpBinding, NoiseMode, Predicate, Registry, SimProfile, SimRule,
};
use pipeforge::model::{AnnotationSet, Component};
use pipeforge::{GoldAnnotation, PerformanceMatrix, QaTask, Question};
use proptest::prelude::*;

fn output(task: QaTask, items: &[&str]) -> AnnotationSet {
    let mut a = AnnotationSet::empty(task, "t");
    a.items = items.iter().map(|s| s.to_string()).collect();
    a
}

fn f(pred: &[&str], gold: &[&str]) -> f64 {
    micro_f_score(&output(QaTask::Ned, pred), &GoldAnnotation::new(QaTask::Ned, gold)).unwrap()
}

#[test]
fn micro_f_by_hand() {
    assert_eq!(f(&["a", "b"], &["a", "b"]), 1.0);
    // P = 1/2, R = 1/2
    assert!((f(&["a", "c"], &["a", "b"]) - 0.5).abs() < 1e-12);
    // P = 1/3, R = 1
    assert!((f(&["a", "x", "y"], &["a"]) - 0.5).abs() < 1e-12);
    // P = 1/2, R = 1
    assert!((f(&["a", "x"], &["a"]) - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(f(&["x"], &["a"]), 0.0);
    assert_eq!(f(&[], &["a"]), 0.0);
    assert_eq!(f(&["a"], &[]), 0.0);
    assert_eq!(f(&[], &[]), 1.0);
    assert_eq!(f(&[" a "], &["a"]), 1.0);
}

#[test]
fn micro_f_rejects_mismatched_tasks() {
    let gold = GoldAnnotation::new(QaTask::Rl, ["dbo:x"]);
    assert!(micro_f_score(&output(QaTask::Ned, &["dbo:x"]), &gold).is_err());
}

fn items() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set("[a-e]", 0..5)
}

fn to_refs(s: &BTreeSet<String>) -> Vec<&str> {
    s.iter().map(String::as_str).collect()
}

proptest! {
    #[test]
    fn micro_f_is_a_bounded_symmetric_similarity(p in items(), g in items()) {
        let a = f(&to_refs(&p), &to_refs(&g));
        let b = f(&to_refs(&g), &to_refs(&p));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert_eq!(a == 1.0, p == g);
    }
}

fn sim(id: &str, task: QaTask, profile: SimProfile) -> Component {
    Component::simulated(id, task, profile)
}

fn failing(noise: NoiseMode) -> SimProfile {
    let mut p = SimProfile::constant(0.0);
    p.noise = noise;
    p
}

#[test]
fn noise_modes_damage_the_gold_as_described() {
    let q = Question::new("q", "Which rivers cross Paris?").with_gold(QaTask::Ned, ["dbr:Paris", "dbr:Seine"]);
    let gold = q.gold_for(QaTask::Ned).unwrap();
    let score = |noise| {
        let out = sim("c", QaTask::Ned, failing(noise)).invoke(&q, 1).unwrap();
        micro_f_score(&out, gold).unwrap()
    };
    assert_eq!(score(NoiseMode::Empty), 0.0);
    // one of two kept: P = 1, R = 1/2
    assert!((score(NoiseMode::Partial) - 2.0 / 3.0).abs() < 1e-12);
    // gold plus one: P = 2/3, R = 1
    assert!((score(NoiseMode::Spurious) - 0.8).abs() < 1e-12);
    let perfect = sim("c", QaTask::Ned, SimProfile::constant(1.0)).invoke(&q, 1).unwrap();
    assert_eq!(micro_f_score(&perfect, gold).unwrap(), 1.0);
}

#[test]
fn first_matching_rule_wins() {
    let mut profile = SimProfile::constant(0.0);
    profile.rules = vec![
        SimRule {
            when: Predicate::HasToken { token: "paris".into() },
            probability: 1.0,
            noise: NoiseMode::Empty,
        },
        SimRule {
            when: Predicate::Always,
            probability: 0.0,
            noise: NoiseMode::Empty,
        },
    ];
    let c = sim("c", QaTask::Ned, profile);
    let hit = Question::new("a", "Where is Paris?").with_gold(QaTask::Ned, ["dbr:Paris"]);
    let miss = Question::new("b", "Where is Rome?").with_gold(QaTask::Ned, ["dbr:Rome"]);
    assert_eq!(c.invoke(&hit, 0).unwrap().items.len(), 1);
    assert!(c.invoke(&miss, 0).unwrap().items.is_empty());
}

#[test]
fn lexicon_answers_questions_without_gold() {
    let mut p = SimProfile::constant(1.0);
    p.lexicon.insert("new york".into(), "dbr:New_York".into());
    p.lexicon.insert("york".into(), "dbr:York".into());
    let out = sim("c", QaTask::Ned, p).invoke(&Question::new("q", "How big is New York?"), 0).unwrap();
    assert_eq!(to_refs(&out.items), ["dbr:New_York", "dbr:York"]);
}

#[test]
fn invocations_do_not_depend_on_order() {
    let questions: Vec<Question> = (0..30)
        .map(|i| Question::new(format!("q{i}"), "Who wrote Dune?").with_gold(QaTask::Ned, ["dbr:Dune"]))
        .collect();
    let c = sim("c", QaTask::Ned, SimProfile::constant(0.5));
    let forward: Vec<usize> = questions.iter().map(|q| c.invoke(q, 7).unwrap().items.len()).collect();
    let mut backward: Vec<usize> = questions.iter().rev().map(|q| c.invoke(q, 7).unwrap().items.len()).collect();
    backward.reverse();
    assert_eq!(forward, backward);
    assert!(forward.contains(&0) && forward.contains(&1));
}

fn two_task_registry() -> Registry {
    let mut r = Registry::new("test");
    for (id, task, rate) in [
        ("ned-a", QaTask::Ned, 0.9),
        ("ned-b", QaTask::Ned, 0.3),
        ("ned-c", QaTask::Ned, 0.6),
        ("rl-a", QaTask::Rl, 0.5),
    ] {
        r.register(sim(id, task, SimProfile::constant(rate))).unwrap();
    }
    r
}

fn questions(n: usize) -> Vec<Question> {
    (0..n)
        .map(|i| {
            let q = Question::new(format!("q{i:03}"), "Who founded Apple?").with_gold(QaTask::Ned, ["dbr:Apple"]);
            if i % 2 == 0 {
                q.with_gold(QaTask::Rl, ["dbo:founder"])
            } else {
                q
            }
        })
        .collect()
}

#[test]
fn matrix_covers_gold_pairs_and_ignores_thread_count() {
    let r = two_task_registry();
    let qs = questions(40);
    let one = build_matrix(&r, &qs, 3, 1).unwrap();
    let four = build_matrix(&r, &qs, 3, 4).unwrap();
    assert_eq!(one, four);
    assert_eq!(one.len(), 3 * 40 + 20);
    assert_eq!(one.get("q001", "rl-a"), None);
    assert_eq!(one.get_or_zero("q001", "rl-a"), 0.0);
    let other_seed = build_matrix(&r, &qs, 4, 1).unwrap();
    assert_ne!(one, other_seed);
}

#[test]
fn pruning_keeps_the_best_means() {
    let r = two_task_registry();
    let m = build_matrix(&r, &questions(200), 0, 2).unwrap();
    let pruned = r.prune_by_mean(&m, &[(QaTask::Ned, 2)], "pruned");
    let ids: Vec<&str> = pruned.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids, ["ned-a", "ned-c", "rl-a"]);
    assert_eq!(pruned.scenario, "pruned");
}

#[test]
fn registry_round_trips_and_rejects_duplicates() {
    let mut r = two_task_registry();
    r.register(Component {
        id: "remote".into(),
        name: "remote".into(),
        task: QaTask::Cl,
        adapter: AdapterBinding::Http(HttpBinding::new("http://localhost:1/x")),
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("test.json");
    r.save(&path).unwrap();
    assert_eq!(Registry::load(&path).unwrap(), r);
    assert!(r.register(sim("ned-a", QaTask::Ned, SimProfile::constant(0.1))).is_err());
    assert_eq!(r.counts()[&QaTask::Ned], 3);
}

#[test]
fn matrix_csv_round_trips() {
    let m = build_matrix(&two_task_registry(), &questions(10), 0, 1).unwrap();
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    assert_eq!(PerformanceMatrix::read_csv(buf.as_slice()).unwrap(), m);
}

/// Serves `replies` in order, one per connection, and returns the port.
fn serve(replies: Vec<(u16, String, Duration)>) -> u16 {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    thread::spawn(move || {
        for (status, body, delay) in replies {
            let Ok((mut stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap_or(0);
                }
            }
            let mut request = vec![0; length];
            let _ = reader.read_exact(&mut request);
            thread::sleep(delay);
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    port
}

fn remote(port: u16, task: QaTask, retries: u32, timeout_ms: u64) -> Component {
    Component {
        id: "remote".into(),
        name: "remote".into(),
        task,
        adapter: AdapterBinding::Http(HttpBinding {
            endpoint: format!("http://127.0.0.1:{port}/annotate"),
            timeout_ms,
            retries,
        }),
    }
}

fn ok_reply(body: &str) -> (u16, String, Duration) {
    (200, body.to_string(), Duration::ZERO)
}

#[test]
fn http_component_returns_service_items() {
    let port = serve(vec![ok_reply(r#"{"items": [" dbr:Paris ", "", "dbr:Seine"]}"#)]);
    let q = Question::new("q", "Which rivers cross Paris?").with_gold(QaTask::Ned, ["dbr:Paris", "dbr:Seine"]);
    let out = remote(port, QaTask::Ned, 0, 2000).invoke(&q, 0).unwrap();
    assert!(!out.failed);
    assert_eq!(to_refs(&out.items), ["dbr:Paris", "dbr:Seine"]);
    assert_eq!(micro_f_score(&out, q.gold_for(QaTask::Ned).unwrap()).unwrap(), 1.0);
}

#[test]
fn http_failures_yield_empty_failed_sets() {
    let q = Question::new("q", "x");
    for reply in [
        (500, r#"{"items": ["a"]}"#.to_string(), Duration::ZERO),
        ok_reply("not json"),
        ok_reply(r#"{"other": 1}"#),
        (200, r#"{"items": ["a"]}"#.to_string(), Duration::from_millis(800)),
    ] {
        let port = serve(vec![reply]);
        let out = remote(port, QaTask::Ned, 0, 300).invoke(&q, 0).unwrap();
        assert!(out.failed);
        assert!(out.items.is_empty());
    }
}

#[test]
fn http_retries_until_success() {
    let port = serve(vec![(503, "{}".into(), Duration::ZERO), ok_reply(r#"{"items": ["dbo:author"]}"#)]);
    let out = remote(port, QaTask::Rl, 1, 2000).invoke(&Question::new("q", "x"), 0).unwrap();
    assert!(!out.failed);
    assert_eq!(to_refs(&out.items), ["dbo:author"]);
}

#[test]
fn http_query_builders_are_canonicalised() {
    let port = serve(vec![ok_reply(r#"{"items": ["dbr:Dune  dbo:author ?who"]}"#)]);
    let q = Question::new("q", "Who wrote Dune?").with_gold(QaTask::Qb, ["dbr:Dune dbo:author ?x"]);
    let out = remote(port, QaTask::Qb, 0, 2000).invoke(&q, 0).unwrap();
    assert_eq!(micro_f_score(&out, q.gold_for(QaTask::Qb).unwrap()).unwrap(), 1.0);
}

#[test]
fn unreachable_services_score_zero_in_the_matrix() {
    let mut r = Registry::new("remote");
    r.register(remote(1, QaTask::Ned, 0, 200)).unwrap();
    let m = build_matrix(&r, &questions(3), 0, 1).unwrap();
    assert_eq!(m.len(), 3);
    assert!(m.iter().all(|(_, _, v)| v == 0.0));
}
