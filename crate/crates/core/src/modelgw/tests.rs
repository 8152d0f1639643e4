use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::Mutex;

use super::*;
use crate::plotrender::PlotSpec;
use crate::promptkit::{build_prompt, parse_response, Modality, ParseStatus, Rendering, Template};
use crate::synthgen::{build_task_matrix, MatrixSpec, TaskInstance, TaskKind};
use crate::tscodec::CodecSpec;

fn instances(kind: TaskKind) -> Vec<TaskInstance> {
    let mut spec = MatrixSpec::standard(kind);
    spec.repeats = 1;
    build_task_matrix(kind, &spec, 2).unwrap()
}

fn prompt_for(inst: &TaskInstance, m: Modality) -> Prompt {
    let r = Rendering::build(inst, m, &CodecSpec::default(), &PlotSpec::for_task(inst.task_kind)).unwrap();
    build_prompt(inst, m, &r, &[], &Template::builtin(inst.task_kind)).unwrap()
}

fn answers(v: &[TaskInstance]) -> Arc<HashMap<String, Label>> {
    Arc::new(v.iter().map(|i| (i.instance_id.clone(), i.ground_truth.clone())).collect())
}

#[test]
fn oracle_answers_parse_to_truth() {
    for kind in TaskKind::SYNTHETIC {
        let insts = instances(kind);
        let cfg = ModelConfig::default();
        let gw = Gateway::new(cfg.clone(), build_backend(&cfg, Some(answers(&insts))).unwrap(), ResponseCache::disabled())
            .unwrap();
        for inst in insts.iter().take(10) {
            let p = prompt_for(inst, Modality::Text);
            let r = gw.invoke(&p).unwrap();
            let parsed = parse_response(r.text.as_deref().unwrap(), &p.schema);
            assert_eq!(parsed.status, ParseStatus::Ok);
            assert_eq!(parsed.value.as_ref(), Some(&inst.ground_truth));
        }
    }
}

#[test]
fn warm_cache_makes_no_calls() {
    let dir = tempfile::tempdir().unwrap();
    let insts = instances(TaskKind::Correlation);
    let cfg = ModelConfig {
        backend: BackendKind::Random,
        ..ModelConfig::default()
    };
    let prompts: Vec<Prompt> = insts.iter().take(20).map(|i| prompt_for(i, Modality::Plot)).collect();
    let cold = Gateway::new(cfg.clone(), build_backend(&cfg, None).unwrap(), ResponseCache::on_disk(dir.path())).unwrap();
    let a: Vec<_> = prompts.iter().map(|p| cold.invoke(p).unwrap()).collect();
    assert_eq!(cold.backend_calls(), 20);
    let replay_cfg = ModelConfig {
        backend: BackendKind::Replay,
        ..cfg
    };
    let warm = Gateway::new(replay_cfg.clone(), build_backend(&replay_cfg, None).unwrap(), ResponseCache::on_disk(dir.path()))
        .unwrap();
    let b: Vec<_> = prompts.iter().map(|p| warm.invoke(p).unwrap()).collect();
    assert_eq!(warm.backend_calls(), 0);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.text, y.text);
        assert!(y.cache_hit);
    }
}

#[test]
fn replay_miss_is_reported() {
    let insts = instances(TaskKind::FunctionId);
    let cfg = ModelConfig {
        backend: BackendKind::Replay,
        ..ModelConfig::default()
    };
    let gw = Gateway::new(cfg.clone(), build_backend(&cfg, None).unwrap(), ResponseCache::disabled()).unwrap();
    let r = gw.invoke(&prompt_for(&insts[0], Modality::Text)).unwrap();
    assert!(r.text.is_none());
    assert_eq!(r.error.unwrap().kind, FailureKind::Backend);
}

#[test]
fn live_stub_completes() {
    let insts = instances(TaskKind::DerivativeId);
    let cfg = ModelConfig {
        backend: BackendKind::LiveStub,
        ..ModelConfig::default()
    };
    let gw = Gateway::new(cfg.clone(), build_backend(&cfg, None).unwrap(), ResponseCache::disabled()).unwrap();
    let p = prompt_for(&insts[0], Modality::CombinedPlotFirst);
    let body = request_body(&p, &cfg);
    let content = body["messages"][0]["content"].as_array().unwrap();
    assert_eq!(content.iter().filter(|c| c["type"] == "image_url").count(), 5);
    assert!(gw.invoke(&p).unwrap().text.is_some());
}

#[test]
fn temperature_is_validated() {
    let cfg = ModelConfig {
        temperature: 1.5,
        ..ModelConfig::default()
    };
    assert!(matches!(
        Gateway::new(cfg, Box::new(ReplayBackend), ResponseCache::disabled()),
        Err(Error::ConfigList(_))
    ));
}

/// Serves one canned `(status, body)` per connection, recording request
/// bodies.
fn mock_server(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let seen2 = seen.clone();
    std::thread::spawn(move || {
        for (status, body) in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut buf = vec![0; len];
            let _ = reader.read_exact(&mut buf);
            seen2.lock().unwrap().push(String::from_utf8_lossy(&buf).into_owned());
            let mut s = stream;
            let _ = write!(
                s,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (format!("http://{addr}"), seen)
}

fn http_gateway(url: &str, retries: u32) -> Gateway {
    let cfg = ModelConfig {
        backend: BackendKind::Http,
        endpoint: Some(url.into()),
        max_retries: retries,
        backoff_ms: 1,
        timeout_s: 10.0,
        ..ModelConfig::default()
    };
    let backend = HttpBackend::new(url, "test-key".into(), Duration::from_secs(10));
    Gateway::new(cfg, Box::new(backend), ResponseCache::disabled()).unwrap()
}

#[test]
fn http_retries_then_succeeds() {
    let ok = r#"{"choices":[{"message":{"content":"Answer: positive"}}],"usage":{"prompt_tokens":321}}"#;
    let (url, seen) = mock_server(vec![(503, "{}".into()), (429, "{}".into()), (200, ok.into())]);
    let gw = http_gateway(&url, 3);
    let insts = instances(TaskKind::Correlation);
    let r = gw.invoke(&prompt_for(&insts[0], Modality::Plot)).unwrap();
    assert_eq!(r.text.as_deref(), Some("Answer: positive"));
    assert_eq!(r.prompt_tokens, 321);
    assert_eq!(gw.backend_calls(), 3);
    let bodies = seen.lock().unwrap();
    assert!(bodies[2].contains("data:image/png;base64,"));
    let last: serde_json::Value = serde_json::from_str(&bodies[2]).unwrap();
    assert_eq!(last["temperature"], 0.1);
}

#[test]
fn http_gives_up_after_retries() {
    let (url, _) = mock_server(vec![(500, "{}".into()), (500, "{}".into())]);
    let gw = http_gateway(&url, 1);
    let insts = instances(TaskKind::Correlation);
    let r = gw.invoke(&prompt_for(&insts[0], Modality::Text)).unwrap();
    assert_eq!(r.error.unwrap().kind, FailureKind::Transport);
}

#[test]
fn http_context_length_and_auth() {
    let (url, _) = mock_server(vec![
        (400, r#"{"error":{"code":"context_length_exceeded"}}"#.into()),
        (401, "{}".into()),
    ]);
    let gw = http_gateway(&url, 3);
    let insts = instances(TaskKind::Correlation);
    let r = gw.invoke(&prompt_for(&insts[0], Modality::Text)).unwrap();
    let e = r.error.unwrap();
    assert_eq!(e.kind, FailureKind::ContextLength);
    assert!(e.message.starts_with("text prompt"));
    assert!(matches!(gw.invoke(&prompt_for(&insts[1], Modality::Text)), Err(Error::Config(_))));
}
