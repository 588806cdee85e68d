mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use common::*;
use freyr::ollama::{default_endpoint, ENDPOINT_ENV};
use freyr::{FreyrConfig, OllamaBackend};
use freyr_core::baseline::run_step_tools;
use freyr_core::pipeline::run_step;
use freyr_core::tools::render_json_schema;
use freyr_core::{
    count_prompt_tokens, count_tokens, BackendError, ChatBackend, Message, PipelineConfig, Role,
    ToolRegistry, ToolReply,
};
use serde_json::{json, Value};

/// Serves the canned `(status, body)` replies in order, one per connection,
/// and hands back each request body it received.
fn stub(replies: Vec<(u16, Value)>) -> (String, mpsc::Receiver<Value>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            assert!(
                request_line.starts_with("POST /api/chat "),
                "{request_line}"
            );
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            tx.send(serde_json::from_slice(&buf).unwrap()).unwrap();
            let text = body.to_string();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            )
            .unwrap();
        }
    });
    (addr, rx)
}

fn reply(content: &str) -> Value {
    json!({"message": {"role": "assistant", "content": content}, "done": true})
}

fn counted(content: &str, tokens_in: u64, tokens_out: u64) -> Value {
    let mut v = reply(content);
    v["prompt_eval_count"] = tokens_in.into();
    v["eval_count"] = tokens_out.into();
    v
}

fn config(endpoint: &str) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    for role in Role::ALL {
        cfg.role_mut(role).endpoint = endpoint.to_string();
    }
    cfg
}

fn backend() -> OllamaBackend {
    OllamaBackend::new(Duration::from_secs(5))
}

fn messages() -> Vec<Message> {
    vec![
        Message::system("You edit levels."),
        Message::user("Add a room"),
    ]
}

#[test]
fn plain_completion_reports_server_usage() {
    let (addr, rx) = stub(vec![(200, counted("add_room", 123, 4))]);
    let cfg = config(&addr);
    let c = backend()
        .complete(cfg.role(Role::Intent), &messages())
        .unwrap();
    assert_eq!(c.text, "add_room");
    assert_eq!((c.usage.tokens_in, c.usage.tokens_out), (123, 4));
    assert!(c.usage.wall_time > 0.0);

    let body = rx.recv().unwrap();
    assert_eq!(body["model"], "qwen2.5:7b");
    assert_eq!(body["stream"], false);
    assert_eq!(body["options"], json!({"temperature": 0.8, "top_p": 0.6}));
    assert_eq!(
        body["messages"][0],
        json!({"role": "system", "content": "You edit levels."})
    );
    assert_eq!(body["messages"][1]["role"], "user");
    assert!(body.get("tools").is_none());
}

#[test]
fn missing_counts_fall_back_to_the_approximation() {
    let (addr, _rx) = stub(vec![(200, reply("three short words"))]);
    let cfg = config(&addr);
    let c = backend()
        .complete(cfg.role(Role::Summary), &messages())
        .unwrap();
    assert_eq!(c.usage.tokens_in, count_prompt_tokens(&messages(), None));
    assert_eq!(c.usage.tokens_out, count_tokens("three short words"));
}

#[test]
fn tool_calls_are_parsed() {
    let schema = render_json_schema(&ToolRegistry::standard());
    let mut resp = reply("");
    resp["message"]["tool_calls"] =
        json!([{"function": {"name": "add_room", "arguments": {"name": "Hell"}}}]);
    let (addr, rx) = stub(vec![(200, resp), (200, reply("Nothing to do."))]);
    let cfg = config(&addr);
    let b = backend();

    let (r, usage) = b
        .complete_with_tools(cfg.role(Role::Parameters), &messages(), &schema)
        .unwrap();
    let ToolReply::Calls(calls) = r else {
        panic!("expected calls, got {r:?}")
    };
    assert_eq!(calls.len(), 1);
    assert_eq!(calls[0].name, "add_room");
    assert_eq!(calls[0].arguments["name"], "Hell");
    assert_eq!(
        usage.tokens_in,
        count_prompt_tokens(&messages(), Some(&schema))
    );
    let tools = rx.recv().unwrap()["tools"].clone();
    assert_eq!(tools.as_array().unwrap().len(), 16);
    assert!(tools
        .as_array()
        .unwrap()
        .iter()
        .all(|t| t["type"] == "function"));
    assert_eq!(tools[0]["function"]["name"], "add_room");

    let (r, _) = b
        .complete_with_tools(cfg.role(Role::Parameters), &messages(), &schema)
        .unwrap();
    assert_eq!(r, ToolReply::Text("Nothing to do.".into()));
}

#[test]
fn string_arguments_are_malformed() {
    let schema = render_json_schema(&ToolRegistry::standard());
    let mut resp = counted("", 50, 9);
    resp["message"]["tool_calls"] =
        json!([{"function": {"name": "add_room", "arguments": "{\"name\":\"Hell\"}"}}]);
    let (addr, _rx) = stub(vec![(200, resp)]);
    let cfg = config(&addr);
    let err = backend()
        .complete_with_tools(cfg.role(Role::Parameters), &messages(), &schema)
        .unwrap_err();
    let BackendError::MalformedToolCall { detail, usage } = &err else {
        panic!("{err}")
    };
    assert!(detail.contains("not a JSON object"), "{detail}");
    assert_eq!((usage.tokens_in, usage.tokens_out), (50, 9));
    assert!(!err.is_transport());
}

#[test]
fn server_errors_and_dead_endpoints() {
    let (addr, _rx) = stub(vec![(500, json!({"error": "model not found"}))]);
    let cfg = config(&addr);
    let err = backend()
        .complete(cfg.role(Role::Intent), &messages())
        .unwrap_err();
    assert!(
        matches!(&err, BackendError::Error { status: 500, body } if body.contains("model not found")),
        "{err}"
    );
    assert!(err.to_string().starts_with("BACKEND_ERROR(500)"));

    // Bind and drop to find a port nobody listens on.
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let cfg = config(&format!("http://127.0.0.1:{port}"));
    let err = backend()
        .complete(cfg.role(Role::Intent), &messages())
        .unwrap_err();
    assert!(matches!(err, BackendError::Unreachable(_)), "{err}");
    assert!(err.to_string().starts_with("BACKEND_UNREACHABLE"));
}

#[test]
fn endpoint_comes_from_the_environment() {
    std::env::set_var(ENDPOINT_ENV, "http://example.test:1234");
    assert_eq!(default_endpoint(), "http://example.test:1234");
    let cfg = FreyrConfig::default().pipeline().unwrap();
    assert_eq!(cfg.role(Role::Chat).endpoint, "http://example.test:1234");
    let explicit = FreyrConfig::from_toml("endpoint = \"http://gpu:11434\"")
        .unwrap()
        .pipeline()
        .unwrap();
    assert_eq!(explicit.role(Role::Intent).endpoint, "http://gpu:11434");
    std::env::remove_var(ENDPOINT_ENV);
    assert_eq!(default_endpoint(), freyr_core::pipeline::DEFAULT_ENDPOINT);
}

#[test]
fn a_whole_step_over_http() {
    let (addr, rx) = stub(vec![
        (200, counted("add_enemy", 300, 2)),
        (200, counted(GOBLIN, 400, 30)),
        (200, counted("Added a goblin archer.", 200, 5)),
    ]);
    let cfg = config(&addr);
    let level = three_cities();
    let out = run_step(
        &cfg,
        &ToolRegistry::standard(),
        &backend(),
        &[],
        GOBLIN_REQUEST,
        &level,
        &mut |_| {},
    )
    .unwrap();
    assert_eq!(
        out.level.room("Rome").unwrap().enemies[0].name,
        "Goblin Archer"
    );
    assert_eq!(out.response, "Added a goblin archer.");
    assert_eq!(
        (out.trace.total.tokens_in, out.trace.total.tokens_out),
        (900, 37)
    );
    assert_eq!(out.trace.total, out.trace.summed_usage());
    let bodies: Vec<Value> = rx.iter().take(3).collect();
    assert!(bodies.iter().all(|b| b.get("tools").is_none()));
}

#[test]
fn a_whole_tools_step_over_http() {
    let mut calls = reply("");
    calls["message"]["tool_calls"] = json!([{"function": {"name": "add_enemy", "arguments": {
        "room": "Rome", "name": "Goblin Archer", "description": "Small.", "species": "goblin", "health": 10
    }}}]);
    let (addr, rx) = stub(vec![(200, calls), (200, reply("Done."))]);
    let cfg = config(&addr);
    let out = run_step_tools(
        &cfg,
        &ToolRegistry::standard(),
        &backend(),
        &[],
        GOBLIN_REQUEST,
        &three_cities(),
        &mut |_| {},
    )
    .unwrap();
    assert_eq!(out.level.room("Rome").unwrap().enemies.len(), 1);
    let bodies: Vec<Value> = rx.iter().take(2).collect();
    assert!(bodies
        .iter()
        .all(|b| b["tools"].as_array().is_some_and(|t| t.len() == 16)));
}
