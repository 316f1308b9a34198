//! HTTP backend against a local fake chat-completions server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::AtomicBool;
use std::thread;
use std::time::Duration;

use lantern::annotate::parse::binary_completion;
use lantern::annotate::{build_binary_prompt, parse_binary_response, Annotator, GoalVariant, HttpAnnotator, HttpConfig, TransportError};

/// Serves `responses` in order, one per connection, and returns the request bodies.
fn serve(responses: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<serde_json::Value>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(serde_json::from_slice(&buf).unwrap());
            let mut out = stream;
            write!(
                out,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        bodies
    });
    (url, handle)
}

fn client(url: String) -> HttpAnnotator {
    HttpAnnotator::new(HttpConfig { url, timeout: Duration::from_secs(10), ..HttpConfig::default() }).unwrap()
}

#[test]
fn posts_chat_request_and_reads_content() {
    let reply = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": binary_completion(1)}}]}).to_string();
    let (url, server) = serve(vec![(200, reply)]);
    let prompt = build_binary_prompt("You kill the newt!", GoalVariant::Combat);
    let out = client(url).complete_batch(std::slice::from_ref(&prompt), &AtomicBool::new(false));
    assert_eq!(parse_binary_response(out[0].as_ref().unwrap()).unwrap(), 1);

    let body = &server.join().unwrap()[0];
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], prompt.user.as_str());
    assert_eq!(body["temperature"], 0.1);
    assert_eq!(body["max_tokens"], 4096);
}

#[test]
fn error_status_and_missing_content_are_transport_errors() {
    let (url, server) = serve(vec![(503, "{}".into()), (200, r#"{"choices": []}"#.into())]);
    let prompt = build_binary_prompt("x", GoalVariant::Default);
    let out = client(url).complete_batch(&[prompt.clone(), prompt], &AtomicBool::new(false));
    assert_eq!(out[0], Err(TransportError::Status(503)));
    assert_eq!(out[1], Err(TransportError::MissingContent));
    server.join().unwrap();
}

#[test]
fn cancelled_batch_sends_nothing() {
    let out = client("http://127.0.0.1:9/unused".into()).complete_batch(&[build_binary_prompt("x", GoalVariant::Default)], &AtomicBool::new(true));
    assert_eq!(out, vec![Err(TransportError::Cancelled)]);
}
