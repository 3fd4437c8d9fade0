use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use sdr_core::corpus_io::{fetch_annotations, AnnotatorClient};
use sdr_core::{Document, Error};

/// Serves `requests` HTTP requests; `respond` maps a request body to
/// `(status, body)`.
fn serve(requests: usize, respond: fn(&str) -> (u16, String)) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming().take(requests) {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let (status, reply) = respond(std::str::from_utf8(&body).unwrap());
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        }
    });
    format!("http://{addr}/annotate")
}

/// Marks every word ending in "itis" as clinical.
fn clinical(body: &str) -> (u16, String) {
    let req: serde_json::Value = serde_json::from_str(body).unwrap();
    let tokens: Vec<Vec<String>> = req["texts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            t.as_str()
                .unwrap()
                .split_whitespace()
                .filter(|w| w.ends_with("itis"))
                .map(str::to_string)
                .collect()
        })
        .collect();
    (200, serde_json::json!({ "tokens": tokens }).to_string())
}

#[test]
fn builds_lexicon_across_batches() {
    let docs: Vec<Document> = (0..40)
        .map(|i| {
            let term = if i % 2 == 0 { "Arthritis" } else { "gastritis" };
            Document::new(
                format!("d{i}"),
                format!("study {i}"),
                format!("{term} outcome"),
            )
        })
        .collect();
    let url = serve(2, clinical);
    let lexicon = fetch_annotations(&url, &docs).unwrap();
    assert_eq!(
        lexicon.iter().collect::<Vec<_>>(),
        vec!["arthritis", "gastritis"]
    );
}

#[test]
fn http_error_is_transport() {
    let url = serve(1, |_| (500, "{}".into()));
    let err = AnnotatorClient::new(url)
        .annotate(&["x".into()])
        .unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err:?}");
}

#[test]
fn wrong_list_count_is_protocol() {
    let url = serve(1, |_| (200, r#"{"tokens": []}"#.into()));
    let err = AnnotatorClient::new(url)
        .annotate(&["x".into()])
        .unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err:?}");
}

#[test]
fn malformed_body_is_protocol() {
    let url = serve(1, |_| (200, "not json".into()));
    let err = AnnotatorClient::new(url)
        .annotate(&["x".into()])
        .unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err:?}");
}

#[test]
fn empty_token_lists_give_empty_lexicon() {
    let url = serve(1, |_| (200, r#"{"tokens": [[]]}"#.into()));
    let lexicon = fetch_annotations(&url, &[Document::new("d", "plain", "text")]).unwrap();
    assert!(lexicon.is_empty());
}

#[test]
fn unreachable_endpoint_is_transport() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let err = AnnotatorClient::new(format!("http://127.0.0.1:{port}/"))
        .annotate(&["x".into()])
        .unwrap_err();
    assert!(matches!(err, Error::Transport(_)));
}
