//! Blob-model classifier server speaking the external protocol, with fault
//! modes for exercising the client.
//!
//! Usage: evolime-mock-classifier [MODE]
//!
//! Modes: normal (default), garbage-hello, five-classes, bad-id, nan, out-of-range, sleep,
//! error, wrong-count, exit-after-hello.

use std::io::{self, BufRead, Write};
use std::time::Duration;

use evolime_core::classifier::protocol::{Hello, HelloBody, Request, Response};
use evolime_core::classifier::BlobSettings;

fn send(out: &mut impl Write, line: &str) {
    writeln!(out, "{line}").expect("stdout");
    out.flush().expect("stdout");
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "normal".into());
    let stdout = io::stdout();
    let mut out = stdout.lock();

    let classes = if mode == "five-classes" { 5 } else { 2 };
    if mode == "garbage-hello" {
        send(&mut out, "hello there");
    } else {
        let hello = Hello {
            hello: HelloBody {
                name: "mock-blob".into(),
                classes,
            },
        };
        send(&mut out, &serde_json::to_string(&hello).unwrap());
    }
    if mode == "exit-after-hello" {
        return;
    }

    let model = BlobSettings::default();
    for line in io::stdin().lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let req: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                let resp = Response::Error {
                    id: None,
                    error: format!("malformed request: {e}"),
                };
                send(&mut out, &serde_json::to_string(&resp).unwrap());
                std::process::exit(1);
            }
        };
        let images = match req.decode_images() {
            Ok(i) => i,
            Err(e) => {
                let resp = Response::Error { id: Some(req.id), error: e };
                send(&mut out, &serde_json::to_string(&resp).unwrap());
                std::process::exit(1);
            }
        };
        let mut probs: Vec<Vec<f64>> = images
            .iter()
            .map(|im| {
                let p1 = model.class1_probability(im);
                let mut row = vec![1.0 - p1, p1];
                row.resize(classes, 0.0);
                row
            })
            .collect();
        let mut id = req.id;
        match mode.as_str() {
            "bad-id" => id += 1,
            "out-of-range" => probs[0] = vec![1.5, -0.5],
            "wrong-count" => {
                probs.pop();
            }
            "sleep" => std::thread::sleep(Duration::from_secs(30)),
            "error" => {
                let resp = Response::Error {
                    id: Some(req.id),
                    error: "model exploded".into(),
                };
                send(&mut out, &serde_json::to_string(&resp).unwrap());
                continue;
            }
            _ => {}
        }
        if mode == "nan" {
            send(&mut out, &format!(r#"{{"id":{id},"probs":[[NaN,0.5]]}}"#));
            continue;
        }
        let resp = Response::Probs { id, probs };
        send(&mut out, &serde_json::to_string(&resp).unwrap());
    }
}
