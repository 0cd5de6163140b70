mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::time::{Duration, Instant};

use common::{band_dataset, fixture, rule_model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use surrogate_core::blackbox::{ModelHandle, ModelSpec};
use surrogate_core::data::{Row, Schema};
use surrogate_core::Error;

const HOST: &str = env!("CARGO_BIN_EXE_model-host");

fn random_rows(schema: &Schema, n: usize, seed: u64) -> Vec<Row> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            schema
                .features()
                .iter()
                .map(|f| match f.categories() {
                    Some(c) => rng.random_range(0..c.len()) as f64,
                    None => rng.random_range(-1.0..4.0),
                })
                .collect()
        })
        .collect()
}

fn classes(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn write_spec(name: &str, spec: &serde_json::Value) -> std::path::PathBuf {
    let path =
        std::env::temp_dir().join(format!("surrogate-core-{}-{name}.json", std::process::id()));
    std::fs::write(&path, spec.to_string()).unwrap();
    path
}

#[test]
fn hosted_rule_model_matches_in_process() {
    let ds = band_dataset();
    let builtin = rule_model(&ds);
    let command = format!("{HOST} {}", fixture("rule_model.json").display());
    let external = ModelHandle::open_external(
        &format!("cmd:{command}"),
        classes(&["low", "high"]),
        ds.schema(),
    )
    .unwrap();
    let rows = random_rows(ds.schema(), 100, 1);
    let a = builtin.predict_proba(&rows).unwrap();
    let b = external.predict_proba(&rows).unwrap();
    assert_eq!(a, b);
    assert_eq!(external.kind(), "external_process");
}

#[test]
fn hosted_softmax_round_trips_bitwise() {
    let ds = band_dataset();
    let spec = json!({
        "kind": "linear_softmax",
        "classes": ["a", "b", "c"],
        "weights": [[0.3, -1.7, 0.01, 0.5, 0.0, -0.2], [1.1, 0.2, -0.4, 0.0, 0.9, 0.1], [-0.6, 0.7, 0.33, -0.1, 0.2, 0.0]],
        "bias": [0.1, -0.05, 0.0]
    });
    let path = write_spec("softmax", &spec);
    let model: ModelSpec = serde_json::from_value(spec).unwrap();
    let builtin = ModelHandle::from_spec(&model, ds.schema()).unwrap();
    let external = ModelHandle::open_process(
        &format!("{HOST} {}", path.display()),
        classes(&["a", "b", "c"]),
        ds.schema(),
    )
    .unwrap();
    let rows = random_rows(ds.schema(), 100, 2);
    let a = builtin.predict_proba(&rows).unwrap();
    let b = external.predict_proba(&rows).unwrap();
    for (x, y) in a.rows().iter().zip(b.rows()) {
        for (p, q) in x.iter().zip(y) {
            assert_eq!(p.to_bits(), q.to_bits());
        }
    }
    // The handle is reusable.
    assert_eq!(
        external.predict_proba(&rows[..3]).unwrap().rows(),
        &a.rows()[..3]
    );
}

#[test]
fn uniform_helper_answers_uniform_rows() {
    let ds = band_dataset();
    let m = ModelHandle::open_process(
        &format!("{HOST} --uniform"),
        classes(&["x", "y", "z", "w"]),
        ds.schema(),
    )
    .unwrap();
    let p = m.predict_proba(&random_rows(ds.schema(), 5, 3)).unwrap();
    assert_eq!(p.n_rows(), 5);
    assert!(p.rows().iter().all(|r| r == &vec![0.25; 4]));
}

#[test]
fn command_that_exits_is_a_transport_error() {
    let ds = band_dataset();
    let err = ModelHandle::open_process("true", classes(&["a", "b"]), ds.schema()).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
    let err = ModelHandle::open_process("echo oops >&2; exit 3", classes(&["a", "b"]), ds.schema())
        .unwrap_err();
    assert!(
        matches!(&err, Error::Transport(m) if m.contains("oops")),
        "{err}"
    );
    let err = ModelHandle::open_process(
        "/nonexistent/model-binary",
        classes(&["a", "b"]),
        ds.schema(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
}

#[test]
fn class_count_disagreement_is_a_protocol_error() {
    let ds = band_dataset();
    let command = format!("{HOST} {}", fixture("rule_model.json").display());
    let err = ModelHandle::open_process(&command, classes(&["low", "high", "extra"]), ds.schema())
        .unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
}

#[test]
fn malformed_rows_are_protocol_errors() {
    let ds = band_dataset();
    // Handshakes fine, then answers a row summing to 0.9.
    let script =
        r#"read h; echo '{"ok":true}'; read p; echo '{"probabilities":[[0.4,0.5]]}'; read s"#;
    let m = ModelHandle::open_process(script, classes(&["a", "b"]), ds.schema()).unwrap();
    let err = m
        .predict_proba(&random_rows(ds.schema(), 1, 4))
        .unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");

    let script =
        r#"read h; echo '{"ok":true}'; read p; echo '{"probabilities":[[0.5,0.5]]}'; read s"#;
    let m = ModelHandle::open_process(script, classes(&["a", "b"]), ds.schema()).unwrap();
    let err = m
        .predict_proba(&random_rows(ds.schema(), 2, 4))
        .unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
}

#[test]
fn slightly_off_rows_are_renormalised() {
    let ds = band_dataset();
    let script =
        r#"read h; echo '{"ok":true}'; read p; echo '{"probabilities":[[0.3000004,0.7]]}'; read s"#;
    let m = ModelHandle::open_process(script, classes(&["a", "b"]), ds.schema()).unwrap();
    let p = m.predict_proba(&random_rows(ds.schema(), 1, 5)).unwrap();
    assert!((p.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn schema_mismatch_is_an_input_error() {
    let ds = band_dataset();
    let m = rule_model(&ds);
    let err = m.predict_proba(&[vec![1.0, 2.0]]).unwrap_err();
    assert!(matches!(err, Error::Input(_)), "{err}");
    let err = m.predict_proba(&[vec![1.0, 2.0, 3.0, 7.0]]).unwrap_err();
    assert!(matches!(err, Error::Input(_)), "{err}");
}

#[test]
fn http_variant_posts_rows() {
    let ds = band_dataset();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let server = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut request_line = String::new();
        reader.read_line(&mut request_line).unwrap();
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        let doc: serde_json::Value = serde_json::from_slice(&body).unwrap();
        let n = doc["rows"].as_array().unwrap().len();
        let reply = json!({ "probabilities": vec![vec![0.25, 0.75]; n] }).to_string();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
            reply.len()
        )
        .unwrap();
        request_line
    });
    let m = ModelHandle::open_external(
        &format!("http://127.0.0.1:{port}"),
        classes(&["a", "b"]),
        ds.schema(),
    )
    .unwrap();
    let p = m.predict_proba(&random_rows(ds.schema(), 3, 6)).unwrap();
    assert_eq!(p.rows(), &vec![vec![0.25, 0.75]; 3][..]);
    assert!(server.join().unwrap().starts_with("POST /predict "));
}

#[test]
fn unreachable_http_model_is_a_transport_error() {
    let ds = band_dataset();
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let m = ModelHandle::open_http(
        &format!("http://127.0.0.1:{port}/"),
        classes(&["a", "b"]),
        ds.schema(),
    )
    .unwrap();
    let err = m
        .predict_proba(&random_rows(ds.schema(), 1, 7))
        .unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
}

#[test]
fn dropping_the_handle_shuts_the_host_down() {
    let ds = band_dataset();
    let start = Instant::now();
    let m = ModelHandle::open_process(
        &format!("{HOST} --uniform"),
        classes(&["a", "b"]),
        ds.schema(),
    )
    .unwrap();
    drop(m);
    assert!(start.elapsed() < Duration::from_secs(5));
}
