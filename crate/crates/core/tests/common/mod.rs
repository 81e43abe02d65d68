#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::os::fd::AsFd;
use std::path::PathBuf;

use crowdlens::hogdetect::{svm_train, training_descriptors, LinearSvm, SvmParams};
use crowdlens::synth::{fixture, person_training_set};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Prints one verdict line, then fails the test if `ok` is false.
pub fn verdict(id: u32, name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let line = format!("[{tag}] criterion {id}: {name} ({detail})");
    println!("{line}");
    // Also straight to fd 2, which libtest's output capture does not intercept.
    if let Ok(fd) = std::io::stderr().as_fd().try_clone_to_owned() {
        let _ = writeln!(std::fs::File::from(fd), "{line}");
    }
    assert!(ok, "criterion {id} failed: {name}: {detail}");
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/walkers")
}

/// The SVM recipe the fixture model was trained with.
pub fn person_svm() -> LinearSvm {
    let mut rng = ChaCha8Rng::seed_from_u64(fixture::TRAIN_SEED);
    let (pos, neg) = person_training_set(&mut rng, 300, 900);
    let (xs, ys) = training_descriptors(&pos, &neg).unwrap();
    svm_train(&xs, &ys, SvmParams { seed: 1, epochs: 50, ..SvmParams::default() }).unwrap()
}

/// Minimal HTTP/1.1 GET; returns status and body.
pub fn http_get(addr: SocketAddr, path: &str) -> (u16, Vec<u8>) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header end");
    let head = String::from_utf8_lossy(&raw[..split]).to_string();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let mut body = raw[split + 4..].to_vec();
    if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        body = dechunk(&body);
    }
    (status, body)
}

fn dechunk(mut b: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    loop {
        let eol = b.windows(2).position(|w| w == b"\r\n").unwrap();
        let size = usize::from_str_radix(std::str::from_utf8(&b[..eol]).unwrap().trim(), 16).unwrap();
        b = &b[eol + 2..];
        if size == 0 {
            return out;
        }
        out.extend_from_slice(&b[..size]);
        b = &b[size + 2..];
    }
}
