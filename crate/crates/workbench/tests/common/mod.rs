#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::Duration;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_workbench")
}

pub fn workbench(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("run workbench")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A scratch directory removed on drop.
pub struct Scratch(pub PathBuf);

impl Scratch {
    pub fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("workbench-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        p
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A `workbench serve` child process, killed on drop.
pub struct Served {
    child: Child,
    pub base: String,
}

impl Served {
    pub fn start(data: &Path, model: &str, extra: &[&str]) -> Self {
        let mut child = Command::new(bin())
            .args(["serve", "--data", s(data), "--model", model, "--port", "0"])
            .args(extra)
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("spawn service");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .expect("listening line")
            .to_owned();
        let addr = base.trim_start_matches("http://").to_owned();
        for _ in 0..100 {
            if TcpStream::connect(&addr).is_ok() {
                break;
            }
            std::thread::sleep(Duration::from_millis(20));
        }
        Served { child, base }
    }

    pub fn port(&self) -> u16 {
        self.base.rsplit(':').next().unwrap().parse().unwrap()
    }

    /// Status and body text; error statuses are returned, not raised.
    pub fn post(&self, path: &str, body: &str) -> (u16, String) {
        let result = ureq::post(&format!("{}{path}", self.base))
            .set("Content-Type", "application/json")
            .send_string(body);
        Self::unpack(result)
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        Self::unpack(ureq::get(&format!("{}{path}", self.base)).call())
    }

    fn unpack(result: Result<ureq::Response, ureq::Error>) -> (u16, String) {
        match result {
            Ok(r) => (r.status(), r.into_string().unwrap()),
            Err(ureq::Error::Status(code, r)) => (code, r.into_string().unwrap()),
            Err(e) => panic!("request failed: {e}"),
        }
    }
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Report text inside a service envelope.
pub fn envelope_report(body: &str) -> String {
    workbench::ops::envelope_body(body)
        .expect("envelope")
        .to_owned()
}
