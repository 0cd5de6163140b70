//! The HTTP service.
//!
//! Routing lives in [`Service::handle`], which maps a method, URL and body
//! to a [`Reply`] without touching sockets; [`serve`] feeds it from a
//! `tiny_http` server on a few worker threads.

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{json, Value};
use surrogate_core::config::defaults_document;
use surrogate_core::data::summarize;
use surrogate_core::global::{GridSpec, DEFAULT_GRID_POINTS};
use surrogate_core::report::ReportOptions;
use tiny_http::{Header, Method, Response, Server};

use crate::inputs::{
    class_ref_from_json, config_from_value, feature_from_json, instance_from_json,
    labels_from_json, seeds_from_json,
};
use crate::ops::{self, canonical, envelope, Workspace};
use crate::Failure;

pub const DEFAULT_PAGE: usize = 50;
pub const MAX_PAGE: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct Reply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Reply {
    fn json(status: u16, body: String) -> Self {
        Reply {
            status,
            content_type: "application/json",
            body: body.into_bytes(),
        }
    }

    fn failure(f: &Failure) -> Self {
        Reply::json(
            f.http_status(),
            surrogate_core::canonical::canonical_value_string(&f.to_json()),
        )
    }

    fn not_found(what: &str) -> Self {
        Reply::failure(&Failure::Usage(format!("no such resource: {what}"))).with_status(404)
    }

    fn with_status(mut self, status: u16) -> Self {
        self.status = status;
        self
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.body).unwrap_or_default()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplainBody {
    #[serde(default)]
    config: Value,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    instance: Value,
    #[serde(default)]
    full_report: bool,
    #[serde(default)]
    timings: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StabilityBody {
    #[serde(default)]
    config: Value,
    #[serde(default)]
    instance: Value,
    seeds: Option<Value>,
    #[serde(default)]
    seed: u64,
    top_k: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PermBody {
    repeats: Option<usize>,
    #[serde(default)]
    seed: u64,
    labels: Option<Vec<Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveBody {
    feature: Value,
    grid_points: Option<usize>,
    grid: Option<Vec<f64>>,
    target: Option<Value>,
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &str) -> Result<T, Failure> {
    let text = if body.trim().is_empty() { "{}" } else { body };
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("bad request body: {e}")))
}

pub struct Service {
    pub workspace: Workspace,
    pub ui_dir: Option<PathBuf>,
}

impl Service {
    pub fn new(workspace: Workspace, ui_dir: Option<PathBuf>) -> Self {
        Service { workspace, ui_dir }
    }

    pub fn handle(&self, method: &str, url: &str, body: &str) -> Reply {
        let (path, query) = url.split_once('?').unwrap_or((url, ""));
        let result = match (method, path) {
            ("GET", "/api/summary") => self.summary(),
            ("GET", "/api/instances") => self.instances(query),
            ("GET", "/api/defaults") => self.defaults(),
            ("POST", "/api/explain") => self.explain(body),
            ("POST", "/api/stability") => self.stability(body),
            ("POST", "/api/global/perm") => self.perm(body),
            ("POST", "/api/global/ice") => self.curves(body, false),
            ("POST", "/api/global/pd") => self.curves(body, true),
            (_, p) if p.starts_with("/api/") || p == "/api" => {
                let known = [
                    "/api/summary",
                    "/api/instances",
                    "/api/defaults",
                    "/api/explain",
                    "/api/stability",
                    "/api/global/perm",
                    "/api/global/ice",
                    "/api/global/pd",
                ];
                return if known.contains(&p) {
                    Reply::failure(&Failure::Usage(format!("{method} is not allowed on {p}")))
                        .with_status(405)
                } else {
                    Reply::not_found(p)
                };
            }
            ("GET", p) => return self.static_file(p),
            (_, p) => return Reply::not_found(p),
        };
        match result {
            Ok(body) => Reply::json(200, body),
            Err(f) => Reply::failure(&f),
        }
    }

    fn summary(&self) -> Result<String, Failure> {
        Ok(envelope(
            None,
            &canonical(&summarize(&self.workspace.dataset))?,
        ))
    }

    fn instances(&self, query: &str) -> Result<String, Failure> {
        let mut offset = 0usize;
        let mut limit = DEFAULT_PAGE;
        for pair in query.split('&').filter(|p| !p.is_empty()) {
            let (key, value) = pair.split_once('=').unwrap_or((pair, ""));
            let parsed = value.parse::<usize>().map_err(|_| {
                Failure::Usage(format!(
                    "{key} must be a non-negative integer (got {value:?})"
                ))
            });
            match key {
                "offset" => offset = parsed?,
                "limit" => limit = parsed?.min(MAX_PAGE),
                other => return Err(Failure::Usage(format!("unknown query parameter {other:?}"))),
            }
        }
        let ds = &self.workspace.dataset;
        let end = offset.saturating_add(limit).min(ds.n_rows());
        let rows: Vec<Value> = (offset.min(end)..end)
            .map(|i| json!({"index": i, "values": ds.schema().row_to_json(ds.row(i))}))
            .collect();
        let page = json!({"offset": offset, "limit": limit, "total": ds.n_rows(), "rows": rows});
        Ok(envelope(None, &canonical(&page)?))
    }

    fn defaults(&self) -> Result<String, Failure> {
        let defaults = config_from_value(&Value::Null)?;
        Ok(envelope(
            Some(&defaults.fingerprint()),
            &canonical(&defaults_document())?,
        ))
    }

    fn explain(&self, body: &str) -> Result<String, Failure> {
        let req: ExplainBody = parse_body(body)?;
        let config = config_from_value(&req.config)?;
        let anchor = instance_from_json(&req.instance, &self.workspace.dataset)?;
        let options = ReportOptions {
            full: req.full_report,
            timings: req.timings,
        };
        let (report, text) =
            ops::explain_report(&self.workspace, &config, &anchor, req.seed, options)?;
        Ok(envelope(Some(&report.fingerprint), &text))
    }

    fn stability(&self, body: &str) -> Result<String, Failure> {
        let req: StabilityBody = parse_body(body)?;
        let config = config_from_value(&req.config)?;
        let anchor = instance_from_json(&req.instance, &self.workspace.dataset)?;
        let seeds = seeds_from_json(
            req.seeds.as_ref(),
            req.seed,
            config.evaluation.stability_seeds,
        )?;
        let report = ops::stability_report(&self.workspace, &config, &anchor, &seeds, req.top_k)?;
        Ok(envelope(Some(&report.fingerprint), &canonical(&report)?))
    }

    fn perm(&self, body: &str) -> Result<String, Failure> {
        let req: PermBody = parse_body(body)?;
        let repeats = req.repeats.unwrap_or(ops::DEFAULT_REPEATS);
        let labels = match &req.labels {
            Some(items) => Some(labels_from_json(items, self.workspace.model.class_names())?),
            None => None,
        };
        let fingerprint = ops::parameters_fingerprint(&json!({
            "kind": "perm",
            "repeats": repeats,
            "seed": req.seed,
            "labels": labels,
        }))?;
        let result = ops::perm_importance(&self.workspace, labels, repeats, req.seed)?;
        Ok(envelope(Some(&fingerprint), &canonical(&result)?))
    }

    fn curves(&self, body: &str, pd: bool) -> Result<String, Failure> {
        let req: CurveBody = parse_body(body)?;
        let feature = feature_from_json(&req.feature, self.workspace.dataset.schema())?;
        let grid = match (req.grid, req.grid_points) {
            (Some(_), Some(_)) => {
                return Err(Failure::Usage(
                    "give either grid or grid_points, not both".into(),
                ))
            }
            (Some(values), None) => GridSpec::Explicit(values),
            (None, points) => GridSpec::Points(points.unwrap_or(DEFAULT_GRID_POINTS)),
        };
        let target = req.target.as_ref().map(class_ref_from_json).transpose()?;
        let target_index = ops::target_index(&self.workspace, target.as_ref())?;
        let fingerprint = ops::parameters_fingerprint(&json!({
            "kind": if pd { "pd" } else { "ice" },
            "feature": feature,
            "grid": ops::grid_parameters(&grid),
            "target": target_index,
        }))?;
        let text = if pd {
            canonical(&ops::pd(&self.workspace, feature, &grid, target.as_ref())?)?
        } else {
            canonical(&ops::ice(&self.workspace, feature, &grid, target.as_ref())?)?
        };
        Ok(envelope(Some(&fingerprint), &text))
    }

    fn static_file(&self, path: &str) -> Reply {
        let Some(root) = &self.ui_dir else {
            return Reply::not_found(path);
        };
        let relative = path.trim_start_matches('/');
        let relative = if relative.is_empty() {
            "index.html"
        } else {
            relative
        };
        let rel = Path::new(relative);
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return Reply::not_found(path);
        }
        let mut full = root.join(rel);
        if full.is_dir() {
            full = full.join("index.html");
        }
        match std::fs::read(&full) {
            Ok(bytes) => Reply {
                status: 200,
                content_type: content_type(&full),
                body: bytes,
            },
            Err(_) => Reply::not_found(path),
        }
    }
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
    {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "map" | "txt" => "text/plain; charset=utf-8",
        "woff2" => "font/woff2",
        _ => "application/octet-stream",
    }
}

pub fn bind(address: &str) -> Result<Server, Failure> {
    Server::http(address).map_err(|e| Failure::Bind(format!("cannot listen on {address}: {e}")))
}

/// Answers requests on `threads` workers until the server is dropped.
pub fn serve(server: Arc<Server>, service: Arc<Service>, threads: usize) {
    let workers: Vec<_> = (0..threads.max(1))
        .map(|_| {
            let server = Arc::clone(&server);
            let service = Arc::clone(&service);
            std::thread::spawn(move || {
                while let Ok(mut request) = server.recv() {
                    let mut body = String::new();
                    let reply = match request.as_reader().read_to_string(&mut body) {
                        Ok(_) => {
                            let method = match request.method() {
                                Method::Get | Method::Head => "GET",
                                Method::Post => "POST",
                                _ => "OTHER",
                            };
                            service.handle(method, request.url(), &body)
                        }
                        Err(e) => Reply::failure(&Failure::Usage(format!(
                            "cannot read request body: {e}"
                        ))),
                    };
                    let header = Header::from_bytes("Content-Type", reply.content_type)
                        .expect("static header");
                    let response = Response::from_data(reply.body)
                        .with_status_code(reply.status)
                        .with_header(header);
                    let _ = request.respond(response);
                }
            })
        })
        .collect();
    for w in workers {
        let _ = w.join();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use surrogate_core::blackbox::ModelHandle;
    use surrogate_core::data::load_dataset;

    fn service(ui_dir: Option<PathBuf>) -> Service {
        let dataset = load_dataset(
            "a,b,c\n0,x,1\n1,y,2\n2,x,3\n3,y,5\n4,x,8\n5,y,13\n".as_bytes(),
            None,
        )
        .unwrap();
        let spec = serde_json::from_str(
            r#"{"kind":"rule","classes":["n","p"],"rules":[{"when":[{"feature":"a","op":">","value":2.5}],"class":"p"}],"default":"n"}"#,
        )
        .unwrap();
        let model = ModelHandle::from_spec(&spec, dataset.schema()).unwrap();
        Service::new(Workspace { dataset, model }, ui_dir)
    }

    fn json_of(reply: &Reply) -> Value {
        serde_json::from_slice(&reply.body).unwrap()
    }

    #[test]
    fn summary_and_paging() {
        let s = service(None);
        let r = s.handle("GET", "/api/summary", "");
        assert_eq!(r.status, 200);
        let v = json_of(&r);
        assert_eq!(v["version"], 1);
        assert_eq!(v["report"]["row_count"], 6);

        let page = json_of(&s.handle("GET", "/api/instances?offset=4&limit=5", ""));
        assert_eq!(page["report"]["total"], 6);
        assert_eq!(page["report"]["rows"].as_array().unwrap().len(), 2);
        assert_eq!(page["report"]["rows"][0]["index"], 4);
        assert_eq!(page["report"]["rows"][0]["values"][1], "x");
        let past = json_of(&s.handle("GET", "/api/instances?offset=40", ""));
        assert_eq!(past["report"]["rows"].as_array().unwrap().len(), 0);
        assert_eq!(s.handle("GET", "/api/instances?offset=-1", "").status, 400);
    }

    #[test]
    fn defaults_carry_the_default_fingerprint() {
        let s = service(None);
        let v = json_of(&s.handle("GET", "/api/defaults", ""));
        let defaults = config_from_value(&Value::Null).unwrap();
        assert_eq!(v["fingerprint"], defaults.fingerprint());
        assert_eq!(v["report"]["config"]["kernel"]["width"], 0.25);
    }

    #[test]
    fn explain_twice_gives_identical_bytes() {
        let s = service(None);
        let body = r#"{"config": {"sampler": {"n_samples": 200}}, "seed": 3, "instance": 4}"#;
        let a = s.handle("POST", "/api/explain", body);
        let b = s.handle("POST", "/api/explain", body);
        assert_eq!(a.status, 200, "{}", a.text());
        assert_eq!(a.body, b.body);
        let v = json_of(&a);
        assert_eq!(v["fingerprint"], v["report"]["fingerprint"]);
        assert!(v["report"].get("samples").is_none());
    }

    #[test]
    fn request_errors_are_structured() {
        let s = service(None);
        let r = s.handle(
            "POST",
            "/api/explain",
            r#"{"config": {"kernel": {"width": -1}}, "instance": 0}"#,
        );
        assert_eq!(r.status, 400);
        let v = json_of(&r);
        assert_eq!(v["version"], 1);
        assert_eq!(v["error"]["stage"], "config");
        assert!(v["error"]["message"]
            .as_str()
            .unwrap()
            .contains("kernel.width"));

        let r = s.handle("POST", "/api/explain", r#"{"instance": 0, "bogus": 1}"#);
        assert_eq!(json_of(&r)["error"]["stage"], "request");

        let r = s.handle(
            "POST",
            "/api/explain",
            r#"{"config": {"surrogate": {"target_class": "q"}}, "instance": 0}"#,
        );
        assert_eq!(r.status, 400);
        assert_eq!(json_of(&r)["error"]["stage"], "target");

        let r = s.handle("POST", "/api/global/ice", r#"{"feature": "b"}"#);
        assert_eq!(r.status, 400);
        assert!(json_of(&r)["error"]["message"]
            .as_str()
            .unwrap()
            .contains("categorical"));

        assert_eq!(s.handle("GET", "/api/explain", "").status, 405);
        assert_eq!(s.handle("GET", "/api/nothing", "").status, 404);
        assert_eq!(s.handle("DELETE", "/x", "").status, 404);
    }

    #[test]
    fn stability_needs_two_seeds() {
        let s = service(None);
        let r = s.handle("POST", "/api/stability", r#"{"instance": 4, "seeds": [5]}"#);
        assert_eq!(r.status, 400);
        let ok = s.handle(
            "POST",
            "/api/stability",
            r#"{"config": {"sampler": {"n_samples": 100}}, "instance": 4, "seeds": [5, 5, 5]}"#,
        );
        assert_eq!(ok.status, 200, "{}", ok.text());
        let v = json_of(&ok);
        assert_eq!(v["report"]["mean_jaccard"], 1.0);
        assert!(v["report"]["features"]
            .as_array()
            .unwrap()
            .iter()
            .all(|f| f["std"] == 0.0));
    }

    #[test]
    fn global_endpoints() {
        let s = service(None);
        let pd = json_of(&s.handle(
            "POST",
            "/api/global/pd",
            r#"{"feature": "a", "grid_points": 5}"#,
        ));
        let ice = &pd["report"]["ice"];
        let values = pd["report"]["pd"]["values"].as_array().unwrap();
        assert_eq!(values.len(), 5);
        for (g, v) in values.iter().enumerate() {
            let curves = ice["curves"].as_array().unwrap();
            let mean =
                curves.iter().map(|c| c[g].as_f64().unwrap()).sum::<f64>() / curves.len() as f64;
            assert!((mean - v.as_f64().unwrap()).abs() <= 1e-12);
        }
        let perm = json_of(&s.handle("POST", "/api/global/perm", r#"{"repeats": 3, "seed": 1}"#));
        let features = perm["report"]["features"].as_array().unwrap();
        // Only `a` matters to the rule.
        assert_eq!(features[1]["mean_drop"], 0.0);
        assert_eq!(features[2]["mean_drop"], 0.0);
        let again = s.handle("POST", "/api/global/perm", r#"{"repeats": 3, "seed": 1}"#);
        assert_eq!(perm, json_of(&again));
        let bad = s.handle(
            "POST",
            "/api/global/ice",
            r#"{"feature": "a", "grid": [1], "grid_points": 3}"#,
        );
        assert_eq!(bad.status, 400);
    }

    #[test]
    fn static_files_stay_inside_the_ui_dir() {
        let dir = std::env::temp_dir().join(format!("wb-ui-{}", std::process::id()));
        std::fs::create_dir_all(dir.join("assets")).unwrap();
        std::fs::write(dir.join("index.html"), "<html></html>").unwrap();
        std::fs::write(dir.join("assets/app.js"), "x()").unwrap();
        let s = service(Some(dir.clone()));
        let index = s.handle("GET", "/", "");
        assert_eq!(index.status, 200);
        assert_eq!(index.content_type, "text/html; charset=utf-8");
        assert_eq!(
            s.handle("GET", "/assets/app.js", "").content_type,
            "text/javascript"
        );
        assert_eq!(s.handle("GET", "/../secret", "").status, 404);
        assert_eq!(s.handle("GET", "/missing.css", "").status, 404);
        assert_eq!(service(None).handle("GET", "/", "").status, 404);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
