//! Minimal WebDriver server backed by the fixture engine.
//!
//! Serves the endpoints [`crate::driver::WebDriverSession`] uses. Scripts
//! are dispatched on their leading marker comment.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use log::debug;
use serde_json::{json, Value};
use tiny_http::{Header, Method, Response, Server};

use super::{Probe, SimBrowser, SiteRegistry};
use crate::driver::{ClickErrorKind, DriverError, SessionConfig, ELEMENT_KEY, SCRIPT_MARKER_PREFIX};

#[derive(Debug, Clone, Copy, Default)]
pub struct StubOptions {
    /// Answer `POST /session` with `session not created`.
    pub reject_sessions: bool,
    /// Answer every request with a non-JSON body.
    pub malformed: bool,
}

struct StubSession {
    browser: SimBrowser,
    window: String,
}

pub struct StubServer {
    server: Arc<Server>,
    port: u16,
    stop: Arc<AtomicBool>,
    worker: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(registry: Arc<SiteRegistry>, options: StubOptions) -> std::io::Result<Self> {
        let server = Server::from_listener(nodelay_listener()?, None).map_err(std::io::Error::other)?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| std::io::Error::other("stub bound to a non-IP address"))?;
        let server = Arc::new(server);
        let stop = Arc::new(AtomicBool::new(false));
        let worker = {
            let server = Arc::clone(&server);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                let sessions: Mutex<BTreeMap<String, StubSession>> = Mutex::new(BTreeMap::new());
                let mut counter = 0u64;
                for mut req in server.incoming_requests() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let mut body = String::new();
                    let _ = req.as_reader().read_to_string(&mut body);
                    if options.malformed {
                        let _ = req.respond(Response::from_string("<html>proxy error</html>").with_status_code(502));
                        continue;
                    }
                    let (status, value) = {
                        let mut guard = sessions.lock().expect("stub session lock");
                        handle(&registry, options, &mut guard, &mut counter, req.method(), req.url(), &body)
                    };
                    let text = json!({ "value": value }).to_string();
                    let header = Header::from_bytes("Content-Type", "application/json; charset=utf-8")
                        .expect("static header");
                    let _ = req.respond(
                        Response::from_string(text)
                            .with_status_code(status)
                            .with_header(header),
                    );
                }
            })
        };
        Ok(StubServer {
            server,
            port,
            stop,
            worker: Some(worker),
        })
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn nodelay_listener() -> std::io::Result<std::net::TcpListener> {
    use socket2::{Domain, Socket, Type};
    let socket = Socket::new(Domain::IPV4, Type::STREAM, None)?;
    socket.set_tcp_nodelay(true)?;
    socket.bind(&std::net::SocketAddr::from(([127, 0, 0, 1], 0)).into())?;
    socket.listen(128)?;
    Ok(socket.into())
}

fn err(status: u16, error: &str, message: impl Into<String>) -> (u16, Value) {
    (status, json!({ "error": error, "message": message.into(), "stacktrace": "" }))
}

fn driver_err(e: DriverError) -> (u16, Value) {
    match e {
        DriverError::NavTimeout { url, .. } => err(500, "timeout", format!("timed out loading {url}")),
        DriverError::PageCrashed(m) => err(500, "unknown error", m),
        DriverError::Command { error, message } => err(404, &error, message),
        other => err(500, "unknown error", other.to_string()),
    }
}

fn element_ref(id: u64) -> Value {
    json!({ ELEMENT_KEY: format!("node-{id}") })
}

fn parse_ref(s: &str) -> Option<u64> {
    s.strip_prefix("node-")?.parse().ok()
}

fn handle(
    registry: &Arc<SiteRegistry>,
    options: StubOptions,
    sessions: &mut BTreeMap<String, StubSession>,
    counter: &mut u64,
    method: &Method,
    url: &str,
    body: &str,
) -> (u16, Value) {
    debug!("stub {method} {url}");
    let body: Value = serde_json::from_str(body).unwrap_or(Value::Null);
    let parts: Vec<&str> = url.trim_matches('/').split('/').collect();
    if parts == ["session"] && *method == Method::Post {
        if options.reject_sessions {
            return err(500, "session not created", "no matching browser");
        }
        *counter += 1;
        let id = format!("stub-{counter}");
        let config = SessionConfig {
            settle_delay_ms: 0,
            ..SessionConfig::default()
        };
        sessions.insert(
            id.clone(),
            StubSession {
                browser: SimBrowser::new(Arc::clone(registry), config),
                window: "main".into(),
            },
        );
        return (200, json!({ "sessionId": id, "capabilities": { "browserName": "fixture" } }));
    }
    if parts.first() != Some(&"session") || parts.len() < 2 {
        return err(404, "unknown command", url.to_string());
    }
    let sid = parts[1].to_string();
    let rest = &parts[2..];
    if rest.is_empty() && *method == Method::Delete {
        sessions.remove(&sid);
        return (200, Value::Null);
    }
    let Some(s) = sessions.get_mut(&sid) else {
        return err(404, "invalid session id", sid);
    };
    let b = &mut s.browser;
    let result: Result<Value, (u16, Value)> = (|| match (method, rest) {
        (Method::Post, ["url"]) => {
            let u = body["url"].as_str().unwrap_or_default();
            b.load(u).map_err(driver_err)?;
            Ok(Value::Null)
        }
        (Method::Post, ["execute", "sync"]) => execute(b, &body),
        (Method::Post, ["element"]) => {
            let css = body["value"].as_str().unwrap_or_default();
            match b.find(css).map_err(driver_err)? {
                Some(id) => Ok(element_ref(id)),
                None => Err(err(404, "no such element", css.to_string())),
            }
        }
        (Method::Post, ["element", eid, "click"]) => {
            let id = parse_ref(eid).ok_or_else(|| err(404, "no such element", eid.to_string()))?;
            b.click_node(id).map(|_| Value::Null).map_err(|kind| match kind {
                ClickErrorKind::Intercepted => err(400, "element click intercepted", "obscured"),
                ClickErrorKind::NotInteractable => err(400, "element not interactable", "not visible"),
                _ => err(404, "stale element reference", "detached"),
            })
        }
        (Method::Get, ["element", eid, "selected"]) => {
            let id = parse_ref(eid).ok_or_else(|| err(404, "no such element", eid.to_string()))?;
            match b.is_selected(id).map_err(driver_err)? {
                Some(on) => Ok(json!(on)),
                None => Err(err(404, "stale element reference", "detached")),
            }
        }
        (Method::Get, ["window", "handles"]) => Ok(json!(b.window_handles())),
        (Method::Post, ["window"]) => {
            let h = body["handle"].as_str().unwrap_or_default().to_string();
            if !b.window_handles().contains(&h) {
                return Err(err(404, "no such window", h));
            }
            s.window = h;
            Ok(Value::Null)
        }
        (Method::Delete, ["window"]) => {
            let h = s.window.clone();
            b.close_window(&h);
            Ok(json!(b.window_handles()))
        }
        (Method::Delete, ["cookie"]) => {
            b.clear_cookies();
            Ok(Value::Null)
        }
        (Method::Post, ["frame"]) => match &body["id"] {
            Value::Null => {
                b.leave_frames();
                Ok(Value::Null)
            }
            v => {
                let id = v[ELEMENT_KEY]
                    .as_str()
                    .and_then(parse_ref)
                    .ok_or_else(|| err(404, "no such frame", v.to_string()))?;
                b.enter_frame(id).map_err(driver_err)?;
                Ok(Value::Null)
            }
        },
        (Method::Post, ["actions"]) => {
            let tabs = body["actions"]
                .as_array()
                .into_iter()
                .flatten()
                .flat_map(|src| src["actions"].as_array().cloned().unwrap_or_default())
                .filter(|a| a["type"] == "keyDown" && a["value"] == "\u{E004}")
                .count();
            for _ in 0..tabs {
                b.tab().map_err(driver_err)?;
            }
            Ok(Value::Null)
        }
        _ => Err(err(404, "unknown command", format!("{method} {url}"))),
    })();
    match result {
        Ok(v) => (200, v),
        Err(e) => e,
    }
}

fn execute(b: &mut SimBrowser, body: &Value) -> Result<Value, (u16, Value)> {
    let script = body["script"].as_str().unwrap_or_default();
    let arg0 = body["args"][0].as_str().unwrap_or_default();
    let marker = script
        .strip_prefix(SCRIPT_MARKER_PREFIX)
        .and_then(|s| s.split_once("*/"))
        .map(|(m, _)| m)
        .ok_or_else(|| err(500, "javascript error", "stub only runs marked scripts"))?;
    match marker {
        "ready" => Ok(json!(if b.ready() { "complete" } else { "loading" })),
        "href" => b.href().map(Value::from).map_err(driver_err),
        "clear-storage" => Ok(Value::Null),
        "snapshot" => {
            let page = b.current_snapshot().map_err(driver_err)?;
            let mut v = serde_json::to_value(&page).expect("snapshot serializes");
            for e in v["elements"].as_array_mut().into_iter().flatten() {
                e["selector_path"]["css"] = json!("");
            }
            Ok(v)
        }
        "focus" => match b.find(arg0).map_err(driver_err)? {
            Some(id) => b.focus_node(id).map(Value::from).map_err(driver_err),
            None => Ok(json!(false)),
        },
        "active" => Ok(b.active_node().map_err(driver_err)?.map_or(Value::Null, Value::from)),
        "state" => Ok(match b.probe(arg0).map_err(driver_err)? {
            Probe::Gone => json!({ "kind": "gone" }),
            Probe::Native(id) => json!({ "kind": "native", "element": element_ref(id) }),
            Probe::Aria(on) => json!({ "kind": "aria", "checked": on }),
            Probe::Stateless => json!({ "kind": "stateless" }),
        }),
        other => Err(err(500, "javascript error", format!("unknown script {other}"))),
    }
}
