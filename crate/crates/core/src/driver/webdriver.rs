//! W3C WebDriver client over blocking HTTP + JSON.

use std::thread;
use std::time::{Duration, Instant};

use log::debug;
use reqwest::blocking::Client;
use reqwest::Method;
use serde_json::{json, Value};

use super::scripts;
use super::{
    same_document, Browser, ClickErrorKind, ClickOutcome, ConnectCause, DriverError, ElementState,
    Session, SessionConfig,
};
use crate::dom::{NodeId, PageSnapshot, SelectorPath};

/// Web element reference key from the W3C spec.
pub const ELEMENT_KEY: &str = "element-6066-11e4-a52e-4f735466cecf";

const READY_POLL_MS: u64 = 100;

#[derive(Debug)]
pub struct WebDriverSession {
    http: Client,
    session: Session,
    config: SessionConfig,
    open: bool,
}

fn transport(e: reqwest::Error) -> DriverError {
    DriverError::DriverUnreachable {
        cause: ConnectCause::Transport(e.to_string()),
    }
}

impl WebDriverSession {
    /// `POST /session` with a fresh profile.
    pub fn open(config: SessionConfig) -> Result<Self, DriverError> {
        let http = Client::builder()
            .tcp_nodelay(true)
            .timeout(Duration::from_millis(config.page_load_timeout_ms + 10_000))
            .build()
            .map_err(transport)?;
        let base_url = config.endpoint.trim_end_matches('/').to_string();

        let mut always = json!({
            "pageLoadStrategy": "normal",
            "timeouts": { "pageLoad": config.page_load_timeout_ms, "script": 30_000 },
        });
        if config.headless {
            always["goog:chromeOptions"] = json!({ "args": ["--headless=new", "--incognito"] });
            always["moz:firefoxOptions"] = json!({ "args": ["-headless", "-private"] });
        }
        let body = json!({ "capabilities": { "alwaysMatch": always } });

        let resp = http
            .post(format!("{base_url}/session"))
            .json(&body)
            .send()
            .map_err(transport)?;
        let status = resp.status();
        let text = resp.text().map_err(transport)?;
        let value: Value = serde_json::from_str(&text).map_err(|e| DriverError::DriverUnreachable {
            cause: ConnectCause::ProtocolError(e.to_string()),
        })?;
        let payload = value.get("value").cloned().ok_or_else(|| DriverError::DriverUnreachable {
            cause: ConnectCause::ProtocolError("missing value".into()),
        })?;
        if !status.is_success() || payload.get("error").is_some() {
            let msg = payload
                .get("message")
                .and_then(Value::as_str)
                .unwrap_or("session not created")
                .to_string();
            return Err(DriverError::SessionRejected(msg));
        }
        let session_id = payload
            .get("sessionId")
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| DriverError::DriverUnreachable {
                cause: ConnectCause::ProtocolError("missing sessionId".into()),
            })?
            .to_string();

        Ok(WebDriverSession {
            http,
            session: Session {
                session_id,
                base_url,
                page_load_timeout_ms: config.page_load_timeout_ms,
                settle_delay_ms: config.settle_delay_ms,
            },
            config,
            open: true,
        })
    }

    fn url(&self, path: &str) -> String {
        format!(
            "{}/session/{}{}",
            self.session.base_url, self.session.session_id, path
        )
    }

    /// Issues one command and unwraps the `value` member.
    fn command(&self, method: Method, path: &str, body: Option<Value>) -> Result<Value, DriverError> {
        debug!("webdriver {method} {path}");
        let mut req = self.http.request(method, self.url(path));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                DriverError::Command {
                    error: "timeout".into(),
                    message: e.to_string(),
                }
            } else {
                transport(e)
            }
        })?;
        let text = resp.text().map_err(transport)?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| DriverError::Protocol(e.to_string()))?;
        let payload = value
            .get("value")
            .cloned()
            .ok_or_else(|| DriverError::Protocol("missing value".into()))?;
        if let Some(err) = payload.get("error").and_then(Value::as_str) {
            return Err(DriverError::Command {
                error: err.to_string(),
                message: payload
                    .get("message")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
            });
        }
        Ok(payload)
    }

    fn execute(&self, script: &str, args: Vec<Value>) -> Result<Value, DriverError> {
        self.command(
            Method::POST,
            "/execute/sync",
            Some(json!({ "script": script, "args": args })),
        )
    }

    fn find(&self, css: &str) -> Result<Option<String>, DriverError> {
        match self.command(
            Method::POST,
            "/element",
            Some(json!({ "using": "css selector", "value": css })),
        ) {
            Ok(v) => Ok(v.get(ELEMENT_KEY).and_then(Value::as_str).map(String::from)),
            Err(DriverError::Command { error, .. }) if error == "no such element" => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn window_handles(&self) -> Result<Vec<String>, DriverError> {
        let v = self.command(Method::GET, "/window/handles", None)?;
        serde_json::from_value(v).map_err(|e| DriverError::Protocol(e.to_string()))
    }

    fn close_extra_windows(&self, before: &[String]) -> Result<bool, DriverError> {
        let after = self.window_handles()?;
        let extra: Vec<&String> = after.iter().filter(|h| !before.contains(h)).collect();
        if extra.is_empty() {
            return Ok(false);
        }
        for handle in &extra {
            self.command(Method::POST, "/window", Some(json!({ "handle": handle })))?;
            self.command(Method::DELETE, "/window", None)?;
        }
        if let Some(home) = before.first() {
            self.command(Method::POST, "/window", Some(json!({ "handle": home })))?;
        }
        Ok(true)
    }

    fn wait_ready(&self, url: &str) -> Result<(), DriverError> {
        let deadline = Instant::now() + Duration::from_millis(self.config.page_load_timeout_ms);
        loop {
            let state = self.execute(scripts::READY_STATE, vec![])?;
            if state.as_str() == Some("complete") {
                return Ok(());
            }
            if Instant::now() >= deadline {
                return Err(DriverError::NavTimeout {
                    url: url.to_string(),
                    timeout_ms: self.config.page_load_timeout_ms,
                });
            }
            thread::sleep(Duration::from_millis(READY_POLL_MS));
        }
    }
}

fn click_error_kind(error: &str) -> Option<ClickErrorKind> {
    match error {
        "element not interactable" | "element not visible" | "invalid element state" => {
            Some(ClickErrorKind::NotInteractable)
        }
        "stale element reference" | "no such element" => Some(ClickErrorKind::Stale),
        "element click intercepted" => Some(ClickErrorKind::Intercepted),
        _ => None,
    }
}

impl Browser for WebDriverSession {
    fn session(&self) -> &Session {
        &self.session
    }

    fn config(&self) -> &SessionConfig {
        &self.config
    }

    fn navigate(&mut self, url: &str) -> Result<PageSnapshot, DriverError> {
        match self.command(Method::POST, "/url", Some(json!({ "url": url }))) {
            Ok(_) => {}
            Err(DriverError::Command { error, .. }) if error == "timeout" => {
                return Err(DriverError::NavTimeout {
                    url: url.to_string(),
                    timeout_ms: self.config.page_load_timeout_ms,
                })
            }
            Err(DriverError::Command { error, message }) if error == "unknown error" => {
                return Err(DriverError::PageCrashed(message))
            }
            Err(e) => return Err(e),
        }
        self.wait_ready(url)?;
        self.pause(self.config.settle_delay_ms);
        self.snapshot()
    }

    fn snapshot(&mut self) -> Result<PageSnapshot, DriverError> {
        let raw = self.execute(scripts::SNAPSHOT, vec![])?;
        let mut page: PageSnapshot =
            serde_json::from_value(raw).map_err(|e| DriverError::Protocol(e.to_string()))?;
        page.elements.sort_by_key(|e| e.doc_order);
        page.assign_selectors()?;
        Ok(page)
    }

    fn current_url(&mut self) -> Result<String, DriverError> {
        let v = self.execute(scripts::HREF, vec![])?;
        v.as_str()
            .map(String::from)
            .ok_or_else(|| DriverError::Protocol("href is not a string".into()))
    }

    fn focus(&mut self, target: &SelectorPath) -> Result<bool, DriverError> {
        let v = self.execute(scripts::FOCUS, vec![json!(target.css)])?;
        Ok(v.as_bool().unwrap_or(false))
    }

    fn press_tab(&mut self) -> Result<(), DriverError> {
        let body = json!({
            "actions": [{
                "type": "key",
                "id": "keyboard",
                "actions": [
                    { "type": "keyDown", "value": "\u{E004}" },
                    { "type": "keyUp", "value": "\u{E004}" }
                ]
            }]
        });
        self.command(Method::POST, "/actions", Some(body))?;
        Ok(())
    }

    fn active_element(&mut self) -> Result<Option<NodeId>, DriverError> {
        let v = self.execute(scripts::ACTIVE_ELEMENT, vec![])?;
        Ok(v.as_u64())
    }

    fn click(&mut self, target: &SelectorPath) -> Result<ClickOutcome, DriverError> {
        let Some(eid) = self.find(&target.css)? else {
            return Ok(ClickOutcome::failed(ClickErrorKind::Stale));
        };
        let before_url = self.current_url()?;
        let before_windows = self.window_handles()?;
        let clicked = self.command(Method::POST, &format!("/element/{eid}/click"), Some(json!({})));
        let new_tab = self.close_extra_windows(&before_windows)?;
        let after_url = self.current_url()?;
        let url_changed = !same_document(&before_url, &after_url);
        match clicked {
            Ok(_) => Ok(ClickOutcome::ok(url_changed, new_tab)),
            Err(DriverError::Command { error, .. }) => match click_error_kind(&error) {
                Some(kind) => Ok(ClickOutcome::failed(kind)),
                None if url_changed => Ok(ClickOutcome {
                    clicked: false,
                    error_kind: ClickErrorKind::Navigated,
                    url_changed: true,
                    new_tab_opened: new_tab,
                }),
                None => Ok(ClickOutcome::failed(ClickErrorKind::NotInteractable)),
            },
            Err(e) => Err(e),
        }
    }

    fn query_state(&mut self, target: &SelectorPath) -> Result<ElementState, DriverError> {
        let v = self.execute(scripts::STATE_PROBE, vec![json!(target.css)])?;
        match v.get("kind").and_then(Value::as_str) {
            Some("native") => {
                let eid = v
                    .get("element")
                    .and_then(|e| e.get(ELEMENT_KEY))
                    .and_then(Value::as_str)
                    .ok_or_else(|| DriverError::Protocol("state probe returned no element".into()))?;
                match self.command(Method::GET, &format!("/element/{eid}/selected"), None) {
                    Ok(Value::Bool(true)) => Ok(ElementState::Selected),
                    Ok(Value::Bool(false)) => Ok(ElementState::NotSelected),
                    Ok(other) => Err(DriverError::Protocol(format!("selected returned {other}"))),
                    Err(DriverError::Command { error, .. })
                        if click_error_kind(&error) == Some(ClickErrorKind::Stale) =>
                    {
                        Ok(ElementState::Gone)
                    }
                    Err(e) => Err(e),
                }
            }
            Some("aria") => Ok(if v.get("checked").and_then(Value::as_bool) == Some(true) {
                ElementState::Selected
            } else {
                ElementState::NotSelected
            }),
            Some("stateless") => Ok(ElementState::Stateless),
            Some("gone") => Ok(ElementState::Gone),
            _ => Err(DriverError::Protocol(format!("unexpected state probe result {v}"))),
        }
    }

    fn reset(&mut self, url: &str) -> Result<PageSnapshot, DriverError> {
        self.switch_to_frame(None)?;
        self.command(Method::DELETE, "/cookie", None)?;
        self.execute(scripts::CLEAR_STORAGE, vec![])?;
        self.navigate(url)
    }

    fn switch_to_frame(&mut self, frame: Option<&SelectorPath>) -> Result<(), DriverError> {
        let id = match frame {
            None => Value::Null,
            Some(sel) => {
                let eid = self
                    .find(&sel.css)?
                    .ok_or_else(|| DriverError::ContainerGone(sel.css.clone()))?;
                json!({ ELEMENT_KEY: eid })
            }
        };
        self.command(Method::POST, "/frame", Some(json!({ "id": id })))?;
        Ok(())
    }

    fn pause(&mut self, ms: u64) {
        if ms > 0 {
            thread::sleep(Duration::from_millis(ms));
        }
    }

    fn close(&mut self) -> Result<(), DriverError> {
        if self.open {
            self.open = false;
            self.command(Method::DELETE, "", None)?;
        }
        Ok(())
    }
}

impl Drop for WebDriverSession {
    fn drop(&mut self) {
        let _ = self.close();
    }
}
