//! HTML rendering of fixture documents and a static server for them.
//!
//! Click effects become a `data-fx` JSON attribute interpreted by a small
//! inline script, so the pages behave in a real browser as they do in the
//! fixture engine. Sites are served under `/{host}/`.

use std::collections::BTreeMap;
use std::sync::Arc;

use tiny_http::{Header, Response, Server};

use super::spec::{Anchor, DocSpec, Layout, NodeSpec, Position};
use super::{Request, SiteRegistry};

const SCRIPT: &str = r#"
(function () {
  var base = document.body.getAttribute('data-base') || '/';
  function byId(id) { return document.getElementById(id); }
  function cats() {
    var out = [];
    document.querySelectorAll('[data-category]').forEach(function (n) {
      var on = n.type === 'checkbox' || n.type === 'radio' ? n.checked
        : n.getAttribute('role') === 'switch' ? n.getAttribute('aria-checked') === 'true' : null;
      if (on !== null) out.push([n.getAttribute('data-category'), on ? 1 : 0]);
    });
    out.sort(function (a, b) { return a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0; });
    return out.map(function (p) { return p[0] + '=' + p[1]; }).join(',');
  }
  function cookie(name, value) {
    var top = window.top.document;
    top.cookie = name + '=' + encodeURIComponent(value) + '; path=' + base;
  }
  document.addEventListener('click', function (ev) {
    var el = ev.target;
    while (el && el !== document) {
      var fx = el.getAttribute && el.getAttribute('data-fx');
      if (fx) {
        JSON.parse(fx).forEach(function (e) {
          var a = e.arg;
          switch (e.op) {
            case 'toggle': el.setAttribute('aria-checked', el.getAttribute('aria-checked') === 'true' ? 'false' : 'true'); break;
            case 'show': if (byId(a)) byId(a).style.display = ''; break;
            case 'hide': if (byId(a)) byId(a).style.display = 'none'; break;
            case 'remove': if (byId(a)) byId(a).remove(); break;
            case 'inject':
              var t = byId('tpl-' + a.template), into = byId(a.into);
              if (t && into) into.appendChild(t.content.cloneNode(true));
              break;
            case 'set_cookie': cookie(a[0], a[1]); break;
            case 'consent':
              cookie('fx_consent', a === 'accept_all' ? 'all' : a === 'reject_all' ? 'none' : cats());
              break;
            case 'navigate': window.location.href = e.url; break;
            case 'open_tab': window.open(e.url, '_blank'); break;
          }
        });
      }
      el = el.parentNode;
    }
  });
})();
"#;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn rebase(url: &str, prefix: &str) -> String {
    match url.strip_prefix('/') {
        Some(rest) if !url.starts_with("//") => format!("{prefix}{rest}"),
        _ => url.to_string(),
    }
}

fn style(n: &NodeSpec) -> String {
    let mut s = Vec::new();
    if n.hidden {
        s.push("display:none".to_string());
    } else if n.layout == Layout::Row {
        s.push("display:flex;gap:4px".to_string());
    }
    match n.position {
        Position::Flow => {}
        Position::Fixed(a) => s.push(
            match a {
                Anchor::Top => "position:fixed;top:0;left:0;right:0;background:#fff",
                Anchor::Bottom => "position:fixed;bottom:0;left:0;right:0;background:#fff",
                Anchor::Center => "position:fixed;top:20%;left:25%;width:50%;background:#fff",
                Anchor::Full => "position:fixed;top:0;left:0;right:0;bottom:0;background:#fff",
            }
            .to_string(),
        ),
        Position::Abs { x, y, w, h } => s.push(format!("position:absolute;left:{x}px;top:{y}px;width:{w}px;height:{h}px")),
    }
    if let Some(z) = n.z {
        s.push(format!("z-index:{z}"));
    }
    if let Some((w, h)) = n.size {
        s.push(format!("width:{w}px;height:{h}px"));
    }
    if matches!(n.position, Position::Flow) && n.children.iter().any(|c| matches!(c.position, Position::Abs { .. })) {
        s.push("position:relative".into());
    }
    s.join(";")
}

fn effects_json(n: &NodeSpec, prefix: &str) -> Option<String> {
    if n.on_click.is_empty() {
        return None;
    }
    let fx: Vec<serde_json::Value> = n
        .on_click
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).expect("effect serializes");
            if let serde_json::Value::Object(m) = &mut v {
                if let Some(serde_json::Value::String(url)) = m.get("arg") {
                    if matches!(m.get("op").and_then(|o| o.as_str()), Some("navigate") | Some("open_tab")) {
                        let url = rebase(url, prefix);
                        m.insert("url".into(), url.into());
                    }
                }
            }
            v
        })
        .collect();
    Some(serde_json::to_string(&fx).expect("effects serialize"))
}

fn render_node(n: &NodeSpec, prefix: &str, out: &mut String) {
    out.push('<');
    out.push_str(&n.tag);
    for (k, v) in &n.attrs {
        let v = if k == "href" || k == "src" { rebase(v, prefix) } else { v.clone() };
        out.push_str(&format!(" {}=\"{}\"", escape(k), escape(&v)));
    }
    let st = style(n);
    if !st.is_empty() {
        out.push_str(&format!(" style=\"{}\"", escape(&st)));
    }
    if let Some(fx) = effects_json(n, prefix) {
        out.push_str(&format!(" data-fx=\"{}\"", escape(&fx)));
    }
    if let Some(doc) = &n.frame {
        out.push_str(&format!(" srcdoc=\"{}\"", escape(&render_document(doc, prefix))));
    }
    out.push('>');
    if n.tag == "input" {
        return;
    }
    out.push_str(&escape(&n.text));
    for c in &n.children {
        render_node(c, prefix, out);
    }
    out.push_str(&format!("</{}>", n.tag));
}

/// Complete HTML page for `doc`; root-relative URLs are placed under `prefix`.
pub fn render_document(doc: &DocSpec, prefix: &str) -> String {
    let mut out = String::from("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>");
    out.push_str(&escape(&doc.title));
    out.push_str("</title></head>");
    out.push_str(&format!("<body data-base=\"{}\">", escape(prefix)));
    for n in &doc.body {
        render_node(n, prefix, &mut out);
    }
    for (name, nodes) in &doc.templates {
        out.push_str(&format!("<template id=\"tpl-{}\">", escape(name)));
        for n in nodes {
            render_node(n, prefix, &mut out);
        }
        out.push_str("</template>");
    }
    out.push_str("<script>");
    out.push_str(SCRIPT);
    out.push_str("</script></body></html>\n");
    out
}

fn parse_cookies(header: Option<&str>) -> BTreeMap<String, String> {
    header
        .unwrap_or("")
        .split(';')
        .filter_map(|p| {
            let (k, v) = p.trim().split_once('=')?;
            let v = url::form_urlencoded::parse(format!("v={v}").as_bytes())
                .next()
                .map(|(_, v)| v.into_owned())
                .unwrap_or_default();
            Some((k.to_string(), v))
        })
        .collect()
}

/// Status and body for a request to the fixture server.
pub fn respond(registry: &SiteRegistry, url: &str, cookie_header: Option<&str>) -> (u16, String) {
    let path = url.split(['?', '#']).next().unwrap_or("/");
    let trimmed = path.trim_start_matches('/');
    if trimmed.is_empty() {
        let mut hosts: Vec<&str> = registry.hosts().collect();
        hosts.sort_unstable();
        let items: String = hosts
            .iter()
            .map(|h| format!("<li><a href=\"/{0}/\">{0}</a></li>", escape(h)))
            .collect();
        return (200, format!("<!DOCTYPE html>\n<html><body><ul>{items}</ul></body></html>\n"));
    }
    let (host, rest) = trimmed.split_once('/').unwrap_or((trimmed, ""));
    let Some(site) = registry.get(host) else {
        return (404, "unknown site\n".into());
    };
    let cookies = parse_cookies(cookie_header);
    let sub = format!("/{rest}");
    let req = Request {
        path: &sub,
        cookies: &cookies,
    };
    match (site.render)(&req) {
        Some(doc) => (200, render_document(&doc, &format!("/{host}/"))),
        None => (404, "not found\n".into()),
    }
}

/// Serves `registry` on `addr` until the process exits.
pub fn serve(registry: Arc<SiteRegistry>, addr: &str) -> std::io::Result<()> {
    let server = Server::http(addr).map_err(std::io::Error::other)?;
    log::info!("serving fixtures on http://{addr}/");
    for req in server.incoming_requests() {
        let cookie = req
            .headers()
            .iter()
            .find(|h| h.field.equiv("Cookie"))
            .map(|h| h.value.as_str().to_string());
        let (status, body) = respond(&registry, req.url(), cookie.as_deref());
        let ct = Header::from_bytes("Content-Type", "text/html; charset=utf-8").expect("static header");
        let _ = req.respond(Response::from_string(body).with_status_code(status).with_header(ct));
    }
    Ok(())
}
