//! Scripts sent through `execute/sync`. Each begins with a marker comment
//! so a stub server can recognise it without a JavaScript engine.

pub const SCRIPT_MARKER_PREFIX: &str = "/*optout:";

pub const READY_STATE: &str = "/*optout:ready*/ return document.readyState;";

pub const HREF: &str = "/*optout:href*/ return window.location.href;";

pub const CLEAR_STORAGE: &str = "/*optout:clear-storage*/
try { window.localStorage.clear(); } catch (e) {}
try { window.sessionStorage.clear(); } catch (e) {}
return null;";

/// Captures every element in pre-order. Node ids are stored on the element
/// objects so later scripts in the same page agree on numbering.
pub const SNAPSHOT: &str = r#"/*optout:snapshot*/
var KEY = '__optoutId';
var next = window.__optoutNext || 1;
var out = [];
var order = 0;
function visit(el, parent) {
  if (!el[KEY]) { el[KEY] = next++; }
  var cs = window.getComputedStyle(el);
  var r = el.getBoundingClientRect();
  var attrs = {};
  for (var i = 0; i < el.attributes.length; i++) {
    attrs[el.attributes[i].name] = el.attributes[i].value;
  }
  var text = '';
  for (var j = 0; j < el.childNodes.length; j++) {
    if (el.childNodes[j].nodeType === 3) { text += el.childNodes[j].nodeValue; }
  }
  var root = el === document.documentElement || el === document.body;
  var displayed = root || (cs.visibility !== 'hidden' && el.getClientRects().length > 0);
  var z = cs.zIndex;
  out.push({
    node_id: el[KEY],
    tag_name: el.tagName.toLowerCase(),
    attributes: attrs,
    z_index: (z === 'auto' || z === '') ? 'auto' : parseInt(z, 10),
    bbox: { x: r.x, y: r.y, width: r.width, height: r.height },
    displayed: displayed,
    own_text: text,
    selector_path: { css: '', strategy: 'BY_NTH_CHILD_CHAIN' },
    doc_order: order++,
    parent: parent
  });
  for (var k = 0; k < el.children.length; k++) { visit(el.children[k], el[KEY]); }
}
visit(document.documentElement, null);
window.__optoutNext = next;
return { url: window.location.href, title: document.title,
         ready: document.readyState === 'complete', elements: out };"#;

/// arguments[0]: css. Returns false when the selector does not resolve.
pub const FOCUS: &str = r#"/*optout:focus*/
var el = document.querySelector(arguments[0]);
if (!el) { return false; }
if (!el.hasAttribute('tabindex') && el.tabIndex < 0) { el.setAttribute('tabindex', '-1'); }
el.focus();
return true;"#;

/// Returns the optout node id of the focused element, or null.
pub const ACTIVE_ELEMENT: &str = r#"/*optout:active*/
var el = document.activeElement;
if (!el || el === document.body || el === document.documentElement) { return null; }
return el.__optoutId || null;"#;

/// arguments[0]: css. Classifies the element for state queries and returns
/// the element whose `selected` endpoint answers native checkbox state.
pub const STATE_PROBE: &str = r#"/*optout:state*/
var el = document.querySelector(arguments[0]);
if (!el) { return { kind: 'gone' }; }
var root = el === document.documentElement || el === document.body;
var cs = window.getComputedStyle(el);
var visible = root || (cs.visibility !== 'hidden' && el.getClientRects().length > 0);
if (!visible) { return { kind: 'gone' }; }
var control = el;
if (el.tagName === 'LABEL') { control = el.control || el.querySelector('input'); }
if (control && control.tagName === 'INPUT' &&
    (control.type === 'checkbox' || control.type === 'radio')) {
  return { kind: 'native', element: control };
}
var role = el.getAttribute('role');
var aria = el.getAttribute('aria-checked');
if ((role === 'switch' || role === 'checkbox' || role === 'radio') && aria !== null) {
  return { kind: 'aria', checked: aria === 'true' };
}
return { kind: 'stateless' };"#;
