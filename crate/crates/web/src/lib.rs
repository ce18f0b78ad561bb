//! wasm-bindgen entry points for the browser demo in `www/`.
//!
//! Every export takes plain strings and returns a JSON document, so the page
//! needs no glue beyond `JSON.parse`.

use rizzo_rt::driver::{self, DriverError, RunConfig};
use rizzo_rt::oracle::Checks;
use rizzo_rt::snapshot;
use rizzo_rt::stdlib::manifest;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn error_json(e: &DriverError) -> Value {
    let kind = match e {
        DriverError::Parse(_) => "parse",
        DriverError::Static(_) | DriverError::Type(_) => "type",
        DriverError::Trace(_) => "trace",
    };
    json!({ "ok": false, "kind": kind, "error": e.to_string() })
}

// Evaluation recurses on term structure. Natively that wants a big thread
// stack; in the browser the wasm stack size is set at link time.
#[cfg(not(target_arch = "wasm32"))]
fn guarded<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    driver::with_big_stack(f)
}

#[cfg(target_arch = "wasm32")]
fn guarded<R>(f: impl FnOnce() -> R) -> R {
    f()
}

/// Typecheck every definition without type parameters.
#[wasm_bindgen]
pub fn typecheck(src: &str) -> String {
    guarded(|| match driver::check_program(src) {
        Ok(defs) => {
            let defs: Vec<Value> =
                defs.into_iter().map(|(name, ty)| json!({ "name": name, "type": ty.to_string() })).collect();
            json!({ "ok": true, "defs": defs })
        }
        Err(e) => error_json(&e),
    })
    .to_string()
}

/// Run `main` against a trace. The result carries the snapshots both as
/// structured cells and as the CLI's text rendering, plus any oracle
/// violations or fault.
#[wasm_bindgen]
pub fn run_trace(src: &str, trace: &str, hide_unreachable: bool, check: bool, budget: u32) -> String {
    let cfg = RunConfig {
        budget: u64::from(budget),
        checks: if check { Checks::all() } else { Checks::default() },
        check_determinism: check,
        hide_unreachable,
        ..RunConfig::default()
    };
    guarded(|| match driver::run(src, trace, cfg) {
        Ok(out) => json!({
            "ok": out.ok(),
            "snapshots": out.snapshots,
            "text": snapshot::to_text(&out.snapshots),
            "violations": out.violations().iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "fault": out.fault().map(|f| f.to_string()),
        }),
        Err(e) => error_json(&e),
    })
    .to_string()
}

/// The bundled example programs with their traces, for the page's picker.
#[wasm_bindgen]
pub fn examples() -> String {
    let list: Vec<Value> = manifest()
        .programs
        .iter()
        .map(|p| json!({ "name": p.name, "source": p.source(), "trace": p.trace_source().unwrap_or("") }))
        .collect();
    Value::Array(list).to_string()
}
