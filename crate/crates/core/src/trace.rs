//! Event trace files.
//!
//! ```text
//! -- channel declarations come first
//! chan k1 : Int
//! chan k2 : Char
//! chan add : Unit = 3   -- a channel the program allocates at run time
//!
//! k1 1
//! k2 'b'
//! ```
//!
//! A declaration without `= n` must name one of the program's inputs, at the
//! same type. Payloads are closed surface literals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::frontend::ast::{Expr, SType};
use crate::frontend::{parse_expr, parse_type, Program};
use crate::reactive::InputEvent;
use crate::store::ChannelContext;
use crate::syntax::{is_value, ChanId, Type};
use crate::typeck::{elaborate, HeapContext, TypingContext};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("trace line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> TraceError {
    TraceError { line, message: message.into() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceChannel {
    pub name: String,
    pub ty: SType,
    /// Explicit channel number, for channels allocated by the program.
    pub id: Option<u32>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    pub channel: String,
    pub payload: Expr,
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceFile {
    pub channels: Vec<TraceChannel>,
    pub events: Vec<TraceEvent>,
}

fn strip_comment(line: &str) -> &str {
    // `--` inside a string or char literal is not a comment.
    let bytes = line.as_bytes();
    let mut quote: Option<u8> = None;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(_) if b == b'\\' => i += 1,
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'-' && bytes.get(i + 1) == Some(&b'-') => return &line[..i],
            None => {}
        }
        i += 1;
    }
    line
}

pub fn parse_trace(src: &str) -> Result<TraceFile, TraceError> {
    let mut file = TraceFile::default();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = strip_comment(raw).trim();
        if text.is_empty() {
            continue;
        }
        if let Some(decl) = text.strip_prefix("chan ") {
            if !file.events.is_empty() {
                return Err(err(line, "channel declarations must come before the events"));
            }
            let (name, rest) = decl.split_once(':').ok_or_else(|| err(line, "expected `chan name : Type`"))?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'') {
                return Err(err(line, format!("bad channel name `{name}`")));
            }
            let (ty_src, id) = match rest.rsplit_once('=') {
                Some((t, n)) => {
                    let n: u32 = n.trim().parse().map_err(|_| err(line, format!("bad channel number `{}`", n.trim())))?;
                    (t, Some(n))
                }
                None => (rest, None),
            };
            let ty = parse_type(ty_src.trim()).map_err(|e| err(line, e.message))?;
            if file.channels.iter().any(|c| c.name == name) {
                return Err(err(line, format!("channel `{name}` declared twice")));
            }
            file.channels.push(TraceChannel { name: name.to_string(), ty, id, line });
            continue;
        }
        let (name, payload) = match text.split_once(char::is_whitespace) {
            Some((n, p)) => (n, p.trim()),
            None => return Err(err(line, format!("event `{text}` has no payload"))),
        };
        let payload = parse_expr(payload).map_err(|e| err(line, e.message))?;
        file.events.push(TraceEvent { channel: name.to_string(), payload, line });
    }
    Ok(file)
}

/// Check a trace against a program and produce its input events.
pub fn resolve_trace(program: &Program, file: &TraceFile) -> Result<Vec<InputEvent>, TraceError> {
    let inputs = program.inputs();
    let mut decls: BTreeMap<&str, (ChanId, Type)> = BTreeMap::new();
    for c in &file.channels {
        let ty = program.resolve_type(&c.ty).map_err(|e| err(c.line, e.message))?;
        let id = match c.id {
            Some(0) => return Err(err(c.line, "channel numbers start at 1")),
            Some(n) => ChanId(n),
            None => {
                let Some((_, k, input_ty)) = inputs.iter().find(|(n, _, _)| n == &c.name) else {
                    return Err(err(c.line, format!("the program has no input `{}`; give a channel number", c.name)));
                };
                if !input_ty.alpha_eq(&ty) {
                    return Err(err(c.line, format!("input `{}` has type {input_ty}, not {ty}", c.name)));
                }
                *k
            }
        };
        decls.insert(&c.name, (id, ty));
    }
    let mut events = Vec::new();
    for ev in &file.events {
        let Some((k, ty)) = decls.get(ev.channel.as_str()) else {
            return Err(err(ev.line, format!("undeclared channel `{}`", ev.channel)));
        };
        let term = program.compile_expr(&ev.payload).map_err(|e| err(ev.line, e.message))?;
        let payload = elaborate(&TypingContext::new(), &HeapContext::new(), &ChannelContext::new(), &term, ty)
            .map_err(|e| err(ev.line, format!("payload is not a {ty}: {}", e.message)))?;
        if !is_value(&payload) {
            return Err(err(ev.line, "payload must be a value"));
        }
        events.push(InputEvent { channel: *k, payload });
    }
    Ok(events)
}

/// Print events as a trace file that declares every channel by number.
pub fn write_trace(channels: &ChannelContext, events: &[InputEvent]) -> String {
    let mut s = String::new();
    let used: std::collections::BTreeSet<ChanId> = events.iter().map(|e| e.channel).collect();
    for (k, ty) in channels.iter().filter(|(k, _)| used.contains(k)) {
        writeln!(s, "chan c{} : {} = {}", k.0, ty, k.0).unwrap();
    }
    for e in events {
        writeln!(s, "c{} {}", e.channel.0, e.payload).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROGRAM: &str = "input k1 : Int\ninput k2 : Char\nmain : Sig Int\nmain = 0 :: mkSig[Int] (wait k1)\n";

    #[test]
    fn parses_header_and_events() {
        let t = parse_trace("chan k1 : Int -- ints\nchan k2 : Char\n\nk1 1\nk2 '-'\nk1 -2\n").unwrap();
        assert_eq!(t.channels.len(), 2);
        assert_eq!(t.events.len(), 3);
        assert_eq!(t.events[1].payload, Expr::Char('-'));
    }

    #[test]
    fn resolves_against_program_inputs() {
        let p = Program::from_source(PROGRAM).unwrap();
        let t = parse_trace("chan k2 : Char\nchan k1 : Int\nk1 1\nk2 'b'\n").unwrap();
        let evs = resolve_trace(&p, &t).unwrap();
        assert_eq!(evs[0].channel, ChanId(1));
        assert_eq!(evs[1].channel, ChanId(2));
    }

    #[test]
    fn rejects_bad_traces() {
        let p = Program::from_source(PROGRAM).unwrap();
        let cases = [
            ("chan k1 : Char\n", "has type Int"),
            ("chan k9 : Int\n", "no input `k9`"),
            ("chan k1 : Int\nk2 'a'\n", "undeclared channel"),
            ("chan k1 : Int\nk1 'a'\n", "payload is not a Int"),
            ("chan k1 : Int\nk1 1 +\n", "line 2"),
            ("k1 1\nchan k1 : Int\n", "must come before"),
        ];
        for (src, want) in cases {
            let e = parse_trace(src).and_then(|t| resolve_trace(&p, &t)).unwrap_err();
            assert!(e.to_string().contains(want), "{src:?}: {e}");
        }
    }

    #[test]
    fn written_traces_read_back() {
        let p = Program::from_source(PROGRAM).unwrap();
        let evs = resolve_trace(&p, &parse_trace("chan k1 : Int\nk1 5\nk1 -3\n").unwrap()).unwrap();
        let text = write_trace(&p.channels(), &evs);
        let again = resolve_trace(&p, &parse_trace(&text).unwrap()).unwrap();
        assert_eq!(evs, again);
    }
}
