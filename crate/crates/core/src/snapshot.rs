//! Canonical printing of machine states.
//!
//! A snapshot lists the heap cells in heap order as
//! `l<n> : <type> -> <flag>(<head>, <tail>)` with `⊤` for cells updated in
//! the step and `⊥` otherwise. Equal states print to equal bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::reactive::InputEvent;
pub use crate::store::reachable;
use crate::store::{Heap, MachineState};
use crate::syntax::{map_children, Loc, Term};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CellView {
    pub loc: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub flag: String,
    pub head: String,
    pub tail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    /// 0 for the initial state, then one per event.
    pub step: usize,
    pub event: Option<String>,
    /// Printed only for the initial state; it never changes afterwards.
    pub result: Option<String>,
    /// Printed when the channel context changed.
    pub channels: Option<Vec<String>>,
    pub cells: Vec<CellView>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SnapshotOptions {
    /// Drop cells the result value cannot reach.
    pub hide_unreachable: bool,
}

/// Snapshots of a whole run, where `states[0]` is the initial state and
/// `states[i]` follows `events[i - 1]`.
pub fn snapshots(states: &[MachineState], events: &[InputEvent], opts: SnapshotOptions) -> Vec<Snapshot> {
    let mut out = Vec::new();
    let mut prev_channels: Option<Vec<String>> = None;
    for (i, st) in states.iter().enumerate() {
        let visible = opts.hide_unreachable.then(|| reachable(&st.heap, &st.result));
        let channels: Vec<String> = st.channels.iter().map(|(k, t)| format!("{k} : {t}")).collect();
        let changed = prev_channels.as_ref() != Some(&channels);
        prev_channels = Some(channels.clone());
        out.push(Snapshot {
            step: i,
            event: (i > 0).then(|| events[i - 1].to_string()),
            result: (i == 0).then(|| st.result.to_string()),
            channels: changed.then_some(channels),
            cells: st
                .heap
                .iter()
                .filter(|c| visible.as_ref().is_none_or(|v| v.contains(&c.loc)))
                .map(|c| CellView {
                    loc: c.loc.to_string(),
                    ty: c.ty.to_string(),
                    flag: flag(c.signal.updated).into(),
                    head: c.signal.head.to_string(),
                    tail: c.signal.tail.to_string(),
                })
                .collect(),
        });
    }
    out
}

pub fn flag(updated: bool) -> &'static str {
    if updated {
        "⊤"
    } else {
        "⊥"
    }
}

impl Snapshot {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match &self.event {
            None => writeln!(s, "== init ==").unwrap(),
            Some(e) => writeln!(s, "== step {}: {e} ==", self.step).unwrap(),
        }
        if let Some(r) = &self.result {
            writeln!(s, "result: {r}").unwrap();
        }
        if let Some(cs) = &self.channels {
            writeln!(s, "channels: {}", cs.join(", ")).unwrap();
        }
        for c in &self.cells {
            writeln!(s, "{} : {} -> {}({}, {})", c.loc, c.ty, c.flag, c.head, c.tail).unwrap();
        }
        s
    }
}

pub fn to_text(snaps: &[Snapshot]) -> String {
    snaps.iter().map(Snapshot::to_text).collect()
}

/// One JSON object per line.
pub fn to_json_lines(snaps: &[Snapshot]) -> String {
    snaps.iter().map(|s| serde_json::to_string(s).expect("snapshot serializes") + "\n").collect()
}

/// Rename locations in all states so that those kept by `keep` become
/// `l1, l2, ...` in increasing order of their original numbers.
pub fn renumber_locations(states: &[MachineState], keep: &BTreeSet<Loc>) -> Vec<MachineState> {
    let map: BTreeMap<Loc, Loc> = keep.iter().enumerate().map(|(i, l)| (*l, Loc(i as u32 + 1))).collect();
    // Locations outside `keep` go after every kept one, preserving order.
    let offset = keep.len() as u32;
    let rename = |l: Loc| map.get(&l).copied().unwrap_or(Loc(l.0 + offset + 1_000_000));
    states
        .iter()
        .map(|st| {
            let cells = st.heap.iter().map(|c| {
                let mut c = c.clone();
                c.loc = rename(c.loc);
                c.signal.head = rename_term(&c.signal.head, &rename);
                c.signal.tail = rename_term(&c.signal.tail, &rename);
                c
            });
            MachineState {
                result: rename_term(&st.result, &rename),
                heap: Heap::from_cells(cells).expect("renaming is injective"),
                channels: st.channels.clone(),
            }
        })
        .collect()
}

fn rename_term(t: &Arc<Term>, rename: &dyn Fn(Loc) -> Loc) -> Arc<Term> {
    match &**t {
        Term::Loc(l) => Arc::new(Term::Loc(rename(*l))),
        _ => map_children(t, &mut |c| rename_term(c, rename)),
    }
}

/// Locations visible in any state of the run, for [`renumber_locations`].
pub fn visible_locations(states: &[MachineState]) -> BTreeSet<Loc> {
    states.iter().flat_map(|st| reachable(&st.heap, &st.result)).collect()
}
