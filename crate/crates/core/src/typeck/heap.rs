//! Well-typed heaps and stores.

use std::fmt;

use serde::Serialize;

use super::{elaborate, HeapContext, TypeError, TypingContext};
use crate::store::{ChannelContext, Heap, Store};
use crate::syntax::{check_type_formation, Loc, Type};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HeapComponent {
    Type,
    Head,
    Tail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeapError {
    #[serde(serialize_with = "ser_loc")]
    pub loc: Loc,
    pub component: HeapComponent,
    pub error: TypeError,
}

fn ser_loc<S: serde::Serializer>(l: &Loc, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&l.to_string())
}

impl fmt::Display for HeapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let part = match self.component {
            HeapComponent::Type => "element type",
            HeapComponent::Head => "head",
            HeapComponent::Tail => "tail",
        };
        write!(f, "cell {} ({part}): {}", self.loc, self.error)
    }
}

impl std::error::Error for HeapError {}

pub fn heaptype(heap: &Heap) -> HeapContext {
    heap.iter().map(|c| (c.loc, c.ty.clone())).collect()
}

/// Walk `heap` left to right, typing each cell under `ctx` and then adding
/// its own location. Returns the extended context.
fn walk(mut ctx: HeapContext, channels: &ChannelContext, heap: &Heap) -> Result<HeapContext, HeapError> {
    let gamma = TypingContext::new();
    for cell in heap.iter() {
        let err = |component, error| HeapError { loc: cell.loc, component, error };
        if !check_type_formation(None, &cell.ty) {
            let e = TypeError {
                rule: "formation",
                message: "cell type is not closed and well formed".into(),
                subterm: cell.loc.to_string(),
                expected: None,
                actual: Some(cell.ty.to_string()),
            };
            return Err(err(HeapComponent::Type, e));
        }
        elaborate(&gamma, &ctx, channels, &cell.signal.head, &cell.ty).map_err(|e| err(HeapComponent::Head, e))?;
        let tail_ty = Type::later(Type::sig(cell.ty.clone()));
        elaborate(&gamma, &ctx, channels, &cell.signal.tail, &tail_ty).map_err(|e| err(HeapComponent::Tail, e))?;
        if !ctx.insert(cell.loc, cell.ty.clone()) {
            let e = TypeError {
                rule: "loc",
                message: "location bound twice".into(),
                subterm: cell.loc.to_string(),
                expected: None,
                actual: None,
            };
            return Err(err(HeapComponent::Type, e));
        }
    }
    Ok(ctx)
}

/// Each cell may only mention locations strictly to its left.
pub fn check_heap_now(channels: &ChannelContext, heap: &Heap) -> Result<(), HeapError> {
    walk(HeapContext::new(), channels, heap).map(|_| ())
}

/// Each earlier cell is typed under `ctx` extended by the cells before it.
pub fn check_heap_earlier(ctx: &HeapContext, channels: &ChannelContext, heap: &Heap) -> Result<(), HeapError> {
    walk(ctx.clone(), channels, heap).map(|_| ())
}

/// `⊢ now ✓ earlier`.
pub fn check_store(channels: &ChannelContext, store: &Store) -> Result<(), HeapError> {
    let ctx = walk(HeapContext::new(), channels, &store.now)?;
    walk(ctx, channels, &store.earlier).map(|_| ())
}
