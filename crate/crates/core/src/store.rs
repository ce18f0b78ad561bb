//! Heaps, the two-zone store, channel contexts and fresh allocation.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::syntax::{locations, ChanId, Loc, Term, Type, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredSignal {
    pub head: Value,
    pub tail: Value,
    pub updated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub loc: Loc,
    pub ty: Type,
    pub signal: StoredSignal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("location {0} is not allocated")]
    Missing(Loc),
    #[error("location {0} is still in the earlier heap")]
    Stale(Loc),
    #[error("location {0} is already allocated")]
    Duplicate(Loc),
}

/// An ordered sequence of cells with O(1) lookup, append and front removal.
#[derive(Clone, Debug, Default)]
pub struct Heap {
    cells: VecDeque<Cell>,
    index: HashMap<Loc, usize>,
    offset: usize,
    /// Largest location ever pushed, so allocation stays O(1).
    high: Option<Loc>,
}

impl PartialEq for Heap {
    fn eq(&self, other: &Heap) -> bool {
        self.cells == other.cells
    }
}

impl Eq for Heap {}

impl Heap {
    pub fn new() -> Heap {
        Heap::default()
    }

    pub fn from_cells(cells: impl IntoIterator<Item = Cell>) -> Result<Heap, StoreError> {
        let mut h = Heap::new();
        for c in cells {
            h.push(c)?;
        }
        Ok(h)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Cell> + ExactSizeIterator {
        self.cells.iter()
    }

    pub fn contains(&self, l: Loc) -> bool {
        self.index.contains_key(&l)
    }

    pub fn get(&self, l: Loc) -> Option<&Cell> {
        self.position(l).map(|i| &self.cells[i])
    }

    /// Position of `l` counted from the left end.
    pub fn position(&self, l: Loc) -> Option<usize> {
        self.index.get(&l).map(|abs| abs - self.offset)
    }

    pub fn at(&self, i: usize) -> Option<&Cell> {
        self.cells.get(i)
    }

    pub fn front(&self) -> Option<&Cell> {
        self.cells.front()
    }

    /// Append at the right end.
    pub fn push(&mut self, cell: Cell) -> Result<(), StoreError> {
        if self.index.contains_key(&cell.loc) {
            return Err(StoreError::Duplicate(cell.loc));
        }
        self.index.insert(cell.loc, self.offset + self.cells.len());
        self.high = self.high.max(Some(cell.loc));
        self.cells.push_back(cell);
        Ok(())
    }

    /// Remove the leftmost cell.
    pub fn pop_front(&mut self) -> Option<Cell> {
        let cell = self.cells.pop_front()?;
        self.index.remove(&cell.loc);
        self.offset += 1;
        Some(cell)
    }

    /// The largest location this heap has held. Never decreases, so
    /// locations are not reused after cells are dropped.
    pub fn max_loc(&self) -> Option<Loc> {
        self.high
    }

    /// Keep only the cells satisfying `keep`, in order.
    pub fn retain(&mut self, mut keep: impl FnMut(&Cell) -> bool) {
        let high = self.high;
        let cells = std::mem::take(&mut self.cells);
        *self = Heap::from_cells(cells.into_iter().filter(|c| keep(c))).expect("locations stay distinct");
        self.high = high;
    }

    pub fn locations(&self) -> impl Iterator<Item = Loc> + '_ {
        self.cells.iter().map(|c| c.loc)
    }
}

/// Locations reachable from `root` through cell heads and tails.
pub fn reachable(heap: &Heap, root: &Term) -> BTreeSet<Loc> {
    let mut seen = BTreeSet::new();
    let mut todo = BTreeSet::new();
    locations(root, &mut todo);
    while let Some(l) = todo.pop_first() {
        if !seen.insert(l) {
            continue;
        }
        if let Some(cell) = heap.get(l) {
            let mut next = BTreeSet::new();
            locations(&cell.signal.head, &mut next);
            locations(&cell.signal.tail, &mut next);
            todo.extend(next.into_iter().filter(|m| !seen.contains(m)));
        }
    }
    seen
}

/// Ordered channel typings `κ : A`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChannelContext {
    entries: Vec<(ChanId, Type)>,
}

impl ChannelContext {
    pub fn new() -> ChannelContext {
        ChannelContext::default()
    }

    pub fn get(&self, k: ChanId) -> Option<&Type> {
        self.entries.iter().find(|(c, _)| *c == k).map(|(_, t)| t)
    }

    pub fn contains(&self, k: ChanId) -> bool {
        self.get(k).is_some()
    }

    pub fn insert(&mut self, k: ChanId, ty: Type) -> bool {
        if self.contains(k) {
            return false;
        }
        self.entries.push((k, ty));
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ChanId, Type)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether `self` can be obtained from `other` by removing entries.
    pub fn is_subsequence_of(&self, other: &ChannelContext) -> bool {
        let mut it = other.entries.iter();
        self.entries.iter().all(|e| it.any(|o| o == e))
    }
}

/// A channel id not in `channels`.
pub fn alloc_channel(channels: &ChannelContext) -> ChanId {
    ChanId(channels.entries.iter().map(|(k, _)| k.0).max().unwrap_or(0) + 1)
}

/// The store `now ✓ earlier`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Store {
    pub now: Heap,
    pub earlier: Heap,
}

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    /// Everything stale, nothing current: the shape at the start of a step.
    pub fn all_earlier(heap: Heap) -> Store {
        Store { now: Heap::new(), earlier: heap }
    }

    pub fn lookup_now(&self, l: Loc) -> Result<&Cell, StoreError> {
        match self.now.get(l) {
            Some(c) => Ok(c),
            None if self.earlier.contains(l) => Err(StoreError::Stale(l)),
            None => Err(StoreError::Missing(l)),
        }
    }

    /// Append a fresh cell at the right end of `now`.
    pub fn insert_now_rightmost(&mut self, cell: Cell) -> Result<(), StoreError> {
        if self.earlier.contains(cell.loc) {
            return Err(StoreError::Duplicate(cell.loc));
        }
        self.now.push(cell)
    }

    /// Take the leftmost earlier cell.
    pub fn take_earliest(&mut self) -> Option<Cell> {
        self.earlier.pop_front()
    }
}

/// A location fresh for both zones of `store`.
pub fn alloc_location(store: &Store) -> Loc {
    let max = store.now.max_loc().into_iter().chain(store.earlier.max_loc()).map(|l| l.0).max();
    Loc(max.unwrap_or(0) + 1)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Environment {
    pub store: Store,
    pub channels: ChannelContext,
}

impl Environment {
    pub fn new(channels: ChannelContext) -> Environment {
        Environment { store: Store::new(), channels }
    }
}

/// `⟨v; η / Δ⟩`: the result value with the heap and channel context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineState {
    pub result: Value,
    pub heap: Heap,
    pub channels: ChannelContext,
}
