use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rustc_hash::FxHashMap as HashMap;

use super::packet::{Packet, UnitId};
use crate::pattern::ReceiverSet;

/// Queue identity: a loss pattern plus the intended receivers still waiting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueueKey {
    pub pattern: ReceiverSet,
    pub pending: ReceiverSet,
}

impl QueueKey {
    /// Union of holders and waiters; units sharing it form one code group.
    pub fn span(self) -> ReceiverSet {
        self.pattern.union(self.pending)
    }
}

/// Outstanding units grouped by loss state, FIFO within a queue.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RescueQueues {
    queues: BTreeMap<QueueKey, VecDeque<UnitId>>,
}

impl RescueQueues {
    pub fn from_units<'a>(units: impl IntoIterator<Item = &'a Packet>) -> Self {
        let mut queues: BTreeMap<QueueKey, VecDeque<UnitId>> = BTreeMap::new();
        for u in units {
            let key = QueueKey {
                pattern: u.pattern,
                pending: u.pending,
            };
            queues.entry(key).or_default().push_back(u.id);
        }
        RescueQueues { queues }
    }

    pub fn get(&self, key: QueueKey) -> Option<&VecDeque<UnitId>> {
        self.queues.get(&key)
    }

    /// Number of non-empty queues.
    pub fn len(&self) -> usize {
        self.queues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queues.is_empty()
    }

    pub fn total(&self) -> usize {
        self.queues.values().map(VecDeque::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (QueueKey, &VecDeque<UnitId>)> {
        self.queues.iter().map(|(k, v)| (*k, v))
    }
}

/// Partner lookups per bucket before giving up on it.
const SCAN_LIMIT: usize = 32;
/// Largest free set whose subsets are enumerated instead of scanning keys.
const SUBSET_BITS: u32 = 12;

/// One round's transmissions; each entry lists the units XORed together.
pub type Schedule = Vec<Vec<UnitId>>;

/// FIFO of `(unit, version)` entries; outdated entries are dropped lazily.
#[derive(Clone, Debug, Default)]
struct Lane {
    entries: VecDeque<(UnitId, u32)>,
    live: usize,
    /// Entries before this one were checked this round.
    cursor: usize,
    epoch: u32,
}

impl Lane {
    fn push(&mut self, id: UnitId, version: u32) {
        self.entries.push_back((id, version));
        self.live += 1;
    }
}

/// Outstanding units indexed by span, by exact queue and by waiting set.
///
/// Scheduling detaches every unit it sends; the engine attaches survivors
/// again once feedback has moved them. Work per round therefore follows the
/// number of transmissions rather than the number of waiting units.
#[derive(Clone, Debug, Default)]
pub struct Scheduler {
    /// span → waiting set → queue.
    spans: HashMap<u64, BTreeMap<u64, Lane>>,
    /// `tiers[w]`: span → queued units of pattern weight `w` in it.
    tiers: Vec<HashMap<u64, usize>>,
    /// waiting set → queued units with it.
    blocks: HashMap<u64, usize>,
    /// `blocks` keys, heaviest first.
    keys: BTreeSet<(Reverse<u32>, u64)>,
    /// (waiting set, holder) → queue of units that holder can reproduce.
    holders: HashMap<(u64, u32), Lane>,
    version: Vec<u32>,
    attached: Vec<bool>,
    stamp: Vec<u32>,
    epoch: u32,
    len: usize,
}

impl Scheduler {
    pub fn new(receivers: usize) -> Self {
        Scheduler {
            tiers: vec![HashMap::default(); receivers + 1],
            ..Self::default()
        }
    }

    /// Units currently queued.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn grow(&mut self, units: usize) {
        if self.version.len() < units {
            self.version.resize(units, 0);
            self.attached.resize(units, false);
            self.stamp.resize(units, 0);
        }
    }

    /// Queues `unit` under its current state.
    pub fn attach(&mut self, unit: &Packet) {
        let id = unit.id as usize;
        self.grow(id + 1);
        if self.attached[id] || unit.pending.is_empty() {
            return;
        }
        let v = self.version[id];
        let (pattern, pending) = (unit.pattern.mask(), unit.pending.mask());
        let span = pattern | pending;
        self.spans
            .entry(span)
            .or_default()
            .entry(pending)
            .or_default()
            .push(unit.id, v);
        *self.tiers[pattern.count_ones() as usize]
            .entry(span)
            .or_insert(0) += 1;
        let count = self.blocks.entry(pending).or_insert(0);
        if *count == 0 {
            self.keys.insert((Reverse(pending.count_ones()), pending));
        }
        *count += 1;
        for r in bits(pattern) {
            self.holders
                .entry((pending, r))
                .or_default()
                .push(unit.id, v);
        }
        self.attached[id] = true;
        self.len += 1;
    }

    /// Unqueues `unit`; call before its state changes.
    pub fn detach(&mut self, unit: &Packet) {
        let id = unit.id as usize;
        if id >= self.attached.len() || !self.attached[id] {
            return;
        }
        self.attached[id] = false;
        self.version[id] = self.version[id].wrapping_add(1);
        self.len -= 1;
        let (pattern, pending) = (unit.pattern.mask(), unit.pending.mask());
        let span = pattern | pending;
        if let Some(lanes) = self.spans.get_mut(&span) {
            if release(lanes.get_mut(&pending), &self.version) {
                lanes.remove(&pending);
            }
            if lanes.is_empty() {
                self.spans.remove(&span);
            }
        }
        let tier = &mut self.tiers[pattern.count_ones() as usize];
        if let Some(c) = tier.get_mut(&span) {
            *c -= 1;
            if *c == 0 {
                tier.remove(&span);
            }
        }
        if let Some(c) = self.blocks.get_mut(&pending) {
            *c -= 1;
            if *c == 0 {
                self.blocks.remove(&pending);
                self.keys.remove(&(Reverse(pending.count_ones()), pending));
            }
        }
        for r in bits(pattern) {
            if release(self.holders.get_mut(&(pending, r)), &self.version) {
                self.holders.remove(&(pending, r));
            }
        }
    }

    fn current(&self, (id, v): (UnitId, u32)) -> bool {
        self.attached[id as usize] && self.version[id as usize] == v
    }

    fn used(&self, id: UnitId) -> bool {
        self.stamp[id as usize] == self.epoch
    }

    fn mark(&mut self, id: UnitId) {
        self.stamp[id as usize] = self.epoch;
    }

    fn begin(&mut self, units: usize) {
        self.grow(units);
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Every unit alone.
    pub fn solo(live: &[UnitId]) -> Schedule {
        live.iter().map(|&id| vec![id]).collect()
    }

    /// Lightest pattern weight among queued units.
    pub fn lightest(&self) -> Option<usize> {
        self.tiers.iter().position(|t| !t.is_empty())
    }

    /// Schedules one round from the queued units and detaches those sent.
    ///
    /// Units sharing a span are combined first, drawing one unit from each
    /// queue whose waiting set is disjoint from those already drawn. Units
    /// left alone then seed general groups: each addition must wait only on
    /// receivers holding everything chosen so far and must itself be held
    /// by every receiver already served. `rank[r]` orders the seeds.
    ///
    /// With `tier` set, only units of that pattern weight lead a group;
    /// other units are sent only as partners and otherwise wait.
    pub fn coded(&mut self, units: &[Packet], rank: &[usize], tier: Option<usize>) -> Schedule {
        self.begin(units.len());
        let mut out = Schedule::new();
        let mut leaders = Vec::new();
        let mut order: Vec<u64> = match tier {
            Some(w) => self
                .tiers
                .get(w)
                .map(|t| t.keys().copied().collect())
                .unwrap_or_default(),
            None => self.spans.keys().copied().collect(),
        };
        order.sort_unstable();
        for span in order {
            self.by_span(span, tier, &mut out, &mut leaders);
        }
        self.cascade(units, leaders, rank, &mut out);
        for tx in &out {
            for &id in tx {
                self.detach(&units[id as usize]);
            }
        }
        out
    }

    /// Next current entry of a lane, removed from it.
    fn pop(&mut self, span: u64, block: u64) -> Option<UnitId> {
        loop {
            let lane = self.spans.get_mut(&span)?.get_mut(&block)?;
            let entry = lane.entries.pop_front()?;
            if self.current(entry) {
                return Some(entry.0);
            }
        }
    }

    fn by_span(
        &mut self,
        span: u64,
        tier: Option<usize>,
        out: &mut Schedule,
        leaders: &mut Vec<UnitId>,
    ) {
        struct Run {
            block: u64,
            lead: bool,
            left: usize,
        }
        let Some(group) = self.spans.get(&span) else {
            return;
        };
        let mut lanes: Vec<Run> = group
            .iter()
            .map(|(&block, lane)| Run {
                block,
                lead: tier.map_or(true, |w| (span & !block).count_ones() as usize == w),
                left: lane.live,
            })
            .collect();
        let by_size = |a: &Run, b: &Run| {
            b.left
                .cmp(&a.left)
                .then(b.block.count_ones().cmp(&a.block.count_ones()))
                .then(a.block.cmp(&b.block))
        };
        loop {
            lanes.retain(|l| l.left > 0);
            if !lanes.iter().any(|l| l.lead) {
                return;
            }
            lanes.sort_by(|a, b| b.lead.cmp(&a.lead).then(by_size(a, b)));
            lanes[1..].sort_by(by_size);
            let mut taken = lanes[0].block;
            let mut chosen = vec![0];
            for (i, l) in lanes.iter().enumerate().skip(1) {
                if l.block & taken == 0 {
                    taken |= l.block;
                    chosen.push(i);
                }
            }
            if chosen.len() == 1 {
                let block = lanes[0].block;
                while let Some(id) = self.pop(span, block) {
                    leaders.push(id);
                }
                lanes[0].left = 0;
                continue;
            }
            let reps = chosen.iter().map(|&i| lanes[i].left).min().unwrap_or(0);
            for _ in 0..reps {
                let mut tx = Vec::with_capacity(chosen.len());
                for &i in &chosen {
                    if let Some(id) = self.pop(span, lanes[i].block) {
                        self.mark(id);
                        tx.push(id);
                    }
                }
                out.push(tx);
            }
            for &i in &chosen {
                lanes[i].left -= reps;
            }
        }
    }

    fn cascade(
        &mut self,
        units: &[Packet],
        leaders: Vec<UnitId>,
        rank: &[usize],
        out: &mut Schedule,
    ) {
        let mut keyed: Vec<(usize, UnitId)> = leaders
            .into_iter()
            .map(|id| {
                let lead = bits(units[id as usize].pending.mask())
                    .map(|r| rank[r as usize])
                    .min()
                    .unwrap_or(usize::MAX);
                (lead, id)
            })
            .collect();
        keyed.sort_unstable();
        let leaders: Vec<UnitId> = keyed.into_iter().map(|(_, id)| id).collect();

        let mut candidates = Vec::new();
        for &x in &leaders {
            if self.used(x) {
                continue;
            }
            self.mark(x);
            let ux = &units[x as usize];
            let mut waiting = ux.pending.mask();
            let mut held = ux.pattern.mask();
            let mut group = vec![x];

            candidates.clear();
            if held != 0 {
                let bits = held.count_ones();
                if bits <= SUBSET_BITS && (16usize << bits) <= self.blocks.len() {
                    let mut sub = held;
                    while sub != 0 {
                        if self.blocks.contains_key(&sub) {
                            candidates.push(sub);
                        }
                        sub = (sub - 1) & held;
                    }
                    candidates.sort_unstable_by_key(|&b: &u64| (Reverse(b.count_ones()), b));
                } else {
                    candidates.extend(
                        self.keys
                            .iter()
                            .map(|&(_, b)| b)
                            .filter(|&b| b & !held == 0),
                    );
                }
            }
            for &block in &candidates {
                if block & waiting != 0 || block & !held != 0 {
                    continue;
                }
                if let Some(y) = self.partner(units, block, waiting) {
                    self.mark(y);
                    group.push(y);
                    waiting |= block;
                    held &= units[y as usize].pattern.mask();
                }
            }
            out.push(group);
        }
    }

    /// First unused queued unit waiting on exactly `block` whose pattern
    /// covers `waiting`.
    fn partner(&mut self, units: &[Packet], block: u64, waiting: u64) -> Option<UnitId> {
        let epoch = self.epoch;
        let (version, attached, stamp) = (&self.version, &self.attached, &self.stamp);
        let current = |(id, v): (UnitId, u32)| attached[id as usize] && version[id as usize] == v;
        // Any receiver in `waiting` must hold the partner; use the shortest
        // of their queues.
        let r =
            bits(waiting).min_by_key(|&r| self.holders.get(&(block, r)).map_or(0, |l| l.live))?;
        let lane = self.holders.get_mut(&(block, r))?;
        if lane.epoch != epoch {
            lane.epoch = epoch;
            lane.cursor = 0;
        }
        while let Some(&front) = lane.entries.front() {
            if current(front) {
                break;
            }
            lane.entries.pop_front();
            lane.cursor = lane.cursor.saturating_sub(1);
        }
        // Skip the prefix already taken this round.
        while let Some(&e) = lane.entries.get(lane.cursor) {
            if current(e) && stamp[e.0 as usize] != epoch {
                break;
            }
            lane.cursor += 1;
        }
        let mut scanned = 0;
        for &e in lane.entries.range(lane.cursor..) {
            if !current(e) || stamp[e.0 as usize] == epoch {
                continue;
            }
            if units[e.0 as usize].pattern.mask() & waiting == waiting {
                return Some(e.0);
            }
            scanned += 1;
            if scanned >= SCAN_LIMIT {
                break;
            }
        }
        None
    }
}

/// Decrements a lane's live count; true when it became empty.
fn release(lane: Option<&mut Lane>, version: &[u32]) -> bool {
    let Some(lane) = lane else {
        return false;
    };
    lane.live -= 1;
    if lane.live == 0 {
        return true;
    }
    if lane.entries.len() > 2 * lane.live + 64 {
        lane.entries.retain(|&(id, v)| version[id as usize] == v);
        lane.cursor = 0;
    }
    false
}

/// Zero-based indices of the set bits of `mask`.
fn bits(mut mask: u64) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        (mask != 0).then(|| {
            let b = mask.trailing_zeros();
            mask &= mask - 1;
            b
        })
    })
}
