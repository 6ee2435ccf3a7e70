//! Local-search engine shared by the solver and the rescheduler.
//!
//! A [`Problem`] is a set of movable items (registrations) that can each be
//! placed into one compatible slot or left out. Leaving an item out costs its
//! `unassigned` vector; placing it on day `d` costs `day_cost[d]`. Fixed
//! assignments are folded into the remaining session minutes and beds.
//!
//! The state is kept feasible at all times: every move removes items first,
//! then inserts with a capacity and bed check, and rolls back on failure or on
//! a worsening result.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::Cost;
use crate::model::{Assignment, Day, Instance, InstanceIndex, OrId, Registration, Schedule, SessionId, WardId};
use crate::solver::Clock;
use crate::stays::for_each_stay;

const NONE: u32 = u32::MAX;
/// The clock is consulted once every this many iterations.
const CLOCK_STRIDE: u64 = 128;
/// Left-out items tried after each compound move.
const REPAIR_TRIES: usize = 2;
/// Left-out items drawn into a ruin-and-recreate move.
const RUIN_SAMPLE: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct SlotSpec {
    pub or_id: OrId,
    pub session: SessionId,
    pub day: Day,
    pub specialty: WardId,
    pub capacity: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct ItemSpec {
    pub registration: Registration,
    pub unassigned: Cost,
    /// Indexed by day, `0..=horizon`.
    pub day_cost: Vec<Cost>,
    /// Slot tried first during construction, if still compatible.
    pub home: Option<(OrId, SessionId, Day)>,
}

impl ItemSpec {
    pub fn flat(registration: Registration, unassigned: Cost, horizon: u32) -> Self {
        Self {
            registration,
            unassigned,
            day_cost: vec![Cost::ZERO; horizon as usize + 1],
            home: None,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub slots: Vec<SlotSpec>,
    pub items: Vec<ItemSpec>,
    pub fixed: Vec<Assignment>,
    /// Remaining minutes per slot once fixed assignments are placed.
    slot_cap: Vec<i64>,
    /// Remaining beds per cell `ward_index * horizon + day - 1`.
    cell_cap: Vec<i32>,
    item_slots: Vec<Vec<u32>>,
    /// `item_cells[item][day]` lists the cells occupied when operated on `day`.
    item_cells: Vec<Vec<Vec<u32>>>,
    home_slot: Vec<u32>,
}

impl Problem {
    /// Slots are every MSS slot of `instance`, ordered by day, OR and session.
    /// Beds come from `instance.beds`; `fixed` assignments consume capacity first.
    pub fn new(instance: &Instance, items: Vec<ItemSpec>, fixed: Vec<Assignment>) -> Self {
        let index = InstanceIndex::new(instance);
        let horizon = instance.horizon;
        let slots: Vec<SlotSpec> = index
            .slots_by_day()
            .into_iter()
            .map(|(day, or_id, session, specialty)| SlotSpec {
                or_id,
                session,
                day,
                specialty,
                capacity: index.capacity(or_id, session).unwrap_or(0),
            })
            .collect();
        let slot_pos: BTreeMap<(OrId, SessionId, Day), u32> = slots
            .iter()
            .enumerate()
            .map(|(i, s)| ((s.or_id, s.session, s.day), i as u32))
            .collect();

        let mut ward_pos: BTreeMap<WardId, usize> = BTreeMap::new();
        for w in index.wards() {
            let n = ward_pos.len();
            ward_pos.entry(w).or_insert(n);
        }
        for reg in items
            .iter()
            .map(|i| &i.registration)
            .chain(fixed.iter().filter_map(|a| index.registration(a.registration_id)))
        {
            let n = ward_pos.len();
            ward_pos.entry(reg.specialty).or_insert(n);
        }
        let h = horizon as usize;
        let mut cell_cap = vec![0i32; ward_pos.len() * h];
        for (&ward, &w) in &ward_pos {
            for day in 1..=horizon {
                let avail = index.beds(ward, day).unwrap_or(0);
                cell_cap[w * h + day as usize - 1] = i32::try_from(avail).unwrap_or(i32::MAX);
            }
        }
        let cell = |ward: WardId, day: Day| ward_pos[&ward] * h + day as usize - 1;

        let mut slot_cap: Vec<i64> = slots.iter().map(|s| i64::from(s.capacity)).collect();
        for a in &fixed {
            let Some(reg) = index.registration(a.registration_id) else {
                continue;
            };
            if let Some(&s) = slot_pos.get(&(a.or_id, a.session, a.day)) {
                slot_cap[s as usize] -= i64::from(reg.surgery_duration);
            }
            for_each_stay(reg, a.day, horizon, |day, ward| cell_cap[cell(ward, day)] -= 1);
        }

        let mut item_slots = Vec::with_capacity(items.len());
        let mut item_cells = Vec::with_capacity(items.len());
        let mut home_slot = Vec::with_capacity(items.len());
        for item in &items {
            let reg = &item.registration;
            item_slots.push(
                slots
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.specialty == reg.specialty)
                    .map(|(i, _)| i as u32)
                    .collect::<Vec<_>>(),
            );
            let mut by_day = vec![Vec::new(); h + 1];
            for (day, cells) in by_day.iter_mut().enumerate().skip(1) {
                for_each_stay(reg, day as Day, horizon, |d, ward| cells.push(cell(ward, d) as u32));
            }
            item_cells.push(by_day);
            home_slot.push(
                item.home
                    .and_then(|k| slot_pos.get(&k).copied())
                    .filter(|&s| slots[s as usize].specialty == reg.specialty)
                    .unwrap_or(NONE),
            );
        }

        Self {
            slots,
            items,
            fixed,
            slot_cap,
            cell_cap,
            item_slots,
            item_cells,
            home_slot,
        }
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    fn day_of(&self, slot: u32) -> usize {
        self.slots[slot as usize].day as usize
    }

    fn duration(&self, item: u32) -> i64 {
        i64::from(self.items[item as usize].registration.surgery_duration)
    }

    fn placed_cost(&self, item: u32, slot: u32) -> Cost {
        self.items[item as usize].day_cost[self.day_of(slot)]
    }

    fn unassigned_cost(&self, item: u32) -> Cost {
        self.items[item as usize].unassigned
    }

    /// Cost of the best possible outcome: every item placed on its cheapest day.
    pub fn lower_bound(&self) -> Cost {
        let mut bound = Cost::ZERO;
        for (i, slots) in self.item_slots.iter().enumerate() {
            let best = slots
                .iter()
                .map(|&s| self.placed_cost(i as u32, s))
                .min()
                .unwrap_or(self.items[i].unassigned);
            bound += best.min(self.items[i].unassigned);
        }
        bound
    }

    /// Converts a placement vector (slot index or `None` per item) into a schedule,
    /// fixed assignments included.
    pub fn to_schedule(&self, placement: &[Option<u32>]) -> Schedule {
        let mut out = self.fixed.clone();
        for (item, slot) in placement.iter().enumerate() {
            if let Some(s) = *slot {
                let slot = &self.slots[s as usize];
                let reg = &self.items[item].registration;
                out.push(Assignment {
                    registration_id: reg.id,
                    priority: reg.priority,
                    or_id: slot.or_id,
                    session: slot.session,
                    day: slot.day,
                });
            }
        }
        Schedule::new(out)
    }

    /// Slot index of `(or, session, day)` if it is a slot of this problem.
    pub fn slot_index(&self, or_id: OrId, session: SessionId, day: Day) -> Option<u32> {
        self.slots
            .iter()
            .position(|s| s.or_id == or_id && s.session == session && s.day == day)
            .map(|i| i as u32)
    }
}

/// Incremental feasible state over a [`Problem`].
#[derive(Clone)]
pub(crate) struct State<'p> {
    p: &'p Problem,
    slot_of: Vec<u32>,
    load: Vec<i64>,
    members: Vec<Vec<u32>>,
    occ: Vec<i32>,
    cell_members: Vec<Vec<u32>>,
    unassigned: Vec<u32>,
    assigned: Vec<u32>,
    /// Position of an item in `unassigned` or `assigned`, whichever holds it.
    pos: Vec<u32>,
    cost: Cost,
}

impl<'p> State<'p> {
    pub fn empty(p: &'p Problem) -> Self {
        let n = p.items.len();
        Self {
            p,
            slot_of: vec![NONE; n],
            load: vec![0; p.slots.len()],
            members: vec![Vec::new(); p.slots.len()],
            occ: vec![0; p.cell_cap.len()],
            cell_members: vec![Vec::new(); p.cell_cap.len()],
            unassigned: (0..n as u32).collect(),
            assigned: Vec::new(),
            pos: (0..n as u32).collect(),
            cost: p.items.iter().map(|i| i.unassigned).fold(Cost::ZERO, |a, b| a + b),
        }
    }

    pub fn cost(&self) -> Cost {
        self.cost
    }

    pub fn placement(&self) -> Vec<Option<u32>> {
        self.slot_of
            .iter()
            .map(|&s| if s == NONE { None } else { Some(s) })
            .collect()
    }

    pub fn slot_of(&self, item: u32) -> Option<u32> {
        let s = self.slot_of[item as usize];
        (s != NONE).then_some(s)
    }

    fn cells(&self, item: u32, slot: u32) -> &'p [u32] {
        &self.p.item_cells[item as usize][self.p.day_of(slot)]
    }

    pub fn fits(&self, item: u32, slot: u32) -> bool {
        let p = self.p;
        let spec = &p.slots[slot as usize];
        if spec.specialty != p.items[item as usize].registration.specialty {
            return false;
        }
        if self.load[slot as usize] + p.duration(item) > p.slot_cap[slot as usize] {
            return false;
        }
        self.cells(item, slot)
            .iter()
            .all(|&c| self.occ[c as usize] < p.cell_cap[c as usize])
    }

    fn list_remove(list: &mut Vec<u32>, pos: &mut [u32], item: u32) {
        let at = pos[item as usize] as usize;
        let last = list.pop().expect("non-empty list");
        if last != item {
            list[at] = last;
            pos[last as usize] = at as u32;
        }
    }

    fn list_push(list: &mut Vec<u32>, pos: &mut [u32], item: u32) {
        pos[item as usize] = list.len() as u32;
        list.push(item);
    }

    /// Places an unassigned item without checking feasibility.
    pub fn assign(&mut self, item: u32, slot: u32) {
        debug_assert_eq!(self.slot_of[item as usize], NONE);
        let p = self.p;
        self.slot_of[item as usize] = slot;
        self.load[slot as usize] += p.duration(item);
        self.members[slot as usize].push(item);
        for &c in self.cells(item, slot) {
            self.occ[c as usize] += 1;
            self.cell_members[c as usize].push(item);
        }
        Self::list_remove(&mut self.unassigned, &mut self.pos, item);
        Self::list_push(&mut self.assigned, &mut self.pos, item);
        self.cost += p.placed_cost(item, slot) - p.unassigned_cost(item);
    }

    pub fn unassign(&mut self, item: u32) {
        let slot = self.slot_of[item as usize];
        debug_assert_ne!(slot, NONE);
        let p = self.p;
        self.slot_of[item as usize] = NONE;
        self.load[slot as usize] -= p.duration(item);
        remove_value(&mut self.members[slot as usize], item);
        for &c in self.cells(item, slot) {
            self.occ[c as usize] -= 1;
            remove_value(&mut self.cell_members[c as usize], item);
        }
        Self::list_remove(&mut self.assigned, &mut self.pos, item);
        Self::list_push(&mut self.unassigned, &mut self.pos, item);
        self.cost += p.unassigned_cost(item) - p.placed_cost(item, slot);
    }

    /// Cheapest feasible slot for an unassigned item; ties go to the earliest
    /// slot in day, OR, session order.
    pub fn best_slot(&self, item: u32) -> Option<u32> {
        let mut best: Option<(Cost, u32)> = None;
        for &s in &self.p.item_slots[item as usize] {
            if !self.fits(item, s) {
                continue;
            }
            let c = self.p.placed_cost(item, s);
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, s));
            }
        }
        best.map(|(_, s)| s)
    }

    pub fn is_consistent(&self) -> bool {
        let p = self.p;
        let loads_ok = self.load.iter().zip(&p.slot_cap).all(|(&l, &c)| l <= c || l == 0);
        let beds_ok = self.occ.iter().zip(&p.cell_cap).all(|(&o, &c)| o <= c || o == 0);
        let cost: Cost = (0..p.items.len() as u32)
            .map(|i| match self.slot_of(i) {
                Some(s) => p.placed_cost(i, s),
                None => p.unassigned_cost(i),
            })
            .fold(Cost::ZERO, |a, b| a + b);
        loads_ok && beds_ok && cost == self.cost
    }
}

fn remove_value(list: &mut Vec<u32>, value: u32) {
    if let Some(i) = list.iter().position(|&v| v == value) {
        list.swap_remove(i);
    }
}

/// Greedy construction: items in `order`, each into its home slot when that
/// fits, otherwise into its cheapest fitting slot.
pub(crate) fn construct<'p>(p: &'p Problem, order: &[u32]) -> State<'p> {
    let mut state = State::empty(p);
    place_in_order(&mut state, order);
    state
}

fn place_in_order(state: &mut State<'_>, order: &[u32]) {
    let p = state.p;
    for &item in order {
        if state.slot_of(item).is_some() {
            continue;
        }
        let home = p.home_slot[item as usize];
        if home != NONE && state.fits(item, home) {
            state.assign(item, home);
        } else if let Some(s) = state.best_slot(item) {
            state.assign(item, s);
        }
    }
}

/// Construction order: most expensive-to-leave-out first, registration id
/// within a class; `rng` permutes items inside each class.
pub(crate) fn construction_order(p: &Problem, rng: Option<&mut ChaCha8Rng>) -> Vec<u32> {
    let mut order: Vec<u32> = (0..p.items.len() as u32).collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (&p.items[a as usize], &p.items[b as usize]);
        ib.unassigned
            .cmp(&ia.unassigned)
            .then(ia.registration.id.cmp(&ib.registration.id))
    });
    if let Some(rng) = rng {
        let mut start = 0;
        while start < order.len() {
            let class = p.items[order[start] as usize].unassigned;
            let mut end = start;
            while end < order.len() && p.items[order[end] as usize].unassigned == class {
                end += 1;
            }
            order[start..end].shuffle(rng);
            start = end;
        }
    }
    order
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchParams {
    pub seed: u64,
    pub time_limit: f64,
    pub max_iterations: Option<u64>,
    pub max_stall: u64,
    pub restarts: bool,
}

pub(crate) struct SearchResult {
    pub best: Vec<Option<u32>>,
    pub best_cost: Cost,
    pub iterations: u64,
    pub reached_bound: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Rejected,
    Accepted,
}

/// Move machinery over a state, with an undo journal.
struct Mover<'p> {
    state: State<'p>,
    journal: Vec<(u32, u32)>,
    ejected: Vec<u32>,
}

impl<'p> Mover<'p> {
    fn begin(&mut self) -> Cost {
        self.journal.clear();
        self.state.cost
    }

    fn do_unassign(&mut self, item: u32) {
        let prev = self.state.slot_of[item as usize];
        self.journal.push((item, prev));
        self.state.unassign(item);
    }

    fn do_assign(&mut self, item: u32, slot: u32) {
        self.journal.push((item, NONE));
        self.state.assign(item, slot);
    }

    fn rollback(&mut self) {
        while let Some((item, prev)) = self.journal.pop() {
            if self.state.slot_of[item as usize] != NONE {
                self.state.unassign(item);
            }
            if prev != NONE {
                self.state.assign(item, prev);
            }
        }
    }

    /// Keeps the move if it does not worsen the cost.
    fn settle(&mut self, before: Cost) -> Verdict {
        if self.state.cost <= before {
            self.journal.clear();
            Verdict::Accepted
        } else {
            self.rollback();
            Verdict::Rejected
        }
    }

    /// Places each ejected item back into its cheapest feasible slot, if any.
    fn reinsert_ejected(&mut self, rng: &mut ChaCha8Rng) {
        let mut ejected = core::mem::take(&mut self.ejected);
        ejected.shuffle(rng);
        for &e in &ejected {
            if let Some(s) = self.state.best_slot(e) {
                self.do_assign(e, s);
            }
        }
        self.ejected = ejected;
    }

    fn insert(&mut self, item: u32) -> Verdict {
        let before = self.begin();
        match self.state.best_slot(item) {
            Some(s) => {
                self.do_assign(item, s);
                self.settle(before)
            }
            None => Verdict::Rejected,
        }
    }

    /// Tries to place a few left-out items, most expensive first among a
    /// random sample, into whatever room the move has freed.
    fn repair(&mut self, rng: &mut ChaCha8Rng) {
        for _ in 0..REPAIR_TRIES {
            let Some(u) = pick_unassigned(&self.state, rng) else {
                return;
            };
            if let Some(s) = self.state.best_slot(u) {
                self.do_assign(u, s);
            }
        }
    }

    /// Eject-and-move: puts `item` (assigned or not) into a random compatible
    /// slot, removing at most two items that block it, then re-places the
    /// removed items and repairs.
    fn eject_move(&mut self, item: u32, rng: &mut ChaCha8Rng) -> Verdict {
        let p = self.state.p;
        let slots = &p.item_slots[item as usize];
        if slots.is_empty() {
            return Verdict::Rejected;
        }
        let slot = slots[rng.random_range(0..slots.len())];
        let current = self.state.slot_of[item as usize];
        if slot == current {
            return Verdict::Rejected;
        }
        let value = p.unassigned_cost(item);
        let strict = rng.random_bool(0.9);
        let cheaper = |i: u32| !strict || p.unassigned_cost(i) <= value;
        let before = self.begin();
        if current != NONE {
            self.do_unassign(item);
        }
        self.ejected.clear();

        let excess = self.state.load[slot as usize] + p.duration(item) - p.slot_cap[slot as usize];
        if excess > 0 {
            let members = &self.state.members[slot as usize];
            let singles: Vec<u32> = members
                .iter()
                .copied()
                .filter(|&m| p.duration(m) >= excess && cheaper(m))
                .collect();
            if !singles.is_empty() {
                self.ejected.push(singles[rng.random_range(0..singles.len())]);
            } else if members.len() >= 2 {
                for _ in 0..6 {
                    let a = members[rng.random_range(0..members.len())];
                    let b = members[rng.random_range(0..members.len())];
                    if a != b && p.duration(a) + p.duration(b) >= excess && cheaper(a) && cheaper(b) {
                        self.ejected.push(a);
                        self.ejected.push(b);
                        break;
                    }
                }
            }
            if self.ejected.is_empty() {
                self.rollback();
                return Verdict::Rejected;
            }
        }

        for &c in self.state.cells(item, slot) {
            let c = c as usize;
            let freed = self
                .ejected
                .iter()
                .filter(|e| self.state.cell_members[c].contains(e))
                .count() as i32;
            let over = self.state.occ[c] - freed + 1 - p.cell_cap[c];
            if over <= 0 {
                continue;
            }
            if over > 1 || self.ejected.len() >= 2 {
                self.rollback();
                return Verdict::Rejected;
            }
            let occupants: Vec<u32> = self.state.cell_members[c]
                .iter()
                .copied()
                .filter(|o| !self.ejected.contains(o) && cheaper(*o))
                .collect();
            if occupants.is_empty() {
                self.rollback();
                return Verdict::Rejected;
            }
            self.ejected.push(occupants[rng.random_range(0..occupants.len())]);
        }

        for i in 0..self.ejected.len() {
            let e = self.ejected[i];
            self.do_unassign(e);
        }
        if !self.state.fits(item, slot) {
            self.rollback();
            return Verdict::Rejected;
        }
        self.do_assign(item, slot);
        self.reinsert_ejected(rng);
        self.repair(rng);
        self.settle(before)
    }

    /// Ruin and recreate: empties the slots of one specialty on two days and
    /// refills them from the removed items and a sample of left-out ones,
    /// costliest first, each into its best or a random fitting slot.
    fn ruin_recreate(&mut self, seed_item: u32, rng: &mut ChaCha8Rng) -> Verdict {
        let p = self.state.p;
        let slot = self.state.slot_of[seed_item as usize];
        let specialty = p.slots[slot as usize].specialty;
        let d1 = p.slots[slot as usize].day;
        let others = &p.item_slots[seed_item as usize];
        let d2 = p.slots[others[rng.random_range(0..others.len())] as usize].day;

        let before = self.begin();
        let mut pool: Vec<u32> = Vec::new();
        for (i, sl) in p.slots.iter().enumerate() {
            if sl.specialty == specialty && (sl.day == d1 || sl.day == d2) {
                pool.extend_from_slice(&self.state.members[i]);
            }
        }
        for &i in &pool {
            self.do_unassign(i);
        }
        for _ in 0..RUIN_SAMPLE {
            if self.state.unassigned.is_empty() {
                break;
            }
            let u = self.state.unassigned[rng.random_range(0..self.state.unassigned.len())];
            if p.items[u as usize].registration.specialty == specialty && !pool.contains(&u) {
                pool.push(u);
            }
        }
        pool.shuffle(rng);
        pool.sort_by_key(|&a| core::cmp::Reverse(p.unassigned_cost(a)));
        for &i in &pool {
            if self.state.slot_of[i as usize] != NONE {
                continue;
            }
            let target = if rng.random_bool(0.7) {
                self.state.best_slot(i)
            } else {
                let fitting: Vec<u32> = p.item_slots[i as usize]
                    .iter()
                    .copied()
                    .filter(|&s| self.state.fits(i, s))
                    .collect();
                (!fitting.is_empty()).then(|| fitting[rng.random_range(0..fitting.len())])
            };
            if let Some(s) = target {
                self.do_assign(i, s);
            }
        }
        self.settle(before)
    }

    fn relocate(&mut self, item: u32, rng: &mut ChaCha8Rng) -> Verdict {
        let p = self.state.p;
        let current = self.state.slot_of[item as usize];
        let slots = &p.item_slots[item as usize];
        if slots.len() < 2 {
            return Verdict::Rejected;
        }
        let before = self.begin();
        self.do_unassign(item);
        let target = if rng.random_bool(0.5) {
            self.state.best_slot(item)
        } else {
            let s = slots[rng.random_range(0..slots.len())];
            self.state.fits(item, s).then_some(s)
        };
        match target {
            Some(s) if s != current => {
                self.do_assign(item, s);
                self.repair(rng);
                self.settle(before)
            }
            _ => {
                self.rollback();
                Verdict::Rejected
            }
        }
    }

    fn swap(&mut self, a: u32, rng: &mut ChaCha8Rng) -> Verdict {
        let p = self.state.p;
        let sa = self.state.slot_of[a as usize];
        let slots = &p.item_slots[a as usize];
        let sb = slots[rng.random_range(0..slots.len())];
        if sb == sa || self.state.members[sb as usize].is_empty() {
            return Verdict::Rejected;
        }
        let members = &self.state.members[sb as usize];
        let b = members[rng.random_range(0..members.len())];
        let before = self.begin();
        self.do_unassign(a);
        self.do_unassign(b);
        if self.state.fits(a, sb) {
            self.do_assign(a, sb);
            if self.state.fits(b, sa) {
                self.do_assign(b, sa);
                self.repair(rng);
                return self.settle(before);
            }
        }
        self.rollback();
        Verdict::Rejected
    }

    /// Swaps an assigned item out for an unassigned one of the same specialty,
    /// then tries to re-place the removed item.
    fn replace(&mut self, a: u32, rng: &mut ChaCha8Rng) -> Verdict {
        let p = self.state.p;
        let slot = self.state.slot_of[a as usize];
        let specialty = p.slots[slot as usize].specialty;
        let pool = &self.state.unassigned;
        if pool.is_empty() {
            return Verdict::Rejected;
        }
        let mut candidate = None;
        for _ in 0..8 {
            let u = pool[rng.random_range(0..pool.len())];
            if p.items[u as usize].registration.specialty == specialty {
                candidate = Some(u);
                break;
            }
        }
        let Some(u) = candidate else {
            return Verdict::Rejected;
        };
        let before = self.begin();
        self.do_unassign(a);
        if !self.state.fits(u, slot) {
            self.rollback();
            return Verdict::Rejected;
        }
        self.do_assign(u, slot);
        self.ejected.clear();
        self.ejected.push(a);
        self.reinsert_ejected(rng);
        self.repair(rng);
        self.settle(before)
    }
}

/// Picks an unassigned item, favouring the most expensive ones left out.
fn pick_unassigned(state: &State<'_>, rng: &mut ChaCha8Rng) -> Option<u32> {
    let pool = &state.unassigned;
    if pool.is_empty() {
        return None;
    }
    let mut best = pool[rng.random_range(0..pool.len())];
    for _ in 0..3 {
        let other = pool[rng.random_range(0..pool.len())];
        if state.p.unassigned_cost(other) > state.p.unassigned_cost(best) {
            best = other;
        }
    }
    Some(best)
}

fn pick_assigned(state: &State<'_>, rng: &mut ChaCha8Rng) -> Option<u32> {
    let pool = &state.assigned;
    (!pool.is_empty()).then(|| pool[rng.random_range(0..pool.len())])
}

/// Runs one move chosen at random; returns whether the state changed.
fn step(mover: &mut Mover<'_>, rng: &mut ChaCha8Rng) -> bool {
    let roll = rng.random_range(0..100u32);
    let verdict = if roll < 15 {
        match pick_unassigned(&mover.state, rng) {
            Some(u) => mover.insert(u),
            None => Verdict::Rejected,
        }
    } else if roll < 42 {
        match pick_unassigned(&mover.state, rng) {
            Some(u) => mover.eject_move(u, rng),
            None => Verdict::Rejected,
        }
    } else if roll < 50 {
        match pick_assigned(&mover.state, rng) {
            Some(a) => mover.eject_move(a, rng),
            None => Verdict::Rejected,
        }
    } else if roll < 55 {
        match pick_assigned(&mover.state, rng) {
            Some(a) => mover.ruin_recreate(a, rng),
            None => Verdict::Rejected,
        }
    } else if roll < 65 {
        match pick_assigned(&mover.state, rng) {
            Some(a) => mover.relocate(a, rng),
            None => Verdict::Rejected,
        }
    } else if roll < 80 {
        match pick_assigned(&mover.state, rng) {
            Some(a) => mover.swap(a, rng),
            None => Verdict::Rejected,
        }
    } else {
        match pick_assigned(&mover.state, rng) {
            Some(a) => mover.replace(a, rng),
            None => Verdict::Rejected,
        }
    };
    verdict == Verdict::Accepted
}

/// Anytime search from `start`. `on_improvement` is called with every new
/// global best whose hard level is zero.
pub(crate) fn search(
    p: &Problem,
    start: State<'_>,
    params: &SearchParams,
    clock: &dyn Clock,
    on_improvement: &mut dyn FnMut(&[Option<u32>], Cost),
) -> SearchResult {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let bound = p.lower_bound();

    let mut best = start.placement();
    let mut best_cost = start.cost();
    if best_cost.hard() == 0 {
        on_improvement(&best, best_cost);
    }
    let mut mover = Mover {
        state: start,
        journal: Vec::new(),
        ejected: Vec::new(),
    };
    let mut run_best = best_cost;
    let mut stall = 0u64;
    let mut iterations = 0u64;

    while best_cost > bound {
        if params.max_iterations.is_some_and(|m| iterations >= m) {
            break;
        }
        if iterations.is_multiple_of(CLOCK_STRIDE) && (clock.cancelled() || clock.elapsed() >= params.time_limit) {
            break;
        }
        iterations += 1;

        step(&mut mover, &mut rng);
        let cost = mover.state.cost();
        if cost < run_best {
            run_best = cost;
            stall = 0;
        } else {
            stall += 1;
        }
        if cost < best_cost {
            best_cost = cost;
            best = mover.state.placement();
            if cost.hard() == 0 {
                on_improvement(&best, best_cost);
            }
        }
        if params.restarts && stall >= params.max_stall {
            let order = construction_order(p, Some(&mut rng));
            mover.state = construct(p, &order);
            run_best = mover.state.cost();
            stall = 0;
            if run_best < best_cost {
                best_cost = run_best;
                best = mover.state.placement();
                if best_cost.hard() == 0 {
                    on_improvement(&best, best_cost);
                }
            }
        }
    }
    debug_assert!(mover.state.is_consistent());

    SearchResult {
        best,
        best_cost,
        iterations,
        reached_bound: best_cost <= bound,
    }
}

/// Outcome of the exhaustive placement of a subset of items.
pub(crate) enum Exhaust {
    /// A placement of every listed item, as `(item, slot)` pairs.
    Found(Vec<(u32, u32)>),
    Infeasible,
    /// The node budget ran out first.
    Unknown,
}

/// Depth-first search for a feasible placement of all `items` together, the
/// other items left out. Slots that are interchangeable for the item being
/// placed (same day, capacity and remaining minutes) are tried once.
pub(crate) fn place_all(p: &Problem, items: &[u32], node_budget: u64) -> Exhaust {
    let mut order: Vec<u32> = items.to_vec();
    order.sort_by_key(|&i| (p.item_slots[i as usize].len(), core::cmp::Reverse(p.duration(i))));
    let mut state = State::empty(p);
    let mut nodes = 0u64;
    let mut path = Vec::with_capacity(order.len());
    match dfs(&mut state, &order, 0, &mut nodes, node_budget, &mut path) {
        Some(true) => Exhaust::Found(path),
        Some(false) => Exhaust::Infeasible,
        None => Exhaust::Unknown,
    }
}

fn dfs(
    state: &mut State<'_>,
    order: &[u32],
    depth: usize,
    nodes: &mut u64,
    budget: u64,
    path: &mut Vec<(u32, u32)>,
) -> Option<bool> {
    if depth == order.len() {
        return Some(true);
    }
    *nodes += 1;
    if *nodes > budget {
        return None;
    }
    let p = state.p;
    let item = order[depth];
    let mut tried: Vec<(usize, u32, i64)> = Vec::new();
    for &s in &p.item_slots[item as usize] {
        let key = (p.day_of(s), p.slots[s as usize].capacity, state.load[s as usize]);
        if tried.contains(&key) || !state.fits(item, s) {
            continue;
        }
        tried.push(key);
        state.assign(item, s);
        path.push((item, s));
        match dfs(state, order, depth + 1, nodes, budget, path) {
            Some(true) => return Some(true),
            Some(false) => {}
            None => return None,
        }
        path.pop();
        state.unassign(item);
    }
    Some(false)
}

/// State with the given `(item, slot)` pairs placed, then the rest greedily.
pub(crate) fn seeded<'p>(p: &'p Problem, seed: &[(u32, u32)], order: &[u32]) -> State<'p> {
    let mut state = State::empty(p);
    for &(item, slot) in seed {
        state.assign(item, slot);
    }
    place_in_order(&mut state, order);
    state
}

/// State reproducing an existing placement. Items whose slot is unknown or no
/// longer fits are left out.
pub(crate) fn from_placement<'p>(p: &'p Problem, placement: &[Option<u32>]) -> State<'p> {
    let mut state = State::empty(p);
    for (item, slot) in placement.iter().enumerate() {
        if let Some(s) = *slot {
            if state.fits(item as u32, s) {
                state.assign(item as u32, s);
            }
        }
    }
    state
}

/// Items that cannot be placed even into an otherwise empty problem.
pub(crate) fn unplaceable_alone(p: &Problem, items: &[u32]) -> Vec<u32> {
    let empty = State::empty(p);
    items
        .iter()
        .copied()
        .filter(|&i| p.item_slots[i as usize].iter().all(|&s| !empty.fits(i, s)))
        .collect()
}

/// Proves that `items` cannot all be placed together when some bed cell is
/// occupied by every placement of more items than it has beds.
pub(crate) fn forced_overflow(p: &Problem, items: &[u32]) -> bool {
    let empty = State::empty(p);
    let mut forced = vec![0i32; p.cell_cap.len()];
    for &item in items {
        let mut common: Option<Vec<u32>> = None;
        for &s in &p.item_slots[item as usize] {
            if !empty.fits(item, s) {
                continue;
            }
            let cells = &p.item_cells[item as usize][p.day_of(s)];
            common = Some(match common {
                None => cells.clone(),
                Some(c) => c.into_iter().filter(|x| cells.contains(x)).collect(),
            });
        }
        for c in common.unwrap_or_default() {
            forced[c as usize] += 1;
        }
    }
    forced.iter().zip(&p.cell_cap).any(|(f, cap)| f > cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::tiny_instance;
    use crate::verifier::check_schedule;
    use proptest::prelude::*;

    fn problem(seed: u64) -> (Instance, Problem) {
        let inst = tiny_instance(seed);
        let items = inst
            .registrations
            .iter()
            .map(|r| ItemSpec::flat(r.clone(), Cost::level(r.priority as usize, 1), inst.horizon))
            .collect();
        let p = Problem::new(&inst, items, Vec::new());
        (inst, p)
    }

    proptest! {
        #[test]
        fn random_moves_keep_the_state_consistent(seed in 0u64..5_000, ops in prop::collection::vec((any::<u8>(), any::<u8>()), 0..60)) {
            let (inst, p) = problem(seed);
            if p.item_count() == 0 {
                return Ok(());
            }
            let mut state = State::empty(&p);
            for (a, b) in ops {
                let item = u32::from(a) % p.item_count() as u32;
                if state.slot_of(item).is_some() {
                    state.unassign(item);
                } else {
                    let slots = &p.item_slots[item as usize];
                    if !slots.is_empty() {
                        let s = slots[usize::from(b) % slots.len()];
                        if state.fits(item, s) {
                            state.assign(item, s);
                        }
                    }
                }
                prop_assert!(state.is_consistent());
            }
            let schedule = p.to_schedule(&state.placement());
            let hard: Vec<_> = check_schedule(&inst, &schedule)
                .into_iter()
                .filter(|v| v.code != crate::verifier::ViolationCode::P1Unassigned)
                .collect();
            prop_assert!(hard.is_empty());
        }

        #[test]
        fn search_never_returns_worse_than_its_start(seed in 0u64..5_000) {
            let (_, p) = problem(seed);
            let order = construction_order(&p, None);
            let start = construct(&p, &order);
            let start_cost = start.cost();
            let params = SearchParams { seed, time_limit: f64::INFINITY, max_iterations: Some(500), max_stall: 100, restarts: true };
            let r = search(&p, start, &params, &crate::solver::IterationClock, &mut |_, _| {});
            prop_assert!(r.best_cost <= start_cost);
            prop_assert!(r.best_cost >= p.lower_bound());
        }
    }

    #[test]
    fn forced_cells_prove_infeasibility() {
        // Two P1 registrations, one ward bed on the only day.
        let mut inst = tiny_instance(0);
        inst.horizon = 1;
        inst.mss.retain(|m| m.day == 1);
        inst.beds.retain(|b| b.day == 1);
        let spec = inst.mss[0].specialty;
        for b in &mut inst.beds {
            b.available = if b.ward == spec { 1 } else { 0 };
        }
        inst.registrations.truncate(2);
        for r in &mut inst.registrations {
            r.priority = 1;
            r.specialty = spec;
            r.los_after = 1;
            r.icu_los = 0;
            r.surgery_duration = 10;
        }
        if inst.registrations.len() < 2 {
            let mut r = inst.registrations[0].clone();
            r.id = crate::model::RegistrationId(99);
            inst.registrations.push(r);
        }
        let items = inst
            .registrations
            .iter()
            .map(|r| ItemSpec::flat(r.clone(), Cost::level(0, 1), 1))
            .collect();
        let p = Problem::new(&inst, items, Vec::new());
        assert!(forced_overflow(&p, &[0, 1]));
        assert!(!forced_overflow(&p, &[0]));
        assert!(matches!(place_all(&p, &[0, 1], 1_000), Exhaust::Infeasible));
    }
}
