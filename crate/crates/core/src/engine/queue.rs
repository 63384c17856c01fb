use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::types::Timestamp;

struct Entry<E> {
    at: Timestamp,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // Reversed: the heap pops the earliest time, then the lowest sequence number.
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.cmp(&self.at).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Time-ordered event queue; simultaneous events pop in insertion order.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    next_seq: u64,
    now: Timestamp,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), next_seq: 0, now: Timestamp::ZERO }
    }
}

impl<E> EventQueue<E> {
    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Events not yet processed, in no particular order.
    pub fn pending(&self) -> impl Iterator<Item = &E> {
        self.heap.iter().map(|e| &e.event)
    }

    /// Schedule at `at`, which must not lie in the past.
    pub fn schedule(&mut self, at: Timestamp, event: E) {
        assert!(at >= self.now, "event scheduled in the past: {at} < {}", self.now);
        self.heap.push(Entry { at, seq: self.next_seq, event });
        self.next_seq += 1;
    }

    /// Pop the next event at or before `horizon`, advancing the clock.
    pub fn pop_until(&mut self, horizon: Timestamp) -> Option<(Timestamp, E)> {
        if self.heap.peek()?.at > horizon {
            return None;
        }
        let e = self.heap.pop()?;
        debug_assert!(e.at >= self.now);
        self.now = e.at;
        Some((e.at, e.event))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_pop_in_insertion_order() {
        let mut q = EventQueue::default();
        q.schedule(Timestamp(5), 'a');
        q.schedule(Timestamp(1), 'b');
        q.schedule(Timestamp(5), 'c');
        q.schedule(Timestamp(1), 'd');
        let order: Vec<char> = std::iter::from_fn(|| q.pop_until(Timestamp(10)).map(|(_, e)| e)).collect();
        assert_eq!(order, vec!['b', 'd', 'a', 'c']);
    }

    #[test]
    fn horizon_stops_the_clock() {
        let mut q = EventQueue::default();
        q.schedule(Timestamp(3), ());
        q.schedule(Timestamp(30), ());
        assert!(q.pop_until(Timestamp(10)).is_some());
        assert!(q.pop_until(Timestamp(10)).is_none());
        assert_eq!(q.now(), Timestamp(3));
        assert_eq!(q.len(), 1);
    }

    #[test]
    #[should_panic(expected = "in the past")]
    fn past_scheduling_panics() {
        let mut q = EventQueue::default();
        q.schedule(Timestamp(3), ());
        q.pop_until(Timestamp(10));
        q.schedule(Timestamp(2), ());
    }

    proptest! {
        #[test]
        fn pops_are_monotone(times in prop::collection::vec(0i64..1000, 1..200)) {
            let mut q = EventQueue::default();
            for (i, t) in times.iter().enumerate() {
                q.schedule(Timestamp(*t), i);
            }
            let mut last = (Timestamp(-1), 0usize);
            while let Some((t, i)) = q.pop_until(Timestamp(i64::MAX)) {
                prop_assert!(t > last.0 || (t == last.0 && i > last.1));
                last = (t, i);
            }
        }
    }
}
