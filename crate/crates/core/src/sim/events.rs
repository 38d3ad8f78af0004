use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Event kinds in tie-break priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EventKind {
    OrderIssued,
    AssignmentDelivered,
    VehicleArrived,
    DwellComplete,
    PassengerBoarded,
    PassengerAlighted,
    RebalanceDecision,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    /// Order id for `OrderIssued`, vehicle index otherwise.
    pub subject: u64,
    /// Order index (into the run's order table) the event is about, if any.
    pub order: Option<usize>,
    /// Vehicle plan epoch the event was scheduled under.
    pub epoch: u64,
    seq: u64,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, o: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        o.time
            .total_cmp(&self.time)
            .then_with(|| o.kind.cmp(&self.kind))
            .then_with(|| o.subject.cmp(&self.subject))
            .then_with(|| o.seq.cmp(&self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Future-event list ordered by (time, kind, subject, insertion order).
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind, subject: u64, order: Option<usize>, epoch: u64) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(SimEvent {
            time,
            kind,
            subject,
            order,
            epoch,
            seq,
        });
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// Dispatcher-to-vehicle channel with a constant latency. Equal latency and
/// insertion-order tie-breaking make delivery FIFO per receiver.
#[derive(Debug, Clone, Copy)]
pub struct Messenger {
    pub latency_s: f64,
}

impl Messenger {
    /// Schedules an `AssignmentDelivered` for `order` at `now + latency` and
    /// returns the delivery time.
    pub fn deliver_message(&self, queue: &mut EventQueue, order: usize, to_vehicle: usize, now: f64) -> f64 {
        let at = now + self.latency_s;
        queue.schedule(at, EventKind::AssignmentDelivered, to_vehicle as u64, Some(order), 0);
        at
    }
}
