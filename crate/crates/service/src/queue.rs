use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Condvar, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobQueueEntry {
    pub job_id: String,
    /// Seconds since the Unix epoch.
    pub enqueue_time: f64,
    /// Higher runs first.
    pub priority: i64,
}

impl JobQueueEntry {
    pub fn new(job_id: impl Into<String>, priority: i64) -> Self {
        Self {
            job_id: job_id.into(),
            enqueue_time: unix_now(),
            priority,
        }
    }
}

pub(crate) fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

struct Slot {
    entry: JobQueueEntry,
    seq: u64,
}

impl PartialEq for Slot {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Slot {}

impl PartialOrd for Slot {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Slot {
    fn cmp(&self, other: &Self) -> Ordering {
        self.entry
            .priority
            .cmp(&other.entry.priority)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct State {
    heap: BinaryHeap<Slot>,
    seq: u64,
    closed: bool,
}

/// Bounded priority queue, FIFO among equal priorities. Workers block in
/// [`pop`](Self::pop) until a job arrives or the queue is closed.
pub struct JobQueue {
    bound: usize,
    state: Mutex<State>,
    ready: Condvar,
}

impl JobQueue {
    pub fn new(bound: usize) -> Self {
        Self {
            bound,
            state: Mutex::new(State {
                heap: BinaryHeap::new(),
                seq: 0,
                closed: false,
            }),
            ready: Condvar::new(),
        }
    }

    pub fn push(&self, entry: JobQueueEntry) -> Result<(), ServiceError> {
        let mut st = self.state.lock().unwrap();
        if st.closed {
            return Err(ServiceError::ShuttingDown);
        }
        if st.heap.len() >= self.bound {
            return Err(ServiceError::QueueFull(st.heap.len()));
        }
        Self::insert(&mut st, entry);
        drop(st);
        self.ready.notify_one();
        Ok(())
    }

    /// Enqueues ignoring the bound. Used to restore jobs after a restart.
    pub fn restore(&self, entry: JobQueueEntry) {
        let mut st = self.state.lock().unwrap();
        Self::insert(&mut st, entry);
        drop(st);
        self.ready.notify_one();
    }

    fn insert(st: &mut State, entry: JobQueueEntry) {
        let seq = st.seq;
        st.seq += 1;
        st.heap.push(Slot { entry, seq });
    }

    /// Next job, or `None` once the queue is closed.
    pub fn pop(&self) -> Option<JobQueueEntry> {
        let mut st = self.state.lock().unwrap();
        loop {
            if st.closed {
                return None;
            }
            if let Some(slot) = st.heap.pop() {
                return Some(slot.entry);
            }
            st = self.ready.wait(st).unwrap();
        }
    }

    pub fn try_pop(&self) -> Option<JobQueueEntry> {
        let mut st = self.state.lock().unwrap();
        if st.closed {
            return None;
        }
        st.heap.pop().map(|s| s.entry)
    }

    /// Wakes every waiting worker; queued entries stay unserved.
    pub fn close(&self) {
        self.state.lock().unwrap().closed = true;
        self.ready.notify_all();
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bound(&self) -> usize {
        self.bound
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;
    use std::thread;

    use super::*;

    #[test]
    fn fifo_within_priority_and_higher_first() {
        let q = JobQueue::new(10);
        for (id, p) in [("a", 0), ("b", 0), ("c", 5), ("d", 0), ("e", 5)] {
            q.push(JobQueueEntry::new(id, p)).unwrap();
        }
        let order: Vec<_> = std::iter::from_fn(|| q.try_pop())
            .map(|e| e.job_id)
            .collect();
        assert_eq!(order, ["c", "e", "a", "b", "d"]);
    }

    #[test]
    fn bound_is_enforced_but_restore_bypasses_it() {
        let q = JobQueue::new(2);
        q.push(JobQueueEntry::new("a", 0)).unwrap();
        q.push(JobQueueEntry::new("b", 0)).unwrap();
        assert!(matches!(
            q.push(JobQueueEntry::new("c", 0)),
            Err(ServiceError::QueueFull(2))
        ));
        q.restore(JobQueueEntry::new("c", 0));
        assert_eq!(q.len(), 3);
    }

    #[test]
    fn close_releases_blocked_workers() {
        let q = Arc::new(JobQueue::new(1));
        let waiters: Vec<_> = (0..3)
            .map(|_| {
                let q = q.clone();
                thread::spawn(move || q.pop())
            })
            .collect();
        thread::sleep(std::time::Duration::from_millis(50));
        q.close();
        for w in waiters {
            assert_eq!(w.join().unwrap(), None);
        }
        assert!(matches!(
            q.push(JobQueueEntry::new("x", 0)),
            Err(ServiceError::ShuttingDown)
        ));
    }

    #[test]
    fn blocked_pop_receives_a_push() {
        let q = Arc::new(JobQueue::new(1));
        let w = {
            let q = q.clone();
            thread::spawn(move || q.pop())
        };
        thread::sleep(std::time::Duration::from_millis(20));
        q.push(JobQueueEntry::new("j", 0)).unwrap();
        assert_eq!(w.join().unwrap().unwrap().job_id, "j");
    }
}
