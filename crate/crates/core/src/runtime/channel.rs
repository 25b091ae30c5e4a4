//! Latest-wins mailboxes for the concurrent mode.
//!
//! An [`Inbox`] owns a fixed number of slots, each holding at most one
//! message. Every slot is fed by its own [`Outbox`] handles; a send replaces
//! whatever is still waiting in the slot. A slot is closed once all of its
//! outboxes are dropped, and closure is what shuts the actor graph down.

use std::sync::{Arc, Condvar, Mutex, MutexGuard};

struct Slot<M> {
    value: Option<M>,
    senders: usize,
}

struct Shared<M> {
    slots: Mutex<Vec<Slot<M>>>,
    ready: Condvar,
}

impl<M> Shared<M> {
    fn lock(&self) -> MutexGuard<'_, Vec<Slot<M>>> {
        // a panicking actor never holds the lock while panicking, but a
        // poisoned mutex must not take the rest of the graph down with it
        self.slots.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Receiving end; owned by exactly one actor.
pub struct Inbox<M> {
    shared: Arc<Shared<M>>,
    primary: Vec<usize>,
    cursor: usize,
}

/// Sending end bound to one slot of an inbox.
pub struct Outbox<M> {
    shared: Arc<Shared<M>>,
    slot: usize,
}

impl<M> Inbox<M> {
    pub fn new(slots: usize) -> Self {
        let slots_vec = (0..slots).map(|_| Slot { value: None, senders: 0 }).collect();
        Self {
            shared: Arc::new(Shared {
                slots: Mutex::new(slots_vec),
                ready: Condvar::new(),
            }),
            primary: (0..slots).collect(),
            cursor: 0,
        }
    }

    /// Restricts the slots whose closure ends [`Inbox::recv_any`].
    pub fn with_primary(mut self, primary: Vec<usize>) -> Self {
        self.primary = primary;
        self
    }

    pub fn outbox(&self, slot: usize) -> Outbox<M> {
        let mut slots = self.shared.lock();
        slots[slot].senders += 1;
        Outbox {
            shared: Arc::clone(&self.shared),
            slot,
        }
    }

    /// Waits for a message on any slot, visiting slots round-robin.
    ///
    /// Returns `None` once every primary slot is closed and empty.
    pub fn recv_any(&mut self) -> Option<(usize, M)> {
        let mut slots = self.shared.lock();
        let n = slots.len();
        loop {
            for offset in 0..n {
                let k = (self.cursor + offset) % n;
                if let Some(m) = slots[k].value.take() {
                    self.cursor = (k + 1) % n;
                    return Some((k, m));
                }
            }
            if self.primary.iter().all(|&k| slots[k].senders == 0) {
                return None;
            }
            slots = self.shared.ready.wait(slots).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Waits for a message on `slot`; `None` once it is closed and empty.
    pub fn recv_slot(&mut self, slot: usize) -> Option<M> {
        let mut slots = self.shared.lock();
        loop {
            if let Some(m) = slots[slot].value.take() {
                return Some(m);
            }
            if slots[slot].senders == 0 {
                return None;
            }
            slots = self.shared.ready.wait(slots).unwrap_or_else(|e| e.into_inner());
        }
    }

    /// Takes the waiting message on `slot`, if any.
    pub fn try_take(&mut self, slot: usize) -> Option<M> {
        self.shared.lock()[slot].value.take()
    }
}

impl<M> Outbox<M> {
    /// Stores `m`, replacing any unread message. Returns `true` when a
    /// message was overwritten.
    pub fn send(&self, m: M) -> bool {
        let replaced = {
            let mut slots = self.shared.lock();
            slots[self.slot].value.replace(m).is_some()
        };
        self.shared.ready.notify_all();
        replaced
    }
}

impl<M> Clone for Outbox<M> {
    fn clone(&self) -> Self {
        self.shared.lock()[self.slot].senders += 1;
        Self {
            shared: Arc::clone(&self.shared),
            slot: self.slot,
        }
    }
}

impl<M> Drop for Outbox<M> {
    fn drop(&mut self) {
        {
            let mut slots = self.shared.lock();
            slots[self.slot].senders -= 1;
        }
        self.shared.ready.notify_all();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;
    use std::time::Duration;

    #[test]
    fn latest_wins() {
        let mut inbox = Inbox::new(1);
        let out = inbox.outbox(0);
        assert!(!out.send(1));
        assert!(out.send(2));
        assert_eq!(inbox.recv_any(), Some((0, 2)));
        assert_eq!(inbox.try_take(0), None);
    }

    #[test]
    fn closes_when_senders_drop() {
        let mut inbox = Inbox::<u32>::new(2);
        let a = inbox.outbox(0);
        let b = a.clone();
        let c = inbox.outbox(1);
        a.send(7);
        drop(a);
        drop(b);
        assert_eq!(inbox.recv_slot(0), Some(7));
        assert_eq!(inbox.recv_slot(0), None);
        drop(c);
        assert_eq!(inbox.recv_any(), None);
    }

    #[test]
    fn secondary_slots_do_not_keep_inbox_open() {
        let mut inbox = Inbox::<u32>::new(2).with_primary(vec![0]);
        let primary = inbox.outbox(0);
        let _secondary = inbox.outbox(1);
        drop(primary);
        assert_eq!(inbox.recv_any(), None);
    }

    #[test]
    fn round_robin_serves_every_slot() {
        let mut inbox = Inbox::new(3);
        let outs: Vec<_> = (0..3).map(|k| inbox.outbox(k)).collect();
        for (k, o) in outs.iter().enumerate() {
            o.send(k);
        }
        let mut seen: Vec<usize> = (0..3).map(|_| inbox.recv_any().unwrap().1).collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn blocking_receive_wakes_up() {
        let mut inbox = Inbox::new(1);
        let out = inbox.outbox(0);
        let h = thread::spawn(move || {
            thread::sleep(Duration::from_millis(20));
            out.send(42u64);
        });
        assert_eq!(inbox.recv_slot(0), Some(42));
        h.join().unwrap();
        assert_eq!(inbox.recv_slot(0), None);
    }
}
