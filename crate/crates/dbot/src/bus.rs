//! In-process publish/subscribe bus.
//!
//! Sequence numbers are assigned and messages fanned out under one lock, so
//! every subscriber sees each publisher's messages in `seq` order and gets
//! each message exactly once per subscription.

use std::collections::BTreeMap;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FINDINGS_TOPIC: &str = "findings";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusMessage {
    /// Per-publisher sequence number, starting at 0.
    pub seq: u64,
    pub publisher: String,
    pub topic: String,
    pub payload: String,
    pub turn: u64,
}

#[derive(Debug, Default)]
struct Inner {
    closed: bool,
    next_subscription: u64,
    /// topic -> subscription id -> sender
    topics: BTreeMap<String, BTreeMap<u64, Sender<BusMessage>>>,
    next_seq: BTreeMap<String, u64>,
    log: Vec<BusMessage>,
}

#[derive(Debug, Default)]
pub struct Bus {
    inner: Mutex<Inner>,
}

/// Receiving end of one `subscribe` call.
#[derive(Debug)]
pub struct Subscription {
    subscriber: String,
    rx: Receiver<BusMessage>,
}

impl Subscription {
    pub fn subscriber(&self) -> &str {
        &self.subscriber
    }

    /// Everything delivered so far, without blocking.
    pub fn drain(&self) -> Vec<BusMessage> {
        self.rx.try_iter().collect()
    }

    /// Waits for the next message; `None` on timeout or once the bus is
    /// closed and empty.
    pub fn recv_timeout(&self, timeout: Duration) -> Option<BusMessage> {
        self.rx.recv_timeout(timeout).ok()
    }
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Subscribes to `topics` (duplicates ignored). Only messages published
    /// after this call are delivered.
    pub fn subscribe<S: AsRef<str>>(&self, subscriber: &str, topics: &[S]) -> Result<Subscription> {
        let mut inner = self.lock();
        if inner.closed {
            return Err(Error::PublishAfterClose);
        }
        let (tx, rx) = mpsc::channel();
        let id = inner.next_subscription;
        inner.next_subscription += 1;
        for t in topics {
            inner
                .topics
                .entry(t.as_ref().to_string())
                .or_default()
                .insert(id, tx.clone());
        }
        Ok(Subscription {
            subscriber: subscriber.to_string(),
            rx,
        })
    }

    /// Non-blocking publish; returns the message as delivered.
    pub fn publish(&self, publisher: &str, topic: &str, payload: impl Into<String>, turn: u64) -> Result<BusMessage> {
        let mut inner = self.lock();
        if inner.closed {
            return Err(Error::PublishAfterClose);
        }
        let seq = inner.next_seq.entry(publisher.to_string()).or_insert(0);
        let msg = BusMessage {
            seq: *seq,
            publisher: publisher.to_string(),
            topic: topic.to_string(),
            payload: payload.into(),
            turn,
        };
        *seq += 1;
        if let Some(subs) = inner.topics.get(topic) {
            for tx in subs.values() {
                // a dropped subscription just stops receiving
                let _ = tx.send(msg.clone());
            }
        }
        inner.log.push(msg.clone());
        Ok(msg)
    }

    /// Rejects further publishes and disconnects subscribers once drained.
    pub fn close(&self) {
        let mut inner = self.lock();
        inner.closed = true;
        inner.topics.clear();
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }

    /// Every published message in publish order.
    pub fn log(&self) -> Vec<BusMessage> {
        self.lock().log.clone()
    }

    pub fn to_jsonl(&self) -> String {
        crate::io::to_jsonl(&self.log())
    }
}
