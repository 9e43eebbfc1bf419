use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Condvar, Mutex};
use std::time::Instant;

use crate::{Error, Result};

/// Per-rank inbox keyed by `(source, tag)`; FIFO within each key.
#[derive(Default)]
pub(crate) struct Mailbox {
    state: Mutex<State>,
    ready: Condvar,
}

#[derive(Default)]
struct State {
    queues: HashMap<(u32, u32), VecDeque<Vec<u8>>>,
    closed: HashSet<u32>,
    all_closed: Option<String>,
}

impl Mailbox {
    pub(crate) fn deliver(&self, source: u32, tag: u32, payload: Vec<u8>) {
        let mut st = self.state.lock().unwrap();
        st.queues
            .entry((source, tag))
            .or_default()
            .push_back(payload);
        self.ready.notify_all();
    }

    /// No further messages will arrive from `source`.
    pub(crate) fn close_source(&self, source: u32) {
        self.state.lock().unwrap().closed.insert(source);
        self.ready.notify_all();
    }

    /// No further messages will arrive from anyone.
    pub(crate) fn close_all(&self, reason: String) {
        self.state.lock().unwrap().all_closed.get_or_insert(reason);
        self.ready.notify_all();
    }

    pub(crate) fn take(
        &self,
        me: usize,
        source: u32,
        tag: u32,
        deadline: Instant,
    ) -> Result<Vec<u8>> {
        let mut st = self.state.lock().unwrap();
        loop {
            if let Some(msg) = st
                .queues
                .get_mut(&(source, tag))
                .and_then(VecDeque::pop_front)
            {
                return Ok(msg);
            }
            if let Some(reason) = &st.all_closed {
                return Err(Error::Connection(format!(
                    "rank {me} waiting on rank {source} tag {tag:#x}: {reason}"
                )));
            }
            if st.closed.contains(&source) {
                return Err(Error::Connection(format!(
                    "rank {me} waiting on rank {source} tag {tag:#x}: peer disconnected"
                )));
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(Error::Timeout(format!(
                    "rank {me} waiting on rank {source} tag {tag:#x}"
                )));
            }
            st = self.ready.wait_timeout(st, deadline - now).unwrap().0;
        }
    }
}
