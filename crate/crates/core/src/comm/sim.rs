//! In-process transport: every rank is a thread, every link a mailbox.

use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::mailbox::Mailbox;
use super::wire::split_frame;
use super::{RankContext, Transport};
use crate::{Error, Result};

pub struct SimTransport {
    rank: usize,
    inboxes: Arc<Vec<Mailbox>>,
}

impl Transport for SimTransport {
    fn send_frame(&mut self, dest: usize, frame: Vec<u8>) -> Result<()> {
        let (header, payload) = split_frame(&frame)?;
        let inbox = self
            .inboxes
            .get(dest)
            .ok_or_else(|| Error::invalid(format!("destination rank {dest} out of range")))?;
        inbox.deliver(header.source, header.tag, payload.to_vec());
        Ok(())
    }

    fn recv_payload(&mut self, source: usize, tag: u32, deadline: Instant) -> Result<Vec<u8>> {
        self.inboxes[self.rank].take(self.rank, source as u32, tag, deadline)
    }
}

/// Rank contexts `0..world_size` sharing one in-process world.
pub fn simulated_world(world_size: usize) -> Result<Vec<RankContext>> {
    if world_size == 0 {
        return Err(Error::invalid("world size must be positive"));
    }
    let inboxes: Arc<Vec<Mailbox>> =
        Arc::new((0..world_size).map(|_| Mailbox::default()).collect());
    (0..world_size)
        .map(|rank| {
            let t = SimTransport {
                rank,
                inboxes: Arc::clone(&inboxes),
            };
            RankContext::new(rank, world_size, Box::new(t))
        })
        .collect()
}

/// Runs `f` once per rank on its own thread and returns the per-rank
/// results in rank order.
///
/// When ranks fail, the first error that is not a timeout wins: a rank that
/// errors out usually leaves its peers waiting until their deadline.
pub fn run_simulated<T, F>(world_size: usize, deadline: Duration, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RankContext) -> Result<T> + Sync,
{
    let contexts = simulated_world(world_size)?;
    let results: Vec<Result<T>> = thread::scope(|scope| {
        let handles: Vec<_> = contexts
            .into_iter()
            .map(|mut ctx| {
                ctx.set_deadline(deadline);
                let f = &f;
                scope.spawn(move || f(&mut ctx))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    });

    let mut first_timeout = None;
    let mut first_other = None;
    let mut ok = Vec::with_capacity(world_size);
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e @ Error::Timeout(_)) => {
                first_timeout.get_or_insert(e);
            }
            Err(e) => {
                first_other.get_or_insert(e);
            }
        }
    }
    match first_other.or(first_timeout) {
        Some(e) => Err(e),
        None => Ok(ok),
    }
}
