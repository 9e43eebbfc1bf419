//! Rank-addressed message passing.
//!
//! Four primitives only: point-to-point `send`/`recv` and the collectives
//! `gather` and `broadcast`, both built from point-to-point messages. Every
//! value crosses the transport as encoded bytes, so the in-process simulator
//! and TCP see identical traffic and produce identical results.

mod mailbox;
pub mod sim;
pub mod tcp;
pub mod wire;

use std::time::{Duration, Instant};

use crate::linalg::DenseMatrix;
use crate::{Error, Result};

pub use sim::{run_simulated, simulated_world};
pub use wire::{FrameHeader, FRAME_HEADER_BYTES, WIRE_HEADER_BYTES};

pub const DEFAULT_DEADLINE: Duration = Duration::from_secs(30);

/// Tags at or above this value are reserved for collectives.
pub const RESERVED_TAG_BASE: u32 = 0xFFFF_0000;
const GATHER_TAG: u32 = RESERVED_TAG_BASE + 1;
const BROADCAST_TAG: u32 = RESERVED_TAG_BASE + 2;

/// Moves encoded frames between ranks.
pub trait Transport: Send {
    /// Delivers a complete frame (header included) towards `dest`.
    fn send_frame(&mut self, dest: usize, frame: Vec<u8>) -> Result<()>;

    /// Next WireMatrix payload from `source` with `tag`, FIFO per
    /// `(source, tag)`.
    fn recv_payload(&mut self, source: usize, tag: u32, deadline: Instant) -> Result<Vec<u8>>;
}

/// Bytes and frames that went through one rank's transport.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrafficStats {
    pub frames_sent: u64,
    pub bytes_sent: u64,
    pub frames_received: u64,
    pub bytes_received: u64,
}

/// One participant of a world of `world_size` ranks.
pub struct RankContext {
    rank: usize,
    world_size: usize,
    transport: Box<dyn Transport>,
    deadline: Duration,
    stats: TrafficStats,
}

impl std::fmt::Debug for RankContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RankContext")
            .field("rank", &self.rank)
            .field("world_size", &self.world_size)
            .field("deadline", &self.deadline)
            .field("stats", &self.stats)
            .finish_non_exhaustive()
    }
}

impl RankContext {
    pub fn new(rank: usize, world_size: usize, transport: Box<dyn Transport>) -> Result<Self> {
        if world_size == 0 || rank >= world_size {
            return Err(Error::invalid(format!(
                "rank {rank} invalid for world of {world_size}"
            )));
        }
        Ok(Self {
            rank,
            world_size,
            transport,
            deadline: DEFAULT_DEADLINE,
            stats: TrafficStats::default(),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn world_size(&self) -> usize {
        self.world_size
    }

    pub fn deadline(&self) -> Duration {
        self.deadline
    }

    pub fn set_deadline(&mut self, deadline: Duration) {
        self.deadline = deadline;
    }

    pub fn stats(&self) -> TrafficStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = TrafficStats::default();
    }

    fn check_rank(&self, r: usize, role: &str) -> Result<()> {
        if r >= self.world_size {
            return Err(Error::invalid(format!(
                "{role} rank {r} outside world of {}",
                self.world_size
            )));
        }
        Ok(())
    }

    fn send_raw(&mut self, value: &DenseMatrix, dest: usize, tag: u32) -> Result<()> {
        self.check_rank(dest, "destination")?;
        let header = FrameHeader {
            tag,
            source: self.rank as u32,
            dest: dest as u32,
        };
        let frame = wire::encode_frame(header, value);
        self.stats.frames_sent += 1;
        self.stats.bytes_sent += frame.len() as u64;
        self.transport.send_frame(dest, frame)
    }

    fn recv_raw(&mut self, source: usize, tag: u32) -> Result<DenseMatrix> {
        self.check_rank(source, "source")?;
        let deadline = Instant::now() + self.deadline;
        let payload = self.transport.recv_payload(source, tag, deadline)?;
        self.stats.frames_received += 1;
        self.stats.bytes_received += (FRAME_HEADER_BYTES + payload.len()) as u64;
        wire::decode_matrix(&payload)
    }

    /// Point-to-point send. `tag` must be below [`RESERVED_TAG_BASE`].
    pub fn send(&mut self, value: &DenseMatrix, dest: usize, tag: u32) -> Result<()> {
        if tag >= RESERVED_TAG_BASE {
            return Err(Error::invalid(format!("tag {tag:#x} is reserved")));
        }
        self.send_raw(value, dest, tag)
    }

    /// Blocks until the next message from `source` with `tag` arrives or the
    /// deadline passes.
    pub fn recv(&mut self, source: usize, tag: u32) -> Result<DenseMatrix> {
        if tag >= RESERVED_TAG_BASE {
            return Err(Error::invalid(format!("tag {tag:#x} is reserved")));
        }
        self.recv_raw(source, tag)
    }

    /// Collects `local` from every rank at `root`, ordered by rank index.
    pub fn gather(&mut self, local: &DenseMatrix, root: usize) -> Result<Option<Vec<DenseMatrix>>> {
        self.check_rank(root, "root")?;
        if self.rank != root {
            self.send_raw(local, root, GATHER_TAG)?;
            return Ok(None);
        }
        let mut out = Vec::with_capacity(self.world_size);
        for source in 0..self.world_size {
            if source == root {
                out.push(local.clone());
            } else {
                out.push(self.recv_raw(source, GATHER_TAG)?);
            }
        }
        Ok(Some(out))
    }

    /// Every rank returns a bit-identical copy of the root's `value`;
    /// non-root ranks pass `None`.
    pub fn broadcast(&mut self, value: Option<&DenseMatrix>, root: usize) -> Result<DenseMatrix> {
        self.check_rank(root, "root")?;
        if self.rank == root {
            let value = value.ok_or_else(|| Error::invalid("broadcast root supplied no value"))?;
            for dest in (0..self.world_size).filter(|&d| d != root) {
                self.send_raw(value, dest, BROADCAST_TAG)?;
            }
            Ok(value.clone())
        } else {
            self.recv_raw(root, BROADCAST_TAG)
        }
    }

    /// [`broadcast`](Self::broadcast) for a vector, carried as an `n × 1` matrix.
    pub fn broadcast_vector(&mut self, value: Option<&[f64]>, root: usize) -> Result<Vec<f64>> {
        let packed = match value {
            Some(v) if self.rank == root => Some(DenseMatrix::new(v.len(), 1, v.to_vec())?),
            _ => None,
        };
        Ok(self.broadcast(packed.as_ref(), root)?.into_vec())
    }
}
