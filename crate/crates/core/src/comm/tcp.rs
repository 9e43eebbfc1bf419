//! Star-topology TCP transport.
//!
//! Rank 0 listens; every other rank connects, writes its rank as a
//! little-endian `u32`, and from then on exchanges frames only. Rank 0 routes
//! frames addressed to other ranks. A background reader per socket drains
//! incoming frames into the local mailbox, so sockets never back up.

use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::mailbox::Mailbox;
use super::wire::{decode_frame_header, wire_len, FRAME_HEADER_BYTES, WIRE_HEADER_BYTES};
use super::{RankContext, Transport};
use crate::{Error, Result};

pub const ENV_WORLD_SIZE: &str = "PARSVD_WORLD_SIZE";
pub const ENV_RANK: &str = "PARSVD_RANK";
pub const ENV_ROOT_ADDR: &str = "PARSVD_ROOT_ADDR";

type Link = Arc<Mutex<TcpStream>>;

pub struct TcpTransport {
    rank: usize,
    inbox: Arc<Mailbox>,
    /// Root: one link per peer rank. Other ranks: only `links[0]`.
    links: Vec<Option<Link>>,
}

impl Transport for TcpTransport {
    fn send_frame(&mut self, dest: usize, frame: Vec<u8>) -> Result<()> {
        if dest == self.rank {
            let header = decode_frame_header(&frame)?;
            self.inbox.deliver(
                header.source,
                header.tag,
                frame[FRAME_HEADER_BYTES..].to_vec(),
            );
            return Ok(());
        }
        let hop = if self.rank == 0 { dest } else { 0 };
        let link = self
            .links
            .get(hop)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::invalid(format!("no route to rank {dest}")))?;
        link.lock()
            .unwrap()
            .write_all(&frame)
            .map_err(|e| Error::Connection(format!("send to rank {dest}: {e}")))
    }

    fn recv_payload(&mut self, source: usize, tag: u32, deadline: Instant) -> Result<Vec<u8>> {
        self.inbox.take(self.rank, source as u32, tag, deadline)
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        for link in self.links.iter().flatten() {
            let _ = link.lock().unwrap().shutdown(Shutdown::Write);
        }
    }
}

/// Reads one whole frame; `Ok(None)` on a clean end of stream.
fn read_frame(stream: &mut TcpStream) -> io::Result<Option<Vec<u8>>> {
    let mut head = [0u8; FRAME_HEADER_BYTES + WIRE_HEADER_BYTES];
    match stream.read_exact(&mut head[..1]) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    stream.read_exact(&mut head[1..])?;
    let rows = u64::from_le_bytes(head[12..20].try_into().unwrap());
    let cols = u64::from_le_bytes(head[20..28].try_into().unwrap());
    let body = wire_len(rows, cols)
        .map(|n| n - WIRE_HEADER_BYTES)
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "frame shape overflows"))?;
    let mut frame = Vec::with_capacity(head.len() + body);
    frame.extend_from_slice(&head);
    frame.resize(head.len() + body, 0);
    stream.read_exact(&mut frame[head.len()..])?;
    Ok(Some(frame))
}

fn spawn_root_reader(
    peer: usize,
    mut stream: TcpStream,
    inbox: Arc<Mailbox>,
    links: Vec<Option<Link>>,
) {
    thread::spawn(move || loop {
        match read_frame(&mut stream) {
            Ok(Some(frame)) => {
                let header = match decode_frame_header(&frame) {
                    Ok(h) => h,
                    Err(_) => break inbox.close_source(peer as u32),
                };
                if header.dest == 0 {
                    inbox.deliver(
                        header.source,
                        header.tag,
                        frame[FRAME_HEADER_BYTES..].to_vec(),
                    );
                } else if let Some(Some(link)) = links.get(header.dest as usize) {
                    if link.lock().unwrap().write_all(&frame).is_err() {
                        break inbox.close_source(peer as u32);
                    }
                } else {
                    break inbox.close_source(peer as u32);
                }
            }
            _ => break inbox.close_source(peer as u32),
        }
    });
}

fn spawn_peer_reader(mut stream: TcpStream, inbox: Arc<Mailbox>) {
    thread::spawn(move || loop {
        match read_frame(&mut stream) {
            Ok(Some(frame)) => match decode_frame_header(&frame) {
                Ok(h) => inbox.deliver(h.source, h.tag, frame[FRAME_HEADER_BYTES..].to_vec()),
                Err(e) => break inbox.close_all(e.to_string()),
            },
            Ok(None) => break inbox.close_all("root closed the connection".into()),
            Err(e) => break inbox.close_all(format!("connection to root: {e}")),
        }
    });
}

/// Rank 0 side: accepts `world_size − 1` peers on `listener` before `timeout`.
pub fn root_context(
    listener: TcpListener,
    world_size: usize,
    timeout: Duration,
) -> Result<RankContext> {
    if world_size == 0 {
        return Err(Error::invalid("world size must be positive"));
    }
    let deadline = Instant::now() + timeout;
    listener.set_nonblocking(true)?;
    let mut streams: Vec<Option<TcpStream>> = (0..world_size).map(|_| None).collect();
    let mut connected = 1;
    while connected < world_size {
        match listener.accept() {
            Ok((mut stream, addr)) => {
                stream.set_nonblocking(false)?;
                stream.set_read_timeout(Some(Duration::from_secs(5)))?;
                let mut word = [0u8; 4];
                stream
                    .read_exact(&mut word)
                    .map_err(|e| Error::Connection(format!("handshake from {addr}: {e}")))?;
                let peer = u32::from_le_bytes(word) as usize;
                if peer == 0 || peer >= world_size || streams[peer].is_some() {
                    return Err(Error::Connection(format!(
                        "{addr} announced invalid rank {peer}"
                    )));
                }
                stream.set_read_timeout(None)?;
                stream.set_nodelay(true)?;
                streams[peer] = Some(stream);
                connected += 1;
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(Error::Connection(format!(
                        "only {connected} of {world_size} ranks connected before the deadline"
                    )));
                }
                thread::sleep(Duration::from_millis(2));
            }
            Err(e) => return Err(Error::Connection(format!("accept: {e}"))),
        }
    }

    let inbox = Arc::new(Mailbox::default());
    let mut links: Vec<Option<Link>> = vec![None];
    let mut readers = Vec::new();
    for (peer, stream) in streams.into_iter().enumerate().skip(1) {
        let stream = stream.expect("every peer connected");
        readers.push((peer, stream.try_clone()?));
        links.push(Some(Arc::new(Mutex::new(stream))));
    }
    for (peer, stream) in readers {
        spawn_root_reader(peer, stream, Arc::clone(&inbox), links.clone());
    }
    RankContext::new(
        0,
        world_size,
        Box::new(TcpTransport {
            rank: 0,
            inbox,
            links,
        }),
    )
}

/// Non-root side: connects to `root_addr` (retrying until `timeout`) and
/// announces `rank`.
pub fn peer_context(
    rank: usize,
    world_size: usize,
    root_addr: impl ToSocketAddrs,
    timeout: Duration,
) -> Result<RankContext> {
    if rank == 0 || rank >= world_size {
        return Err(Error::invalid(format!(
            "peer rank {rank} invalid for world {world_size}"
        )));
    }
    let addrs: Vec<SocketAddr> = root_addr
        .to_socket_addrs()
        .map_err(|e| Error::Connection(format!("resolve root address: {e}")))?
        .collect();
    let deadline = Instant::now() + timeout;
    let mut stream = loop {
        match TcpStream::connect(&addrs[..]) {
            Ok(s) => break s,
            Err(e) if Instant::now() >= deadline => {
                return Err(Error::Connection(format!("connect to root: {e}")))
            }
            Err(_) => thread::sleep(Duration::from_millis(20)),
        }
    };
    stream.set_nodelay(true)?;
    stream
        .write_all(&(rank as u32).to_le_bytes())
        .map_err(|e| Error::Connection(format!("handshake: {e}")))?;
    let inbox = Arc::new(Mailbox::default());
    spawn_peer_reader(stream.try_clone()?, Arc::clone(&inbox));
    let links = vec![Some(Arc::new(Mutex::new(stream)))];
    RankContext::new(
        rank,
        world_size,
        Box::new(TcpTransport { rank, inbox, links }),
    )
}

/// Builds a context from `PARSVD_RANK`, `PARSVD_WORLD_SIZE` and
/// `PARSVD_ROOT_ADDR`. Rank 0 binds the address; the others connect to it.
pub fn context_from_env(timeout: Duration) -> Result<RankContext> {
    let var = |name: &str| -> Result<String> {
        std::env::var(name)
            .map_err(|_| Error::invalid(format!("environment variable {name} is not set")))
    };
    let parse = |name: &str| -> Result<usize> {
        var(name)?
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("environment variable {name} is not an integer")))
    };
    let world_size = parse(ENV_WORLD_SIZE)?;
    let rank = parse(ENV_RANK)?;
    let addr = var(ENV_ROOT_ADDR)?;
    if world_size == 0 || rank >= world_size {
        return Err(Error::invalid(format!(
            "{ENV_RANK}={rank} invalid for {ENV_WORLD_SIZE}={world_size}"
        )));
    }
    let mut ctx = if rank == 0 {
        let listener =
            TcpListener::bind(&addr).map_err(|e| Error::Connection(format!("bind {addr}: {e}")))?;
        root_context(listener, world_size, timeout)?
    } else {
        peer_context(rank, world_size, addr.as_str(), timeout)?
    };
    ctx.set_deadline(timeout);
    Ok(ctx)
}
