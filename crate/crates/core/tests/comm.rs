use std::net::TcpListener;
use std::thread;
use std::time::{Duration, Instant};

use parsvd::comm::tcp::{peer_context, root_context};
use parsvd::comm::wire::{decode_frame, encode_frame};
use parsvd::comm::{run_simulated, FrameHeader, RankContext, DEFAULT_DEADLINE};
use parsvd::linalg::rng::gaussian_matrix;
use parsvd::{DenseMatrix, Error};

/// Byte layout written out by hand: `[u64 rows][u64 cols][f64…]`, all
/// little-endian, column-major.
fn encode_by_hand(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            out.extend_from_slice(&m.get(i, j).to_le_bytes());
        }
    }
    out
}

#[test]
fn singleton_world_gather_and_broadcast() {
    let a = gaussian_matrix(2, 3, 1);
    let out = run_simulated(1, DEFAULT_DEADLINE, |ctx| {
        let g = ctx.gather(&a, 0)?.unwrap();
        let b = ctx.broadcast(Some(&a), 0)?;
        Ok((g, b))
    })
    .unwrap();
    assert_eq!(out[0].0, vec![a.clone()]);
    assert_eq!(out[0].1, a);
}

#[test]
fn gather_orders_by_rank() {
    let out = run_simulated(4, DEFAULT_DEADLINE, |ctx| {
        let mine = DenseMatrix::new(1, 1, vec![ctx.rank() as f64])?;
        ctx.gather(&mine, 0)
    })
    .unwrap();
    let at_root: Vec<f64> = out[0]
        .as_ref()
        .unwrap()
        .iter()
        .map(|m| m.get(0, 0))
        .collect();
    assert_eq!(at_root, vec![0.0, 1.0, 2.0, 3.0]);
    assert!(out[1..].iter().all(Option::is_none));
}

#[test]
fn gather_preserves_ragged_shapes_and_bytes() {
    let shapes = [(2, 2), (3, 2), (1, 2)];
    let sent: Vec<DenseMatrix> = shapes
        .iter()
        .enumerate()
        .map(|(r, &(m, n))| gaussian_matrix(m, n, 40 + r as u64))
        .collect();
    let out = run_simulated(3, DEFAULT_DEADLINE, |ctx| ctx.gather(&sent[ctx.rank()], 0)).unwrap();
    let got = out[0].as_ref().unwrap();
    for (g, s) in got.iter().zip(&sent) {
        assert_eq!(g.shape(), s.shape());
        assert_eq!(encode_by_hand(g), encode_by_hand(s));
    }
    let header = FrameHeader {
        tag: 5,
        source: 1,
        dest: 0,
    };
    let frame = encode_frame(header, &sent[1]);
    assert_eq!(&frame[12..], &encode_by_hand(&sent[1])[..]);
    assert_eq!(decode_frame(&frame).unwrap(), (header, sent[1].clone()));
}

#[test]
fn broadcast_is_bitwise_and_handles_empty() {
    let a = gaussian_matrix(5, 3, 77);
    let out = run_simulated(4, DEFAULT_DEADLINE, |ctx| {
        let root_val = (ctx.rank() == 0).then_some(&a);
        let b = ctx.broadcast(root_val, 0)?;
        let empty = DenseMatrix::zeros(0, 0);
        let e = ctx.broadcast((ctx.rank() == 0).then_some(&empty), 0)?;
        Ok((b, e))
    })
    .unwrap();
    for (b, e) in out {
        assert_eq!(encode_by_hand(&b), encode_by_hand(&a));
        assert_eq!(e.shape(), (0, 0));
    }
}

#[test]
fn point_to_point_is_fifo() {
    let out = run_simulated(2, DEFAULT_DEADLINE, |ctx| {
        if ctx.rank() == 0 {
            ctx.send(&DenseMatrix::new(1, 1, vec![1.5])?, 1, 11)?;
            ctx.send(&DenseMatrix::new(1, 1, vec![2.5])?, 1, 11)?;
            Ok(vec![])
        } else {
            Ok(vec![ctx.recv(0, 11)?.get(0, 0), ctx.recv(0, 11)?.get(0, 0)])
        }
    })
    .unwrap();
    assert_eq!(out[1], vec![1.5, 2.5]);
}

#[test]
fn root_distributes_row_slices() {
    let world = 4;
    let s = 3;
    let full = gaussian_matrix(world * s, 2, 9);
    let out = run_simulated(world, DEFAULT_DEADLINE, |ctx| {
        if ctx.rank() == 0 {
            for r in 1..world {
                ctx.send(&full.row_block(r * s..(r + 1) * s), r, r as u32 + 10)?;
            }
            Ok(full.row_block(0..s))
        } else {
            ctx.recv(0, ctx.rank() as u32 + 10)
        }
    })
    .unwrap();
    for (r, block) in out.iter().enumerate() {
        assert_eq!(block, &full.row_block(r * s..(r + 1) * s));
    }
}

#[test]
fn missing_message_times_out() {
    let start = Instant::now();
    let err = run_simulated(2, Duration::from_millis(150), |ctx| {
        if ctx.rank() == 1 {
            ctx.recv(0, 3)?;
        }
        Ok(())
    })
    .unwrap_err();
    assert!(matches!(err, Error::Timeout(_)), "{err}");
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn reserved_tags_and_bad_ranks_are_rejected() {
    run_simulated(2, DEFAULT_DEADLINE, |ctx| {
        let x = DenseMatrix::identity(1);
        assert!(matches!(
            ctx.send(&x, 1, u32::MAX),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(ctx.send(&x, 5, 1), Err(Error::InvalidArgument(_))));
        Ok(())
    })
    .unwrap();
}

fn tcp_world(world: usize) -> Vec<RankContext> {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let timeout = Duration::from_secs(10);
    let peers: Vec<_> = (1..world)
        .map(|r| thread::spawn(move || peer_context(r, world, addr, timeout).unwrap()))
        .collect();
    let mut ctxs = vec![root_context(listener, world, timeout).unwrap()];
    ctxs.extend(peers.into_iter().map(|h| h.join().unwrap()));
    ctxs
}

#[test]
fn tcp_collectives_match_the_simulator() {
    let world = 3;
    let blocks: Vec<DenseMatrix> = (0..world)
        .map(|r| gaussian_matrix(r + 1, 2, r as u64))
        .collect();
    let program = |ctx: &mut RankContext| -> parsvd::Result<(Option<Vec<DenseMatrix>>, DenseMatrix, DenseMatrix)> {
        let g = ctx.gather(&blocks[ctx.rank()], 0)?;
        let b = ctx.broadcast((ctx.rank() == 0).then_some(&blocks[0]), 0)?;
        // Peer-to-peer traffic is relayed through the root.
        let next = (ctx.rank() + 1) % ctx.world_size();
        let prev = (ctx.rank() + ctx.world_size() - 1) % ctx.world_size();
        ctx.send(&blocks[ctx.rank()], next, 7)?;
        let p = ctx.recv(prev, 7)?;
        Ok((g, b, p))
    };
    let simulated = run_simulated(world, DEFAULT_DEADLINE, program).unwrap();
    let handles: Vec<_> = tcp_world(world)
        .into_iter()
        .map(|mut ctx| {
            let blocks = blocks.clone();
            thread::spawn(move || {
                let g = ctx.gather(&blocks[ctx.rank()], 0).unwrap();
                let b = ctx
                    .broadcast((ctx.rank() == 0).then_some(&blocks[0]), 0)
                    .unwrap();
                let next = (ctx.rank() + 1) % ctx.world_size();
                let prev = (ctx.rank() + ctx.world_size() - 1) % ctx.world_size();
                ctx.send(&blocks[ctx.rank()], next, 7).unwrap();
                let p = ctx.recv(prev, 7).unwrap();
                (g, b, p, ctx.stats())
            })
        })
        .collect();
    for (r, h) in handles.into_iter().enumerate() {
        let (g, b, p, stats) = h.join().unwrap();
        assert_eq!((g, b, p), simulated[r].clone(), "rank {r}");
        assert!(stats.frames_sent >= 1);
    }
}

#[test]
fn tcp_peer_without_root_fails_to_connect() {
    let addr = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let err = peer_context(1, 2, addr, Duration::from_millis(200)).unwrap_err();
    assert!(matches!(err, Error::Connection(_)), "{err}");
}
