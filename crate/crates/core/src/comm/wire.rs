//! Byte layout of everything that crosses a transport.
//!
//! ```text
//! WireMatrix: [u64 rows][u64 cols][rows·cols × f64]        little-endian, column-major
//! Frame:      [u32 tag][u32 source][u32 dest][WireMatrix]   little-endian
//! ```

use crate::linalg::DenseMatrix;
use crate::{Error, Result};

pub const WIRE_HEADER_BYTES: usize = 16;
pub const FRAME_HEADER_BYTES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub tag: u32,
    pub source: u32,
    pub dest: u32,
}

/// Encoded size of a `rows × cols` matrix, or `None` on overflow.
pub fn wire_len(rows: u64, cols: u64) -> Option<usize> {
    rows.checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(WIRE_HEADER_BYTES as u64))
        .and_then(|n| usize::try_from(n).ok())
}

pub fn encode_matrix(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(WIRE_HEADER_BYTES + 8 * m.as_slice().len());
    write_matrix_into(m, &mut out);
    out
}

fn write_matrix_into(m: &DenseMatrix, out: &mut Vec<u8>) {
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Parses a complete WireMatrix; trailing or missing bytes are a protocol error.
pub fn decode_matrix(bytes: &[u8]) -> Result<DenseMatrix> {
    if bytes.len() < WIRE_HEADER_BYTES {
        return Err(Error::Protocol(format!(
            "wire matrix of {} bytes is shorter than its header",
            bytes.len()
        )));
    }
    let rows = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let expected = wire_len(rows, cols)
        .ok_or_else(|| Error::Protocol(format!("wire shape {rows}x{cols} overflows")))?;
    if bytes.len() != expected {
        return Err(Error::Protocol(format!(
            "wire matrix {rows}x{cols} needs {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let data = bytes[WIRE_HEADER_BYTES..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::new(rows as usize, cols as usize, data)
        .map_err(|e| Error::Protocol(format!("wire payload rejected: {e}")))
}

pub fn encode_frame(header: FrameHeader, m: &DenseMatrix) -> Vec<u8> {
    let mut out =
        Vec::with_capacity(FRAME_HEADER_BYTES + WIRE_HEADER_BYTES + 8 * m.as_slice().len());
    out.extend_from_slice(&header.tag.to_le_bytes());
    out.extend_from_slice(&header.source.to_le_bytes());
    out.extend_from_slice(&header.dest.to_le_bytes());
    write_matrix_into(m, &mut out);
    out
}

pub fn decode_frame_header(bytes: &[u8]) -> Result<FrameHeader> {
    if bytes.len() < FRAME_HEADER_BYTES {
        return Err(Error::Protocol("truncated frame header".into()));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap());
    Ok(FrameHeader {
        tag: word(0),
        source: word(1),
        dest: word(2),
    })
}

/// Splits a frame into its header and the raw WireMatrix bytes.
pub fn split_frame(bytes: &[u8]) -> Result<(FrameHeader, &[u8])> {
    let header = decode_frame_header(bytes)?;
    Ok((header, &bytes[FRAME_HEADER_BYTES..]))
}

pub fn decode_frame(bytes: &[u8]) -> Result<(FrameHeader, DenseMatrix)> {
    let (header, payload) = split_frame(bytes)?;
    Ok((header, decode_matrix(payload)?))
}
