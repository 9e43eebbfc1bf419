//! `PARSVD01` matrix files.
//!
//! ```text
//! offset 0   8 bytes   magic "PARSVD01"
//! offset 8   u64 LE    rows
//! offset 16  u64 LE    cols
//! offset 24  rows·cols f64 LE, column-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::linalg::DenseMatrix;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PARSVD01";
pub const HEADER_BYTES: u64 = 24;

/// Exact file size for a `rows × cols` matrix, `None` on overflow.
pub fn file_len(rows: u64, cols: u64) -> Option<u64> {
    rows.checked_mul(cols)?
        .checked_mul(8)?
        .checked_add(HEADER_BYTES)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(a.rows() as u64).to_le_bytes())?;
    w.write_all(&(a.cols() as u64).to_le_bytes())?;
    for v in a.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let mut reader = MatrixFileReader::open(path)?;
    let cols = reader.cols();
    reader.read_columns(0, cols)
}

/// Random access to the columns of a matrix file.
pub struct MatrixFileReader<R> {
    inner: R,
    rows: usize,
    cols: usize,
}

impl MatrixFileReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        let actual = file.metadata()?.len();
        let mut reader = BufReader::new(file);
        if actual < HEADER_BYTES {
            // Still report a bad magic when there is enough of it to judge.
            let mut head = Vec::new();
            reader.read_to_end(&mut head)?;
            if head.len() >= MAGIC.len() && &head[..8] != MAGIC {
                return Err(Error::Format {
                    path: path.to_owned(),
                    found: head[..8].to_vec(),
                });
            }
            return Err(Error::SizeMismatch {
                expected: HEADER_BYTES,
                actual,
            });
        }
        let mut magic = [0u8; 8];
        reader.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format {
                path: path.to_owned(),
                found: magic.to_vec(),
            });
        }
        let (rows, cols) = read_shape(&mut reader)?;
        let expected = file_len(rows, cols).unwrap_or(u64::MAX);
        if expected != actual {
            return Err(Error::SizeMismatch { expected, actual });
        }
        Self::with_shape(reader, rows, cols)
    }
}

impl<R: Read + Seek> MatrixFileReader<R> {
    /// Wraps any seekable source positioned anywhere; the header is
    /// re-read from offset 0.
    pub fn from_reader(mut inner: R) -> Result<Self> {
        inner.seek(SeekFrom::Start(0))?;
        let mut magic = [0u8; 8];
        inner.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format {
                path: "<reader>".into(),
                found: magic.to_vec(),
            });
        }
        let (rows, cols) = read_shape(&mut inner)?;
        Self::with_shape(inner, rows, cols)
    }

    fn with_shape(inner: R, rows: u64, cols: u64) -> Result<Self> {
        let rows = usize::try_from(rows).map_err(|_| Error::invalid("row count too large"))?;
        let cols = usize::try_from(cols).map_err(|_| Error::invalid("column count too large"))?;
        Ok(Self { inner, rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Reads columns `start..start + count` with a single contiguous read.
    pub fn read_columns(&mut self, start: usize, count: usize) -> Result<DenseMatrix> {
        if start + count > self.cols {
            return Err(Error::invalid(format!(
                "columns {start}..{} out of range for {} columns",
                start + count,
                self.cols
            )));
        }
        let offset = HEADER_BYTES + (start as u64) * (self.rows as u64) * 8;
        self.inner.seek(SeekFrom::Start(offset))?;
        let mut bytes = vec![0u8; self.rows * count * 8];
        self.inner.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        DenseMatrix::new(self.rows, count, data)
    }
}

fn read_shape(r: &mut impl Read) -> Result<(u64, u64)> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word);
    r.read_exact(&mut word)?;
    Ok((rows, u64::from_le_bytes(word)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng::gaussian_matrix;

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.bin");
        let a = gaussian_matrix(7, 5, 11);
        write_matrix(&p, &a).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 24 + 8 * 35);
        assert_eq!(read_matrix(&p).unwrap(), a);
    }

    #[test]
    fn empty_matrix_is_a_bare_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        write_matrix(&p, &DenseMatrix::zeros(0, 0)).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 24);
        assert_eq!(read_matrix(&p).unwrap().shape(), (0, 0));
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        write_matrix(&p, &DenseMatrix::identity(2)).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[..8].copy_from_slice(b"PARSVD00");
        std::fs::write(&p, &bytes).unwrap();
        match read_matrix(&p) {
            Err(Error::Format { found, .. }) => assert_eq!(found, b"PARSVD00"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_reports_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        write_matrix(&p, &DenseMatrix::identity(3)).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        match read_matrix(&p) {
            Err(Error::SizeMismatch { expected, actual }) => {
                assert_eq!(expected, 24 + 72);
                assert_eq!(actual, 24 + 69);
            }
            other => panic!("expected size mismatch, got {other:?}"),
        }
        std::fs::write(&p, &bytes[..10]).unwrap();
        assert!(matches!(
            read_matrix(&p),
            Err(Error::SizeMismatch {
                expected: 24,
                actual: 10
            })
        ));
    }
}
