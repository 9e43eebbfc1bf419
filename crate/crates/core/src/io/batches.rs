use std::fs::File;
use std::io::{BufReader, Read, Seek};
use std::path::Path;

use super::matrix_file::MatrixFileReader;
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

enum Backing<R> {
    File(MatrixFileReader<R>),
    Memory(DenseMatrix),
}

/// Column batches of a matrix, `batch_columns` at a time; the last batch
/// may be narrower. File-backed sources read one batch per step.
pub struct BatchSource<R = BufReader<File>> {
    backing: Backing<R>,
    batch_columns: usize,
    cursor: usize,
}

impl BatchSource<BufReader<File>> {
    pub fn from_file(path: impl AsRef<Path>, batch_columns: usize) -> Result<Self> {
        Self::new(Backing::File(MatrixFileReader::open(path)?), batch_columns)
    }

    pub fn from_matrix(a: DenseMatrix, batch_columns: usize) -> Result<Self> {
        Self::new(Backing::Memory(a), batch_columns)
    }
}

impl<R: Read + Seek> BatchSource<R> {
    pub fn from_reader(reader: MatrixFileReader<R>, batch_columns: usize) -> Result<Self> {
        Self::new(Backing::File(reader), batch_columns)
    }

    fn new(backing: Backing<R>, batch_columns: usize) -> Result<Self> {
        if batch_columns == 0 {
            return Err(Error::invalid("batch width must be positive"));
        }
        Ok(Self {
            backing,
            batch_columns,
            cursor: 0,
        })
    }

    pub fn rows(&self) -> usize {
        match &self.backing {
            Backing::File(f) => f.rows(),
            Backing::Memory(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match &self.backing {
            Backing::File(f) => f.cols(),
            Backing::Memory(m) => m.cols(),
        }
    }

    /// `⌈cols / B⌉`
    pub fn num_batches(&self) -> usize {
        self.cols().div_ceil(self.batch_columns)
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }
}

impl<R: Read + Seek> Iterator for BatchSource<R> {
    type Item = Result<DenseMatrix>;

    fn next(&mut self) -> Option<Self::Item> {
        let cols = self.cols();
        if self.cursor >= cols {
            return None;
        }
        let width = self.batch_columns.min(cols - self.cursor);
        let start = self.cursor;
        self.cursor += width;
        Some(match &mut self.backing {
            Backing::File(f) => f.read_columns(start, width),
            Backing::Memory(m) => Ok(m.columns(start..start + width)),
        })
    }
}

/// Every batch of `src`, in order.
pub fn read_batches<R: Read + Seek>(src: BatchSource<R>) -> Result<Vec<DenseMatrix>> {
    src.collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hstack;

    fn widths(cols: usize, b: usize) -> Vec<usize> {
        let a = DenseMatrix::from_fn(2, cols, |i, j| (i + 2 * j) as f64).unwrap();
        let src = BatchSource::from_matrix(a.clone(), b).unwrap();
        assert_eq!(src.num_batches(), cols.div_ceil(b));
        let batches = read_batches(src).unwrap();
        assert_eq!(hstack(&batches).unwrap(), a);
        batches.iter().map(|m| m.cols()).collect()
    }

    #[test]
    fn remainder_law() {
        assert_eq!(widths(800, 100), vec![100; 8]);
        assert_eq!(widths(10, 4), vec![4, 4, 2]);
        assert_eq!(widths(5, 5), vec![5]);
        assert_eq!(widths(3, 7), vec![3]);
    }

    #[test]
    fn zero_width_rejected() {
        assert!(BatchSource::from_matrix(DenseMatrix::identity(2), 0).is_err());
    }
}
