//! Two-dimensional product codes over a single BCH component code.

use thiserror::Error;

use crate::bch::BchCode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProductError {
    #[error("expected a {expected:?} matrix, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
}

/// Dense row-major binary matrix, one bit per byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            bits: vec![0; rows * cols],
        }
    }

    /// Wraps row-major `bits`; every entry is reduced to its lowest bit.
    ///
    /// # Panics
    /// If `bits.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, mut bits: Vec<u8>) -> Self {
        assert_eq!(bits.len(), rows * cols, "backing storage size");
        for b in bits.iter_mut() {
            *b &= 1;
        }
        BitMatrix { rows, cols, bits }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut bits = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                bits.push(f(i, j) & 1);
            }
        }
        BitMatrix { rows, cols, bits }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.bits
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.bits[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, bit: u8) {
        self.bits[i * self.cols + j] = bit & 1;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u8] {
        &mut self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u8> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        transpose_into(&self.bits, self.rows, self.cols, &mut out.bits);
        out
    }

    /// Top-left `rows × cols` block.
    pub fn block(&self, rows: usize, cols: usize) -> BitMatrix {
        assert!(rows <= self.rows && cols <= self.cols);
        BitMatrix::from_fn(rows, cols, |i, j| self.get(i, j))
    }

    pub fn xor(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.dims(), other.dims());
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a ^ b)
            .collect();
        BitMatrix {
            rows: self.rows,
            cols: self.cols,
            bits,
        }
    }

    /// Number of positions where the two matrices differ.
    pub fn hamming_distance(&self, other: &BitMatrix) -> usize {
        assert_eq!(self.dims(), other.dims());
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }
}

/// Row-major transpose of a `rows × cols` slice into `out` (`cols × rows`).
pub(crate) fn transpose_into<T: Copy>(src: &[T], rows: usize, cols: usize, out: &mut [T]) {
    debug_assert_eq!(src.len(), rows * cols);
    debug_assert_eq!(out.len(), rows * cols);
    const TILE: usize = 32;
    for ib in (0..rows).step_by(TILE) {
        for jb in (0..cols).step_by(TILE) {
            for i in ib..(ib + TILE).min(rows) {
                for j in jb..(jb + TILE).min(cols) {
                    out[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}

/// Product code whose rows and columns are codewords of `component`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCode {
    component: BchCode,
}

impl ProductCode {
    pub fn new(component: BchCode) -> Self {
        ProductCode { component }
    }

    pub fn component(&self) -> &BchCode {
        &self.component
    }

    /// Component length; codewords are `n × n`.
    pub fn n(&self) -> usize {
        self.component.n()
    }

    /// Component dimension; messages are `k × k`.
    pub fn k(&self) -> usize {
        self.component.k()
    }

    /// Overall length `n²`.
    pub fn length(&self) -> usize {
        self.n() * self.n()
    }

    /// Overall dimension `k²`.
    pub fn dimension(&self) -> usize {
        self.k() * self.k()
    }

    pub fn rate(&self) -> f64 {
        let r = self.component.rate();
        r * r
    }

    /// Systematic encoding: the message is the top-left `k × k` block; rows
    /// are encoded first, then every column of the row-extended matrix.
    pub fn encode(&self, message: &BitMatrix) -> Result<BitMatrix, ProductError> {
        let (n, k) = (self.n(), self.k());
        check_dims((k, k), message.dims())?;
        let mut rows = BitMatrix::zeros(n, n);
        for i in 0..k {
            let row = rows.row_mut(i);
            row[..k].copy_from_slice(message.row(i));
            self.component.encode_in_place(row);
        }
        let mut cols = rows.transpose();
        for j in 0..n {
            self.component.encode_in_place(cols.row_mut(j));
        }
        Ok(cols.transpose())
    }

    /// Whether every row and every column is a component codeword.
    pub fn is_codeword(&self, m: &BitMatrix) -> bool {
        let n = self.n();
        if m.dims() != (n, n) {
            return false;
        }
        let t = m.transpose();
        (0..n).all(|i| self.component.is_codeword(m.row(i)) && self.component.is_codeword(t.row(i)))
    }

    /// Top-left `k × k` block of a decoded `n × n` matrix.
    pub fn extract_message(&self, decoded: &BitMatrix) -> Result<BitMatrix, ProductError> {
        check_dims((self.n(), self.n()), decoded.dims())?;
        Ok(decoded.block(self.k(), self.k()))
    }
}

pub(crate) fn check_dims(
    expected: (usize, usize),
    actual: (usize, usize),
) -> Result<(), ProductError> {
    if expected != actual {
        return Err(ProductError::DimensionMismatch { expected, actual });
    }
    Ok(())
}
