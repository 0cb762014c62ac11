//! Dense square matrices and the multiply kernels behind matrix powers.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row-major dense `n × n` matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.n, self.n)
    }
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Column `j`; equals row `j` for symmetric matrices.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Largest `|a_ij - b_ij| / max(1, |b_ij|)`.
    pub fn max_relative_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max)
    }

    /// Writes `n` as a little-endian `u64` followed by the row-major entries
    /// as little-endian `f64`. Debug format, not versioned.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        let n = u64::from_le_bytes(buf) as usize;
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        Self::from_row_major(n, data)
    }
}

/// How dense products are computed.
///
/// `Naive` is the textbook triple loop; `Blocked` tiles the computation and
/// splits row blocks across threads. A faster-than-cubic algorithm would be
/// added as another variant here; every matrix power in the crate goes
/// through [`multiply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatMulStrategy {
    Naive,
    Blocked { block: usize },
}

impl Default for MatMulStrategy {
    fn default() -> Self {
        Self::Blocked { block: 64 }
    }
}

impl fmt::Display for MatMulStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Naive => f.write_str("naive"),
            Self::Blocked { block } => write!(f, "blocked:{block}"),
        }
    }
}

impl FromStr for MatMulStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "naive" {
            return Ok(Self::Naive);
        }
        if s == "blocked" {
            return Ok(Self::default());
        }
        if let Some(b) = s.strip_prefix("blocked:") {
            let block: usize = b
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad block size `{b}`")))?;
            if block == 0 {
                return Err(Error::InvalidParameter("block size must be positive".into()));
            }
            return Ok(Self::Blocked { block });
        }
        Err(Error::InvalidParameter(format!("unknown multiply strategy `{s}`")))
    }
}

/// `a · b`.
pub fn multiply(a: &DenseMatrix, b: &DenseMatrix, strategy: MatMulStrategy) -> DenseMatrix {
    assert_eq!(a.n, b.n, "dimension mismatch");
    match strategy {
        MatMulStrategy::Naive => multiply_naive(a, b),
        MatMulStrategy::Blocked { block } => multiply_blocked(a, b, block.max(1)),
    }
}

fn multiply_naive(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = a.n;
    let mut c = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += a.get(i, k) * b.get(k, j);
            }
            c.set(i, j, acc);
        }
    }
    c
}

fn multiply_blocked(a: &DenseMatrix, b: &DenseMatrix, bs: usize) -> DenseMatrix {
    let n = a.n;
    let mut c = DenseMatrix::zeros(n);
    if n == 0 {
        return c;
    }
    c.data
        .par_chunks_mut(bs * n)
        .enumerate()
        .for_each(|(blk, out)| {
            let i0 = blk * bs;
            let rows = out.len() / n;
            for k0 in (0..n).step_by(bs) {
                let k1 = (k0 + bs).min(n);
                for j0 in (0..n).step_by(bs) {
                    let j1 = (j0 + bs).min(n);
                    for r in 0..rows {
                        let arow = a.row(i0 + r);
                        let crow = &mut out[r * n + j0..r * n + j1];
                        for k in k0..k1 {
                            let aik = arow[k];
                            if aik == 0.0 {
                                continue;
                            }
                            let brow = &b.data[k * n + j0..k * n + j1];
                            for (cv, bv) in crow.iter_mut().zip(brow) {
                                *cv += aik * bv;
                            }
                        }
                    }
                }
            }
        });
    c
}

/// `tr(a · b) = Σ_ij a_ij b_ji`, without forming the product.
pub fn trace_of_product(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.n, b.n, "dimension mismatch");
    let n = a.n;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let arow = a.row(i);
            let mut acc = 0.0;
            for (j, aij) in arow.iter().enumerate() {
                acc += aij * b.data[j * n + i];
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}
