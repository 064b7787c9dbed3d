//! Circulant index matrix, normalized DFT matrix and the permuted DFT family.
//!
//! Member `k` of the family is the DFT matrix with its columns reordered by
//! column `k` of the circulant index matrix. Products between two members
//! are the identity (same member) or a diagonal matrix with zero trace
//! (distinct members); the receiver relies on exactly this structure to
//! cancel inter-device interference.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{CMatrix, CVector, Error, Result};

/// The `N x N` circulant index matrix.
///
/// Stored implicitly. With one-based indices the entry at `(i, k)` is
/// `((i - k) mod N) + 1`; [`CirculantIndex::entry`] is the zero-based form
/// used everywhere else in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CirculantIndex {
    n: usize,
}

impl CirculantIndex {
    pub fn size(&self) -> usize {
        self.n
    }

    /// Zero-based DFT column placed at row `i` of column `k`.
    #[inline]
    pub fn entry(&self, i: usize, k: usize) -> usize {
        debug_assert!(i < self.n && k < self.n);
        (i + self.n - k) % self.n
    }

    /// One-based lookup, `entry(i, k) = ((i - k) mod N) + 1` for `i, k` in `1..=N`.
    pub fn entry_one_based(&self, i: usize, k: usize) -> Result<usize> {
        for idx in [i, k] {
            if idx == 0 || idx > self.n {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    size: self.n,
                });
            }
        }
        Ok(self.entry(i - 1, k - 1) + 1)
    }

    /// The full matrix with one-based entries, row major.
    pub fn to_rows(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|k| self.entry(i, k) + 1).collect())
            .collect()
    }
}

pub fn build_circulant_index(n: usize) -> Result<CirculantIndex> {
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    Ok(CirculantIndex { n })
}

/// Unitary DFT matrix, column `j` is `[w^(0*j), w^(1*j), ..., w^((N-1)*j)] / sqrt(N)`
/// with `w = exp(-i 2 pi / N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DftMatrix {
    u: CMatrix,
}

impl DftMatrix {
    pub fn size(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.u
    }
}

pub fn build_dft(n: usize) -> Result<DftMatrix> {
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    let scale = 1.0 / (n as f64).sqrt();
    // Reduce the exponent mod n before taking the angle so large products
    // do not lose precision.
    let u = CMatrix::from_fn(n, n, |r, c| {
        let e = (r * c) % n;
        Complex64::from_polar(scale, -2.0 * PI * e as f64 / n as f64)
    });
    Ok(DftMatrix { u })
}

/// The `N` column permutations `U_[N,k]` of the DFT matrix.
#[derive(Debug, Clone)]
pub struct PermutedDftFamily {
    index: CirculantIndex,
    dft: DftMatrix,
    members: Vec<CMatrix>,
}

impl PermutedDftFamily {
    pub fn size(&self) -> usize {
        self.index.n
    }

    pub fn index(&self) -> &CirculantIndex {
        &self.index
    }

    pub fn dft(&self) -> &DftMatrix {
        &self.dft
    }

    /// Member `k` (zero-based). This is also the combiner `F_k` of device `k`.
    pub fn member(&self, k: usize) -> Result<&CMatrix> {
        self.members.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            size: self.size(),
        })
    }

    pub fn members(&self) -> &[CMatrix] {
        &self.members
    }

    /// Diagonal of `U_[N,k] U_[N,k2]^H` in closed form.
    ///
    /// Entry `p` equals `exp(i 2 pi p s / N)` with `s = (k - k2) mod N`,
    /// so the diagonal depends only on the cyclic offset between members.
    pub fn product_diagonal(&self, k: usize, k2: usize) -> Result<CVector> {
        let n = self.size();
        for idx in [k, k2] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, size: n });
            }
        }
        let shift = (k + n - k2) % n;
        Ok(CVector::from_fn(n, |p, _| {
            let e = (p * shift) % n;
            Complex64::from_polar(1.0, 2.0 * PI * e as f64 / n as f64)
        }))
    }
}

pub fn build_family(n: usize) -> Result<PermutedDftFamily> {
    let index = build_circulant_index(n)?;
    let dft = build_dft(n)?;
    let members = (0..n)
        .map(|k| {
            let cols: Vec<CVector> = (0..n)
                .map(|j| dft.u.column(index.entry(j, k)).into_owned())
                .collect();
            CMatrix::from_columns(&cols)
        })
        .collect();
    Ok(PermutedDftFamily {
        index,
        dft,
        members,
    })
}

/// Per-slot precoders: column `k` of slot `n` is column `n` of family member `k`.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    slots: Vec<CMatrix>,
}

impl PrecoderSet {
    pub fn size(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, n: usize) -> Result<&CMatrix> {
        self.slots.get(n).ok_or(Error::IndexOutOfRange {
            index: n,
            size: self.size(),
        })
    }

    pub fn slots(&self) -> &[CMatrix] {
        &self.slots
    }

    /// `[p_(1,k) ... p_(N,k)]`, which reproduces `U_[N,k]`.
    pub fn combiner(&self, k: usize) -> Result<CMatrix> {
        let n = self.size();
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, size: n });
        }
        let cols: Vec<CVector> = self
            .slots
            .iter()
            .map(|p| p.column(k).into_owned())
            .collect();
        Ok(CMatrix::from_columns(&cols))
    }
}

pub fn build_precoders(family: &PermutedDftFamily) -> PrecoderSet {
    let n = family.size();
    let slots = (0..n)
        .map(|slot| {
            let cols: Vec<CVector> = family
                .members
                .iter()
                .map(|m| m.column(slot).into_owned())
                .collect();
            CMatrix::from_columns(&cols)
        })
        .collect();
    PrecoderSet { slots }
}

/// `U_[N,k] U_[N,k2]^H`, computed by dense multiplication.
pub fn lemma1_product(family: &PermutedDftFamily, k: usize, k2: usize) -> Result<CMatrix> {
    let a = family.member(k)?;
    let b = family.member(k2)?;
    Ok(a * b.adjoint())
}
