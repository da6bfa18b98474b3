//! Observation sets and masked matrices.
//!
//! An [`ObservationMask`] is a sorted list of 0-based `(row, col)` pairs. Its
//! text form is one `row,col` line per entry, in sorted order.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numkit::DenseMatrix;

pub type Index2 = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    entries: Vec<Index2>,
}

/// Outcome of [`ObservationMask::remove`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removal {
    pub mask: ObservationMask,
    pub removed: usize,
    /// Victims that were in range but not in the mask.
    pub ignored: usize,
}

impl ObservationMask {
    /// Builds a mask from arbitrary-order pairs. Duplicates and out-of-range
    /// pairs are rejected.
    pub fn new(rows: usize, cols: usize, entries: impl IntoIterator<Item = Index2>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::arg(format!("mask dimensions must be positive, got {rows}x{cols}")));
        }
        let mut entries: Vec<Index2> = entries.into_iter().collect();
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= rows || j >= cols) {
            return Err(Error::arg(format!("mask entry ({i},{j}) outside {rows}x{cols}")));
        }
        entries.sort_unstable();
        if let Some(w) = entries.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::arg(format!("duplicate mask entry ({},{})", w[0].0, w[0].1)));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        let entries = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
        Self { rows, cols, entries }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    /// Mask of the row-major linear indices `idx` (need not be sorted).
    pub(crate) fn from_linear(rows: usize, cols: usize, mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        let entries = idx.into_iter().map(|k| (k / cols, k % cols)).collect();
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Index2] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = Index2> + '_ {
        self.entries.iter().copied()
    }

    pub fn contains(&self, idx: Index2) -> bool {
        self.entries.binary_search(&idx).is_ok()
    }

    /// `|Ω| / (rows·cols)`.
    pub fn density(&self) -> f64 {
        self.entries.len() as f64 / (self.rows * self.cols) as f64
    }

    /// The erasure set Ω̄.
    pub fn complement(&self) -> Self {
        let indicator = self.indicator();
        let entries = indicator
            .iter()
            .enumerate()
            .filter(|(_, &on)| !on)
            .map(|(k, _)| (k / self.cols, k % self.cols))
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    /// Row-major membership flags.
    pub fn indicator(&self) -> Vec<bool> {
        let mut flags = vec![false; self.rows * self.cols];
        for &(i, j) in &self.entries {
            flags[i * self.cols + j] = true;
        }
        flags
    }

    pub fn is_subset_of(&self, other: &ObservationMask) -> bool {
        self.shape() == other.shape() && self.entries.iter().all(|&e| other.contains(e))
    }

    /// Drops `victims` from the mask. Victims not present are ignored and
    /// counted; out-of-range victims are an error.
    pub fn remove(&self, victims: &[Index2]) -> Result<Removal> {
        if let Some(&(i, j)) = victims.iter().find(|&&(i, j)| i >= self.rows || j >= self.cols) {
            return Err(Error::arg(format!(
                "victim ({i},{j}) outside {}x{}",
                self.rows, self.cols
            )));
        }
        let mut sorted = victims.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut entries = Vec::with_capacity(self.entries.len());
        let mut v = sorted.iter().peekable();
        for &e in &self.entries {
            while v.next_if(|&&x| x < e).is_some() {}
            if v.next_if(|&&x| x == e).is_none() {
                entries.push(e);
            }
        }
        let removed = self.entries.len() - entries.len();
        Ok(Removal {
            mask: Self {
                rows: self.rows,
                cols: self.cols,
                entries,
            },
            removed,
            ignored: sorted.len() - removed,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.entries.len() * 8);
        for &(i, j) in &self.entries {
            writeln!(s, "{i},{j}").unwrap();
        }
        s
    }

    /// Parses the `row,col` line format. Lines must already be sorted.
    pub fn parse_text(rows: usize, cols: usize, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::format("mask", format!("line {}: expected row,col", lineno + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::format("mask", format!("line {}: {e}", lineno + 1)))
            };
            entries.push((parse(a)?, parse(b)?));
        }
        if entries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::format("mask", "entries not strictly sorted"));
        }
        Self::new(rows, cols, entries)
    }
}

/// `a` on Ω, zero on Ω̄.
pub fn project(a: &DenseMatrix, mask: &ObservationMask) -> Result<DenseMatrix> {
    if a.shape() != mask.shape() {
        return Err(Error::arg(format!(
            "cannot project {}x{} matrix onto {}x{} mask",
            a.rows(),
            a.cols(),
            mask.rows,
            mask.cols
        )));
    }
    let mut out = DenseMatrix::zeros(a.rows(), a.cols());
    for idx in mask.iter() {
        out[idx] = a[idx];
    }
    Ok(out)
}

/// Observed values on Ω with the canonical zero fill on Ω̄.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    values: DenseMatrix,
    mask: ObservationMask,
}

impl MaskedMatrix {
    /// Wraps already zero-filled values; fails if anything outside the mask
    /// is non-zero.
    pub fn new(values: DenseMatrix, mask: ObservationMask) -> Result<Self> {
        if values.shape() != mask.shape() {
            return Err(Error::arg("values and mask shapes differ"));
        }
        let flags = mask.indicator();
        if values.as_slice().iter().zip(&flags).any(|(&v, &on)| !on && v != 0.0) {
            return Err(Error::arg("masked matrix has non-zero values outside its mask"));
        }
        Ok(Self { values, mask })
    }

    /// Keeps `a` on the mask and zero-fills the rest.
    pub fn observe(a: &DenseMatrix, mask: ObservationMask) -> Result<Self> {
        Ok(Self {
            values: project(a, &mask)?,
            mask,
        })
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// The same observations restricted to a sub-mask.
    pub fn restrict(&self, mask: &ObservationMask) -> Result<Self> {
        if !mask.is_subset_of(&self.mask) {
            return Err(Error::arg("restriction mask is not a subset of the observed set"));
        }
        Self::observe(&self.values, mask.clone())
    }

    pub fn into_parts(self) -> (DenseMatrix, ObservationMask) {
        (self.values, self.mask)
    }
}
