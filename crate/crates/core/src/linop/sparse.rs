use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{LinearOperator, PsdClaim};
use crate::error::{Error, Result};

/// Symmetric sparse matrix in compressed row layout.
///
/// Both triangles are stored. Column indices are strictly increasing within
/// each row and entry `(i, j)` is present iff `(j, i)` is, with equal value.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    psd: PsdClaim,
}

impl SparseSymmetricMatrix {
    /// Builds from entries that already cover both triangles. Duplicates are
    /// summed. Returns the first asymmetric coordinate pair on failure.
    pub(crate) fn from_full_entries(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> std::result::Result<Self, (usize, usize)> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in entries {
            *map.entry((i, j)).or_insert(0.0) += v;
        }
        for (&(i, j), &v) in &map {
            if i == j {
                continue;
            }
            match map.get(&(j, i)) {
                Some(&w) if (v - w).abs() <= 1e-12 * v.abs().max(w.abs()) => {}
                _ => return Err((i, j)),
            }
        }
        Ok(Self::from_sorted(n, map))
    }

    /// Builds from one triangle (or any mix). Each off-diagonal entry is
    /// mirrored; duplicates are summed.
    pub fn from_triangle(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::param(format!("entry ({i}, {j}) outside {n}x{n}")));
            }
            *map.entry((i, j)).or_insert(0.0) += v;
            if i != j {
                *map.entry((j, i)).or_insert(0.0) += v;
            }
        }
        Ok(Self::from_sorted(n, map))
    }

    /// Unit-weight adjacency matrix of an undirected simple graph.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::param(format!("edge ({i}, {j}) outside {n} nodes")));
            }
            map.insert((i, j), 1.0);
            map.insert((j, i), 1.0);
        }
        Ok(Self::from_sorted(n, map))
    }

    fn from_sorted(n: usize, map: BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(map.len());
        let mut values = Vec::with_capacity(map.len());
        for (&(i, j), &v) in &map {
            row_offsets[i + 1] += 1;
            col_indices.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self {
            n,
            row_offsets,
            col_indices,
            values,
            psd: PsdClaim::Unknown,
        }
    }

    /// Records the caller's claim about the spectrum. Not verified.
    pub fn with_psd_claim(mut self, claim: PsdClaim) -> Self {
        self.psd = claim;
        self
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                dense[(i, j)] = v;
            }
        }
        dense
    }

    /// Exact diagonal of `A^3`: `(A^3)_ii = sum_j A_ij sum_k A_jk A_ki`.
    pub fn cube_diagonal(&self) -> Vec<f64> {
        let mut marker = vec![0.0; self.n];
        let mut diag = vec![0.0; self.n];
        for (i, d) in diag.iter_mut().enumerate() {
            let (cols_i, vals_i) = self.row(i);
            for (&k, &v) in cols_i.iter().zip(vals_i) {
                marker[k] = v;
            }
            let mut acc = 0.0;
            for (&j, &a_ij) in cols_i.iter().zip(vals_i) {
                let (cols_j, vals_j) = self.row(j);
                let inner: f64 = cols_j.iter().zip(vals_j).map(|(&k, &a_jk)| a_jk * marker[k]).sum();
                acc += a_ij * inner;
            }
            *d = acc;
            for &k in cols_i {
                marker[k] = 0.0;
            }
        }
        diag
    }
}

impl LinearOperator for SparseSymmetricMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
        Ok(())
    }

    fn psd_claim(&self) -> PsdClaim {
        self.psd
    }
}
