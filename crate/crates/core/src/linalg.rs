//! Sparse symmetric storage and the two Cholesky factorizations used by the
//! simulator: an envelope (profile) factorization of the FEM system matrix
//! under reverse Cuthill-McKee ordering, and a dense factorization of noise
//! covariance matrices.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Symmetric matrix in compressed sparse row form, both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in the
    /// order given, so a fixed triplet order gives a fixed result.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut fill = counts.clone();
        for &(i, j, v) in triplets {
            cols[fill[i]] = j;
            vals[fill[i]] = v;
            fill[i] += 1;
        }
        // sort each row by column (stable) and merge duplicates
        let mut row_ptr = vec![0usize; n + 1];
        let mut out_cols = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut s = 0.0;
                while k < scratch.len() && scratch[k].0 == c {
                    s += scratch[k].1;
                    k += 1;
                }
                out_cols.push(c);
                out_vals.push(s);
            }
            row_ptr[i + 1] = out_cols.len();
        }
        SparseSymMatrix { n, row_ptr, cols: out_cols, vals: out_vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match r.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    /// `alpha * self + beta * other`; both must share a sparsity pattern
    /// superset-free union, so the result pattern is the union.
    pub fn linear_combination(&self, alpha: f64, other: &SparseSymMatrix, beta: f64) -> SparseSymMatrix {
        assert_eq!(self.n, other.n);
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            trip.extend(self.row(i).map(|(j, v)| (i, j, alpha * v)));
            trip.extend(other.row(i).map(|(j, v)| (i, j, beta * v)));
        }
        SparseSymMatrix::from_triplets(self.n, &trip)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn total_sum(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }
}

/// Reverse Cuthill-McKee ordering of the adjacency graph of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut nbrs: Vec<usize> = Vec::new();
    while order.len() < n {
        // start each component from a minimum-degree node (lowest index on ties)
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).expect("unvisited node exists");
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]));
            nbrs.sort_by_key(|&j| (degree[j], j));
            for &j in &nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor of a sparse SPD matrix stored by rows over its envelope.
///
/// Row `i` of the permuted factor occupies columns `first[i]..=i`; fill-in
/// never leaves the envelope, so the storage is fixed by the pattern.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &SparseSymMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn <= new {
                    data[start[new] + jn - first[new]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (head, tail) = data.split_at_mut(start[i]);
                let row_i = &mut tail[..i - fi + 1];
                let dot: f64 = if j == i {
                    row_i[lo - fi..j - fi].iter().map(|x| x * x).sum()
                } else {
                    let row_j = &head[start[j]..start[j] + (j - fj + 1)];
                    row_i[lo - fi..j - fi].iter().zip(&row_j[lo - fj..j - fj]).map(|(x, y)| x * y).sum()
                };
                if j == i {
                    let d = row_i[i - fi] - dot;
                    if !(d > 0.0) {
                        return Err(Error::NotSpd { pivot: perm[i], value: d });
                    }
                    row_i[i - fi] = d.sqrt();
                } else {
                    let ljj = head[start[j] + j - fj];
                    row_i[j - fi] = (row_i[j - fi] - dot) / ljj;
                }
            }
        }
        Ok(EnvelopeCholesky { n, perm, first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries, a measure of factor size.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        assert_eq!(x.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        // L^T x = y
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (l, v) in row[..i - fi].iter().zip(&mut y[fi..i]) {
                *v -= l * yi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

/// Dense lower-triangular factor, rows packed contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLower {
    n: usize,
    /// row `i` occupies `data[i (i + 1) / 2 .. (i + 1) (i + 2) / 2]`
    data: Vec<f64>,
}

impl DenseLower {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let s = i * (i + 1) / 2;
        &self.data[s..s + i + 1]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.row(i)[j]
        }
    }

    /// `L x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), &x[..=i]);
        }
    }

    /// `L L^T` as a dense square matrix.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let mut k = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for j in 0..=i {
                let v = dot(&self.row(i)[..=j], &self.row(j)[..=j]);
                k[i][j] = v;
                k[j][i] = v;
            }
        }
        k
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorize without reassociation
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Cholesky of the dense symmetric matrix `k + shift * I`; `k` is read from
/// its lower triangle. Returns `None` on a non-positive pivot.
pub fn dense_cholesky_shifted(k: &[Vec<f64>], shift: f64) -> Option<DenseLower> {
    let n = k.len();
    let mut data = vec![0.0; n * (n + 1) / 2];
    for i in 0..n {
        let si = i * (i + 1) / 2;
        for j in 0..=i {
            let sj = j * (j + 1) / 2;
            let (head, tail) = data.split_at_mut(si);
            let row_i = &mut tail[..=i];
            let s = if j == i { dot(&row_i[..j], &row_i[..j]) } else { dot(&row_i[..j], &head[sj..sj + j]) };
            if j == i {
                let d = k[i][i] + shift - s;
                if !(d > 0.0) || !d.is_finite() {
                    return None;
                }
                row_i[i] = d.sqrt();
            } else {
                let ljj = head[sj + j];
                row_i[j] = (k[i][j] - s) / ljj;
            }
        }
    }
    Some(DenseLower { n, data })
}
