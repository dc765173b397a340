//! Compressed-row storage and a profile (skyline) LDLᵀ direct solver.
//!
//! The stiffness matrices here are symmetric, so the factorization stores
//! the upper profile column by column after a reverse Cuthill-McKee
//! renumbering. No pivoting is performed; a zero or non-finite pivot is
//! reported as a solve failure.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the structure from per-row column sets; values start at zero.
    pub fn from_pattern(n: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self { n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    /// Sums duplicate triplets into a new matrix.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::from_pattern(n, rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Position of (i, j) in the value array.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let cols = &self.col_idx[start..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|p| start + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Adds `v` at (i, j). Panics if (i, j) is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.position(i, j).unwrap_or_else(|| panic!("({i}, {j}) not in sparsity pattern"));
        self.values[p] += v;
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// max |Aᵢⱼ − Aⱼᵢ|
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph. `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).expect("unvisited node");
        let start = pseudo_peripheral(a, start, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = a.row(v).0.iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &CsrMatrix, start: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; a.dim()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &u in a.row(v).0 {
            if level[u] == usize::MAX {
                level[u] = level[v] + 1;
                queue.push_back(u);
            }
        }
    }
    level
}

fn pseudo_peripheral(a: &CsrMatrix, start: usize, degree: &[usize]) -> usize {
    let mut current = start;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(a, current);
        let depth = level.iter().filter(|&&l| l != usize::MAX).max().copied().unwrap_or(0);
        if depth <= ecc && current != start {
            break;
        }
        ecc = depth;
        let candidate = (0..a.dim())
            .filter(|&i| level[i] == depth)
            .min_by_key(|&i| (degree[i], i))
            .unwrap_or(current);
        if candidate == current {
            break;
        }
        current = candidate;
    }
    current
}

/// Symbolic profile for a fixed sparsity pattern and ordering.
#[derive(Debug, Clone)]
pub struct SkylineLayout {
    perm: Vec<usize>,
    inv: Vec<usize>,
    /// First stored row of each (permuted) column.
    first: Vec<usize>,
    /// Offset of each column's storage; column j occupies
    /// `col_start[j]..col_start[j + 1]` for rows `first[j]..=j`.
    col_start: Vec<usize>,
}

impl SkylineLayout {
    pub fn new(a: &CsrMatrix) -> Self {
        Self::with_ordering(a, reverse_cuthill_mckee(a))
    }

    pub fn with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Self {
        let n = a.dim();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for &old_j in a.row(old_i).0 {
                let j = inv[old_j];
                if i < j {
                    first[j] = first[j].min(i);
                }
            }
        }
        let mut col_start = Vec::with_capacity(n + 1);
        col_start.push(0);
        for j in 0..n {
            col_start.push(col_start[j] + (j - first[j] + 1));
        }
        Self { perm, inv, first, col_start }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Stored entries in the upper profile, diagonal included.
    pub fn profile_size(&self) -> usize {
        *self.col_start.last().unwrap_or(&0)
    }
}

/// Dot product with independent partial sums so the loop vectorizes; the
/// summation order is fixed, so results stay reproducible.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0; LANES];
    let (ca, ra) = a.split_at(a.len() - a.len() % LANES);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(LANES).zip(cb.chunks_exact(LANES)) {
        for k in 0..LANES {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

/// LDLᵀ factors in skyline storage.
#[derive(Debug, Clone)]
pub struct SkylineLdl<'a> {
    layout: &'a SkylineLayout,
    /// Column j holds Lⱼᵢ for i in first[j]..j followed by Dⱼ.
    data: Vec<f64>,
}

impl<'a> SkylineLdl<'a> {
    pub fn factor(layout: &'a SkylineLayout, a: &CsrMatrix) -> Result<Self> {
        let n = layout.dim();
        if a.dim() != n {
            return Err(Error::LinearSolveFailure(format!("matrix dimension {} != layout {}", a.dim(), n)));
        }
        let mut data = vec![0.0; layout.profile_size()];
        for old_i in 0..n {
            let i = layout.inv[old_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = layout.inv[old_j];
                if i <= j {
                    data[layout.col_start[j] + (i - layout.first[j])] = v;
                }
            }
        }

        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for j in 0..n {
            let fj = layout.first[j];
            let sj = layout.col_start[j];
            // Crout: g_ij = a_ij − Σ_k L_ki g_kj, stored in place.
            for i in fj..j {
                let fi = layout.first[i];
                let si = layout.col_start[i];
                let k0 = fi.max(fj);
                if k0 < i {
                    let col_i = &data[si + (k0 - fi)..si + (i - fi)];
                    let col_j = &data[sj + (k0 - fj)..sj + (i - fj)];
                    let dot = dot(col_i, col_j);
                    data[sj + (i - fj)] -= dot;
                }
            }
            let mut diag = data[sj + (j - fj)];
            for i in fj..j {
                let g = data[sj + (i - fj)];
                let d = data[layout.col_start[i] + (i - layout.first[i])];
                let l = g / d;
                diag -= l * g;
                data[sj + (i - fj)] = l;
            }
            if !diag.is_finite() || diag.abs() <= 1e-14 * scale {
                return Err(Error::LinearSolveFailure(format!("pivot {diag:e} at row {}", layout.perm[j])));
            }
            data[sj + (j - fj)] = diag;
        }
        Ok(Self { layout, data })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let l = self.layout;
        let n = l.dim();
        let mut y: Vec<f64> = (0..n).map(|i| b[l.perm[i]]).collect();
        // L y = b
        for j in 0..n {
            let fj = l.first[j];
            let sj = l.col_start[j];
            let col = &self.data[sj..sj + (j - fj)];
            let dot = dot(col, &y[fj..j]);
            y[j] -= dot;
        }
        for j in 0..n {
            y[j] /= self.data[l.col_start[j] + (j - l.first[j])];
        }
        // Lᵀ x = y
        for j in (0..n).rev() {
            let fj = l.first[j];
            let sj = l.col_start[j];
            let yj = y[j];
            for (k, lv) in self.data[sj..sj + (j - fj)].iter().enumerate() {
                y[fj + k] -= lv * yj;
            }
        }
        let mut x = vec![0.0; n];
        for (i, v) in y.into_iter().enumerate() {
            x[l.perm[i]] = v;
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::LinearSolveFailure("non-finite solution".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_2d(m: usize) -> CsrMatrix {
        let n = m * m;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let p = i * m + j;
                t.push((p, p, 4.0));
                if i > 0 {
                    t.push((p, p - m, -1.0));
                }
                if i + 1 < m {
                    t.push((p, p + m, -1.0));
                }
                if j > 0 {
                    t.push((p, p - 1, -1.0));
                }
                if j + 1 < m {
                    t.push((p, p + 1, -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn triplets_are_summed() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0), (0, 1, -1.0), (1, 1, 5.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![2.0, 4.0]);
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn rcm_is_permutation() {
        let a = laplacian_2d(7);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..49).collect::<Vec<_>>());
    }

    #[test]
    fn rcm_reduces_profile_of_shuffled_grid() {
        let a = laplacian_2d(12);
        let natural = SkylineLayout::with_ordering(&a, (0..a.dim()).collect());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut shuffled: Vec<usize> = (0..a.dim()).collect();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let bad = SkylineLayout::with_ordering(&a, shuffled);
        let rcm = SkylineLayout::new(&a);
        assert!(rcm.profile_size() <= natural.profile_size() * 11 / 10);
        assert!(rcm.profile_size() < bad.profile_size() / 2);
    }

    #[test]
    fn solves_laplacian() {
        let a = laplacian_2d(9);
        let x_true: Vec<f64> = (0..a.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x_true);
        let layout = SkylineLayout::new(&a);
        let x = SkylineLdl::factor(&layout, &a).unwrap().solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_without_zero_pivot() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        let layout = SkylineLayout::with_ordering(&a, vec![0, 1]);
        let x = SkylineLdl::factor(&layout, &a).unwrap().solve(&[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_fails() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        let layout = SkylineLayout::new(&a);
        assert!(matches!(SkylineLdl::factor(&layout, &a), Err(Error::LinearSolveFailure(_))));
    }

    proptest! {
        #[test]
        fn matches_dense_solve(seed in 0u64..500, n in 2usize..25) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Vec::new();
            for i in 0..n {
                t.push((i, i, n as f64 + rng.random_range(0.0..1.0)));
                for j in 0..i {
                    if rng.random_bool(0.3) {
                        let v = rng.random_range(-1.0..1.0);
                        t.push((i, j, v));
                        t.push((j, i, v));
                    }
                }
            }
            let a = CsrMatrix::from_triplets(n, &t);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let layout = SkylineLayout::new(&a);
            let x = SkylineLdl::factor(&layout, &a).unwrap().solve(&b).unwrap();
            let dense = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
            let oracle = dense.lu().solve(&DVector::from_vec(b)).unwrap();
            for i in 0..n {
                prop_assert!((x[i] - oracle[i]).abs() < 1e-10);
            }
        }
    }
}
