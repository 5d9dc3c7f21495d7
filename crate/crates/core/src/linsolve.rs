//! Sparse linear algebra for the Newton solver: compressed-row matrices,
//! bandwidth-reducing ordering, and a banded LU with partial pivoting.
//!
//! The Jacobians here are mesh-local (vertex neighbors only), so reverse
//! Cuthill-McKee ordering followed by a banded factorization is direct,
//! deterministic, and fast enough for the mesh sizes the lab uses.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinSolveError {
    #[error("matrix is singular at elimination column {0}")]
    Singular(usize),
    #[error("dimension mismatch: matrix {n}, vector {len}")]
    Dimension { n: usize, len: usize },
}

/// Square sparse matrix in compressed-row form with a fixed sparsity
/// pattern. Entries can be accumulated into existing positions only, so a
/// Newton loop reuses one pattern across iterations.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Pattern with the diagonal plus every listed (i, j) pair in both
    /// directions, values zeroed.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut cols: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (i, j) in edges {
            assert!(i < n && j < n, "edge ({i},{j}) out of range {n}");
            cols[i].push(j);
            cols[j].push(i);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut cols {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self { n, row_ptr, col_idx, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn zero_values(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Accumulates into an existing pattern position; panics on a position
    /// outside the pattern (an assembly bug, not a runtime condition).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let pos = self.position(i, j).unwrap_or_else(|| panic!("({i},{j}) not in pattern"));
        self.values[pos] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map(|p| self.values[p]).unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        y
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
            .iter()
            .copied()
            .filter(move |&j| j != i)
    }

    fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i] - 1
    }
}

/// Reverse Cuthill-McKee ordering; `perm[new] = old`. Deterministic:
/// ties broken by vertex index.
pub fn rcm_order(m: &CsrMatrix) -> Vec<usize> {
    let n = m.n();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    loop {
        let root = match pseudo_peripheral(m, &visited) {
            Some(r) => r,
            None => break,
        };
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(root);
        visited[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = m.neighbors(u).filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (m.degree(w), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Farthest low-degree vertex found by repeated BFS from the lowest-degree
/// unvisited vertex; None when every vertex is ordered.
fn pseudo_peripheral(m: &CsrMatrix, visited: &[bool]) -> Option<usize> {
    let n = m.n();
    let mut root = (0..n)
        .filter(|&i| !visited[i])
        .min_by_key(|&i| (m.degree(i), i))?;
    let mut depth = 0usize;
    for _ in 0..4 {
        let (far, far_depth) = bfs_farthest(m, root, visited);
        if far_depth <= depth {
            break;
        }
        depth = far_depth;
        root = far;
    }
    Some(root)
}

fn bfs_farthest(m: &CsrMatrix, root: usize, visited: &[bool]) -> (usize, usize) {
    let n = m.n();
    let mut level = vec![usize::MAX; n];
    level[root] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(root);
    let mut last_level = 0usize;
    let mut frontier = vec![root];
    while let Some(u) = queue.pop_front() {
        for w in m.neighbors(u) {
            if !visited[w] && level[w] == usize::MAX {
                level[w] = level[u] + 1;
                if level[w] > last_level {
                    last_level = level[w];
                    frontier.clear();
                }
                if level[w] == last_level {
                    frontier.push(w);
                }
                queue.push_back(w);
            }
        }
    }
    let far = frontier
        .into_iter()
        .min_by_key(|&w| (m.degree(w), w))
        .unwrap_or(root);
    (far, last_level)
}

/// LU factorization of a band matrix with partial pivoting, after reverse
/// Cuthill-McKee reordering of the input. Storage and elimination follow
/// the classic band scheme: lower width b, upper width widened to 2b by
/// row interchanges.
pub struct BandedLu {
    n: usize,
    b: usize,
    /// Row-major by diagonal offset: entry (i, j) of the permuted matrix
    /// lives at `band[(i - j + 2b) * n + j]`.
    band: Vec<f64>,
    pivots: Vec<usize>,
    /// `perm[new] = old`
    perm: Vec<usize>,
}

impl BandedLu {
    pub fn factor(m: &CsrMatrix) -> Result<Self, LinSolveError> {
        let n = m.n();
        let perm = rcm_order(m);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut b = 0usize;
        for i in 0..n {
            for j in m.neighbors(i) {
                b = b.max(inv[i].abs_diff(inv[j]));
            }
        }
        let rows = 3 * b + 1;
        let mut band = vec![0.0; rows * n];
        let at = |i: usize, j: usize| (i + 2 * b - j) * n + j;
        for i_old in 0..n {
            for k in m.row_ptr[i_old]..m.row_ptr[i_old + 1] {
                let j_old = m.col_idx[k];
                band[at(inv[i_old], inv[j_old])] = m.values[k];
            }
        }

        let mut pivots = vec![0usize; n];
        for j in 0..n {
            let i_hi = (j + b).min(n - 1);
            let mut ip = j;
            let mut best = band[at(j, j)].abs();
            for i in j + 1..=i_hi {
                let v = band[at(i, j)].abs();
                if v > best {
                    best = v;
                    ip = i;
                }
            }
            if best == 0.0 {
                return Err(LinSolveError::Singular(j));
            }
            pivots[j] = ip;
            let k_hi = (j + 2 * b).min(n - 1);
            if ip != j {
                for k in j..=k_hi {
                    band.swap(at(j, k), at(ip, k));
                }
            }
            let diag = band[at(j, j)];
            for i in j + 1..=i_hi {
                let mult = band[at(i, j)] / diag;
                band[at(i, j)] = mult;
                if mult != 0.0 {
                    for k in j + 1..=k_hi {
                        band[at(i, k)] -= mult * band[at(j, k)];
                    }
                }
            }
        }
        Ok(Self { n, b, band, pivots, perm })
    }

    /// Solves A x = rhs for the original (unpermuted) ordering.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinSolveError> {
        if rhs.len() != self.n {
            return Err(LinSolveError::Dimension { n: self.n, len: rhs.len() });
        }
        let (n, b) = (self.n, self.b);
        let at = |i: usize, j: usize| (i + 2 * b - j) * n + j;
        let mut x: Vec<f64> = (0..n).map(|new| rhs[self.perm[new]]).collect();
        for j in 0..n {
            x.swap(j, self.pivots[j]);
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..=(j + b).min(n - 1) {
                    x[i] -= self.band[at(i, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.band[at(j, j)];
            let xj = x[j];
            if xj != 0.0 {
                for i in j.saturating_sub(2 * b)..j {
                    x[i] -= self.band[at(i, j)] * xj;
                }
            }
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        Ok(out)
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, width: usize, seed: u64) -> (CsrMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for _ in 0..3 {
                let off = rng.gen_range(1..=width);
                if i + off < n {
                    edges.push((i, i + off));
                }
            }
        }
        let mut m = CsrMatrix::from_edges(n, edges.iter().copied());
        for i in 0..n {
            // Strong diagonal keeps the reference solve well conditioned.
            m.add(i, i, 10.0 + rng.gen_range(0.0..1.0));
        }
        for &(i, j) in &edges {
            // Nonsymmetric off-diagonal values, like the Newton Jacobian.
            m.add(i, j, rng.gen_range(-1.0..1.0));
            m.add(j, i, rng.gen_range(-1.0..1.0));
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (m, rhs)
    }

    fn dense_of(m: &CsrMatrix) -> DMatrix<f64> {
        let n = m.n();
        DMatrix::from_fn(n, n, |i, j| m.get(i, j))
    }

    #[test]
    fn banded_lu_matches_dense_lu() {
        for seed in [1u64, 2, 3] {
            let (m, rhs) = random_system(120, 7, seed);
            let lu = BandedLu::factor(&m).unwrap();
            let x = lu.solve(&rhs).unwrap();
            let dense = dense_of(&m).lu();
            let xd = dense.solve(&DVector::from_column_slice(&rhs)).unwrap();
            let err = x
                .iter()
                .zip(xd.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "seed {seed}: max deviation {err}");
        }
    }

    #[test]
    fn solution_satisfies_the_system() {
        let (m, rhs) = random_system(200, 5, 9);
        let x = BandedLu::factor(&m).unwrap().solve(&rhs).unwrap();
        let back = m.mul_vec(&x);
        let err = back
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-11, "residual {err}");
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row interchange.
        let mut m = CsrMatrix::from_edges(2, [(0, 1)]);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        let lu = BandedLu::factor(&m).unwrap();
        let x = lu.solve(&[2.0, 3.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_reported() {
        let m = CsrMatrix::from_edges(3, [(0, 1), (1, 2)]);
        assert!(matches!(BandedLu::factor(&m), Err(LinSolveError::Singular(_))));
    }

    #[test]
    fn rcm_recovers_path_bandwidth() {
        // A path graph presented in scrambled order has large natural
        // bandwidth; reverse Cuthill-McKee restores bandwidth 1.
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut label: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            label.swap(i, j);
        }
        let edges: Vec<(usize, usize)> =
            (0..n - 1).map(|k| (label[k], label[k + 1])).collect();
        let mut m = CsrMatrix::from_edges(n, edges.iter().copied());
        for i in 0..n {
            m.add(i, i, 4.0);
        }
        for &(i, j) in &edges {
            m.add(i, j, -1.0);
            m.add(j, i, -1.0);
        }
        let lu = BandedLu::factor(&m).unwrap();
        assert_eq!(lu.bandwidth(), 1, "path graph must reorder to bandwidth 1");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut m = CsrMatrix::from_edges(2, []);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        let lu = BandedLu::factor(&m).unwrap();
        assert!(matches!(lu.solve(&[1.0]), Err(LinSolveError::Dimension { .. })));
    }
}
