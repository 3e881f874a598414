//! Sparse LDLᵀ factorization for quasi-definite matrices.
//!
//! The factorization is the classic up-looking scheme driven by the
//! elimination tree. No pivoting is performed: quasi-definite matrices admit
//! an LDLᵀ factorization for every symmetric permutation, so the permutation
//! is chosen purely to limit fill.

use super::sparse::{CscMatrix, TripletBuilder};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LdlError {
    #[error("matrix is not upper triangular")]
    NotUpperTriangular,
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("zero pivot at column {0}")]
    ZeroPivot(usize),
    #[error("non-finite pivot at column {0}")]
    NonFinite(usize),
}

const NONE: usize = usize::MAX;

/// Fill-reducing symmetric permutation.
#[derive(Debug, Clone)]
pub struct Permutation {
    /// `perm[new] = old`
    pub perm: Vec<usize>,
    /// `iperm[old] = new`
    pub iperm: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            iperm: (0..n).collect(),
        }
    }

    pub fn from_order(perm: Vec<usize>) -> Self {
        let mut iperm = vec![NONE; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        debug_assert!(iperm.iter().all(|&i| i != NONE), "not a permutation");
        Self { perm, iperm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

/// Reverse Cuthill–McKee ordering of an undirected graph given as adjacency
/// lists. Each connected component is started from a pseudo-peripheral node.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![NONE; n];

    let bfs_far = |start: usize, level: &mut Vec<usize>| -> (usize, usize) {
        // returns (eccentricity, a minimum-degree node in the last level)
        let mut touched = vec![start];
        level[start] = 0;
        let mut head = 0;
        while head < touched.len() {
            let u = touched[head];
            head += 1;
            for &v in &adj[u] {
                if level[v] == NONE {
                    level[v] = level[u] + 1;
                    touched.push(v);
                }
            }
        }
        let ecc = touched.iter().map(|&u| level[u]).max().unwrap_or(0);
        let far = touched
            .iter()
            .copied()
            .filter(|&u| level[u] == ecc)
            .min_by_key(|&u| (degree[u], u))
            .unwrap_or(start);
        for &u in &touched {
            level[u] = NONE;
        }
        (ecc, far)
    };

    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&u| (degree[u], u));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral node search
        let mut start = seed;
        let (mut ecc, mut far) = bfs_far(start, &mut level);
        for _ in 0..8 {
            let (e2, f2) = bfs_far(far, &mut level);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let comp_start = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = comp_start;
        let mut nbrs = Vec::new();
        while head < order.len() {
            let u = order[head];
            head += 1;
            nbrs.clear();
            nbrs.extend(adj[u].iter().copied().filter(|&v| !visited[v]));
            nbrs.sort_by_key(|&v| (degree[v], v));
            nbrs.dedup();
            for &v in &nbrs {
                visited[v] = true;
                order.push(v);
            }
        }
    }
    order.reverse();
    order
}

/// Applies a symmetric permutation to the upper triangle of a symmetric
/// matrix. Returns the permuted upper triangle together with, for every
/// stored entry of `a`, the index of that entry in the permuted values.
pub fn permute_sym_upper(a: &CscMatrix, p: &Permutation) -> (CscMatrix, Vec<usize>) {
    let n = a.ncols();
    let mut b = TripletBuilder::with_capacity(n, n, a.nnz());
    for (i, j, v) in a.iter() {
        let (pi, pj) = (p.iperm[i], p.iperm[j]);
        b.push(pi.min(pj), pi.max(pj), v);
    }
    let permuted = b.build();
    let mut map = Vec::with_capacity(a.nnz());
    for (i, j, _) in a.iter() {
        let (pi, pj) = (p.iperm[i], p.iperm[j]);
        let (r, c) = (pi.min(pj), pi.max(pj));
        let range = permuted.colptr()[c]..permuted.colptr()[c + 1];
        let k = permuted.rowind()[range.clone()]
            .binary_search(&r)
            .expect("permuted entry present");
        map.push(range.start + k);
    }
    (permuted, map)
}

/// LDLᵀ factors of an already-permuted upper-triangular matrix.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
}

impl LdlFactor {
    /// Symbolic analysis followed by a numeric factorization.
    pub fn new(a: &CscMatrix) -> Result<Self, LdlError> {
        let n = a.ncols();
        if a.nrows() != n {
            return Err(LdlError::NotSquare(a.nrows(), n));
        }
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for p in a.colptr()[j]..a.colptr()[j + 1] {
                let mut i = a.rowind()[p];
                if i > j {
                    return Err(LdlError::NotUpperTriangular);
                }
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        let mut f = Self {
            n,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
        };
        f.refactor(a)?;
        Ok(f)
    }

    pub fn nnz(&self) -> usize {
        self.lx.len()
    }

    /// Numeric factorization reusing the symbolic structure. `a` must have
    /// the same pattern as the matrix passed to [`LdlFactor::new`].
    pub fn refactor(&mut self, a: &CscMatrix) -> Result<(), LdlError> {
        let n = self.n;
        let mut y_vals = vec![0.0; n];
        let mut y_used = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_in_col: Vec<usize> = self.lp[..n].to_vec();
        let (ap, ai, ax) = (a.colptr(), a.rowind(), a.values());

        for k in 0..n {
            let mut nnz_y = 0;
            self.d[k] = 0.0;
            for p in ap[k]..ap[k + 1] {
                let b = ai[p];
                if b == k {
                    self.d[k] = ax[p];
                    continue;
                }
                y_vals[b] = ax[p];
                if !y_used[b] {
                    y_used[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut next = self.etree[b];
                    while next != NONE && next < k {
                        if y_used[next] {
                            break;
                        }
                        y_used[next] = true;
                        elim[ne] = next;
                        ne += 1;
                        next = self.etree[next];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for idx in (0..nnz_y).rev() {
                let c = y_idx[idx];
                let slot = next_in_col[c];
                let yc = y_vals[c];
                for j in self.lp[c]..slot {
                    y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[slot] = k;
                let l = yc * self.dinv[c];
                self.lx[slot] = l;
                self.d[k] -= yc * l;
                next_in_col[c] += 1;
                y_vals[c] = 0.0;
                y_used[c] = false;
            }
            if self.d[k] == 0.0 {
                return Err(LdlError::ZeroPivot(k));
            }
            if !self.d[k].is_finite() {
                return Err(LdlError::NonFinite(k));
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        Ok(())
    }

    /// Solves `L D Lᵀ x = b` in place (permuted coordinates).
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for j in self.lp[i]..self.lp[i + 1] {
                    x[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[j] * x[self.li[j]];
            }
            x[i] = acc;
        }
    }

    /// Number of negative pivots (inertia check for quasi-definite systems).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&d| d < 0.0).count()
    }
}
