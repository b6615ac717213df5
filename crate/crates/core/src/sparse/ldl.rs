use std::collections::VecDeque;

use super::csr::CsrMatrix;
use crate::error::{Result, TubeError};

/// Envelope (skyline) LDLᵀ factorization of a symmetric matrix under a
/// bandwidth-reducing permutation.
#[derive(Debug, Clone)]
pub struct EnvelopeLdl {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

/// Reverse Cuthill–McKee ordering; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).filter(|&(j, v)| j != i && v != 0.0).map(|(j, _)| j).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(&adj, &degree, seed, &visited);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn level_structure(adj: &[Vec<usize>], root: usize, blocked: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = blocked.to_vec();
    seen[root] = true;
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize, blocked: &[bool]) -> usize {
    let mut root = seed;
    let mut levels = level_structure(adj, root, blocked);
    for _ in 0..8 {
        let candidate = *levels.last().unwrap().iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        let probe = level_structure(adj, candidate, blocked);
        if probe.len() <= levels.len() {
            break;
        }
        root = candidate;
        levels = probe;
    }
    root
}

fn envelope_size(a: &CsrMatrix, perm: &[usize]) -> usize {
    let n = a.nrows();
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    (0..n)
        .map(|new| {
            let old = perm[new];
            let f = a.row(old).map(|(j, _)| inv[j]).min().unwrap_or(new).min(new);
            new - f
        })
        .sum()
}

impl EnvelopeLdl {
    /// Factor `a`, choosing the natural or RCM ordering, whichever has the smaller envelope.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let natural: Vec<usize> = (0..n).collect();
        let rcm = reverse_cuthill_mckee(a);
        let perm = if envelope_size(a, &rcm) < envelope_size(a, &natural) { rcm } else { natural };
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0usize; n];
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            let f = a.row(perm[i]).map(|(j, _)| inv[j]).filter(|&j| j <= i).min().unwrap_or(i);
            first[i] = f;
            start[i + 1] = start[i] + (i - f);
        }
        let mut lower = vec![0.0; start[n]];
        let mut diag = vec![0.0; n];
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut u = Vec::new();
        for i in 0..n {
            let fi = first[i];
            let width = i - fi;
            u.clear();
            u.resize(width, 0.0);
            let mut aii = 0.0;
            for (j, v) in a.row(perm[i]) {
                let jn = inv[j];
                if jn == i {
                    aii = v;
                } else if jn < i {
                    u[jn - fi] = v;
                }
            }
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let lj = &lower[start[j]..start[j + 1]];
                let mut s = u[j - fi];
                let ui = &u[k0 - fi..j - fi];
                let ljk = &lj[k0 - fj..j - fj];
                s -= ui.iter().zip(ljk).map(|(x, y)| x * y).sum::<f64>();
                u[j - fi] = s;
            }
            let row = &mut lower[start[i]..start[i + 1]];
            let mut di = aii;
            for (k, j) in (fi..i).enumerate() {
                let l = u[k] / diag[j];
                row[k] = l;
                di -= u[k] * l;
            }
            if !di.is_finite() || di.abs() <= 1e-14 * scale {
                return Err(TubeError::Solver(format!(
                    "LDLᵀ breakdown at pivot {i} of {n}: d = {di:e} (‖A‖max = {scale:e}); the shifted matrix is singular to working precision"
                )));
            }
            diag[i] = di;
        }
        Ok(Self { perm, first, start, lower, diag })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of negative pivots: the count of eigenvalues below the shift.
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|&&d| d < 0.0).count()
    }

    pub fn envelope(&self) -> usize {
        self.lower.len()
    }

    /// Ratio of the largest to the smallest pivot magnitude.
    pub fn pivot_spread(&self) -> f64 {
        let max = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let min = self.diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
        max / min
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut Vec<f64>) {
        let n = self.len();
        work.clear();
        work.extend(self.perm.iter().map(|&p| b[p]));
        let z = work.as_mut_slice();
        for i in 0..n {
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let fi = self.first[i];
            let s: f64 = row.iter().zip(&z[fi..i]).map(|(l, x)| l * x).sum();
            z[i] -= s;
        }
        for i in 0..n {
            z[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let xi = z[i];
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            for (l, x) in row.iter().zip(z[fi..i].iter_mut()) {
                *x -= l * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = z[new];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_2d(nx: usize, ny: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| i * ny + j;
        let mut t = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                t.push((idx(i, j), idx(i, j), 4.0));
                if i + 1 < nx {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), idx(i, j), -1.0));
                }
                if j + 1 < ny {
                    t.push((idx(i, j), idx(i, j + 1), -1.0));
                    t.push((idx(i, j + 1), idx(i, j), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(nx * ny, t)
    }

    #[test]
    fn solves_grid_laplacian() {
        let a = laplacian_2d(7, 5);
        let f = EnvelopeLdl::factor(&a).unwrap();
        let x: Vec<f64> = (0..35).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; 35];
        a.matvec(&x, &mut b);
        let mut work = Vec::new();
        f.solve_in_place(&mut b, &mut work);
        let err = x.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        assert_eq!(f.negative_pivots(), 0);
    }

    #[test]
    fn rcm_narrows_a_long_thin_grid_numbered_badly() {
        // numbering along the long axis first gives a wide band
        let a = laplacian_2d(4, 40);
        let natural: Vec<usize> = (0..160).collect();
        let rcm = reverse_cuthill_mckee(&a);
        let mut sorted = rcm.clone();
        sorted.sort();
        assert_eq!(sorted, natural);
        assert!(envelope_size(&a, &rcm) < envelope_size(&a, &natural));
    }

    #[test]
    fn inertia_counts_eigenvalues_below_shift() {
        let a = CsrMatrix::diagonal_matrix(&[1.0, 2.0, 3.0, 4.0]);
        let shifted = a.shifted(2.5, &[1.0; 4]);
        let f = EnvelopeLdl::factor(&shifted).unwrap();
        assert_eq!(f.negative_pivots(), 2);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(EnvelopeLdl::factor(&a), Err(TubeError::Solver(_))));
    }
}
