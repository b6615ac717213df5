use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::csr::CsrMatrix;
use super::ldl::EnvelopeLdl;
use crate::error::{Result, TubeError};

/// Settings for [`lowest_generalized`].
#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub tol: f64,
    pub seed: u64,
    pub max_restarts: usize,
    /// Move the shift up towards the wanted cluster before the main run.
    pub adaptive_shift: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-10, seed: 0, max_restarts: 200, adaptive_shift: true }
    }
}

/// Converged generalized eigenpairs, ascending.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// ‖Ax − λMx‖ / ‖Mx‖ per pair.
    pub residuals: Vec<f64>,
    /// M-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    pub shift: f64,
    pub restarts: usize,
    pub converged: bool,
}

/// The operator M^{1/2}(A − σM)^{-1}M^{1/2}.
struct ShiftInvert {
    ldl: EnvelopeLdl,
    sqrt_m: Vec<f64>,
    work: Vec<f64>,
    sigma: f64,
}

impl ShiftInvert {
    fn new(a: &CsrMatrix, mass: &[f64], sigma: f64) -> Result<Self> {
        let ldl = EnvelopeLdl::factor(&a.shifted(sigma, mass))?;
        Ok(Self { ldl, sqrt_m: mass.iter().map(|m| m.sqrt()).collect(), work: Vec::new(), sigma })
    }

    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        for i in 0..x.len() {
            y[i] = x[i] * self.sqrt_m[i];
        }
        self.ldl.solve_in_place(y, &mut self.work);
        for i in 0..x.len() {
            y[i] *= self.sqrt_m[i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Thick-restart Lanczos with full reorthogonalization; returns the `want`
/// largest eigenpairs of the operator (θ descending) and the iteration count.
fn thick_restart(
    op: &mut ShiftInvert,
    n: usize,
    want: usize,
    tol: f64,
    max_restarts: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, usize, bool) {
    let m = (2 * want + 20).max(40).min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = DMatrix::<f64>::zeros(m + 1, m);
    let mut v0: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let norm = dot(&v0, &v0).sqrt();
    v0.iter_mut().for_each(|x| *x /= norm);
    basis.push(v0);
    let mut kept = 0usize;
    let mut w = vec![0.0; n];
    let mut restarts = 0;
    loop {
        // extend the basis from column `kept` to m
        let mut j = kept;
        let mut size = m;
        while j < m {
            op.apply(&basis[j], &mut w);
            let mut coeffs = vec![0.0; j + 1];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let c = dot(v, &w);
                    coeffs[i] += c;
                    axpy(-c, v, &mut w);
                }
            }
            for (i, c) in coeffs.into_iter().enumerate() {
                h[(i, j)] = c;
            }
            let beta = dot(&w, &w).sqrt();
            h[(j + 1, j)] = beta;
            let scale = h.view((0, 0), (j + 1, j + 1)).amax().max(f64::MIN_POSITIVE);
            if beta <= 1e-13 * scale {
                // invariant subspace
                size = j + 1;
                break;
            }
            let next: Vec<f64> = w.iter().map(|x| x / beta).collect();
            if basis.len() > j + 1 {
                basis[j + 1] = next;
            } else {
                basis.push(next);
            }
            j += 1;
        }
        let hm = h.view((0, 0), (size, size)).into_owned();
        let sym = (&hm + hm.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let beta_m = if size == m { h[(m, m - 1)] } else { 0.0 };
        let got = want.min(size);
        let mut converged = true;
        let theta_max = eig.eigenvalues[order[0]].abs();
        for &k in order.iter().take(got) {
            let res = (beta_m * eig.eigenvectors[(size - 1, k)]).abs();
            if res > tol * theta_max {
                converged = false;
            }
        }
        let ritz = |cols: &[usize]| -> Vec<Vec<f64>> {
            cols.iter()
                .map(|&k| {
                    let mut y = vec![0.0; n];
                    for i in 0..size {
                        axpy(eig.eigenvectors[(i, k)], &basis[i], &mut y);
                    }
                    y
                })
                .collect()
        };
        if converged || restarts >= max_restarts || size < m {
            let cols: Vec<usize> = order.iter().take(got).copied().collect();
            let thetas = cols.iter().map(|&k| eig.eigenvalues[k]).collect();
            let res = cols.iter().map(|&k| (beta_m * eig.eigenvectors[(size - 1, k)]).abs()).collect();
            return (thetas, ritz(&cols), res, restarts, converged || size < m);
        }
        restarts += 1;
        // keep the wanted Ritz vectors plus a few extra to speed convergence
        kept = (want + (m - want) / 2).min(m - 1);
        let cols: Vec<usize> = order.iter().take(kept).copied().collect();
        let mut new_basis = ritz(&cols);
        let last = basis[m].clone();
        let mut new_h = DMatrix::<f64>::zeros(m + 1, m);
        for (i, &k) in cols.iter().enumerate() {
            new_h[(i, i)] = eig.eigenvalues[k];
            let coupling = beta_m * eig.eigenvectors[(m - 1, k)];
            new_h[(kept, i)] = coupling;
            new_h[(i, kept)] = coupling;
        }
        new_basis.push(last);
        basis = new_basis;
        h = new_h;
        // column `kept` is rebuilt by the extension loop; clear the preset couplings there
        for i in 0..kept {
            h[(i, kept)] = 0.0;
        }
    }
}

/// The `k` lowest eigenpairs of A x = λ M x with M diagonal positive and
/// A symmetric positive definite, by shift-invert Lanczos.
pub fn lowest_generalized(a: &CsrMatrix, mass: &[f64], k: usize, opts: &LanczosOptions) -> Result<Eigenpairs> {
    let n = a.nrows();
    if k == 0 || k > n {
        return Err(TubeError::Precondition(format!("requested {k} eigenpairs of a {n}-dimensional problem")));
    }
    if mass.len() != n || mass.iter().any(|&m| !(m > 0.0)) {
        return Err(TubeError::Precondition("mass matrix must be diagonal with positive entries".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    if n <= 60 {
        return dense_fallback(a, mass, k);
    }
    let mut op = ShiftInvert::new(a, mass, 0.0)?;
    if op.ldl.negative_pivots() > 0 {
        return Err(TubeError::Solver("matrix is not positive definite (negative pivots at shift 0)".into()));
    }
    if opts.adaptive_shift {
        // Cheap probe: a loose run at σ = 0 estimates λ₁ from above.
        let (thetas, _, _, _, _) = thick_restart(&mut op, n, 1, 1e-3, 2, &mut rng);
        let estimate = 1.0 / thetas[0];
        let mut target = estimate - 0.01 * estimate;
        while target > 0.0 {
            match ShiftInvert::new(a, mass, target) {
                Ok(shifted) if shifted.ldl.negative_pivots() == 0 => {
                    op = shifted;
                    break;
                }
                _ => target *= 0.5,
            }
            if target < 1e-3 * estimate {
                break;
            }
        }
    }
    let (thetas, ys, _, restarts, converged) = thick_restart(&mut op, n, k, opts.tol, opts.max_restarts, &mut rng);
    let sigma = op.sigma;
    let mut pairs: Vec<(f64, Vec<f64>)> = thetas
        .iter()
        .zip(ys)
        .map(|(&t, y)| {
            let x: Vec<f64> = y.iter().zip(&op.sqrt_m).map(|(v, s)| v / s).collect();
            (sigma + 1.0 / t, x)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut values = Vec::new();
    let mut residuals = Vec::new();
    let mut vectors = Vec::new();
    let mut ax = vec![0.0; n];
    for (lambda, mut x) in pairs {
        let mnorm = x.iter().zip(mass).map(|(v, m)| v * v * m).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= mnorm);
        a.matvec(&x, &mut ax);
        let r: f64 = (0..n).map(|i| (ax[i] - lambda * mass[i] * x[i]).powi(2)).sum::<f64>().sqrt();
        let mx: f64 = (0..n).map(|i| (mass[i] * x[i]).powi(2)).sum::<f64>().sqrt();
        values.push(lambda);
        residuals.push(r / mx);
        vectors.push(x);
    }
    Ok(Eigenpairs { values, residuals, vectors, shift: sigma, restarts, converged })
}

fn dense_fallback(a: &CsrMatrix, mass: &[f64], k: usize) -> Result<Eigenpairs> {
    let n = a.nrows();
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let c = DMatrix::from_fn(n, n, |i, j| a.get(i, j) * inv_sqrt[i] * inv_sqrt[j]);
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].partial_cmp(&eig.eigenvalues[y]).unwrap());
    let mut out = Eigenpairs {
        values: vec![],
        residuals: vec![],
        vectors: vec![],
        shift: 0.0,
        restarts: 0,
        converged: true,
    };
    let mut ax = vec![0.0; n];
    for &idx in order.iter().take(k) {
        let lambda = eig.eigenvalues[idx];
        let x: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, idx)] * inv_sqrt[i]).collect();
        a.matvec(&x, &mut ax);
        let r: f64 = (0..n).map(|i| (ax[i] - lambda * mass[i] * x[i]).powi(2)).sum::<f64>().sqrt();
        let mx: f64 = (0..n).map(|i| (mass[i] * x[i]).powi(2)).sum::<f64>().sqrt();
        out.values.push(lambda);
        out.residuals.push(r / mx);
        out.vectors.push(x);
    }
    Ok(out)
}
