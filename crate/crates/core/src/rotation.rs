//! Helpers for small rotation matrices: projection onto SO(n), defects,
//! logarithm/exponential near the identity, generalized cross product.

use nalgebra::{DMatrix, DVector};

/// Worst violation of the rotation-group conditions: (|det − 1|, ‖MMᵀ − I‖_max).
pub fn rotation_defect(m: &DMatrix<f64>) -> (f64, f64) {
    let n = m.nrows();
    let det_err = (m.determinant() - 1.0).abs();
    let g = m * m.transpose() - DMatrix::<f64>::identity(n, n);
    (det_err, g.amax())
}

pub fn is_rotation(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let (d, o) = rotation_defect(m);
    d <= tol && o <= tol
}

/// Nearest rotation (orthogonal polar factor).
///
/// Matrices already close to SO(n) go through Newton–Schulz, which is
/// left- and right-equivariant under rotations; far-off input falls back to SVD.
pub fn project_to_rotation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let defect = (m.transpose() * m - &id).amax();
    if defect < 0.1 {
        let mut x = m.clone();
        for _ in 0..20 {
            let xtx = x.transpose() * &x;
            let err = (&xtx - &id).amax();
            if err < 1e-15 {
                break;
            }
            x = &x * (&id * 3.0 - xtx) * 0.5;
        }
        return x;
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut r = &u * &vt;
    if r.determinant() < 0.0 {
        let mut u2 = u.clone();
        let last = n - 1;
        for i in 0..n {
            u2[(i, last)] = -u2[(i, last)];
        }
        r = u2 * vt;
    }
    r
}

/// Matrix logarithm of a rotation close to the identity (series in X = R − I).
pub fn log_near_identity(r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.nrows();
    let x = r - DMatrix::<f64>::identity(n, n);
    let mut term = x.clone();
    let mut acc = x.clone();
    for k in 2..200 {
        term = &term * &x;
        let coef = if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64;
        let add = &term * coef;
        acc += &add;
        if add.amax() < 1e-18 {
            break;
        }
    }
    // exact logs of rotations are skew; drop the rounding residue
    (&acc - acc.transpose()) * 0.5
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.amax() * n as f64;
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let b = a * scale;
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut acc = term.clone();
    for k in 1..30 {
        term = &term * &b / k as f64;
        acc += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}

/// Unit vector completing `vectors` (d−1 orthonormal vectors in ℝᵈ) to a
/// positively oriented orthonormal basis.
pub fn generalized_cross(vectors: &[DVector<f64>]) -> DVector<f64> {
    let d = vectors.len() + 1;
    let mut out = DVector::<f64>::zeros(d);
    for j in 0..d {
        let minor = DMatrix::from_fn(d - 1, d - 1, |r, c| {
            let col = if c < j { c } else { c + 1 };
            vectors[r][col]
        });
        let sign = if (d - 1 + j).is_multiple_of(2) { 1.0 } else { -1.0 };
        out[j] = sign * minor.determinant();
    }
    let full = DMatrix::from_fn(d, d, |r, c| if r < d - 1 { vectors[r][c] } else { out[c] });
    if full.determinant() < 0.0 {
        out = -out;
    }
    let norm = out.norm();
    out / norm
}

/// Planar rotation matrix by `theta`.
pub fn planar(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}
