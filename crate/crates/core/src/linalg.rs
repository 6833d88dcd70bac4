//! Dense helpers on top of faer.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::C64;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

pub fn one_norm(a: &Mat<C64>) -> f64 {
    (0..a.ncols())
        .map(|c| (0..a.nrows()).map(|r| a[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(a: &Mat<C64>, s: f64) -> Mat<C64> {
    a * faer::Scale(C64::new(s, 0.0))
}

/// Matrix exponential by scaling and squaring with a degree-13 Pade
/// approximant.
pub fn expm(a: &Mat<C64>) -> Mat<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = scaled(a, 0.5f64.powi(s));
    let b = &PADE13;
    let id = Mat::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u_poly = &a6 * &inner_u + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1]);
    let u = &a * &u_poly;
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * &inner_v + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

pub fn matvec(a: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    (0..a.nrows())
        .map(|r| (0..a.ncols()).map(|c| a[(r, c)] * x[c]).sum())
        .collect()
}

/// Eigenvalues and right eigenvectors (columns) of a general complex matrix.
pub fn eig_general(a: &Mat<C64>) -> Option<(Vec<C64>, Mat<C64>)> {
    let evd = a.eigen().ok()?;
    let n = a.nrows();
    let vals = (0..n).map(|k| evd.S()[k]).collect();
    Some((vals, evd.U().to_owned()))
}

/// Eigenvalues of a general complex matrix. Rows and columns that a
/// permutation can move into a triangular corner are peeled off first, so
/// their eigenvalues come out exactly (as LAPACK's permutation balancing).
pub fn eigvals_general(a: &Mat<C64>) -> Option<Vec<C64>> {
    let (isolated, core) = permutation_isolate(a);
    let mut vals: Vec<C64> = isolated.iter().map(|&i| a[(i, i)]).collect();
    if !core.is_empty() {
        let sub = Mat::from_fn(core.len(), core.len(), |r, c| a[(core[r], core[c])]);
        vals.extend(sub.eigenvalues().ok()?);
    }
    Some(vals)
}

/// Splits indices into those isolated by permutation balancing and the
/// remaining irreducible core.
pub fn permutation_isolate(a: &Mat<C64>) -> (Vec<usize>, Vec<usize>) {
    let n = a.nrows();
    let zero = C64::new(0.0, 0.0);
    let mut active = vec![true; n];
    let mut row_nnz = vec![0usize; n];
    let mut col_nnz = vec![0usize; n];
    for r in 0..n {
        for c in 0..n {
            if r != c && a[(r, c)] != zero {
                row_nnz[r] += 1;
                col_nnz[c] += 1;
            }
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&i| row_nnz[i] == 0 || col_nnz[i] == 0).collect();
    let mut isolated = Vec::new();
    while let Some(i) = queue.pop() {
        if !active[i] {
            continue;
        }
        active[i] = false;
        isolated.push(i);
        for k in 0..n {
            if !active[k] || k == i {
                continue;
            }
            if a[(k, i)] != zero {
                row_nnz[k] -= 1;
                if row_nnz[k] == 0 {
                    queue.push(k);
                }
            }
            if a[(i, k)] != zero {
                col_nnz[k] -= 1;
                if col_nnz[k] == 0 {
                    queue.push(k);
                }
            }
        }
    }
    let core = (0..n).filter(|&i| active[i]).collect();
    (isolated, core)
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix, ascending.
pub fn sym_tridiag_eig(diag: &[f64], off: &[f64]) -> Option<(Vec<f64>, Mat<f64>)> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1));
    let t = Mat::from_fn(n, n, |r, c| {
        if r == c {
            diag[r]
        } else if r == c + 1 {
            off[c]
        } else if c == r + 1 {
            off[r]
        } else {
            0.0
        }
    });
    let evd = t.self_adjoint_eigen(Side::Lower).ok()?;
    let vals = (0..n).map(|k| evd.S()[k]).collect();
    Some((vals, evd.U().to_owned()))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &Mat<C64>) -> Option<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower).ok()
}

pub fn singular_values(a: &Mat<C64>) -> Option<Vec<f64>> {
    a.singular_values().ok()
}

/// Number of singular values above `tol`.
pub fn numerical_rank(a: &Mat<C64>, tol: f64) -> Option<usize> {
    Some(singular_values(a)?.into_iter().filter(|&s| s > tol).count())
}

/// Top left singular vector of a (tall) matrix.
pub fn dominant_left_singular_vector(a: &Mat<C64>) -> Option<Vec<C64>> {
    let svd = a.thin_svd().ok()?;
    Some((0..a.nrows()).map(|r| svd.U()[(r, 0)]).collect())
}

/// Solves `T x = b` for a tridiagonal `T` (`sub[k] = T[k+1][k]`,
/// `sup[k] = T[k][k+1]`) by Gaussian elimination with partial pivoting.
/// Exactly zero pivots are replaced by `tiny`, as inverse iteration needs.
pub fn solve_tridiagonal(sub: &[C64], diag: &[C64], sup: &[C64], rhs: &[C64], tiny: f64) -> Vec<C64> {
    let (x, log_norm) = solve_tridiagonal_scaled(sub, diag, sup, rhs, tiny);
    let s = log_norm.exp();
    x.into_iter().map(|z| z * s).collect()
}

const RESCALE_ABOVE: f64 = 1e150;

/// Complex division without squaring the divisor (Smith's method).
pub fn cdiv(a: C64, b: C64) -> C64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let den = b.re + b.im * r;
        C64::new((a.re + a.im * r) / den, (a.im - a.re * r) / den)
    } else {
        let r = b.re / b.im;
        let den = b.re * r + b.im;
        C64::new((a.re * r + a.im) / den, (a.im * r - a.re) / den)
    }
}

/// As [`solve_tridiagonal`], but returns the solution as a unit vector and
/// the natural log of its norm, rescaling on the way so that solves through
/// near-singular pivots never overflow.
pub fn solve_tridiagonal_scaled(sub: &[C64], diag: &[C64], sup: &[C64], rhs: &[C64], tiny: f64) -> (Vec<C64>, f64) {
    let n = diag.len();
    let zero = C64::new(0.0, 0.0);
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![zero; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    for i in 0..n.saturating_sub(1) {
        if d[i].norm() >= dl[i].norm() {
            if d[i] != zero {
                let fact = cdiv(dl[i], d[i]);
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            }
        } else {
            let fact = cdiv(d[i], dl[i]);
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            swapped[i] = true;
        }
    }
    for x in d.iter_mut() {
        if *x == zero {
            *x = C64::new(tiny, 0.0);
        }
    }
    let mut log_scale = 0.0;
    let mut b = rhs.to_vec();
    let rescale = |b: &mut [C64], log_scale: &mut f64| {
        b.iter_mut().for_each(|z| *z /= RESCALE_ABOVE);
        *log_scale += RESCALE_ABOVE.ln();
    };
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            let temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - dl[i] * b[i];
        } else {
            let bi = b[i];
            b[i + 1] -= dl[i] * bi;
        }
        if b[i + 1].norm() > RESCALE_ABOVE {
            rescale(&mut b, &mut log_scale);
        }
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= du[i] * b[i + 1];
        }
        if i + 2 < n {
            acc -= du2[i] * b[i + 2];
        }
        let ln_ratio = acc.norm().ln() - d[i].norm().ln();
        if ln_ratio > RESCALE_ABOVE.ln() {
            // rescale so that this component has unit modulus
            let s = (-ln_ratio).exp();
            b.iter_mut().for_each(|z| *z *= s);
            log_scale += ln_ratio;
            b[i] = cdiv(acc / acc.norm(), d[i] / d[i].norm());
        } else {
            b[i] = cdiv(acc, d[i]);
        }
    }
    let nrm = vec_norm(&b);
    b.iter_mut().for_each(|z| *z /= nrm);
    (b, log_scale + nrm.ln())
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<x, y>` conjugate-linear in `x`.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Number of singular values below `x > 0` of the upper bidiagonal matrix
/// with diagonal magnitudes `d` and superdiagonal magnitudes `e`.
///
/// The singular values are `+-sigma` eigenvalues of the zero-diagonal
/// Golub-Kahan tridiagonal with off-diagonals `d0, e0, d1, ..., d_{n-1}`,
/// so a Sturm count at `x` gives `n + #{sigma < x}` in `O(n)`.
pub fn bidiagonal_count_below(d: &[f64], e: &[f64], x: f64) -> usize {
    let n = d.len();
    assert_eq!(e.len(), n.saturating_sub(1));
    if n == 0 {
        return 0;
    }
    let off: Vec<f64> = (0..2 * n - 1)
        .map(|k| if k % 2 == 0 { d[k / 2] } else { e[k / 2] })
        .collect();
    let scale = off.iter().fold(x.abs(), |a, &b| a.max(b.abs()));
    let pivmin = f64::MIN_POSITIVE.max(scale * scale * f64::EPSILON * f64::EPSILON);
    let mut negatives = 0;
    let mut q = -x;
    for k in 0..2 * n {
        if k > 0 {
            q = -x - off[k - 1] * off[k - 1] / q;
        }
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            negatives += 1;
        }
    }
    negatives - n
}

/// Largest singular value of an upper bidiagonal matrix by bisection on
/// [`bidiagonal_count_below`].
pub fn bidiagonal_norm2(d: &[f64], e: &[f64]) -> f64 {
    let n = d.len();
    let mut hi = d.iter().chain(e).map(|x| x * x).sum::<f64>().sqrt();
    let mut lo = 0.0;
    if hi == 0.0 {
        return 0.0;
    }
    hi *= 1.0 + 1e-12;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bidiagonal_count_below(d, e, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
