//! The vectorized Liouvillian, restricted to weak-symmetry sectors, plus a
//! dense brute-force construction straight from the master equation.
//!
//! Vectorization maps `|a><b|` to `|a, b>` with flat index `a * N + b`
//! (ascending `m` within each factor), so that `A rho B -> (A ⊗ B^T)|rho>`.
//! A sector `M` collects the components `<m| rho |m - M>`.

use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ladder_coeff, sector_basis, Ladder, ModelParams, SectorIndex};
use crate::C64;

/// Largest Hilbert dimension accepted by [`build_bruteforce`].
pub const BRUTEFORCE_MAX_HILBERT_DIM: usize = 64;

/// Tridiagonal action of the Liouvillian inside one sector, basis in
/// ascending `m`.
///
/// `upper[k]` is the amplitude transferred from component `k` (left index
/// `m_k`) to `k + 1` (`m_k + 1`); it carries the `(1 - p)/2` jump rate and
/// vanishes at `p = 1`. `lower[k]` moves amplitude from `k + 1` down to `k`
/// with the `(1 + p)/2` rate and vanishes at `p = -1`. As a matrix `A`,
/// `A[k+1][k] = upper[k]` and `A[k][k+1] = lower[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator {
    pub sector: SectorIndex,
    pub diag: Vec<C64>,
    pub upper: Vec<C64>,
    pub lower: Vec<C64>,
}

impl SectorOperator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn label(&self) -> i32 {
        self.sector.label
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim(), "vector length does not match sector");
        let n = self.dim();
        (0..n)
            .map(|k| {
                let mut y = self.diag[k] * x[k];
                if k > 0 {
                    y += self.upper[k - 1] * x[k - 1];
                }
                if k + 1 < n {
                    y += self.lower[k] * x[k + 1];
                }
                y
            })
            .collect()
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let n = self.dim();
        let mut a = Mat::<C64>::zeros(n, n);
        for k in 0..n {
            a[(k, k)] = self.diag[k];
            if k + 1 < n {
                a[(k + 1, k)] = self.upper[k];
                a[(k, k + 1)] = self.lower[k];
            }
        }
        a
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.upper)
            .chain(&self.lower)
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let mut s = self.diag[k].norm();
                if k > 0 {
                    s += self.upper[k - 1].norm();
                }
                if k + 1 < n {
                    s += self.lower[k].norm();
                }
                s
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_sector(params: &ModelParams, m_sector: i32) -> Result<SectorOperator> {
    let sector = sector_basis(params, m_sector)?;
    let j = params.j();
    let gamma = params.gamma;
    let p = params.p;
    let big_m = f64::from(m_sector);
    let rate_up = gamma / j * (1.0 - p) / 2.0;
    let rate_down = gamma / j * (1.0 + p) / 2.0;
    let phase = C64::new(0.0, params.h * big_m);
    let m_shift = (gamma - params.gamma0) / (2.0 * j) * big_m * big_m;

    let n = sector.dim;
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n.saturating_sub(1));
    let mut lower = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let m = sector.m_at(k);
        let re = -gamma * (j + 1.0) + gamma / j * m * (m - big_m) + m_shift - gamma * p / (2.0 * j) * (2.0 * m - big_m);
        diag.push(phase + re);
        if k + 1 < n {
            let two_m = sector.two_m_at(k);
            let two_right = two_m - 2 * m_sector;
            let up = ladder_coeff(params.two_j(), two_m, Ladder::Raise)?
                * ladder_coeff(params.two_j(), two_right, Ladder::Raise)?;
            let down = ladder_coeff(params.two_j(), two_m + 2, Ladder::Lower)?
                * ladder_coeff(params.two_j(), two_right + 2, Ladder::Lower)?;
            upper.push(C64::new(rate_up * up, 0.0));
            lower.push(C64::new(rate_down * down, 0.0));
        }
    }
    Ok(SectorOperator {
        sector,
        diag,
        upper,
        lower,
    })
}

/// Every sector `M = -2j ..= 2j`, in ascending `M`.
pub fn build_all_sectors(params: &ModelParams) -> Vec<SectorOperator> {
    let labels: Vec<i32> = params.sectors().collect();
    labels
        .par_iter()
        .map(|&m| build_sector(params, m).expect("sector labels come from the model"))
        .collect()
}

/// The uniform real shift `-gamma0 M^2 / (2j)` dephasing adds to sector `M`.
pub fn gamma0_shift(params: &ModelParams, m_sector: i32) -> f64 {
    let big_m = f64::from(m_sector);
    -params.gamma0 * big_m * big_m / (2.0 * params.j())
}

/// Dense `N^2 x N^2` Liouvillian.
#[derive(Debug, Clone)]
pub struct FullLiouvillian {
    pub two_j: u32,
    pub matrix: Mat<C64>,
}

impl FullLiouvillian {
    pub fn hilbert_dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Flat index of `|m><m'|` given doubled magnetic numbers.
    pub fn flat_index(&self, two_m: i32, two_m_right: i32) -> usize {
        let tj = self.two_j as i32;
        let a = ((two_m + tj) / 2) as usize;
        let b = ((two_m_right + tj) / 2) as usize;
        a * self.hilbert_dim() + b
    }

    /// Flat indices of sector `M`, in ascending `m`.
    pub fn sector_indices(&self, m_sector: i32) -> Result<Vec<usize>> {
        let s = crate::model::sector_index(self.two_j, m_sector)?;
        Ok((0..s.dim)
            .map(|k| {
                let tm = s.two_m_at(k);
                self.flat_index(tm, tm - 2 * m_sector)
            })
            .collect())
    }

    pub fn sector_block(&self, m_sector: i32) -> Result<Mat<C64>> {
        let idx = self.sector_indices(m_sector)?;
        let n = idx.len();
        Ok(Mat::from_fn(n, n, |r, c| self.matrix[(idx[r], idx[c])]))
    }

    /// Sum of moduli of all entries coupling different sectors.
    pub fn off_sector_weight(&self) -> f64 {
        let n = self.hilbert_dim();
        let label = |flat: usize| (flat / n) as i64 - (flat % n) as i64;
        let mut total = 0.0;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                if label(r) != label(c) {
                    total += self.matrix[(r, c)].norm();
                }
            }
        }
        total
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim());
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.matrix[(r, c)] * x[c]).sum())
            .collect()
    }
}

/// Spin matrices `(Jz, J+, J-)` in ascending-`m` order.
pub fn spin_matrices(two_j: u32) -> (Mat<C64>, Mat<C64>, Mat<C64>) {
    let n = two_j as usize + 1;
    let tj = two_j as i32;
    let jz = Mat::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(f64::from(-tj + 2 * r as i32) / 2.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let jp = Mat::from_fn(n, n, |r, c| {
        if r == c + 1 {
            let two_m = -tj + 2 * c as i32;
            C64::new(ladder_coeff(two_j, two_m, Ladder::Raise).unwrap(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let jm = jp.transpose().to_owned();
    (jz, jp, jm)
}

fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

fn conj(a: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)].conj())
}

fn transpose(a: &Mat<C64>) -> Mat<C64> {
    a.transpose().to_owned()
}

fn adjoint(a: &Mat<C64>) -> Mat<C64> {
    a.adjoint().to_owned()
}

/// `L(rho) = -i[H, rho] + sum_i (L_i rho L_i^† - {L_i^† L_i, rho}/2)` as a dense
/// matrix, independent of the sector construction.
pub fn build_bruteforce(params: &ModelParams) -> Result<FullLiouvillian> {
    let n = params.hilbert_dim();
    if n > BRUTEFORCE_MAX_HILBERT_DIM {
        return Err(Error::Resource {
            what: "dense Liouvillian Hilbert dimension",
            requested: n,
            limit: BRUTEFORCE_MAX_HILBERT_DIM,
        });
    }
    let j = params.j();
    let (jz, jp, jm) = spin_matrices(params.two_j());
    let id = Mat::<C64>::identity(n, n);
    let scale = |m: &Mat<C64>, s: f64| m * faer::Scale(C64::new(s, 0.0));

    let ham = scale(&jz, -params.h);
    let minus_i = faer::Scale(C64::new(0.0, -1.0));
    let mut l = (kron(&ham, &id) - kron(&id, &transpose(&ham))) * minus_i;

    let jumps = [
        scale(&jz, (params.gamma0 / j).sqrt()),
        scale(&jp, (params.gamma / j * (1.0 - params.p) / 2.0).sqrt()),
        scale(&jm, (params.gamma / j * (1.0 + params.p) / 2.0).sqrt()),
    ];
    let half = faer::Scale(C64::new(0.5, 0.0));
    for op in &jumps {
        let ada = adjoint(op) * op;
        l += kron(op, &conj(op));
        l -= kron(&ada, &id) * half;
        l -= kron(&id, &transpose(&ada)) * half;
    }
    Ok(FullLiouvillian {
        two_j: params.two_j(),
        matrix: l,
    })
}
