use crate::error::{domain, Error, Result};
use crate::linalg;
use crate::liouvillian::{build_sector, gamma0_shift};
use crate::model::{sector_basis, ModelParams};
use crate::C64;

fn polarization_sign(params: &ModelParams) -> Result<i32> {
    if params.p == 1.0 {
        Ok(1)
    } else if params.p == -1.0 {
        Ok(-1)
    } else {
        domain(format!("closed triangular form needs |p| = 1, got p = {}", params.p))
    }
}

/// `4j * (lambda + Gamma(j+1) - i h M) / Gamma` as an exact integer, doubled
/// magnetic number `two_m`.
fn scaled_integer(two_m: i32, m_sector: i32, sign: i32) -> i64 {
    let (tm, big, s) = (i64::from(two_m), i64::from(m_sector), i64::from(sign));
    // 2 * [M(M+p) - 2m(M - m + p)] with m = tm / 2
    2 * big * (big + s) - tm * (2 * big - tm + 2 * s)
}

/// `-Gamma(j+1) + i h M + (Gamma/2j)[M(M+p) - 2m(M - m + p)]`, plus the
/// dephasing shift `-Gamma0 M^2 / 2j`.
pub fn triangular_eigenvalue(params: &ModelParams, two_m: i32, m_sector: i32) -> Result<C64> {
    let sign = polarization_sign(params)?;
    let idx = sector_basis(params, m_sector)?;
    if idx.index_of(two_m).is_none() {
        return domain(format!("2m = {two_m} is not in sector M = {m_sector}"));
    }
    let j = params.j();
    let k = scaled_integer(two_m, m_sector, sign) as f64;
    let re = -params.gamma * (j + 1.0) + params.gamma / (4.0 * j) * k + gamma0_shift(params, m_sector);
    Ok(C64::new(re, params.h * f64::from(m_sector)))
}

/// Eigenvalue table and doublet structure of one sector at `|p| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularSolution {
    pub label: i32,
    /// Doubled `m`, ascending.
    pub two_m: Vec<i32>,
    pub eigenvalues: Vec<C64>,
    /// Index of the degenerate partner `m' = M - m + p`, if inside the sector.
    pub partner: Vec<Option<usize>>,
    /// Indices without a partner.
    pub exceptions: Vec<usize>,
}

impl TriangularSolution {
    pub fn distinct_count(&self) -> usize {
        self.eigenvalues.len() - self.partner.iter().filter(|p| p.is_some()).count() / 2
    }
}

pub fn triangular_solution(params: &ModelParams, m_sector: i32) -> Result<TriangularSolution> {
    let sign = polarization_sign(params)?;
    let idx = sector_basis(params, m_sector)?;
    let two_m: Vec<i32> = (0..idx.dim).map(|k| idx.two_m_at(k)).collect();
    let eigenvalues = two_m
        .iter()
        .map(|&tm| triangular_eigenvalue(params, tm, m_sector))
        .collect::<Result<Vec<_>>>()?;
    let partner: Vec<Option<usize>> = two_m
        .iter()
        .enumerate()
        .map(|(k, &tm)| {
            let other = 2 * m_sector - tm + 2 * sign;
            idx.index_of(other).filter(|&kk| kk != k)
        })
        .collect();
    let exceptions = partner
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_none())
        .map(|(k, _)| k)
        .collect();
    Ok(TriangularSolution {
        label: m_sector,
        two_m,
        eigenvalues,
        partner,
        exceptions,
    })
}

/// Right eigenvector for the level with doubled magnetic number `two_n`, in
/// ascending `m`, normalized to 1 at `m = N`.
///
/// At `p = 1` the chain runs below `N`:
/// `rho_m = prod_{i=m}^{N-1} c_{i+1} / (lambda_N - lambda_i)`; at `p = -1` it
/// runs above. A coincidence `lambda_N = lambda_i` inside the chain is a
/// [`Error::DefectiveChain`].
pub fn triangular_eigenvector(params: &ModelParams, two_n: i32, m_sector: i32) -> Result<Vec<C64>> {
    let sign = polarization_sign(params)?;
    let op = build_sector(params, m_sector)?;
    let idx = op.sector;
    let start = idx
        .index_of(two_n)
        .ok_or_else(|| Error::Domain(format!("2N = {two_n} is not in sector M = {m_sector}")))?;
    let key = |k: usize| scaled_integer(idx.two_m_at(k), m_sector, sign);
    let lam = triangular_eigenvalue(params, two_n, m_sector)?;
    let mut v = vec![C64::new(0.0, 0.0); idx.dim];
    v[start] = C64::new(1.0, 0.0);
    let lam_at = |k: usize| triangular_eigenvalue(params, idx.two_m_at(k), m_sector);
    if sign == 1 {
        for k in (0..start).rev() {
            if key(k) == key(start) {
                return Err(Error::DefectiveChain { index: k });
            }
            v[k] = op.lower[k] * v[k + 1] / (lam - lam_at(k)?);
        }
    } else {
        for k in start + 1..idx.dim {
            if key(k) == key(start) {
                return Err(Error::DefectiveChain { index: k });
            }
            v[k] = op.upper[k - 1] * v[k - 1] / (lam - lam_at(k)?);
        }
    }
    Ok(v)
}

/// `dim ker(L_M - lambda)`: singular values at or below `rel_tol * ||L_M||_2`.
/// A bidiagonal sector (`|p| = 1`) goes through Sturm counts, anything else
/// through a dense SVD.
pub fn kernel_dimension(params: &ModelParams, m_sector: i32, lambda: C64, rel_tol: f64) -> Result<usize> {
    let op = build_sector(params, m_sector)?;
    let n = op.dim();
    let zero = |v: &[C64]| v.iter().all(|z| *z == C64::new(0.0, 0.0));
    // a lower bidiagonal matrix has the singular values of its transpose
    let super_diag = if zero(&op.upper) {
        Some(&op.lower)
    } else if zero(&op.lower) {
        Some(&op.upper)
    } else {
        None
    };
    if let Some(sup) = super_diag {
        // phases of a bidiagonal matrix can be scaled away
        let e: Vec<f64> = sup.iter().map(|z| z.norm()).collect();
        let d0: Vec<f64> = op.diag.iter().map(|z| z.norm()).collect();
        let d: Vec<f64> = op.diag.iter().map(|z| (z - lambda).norm()).collect();
        let tol = rel_tol * linalg::bidiagonal_norm2(&d0, &e);
        // count sigma <= tol as sigma < next float above tol
        return Ok(linalg::bidiagonal_count_below(&d, &e, tol.next_up()));
    }
    let dense = op.to_dense();
    let fail = || Error::Numeric {
        two_j: params.two_j(),
        sector: m_sector,
        reason: "SVD did not converge".into(),
    };
    let norm = linalg::singular_values(&dense).ok_or_else(fail)?[0];
    let shifted = &dense - faer::Mat::<C64>::identity(n, n) * faer::Scale(lambda);
    let rank = linalg::numerical_rank(&shifted, rel_tol * norm).ok_or_else(fail)?;
    Ok(n - rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(two_j: u32, p: f64) -> ModelParams {
        ModelParams::unit(two_j, p).unwrap()
    }

    #[test]
    fn j_one_examples() {
        let params = unit(2, 1.0);
        assert_eq!(triangular_eigenvalue(&params, -2, 0).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(triangular_eigenvalue(&params, 0, 0).unwrap(), C64::new(-2.0, 0.0));
        assert_eq!(triangular_eigenvalue(&params, 2, 0).unwrap(), C64::new(-2.0, 0.0));
        assert!(triangular_eigenvalue(&unit(2, 0.5), 0, 0).is_err());
    }

    #[test]
    fn distinct_count_j20() {
        let sol = triangular_solution(&unit(40, 1.0), 0).unwrap();
        assert_eq!(sol.eigenvalues.len(), 41);
        assert_eq!(sol.distinct_count(), 21);
        let mut vals: Vec<(i64, i64)> = sol
            .eigenvalues
            .iter()
            .map(|z| ((z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64))
            .collect();
        vals.sort();
        vals.dedup();
        assert_eq!(vals.len(), 21);
    }

    #[test]
    fn matches_builder_diagonal() {
        for p in [1.0, -1.0] {
            let params = ModelParams::new(13, 0.6, 1.4, 0.3, p).unwrap();
            for m in params.sectors() {
                let op = build_sector(&params, m).unwrap();
                let sol = triangular_solution(&params, m).unwrap();
                for (a, b) in op.diag.iter().zip(&sol.eigenvalues) {
                    assert!((a - b).norm() < 1e-12, "p={p} M={m}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn pairing_is_an_involution_with_paper_exceptions() {
        for p in [1.0, -1.0] {
            let params = unit(12, p);
            let sign = p as i32;
            for m in params.sectors() {
                let sol = triangular_solution(&params, m).unwrap();
                for (k, part) in sol.partner.iter().enumerate() {
                    if let Some(kk) = part {
                        assert_eq!(sol.partner[*kk], Some(k));
                        assert_eq!(sol.eigenvalues[k], sol.eigenvalues[*kk]);
                    }
                }
                let mut expected = vec![];
                let idx = sector_basis(&params, m).unwrap();
                // extremal level at the chain end
                let end = if sign == 1 { 0 } else { idx.dim - 1 };
                expected.push(end);
                if m % 2 != 0 {
                    // self-partner m = (M + p) / 2
                    expected.push(idx.index_of(m + sign).unwrap());
                }
                expected.sort();
                let mut got = sol.exceptions.clone();
                got.sort();
                assert_eq!(got, expected, "p={p} M={m}");
            }
        }
    }

    #[test]
    fn steady_state_vector() {
        let params = unit(10, 1.0);
        let v = triangular_eigenvector(&params, -10, 0).unwrap();
        assert_eq!(v[0], C64::new(1.0, 0.0));
        assert!(v[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn eigenvector_residuals() {
        for p in [1.0, -1.0] {
            let params = ModelParams::new(16, 1.0, 1.0, 0.2, p).unwrap();
            for m in [-5, 0, 3] {
                let op = build_sector(&params, m).unwrap();
                let sol = triangular_solution(&params, m).unwrap();
                let norm = op.frobenius_norm();
                let mut built = 0;
                for (k, &tm) in sol.two_m.iter().enumerate() {
                    match triangular_eigenvector(&params, tm, m) {
                        Ok(v) => {
                            let av = op.apply(&v);
                            let lam = sol.eigenvalues[k];
                            let r: f64 = av
                                .iter()
                                .zip(&v)
                                .map(|(a, x)| (a - lam * x).norm_sqr())
                                .sum::<f64>()
                                .sqrt();
                            assert!(r <= 1e-9 * norm * linalg::vec_norm(&v), "p={p} M={m} 2m={tm}: {r}");
                            built += 1;
                        }
                        Err(Error::DefectiveChain { .. }) => {}
                        Err(e) => panic!("{e}"),
                    }
                }
                assert!(built > sol.two_m.len() / 2);
            }
        }
    }

    #[test]
    fn doublet_kernels_are_one_dimensional() {
        let params = unit(20, 1.0);
        let sol = triangular_solution(&params, 0).unwrap();
        for (k, part) in sol.partner.iter().enumerate() {
            if let Some(kk) = part {
                if k < *kk {
                    assert_eq!(kernel_dimension(&params, 0, sol.eigenvalues[k], 1e-8).unwrap(), 1);
                }
            }
        }
    }

    #[test]
    fn sturm_kernel_agrees_with_dense_svd() {
        for p in [1.0, -1.0] {
            let params = ModelParams::new(12, 0.8, 1.0, 0.3, p).unwrap();
            for m in [-5, 0, 3] {
                let op = build_sector(&params, m).unwrap();
                let dense = op.to_dense();
                let norm = linalg::singular_values(&dense).unwrap()[0];
                let n = op.dim();
                let sol = triangular_solution(&params, m).unwrap();
                for lam in sol.eigenvalues.iter().copied().chain([C64::new(-0.3, 0.1)]) {
                    let shifted = &dense - faer::Mat::<C64>::identity(n, n) * faer::Scale(lam);
                    let want = n - linalg::numerical_rank(&shifted, 1e-8 * norm).unwrap();
                    assert_eq!(kernel_dimension(&params, m, lam, 1e-8).unwrap(), want);
                }
            }
        }
    }
}
