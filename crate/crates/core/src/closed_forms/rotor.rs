use super::clebsch::Clebsch;
use crate::dynamics::{expectation, Observable, VectorizedDensityMatrix};
use crate::error::{domain, Result};
use crate::liouvillian::gamma0_shift;
use crate::model::{sector_index, ModelParams};
use crate::C64;

fn require_unpolarized(params: &ModelParams) -> Result<()> {
    if params.p != 0.0 {
        return domain(format!("rotor limit needs p = 0, got p = {}", params.p));
    }
    Ok(())
}

/// `i h M + (Gamma/2j) M^2 - (Gamma/2j) K(K+1)`, plus the dephasing shift.
pub fn o3_eigenvalue(params: &ModelParams, k: u32, m_sector: i32) -> Result<C64> {
    require_unpolarized(params)?;
    if k > params.two_j() || m_sector.unsigned_abs() > k {
        return domain(format!(
            "need |M| <= K <= 2j, got K = {k}, M = {m_sector}, 2j = {}",
            params.two_j()
        ));
    }
    let j = params.j();
    let (kf, mf) = (f64::from(k), f64::from(m_sector));
    let re = params.gamma / (2.0 * j) * (mf * mf - kf * (kf + 1.0)) + gamma0_shift(params, m_sector);
    Ok(C64::new(re, params.h * mf))
}

fn phase(two_j: i32, two_m_right: i32) -> f64 {
    if ((two_j - two_m_right) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Exact evolution at `p = 0` through the coupled basis
/// `c_K = sum (-1)^(j-m') <j m, j -m'|K M> rho_{m m'}`.
pub fn o3_propagate(params: &ModelParams, rho0: &VectorizedDensityMatrix, t: f64) -> Result<VectorizedDensityMatrix> {
    require_unpolarized(params)?;
    if rho0.two_j() != params.two_j() {
        return domain("state and parameters disagree on 2j");
    }
    if !t.is_finite() || t < 0.0 {
        return domain(format!("time must be finite and nonnegative, got {t}"));
    }
    let tj = params.two_j() as i32;
    let cg = Clebsch::new(2 * tj as usize + 1);
    let mut out = VectorizedDensityMatrix::zeros(params.two_j());
    for m in -tj..=tj {
        let idx = sector_index(params.two_j(), m)?;
        let v = rho0.sector(m)?;
        if v.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        // rows: K = |M| ..= 2j, columns: sector index
        let table: Vec<Vec<f64>> = (m.unsigned_abs()..=params.two_j())
            .map(|k| {
                (0..idx.dim)
                    .map(|i| {
                        let tm = idx.two_m_at(i);
                        let tmr = tm - 2 * m;
                        phase(tj, tmr) * cg.coeff(tj, tm, tj, -tmr, 2 * k as i32, 2 * m)
                    })
                    .collect()
            })
            .collect();
        let target = out.sector_mut(m)?;
        for (row, k) in table.iter().zip(m.unsigned_abs()..) {
            let c: C64 = row.iter().zip(v).map(|(w, z)| z * *w).sum();
            let c = c * (o3_eigenvalue(params, k, m)? * t).exp();
            for (slot, w) in target.iter_mut().zip(row) {
                *slot += c * *w;
            }
        }
    }
    Ok(out)
}

pub fn o3_expectation(
    params: &ModelParams,
    rho0: &VectorizedDensityMatrix,
    observable: Observable,
    t: f64,
) -> Result<f64> {
    expectation(&o3_propagate(params, rho0, t)?, observable)
}

/// `<Jx(t)>/j` from the initial transverse components.
pub fn jx_over_j(params: &ModelParams, jx0_over_j: f64, jy0_over_j: f64, t: f64) -> f64 {
    let decay = (-(params.gamma + params.gamma0) * t / (2.0 * params.j())).exp();
    let (s, c) = (params.h * t).sin_cos();
    decay * (jx0_over_j * c + jy0_over_j * s)
}

pub fn jz_over_j(params: &ModelParams, jz0_over_j: f64, t: f64) -> f64 {
    jz0_over_j * (-params.gamma * t / params.j()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{coherent_state, propagate};

    #[test]
    fn spec_examples() {
        let params = ModelParams::unit(2, 0.0).unwrap();
        assert_eq!(o3_eigenvalue(&params, 0, 0).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(o3_eigenvalue(&params, 2, 0).unwrap(), C64::new(-3.0, 0.0));
        assert_eq!(o3_eigenvalue(&params, 1, 1).unwrap(), C64::new(-0.5, 1.0));
        assert!(o3_eigenvalue(&params, 3, 0).is_err());
        assert!(o3_eigenvalue(&params, 1, 2).is_err());
        assert!(o3_eigenvalue(&params.with_p(0.1).unwrap(), 1, 0).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let params = ModelParams::new(7, 1.0, 1.0, 0.0, 0.0).unwrap();
        let rho = coherent_state(7, 0.9, 0.4).unwrap();
        let back = o3_propagate(&params, &rho, 0.0).unwrap();
        for m in -7..=7 {
            for (a, b) in rho.sector(m).unwrap().iter().zip(back.sector(m).unwrap()) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn agrees_with_expm() {
        for two_j in [4, 9] {
            let params = ModelParams::new(two_j, 0.7, 1.3, 0.4, 0.0).unwrap();
            let rho = coherent_state(two_j, 1.1, 0.3).unwrap();
            let t = 0.8;
            let num = &propagate(&params, &rho, &[t]).unwrap()[0];
            let exact = o3_propagate(&params, &rho, t).unwrap();
            let tj = two_j as i32;
            for m in -tj..=tj {
                for (a, b) in num.sector(m).unwrap().iter().zip(exact.sector(m).unwrap()) {
                    assert!((a - b).norm() < 1e-11, "2j={two_j} M={m}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn transverse_and_longitudinal_closed_forms() {
        let params = ModelParams::new(12, 1.0, 1.0, 0.25, 0.0).unwrap();
        let rho = coherent_state(12, 0.7, 0.2).unwrap();
        let j = params.j();
        let jx0 = expectation(&rho, Observable::Jx).unwrap() / j;
        let jy0 = expectation(&rho, Observable::Jy).unwrap() / j;
        let jz0 = expectation(&rho, Observable::Jz).unwrap() / j;
        for t in [0.0, 0.3, 1.7, 5.0] {
            let x = o3_expectation(&params, &rho, Observable::Jx, t).unwrap() / j;
            let z = o3_expectation(&params, &rho, Observable::Jz, t).unwrap() / j;
            assert!((x - jx_over_j(&params, jx0, jy0, t)).abs() < 1e-12, "t={t}");
            assert!((z - jz_over_j(&params, jz0, t)).abs() < 1e-12, "t={t}");
        }
    }
}
