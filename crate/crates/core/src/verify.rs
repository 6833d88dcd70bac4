//! Oracle and invariant suite behind `dspin verify` and the acceptance tests.

use rayon::prelude::*;

use crate::closed_forms::{o3_eigenvalue, o3_expectation, thermal_ss, triangular_eigenvalue, Clebsch};
use crate::dynamics::{coherent_state, expectation, propagate, Observable, VectorizedDensityMatrix};
use crate::linalg;
use crate::liouvillian::{build_bruteforce, build_sector};
use crate::model::{sector_basis, ModelParams};
use crate::spectra::diagonalize;
use crate::{Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
            detail: String::new(),
        }
    }

    fn failed(name: impl Into<String>, err: crate::Error) -> Self {
        Self {
            name: name.into(),
            measured: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
            detail: err.to_string(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// `PASS name measured=... tol=... [detail]`, one line.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {} measured={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        );
        if !self.detail.is_empty() {
            s.push(' ');
            s.push_str(&self.detail);
        }
        s
    }
}

fn wrap(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, e))
}

fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn sorted_spectrum(mut v: Vec<C64>) -> Vec<C64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

/// Multiset distance by greedy nearest matching, robust to ties that a
/// lexicographic sort would split differently.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in sorted_spectrum(a.to_vec()) {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("lengths agree");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

fn sample_state(two_j: u32) -> Result<VectorizedDensityMatrix> {
    // coherent state mixed with a little of the identity, so every sector is populated
    let mut rho = coherent_state(two_j, 1.1, 0.6)?;
    rho.scale(0.8);
    let n = f64::from(two_j + 1);
    for z in rho.sector_mut(0)? {
        *z += 0.2 / n;
    }
    Ok(rho)
}

const DYN_TWO_JS: [u32; 4] = [1, 6, 13, 40];
const DYN_PS: [f64; 5] = [0.0, 0.5, -0.5, 1.0, -1.0];

pub fn trace_and_hermiticity() -> Vec<Check> {
    let times: Vec<f64> = (0..=10).map(f64::from).collect();
    let results: Vec<(f64, f64)> = DYN_TWO_JS
        .par_iter()
        .flat_map(|&tj| DYN_PS.par_iter().map(move |&p| (tj, p)))
        .map(|(tj, p)| -> Result<(f64, f64)> {
            let params = ModelParams::new(tj, 1.0, 1.0, 0.3, p)?;
            let rho = sample_state(tj)?;
            let traj = propagate(&params, &rho, &times)?;
            let tr = traj.iter().map(|r| (r.trace() - 1.0).norm()).fold(0.0, f64::max);
            let herm = traj.iter().map(|r| r.hermiticity_error()).fold(0.0, f64::max);
            Ok((tr, herm))
        })
        .collect::<Result<Vec<_>>>()
        .unwrap_or_else(|_| vec![(f64::NAN, f64::NAN)]);
    let tr = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let herm = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let tr = if results.iter().any(|r| r.0.is_nan()) {
        f64::NAN
    } else {
        tr
    };
    let herm = if results.iter().any(|r| r.1.is_nan()) {
        f64::NAN
    } else {
        herm
    };
    vec![
        Check::at_most("trace_preserved", tr, 1e-10).with_detail("2j<=40, p in {0,+-0.5,+-1}, t in [0,10]"),
        Check::at_most("hermiticity_preserved", herm, 1e-10).with_detail("2j<=40, p in {0,+-0.5,+-1}, t in [0,10]"),
    ]
}

pub fn semigroup() -> Check {
    wrap("semigroup", || {
        let mut worst: f64 = 0.0;
        for (tj, p) in [(7, 0.5), (20, -0.3), (12, 1.0), (9, 0.0)] {
            let params = ModelParams::new(tj, 0.8, 1.0, 0.2, p)?;
            let rho = sample_state(tj)?;
            let (t1, t2) = (0.7, 1.9);
            let mid = &propagate(&params, &rho, &[t1])?[0];
            let two_step = &propagate(&params, mid, &[t2])?[0];
            let direct = &propagate(&params, &rho, &[t1 + t2])?[0];
            for m in params.sectors() {
                worst = worst.max(max_abs_diff(two_step.sector(m)?, direct.sector(m)?));
            }
        }
        Ok(Check::at_most("semigroup", worst, 1e-8))
    })
}

pub fn conjugation_symmetry() -> Check {
    wrap("sector_conjugation_symmetry", || {
        let mut worst: f64 = 0.0;
        for (tj, p) in [(10, 0.5), (15, -0.2), (40, 0.7), (8, 1.0), (8, 0.0)] {
            let params = ModelParams::new(tj, 1.0, 1.0, 0.4, p)?;
            for m in 1..=tj as i32 {
                let plus = diagonalize(&build_sector(&params, m)?)?;
                let minus = diagonalize(&build_sector(&params, -m)?)?;
                let conj: Vec<C64> = minus.eigenvalues.iter().map(|z| z.conj()).collect();
                let scale = plus.operator_norm.max(1.0);
                worst = worst.max(multiset_distance(&plus.eigenvalues, &conj) / scale);
            }
        }
        Ok(Check::at_most("sector_conjugation_symmetry", worst, 1e-9).with_detail("relative to ||L_M||"))
    })
}

/// `sum_{m1,m2} <j m1, j m2|K M><j m1, j m2|K' M> = delta_KK'` for doubled
/// `j` up to 40, plus unequal pairs.
pub fn cg_orthogonality() -> Check {
    let pairs: Vec<(i32, i32)> = (1..=40).map(|t| (t, t)).chain([(3, 8), (10, 25), (40, 17)]).collect();
    let worst = pairs
        .par_iter()
        .map(|&(t1, t2)| {
            let cg = Clebsch::new((t1 + t2) as usize + 2);
            let mut worst: f64 = 0.0;
            let kmin = (t1 - t2).abs();
            for tmk in -(t1 + t2)..=(t1 + t2) {
                if (tmk + t1 + t2) % 2 != 0 {
                    continue;
                }
                let ks: Vec<i32> = (kmin..=t1 + t2).step_by(2).filter(|k| *k >= tmk.abs()).collect();
                let rows: Vec<Vec<f64>> = ks
                    .iter()
                    .map(|&tk| {
                        (-t1..=t1)
                            .step_by(2)
                            .map(|tm1| cg.coeff(t1, tm1, t2, tmk - tm1, tk, tmk))
                            .collect()
                    })
                    .collect();
                for (a, ra) in rows.iter().enumerate() {
                    for (b, rb) in rows.iter().enumerate().skip(a) {
                        let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                        let want = if a == b { 1.0 } else { 0.0 };
                        worst = worst.max((dot - want).abs());
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Check::at_most("cg_orthogonality", worst, 1e-12).with_detail("j1,j2<=20")
}

/// `lambda = 0` appears exactly once across all sectors for `|p| < 1`.
pub fn steady_state_uniqueness() -> Check {
    wrap("lambda0_unique", || {
        let mut bad = Vec::new();
        let mut worst_gap = f64::INFINITY;
        for (tj, p) in [(1, 0.0), (10, 0.5), (21, -0.3), (40, 0.9), (40, 0.0), (15, 0.999)] {
            let params = ModelParams::new(tj, 1.0, 1.0, 0.2, p)?;
            let mut zeros = 0;
            for m in params.sectors() {
                let dec = diagonalize(&build_sector(&params, m)?)?;
                for z in &dec.eigenvalues {
                    if z.norm() <= 1e-10 * dec.operator_norm.max(1.0) {
                        zeros += 1;
                        if m != 0 {
                            bad.push(format!("2j={tj} p={p} zero in M={m}"));
                        }
                    } else {
                        worst_gap = worst_gap.min(z.norm());
                    }
                }
            }
            if zeros != 1 {
                bad.push(format!("2j={tj} p={p} has {zeros} zero eigenvalues"));
            }
        }
        let c = Check::at_most("lambda0_unique", bad.len() as f64, 0.0);
        Ok(if bad.is_empty() {
            c.with_detail(format!("smallest nonzero |lambda|={worst_gap:.3e}"))
        } else {
            c.with_detail(bad.join("; "))
        })
    })
}

pub fn dissipativity() -> Check {
    wrap("dissipativity", || {
        let mut worst = f64::NEG_INFINITY;
        for (tj, p) in [(10, 0.5), (40, -0.7), (30, 1.0), (25, 0.0), (80, 0.5)] {
            let params = ModelParams::new(tj, 1.0, 1.0, 0.3, p)?;
            for m in params.sectors() {
                let dec = diagonalize(&build_sector(&params, m)?)?;
                worst = worst.max(dec.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max));
            }
        }
        Ok(Check::at_most("dissipativity", worst, 1e-10).with_detail("max Re(lambda)"))
    })
}

/// Sorted eigenvalues of the dense Kronecker Liouvillian against the union
/// of the sector spectra.
pub fn bruteforce_equivalence() -> Check {
    wrap("bruteforce_vs_sectors", || {
        let mut worst: f64 = 0.0;
        for tj in [2, 3, 4, 6] {
            for p in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                for g0 in [0.0, 0.7] {
                    let params = ModelParams::new(tj, 1.0, 1.0, g0, p)?;
                    let full = build_bruteforce(&params)?;
                    let dense = linalg::eigvals_general(&full.matrix).ok_or_else(|| crate::Error::Numeric {
                        two_j: tj,
                        sector: 0,
                        reason: "dense eigenvalues did not converge".into(),
                    })?;
                    let mut sectors = Vec::new();
                    for m in params.sectors() {
                        sectors.extend(diagonalize(&build_sector(&params, m)?)?.eigenvalues);
                    }
                    worst = worst.max(multiset_distance(&dense, &sectors));
                }
            }
        }
        Ok(Check::at_most("bruteforce_vs_sectors", worst, 1e-10).with_detail("j in {1,3/2,2,3}"))
    })
}

pub fn triangular_limit() -> Check {
    wrap("triangular_closed_form", || {
        let mut worst: f64 = 0.0;
        for p in [1.0, -1.0] {
            for tj in [2, 7, 20, 40, 80] {
                let params = ModelParams::new(tj, 1.0, 1.0, 0.0, p)?;
                for m in params.sectors() {
                    let dec = diagonalize(&build_sector(&params, m)?)?;
                    let idx = sector_basis(&params, m)?;
                    let exact = (0..idx.dim)
                        .map(|k| triangular_eigenvalue(&params, idx.two_m_at(k), m))
                        .collect::<Result<Vec<_>>>()?;
                    worst = worst.max(multiset_distance(&dec.eigenvalues, &exact));
                }
            }
        }
        Ok(Check::at_most("triangular_closed_form", worst, 1e-9).with_detail("p=+-1, j<=40"))
    })
}

pub fn rotor_limit() -> Check {
    wrap("rotor_closed_form", || {
        let mut worst: f64 = 0.0;
        for tj in [2, 5, 20, 41, 80] {
            let params = ModelParams::new(tj, 1.0, 1.0, 0.0, 0.0)?;
            for m in params.sectors() {
                let dec = diagonalize(&build_sector(&params, m)?)?;
                let exact = (m.unsigned_abs()..=tj)
                    .map(|k| o3_eigenvalue(&params, k, m))
                    .collect::<Result<Vec<_>>>()?;
                worst = worst.max(multiset_distance(&dec.eigenvalues, &exact));
            }
        }
        Ok(Check::at_most("rotor_closed_form", worst, 1e-9).with_detail("p=0, j<=40"))
    })
}

pub fn geometric_steady_state() -> Check {
    wrap("geometric_steady_state", || {
        let mut worst: f64 = 0.0;
        for tj in [20, 40, 80] {
            for p in [0.3, -0.3, 0.7, -0.7] {
                let params = ModelParams::new(tj, 1.0, 1.0, 0.5, p)?;
                let op = build_sector(&params, 0)?;
                let ss = thermal_ss(&params)?;
                let v: Vec<C64> = ss.populations.iter().map(|&x| C64::new(x, 0.0)).collect();
                worst = worst.max(linalg::vec_norm(&op.apply(&v)) / (op.frobenius_norm() * linalg::vec_norm(&v)));
            }
        }
        Ok(Check::at_most("geometric_steady_state", worst, 1e-12).with_detail("||L v||/(||L|| ||v||)"))
    })
}

pub fn rotor_dynamics() -> Check {
    wrap("rotor_dynamics_vs_propagate", || {
        let mut worst: f64 = 0.0;
        for tj in [4, 11, 20] {
            let params = ModelParams::new(tj, 1.0, 1.0, 0.0, 0.0)?;
            let rho = sample_state(tj)?;
            let times = [0.0, 0.5, 2.0, 7.5];
            let traj = propagate(&params, &rho, &times)?;
            for (state, &t) in traj.iter().zip(&times) {
                for obs in [Observable::Jz, Observable::Jx] {
                    let num = expectation(state, obs)?;
                    worst = worst.max((num - o3_expectation(&params, &rho, obs, t)?).abs());
                }
            }
        }
        Ok(Check::at_most("rotor_dynamics_vs_propagate", worst, 1e-8).with_detail("Jz, Jx, j<=10"))
    })
}

/// Every check, in a fixed order.
pub fn run_all() -> Vec<Check> {
    let singles: Vec<fn() -> Check> = vec![
        semigroup,
        conjugation_symmetry,
        cg_orthogonality,
        steady_state_uniqueness,
        dissipativity,
        bruteforce_equivalence,
        triangular_limit,
        rotor_limit,
        geometric_steady_state,
        rotor_dynamics,
    ];
    let mut out = trace_and_hermiticity();
    out.extend(singles.par_iter().map(|f| f()).collect::<Vec<_>>());
    out
}
