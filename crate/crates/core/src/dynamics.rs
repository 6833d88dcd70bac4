//! Density matrices stored per weak-symmetry sector, their propagation and
//! observables.

use std::collections::HashMap;

use faer::Mat;
use rayon::prelude::*;

use crate::closed_forms::{hp_states, thermal_ss};
use crate::error::{domain, Error, Result};
use crate::linalg;
use crate::liouvillian::build_sector;
use crate::model::{ladder_coeff, sector_index, Ladder, ModelParams};
use crate::C64;

/// Eigenvalues of a reconstructed density matrix below this are roundoff.
pub const CLIP_BELOW: f64 = -1e-10;
/// Eigenvalues below this are a genuine loss of positivity.
pub const POSITIVITY_FLOOR: f64 = -1e-8;

/// `rho^(M)_k = <m_k| rho |m_k - M>` for every sector `M = -2j ..= 2j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedDensityMatrix {
    two_j: u32,
    sectors: Vec<Vec<C64>>,
}

impl VectorizedDensityMatrix {
    pub fn zeros(two_j: u32) -> Self {
        let tj = two_j as i32;
        let sectors = (-tj..=tj)
            .map(|m| vec![C64::new(0.0, 0.0); (tj + 1 - m.abs()) as usize])
            .collect();
        Self { two_j, sectors }
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    pub fn hilbert_dim(&self) -> usize {
        self.two_j as usize + 1
    }

    fn slot(&self, m_sector: i32) -> Result<usize> {
        let tj = self.two_j as i32;
        if m_sector.abs() > tj {
            return domain(format!("sector M = {m_sector} outside [-{tj}, {tj}]"));
        }
        Ok((m_sector + tj) as usize)
    }

    pub fn sector(&self, m_sector: i32) -> Result<&[C64]> {
        Ok(&self.sectors[self.slot(m_sector)?])
    }

    pub fn sector_mut(&mut self, m_sector: i32) -> Result<&mut Vec<C64>> {
        let s = self.slot(m_sector)?;
        Ok(&mut self.sectors[s])
    }

    /// `<m| rho |m'>` from doubled magnetic numbers.
    pub fn element(&self, two_m: i32, two_m_right: i32) -> Result<C64> {
        if (two_m - two_m_right) % 2 != 0 {
            return domain("m and m' must differ by an integer");
        }
        let label = (two_m - two_m_right) / 2;
        let idx = sector_index(self.two_j, label)?;
        let k = idx
            .index_of(two_m)
            .ok_or_else(|| Error::Domain(format!("2m = {two_m} outside sector {label}")))?;
        Ok(self.sector(label)?[k])
    }

    /// Diagonal state from populations in ascending `m`.
    pub fn diagonal(two_j: u32, populations: &[f64]) -> Result<Self> {
        if populations.len() != two_j as usize + 1 {
            return domain("population vector length must be 2j + 1");
        }
        let mut rho = Self::zeros(two_j);
        for (z, &p) in rho.sector_mut(0)?.iter_mut().zip(populations) {
            *z = C64::new(p, 0.0);
        }
        Ok(rho)
    }

    /// `|m><m|`.
    pub fn fock(two_j: u32, two_m: i32) -> Result<Self> {
        let tj = two_j as i32;
        if two_m.abs() > tj || (two_m + tj) % 2 != 0 {
            return domain(format!("2m = {two_m} is not a level of 2j = {two_j}"));
        }
        let mut pops = vec![0.0; two_j as usize + 1];
        pops[((two_m + tj) / 2) as usize] = 1.0;
        Self::diagonal(two_j, &pops)
    }

    pub fn maximally_mixed(two_j: u32) -> Self {
        let n = two_j as usize + 1;
        Self::diagonal(two_j, &vec![1.0 / n as f64; n]).expect("length matches")
    }

    pub fn from_dense(two_j: u32, rho: &Mat<C64>) -> Result<Self> {
        let n = two_j as usize + 1;
        if rho.nrows() != n || rho.ncols() != n {
            return domain("dense matrix dimension must be 2j + 1");
        }
        let mut out = Self::zeros(two_j);
        let tj = two_j as i32;
        for m_sector in -tj..=tj {
            let idx = sector_index(two_j, m_sector)?;
            let v = out.sector_mut(m_sector)?;
            for (k, z) in v.iter_mut().enumerate() {
                let tm = idx.two_m_at(k);
                let a = ((tm + tj) / 2) as usize;
                let b = ((tm - 2 * m_sector + tj) / 2) as usize;
                *z = rho[(a, b)];
            }
        }
        Ok(out)
    }

    /// Dense `(2j+1) x (2j+1)` matrix, ascending `m`.
    pub fn to_dense(&self) -> Mat<C64> {
        let n = self.hilbert_dim();
        let tj = self.two_j as i32;
        let mut rho = Mat::<C64>::zeros(n, n);
        for (s, v) in self.sectors.iter().enumerate() {
            let m_sector = s as i32 - tj;
            let idx = sector_index(self.two_j, m_sector).expect("stored sectors are valid");
            for (k, z) in v.iter().enumerate() {
                let tm = idx.two_m_at(k);
                let a = ((tm + tj) / 2) as usize;
                let b = ((tm - 2 * m_sector + tj) / 2) as usize;
                rho[(a, b)] = *z;
            }
        }
        rho
    }

    pub fn trace(&self) -> C64 {
        self.sectors[self.two_j as usize].iter().sum()
    }

    /// Largest `|rho_{m m'} - conj(rho_{m' m})|`.
    pub fn hermiticity_error(&self) -> f64 {
        let tj = self.two_j as i32;
        let mut worst: f64 = 0.0;
        for m_sector in 0..=tj {
            let idx = sector_index(self.two_j, m_sector).expect("valid");
            let plus = &self.sectors[(m_sector + tj) as usize];
            let minus = &self.sectors[(tj - m_sector) as usize];
            let idx_minus = sector_index(self.two_j, -m_sector).expect("valid");
            for (k, z) in plus.iter().enumerate() {
                // <m|rho|m-M> against conj <m-M|rho|m>
                let partner = idx.two_m_at(k) - 2 * m_sector;
                let kk = idx_minus.index_of(partner).expect("mirror index exists");
                worst = worst.max((z - minus[kk].conj()).norm());
            }
        }
        worst
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.sectors {
            v.iter_mut().for_each(|z| *z *= s);
        }
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let rho = self.to_dense();
        let herm = Mat::from_fn(rho.nrows(), rho.ncols(), |r, c| {
            0.5 * (rho[(r, c)] + rho[(c, r)].conj())
        });
        linalg::hermitian_eigenvalues(&herm).ok_or_else(|| Error::Numeric {
            two_j: self.two_j,
            sector: 0,
            reason: "Hermitian eigensolver did not converge".into(),
        })
    }

    pub fn check_positive(&self, threshold: f64) -> Result<()> {
        let min = self.eigenvalues()?.first().copied().unwrap_or(0.0);
        if min < threshold {
            return Err(Error::Positivity {
                eigenvalue: min,
                threshold,
            });
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        self.sectors.iter().flatten().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    Jz,
    Jx,
    Jy,
    /// `|m><m|` with doubled `m`.
    Projector(i32),
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Jz => "Jz".into(),
            Observable::Jx => "Jx".into(),
            Observable::Jy => "Jy".into(),
            Observable::Projector(tm) => format!("P(2m={tm})"),
        }
    }

    /// Sectors the observable reads.
    pub fn sectors(&self) -> &'static [i32] {
        match self {
            Observable::Jz | Observable::Projector(_) => &[0],
            Observable::Jx | Observable::Jy => &[-1, 1],
        }
    }
}

/// `Tr[rho O]` without dropping an imaginary part.
pub fn expectation_complex(rho: &VectorizedDensityMatrix, which: Observable) -> Result<C64> {
    let two_j = rho.two_j();
    match which {
        Observable::Jz => {
            let idx = sector_index(two_j, 0)?;
            Ok(rho.sector(0)?.iter().enumerate().map(|(k, z)| z * idx.m_at(k)).sum())
        }
        Observable::Projector(tm) => rho.element(tm, tm),
        Observable::Jx | Observable::Jy => {
            if two_j == 0 {
                return domain("spin 0 has no transverse sectors");
            }
            // Tr[rho J+] = sum_m <m|rho|m+1> c+(m), sector M = -1
            let idx_minus = sector_index(two_j, -1)?;
            let raise: C64 = rho
                .sector(-1)?
                .iter()
                .enumerate()
                .map(|(k, z)| z * ladder_coeff(two_j, idx_minus.two_m_at(k), Ladder::Raise).unwrap())
                .sum();
            // Tr[rho J-] = sum_m <m|rho|m-1> c-(m), sector M = +1
            let idx_plus = sector_index(two_j, 1)?;
            let lower: C64 = rho
                .sector(1)?
                .iter()
                .enumerate()
                .map(|(k, z)| z * ladder_coeff(two_j, idx_plus.two_m_at(k), Ladder::Lower).unwrap())
                .sum();
            Ok(match which {
                Observable::Jx => 0.5 * (raise + lower),
                _ => (raise - lower) / C64::new(0.0, 2.0),
            })
        }
    }
}

pub fn expectation(rho: &VectorizedDensityMatrix, which: Observable) -> Result<f64> {
    Ok(expectation_complex(rho, which)?.re)
}

/// Von Neumann entropy `-Tr[rho ln rho]`.
pub fn entropy(rho: &VectorizedDensityMatrix) -> Result<f64> {
    let mut s = 0.0;
    for lam in rho.eigenvalues()? {
        if lam < POSITIVITY_FLOOR {
            return Err(Error::Positivity {
                eigenvalue: lam,
                threshold: POSITIVITY_FLOOR,
            });
        }
        if lam > 0.0 {
            s -= lam * lam.ln();
        }
    }
    Ok(s)
}

/// Spin coherent state pointing along `(sin t cos f, sin t sin f, cos t)`.
pub fn coherent_state(two_j: u32, theta: f64, phi: f64) -> Result<VectorizedDensityMatrix> {
    if !theta.is_finite() || !phi.is_finite() {
        return domain("coherent-state angles must be finite");
    }
    let n = two_j as usize + 1;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let ln_fact = ln_factorials(n);
    let amp: Vec<C64> = (0..n)
        .map(|k| {
            // k = j + m
            let up = k as i32;
            let down = two_j as i32 - up;
            let ln_binom = 0.5 * (ln_fact[n - 1] - ln_fact[k] - ln_fact[n - 1 - k]);
            let mag = ln_binom.exp() * c.abs().powi(up) * s.abs().powi(down);
            let sign = c.signum().powi(up) * s.signum().powi(down);
            let m = f64::from(up) - f64::from(two_j) / 2.0;
            C64::from_polar(sign * mag, -m * phi)
        })
        .collect();
    let rho = Mat::from_fn(n, n, |r, col| amp[r] * amp[col].conj());
    VectorizedDensityMatrix::from_dense(two_j, &rho)
}

pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return domain("times must be finite");
    }
    if times.first().is_some_and(|&t| t < 0.0) {
        return domain("times must be nonnegative");
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return domain("times must be nondecreasing");
    }
    Ok(())
}

/// `exp(t L_M) v` for each `t`, stepping between consecutive times and
/// reusing the step propagator when steps repeat.
pub fn propagate_sector(params: &ModelParams, m_sector: i32, v0: &[C64], times: &[f64]) -> Result<Vec<Vec<C64>>> {
    validate_times(times)?;
    let op = build_sector(params, m_sector)?;
    if v0.len() != op.dim() {
        return domain("vector length does not match sector dimension");
    }
    let dense = op.to_dense();
    let mut cache: HashMap<u64, Mat<C64>> = HashMap::new();
    let mut out = Vec::with_capacity(times.len());
    let mut current = v0.to_vec();
    let mut t_prev = 0.0;
    for &t in times {
        let dt = t - t_prev;
        if dt != 0.0 {
            let step = cache
                .entry(dt.to_bits())
                .or_insert_with(|| linalg::expm(&(&dense * faer::Scale(C64::new(dt, 0.0)))));
            current = linalg::matvec(step, &current);
        }
        out.push(current.clone());
        t_prev = t;
    }
    Ok(out)
}

/// One state per requested time. Sectors are independent and run in
/// parallel; sectors that start at zero stay at zero.
pub fn propagate(
    params: &ModelParams,
    rho0: &VectorizedDensityMatrix,
    times: &[f64],
) -> Result<Vec<VectorizedDensityMatrix>> {
    validate_times(times)?;
    if rho0.two_j() != params.two_j() {
        return domain("state and parameters disagree on 2j");
    }
    let labels: Vec<i32> = params.sectors().collect();
    let per_sector: Vec<Option<Vec<Vec<C64>>>> = labels
        .par_iter()
        .map(|&m| {
            let v0 = rho0.sector(m)?;
            if v0.iter().all(|z| z.norm() == 0.0) {
                return Ok(None);
            }
            propagate_sector(params, m, v0, times).map(Some)
        })
        .collect::<Result<_>>()?;
    let mut out = vec![VectorizedDensityMatrix::zeros(params.two_j()); times.len()];
    for (&m, traj) in labels.iter().zip(per_sector) {
        if let Some(traj) = traj {
            for (state, v) in out.iter_mut().zip(traj) {
                *state.sector_mut(m)? = v;
            }
        }
    }
    Ok(out)
}

/// A real observable sampled on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
    pub two_j: u32,
    pub p: f64,
}

impl ObservableTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>, label: impl Into<String>, two_j: u32, p: f64) -> Result<Self> {
        if times.len() != values.len() {
            return domain("times and values differ in length");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return domain("trace times must be strictly increasing");
        }
        Ok(Self {
            times,
            values,
            label: label.into(),
            two_j,
            p,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn observable_trace(
    params: &ModelParams,
    rho0: &VectorizedDensityMatrix,
    which: Observable,
    times: &[f64],
) -> Result<ObservableTrace> {
    let states = propagate(params, rho0, times)?;
    let values = states
        .iter()
        .map(|s| expectation(s, which))
        .collect::<Result<Vec<_>>>()?;
    ObservableTrace::new(times.to_vec(), values, which.label(), params.two_j(), params.p)
}

pub fn entropy_trace(params: &ModelParams, rho0: &VectorizedDensityMatrix, times: &[f64]) -> Result<ObservableTrace> {
    let states = propagate(params, rho0, times)?;
    let values = states.iter().map(entropy).collect::<Result<Vec<_>>>()?;
    ObservableTrace::new(times.to_vec(), values, "S", params.two_j(), params.p)
}

/// Initial state `|0,0> + a|1,0> + b|1,0bar>` of the slowing-down
/// experiment, on the `M = 0` diagonal.
pub fn slowdown_initial_state(params: &ModelParams, a: f64, b: f64) -> Result<VectorizedDensityMatrix> {
    let hp = hp_states(params)?;
    let pops = hp.combination(1.0, a, b);
    let rho = VectorizedDensityMatrix::diagonal(params.two_j(), &pops)?;
    if let Some((k, &x)) = pops
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .filter(|(_, &x)| x < CLIP_BELOW)
    {
        return domain(format!(
            "initial state is not a density matrix (population {x:.3e} at index {k}); use smaller |a| and |b|"
        ));
    }
    Ok(rho)
}

/// `delta Jz(t)` from exact propagation and from the two-mode Jordan-block
/// formula `|0,0> + (a + b t) e^{lt} |1,0> + b e^{lt} |1,0bar>`.
pub fn slowdown_experiment(
    params: &ModelParams,
    a: f64,
    b: f64,
    times: &[f64],
) -> Result<(ObservableTrace, ObservableTrace)> {
    let hp = hp_states(params)?;
    let rho0 = slowdown_initial_state(params, a, b)?;
    let jz_inf = thermal_ss(params)?.magnetization;
    let v0 = rho0.sector(0)?.to_vec();
    let traj = propagate_sector(params, 0, &v0, times)?;
    let idx = sector_index(params.two_j(), 0)?;
    let jz = |v: &[C64]| -> f64 { v.iter().enumerate().map(|(k, z)| z.re * idx.m_at(k)).sum() };
    let jz0 = jz(&v0);
    let denom = jz0 - jz_inf;
    if denom.abs() < 1e-300 {
        return domain("initial state has the steady-state magnetization; delta Jz undefined");
    }
    let numeric: Vec<f64> = traj.iter().map(|v| (jz(v) - jz_inf) / denom).collect();

    let z1 = hp.jz_moment(&hp.first);
    let zg = hp.jz_moment(&hp.generalized);
    let lam = hp.lambda_10;
    let theo_den = a * z1 + b * zg;
    let theory: Vec<f64> = times
        .iter()
        .map(|&t| ((a + b * t) * z1 + b * zg) * (lam * t).exp() / theo_den)
        .collect();
    let label = format!("deltaJz(a={a},b={b})");
    Ok((
        ObservableTrace::new(
            times.to_vec(),
            numeric,
            label.clone() + ":numeric",
            params.two_j(),
            params.p,
        )?,
        ObservableTrace::new(times.to_vec(), theory, label + ":theory", params.two_j(), params.p)?,
    ))
}

/// `<Jx(t)>/j` from the coherent state along `+x` at `p = 0`, for each `2j`.
pub fn btc_experiment(params: &ModelParams, two_js: &[u32], times: &[f64]) -> Result<Vec<ObservableTrace>> {
    if params.p != 0.0 {
        return domain("the rotor dynamics needs p = 0");
    }
    two_js
        .iter()
        .map(|&two_j| {
            let p = params.with_two_j(two_j)?;
            let values = times
                .iter()
                .map(|&t| crate::closed_forms::jx_over_j(&p, 1.0, 0.0, t))
                .collect();
            ObservableTrace::new(times.to_vec(), values, "Jx/j", two_j, 0.0)
        })
        .collect()
}
