use super::thermal::geometric_populations;
use crate::dynamics::ln_factorials;
use crate::error::{domain, Result};
use crate::model::ModelParams;

/// Bogoliubov coefficients `(u, v, u_bar, v_bar)` with `u u_bar - v v_bar = 1`.
pub fn bogoliubov(p: f64) -> Result<(f64, f64, f64, f64)> {
    if !(p > 0.0 && p <= 1.0) {
        return domain(format!("Bogoliubov transform needs 0 < p <= 1, got {p}"));
    }
    let s = p.sqrt();
    Ok(((1.0 + p) / (2.0 * s), (1.0 - p) / (2.0 * s), 1.0 / s, 1.0 / s))
}

/// Large-`j` eigenstructure of the `M = 0` sector at `0 < |p| < 1`.
///
/// All vectors hold populations in ascending `m`. With `n` the number of
/// excitations above the steady-state edge (`n = m + j` for `p > 0`,
/// `n = j - m` for `p < 0`), the steady state is `alpha^n / Z`,
/// `|1,0>` is `[-2/(1+p) alpha^n + 4p/(1+p)^2 n alpha^(n-1)] / Z` times
/// `Gamma(1+p)/2`, and `|1,0bar>` is `sum_k Omega_k binom(n,k) alpha^(n-k) / Z`.
/// Truncation at `n = 2j` leaves a small trace; `first` and `generalized`
/// have it projected out along the steady state, the `_raw` vectors keep it.
#[derive(Debug, Clone, PartialEq)]
pub struct HPStates {
    pub two_j: u32,
    pub p: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub ln_z: f64,
    pub omega: Vec<f64>,
    pub steady: Vec<f64>,
    pub first: Vec<f64>,
    pub generalized: Vec<f64>,
    pub first_raw: Vec<f64>,
    pub generalized_raw: Vec<f64>,
    pub lambda_10: f64,
}

impl HPStates {
    /// `lambda_{2n-1,0} = lambda_{2n,0} = -2|p| Gamma n`.
    pub fn doublet(&self, n: u32) -> f64 {
        -2.0 * self.p.abs() * self.gamma * f64::from(n)
    }

    /// `c0 |0,0> + a |1,0> + b |1,0bar>`.
    pub fn combination(&self, c0: f64, a: f64, b: f64) -> Vec<f64> {
        (0..self.steady.len())
            .map(|k| c0 * self.steady[k] + a * self.first[k] + b * self.generalized[k])
            .collect()
    }

    /// `sum_m m v_m`.
    pub fn jz_moment(&self, v: &[f64]) -> f64 {
        let j = f64::from(self.two_j) / 2.0;
        v.iter().enumerate().map(|(k, x)| (k as f64 - j) * x).sum()
    }

    /// Reorder an excitation-number vector into ascending `m`.
    fn to_m_order(&self, mut by_n: Vec<f64>) -> Vec<f64> {
        if self.p < 0.0 {
            by_n.reverse();
        }
        by_n
    }
}

fn omega_coefficients(q: f64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let o2 = q / (1.0 + q).powi(2);
    let ratio = 2.0 * q / (1.0 + q);
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = match k {
            0 => 1.0,
            1 => -(1.0 + 2.0 * q) / (1.0 + q),
            _ => {
                let pairs = (k * (k - 1) / 2) as f64;
                o2 * ratio.powi(k as i32 - 2) / pairs
            }
        };
    }
    out
}

pub fn hp_states(params: &ModelParams) -> Result<HPStates> {
    let p = params.p;
    if !(p != 0.0 && p.abs() < 1.0) {
        return domain(format!("HP states need 0 < |p| < 1, got p = {p}"));
    }
    let q = p.abs();
    let alpha = (1.0 - q) / (1.0 + q);
    let n_max = params.two_j() as usize;
    let len = n_max + 1;
    let (geo, ln_z) = geometric_populations(alpha, len);
    let z_inv = (-ln_z).exp();
    let scale = params.gamma * (1.0 + q) / 2.0;

    let first_n: Vec<f64> = (0..len)
        .map(|n| {
            let nf = n as f64;
            let tail = if n == 0 { 0.0 } else { nf * alpha.powi(n as i32 - 1) };
            scale * (-2.0 / (1.0 + q) * alpha.powi(n as i32) + 4.0 * q / (1.0 + q).powi(2) * tail) * z_inv
        })
        .collect();

    // For k >= 2 the terms are Omega_2 ((1+q)/2q)^2 P(k) / binom(k, 2) with
    // P the binomial pmf of (n, 2q/(1+q)); summed in logs so that large n
    // neither overflows the binomials nor underflows the powers.
    let omega = omega_coefficients(q, len);
    let ln_fact = ln_factorials(len);
    let b = 2.0 * q / (1.0 + q);
    let (ln_a, ln_b) = (alpha.ln(), b.ln());
    let lead = omega[2] * ((1.0 + q) / (2.0 * q)).powi(2);
    let gen_n: Vec<f64> = (0..len)
        .map(|n| {
            let nf = n as f64;
            let mut s = alpha.powi(n as i32) + omega[1] * nf * if n == 0 { 0.0 } else { alpha.powi(n as i32 - 1) };
            for k in 2..=n {
                let ln_pmf = ln_fact[n] - ln_fact[k] - ln_fact[n - k] + k as f64 * ln_b + (n - k) as f64 * ln_a;
                s += lead * ln_pmf.exp() / ((k * (k - 1) / 2) as f64);
            }
            s * z_inv
        })
        .collect();

    let mut states = HPStates {
        two_j: params.two_j(),
        p,
        gamma: params.gamma,
        alpha,
        ln_z,
        omega,
        steady: vec![],
        first: vec![],
        generalized: vec![],
        first_raw: vec![],
        generalized_raw: vec![],
        lambda_10: -2.0 * q * params.gamma,
    };
    let project = |v: &[f64]| -> Vec<f64> {
        let tr: f64 = v.iter().sum();
        v.iter().zip(&geo).map(|(x, s)| x - tr * s).collect()
    };
    let first = project(&first_n);
    let generalized = project(&gen_n);
    states.steady = states.to_m_order(geo.clone());
    states.first = states.to_m_order(first);
    states.generalized = states.to_m_order(generalized);
    states.first_raw = states.to_m_order(first_n);
    states.generalized_raw = states.to_m_order(gen_n);
    Ok(states)
}

/// Leading-order `M = 0` generator in the excitation basis,
/// `(L_h v)_n = -[Gamma(1-q) + 2 Gamma n] v_n + Gamma(1-q) n v_(n-1) + Gamma(1+q)(n+1) v_(n+1)`
/// with `q = |p|`, `v` indexed by `n` and cut off at its length.
pub fn hp_leading_apply(params: &ModelParams, v: &[f64]) -> Vec<f64> {
    let (g, q) = (params.gamma, params.p.abs());
    let len = v.len();
    (0..len)
        .map(|n| {
            let nf = n as f64;
            let mut out = -(g * (1.0 - q) + 2.0 * g * nf) * v[n];
            if n > 0 {
                out += g * (1.0 - q) * nf * v[n - 1];
            }
            if n + 1 < len {
                out += g * (1.0 + q) * (nf + 1.0) * v[n + 1];
            }
            out
        })
        .collect()
}
