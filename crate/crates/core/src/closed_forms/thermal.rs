use crate::error::{domain, Result};
use crate::model::ModelParams;

/// `alpha^n / Z` for `n = 0..len` and `ln Z`, with `Z = sum alpha^n`.
/// For `alpha > 1` the weights are taken relative to the top term.
pub(crate) fn geometric_populations(alpha: f64, len: usize) -> (Vec<f64>, f64) {
    let top = len as i32 - 1;
    let w: Vec<f64> = if alpha <= 1.0 {
        (0..len).map(|n| alpha.powi(n as i32)).collect()
    } else {
        (0..len).map(|n| alpha.recip().powi(top - n as i32)).collect()
    };
    let s: f64 = w.iter().sum();
    let ln_z = s.ln() + if alpha <= 1.0 { 0.0 } else { f64::from(top) * alpha.ln() };
    (w.iter().map(|x| x / s).collect(), ln_z)
}

/// Thermal steady state `rho ~ alpha^(m+j)` on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSS {
    pub two_j: u32,
    pub alpha: f64,
    /// `ln((1-p)/(1+p)) / h`; absent when `h = 0` or `|p| = 1`.
    pub beta: Option<f64>,
    /// `ln sum_m alpha^(m+j)`; infinite at `p = -1`.
    pub ln_z: f64,
    pub magnetization: f64,
    /// Ascending `m`.
    pub populations: Vec<f64>,
    pub pure: bool,
}

pub fn thermal_ss(params: &ModelParams) -> Result<ThermalSS> {
    let p = params.p;
    if !(-1.0..=1.0).contains(&p) {
        return domain(format!("polarization must lie in [-1, 1], got {p}"));
    }
    let len = params.hilbert_dim();
    let j = params.j();
    if p.abs() == 1.0 {
        let mut populations = vec![0.0; len];
        let (slot, alpha, ln_z) = if p > 0.0 {
            (0, 0.0, 0.0)
        } else {
            (len - 1, f64::INFINITY, f64::INFINITY)
        };
        populations[slot] = 1.0;
        return Ok(ThermalSS {
            two_j: params.two_j(),
            alpha,
            beta: None,
            ln_z,
            magnetization: -p.signum() * j,
            populations,
            pure: true,
        });
    }
    let alpha = (1.0 - p) / (1.0 + p);
    let beta = (params.h != 0.0).then(|| alpha.ln() / params.h);
    let (populations, ln_z) = geometric_populations(alpha, len);
    let magnetization = populations.iter().enumerate().map(|(k, w)| (k as f64 - j) * w).sum();
    Ok(ThermalSS {
        two_j: params.two_j(),
        alpha,
        beta,
        ln_z,
        magnetization,
        populations,
        pure: false,
    })
}

/// `lim <Jz>/j` as `j -> infinity`.
pub fn tl_magnetization_per_spin(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        -p.signum()
    }
}
