//! Model parameters, spin ladder matrix elements and weak-symmetry sectors.
//!
//! Spin quantum numbers are carried as doubled integers (`two_j`, `two_m`) so
//! half-integer spins index exactly. Sector labels `M = m - m'` are always
//! integers.

use crate::error::{domain, Result};

/// Physical parameters of the collective spin and its bath.
///
/// `H = -h Jz`, jumps `sqrt(gamma0/j) Jz` and `sqrt(gamma/j (1 -/+ p)/2) J±`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    two_j: u32,
    pub h: f64,
    pub gamma: f64,
    pub gamma0: f64,
    pub p: f64,
}

impl ModelParams {
    pub fn new(two_j: u32, h: f64, gamma: f64, gamma0: f64, p: f64) -> Result<Self> {
        if two_j < 1 {
            return domain("2j must be at least 1");
        }
        if !h.is_finite() {
            return domain(format!("field h must be finite, got {h}"));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        if !(gamma0.is_finite() && gamma0 >= 0.0) {
            return domain(format!("gamma0 must be nonnegative, got {gamma0}"));
        }
        if !(p.is_finite() && p.abs() <= 1.0) {
            return domain(format!("polarization must lie in [-1, 1], got {p}"));
        }
        Ok(Self {
            two_j,
            h,
            gamma,
            gamma0,
            p,
        })
    }

    /// `gamma = h = 1`, `gamma0 = 0`.
    pub fn unit(two_j: u32, p: f64) -> Result<Self> {
        Self::new(two_j, 1.0, 1.0, 0.0, p)
    }

    pub fn with_p(self, p: f64) -> Result<Self> {
        Self::new(self.two_j, self.h, self.gamma, self.gamma0, p)
    }

    pub fn with_gamma0(self, gamma0: f64) -> Result<Self> {
        Self::new(self.two_j, self.h, self.gamma, gamma0, self.p)
    }

    pub fn with_two_j(self, two_j: u32) -> Result<Self> {
        Self::new(two_j, self.h, self.gamma, self.gamma0, self.p)
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    /// `N = 2j + 1`.
    pub fn hilbert_dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn liouville_dim(&self) -> usize {
        self.hilbert_dim() * self.hilbert_dim()
    }

    /// Sector labels `-2j ..= 2j`.
    pub fn sectors(&self) -> impl Iterator<Item = i32> {
        let t = self.two_j as i32;
        -t..=t
    }

    pub fn is_triangular(&self) -> bool {
        self.p.abs() == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// `sqrt(j(j+1) - m(m ± 1))`, zero at the ends of the ladder.
pub fn ladder_coeff(two_j: u32, two_m: i32, direction: Ladder) -> Result<f64> {
    let tj = two_j as i64;
    let tm = two_m as i64;
    if tm.abs() > tj || (tj - tm) % 2 != 0 {
        return domain(format!("m = {two_m}/2 is not a projection of j = {two_j}/2"));
    }
    let shift = match direction {
        Ladder::Raise => 2,
        Ladder::Lower => -2,
    };
    // 4 [j(j+1) - m(m±1)] as an exact integer
    let four_x = tj * (tj + 2) - tm * (tm + shift);
    Ok((four_x.max(0) as f64).sqrt() / 2.0)
}

/// Range of the left magnetic number `m` inside sector `M`, components
/// `<m| rho |m - M>` in ascending `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorIndex {
    pub two_j: u32,
    /// Weak-symmetry quantum number `M`.
    pub label: i32,
    pub two_m_min: i32,
    pub two_m_max: i32,
    pub dim: usize,
}

impl SectorIndex {
    /// Doubled left magnetic number of component `k`.
    pub fn two_m_at(&self, k: usize) -> i32 {
        self.two_m_min + 2 * k as i32
    }

    pub fn m_at(&self, k: usize) -> f64 {
        f64::from(self.two_m_at(k)) / 2.0
    }

    /// Component index of doubled `m`, if it lies in this sector.
    pub fn index_of(&self, two_m: i32) -> Option<usize> {
        if two_m < self.two_m_min || two_m > self.two_m_max || (two_m - self.two_m_min) % 2 != 0 {
            return None;
        }
        Some(((two_m - self.two_m_min) / 2) as usize)
    }
}

pub fn sector_basis(params: &ModelParams, m: i32) -> Result<SectorIndex> {
    sector_index(params.two_j(), m)
}

pub fn sector_index(two_j: u32, m: i32) -> Result<SectorIndex> {
    let tj = two_j as i32;
    if m.abs() > tj {
        return domain(format!("sector M = {m} outside [-2j, 2j] = [{}, {tj}]", -tj));
    }
    let two_m_min = (-tj).max(-tj + 2 * m);
    let two_m_max = tj.min(tj + 2 * m);
    Ok(SectorIndex {
        two_j,
        label: m,
        two_m_min,
        two_m_max,
        dim: (tj + 1 - m.abs()) as usize,
    })
}
