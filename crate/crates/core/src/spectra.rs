//! Sector diagonalization, eigenvector coalescence and scaling fits.

use faer::Mat;

use crate::error::{domain, Error, Result};
use crate::linalg;
use crate::liouvillian::SectorOperator;
use crate::model::SectorIndex;
use crate::C64;

/// Pair condition number above which a pair is reported as near-defective.
pub const NEAR_DEFECTIVE_CONDITION: f64 = 1e8;

/// Relative residual above which an eigenvector is refined by inverse
/// iteration.
const REFINE_THRESHOLD: f64 = 1e-12;
const REFINE_STEPS: usize = 8;

/// Relative gap below which symmetric eigenvalues are treated as one cluster.
const CLUSTER_EPS_FACTOR: f64 = 64.0;

/// Which algorithm produced a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// `|p| < 1`: exact diagonal similarity to a real symmetric tridiagonal
    /// matrix shifted by `i h M`.
    Symmetrized,
    /// `|p| = 1`: triangular sector, eigenvalues read off the diagonal.
    Triangular,
    /// Dense non-Hermitian QR.
    General,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub sector: SectorIndex,
    /// Descending real part, ties by ascending imaginary part.
    pub eigenvalues: Vec<C64>,
    /// Unit Euclidean norm, largest-modulus component real and positive.
    pub right_eigenvectors: Vec<Vec<C64>>,
    pub residual_norms: Vec<f64>,
    /// `N` such that `(N, N + 1)` has pair condition above
    /// [`NEAR_DEFECTIVE_CONDITION`].
    pub near_defective: Vec<usize>,
    /// Frobenius norm of the sector operator.
    pub operator_norm: f64,
    pub route: Route,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn j(&self) -> f64 {
        f64::from(self.sector.two_j) / 2.0
    }

    pub fn max_relative_residual(&self) -> f64 {
        let norm = self.operator_norm.max(f64::MIN_POSITIVE);
        self.residual_norms.iter().fold(0.0, |a, &r| a.max(r / norm))
    }

    /// `d_N` for every consecutive pair.
    pub fn distances(&self) -> Vec<f64> {
        (0..self.dim().saturating_sub(1))
            .map(|n| pair_distance(&self.right_eigenvectors[n], &self.right_eigenvectors[n + 1]))
            .collect()
    }
}

fn pair_distance(a: &[C64], b: &[C64]) -> f64 {
    if a == b {
        return 0.0;
    }
    (1.0 - linalg::inner(a, b).norm()).clamp(0.0, 1.0)
}

fn pair_condition(a: &[C64], b: &[C64]) -> f64 {
    let c = linalg::inner(a, b).norm().min(1.0);
    if c >= 1.0 {
        f64::INFINITY
    } else {
        ((1.0 + c) / (1.0 - c)).sqrt()
    }
}

fn order(a: &C64, b: &C64) -> std::cmp::Ordering {
    b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im))
}

fn fix_phase(v: &mut [C64]) {
    let norm = linalg::vec_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm() / norm;
    for z in v.iter_mut() {
        *z *= phase;
    }
}

/// Picks the route automatically.
pub fn diagonalize(op: &SectorOperator) -> Result<SpectralDecomposition> {
    diagonalize_with(op, auto_route(op))
}

pub fn auto_route(op: &SectorOperator) -> Route {
    let zero = C64::new(0.0, 0.0);
    if op.upper.iter().all(|&z| z == zero) || op.lower.iter().all(|&z| z == zero) {
        return Route::Triangular;
    }
    let im0 = op.diag[0].im;
    let real_positive = op
        .upper
        .iter()
        .zip(&op.lower)
        .all(|(u, l)| u.im == 0.0 && l.im == 0.0 && u.re > 0.0 && l.re > 0.0);
    if real_positive && op.diag.iter().all(|d| d.im == im0) {
        Route::Symmetrized
    } else {
        Route::General
    }
}

pub fn diagonalize_with(op: &SectorOperator, route: Route) -> Result<SpectralDecomposition> {
    let n = op.dim();
    if n == 0 {
        return domain("empty sector");
    }
    let (eigenvalues, mut vectors) = match route {
        Route::Symmetrized => symmetrized(op)?,
        Route::Triangular => triangular(op)?,
        Route::General => general(op)?,
    };
    let norm = op.frobenius_norm();
    let mut residual_norms: Vec<f64> = eigenvalues
        .iter()
        .zip(&vectors)
        .map(|(&lam, v)| residual(op, lam, v))
        .collect();
    if route != Route::Triangular {
        for k in 0..n {
            if residual_norms[k] > REFINE_THRESHOLD * norm {
                if let Some((v, r)) = refine(op, eigenvalues[k], &vectors[k], residual_norms[k]) {
                    vectors[k] = v;
                    residual_norms[k] = r;
                }
            }
        }
    }
    for v in vectors.iter_mut() {
        fix_phase(v);
    }
    let near_defective = (0..n.saturating_sub(1))
        .filter(|&k| pair_condition(&vectors[k], &vectors[k + 1]) > NEAR_DEFECTIVE_CONDITION)
        .collect();
    Ok(SpectralDecomposition {
        sector: op.sector,
        eigenvalues,
        right_eigenvectors: vectors,
        residual_norms,
        near_defective,
        operator_norm: norm,
        route,
    })
}

fn residual(op: &SectorOperator, lam: C64, v: &[C64]) -> f64 {
    let av = op.apply(v);
    av.iter()
        .zip(v)
        .map(|(a, x)| (a - lam * x).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Inverse iteration on the sector operator itself, from the given vector
/// and from a flat vector; returns the improvement over `current`, if any.
fn refine(op: &SectorOperator, lam: C64, start: &[C64], current: f64) -> Option<(Vec<C64>, f64)> {
    let diag: Vec<C64> = op.diag.iter().map(|d| d - lam).collect();
    let tiny = f64::EPSILON * op.frobenius_norm();
    let target = REFINE_THRESHOLD * op.frobenius_norm();
    let flat = vec![C64::new(1.0, 0.0); op.dim()];
    let mut best: Option<(Vec<C64>, f64)> = None;
    for init in [start, &flat[..]] {
        let mut x = init.to_vec();
        for _ in 0..REFINE_STEPS {
            let (y, log_norm) = linalg::solve_tridiagonal_scaled(&op.upper, &diag, &op.lower, &x, tiny);
            if !log_norm.is_finite() || y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                break;
            }
            x = y;
            let r = residual(op, lam, &x);
            if r < best.as_ref().map_or(current, |b| b.1) {
                best = Some((x.clone(), r));
            }
            if r <= target {
                return best;
            }
        }
    }
    best
}

fn numeric_error(op: &SectorOperator, reason: &str) -> Error {
    Error::Numeric {
        two_j: op.sector.two_j,
        sector: op.sector.label,
        reason: reason.to_string(),
    }
}

fn symmetrized(op: &SectorOperator) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let n = op.dim();
    let shift = op.diag[0].im;
    let diag: Vec<f64> = op.diag.iter().map(|d| d.re).collect();
    let off: Vec<f64> = op
        .upper
        .iter()
        .zip(&op.lower)
        .map(|(u, l)| (u.re * l.re).sqrt())
        .collect();
    let mut log_d = vec![0.0; n];
    for k in 1..n {
        log_d[k] = log_d[k - 1] + 0.5 * (op.upper[k - 1].re.ln() - op.lower[k - 1].re.ln());
    }
    let (vals, u) = linalg::sym_tridiag_eig(&diag, &off)
        .ok_or_else(|| numeric_error(op, "symmetric tridiagonal eigensolver did not converge"))?;
    let scale = diag.iter().fold(0.0f64, |a, d| a.max(d.abs())) + 2.0 * off.iter().fold(0.0f64, |a, o| a.max(o.abs()));
    let tol = CLUSTER_EPS_FACTOR * f64::EPSILON * scale;

    // descending order
    let cols: Vec<usize> = (0..n).rev().collect();
    let mut vectors = vec![Vec::new(); n];
    let mut i = 0;
    while i < n {
        let mut k = i + 1;
        while k < n && (vals[cols[k - 1]] - vals[cols[k]]).abs() <= tol {
            k += 1;
        }
        let members = &cols[i..k];
        let lg_max = members
            .iter()
            .flat_map(|&c| (0..n).map(move |r| (r, c)))
            .map(|(r, c)| u[(r, c)].abs().ln() + log_d[r])
            .fold(f64::NEG_INFINITY, f64::max);
        let rescaled = Mat::from_fn(n, members.len(), |r, t| {
            let x = u[(r, members[t])];
            if x == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(x.signum() * (x.abs().ln() + log_d[r] - lg_max).exp(), 0.0)
            }
        });
        if members.len() == 1 {
            let v: Vec<C64> = (0..n).map(|r| rescaled[(r, 0)]).collect();
            vectors[i] = v;
        } else {
            let v = linalg::dominant_left_singular_vector(&rescaled)
                .ok_or_else(|| numeric_error(op, "cluster SVD did not converge"))?;
            for slot in vectors.iter_mut().take(k).skip(i) {
                *slot = v.clone();
            }
        }
        i = k;
    }
    let eigenvalues = cols.iter().map(|&c| C64::new(vals[c], shift)).collect();
    Ok((eigenvalues, vectors))
}

fn triangular(op: &SectorOperator) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let n = op.dim();
    let zero = C64::new(0.0, 0.0);
    let upper_form = op.upper.iter().all(|&z| z == zero);
    let tol = CLUSTER_EPS_FACTOR * f64::EPSILON * op.norm_inf();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| order(&op.diag[a], &op.diag[b]).then(a.cmp(&b)));
    let eigenvalues: Vec<C64> = idx.iter().map(|&k| op.diag[k]).collect();
    let vectors = idx.iter().map(|&k| triangular_chain(op, k, upper_form, tol)).collect();
    Ok((eigenvalues, vectors))
}

/// Eigenvector of a triangular sector for the eigenvalue `diag[start]`.
/// When the value repeats along the chain, the chain is restarted from the
/// repeat nearest the free end, which spans the (one-dimensional) kernel.
fn triangular_chain(op: &SectorOperator, start: usize, upper_form: bool, tol: f64) -> Vec<C64> {
    let n = op.dim();
    let target = op.diag[start];
    let mut v = vec![C64::new(0.0, 0.0); n];
    if upper_form {
        // nonzero band is A[k][k+1]; chain runs toward lower k
        let head = (0..=start)
            .find(|&k| (op.diag[k] - target).norm() <= tol)
            .unwrap_or(start);
        let lam = op.diag[head];
        v[head] = C64::new(1.0, 0.0);
        for k in (0..head).rev() {
            v[k] = op.lower[k] * v[k + 1] / (lam - op.diag[k]);
            rescale_if_large(&mut v[k..=head], 0);
        }
    } else {
        let head = (start..n)
            .rev()
            .find(|&k| (op.diag[k] - target).norm() <= tol)
            .unwrap_or(start);
        let lam = op.diag[head];
        v[head] = C64::new(1.0, 0.0);
        for k in head + 1..n {
            v[k] = op.upper[k - 1] * v[k - 1] / (lam - op.diag[k]);
            rescale_if_large(&mut v[head..=k], k - head);
        }
    }
    let norm = linalg::vec_norm(&v);
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

fn rescale_if_large(seg: &mut [C64], newest: usize) {
    if seg[newest].norm() > 1e100 {
        seg.iter_mut().for_each(|z| *z *= 1e-100);
    }
}

fn general(op: &SectorOperator) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let n = op.dim();
    let (vals, u) =
        linalg::eig_general(&op.to_dense()).ok_or_else(|| numeric_error(op, "general eigensolver did not converge"))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| order(&vals[a], &vals[b]));
    let eigenvalues = idx.iter().map(|&k| vals[k]).collect();
    let vectors = idx
        .iter()
        .map(|&k| {
            let v: Vec<C64> = (0..n).map(|r| u[(r, k)]).collect();
            let norm = linalg::vec_norm(&v);
            v.into_iter().map(|z| z / norm).collect()
        })
        .collect();
    Ok((eigenvalues, vectors))
}

/// `d_N = 1 - |<v_N, v_{N+1}>|`.
pub fn eigenvector_distance(dec: &SpectralDecomposition, n: usize) -> Result<f64> {
    if n + 1 >= dec.dim() {
        return domain(format!(
            "pair ({n}, {}) outside a sector of dimension {}",
            n + 1,
            dec.dim()
        ));
    }
    Ok(pair_distance(
        &dec.right_eigenvectors[n],
        &dec.right_eigenvectors[n + 1],
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EPScanResult {
    pub gamma_bound: f64,
    /// `lambda_{N+1}` for the first odd `N` with `d_N > gamma`; `None` when
    /// every pair coalesces.
    pub precursor: Option<C64>,
    pub precursor_index: Option<usize>,
    pub paired_indices: Vec<(usize, usize)>,
}

/// Walks the doublets `(1, 2), (3, 4), ...` (index 0 is the slowest mode,
/// the steady state in `M = 0`).
pub fn ep_scan(dec: &SpectralDecomposition, gamma_bound: f64) -> Result<EPScanResult> {
    if !(gamma_bound > 0.0 && gamma_bound < 1.0) {
        return domain(format!("gamma bound {gamma_bound} outside (0, 1)"));
    }
    let mut paired = Vec::new();
    let mut n = 1;
    while n + 1 < dec.dim() {
        let d = eigenvector_distance(dec, n)?;
        if d > gamma_bound {
            return Ok(EPScanResult {
                gamma_bound,
                precursor: Some(dec.eigenvalues[n + 1]),
                precursor_index: Some(n + 1),
                paired_indices: paired,
            });
        }
        paired.push((n, n + 1));
        n += 2;
    }
    Ok(EPScanResult {
        gamma_bound,
        precursor: None,
        precursor_index: None,
        paired_indices: paired,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Slope: power-law exponent or exponential rate.
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() {
        return domain("x and y lengths differ");
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok((slope, intercept, r2))
}

/// Least squares of `ln y` against `ln x`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return domain("power-law fit needs finite positive data");
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&lx, &ly)?;
    Ok(FitResult {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared: r2,
        n_points: xs.len(),
    })
}

/// Least squares of `ln y` against `x`.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if ys.iter().any(|&v| !(v > 0.0) || !v.is_finite()) || xs.iter().any(|x| !x.is_finite()) {
        return domain("exponential fit needs finite x and positive y");
    }
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (slope, intercept, r2) = linear_fit(xs, &ly)?;
    Ok(FitResult {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared: r2,
        n_points: xs.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges in `Re(lambda) / j`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Counts normalized to unit integral.
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Center of the densest bin (first one on ties).
    pub fn peak(&self) -> f64 {
        let mut best = 0;
        for (k, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = k;
            }
        }
        self.centers()[best]
    }
}

pub fn default_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(10)
}

/// Histogram of `Re(lambda) / j` over every eigenvalue of `decs`.
pub fn density_of_states(decs: &[SpectralDecomposition], bins: Option<usize>) -> Result<Histogram> {
    let values: Vec<f64> = decs
        .iter()
        .flat_map(|d| {
            let j = d.j();
            d.eigenvalues.iter().map(move |l| l.re / j)
        })
        .collect();
    histogram(&values, bins)
}

pub fn histogram(values: &[f64], bins: Option<usize>) -> Result<Histogram> {
    if values.is_empty() {
        return domain("density of states of an empty spectrum");
    }
    let bins = bins.unwrap_or_else(|| default_bins(values.len()));
    if bins < 10 {
        return domain(format!("need at least 10 bins, got {bins}"));
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = values.len() as f64;
    let density = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    Ok(Histogram { edges, counts, density })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::build_sector;
    use crate::ModelParams;

    fn dec(two_j: u32, p: f64, m: i32) -> SpectralDecomposition {
        let params = ModelParams::unit(two_j, p).unwrap();
        diagonalize(&build_sector(&params, m).unwrap()).unwrap()
    }

    #[test]
    fn p_one_j_one() {
        let d = dec(2, 1.0, 0);
        assert_eq!(d.route, Route::Triangular);
        let want = [0.0, -2.0, -2.0];
        for (l, w) in d.eigenvalues.iter().zip(want) {
            assert!((l - C64::new(w, 0.0)).norm() < 1e-14);
        }
        assert_eq!(eigenvector_distance(&d, 1).unwrap(), 0.0);
    }

    #[test]
    fn p_zero_j_one() {
        let d = dec(2, 0.0, 0);
        assert_eq!(d.route, Route::Symmetrized);
        let want = [0.0, -1.0, -3.0];
        for (l, w) in d.eigenvalues.iter().zip(want) {
            assert!((l - C64::new(w, 0.0)).norm() < 1e-13, "{l}");
        }
    }

    #[test]
    fn scalar_sector() {
        let params = ModelParams::unit(5, 0.4).unwrap();
        let op = build_sector(&params, 5).unwrap();
        let d = diagonalize(&op).unwrap();
        assert_eq!(d.eigenvalues, vec![op.diag[0]]);
        assert!((d.right_eigenvectors[0][0] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn routes_agree_at_moderate_size() {
        for p in [-0.6, 0.3, 0.9] {
            let params = ModelParams::new(12, 0.7, 1.0, 0.4, p).unwrap();
            for m in [-3, 0, 4] {
                let op = build_sector(&params, m).unwrap();
                let a = diagonalize_with(&op, Route::Symmetrized).unwrap();
                let b = diagonalize_with(&op, Route::General).unwrap();
                for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
                    assert!((x - y).norm() < 1e-9, "p={p} M={m}: {x} vs {y}");
                }
                assert!(a.max_relative_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn triangular_pairs_coalesce_exactly() {
        for p in [1.0, -1.0] {
            let d = dec(40, p, 0);
            let dist = d.distances();
            let zeros = dist.iter().filter(|&&x| x == 0.0).count();
            assert_eq!(zeros, 20);
            assert!(d.max_relative_residual() < 1e-12);
        }
    }

    #[test]
    fn distance_bounds() {
        let e0 = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let e1 = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert_eq!(pair_distance(&e0, &e0), 0.0);
        assert_eq!(pair_distance(&e0, &e1), 1.0);
    }

    #[test]
    fn d1_decreases_with_j() {
        let d20 = eigenvector_distance(&dec(40, 0.5, 0), 1).unwrap();
        let d40 = eigenvector_distance(&dec(80, 0.5, 0), 1).unwrap();
        assert!(d40 < d20);
    }

    #[test]
    fn d1_matches_high_precision_reference() {
        // 60-digit reference values
        for (two_j, p, want) in [
            (20, 0.5, 9.4516e-6),
            (30, 0.5, 1.1327e-9),
            (4, 0.8, 0.019504),
            (8, 0.8, 1.5331e-4),
            (12, 0.8, 1.8416e-7),
            (100, 0.2, 2.3278e-12),
        ] {
            let got = eigenvector_distance(&dec(two_j, p, 0), 1).unwrap();
            assert!((got / want - 1.0).abs() < 2e-3, "2j={two_j} p={p}: {got:e} vs {want:e}");
        }
    }

    #[test]
    fn scan_normal_spectrum_has_no_pairs() {
        let s = ep_scan(&dec(40, 0.0, 0), 1e-3).unwrap();
        assert!(s.paired_indices.is_empty());
        assert_eq!(s.precursor_index, Some(2));
    }

    #[test]
    fn scan_triangular_pairs_everything() {
        let s = ep_scan(&dec(20, 1.0, 0), 1e-12).unwrap();
        assert_eq!(s.paired_indices.len(), 10);
        assert!(s.precursor.is_none());
    }

    #[test]
    fn scan_precursor_near_critical_line() {
        let j = 160.0;
        let s = ep_scan(&dec(320, 0.5, 0), 1e-4).unwrap();
        let x = s.precursor.unwrap().re / j;
        assert!((x / -0.133975 - 1.0).abs() < 0.1, "{x}");
    }

    #[test]
    fn scan_rejects_bad_bound() {
        let d = dec(4, 0.5, 0);
        assert!(ep_scan(&d, 0.0).is_err());
        assert!(ep_scan(&d, 1.0).is_err());
    }

    #[test]
    fn fits() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let inv: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        let f = fit_power_law(&xs, &inv).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-14 && (f.r_squared - 1.0).abs() < 1e-14);
        let sq: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        let f = fit_power_law(&xs, &sq).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-13 && (f.prefactor - 3.0).abs() < 1e-12);
        let ex: Vec<f64> = xs.iter().map(|x| (-2.0 * x).exp()).collect();
        assert!((fit_exponential(&xs, &ex).unwrap().exponent + 2.0).abs() < 1e-13);
        let f = fit_exponential(&xs, &[5.0; 4]).unwrap();
        assert_eq!(f.exponent, 0.0);
        assert!(fit_power_law(&xs, &[1.0, -1.0, 1.0, 1.0]).is_err());
        assert!(fit_exponential(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn dos_flat_at_p_zero() {
        let h = density_of_states(&[dec(40, 0.0, 0)], Some(10)).unwrap();
        let mut sorted = h.counts.clone();
        sorted.sort();
        let median = sorted[sorted.len() / 2] as f64;
        let interior = h.counts[1..h.bins() - 1].iter().copied().max().unwrap() as f64;
        assert!(interior <= 3.0 * median);
    }

    #[test]
    fn dos_peak_near_critical_line() {
        let h = density_of_states(&[dec(640, 0.5, 0)], Some(104)).unwrap();
        assert!((h.peak() / -0.133975 - 1.0).abs() < 0.1, "{}", h.peak());
    }

    #[test]
    fn dos_trivial_and_errors() {
        let h = histogram(&[-0.3], None).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 1);
        assert!(histogram(&[], None).is_err());
        assert!(histogram(&[0.0, 1.0], Some(5)).is_err());
    }
}
