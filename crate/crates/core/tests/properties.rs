use dissipative_spin::closed_forms::{clebsch_gordan, thermal_ss};
use dissipative_spin::dynamics::{coherent_state, propagate, VectorizedDensityMatrix};
use dissipative_spin::liouvillian::build_sector;
use dissipative_spin::spectra::{diagonalize, fit_exponential, fit_power_law};
use dissipative_spin::verify::multiset_distance;
use dissipative_spin::{ModelParams, C64};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (1u32..=24, -2.0..2.0f64, 0.2..3.0f64, 0.0..1.5f64, -1.0..=1.0f64)
        .prop_map(|(tj, h, g, g0, p)| ModelParams::new(tj, h, g, g0, p).unwrap())
}

/// Coherent state blended with the maximally mixed one.
fn state(two_j: u32, theta: f64, phi: f64, w: f64) -> VectorizedDensityMatrix {
    let mut rho = coherent_state(two_j, theta, phi).unwrap();
    rho.scale(w);
    let n = f64::from(two_j + 1);
    for z in rho.sector_mut(0).unwrap() {
        *z += (1.0 - w) / n;
    }
    rho
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugate_sectors_have_conjugate_spectra(params in params(), pick in 0.0..1.0f64) {
        let m = 1 + (pick * f64::from(params.two_j())) as i32 % params.two_j() as i32;
        let plus = diagonalize(&build_sector(&params, m).unwrap()).unwrap();
        let minus = diagonalize(&build_sector(&params, -m).unwrap()).unwrap();
        let conj: Vec<C64> = minus.eigenvalues.iter().map(|z| z.conj()).collect();
        prop_assert!(multiset_distance(&plus.eigenvalues, &conj) <= 1e-9 * plus.operator_norm.max(1.0));
    }

    #[test]
    fn spectra_are_dissipative(params in params(), pick in 0.0..1.0f64) {
        let tj = params.two_j() as i32;
        let m = ((pick * f64::from(2 * tj + 1)) as i32).min(2 * tj) - tj;
        let dec = diagonalize(&build_sector(&params, m).unwrap()).unwrap();
        for z in &dec.eigenvalues {
            prop_assert!(z.re <= 1e-10, "M={} lambda={}", m, z);
        }
    }

    #[test]
    fn propagation_preserves_trace_and_hermiticity(
        params in params(),
        theta in 0.0..3.2f64,
        phi in -3.2..3.2f64,
        w in 0.0..1.0f64,
        t in 0.0..10.0f64,
    ) {
        let rho = state(params.two_j(), theta, phi, w);
        let out = &propagate(&params, &rho, &[t]).unwrap()[0];
        prop_assert!((out.trace() - 1.0).norm() <= 1e-10);
        prop_assert!(out.hermiticity_error() <= 1e-10);
    }

    #[test]
    fn propagation_is_a_semigroup(
        params in params(),
        theta in 0.0..3.2f64,
        t1 in 0.0..4.0f64,
        t2 in 0.0..4.0f64,
    ) {
        let rho = state(params.two_j(), theta, 0.4, 0.7);
        let mid = &propagate(&params, &rho, &[t1]).unwrap()[0];
        let a = &propagate(&params, mid, &[t2]).unwrap()[0];
        let b = &propagate(&params, &rho, &[t1 + t2]).unwrap()[0];
        for m in params.sectors() {
            for (x, y) in a.sector(m).unwrap().iter().zip(b.sector(m).unwrap()) {
                prop_assert!((x - y).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn geometric_state_is_stationary(params in params()) {
        prop_assume!(params.p.abs() < 1.0);
        let ss = thermal_ss(&params).unwrap();
        let v: Vec<C64> = ss.populations.iter().map(|&x| C64::new(x, 0.0)).collect();
        let op = build_sector(&params, 0).unwrap();
        let r = op.apply(&v).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(r <= 1e-12 * op.frobenius_norm());
    }

    #[test]
    fn clebsch_gordan_orthogonality(t1 in 1i32..=16, t2 in 1i32..=16, pick in 0.0..1.0f64) {
        let kmin = (t1 - t2).abs();
        let kmax = t1 + t2;
        let tmk = -kmax + 2 * ((pick * f64::from(kmax + 1)) as i32).min(kmax);
        let ks: Vec<i32> = (kmin..=kmax).step_by(2).filter(|k| *k >= tmk.abs()).collect();
        for &ka in &ks {
            for &kb in &ks {
                let dot: f64 = (-t1..=t1)
                    .step_by(2)
                    .map(|m1| clebsch_gordan(t1, m1, t2, tmk - m1, ka, tmk) * clebsch_gordan(t1, m1, t2, tmk - m1, kb, tmk))
                    .sum();
                let want = if ka == kb { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() <= 1e-12, "{} {} {} {}: {}", t1, t2, ka, kb, dot);
            }
        }
    }

    #[test]
    fn clebsch_gordan_exchange_symmetry(t1 in 1i32..=20, t2 in 1i32..=20, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let m1 = -t1 + 2 * ((a * f64::from(t1 + 1)) as i32).min(t1);
        let m2 = -t2 + 2 * ((b * f64::from(t2 + 1)) as i32).min(t2);
        for k in ((t1 - t2).abs()..=t1 + t2).step_by(2) {
            let sign = if ((t1 + t2 - k) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let x = clebsch_gordan(t1, m1, t2, m2, k, m1 + m2);
            let y = clebsch_gordan(t2, m2, t1, m1, k, m1 + m2);
            prop_assert!((x - sign * y).abs() <= 1e-13);
        }
    }

    #[test]
    fn fits_recover_exact_laws(e in -3.0..3.0f64, c in 0.1..10.0f64) {
        let xs = [2.0, 5.0, 9.0, 20.0, 40.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| c * x.powf(e)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        prop_assert!((f.exponent - e).abs() < 1e-10 && (f.prefactor / c - 1.0).abs() < 1e-10);
        let ys: Vec<f64> = xs.iter().map(|x| c * (e * x / 10.0).exp()).collect();
        let f = fit_exponential(&xs, &ys).unwrap();
        prop_assert!((f.exponent - e / 10.0).abs() < 1e-10 && f.r_squared > 1.0 - 1e-12);
    }
}
