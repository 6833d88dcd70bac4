use std::path::PathBuf;

use anyhow::{anyhow, Result};
use dissipative_spin::closed_forms::{jx_over_j, jz_over_j};
use dissipative_spin::dynamics::{
    coherent_state, entropy, expectation, propagate, slowdown_experiment, Observable, ObservableTrace,
    VectorizedDensityMatrix,
};
use dissipative_spin::liouvillian::build_sector;
use dissipative_spin::spectra::{
    diagonalize, ep_scan, fit_exponential, fit_power_law, histogram, FitResult, SpectralDecomposition,
};
use dissipative_spin::{verify, ModelParams};
use rayon::prelude::*;

use crate::config::{InitialState, RunConfig};
use crate::output::{ensure_dir, fmt_f64, provenance, Series, Svg, Table, PALETTE, PROVENANCE};

/// d_1 scans stop once the distance reaches the double-precision floor.
pub const D1_FLOOR: f64 = 1e-12;

/// Largest 2j for which `evolve` also propagates the rotor limit numerically.
pub const NUMERIC_CHECK_MAX_TWO_J: u32 = 120;

fn header(extra: &[&str]) -> Vec<String> {
    PROVENANCE.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn grid(cfg: &RunConfig) -> Vec<(u32, f64)> {
    cfg.p
        .iter()
        .flat_map(|&p| cfg.two_j.iter().map(move |&tj| (tj, p)))
        .collect()
}

fn p_tag(p: f64) -> String {
    format!("{p}").replace('-', "m").replace('.', "p")
}

struct SectorSpectrum {
    params: ModelParams,
    m: i32,
    dec: SpectralDecomposition,
    eigenvalues: Vec<dissipative_spin::C64>,
    distances: Vec<f64>,
}

fn spectra_for(cfg: &RunConfig) -> Result<Vec<SectorSpectrum>> {
    let points: Vec<(ModelParams, i32)> = grid(cfg)
        .into_iter()
        .flat_map(|(tj, p)| cfg.sectors(tj).into_iter().map(move |m| (tj, p, m)))
        .map(|(tj, p, m)| Ok((cfg.params(tj, p)?, m)))
        .collect::<Result<_>>()?;
    points
        .into_par_iter()
        .map(|(params, m)| {
            let dec = diagonalize(&build_sector(&params, m)?)?;
            Ok(SectorSpectrum {
                params,
                m,
                distances: dec.distances(),
                eigenvalues: dec.eigenvalues.clone(),
                dec,
            })
        })
        .collect::<dissipative_spin::Result<Vec<_>>>()
        .map_err(|e| anyhow!(e))
}

/// Spectra of every requested `(2j, p, M)` and one scatter plot per `(2j, p)`.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&cfg.out)?;
    let spectra = spectra_for(cfg)?;
    let mut table = Table::new(header(&["N", "re_lambda", "im_lambda", "d_N"]));
    for s in &spectra {
        for (n, z) in s.eigenvalues.iter().enumerate() {
            let mut row = provenance(&s.params, &s.m.to_string());
            row.extend([
                n.to_string(),
                fmt_f64(z.re),
                fmt_f64(z.im),
                opt(s.distances.get(n).copied()),
            ]);
            table.push(row);
        }
    }
    let csv = cfg.out.join("spectra.csv");
    table.write(&csv)?;
    let mut written = vec![csv];

    let threshold = cfg.gamma_bound.first().copied().unwrap_or(1e-3);
    for (tj, p) in grid(cfg) {
        let mut paired = Vec::new();
        let mut single = Vec::new();
        for s in spectra.iter().filter(|s| s.params.two_j() == tj && s.params.p == p) {
            let j = s.params.j();
            for (n, z) in s.eigenvalues.iter().enumerate() {
                let before = n.checked_sub(1).and_then(|k| s.distances.get(k)).copied();
                let after = s.distances.get(n).copied();
                let in_pair = [before, after].iter().flatten().any(|&d| d < threshold);
                let pt = (z.re / j, z.im);
                if in_pair {
                    paired.push(pt);
                } else {
                    single.push(pt);
                }
            }
        }
        let svg = Svg {
            title: format!("2j = {tj}, p = {p}"),
            x_label: "Re(lambda)/j".into(),
            y_label: "Im(lambda)".into(),
            log_x: false,
            log_y: false,
        };
        let series = [
            Series {
                name: "unpaired".into(),
                color: PALETTE[0],
                points: single,
                line: false,
            },
            Series {
                name: format!("d_N < {threshold}"),
                color: PALETTE[1],
                points: paired,
                line: false,
            },
        ];
        written.push(svg.scatter(&series, &cfg.out.join(format!("spectrum_2j{tj}_p{}.svg", p_tag(p))))?);
    }
    Ok(written)
}

fn fit_row(
    series: &str,
    kind: &str,
    p: f64,
    m: i32,
    gamma: Option<f64>,
    fit: &dissipative_spin::Result<FitResult>,
) -> Vec<String> {
    let mut row = vec![
        series.to_string(),
        kind.to_string(),
        fmt_f64(p),
        m.to_string(),
        opt(gamma),
    ];
    match fit {
        Ok(f) => row.extend([
            fmt_f64(f.exponent),
            fmt_f64(f.prefactor),
            fmt_f64(f.r_squared),
            f.n_points.to_string(),
            "ok".into(),
        ]),
        Err(e) => row.extend([
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            format!("error: {e}"),
        ]),
    }
    row
}

fn fit_table() -> Table {
    Table::new([
        "series",
        "kind",
        "p",
        "M",
        "gamma_bound",
        "exponent",
        "prefactor",
        "r_squared",
        "n_points",
        "status",
    ])
}

/// Doublet eigenvalues, `d_1`, precursors and their fits over the `2j` sweep.
pub fn cmd_scaling(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&cfg.out)?;
    let spectra = spectra_for(cfg)?;
    let dos = {
        let mut t = Table::new(header(&["bins", "peak_re_lambda_over_j"]));
        for s in &spectra {
            let hist = histogram(
                &s.eigenvalues.iter().map(|z| z.re / s.params.j()).collect::<Vec<_>>(),
                cfg.bins,
            );
            if let Ok(h) = hist {
                let mut row = provenance(&s.params, &s.m.to_string());
                row.extend([h.bins().to_string(), fmt_f64(h.peak())]);
                t.push(row);
            }
        }
        t
    };

    let mut doublets = Table::new(header(&["re_lambda_1", "im_lambda_1", "re_lambda_2", "im_lambda_2"]));
    let mut d1 = Table::new(header(&["d_1"]));
    let mut prec = Table::new(header(&[
        "gamma_bound",
        "precursor_index",
        "re_precursor",
        "im_precursor",
        "lambda_c",
        "re_precursor_minus_lambda_c",
    ]));
    let mut fits = fit_table();

    let mut d1_series: Vec<(f64, i32, Vec<(f64, f64)>)> = Vec::new();
    let mut gap_series: Vec<(f64, i32, f64, Vec<(f64, f64)>)> = Vec::new();

    for &p in &cfg.p {
        for m in cfg.m.iter().copied().chain(cfg.m.is_empty().then_some(0)) {
            let rows: Vec<&SectorSpectrum> = spectra.iter().filter(|s| s.params.p == p && s.m == m).collect();
            let mut d1_pts = Vec::new();
            let mut floor_hit = false;
            for s in &rows {
                let j = s.params.j();
                let ev = &s.eigenvalues;
                let mut row = provenance(&s.params, &m.to_string());
                row.extend([
                    opt(ev.get(1).map(|z| z.re)),
                    opt(ev.get(1).map(|z| z.im)),
                    opt(ev.get(2).map(|z| z.re)),
                    opt(ev.get(2).map(|z| z.im)),
                ]);
                doublets.push(row);
                if let Some(&d) = s.distances.get(1) {
                    let mut row = provenance(&s.params, &m.to_string());
                    row.push(fmt_f64(d));
                    d1.push(row);
                    floor_hit |= d < D1_FLOOR;
                    if !floor_hit {
                        d1_pts.push((j, d));
                    }
                }
            }
            let (xs, ys): (Vec<f64>, Vec<f64>) = d1_pts.iter().copied().unzip();
            fits.push(fit_row("d_1", "exponential", p, m, None, &fit_exponential(&xs, &ys)));
            d1_series.push((p, m, d1_pts));

            for &g in &cfg.gamma_bound {
                let mut pts = Vec::new();
                for s in &rows {
                    let j = s.params.j();
                    let lambda_c = cfg.lambda_c * j;
                    let scan = ep_scan(&s.dec, g)?;
                    let gap = scan.precursor.map(|z| z.re - lambda_c);
                    let mut row = provenance(&s.params, &m.to_string());
                    row.extend([
                        fmt_f64(g),
                        scan.precursor_index.map(|k| k.to_string()).unwrap_or_default(),
                        opt(scan.precursor.map(|z| z.re)),
                        opt(scan.precursor.map(|z| z.im)),
                        fmt_f64(lambda_c),
                        opt(gap),
                    ]);
                    prec.push(row);
                    if let Some(gap) = gap {
                        pts.push((j, gap));
                    }
                }
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
                fits.push(fit_row(
                    "precursor_gap",
                    "power_law",
                    p,
                    m,
                    Some(g),
                    &fit_power_law(&xs, &ys),
                ));
                gap_series.push((p, m, g, pts));
            }
        }
    }

    let mut written = Vec::new();
    for (name, t) in [
        ("doublets.csv", &doublets),
        ("d1.csv", &d1),
        ("precursor.csv", &prec),
        ("dos.csv", &dos),
        ("fits.csv", &fits),
    ] {
        let path = cfg.out.join(name);
        t.write(&path)?;
        written.push(path);
    }

    let d1_plot: Vec<Series> = d1_series
        .into_iter()
        .enumerate()
        .map(|(i, (p, m, pts))| Series {
            name: format!("p={p}, M={m}"),
            color: PALETTE[i % PALETTE.len()],
            points: pts,
            line: true,
        })
        .collect();
    let svg = Svg {
        title: "eigenvector distance d_1".into(),
        x_label: "j".into(),
        y_label: "d_1".into(),
        log_x: false,
        log_y: true,
    };
    written.push(svg.scatter(&d1_plot, &cfg.out.join("d1.svg"))?);
    let gap_plot: Vec<Series> = gap_series
        .into_iter()
        .enumerate()
        .map(|(i, (p, m, g, pts))| Series {
            name: format!("p={p}, M={m}, gamma={g}"),
            color: PALETTE[i % PALETTE.len()],
            points: pts.into_iter().filter(|&(_, y)| y > 0.0).collect(),
            line: true,
        })
        .collect();
    let svg = Svg {
        title: "precursor minus lambda_C".into(),
        x_label: "j".into(),
        y_label: "Re(lambda_*) - lambda_C".into(),
        log_x: true,
        log_y: true,
    };
    written.push(svg.scatter(&gap_plot, &cfg.out.join("precursor.svg"))?);
    Ok(written)
}

fn initial_state(params: &ModelParams, init: &InitialState) -> Result<VectorizedDensityMatrix> {
    Ok(match *init {
        InitialState::Fock { m } => {
            let two_m = (2.0 * m).round();
            if (two_m - 2.0 * m).abs() > 1e-9 {
                return Err(anyhow!("fock m = {m} is not a half-integer"));
            }
            VectorizedDensityMatrix::fock(params.two_j(), two_m as i32)?
        }
        InitialState::Coherent { theta, phi } => coherent_state(params.two_j(), theta, phi)?,
        InitialState::HpDoublet { .. } => unreachable!("handled by the slowdown path"),
    })
}

struct EvolveOut {
    params: ModelParams,
    traces: Vec<(ObservableTrace, &'static str)>,
}

fn evolve_one(cfg: &RunConfig, params: ModelParams, times: &[f64]) -> Result<EvolveOut> {
    let j = params.j();
    let mut traces = Vec::new();
    match cfg.initial {
        InitialState::HpDoublet { a, b } => {
            let (num, theo) = slowdown_experiment(&params, a, b, times)?;
            traces.push((num, "0"));
            traces.push((theo, "0"));
        }
        ref init => {
            let rho0 = initial_state(&params, init)?;
            let rotor = params.p == 0.0;
            if rotor {
                let jx0 = expectation(&rho0, Observable::Jx)? / j;
                let jy0 = expectation(&rho0, Observable::Jy)? / j;
                let jz0 = expectation(&rho0, Observable::Jz)? / j;
                let x = times.iter().map(|&t| jx_over_j(&params, jx0, jy0, t)).collect();
                let z = times.iter().map(|&t| jz_over_j(&params, jz0, t)).collect();
                traces.push((
                    ObservableTrace::new(times.to_vec(), x, "Jx/j:closed", params.two_j(), params.p)?,
                    "-1;1",
                ));
                traces.push((
                    ObservableTrace::new(times.to_vec(), z, "Jz/j:closed", params.two_j(), params.p)?,
                    "0",
                ));
            }
            if !rotor || params.two_j() <= NUMERIC_CHECK_MAX_TWO_J {
                let states = propagate(&params, &rho0, times)?;
                let mut per = |f: &dyn Fn(&VectorizedDensityMatrix) -> dissipative_spin::Result<f64>,
                               label: &str,
                               m: &'static str|
                 -> Result<()> {
                    let v = states.iter().map(f).collect::<dissipative_spin::Result<Vec<_>>>()?;
                    traces.push((
                        ObservableTrace::new(times.to_vec(), v, label, params.two_j(), params.p)?,
                        m,
                    ));
                    Ok(())
                };
                per(&|s| Ok(expectation(s, Observable::Jx)? / j), "Jx/j:numeric", "-1;1")?;
                per(&|s| Ok(expectation(s, Observable::Jy)? / j), "Jy/j:numeric", "-1;1")?;
                per(&|s| Ok(expectation(s, Observable::Jz)? / j), "Jz/j:numeric", "0")?;
                per(&entropy, "S:numeric", "all")?;
            }
        }
    }
    Ok(EvolveOut { params, traces })
}

/// Time traces for each `(2j, p)`; with the HP initial state also the
/// relative deviation between numerics and theory and its power-law fit in `j`.
pub fn cmd_evolve(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&cfg.out)?;
    let times = cfg.times.points();
    let runs: Vec<EvolveOut> = grid(cfg)
        .into_par_iter()
        .map(|(tj, p)| evolve_one(cfg, cfg.params(tj, p)?, &times))
        .collect::<Result<_>>()?;

    let mut traces = Table::new([
        "t",
        "value",
        "two_j",
        "p",
        "observable_label",
        "gamma",
        "gamma0",
        "h",
        "M",
    ]);
    for run in &runs {
        for (tr, m) in &run.traces {
            let prov = provenance(&run.params, m);
            for (t, v) in tr.times.iter().zip(&tr.values) {
                traces.push(vec![
                    fmt_f64(*t),
                    fmt_f64(*v),
                    prov[0].clone(),
                    prov[1].clone(),
                    tr.label.clone(),
                    prov[2].clone(),
                    prov[3].clone(),
                    prov[4].clone(),
                    prov[5].clone(),
                ]);
            }
        }
    }
    let mut written = Vec::new();
    let path = cfg.out.join("traces.csv");
    traces.write(&path)?;
    written.push(path);

    if matches!(cfg.initial, InitialState::HpDoublet { .. }) {
        let mut dev = Table::new(header(&["t", "delta_numeric", "delta_theory", "relative_deviation"]));
        let mut fits = fit_table();
        for &p in &cfg.p {
            let mut by_time: Vec<Vec<(f64, f64)>> = vec![Vec::new(); times.len()];
            for run in runs.iter().filter(|r| r.params.p == p) {
                let (num, theo) = (&run.traces[0].0, &run.traces[1].0);
                for (k, &t) in times.iter().enumerate() {
                    let rel = (num.values[k] - theo.values[k]) / theo.values[k];
                    let mut row = provenance(&run.params, "0");
                    row.extend([
                        fmt_f64(t),
                        fmt_f64(num.values[k]),
                        fmt_f64(theo.values[k]),
                        fmt_f64(rel),
                    ]);
                    dev.push(row);
                    by_time[k].push((run.params.j(), rel));
                }
            }
            for (k, &t) in times.iter().enumerate().filter(|(_, &t)| t > 0.0) {
                let (xs, ys): (Vec<f64>, Vec<f64>) = by_time[k].iter().copied().unzip();
                fits.push(fit_row(
                    &format!("deviation(t={})", fmt_f64(t)),
                    "power_law",
                    p,
                    0,
                    None,
                    &fit_power_law(&xs, &ys),
                ));
            }
        }
        for (name, t) in [("deviation.csv", &dev), ("fits.csv", &fits)] {
            let path = cfg.out.join(name);
            t.write(&path)?;
            written.push(path);
        }
    }

    let mut series = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        for (k, (tr, _)) in run.traces.iter().enumerate() {
            if tr.label.starts_with('S') {
                continue;
            }
            series.push(Series {
                name: format!("2j={} {}", run.params.two_j(), tr.label),
                color: PALETTE[(i * 3 + k) % PALETTE.len()],
                points: tr.times.iter().copied().zip(tr.values.iter().copied()).collect(),
                line: true,
            });
        }
    }
    let svg = Svg {
        title: "time evolution".into(),
        x_label: "t".into(),
        y_label: "value".into(),
        log_x: false,
        log_y: false,
    };
    written.push(svg.scatter(&series, &cfg.out.join("traces.svg"))?);
    Ok(written)
}

/// Runs the property suite; returns the report lines and whether all passed.
pub fn cmd_verify() -> (Vec<String>, bool) {
    let report = verify::run_all();
    let ok = report.iter().all(|c| c.passed);
    (report.iter().map(|c| c.line()).collect(), ok)
}
