use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use dissipative_spin::ModelParams;

/// Time grid: `lin:start:stop:count` or `log:start:stop:count`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeGrid {
    Linear { start: f64, stop: f64, count: usize },
    Log { start: f64, stop: f64, count: usize },
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            TimeGrid::Linear { start, stop, count } => {
                if count == 1 {
                    return vec![start];
                }
                let step = (stop - start) / (count - 1) as f64;
                (0..count).map(|k| start + step * k as f64).collect()
            }
            TimeGrid::Log { start, stop, count } => {
                if count == 1 {
                    return vec![start];
                }
                let (a, b) = (start.ln(), stop.ln());
                let step = (b - a) / (count - 1) as f64;
                (0..count).map(|k| (a + step * k as f64).exp()).collect()
            }
        }
    }
}

impl FromStr for TimeGrid {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [kind, a, b, n] = parts.as_slice() else {
            bail!("time grid must look like lin:0:3:61 or log:0.01:100:50, got {s:?}");
        };
        let start: f64 = a.parse().with_context(|| format!("bad grid start {a:?}"))?;
        let stop: f64 = b.parse().with_context(|| format!("bad grid stop {b:?}"))?;
        let count: usize = n.parse().with_context(|| format!("bad grid count {n:?}"))?;
        if count == 0 || !start.is_finite() || !stop.is_finite() || stop < start || start < 0.0 {
            bail!("time grid needs 0 <= start <= stop and count >= 1, got {s:?}");
        }
        if count > 1 && stop == start {
            bail!("time grid with several points needs stop > start");
        }
        match *kind {
            "lin" => Ok(TimeGrid::Linear { start, stop, count }),
            "log" if start > 0.0 => Ok(TimeGrid::Log { start, stop, count }),
            "log" => bail!("log grid needs start > 0"),
            other => bail!("unknown grid kind {other:?} (lin or log)"),
        }
    }
}

/// Initial state for `evolve`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// `|0,0> + a|1,0> + b|1,0bar>`.
    HpDoublet {
        a: f64,
        b: f64,
    },
    /// `|m><m|`; `m` may be half-integer.
    Fock {
        m: f64,
    },
    Coherent {
        theta: f64,
        phi: f64,
    },
}

impl FromStr for InitialState {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split([':', ' ', ',']).filter(|t| !t.is_empty()).collect();
        let num = |t: &str| -> Result<f64> {
            if let Some((n, d)) = t.split_once('/') {
                let (n, d): (f64, f64) = (n.parse()?, d.parse()?);
                return Ok(n / d);
            }
            match t {
                "pi" => Ok(std::f64::consts::PI),
                "pi/2" => Ok(std::f64::consts::FRAC_PI_2),
                _ => t.parse().with_context(|| format!("bad number {t:?}")),
            }
        };
        match parts.as_slice() {
            ["hp-doublet"] => Ok(InitialState::HpDoublet { a: 0.0, b: 1.0 / 6.0 }),
            ["hp-doublet", a, b] => Ok(InitialState::HpDoublet { a: num(a)?, b: num(b)? }),
            ["fock", m] => Ok(InitialState::Fock { m: num(m)? }),
            ["coherent", t, p] => Ok(InitialState::Coherent {
                theta: parse_angle(t)?,
                phi: parse_angle(p)?,
            }),
            _ => bail!("initial state must be hp-doublet[:a:b], fock:m or coherent:theta:phi, got {s:?}"),
        }
    }
}

/// Radians, also accepting `pi`, `pi/2` and `k*pi`.
fn parse_angle(t: &str) -> Result<f64> {
    let pi = std::f64::consts::PI;
    if let Some(rest) = t.strip_suffix("pi") {
        let rest = rest.trim_end_matches('*');
        let k = if rest.is_empty() { 1.0 } else { rest.parse()? };
        return Ok(k * pi);
    }
    if let Some((a, b)) = t.split_once('/') {
        let num = if a == "pi" { pi } else { a.parse()? };
        let den: f64 = b.parse()?;
        return Ok(num / den);
    }
    t.parse().with_context(|| format!("bad angle {t:?}"))
}

/// Values a run may take from a config file or from flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub two_j: Option<Vec<u32>>,
    pub p: Option<Vec<f64>>,
    pub m: Option<Vec<i32>>,
    pub gamma_bound: Option<Vec<f64>>,
    pub times: Option<TimeGrid>,
    pub initial: Option<InitialState>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub h: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma0: Option<f64>,
    pub lambda_c: Option<f64>,
    pub bins: Option<usize>,
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| anyhow!("{key}: bad value {t:?}: {e}")))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse::<T>()
        .map_err(|e| anyhow!("{key}: bad value {v:?}: {e}"))
}

impl Overrides {
    /// `key = value` lines; `#` starts a comment. Keys match the long flag
    /// names.
    pub fn parse_file_text(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", n + 1))?;
            map.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        let mut o = Overrides::default();
        for (k, v) in &map {
            match k.as_str() {
                "two-j" => o.two_j = Some(parse_list(k, v)?),
                "p" => o.p = Some(parse_list(k, v)?),
                "m" => o.m = Some(parse_list(k, v)?),
                "gamma-bound" => o.gamma_bound = Some(parse_list(k, v)?),
                "times" => o.times = Some(v.parse()?),
                "initial" => o.initial = Some(v.parse()?),
                "out" => o.out = Some(PathBuf::from(v)),
                "jobs" => o.jobs = Some(parse_one(k, v)?),
                "h" => o.h = Some(parse_one(k, v)?),
                "gamma" => o.gamma = Some(parse_one(k, v)?),
                "gamma0" => o.gamma0 = Some(parse_one(k, v)?),
                "lambda-c" => o.lambda_c = Some(parse_one(k, v)?),
                "bins" => o.bins = Some(parse_one(k, v)?),
                other => bail!("unknown config key {other:?}"),
            }
        }
        Ok(o)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse_file_text(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Fields set in `flags` win over `self`.
    pub fn merged(self, flags: Overrides) -> Overrides {
        Overrides {
            two_j: flags.two_j.or(self.two_j),
            p: flags.p.or(self.p),
            m: flags.m.or(self.m),
            gamma_bound: flags.gamma_bound.or(self.gamma_bound),
            times: flags.times.or(self.times),
            initial: flags.initial.or(self.initial),
            out: flags.out.or(self.out),
            jobs: flags.jobs.or(self.jobs),
            h: flags.h.or(self.h),
            gamma: flags.gamma.or(self.gamma),
            gamma0: flags.gamma0.or(self.gamma0),
            lambda_c: flags.lambda_c.or(self.lambda_c),
            bins: flags.bins.or(self.bins),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Scaling,
    Evolve,
    Verify,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub two_j: Vec<u32>,
    pub p: Vec<f64>,
    /// Empty means every sector.
    pub m: Vec<i32>,
    pub gamma_bound: Vec<f64>,
    pub times: TimeGrid,
    pub initial: InitialState,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub h: f64,
    pub gamma: f64,
    pub gamma0: f64,
    /// `lambda_C / j` subtracted from precursors.
    pub lambda_c: f64,
    pub bins: Option<usize>,
}

impl RunConfig {
    pub fn resolve(command: Command, o: Overrides) -> Result<Self> {
        let (two_j, p, m, times, initial) = match command {
            Command::Spectrum => (
                vec![40],
                vec![0.0, 0.5, 0.99],
                vec![],
                "lin:0:3:61",
                InitialState::Fock { m: 0.0 },
            ),
            Command::Scaling => (
                vec![40, 80, 160, 320, 640],
                vec![0.5],
                vec![0],
                "lin:0:3:61",
                InitialState::Fock { m: 0.0 },
            ),
            Command::Evolve | Command::Verify => (
                vec![320],
                vec![0.5],
                vec![0],
                "lin:0:3:61",
                InitialState::HpDoublet { a: 0.0, b: 1.0 / 6.0 },
            ),
        };
        let cfg = RunConfig {
            command,
            two_j: o.two_j.unwrap_or(two_j),
            p: o.p.unwrap_or(p),
            m: o.m.unwrap_or(m),
            gamma_bound: o.gamma_bound.unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]),
            times: o.times.unwrap_or_else(|| times.parse().expect("default grid parses")),
            initial: o.initial.unwrap_or(initial),
            out: o.out.unwrap_or_else(|| PathBuf::from("out")),
            jobs: o.jobs,
            h: o.h.unwrap_or(1.0),
            gamma: o.gamma.unwrap_or(1.0),
            gamma0: o.gamma0.unwrap_or(0.0),
            lambda_c: o.lambda_c.unwrap_or(-0.133975),
            bins: o.bins,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.two_j.is_empty() {
            bail!("empty --two-j sweep");
        }
        if self.p.is_empty() {
            bail!("empty --p sweep");
        }
        if self.gamma_bound.is_empty() && self.command == Command::Scaling {
            bail!("empty --gamma-bound sweep");
        }
        if self.jobs == Some(0) {
            bail!("--jobs must be at least 1");
        }
        if let Some(b) = self.bins {
            if b < 10 {
                bail!("--bins must be at least 10");
            }
        }
        for g in &self.gamma_bound {
            if !(*g > 0.0 && *g < 1.0) {
                bail!("gamma bound {g} outside (0, 1)");
            }
        }
        for &tj in &self.two_j {
            for &p in &self.p {
                self.params(tj, p)?;
            }
            for &m in &self.m {
                if m.unsigned_abs() > tj {
                    bail!("sector M = {m} does not exist for 2j = {tj}");
                }
            }
        }
        Ok(())
    }

    pub fn params(&self, two_j: u32, p: f64) -> Result<ModelParams> {
        ModelParams::new(two_j, self.h, self.gamma, self.gamma0, p).map_err(|e| anyhow!("2j={two_j}, p={p}: {e}"))
    }

    /// Requested sectors of `2j`, or all of them.
    pub fn sectors(&self, two_j: u32) -> Vec<i32> {
        if self.m.is_empty() {
            let t = two_j as i32;
            (-t..=t).collect()
        } else {
            self.m.clone()
        }
    }
}
