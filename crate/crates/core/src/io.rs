//! Snapshot files, run configuration, and text output (reports, figure
//! data, amplitude series).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::bilinear::{EpsilonReport, Lattice};
use crate::evolve::{EdgeTreatment, DEFAULT_STABILITY_FACTOR};
use crate::exact::{DromionParams, ExactSolution, LineSoliton};
use crate::grid::{FieldSnapshot, Grid, GridError};
use crate::model::{NonisoCoefficients, ParamError, SpectralMode};
use crate::residual::{RefinementStudy, DEFAULT_EDGE_FLOOR};

pub const MAGIC: &[u8; 5] = b"NIDS1";
pub const FORMAT_VERSION: u32 = 1;
const FIELD_TAGS: &[u8; 3] = b"qUV";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a snapshot file (bad magic)")]
    Magic,
    #[error("unsupported snapshot format version {0}")]
    Version(u32),
    #[error("snapshot payload has {got} bytes, header declares {expected}")]
    Length { expected: usize, got: usize },
    #[error("snapshot field list {0:?} is not a permutation of q, U, V")]
    Fields(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Serializes a snapshot: magic, version, `t`, `L`, `N`, field tags, then
/// little-endian `f64` payload, row-major with η fastest; `q` as
/// interleaved `(re, im)` pairs.
pub fn encode_snapshot(s: &FieldSnapshot) -> Vec<u8> {
    let n = s.grid.nodes();
    let mut out = Vec::with_capacity(40 + 32 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&s.t.to_le_bytes());
    out.extend_from_slice(&s.grid.half_width().to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.push(FIELD_TAGS.len() as u8);
    out.extend_from_slice(FIELD_TAGS);
    for z in s.q.iter() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    for a in [&s.u, &s.v] {
        for x in a.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, k: usize) -> Result<&[u8], SnapshotError> {
        if self.pos + k > self.buf.len() {
            return Err(SnapshotError::Length {
                expected: self.pos + k,
                got: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_snapshot(buf: &[u8]) -> Result<FieldSnapshot, SnapshotError> {
    let mut c = Cursor { buf, pos: 0 };
    if buf.len() < MAGIC.len() || c.take(MAGIC.len())? != MAGIC {
        return Err(SnapshotError::Magic);
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(SnapshotError::Version(version));
    }
    let t = c.f64()?;
    let half_width = c.f64()?;
    let n = u64::from_le_bytes(c.take(8)?.try_into().expect("8 bytes")) as usize;
    let nf = c.take(1)?[0] as usize;
    let tags = c.take(nf)?.to_vec();
    let mut sorted = tags.clone();
    sorted.sort_unstable();
    let mut want = FIELD_TAGS.to_vec();
    want.sort_unstable();
    if sorted != want {
        return Err(SnapshotError::Fields(String::from_utf8_lossy(&tags).into_owned()));
    }
    let grid = Grid::new(half_width, n)?;
    let expected = c.pos + 32 * n * n;
    if buf.len() != expected {
        return Err(SnapshotError::Length {
            expected,
            got: buf.len(),
        });
    }
    let mut q = Array2::zeros((n, n));
    let mut u = Array2::zeros((n, n));
    let mut v = Array2::zeros((n, n));
    for &tag in &tags {
        match tag {
            b'q' => {
                for z in q.iter_mut() {
                    let re = c.f64()?;
                    *z = Complex64::new(re, c.f64()?);
                }
            }
            b'U' => u.iter_mut().try_for_each(|x| c.f64().map(|v| *x = v))?,
            _ => v.iter_mut().try_for_each(|x| c.f64().map(|val| *x = val))?,
        }
    }
    Ok(FieldSnapshot::new(grid, t, q, u, v)?)
}

pub fn write_snapshot(path: &Path, s: &FieldSnapshot) -> Result<(), SnapshotError> {
    let io = |source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&encode_snapshot(s)).map_err(io)
}

pub fn read_snapshot(path: &Path) -> Result<FieldSnapshot, SnapshotError> {
    let io = |source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut buf = Vec::new();
    std::fs::File::open(path).map_err(io)?.read_to_end(&mut buf).map_err(io)?;
    decode_snapshot(&buf)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("key `{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("key `{key}` is required when {reason}")]
    Missing { key: &'static str, reason: &'static str },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    Dromion,
    Soliton,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    ClosedForm,
    Zero,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Exact,
    File,
}

/// Textual run configuration, one `key = value` per line, `#` comments.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solution: SolutionKind,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub k_re0: f64,
    pub k_im0: f64,
    pub l_re0: f64,
    pub l_im0: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub a0: f64,
    pub a1: f64,
    /// Growth rate of `l` replacing ω₁ (negative control only).
    pub l_re_rate: Option<f64>,
    pub half_width: f64,
    pub nodes: usize,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub times: Vec<f64>,
    pub stability_factor: f64,
    pub boundary: BoundaryKind,
    pub initial: InitialKind,
    pub initial_file: Option<PathBuf>,
    pub edge_floor: f64,
    pub edge: EdgeTreatment,
    pub verify_time: f64,
    pub lattice_half_width: f64,
    pub lattice_nodes: usize,
    pub lattice_times: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solution: SolutionKind::Dromion,
            alpha: 1.0,
            beta: 1.0,
            gamma: 2.0,
            delta: 2.0,
            k_re0: 0.5,
            k_im0: 0.0,
            l_re0: 0.5,
            l_im0: 0.0,
            omega0: 0.0,
            omega1: 1.0,
            a0: 0.0,
            a1: 0.0,
            l_re_rate: None,
            half_width: 10.0,
            nodes: 257,
            dt: 1e-4,
            t_start: -0.5,
            t_end: 0.2,
            times: vec![-0.5, 0.0, 0.2],
            stability_factor: DEFAULT_STABILITY_FACTOR,
            boundary: BoundaryKind::ClosedForm,
            initial: InitialKind::Exact,
            initial_file: None,
            edge_floor: DEFAULT_EDGE_FLOOR,
            edge: EdgeTreatment::Dirichlet,
            verify_time: 0.0,
            lattice_half_width: 2.0,
            lattice_nodes: 5,
            lattice_times: vec![-0.5, 0.0, 0.2],
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "solution",
    "alpha",
    "beta",
    "gamma",
    "delta",
    "k_re0",
    "k_im0",
    "l_re0",
    "l_im0",
    "omega0",
    "omega1",
    "a0",
    "a1",
    "l_re_rate",
    "half_width",
    "nodes",
    "dt",
    "t_start",
    "t_end",
    "times",
    "stability_factor",
    "boundary",
    "initial",
    "initial_file",
    "edge_floor",
    "edge",
    "verify_time",
    "lattice_half_width",
    "lattice_nodes",
    "lattice_times",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        value: v.to_string(),
    })
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut seen = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let key = key.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if seen.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
        }
        let mut cfg = Self::default();
        for key in CONFIG_KEYS {
            match seen.get(*key) {
                Some((_, v)) => cfg.set(key, v)?,
                None => log::info!("config key `{key}` not given, using default"),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self::parse(&text)?)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::Value {
            key: key.to_string(),
            value: v.to_string(),
        };
        match key {
            "solution" => {
                self.solution = match v {
                    "dromion" => SolutionKind::Dromion,
                    "soliton" => SolutionKind::Soliton,
                    "zero" => SolutionKind::Zero,
                    _ => return Err(bad()),
                }
            }
            "alpha" => self.alpha = parse_num(key, v)?,
            "beta" => self.beta = parse_num(key, v)?,
            "gamma" => self.gamma = parse_num(key, v)?,
            "delta" => self.delta = parse_num(key, v)?,
            "k_re0" => self.k_re0 = parse_num(key, v)?,
            "k_im0" => self.k_im0 = parse_num(key, v)?,
            "l_re0" => self.l_re0 = parse_num(key, v)?,
            "l_im0" => self.l_im0 = parse_num(key, v)?,
            "omega0" => self.omega0 = parse_num(key, v)?,
            "omega1" => self.omega1 = parse_num(key, v)?,
            "a0" => self.a0 = parse_num(key, v)?,
            "a1" => self.a1 = parse_num(key, v)?,
            "l_re_rate" => self.l_re_rate = Some(parse_num(key, v)?),
            "half_width" => self.half_width = parse_num(key, v)?,
            "nodes" => self.nodes = parse_num(key, v)?,
            "dt" => self.dt = parse_num(key, v)?,
            "t_start" => self.t_start = parse_num(key, v)?,
            "t_end" => self.t_end = parse_num(key, v)?,
            "times" => self.times = parse_list(key, v)?,
            "stability_factor" => self.stability_factor = parse_num(key, v)?,
            "boundary" => {
                self.boundary = match v {
                    "closed_form" => BoundaryKind::ClosedForm,
                    "zero" => BoundaryKind::Zero,
                    "file" => BoundaryKind::File,
                    _ => return Err(bad()),
                }
            }
            "initial" => {
                self.initial = match v {
                    "exact" => InitialKind::Exact,
                    "file" => InitialKind::File,
                    _ => return Err(bad()),
                }
            }
            "initial_file" => self.initial_file = Some(PathBuf::from(v)),
            "edge_floor" => self.edge_floor = parse_num(key, v)?,
            "edge" => {
                self.edge = match v {
                    "dirichlet" => EdgeTreatment::Dirichlet,
                    "one_sided" => EdgeTreatment::OneSided,
                    _ => return Err(bad()),
                }
            }
            "verify_time" => self.verify_time = parse_num(key, v)?,
            "lattice_half_width" => self.lattice_half_width = parse_num(key, v)?,
            "lattice_nodes" => self.lattice_nodes = parse_num(key, v)?,
            "lattice_times" => self.lattice_times = parse_list(key, v)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn coeffs(&self) -> Result<NonisoCoefficients, ConfigError> {
        Ok(NonisoCoefficients::new(self.omega0, self.omega1, self.a1, self.a0)?)
    }

    pub fn mode(&self) -> Result<SpectralMode, ConfigError> {
        let m = SpectralMode::new(self.k_re0, self.k_im0, self.l_re0, self.l_im0, self.coeffs()?)?;
        Ok(match self.l_re_rate {
            Some(r) => m.with_detuned_l_rate(r),
            None => m,
        })
    }

    pub fn solution(&self) -> Result<ExactSolution, ConfigError> {
        Ok(match self.solution {
            SolutionKind::Zero => ExactSolution::Zero(self.coeffs()?),
            SolutionKind::Soliton => ExactSolution::LineSoliton(LineSoliton::new(self.mode()?)),
            SolutionKind::Dromion => ExactSolution::Dromion(DromionParams::new(
                self.alpha,
                self.beta,
                self.gamma,
                self.delta,
                self.mode()?,
            )?),
        })
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Ok(Grid::new(self.half_width, self.nodes)?)
    }

    pub fn lattice(&self) -> Lattice {
        Lattice {
            half_width: self.lattice_half_width,
            nodes: self.lattice_nodes,
            times: self.lattice_times.clone(),
        }
    }
}

/// Full-precision float text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Human-readable table followed by a `key = value` block.
pub fn format_residual_study(check: &str, study: &RefinementStudy, tolerance: f64, min_order: f64, pass: bool) -> String {
    let mut s = String::new();
    let fin = study.finest();
    let _ = writeln!(s, "check: {check}");
    let _ = writeln!(s, "stencil order: {}", fin.stencil_order);
    for r in &study.reports {
        let _ = writeln!(
            s,
            "grid {}x{} on [-{}, {}]^2, h = {}",
            r.grid.nodes(),
            r.grid.nodes(),
            r.grid.half_width(),
            r.grid.half_width(),
            fmt_f64(r.grid.spacing())
        );
        for (name, n) in r.equations() {
            let _ = writeln!(
                s,
                "  {name:<16} max {}  l2 {}  at ({}, {})",
                fmt_f64(n.max),
                fmt_f64(n.l2),
                n.worst.0,
                n.worst.1
            );
        }
        for (name, n) in &r.extra {
            let _ = writeln!(s, "  {name:<16} max {}  l2 {}  (not gated)", fmt_f64(n.max), fmt_f64(n.l2));
        }
    }
    let _ = writeln!(s, "[result]");
    let _ = writeln!(s, "check = {check}");
    let _ = writeln!(s, "nodes = {}", fin.grid.nodes());
    let _ = writeln!(s, "max_norm = {}", fmt_f64(fin.max_norm()));
    let _ = writeln!(s, "l2_norm = {}", fmt_f64(fin.l2_norm()));
    let _ = writeln!(s, "worst_equation = {}", fin.worst_equation());
    match study.observed_order {
        Some(p) => {
            let _ = writeln!(s, "observed_order = {}", fmt_f64(p));
        }
        None => {
            let _ = writeln!(s, "observed_order = none");
        }
    }
    let _ = writeln!(s, "tolerance = {}", fmt_f64(tolerance));
    let _ = writeln!(s, "min_order = {}", fmt_f64(min_order));
    let _ = writeln!(s, "status = {}", status(pass));
    s
}

pub fn format_epsilon_report(r: &EpsilonReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "check: epsilon");
    let _ = writeln!(s, "order  max_residual             worst (xi, eta, t)");
    for o in &r.orders {
        let _ = writeln!(
            s,
            "{:>5}  {}  ({}, {}, {})",
            o.order,
            fmt_f64(o.max_residual),
            o.worst.xi,
            o.worst.eta,
            o.worst.t
        );
    }
    let _ = writeln!(s, "[result]");
    let _ = writeln!(s, "check = epsilon");
    for o in &r.orders {
        let _ = writeln!(s, "order_{} = {}", o.order, fmt_f64(o.max_residual));
    }
    if let Some(w) = r.worst() {
        let _ = writeln!(s, "worst_order = {}", w.order);
    }
    let _ = writeln!(s, "tolerance = {}", fmt_f64(r.tolerance));
    let _ = writeln!(s, "status = {}", status(r.passed()));
    s
}

/// Gridded `(ξ, η, |q|)` text with a blank line between ξ blocks.
pub fn format_figure(s: &FieldSnapshot) -> Result<String, GridError> {
    s.grid.check_shape(&s.q)?;
    let xs = s.grid.coords();
    let mut out = String::with_capacity(64 * xs.len() * xs.len());
    let _ = writeln!(
        out,
        "# |q| at t = {}  grid {}x{} on [-{}, {}]^2",
        fmt_f64(s.t),
        xs.len(),
        xs.len(),
        s.grid.half_width(),
        s.grid.half_width()
    );
    let _ = writeln!(out, "# columns: xi eta abs_q (dimensionless)");
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in xs.iter().enumerate() {
            let _ = writeln!(out, "{} {} {}", fmt_f64(*x), fmt_f64(*y), fmt_f64(s.q[[i, j]].norm()));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn format_series(series: &[(f64, f64)]) -> String {
    let mut out = String::from("# t max_abs_q\n");
    for (t, v) in series {
        let _ = writeln!(out, "{} {}", fmt_f64(*t), fmt_f64(*v));
    }
    out
}

/// Parses figure text back into `(ξ, η, |q|)` rows.
pub fn parse_figure(text: &str) -> Result<Vec<(f64, f64, f64)>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v: Result<Vec<f64>, _> = l.split_whitespace().map(str::parse).collect();
            match v {
                Ok(v) if v.len() == 3 => Ok((v[0], v[1], v[2])),
                _ => Err(format!("bad figure line `{l}`")),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::demo_dromion;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let sol = ExactSolution::Dromion(demo_dromion(1.0));
        let mut s = sol.snapshot(Grid::new(3.0, 9).unwrap(), -0.5);
        s.q[[0, 0]] = Complex64::new(-0.0, f64::MIN_POSITIVE);
        let bytes = encode_snapshot(&s);
        assert_eq!(bytes.len(), 5 + 4 + 8 + 8 + 8 + 1 + 3 + 32 * 81);
        let back = decode_snapshot(&bytes).unwrap();
        assert_eq!(encode_snapshot(&back), bytes);
        assert_eq!(back.q[[0, 0]].re.to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn corrupt_snapshots_rejected() {
        let s = ExactSolution::Dromion(demo_dromion(0.0)).snapshot(Grid::new(3.0, 5).unwrap(), 0.0);
        let b = encode_snapshot(&s);
        assert!(matches!(decode_snapshot(&b[..b.len() - 1]), Err(SnapshotError::Length { .. })));
        let mut extra = b.clone();
        extra.push(0);
        assert!(matches!(decode_snapshot(&extra), Err(SnapshotError::Length { .. })));
        let mut m = b.clone();
        m[0] = b'X';
        assert!(matches!(decode_snapshot(&m), Err(SnapshotError::Magic)));
        let mut v = b.clone();
        v[5] = 2;
        assert!(matches!(decode_snapshot(&v), Err(SnapshotError::Version(2))));
        assert!(matches!(decode_snapshot(b"NI"), Err(SnapshotError::Magic)));
    }

    #[test]
    fn config_parses_and_rejects() {
        let c = RunConfig::parse("# demo\nsolution = soliton\nomega1 = -1 # decay\ntimes = 0, 0.5\n\n").unwrap();
        assert_eq!(c.solution, SolutionKind::Soliton);
        assert_eq!(c.omega1, -1.0);
        assert_eq!(c.times, vec![0.0, 0.5]);
        assert_eq!(c.nodes, 257);
        assert!(matches!(RunConfig::parse("colour = red"), Err(ConfigError::UnknownKey { line: 1, .. })));
        assert!(matches!(RunConfig::parse("alpha 1"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(RunConfig::parse("alpha = x"), Err(ConfigError::Value { .. })));
        assert!(matches!(RunConfig::parse("alpha = 1\nalpha = 2"), Err(ConfigError::Duplicate { line: 2, .. })));
        assert!(RunConfig::parse("times =").unwrap().times.is_empty());
    }

    #[test]
    fn degenerate_config_rejected() {
        let c = RunConfig::parse("alpha = 1\nbeta = 1\ngamma = 1\ndelta = 1").unwrap();
        assert!(matches!(c.solution(), Err(ConfigError::Param(ParamError::DegenerateAmplitude(_)))));
    }

    #[test]
    fn figure_text_layout() {
        let s = ExactSolution::Dromion(demo_dromion(0.0)).snapshot(Grid::new(2.0, 3).unwrap(), 0.0);
        let text = format_figure(&s).unwrap();
        assert!(text.lines().next().unwrap().starts_with("# |q| at t ="));
        assert!(text.lines().nth(1).unwrap().contains("columns"));
        let rows = parse_figure(&text).unwrap();
        assert_eq!(rows.len(), 9);
        assert_eq!(text.matches("\n\n").count(), 3);
        assert_eq!(rows[4].2, s.q[[1, 1]].norm());
    }
}
