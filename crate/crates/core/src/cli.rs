//! The `nids` command line: `exact`, `verify`, `simulate`, `gauge`, `figure`.
//!
//! Exit codes: 0 success, 1 verification failure or blow-up, 2 usage,
//! configuration, missing-file or stability errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::bilinear::{
    default_step, epsilon_order_check, hirota_d, lattice_max, residual_6a, residual_6b, BilinearPair, Expansion, Orders,
    SpaceTimeField,
};
use crate::evolve::{relative_l2, BoundarySource, SimConfig, SimError, SimOutput};
use crate::exact::{gauge_to_isospectral, ExactSolution};
use crate::grid::{FieldSnapshot, Grid};
use crate::io::{
    fmt_f64, format_epsilon_report, format_figure, format_residual_study, format_series, read_snapshot, status,
    write_snapshot, BoundaryKind, InitialKind, RunConfig, SolutionKind,
};
use crate::residual::{
    exact_isospectral_residual, exact_residual, refinement_study, residual_isospectral, BoundaryData, RefinementStudy,
    ResidualError, TimeDerivative,
};

/// Minimum observed convergence order for the grid-refinement checks.
pub const MIN_ORDER: f64 = 3.5;
pub const DEFAULT_PDE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_BILINEAR_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_REFINEMENTS: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "nids", version, about = "Explode-decay dromions: closed forms, verification and time integration")]
pub struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Overrides the tolerance of the selected check.
    #[arg(long, global = true, value_name = "X")]
    pub tolerance: Option<f64>,
    /// Number of grid levels in refinement studies.
    #[arg(long, global = true, value_name = "K")]
    pub refinements: Option<usize>,
    /// Overrides one configuration key; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the closed form at each configured time and write snapshots.
    Exact,
    /// Run a verifier.
    Verify {
        #[arg(value_enum)]
        check: Check,
    },
    /// Integrate in time and write snapshots plus the max|q| series.
    Simulate,
    /// Map snapshots onto the isospectral system.
    Gauge {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Check the transformed fields against the isospectral equations.
        #[arg(long)]
        chain_verify: bool,
    },
    /// Export |q| of snapshots as gridded text.
    Figure {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Pde,
    Bilinear,
    Epsilon,
    Isospectral,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Pde => "pde",
            Check::Bilinear => "bilinear",
            Check::Epsilon => "epsilon",
            Check::Isospectral => "isospectral",
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Failed(m) | CliError::Usage(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::BlowUp { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message().replace('\n', " "));
            e.code()
        }
    }
}

fn configure_threads() -> CliResult {
    let Ok(v) = std::env::var("NIDS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("NIDS_THREADS must be a positive integer, got `{v}`")))?;
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::info!("thread pool already initialized; NIDS_THREADS ignored");
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None => {
            log::info!("no config file given, using defaults");
            RunConfig::default()
        }
    };
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| usage(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim()).map_err(usage)?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> CliResult {
    configure_threads()?;
    let cfg = load_config(cli)?;
    if let Some(t) = cli.tolerance {
        if !(t.is_finite() && t >= 0.0) {
            return Err(usage(format!("tolerance must be non-negative, got {t}")));
        }
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| usage(format!("{}: {e}", cli.out.display())))?;
    match &cli.command {
        Command::Exact => cmd_exact(cli, &cfg),
        Command::Verify { check } => cmd_verify(cli, &cfg, *check),
        Command::Simulate => cmd_simulate(cli, &cfg),
        Command::Gauge { input, chain_verify } => cmd_gauge(cli, &cfg, input, *chain_verify),
        Command::Figure { input } => cmd_figure(cli, input),
    }
}

fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn max_abs(s: &FieldSnapshot) -> f64 {
    s.q.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn cmd_exact(cli: &Cli, cfg: &RunConfig) -> CliResult {
    if cfg.solution == SolutionKind::Zero {
        return Err(usage("exact needs solution = soliton or dromion"));
    }
    if cfg.times.is_empty() {
        return Err(usage("time list is empty"));
    }
    let sol = cfg.solution().map_err(usage)?;
    let grid = cfg.grid().map_err(usage)?;
    for (k, &t) in cfg.times.iter().enumerate() {
        let snap = sol.snapshot(grid, t);
        snap.check_finite().map_err(usage)?;
        let path = cli.out.join(format!("exact_{k:03}.nids"));
        write_snapshot(&path, &snap).map_err(usage)?;
        println!("{}  t = {}  max|q| = {}", path.display(), fmt_f64(t), fmt_f64(max_abs(&snap)));
    }
    Ok(())
}

fn study_levels(cfg: &RunConfig, cli: &Cli) -> Result<(Grid, usize), CliError> {
    let k = cli.refinements.unwrap_or(DEFAULT_REFINEMENTS);
    if k == 0 {
        return Err(usage("refinements must be at least 1"));
    }
    let mut g = cfg.grid().map_err(usage)?;
    for _ in 1..k {
        g = g
            .coarsened()
            .ok_or_else(|| usage(format!("{} nodes cannot be coarsened {} times", cfg.nodes, k - 1)))?;
    }
    Ok((g, k))
}

fn gate_study(study: &RefinementStudy, tolerance: f64) -> (bool, String) {
    let fin = study.finest();
    let within = fin.max_norm() <= tolerance;
    let order_ok = match study.observed_order {
        Some(p) => p >= MIN_ORDER,
        None => study.reports.len() < 3 || fin.max_norm() == 0.0,
    };
    let why = if !within {
        let n = fin
            .equations()
            .into_iter()
            .find(|(name, _)| *name == fin.worst_equation())
            .map(|(_, n)| n.worst)
            .unwrap_or_default();
        format!(
            "{} residual {} exceeds {} at node {:?}",
            fin.worst_equation(),
            fmt_f64(fin.max_norm()),
            fmt_f64(tolerance),
            n
        )
    } else {
        format!("observed order {:?} below {MIN_ORDER}", study.observed_order)
    };
    (within && order_ok, why)
}

fn cmd_verify(cli: &Cli, cfg: &RunConfig, check: Check) -> CliResult {
    let sol = cfg.solution().map_err(usage)?;
    let (report, pass, why) = match check {
        Check::Pde | Check::Isospectral => {
            let tol = cli.tolerance.unwrap_or(DEFAULT_PDE_TOLERANCE);
            let (coarsest, k) = study_levels(cfg, cli)?;
            let t = cfg.verify_time;
            let f = |g: Grid| -> Result<_, ResidualError> {
                if check == Check::Pde {
                    exact_residual(&sol, g, t)
                } else {
                    exact_isospectral_residual(&sol, g, t)
                }
            };
            let study = refinement_study(coarsest, k, f).map_err(usage)?;
            let (pass, why) = gate_study(&study, tol);
            (format_residual_study(check.name(), &study, tol, MIN_ORDER, pass), pass, why)
        }
        Check::Bilinear => bilinear_report(cfg, &sol, cli.tolerance.unwrap_or(DEFAULT_BILINEAR_TOLERANCE))?,
        Check::Epsilon => {
            let tol = cli.tolerance.unwrap_or(DEFAULT_BILINEAR_TOLERANCE);
            let exp = expansion(&sol);
            let r = epsilon_order_check(&exp, &cfg.lattice(), tol);
            let why = match r.worst() {
                Some(w) => format!(
                    "order-{} source {} exceeds {} at (xi, eta, t) = ({}, {}, {})",
                    w.order,
                    fmt_f64(w.max_residual),
                    fmt_f64(tol),
                    w.worst.xi,
                    w.worst.eta,
                    w.worst.t
                ),
                None => String::new(),
            };
            (format_epsilon_report(&r), r.passed(), why)
        }
    };
    print!("{report}");
    write_text(&cli.out.join(format!("verify_{}.txt", check.name())), &report)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Failed(format!("verify {}: {why}", check.name())))
    }
}

fn pair_of(sol: &ExactSolution) -> BilinearPair {
    match sol {
        ExactSolution::Zero(_) => BilinearPair::zero(),
        ExactSolution::LineSoliton(s) => BilinearPair::line_soliton(s),
        ExactSolution::Dromion(d) => BilinearPair::dromion(d),
    }
}

fn expansion(sol: &ExactSolution) -> Expansion {
    match sol {
        ExactSolution::Zero(c) => Expansion {
            g: Vec::new(),
            f: vec![(0, pair_of(sol).f)],
            coeffs: *c,
        },
        ExactSolution::LineSoliton(s) => Expansion::line_soliton(s),
        ExactSolution::Dromion(d) => Expansion::dromion(d),
    }
}

/// Odd-total orders `D_t^m D_ξ^n D_η^p` with `m ≤ 1`, `n, p ≤ 2`.
pub fn odd_orders() -> Vec<Orders> {
    let mut out = Vec::new();
    for t in 0..=1 {
        for xi in 0..=2 {
            for eta in 0..=2 {
                let o = Orders::new(t, xi, eta);
                if o.total() % 2 == 1 {
                    out.push(o);
                }
            }
        }
    }
    out
}

fn bilinear_report(cfg: &RunConfig, sol: &ExactSolution, tol: f64) -> Result<(String, bool, String), CliError> {
    let pair = pair_of(sol);
    let lattice = cfg.lattice();
    let step = match sol {
        ExactSolution::LineSoliton(s) => default_step(s.mode()),
        ExactSolution::Dromion(d) => default_step(d.mode()),
        ExactSolution::Zero(_) => 1e-3,
    };
    let coeffs = *sol.coeffs();
    let ff = BilinearPair::new(Arc::clone(&pair.f), Arc::clone(&pair.f) as Arc<dyn SpaceTimeField>);
    let b = usage;
    let r6a = lattice_max(&lattice, |p| residual_6a(&pair, p, &coeffs, step).map(|z| z.norm())).map_err(b)?;
    let r6b = lattice_max(&lattice, |p| residual_6b(&pair, p, step)).map_err(b)?;
    let mut odd = (0.0, r6a.1, Orders::new(1, 0, 0));
    for o in odd_orders() {
        let r = lattice_max(&lattice, |p| hirota_d(o, &ff, p, step).map(|z| z.norm())).map_err(b)?;
        if r.0 > odd.0 {
            odd = (r.0, r.1, o);
        }
    }
    let rows = [("evolution_bilinear", r6a), ("constraint_bilinear", r6b), ("odd_self_product", (odd.0, odd.1))];
    let mut s = String::new();
    let _ = writeln!(s, "check: bilinear");
    let _ = writeln!(
        s,
        "lattice {}x{}x{} on [-{}, {}]^2, times {:?}, fd step {}",
        lattice.nodes,
        lattice.nodes,
        lattice.times.len(),
        lattice.half_width,
        lattice.half_width,
        lattice.times,
        fmt_f64(step)
    );
    for (name, (v, p)) in &rows {
        let _ = writeln!(s, "  {name:<20} max {}  at ({}, {}, {})", fmt_f64(*v), p.xi, p.eta, p.t);
    }
    let worst = rows
        .iter()
        .max_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap_or(std::cmp::Ordering::Greater))
        .expect("three rows");
    let pass = rows.iter().all(|(_, (v, _))| *v <= tol);
    let _ = writeln!(s, "[result]");
    let _ = writeln!(s, "check = bilinear");
    for (name, (v, _)) in &rows {
        let _ = writeln!(s, "{name} = {}", fmt_f64(*v));
    }
    let _ = writeln!(s, "odd_worst_orders = t{} xi{} eta{}", odd.2.t, odd.2.xi, odd.2.eta);
    let _ = writeln!(s, "worst = {}", worst.0);
    let _ = writeln!(s, "tolerance = {}", fmt_f64(tol));
    let _ = writeln!(s, "status = {}", status(pass));
    let p = worst.1 .1;
    let why = format!(
        "{} residual {} exceeds {} at (xi, eta, t) = ({}, {}, {})",
        worst.0,
        fmt_f64(worst.1 .0),
        fmt_f64(tol),
        p.xi,
        p.eta,
        p.t
    );
    Ok((s, pass, why))
}

/// Builds the simulation setup and initial field described by `cfg`.
pub fn simulation_setup(cfg: &RunConfig) -> Result<(SimConfig, FieldSnapshot), String> {
    if cfg.times.is_empty() {
        return Err("time list is empty".into());
    }
    let grid = cfg.grid().map_err(|e| e.to_string())?;
    let sol = cfg.solution().map_err(|e| e.to_string())?;
    let initial = match cfg.initial {
        InitialKind::Exact => sol.snapshot(grid, cfg.t_start),
        InitialKind::File => {
            let path = cfg.initial_file.as_ref().ok_or("initial = file needs initial_file")?;
            let s = read_snapshot(path).map_err(|e| e.to_string())?;
            if s.grid != grid {
                return Err(format!(
                    "{}: grid {}x{} on half-width {} does not match the configured grid",
                    path.display(),
                    s.grid.nodes(),
                    s.grid.nodes(),
                    s.grid.half_width()
                ));
            }
            if (s.t - cfg.t_start).abs() > 1e-12 {
                return Err(format!("{}: snapshot time {} differs from t_start {}", path.display(), s.t, cfg.t_start));
            }
            s
        }
    };
    let boundary = match cfg.boundary {
        BoundaryKind::ClosedForm => {
            if cfg.solution == SolutionKind::Zero {
                BoundarySource::Zero
            } else {
                BoundarySource::ClosedForm(sol)
            }
        }
        BoundaryKind::Zero => BoundarySource::Zero,
        BoundaryKind::File => match BoundaryData::frozen_from(&initial) {
            BoundaryData::Sampled { u1, u2 } => BoundarySource::Frozen { u1, u2 },
            _ => unreachable!("frozen data are sampled"),
        },
    };
    let mut sc = SimConfig::new(grid, *sol.coeffs(), cfg.dt, cfg.t_start, cfg.t_end, boundary);
    sc.snapshot_times = cfg.times.clone();
    sc.edge = cfg.edge;
    sc.stability_factor = cfg.stability_factor;
    sc.edge_floor = Some(cfg.edge_floor);
    Ok((sc, initial))
}

fn write_sim_output(cli: &Cli, out: &SimOutput) -> CliResult {
    for (k, s) in out.snapshots.iter().enumerate() {
        let path = cli.out.join(format!("snapshot_{k:03}.nids"));
        write_snapshot(&path, s).map_err(usage)?;
        println!("{}  t = {}  max|q| = {}", path.display(), fmt_f64(s.t), fmt_f64(max_abs(s)));
    }
    write_text(&cli.out.join("peak_series.txt"), &format_series(&out.peak_series))
}

fn cmd_simulate(cli: &Cli, cfg: &RunConfig) -> CliResult {
    let (sc, initial) = simulation_setup(cfg).map_err(usage)?;
    let closed = match &sc.boundary {
        BoundarySource::ClosedForm(sol) if cfg.initial == InitialKind::Exact => Some(*sol),
        _ => None,
    };
    let out = match crate::evolve::simulate(sc, initial.q) {
        Ok(o) => o,
        Err(SimError::BlowUp { t, partial }) => {
            write_sim_output(cli, &partial)?;
            return Err(CliError::Failed(format!("solution blew up at t = {t:.6}")));
        }
        Err(e) => return Err(e.into()),
    };
    write_sim_output(cli, &out)?;
    println!("steps = {}", out.steps);
    println!("dt = {}", fmt_f64(out.dt));
    if let Some(sol) = closed {
        for s in &out.snapshots {
            let exact = s.grid.sample(|x, y| sol.q(x, y, s.t));
            println!("relative_l2_error(t = {}) = {}", fmt_f64(s.t), fmt_f64(relative_l2(&s.q, &exact)));
        }
    }
    Ok(())
}

fn output_name(input: &Path, prefix: &str, ext: &str) -> String {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    format!("{prefix}{stem}.{ext}")
}

/// Applies the gauge map nodewise to every field of `s`.
pub fn gauge_snapshot(s: &FieldSnapshot, coeffs: &crate::model::NonisoCoefficients) -> FieldSnapshot {
    let xs = s.grid.coords();
    let mut out = s.clone();
    for ((i, j), q) in out.q.indexed_iter_mut() {
        let (qh, uh, vh) = gauge_to_isospectral(*q, s.u[[i, j]], s.v[[i, j]], xs[i], xs[j], s.t, coeffs);
        *q = qh;
        out.u[[i, j]] = uh;
        out.v[[i, j]] = vh;
    }
    out
}

fn cmd_gauge(cli: &Cli, cfg: &RunConfig, inputs: &[PathBuf], chain: bool) -> CliResult {
    let sol = cfg.solution().map_err(usage)?;
    let coeffs = *sol.coeffs();
    let tol = cli.tolerance.unwrap_or(DEFAULT_PDE_TOLERANCE);
    let snaps: Vec<FieldSnapshot> = inputs.iter().map(|p| read_snapshot(p).map_err(usage)).collect::<Result<_, _>>()?;
    let mut failures = Vec::new();
    for (path, s) in inputs.iter().zip(&snaps) {
        let hat = gauge_snapshot(s, &coeffs);
        let dest = cli.out.join(output_name(path, "gauge_", "nids"));
        write_snapshot(&dest, &hat).map_err(usage)?;
        println!("{}  t = {}", dest.display(), fmt_f64(hat.t));
        if chain {
            let qt = hat.grid.sample(|x, y| sol.isospectral_q_t(x, y, hat.t));
            let r = residual_isospectral(&hat, &TimeDerivative::Analytic(qt)).map_err(usage)?;
            let pass = r.max_norm() <= tol;
            println!(
                "  isospectral residual max {} ({}), tolerance {}: {}",
                fmt_f64(r.max_norm()),
                r.worst_equation(),
                fmt_f64(tol),
                status(pass)
            );
            if !pass {
                failures.push(format!("{} at t = {}", r.worst_equation(), hat.t));
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("isospectral residual above tolerance: {}", failures.join(", "))))
    }
}

fn cmd_figure(cli: &Cli, inputs: &[PathBuf]) -> CliResult {
    let snaps: Vec<FieldSnapshot> = inputs.iter().map(|p| read_snapshot(p).map_err(usage)).collect::<Result<_, _>>()?;
    for (path, s) in inputs.iter().zip(&snaps) {
        let dest = cli.out.join(output_name(path, "figure_", "dat"));
        write_text(&dest, &format_figure(s).map_err(usage)?)?;
        println!("{}  t = {}  max|q| = {}", dest.display(), fmt_f64(s.t), fmt_f64(max_abs(s)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_orders_listed() {
        let o = odd_orders();
        assert_eq!(o.len(), 9);
        assert!(o.iter().all(|o| o.total() % 2 == 1));
    }

    #[test]
    fn parse_errors_exit_two() {
        assert_eq!(run(["nids", "frobnicate"]), 2);
        assert_eq!(run(["nids", "verify", "nonsense"]), 2);
        assert_eq!(run(["nids", "--help"]), 0);
    }
}
