//! Time integration of the reduced system: classical RK4 in time,
//! fourth-order finite differences in space, and the potentials rebuilt
//! from `q` and inflow data at every stage.
//!
//! With [`EdgeTreatment::Dirichlet`] the two outermost node rings are not
//! evolved by the PDE; they follow the boundary source, whose time
//! derivative drives them inside every RK stage.

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::ExactSolution;
use crate::grid::{FieldSnapshot, Grid, GridError};
use crate::model::NonisoCoefficients;
use crate::residual::{inflow_edge_ratio, BoundaryData, ResidualError};
use crate::stencil::{self, MARGIN};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default ratio `dt / h²` above which a run is refused.
pub const DEFAULT_STABILITY_FACTOR: f64 = 0.2;

/// Growth of `max|q|` over its initial value treated as blow-up.
const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation setup: {0}")]
    Config(String),
    #[error("time step {dt:.3e} exceeds the stability limit {limit:.3e} (factor × h²)")]
    Unstable { dt: f64, limit: f64 },
    #[error("solution blew up at t = {t:.6}")]
    BlowUp { t: f64, partial: Box<SimOutput> },
    #[error(transparent)]
    Residual(#[from] ResidualError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Where the edge ring and the inflow potentials come from.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySource {
    /// Closed-form `q` on the ring, closed-form `U`, `V` on the inflow edges.
    ClosedForm(ExactSolution),
    /// `q = 0` on the ring, `u1 = u2 = 0`.
    Zero,
    /// Ring and inflow potentials frozen at the initial values.
    Frozen { u1: Vec<f64>, u2: Vec<f64> },
}

impl BoundarySource {
    fn potentials(&self) -> BoundaryData {
        match self {
            BoundarySource::ClosedForm(sol) => BoundaryData::EdgeValues(*sol),
            BoundarySource::Zero => BoundaryData::Zero,
            BoundarySource::Frozen { u1, u2 } => BoundaryData::Sampled {
                u1: u1.clone(),
                u2: u2.clone(),
            },
        }
    }

    fn ring_rate(&self, xi: f64, eta: f64, t: f64) -> Complex64 {
        match self {
            BoundarySource::ClosedForm(sol) => sol.q_t(xi, eta, t),
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTreatment {
    /// Two-node ring driven by the boundary source.
    Dirichlet,
    /// Every node evolved by the PDE with one-sided stencils at the edges.
    OneSided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid,
    pub coeffs: NonisoCoefficients,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Times at which snapshots are kept; each maps to the nearest step.
    pub snapshot_times: Vec<f64>,
    pub boundary: BoundarySource,
    pub edge: EdgeTreatment,
    pub stability_factor: f64,
    /// Relative floor on `|q|²` at the inflow edges, checked once at start
    /// for far-field boundary data.
    pub edge_floor: Option<f64>,
}

impl SimConfig {
    pub fn new(grid: Grid, coeffs: NonisoCoefficients, dt: f64, t_start: f64, t_end: f64, boundary: BoundarySource) -> Self {
        Self {
            grid,
            coeffs,
            dt,
            t_start,
            t_end,
            snapshot_times: Vec::new(),
            boundary,
            edge: EdgeTreatment::Dirichlet,
            stability_factor: DEFAULT_STABILITY_FACTOR,
            edge_floor: None,
        }
    }

    /// Number of steps and the step actually taken, `(t_end − t_start)/n`.
    /// A zero-length run takes no steps.
    pub fn steps(&self) -> (usize, f64) {
        let span = self.t_end - self.t_start;
        if span == 0.0 {
            return (0, self.dt);
        }
        let n = (span / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, span / n as f64)
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end >= self.t_start) {
            return bad("t_end must not precede t_start");
        }
        if self.grid.nodes() < 2 * MARGIN + 3 {
            return bad("grid too small for the stencils");
        }
        for &t in &self.snapshot_times {
            if !(t >= self.t_start && t <= self.t_end) {
                return Err(SimError::Config(format!(
                    "snapshot time {t} outside [{}, {}]",
                    self.t_start, self.t_end
                )));
            }
        }
        let h = self.grid.spacing();
        let limit = self.stability_factor * h * h;
        let (_, dt) = self.steps();
        if dt > limit {
            return Err(SimError::Unstable { dt, limit });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub q: Array2<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub snapshots: Vec<FieldSnapshot>,
    /// `(t, max|q|)` after every step, the maximum refined by a local
    /// quadratic fit.
    pub peak_series: Vec<(f64, f64)>,
    pub steps: usize,
    pub dt: f64,
    pub final_state: SimState,
}

/// Preallocated buffers for the right-hand side.
struct Workspace {
    dens: Array2<f64>,
    tmp: Array2<f64>,
    u: Array2<f64>,
    v: Array2<f64>,
    q_xi: Array2<Complex64>,
    q_eta: Array2<Complex64>,
    lap: Array2<Complex64>,
}

impl Workspace {
    fn new(grid: &Grid) -> Self {
        let sh = grid.shape();
        Self {
            dens: Array2::zeros(sh),
            tmp: Array2::zeros(sh),
            u: Array2::zeros(sh),
            v: Array2::zeros(sh),
            q_xi: Array2::zeros(sh),
            q_eta: Array2::zeros(sh),
            lap: Array2::zeros(sh),
        }
    }
}

/// Integrator for one configuration.
pub struct Integrator {
    config: SimConfig,
    potentials: BoundaryData,
    coords: Vec<f64>,
    ring: Vec<(usize, usize)>,
    ws: Workspace,
}

impl Integrator {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let n = config.grid.nodes();
        let ring = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i < MARGIN || j < MARGIN || i + MARGIN >= n || j + MARGIN >= n)
            .collect();
        Ok(Self {
            potentials: config.boundary.potentials(),
            coords: config.grid.coords(),
            ws: Workspace::new(&config.grid),
            ring,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// `(U, V)` reconstructed from `q` at time `t`.
    pub fn potentials(&self, q: &Array2<Complex64>, t: f64) -> Result<(Array2<f64>, Array2<f64>), SimError> {
        Ok(crate::residual::reconstruct_potentials(q, &self.config.grid, t, &self.potentials, None)?)
    }

    fn update_potentials(&mut self, q: &Array2<Complex64>, t: f64) -> Result<(), SimError> {
        let g = self.config.grid;
        let h = g.spacing();
        let (u1, u2) = self.potentials.sample(&g, t)?;
        let ws = &mut self.ws;
        Zip::from(&mut ws.dens).and(q).par_for_each(|d, z| *d = z.norm_sqr());
        stencil::derivative_into(ws.dens.view(), h, 1, 1, ws.tmp.view_mut());
        stencil::cumulative_into(ws.tmp.view(), h, 0, ws.u.view_mut());
        stencil::derivative_into(ws.dens.view(), h, 1, 0, ws.tmp.view_mut());
        stencil::cumulative_into(ws.tmp.view(), h, 1, ws.v.view_mut());
        Zip::indexed(&mut ws.u).and(&mut ws.v).par_for_each(|(i, j), u, v| {
            *u = u2[j] + 0.5 * *u;
            *v = u1[i] + 0.5 * *v;
        });
        Ok(())
    }

    /// `∂q/∂t = i·[q_ξξ + q_ηη + (U+V)q − iω₁(ξq_ξ + ηq_η) − ia₁(q_ξ − q_η) + (ω₀(ξ+η) − iω₁)q]`.
    pub fn rhs_into(&mut self, q: &Array2<Complex64>, t: f64, out: &mut Array2<Complex64>) -> Result<(), SimError> {
        self.update_potentials(q, t)?;
        let h = self.config.grid.spacing();
        let c = self.config.coeffs;
        let xs = &self.coords;
        let ws = &mut self.ws;
        match self.config.edge {
            EdgeTreatment::Dirichlet => {
                interior_rhs(q, &ws.u, &ws.v, xs, h, &c, out);
                for &(i, j) in &self.ring {
                    out[[i, j]] = self.config.boundary.ring_rate(xs[i], xs[j], t);
                }
            }
            EdgeTreatment::OneSided => {
                stencil::derivative_into(q.view(), h, 1, 0, ws.q_xi.view_mut());
                stencil::derivative_into(q.view(), h, 1, 1, ws.q_eta.view_mut());
                stencil::derivative_into(q.view(), h, 2, 0, ws.lap.view_mut());
                stencil::derivative_into(q.view(), h, 2, 1, out.view_mut());
                let (w0, w1, a1) = (c.omega0, c.omega1, c.a1);
                Zip::indexed(out)
                    .and(q)
                    .and(&ws.lap)
                    .and(&ws.q_xi)
                    .and(&ws.q_eta)
                    .par_for_each(|(i, j), o, &q, &dxx, &qx, &qe| {
                        let (xi, eta) = (xs[i], xs[j]);
                        let lq = dxx + *o + q * (ws.u[[i, j]] + ws.v[[i, j]])
                            - I * w1 * (qx * xi + qe * eta)
                            - I * a1 * (qx - qe)
                            + (Complex64::new(w0 * (xi + eta), 0.0) - I * w1) * q;
                        *o = I * lq;
                    });
            }
        }
        Ok(())
    }

    /// Runs from `initial` (values at `t_start`) to `t_end`.
    pub fn run(&mut self, initial: Array2<Complex64>) -> Result<SimOutput, SimError> {
        let grid = self.config.grid;
        grid.check_shape(&initial)?;
        if let (Some(floor), true) = (self.config.edge_floor, self.potentials.is_far_field()) {
            let edge = inflow_edge_ratio(&initial);
            if edge > floor {
                return Err(ResidualError::Truncation { edge, floor }.into());
            }
        }
        let (n_steps, dt) = self.config.steps();
        let t0 = self.config.t_start;
        let dt_index = if n_steps == 0 { 1.0 } else { dt };
        let mut wanted: Vec<(usize, f64)> = self
            .config
            .snapshot_times
            .iter()
            .map(|&t| (((t - t0) / dt_index).round() as usize, t))
            .collect();
        wanted.sort_by_key(|w| w.0);

        let mut y = initial;
        let mut acc = y.clone();
        let mut tmp = y.clone();
        let mut k = Array2::zeros(grid.shape());
        let initial_peak = refined_peak(&y);
        let mut out = SimOutput {
            snapshots: Vec::new(),
            peak_series: vec![(t0, initial_peak)],
            steps: n_steps,
            dt,
            final_state: SimState { t: t0, q: Array2::zeros((0, 0)) },
        };
        self.take_snapshots(&mut out, &mut wanted, 0, t0, &y)?;

        for step in 1..=n_steps {
            let t = t0 + (step - 1) as f64 * dt;
            acc.assign(&y);
            for (stage, (c_in, w_out)) in [(0.0, 1.0 / 6.0), (0.5, 1.0 / 3.0), (0.5, 1.0 / 3.0), (1.0, 1.0 / 6.0)]
                .into_iter()
                .enumerate()
            {
                let ts = t + c_in * dt;
                if stage == 0 {
                    self.rhs_into(&y, ts, &mut k)?;
                } else {
                    self.rhs_into(&tmp, ts, &mut k)?;
                }
                Zip::from(&mut acc).and(&k).par_for_each(|a, &kv| *a += kv * (w_out * dt));
                if stage < 3 {
                    let c_next = if stage == 2 { 1.0 } else { 0.5 };
                    Zip::from(&mut tmp).and(&y).and(&k).par_for_each(|s, &yv, &kv| *s = yv + kv * (c_next * dt));
                }
            }
            std::mem::swap(&mut y, &mut acc);
            let t_new = t0 + step as f64 * dt;
            let peak = refined_peak(&y);
            out.peak_series.push((t_new, peak));
            if !peak.is_finite() || peak > BLOW_UP_FACTOR * initial_peak.max(f64::MIN_POSITIVE) {
                log::warn!("blow-up detected at t = {t_new}");
                out.final_state = SimState { t: t_new, q: y };
                return Err(SimError::BlowUp {
                    t: t_new,
                    partial: Box::new(out),
                });
            }
            self.take_snapshots(&mut out, &mut wanted, step, t_new, &y)?;
        }
        out.final_state = SimState {
            t: self.config.t_end,
            q: y,
        };
        Ok(out)
    }

    fn take_snapshots(
        &self,
        out: &mut SimOutput,
        wanted: &mut Vec<(usize, f64)>,
        step: usize,
        t: f64,
        q: &Array2<Complex64>,
    ) -> Result<(), SimError> {
        while wanted.first().is_some_and(|w| w.0 == step) {
            wanted.remove(0);
            let (u, v) = self.potentials(q, t)?;
            out.snapshots.push(FieldSnapshot::new(self.config.grid, t, q.clone(), u, v)?);
        }
        Ok(())
    }
}

/// Fused central-stencil evaluation on interior nodes.
fn interior_rhs(
    q: &Array2<Complex64>,
    u: &Array2<f64>,
    v: &Array2<f64>,
    xs: &[f64],
    h: f64,
    c: &NonisoCoefficients,
    out: &mut Array2<Complex64>,
) {
    let n = q.nrows();
    let qs = q.as_slice().expect("contiguous q");
    let us = u.as_slice().expect("contiguous U");
    let vs = v.as_slice().expect("contiguous V");
    let (w0, w1, a1) = (c.omega0, c.omega1, c.a1);
    let d1 = 1.0 / (12.0 * h);
    let d2 = 1.0 / (12.0 * h * h);
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .filter(|(i, _)| *i >= MARGIN && *i + MARGIN < n)
        .for_each(|(i, mut row)| {
            let xi = xs[i];
            let r = |di: isize| &qs[((i as isize + di) as usize) * n..((i as isize + di) as usize + 1) * n];
            let (m2, m1, c0, p1, p2) = (r(-2), r(-1), r(0), r(1), r(2));
            let base = i * n;
            for j in MARGIN..n - MARGIN {
                let eta = xs[j];
                let q0 = c0[j];
                let qx = (m2[j] - m1[j] * 8.0 + p1[j] * 8.0 - p2[j]) * d1;
                let qxx = (-m2[j] + m1[j] * 16.0 - q0 * 30.0 + p1[j] * 16.0 - p2[j]) * d2;
                let qe = (c0[j - 2] - c0[j - 1] * 8.0 + c0[j + 1] * 8.0 - c0[j + 2]) * d1;
                let qee = (-c0[j - 2] + c0[j - 1] * 16.0 - q0 * 30.0 + c0[j + 1] * 16.0 - c0[j + 2]) * d2;
                let pot = us[base + j] + vs[base + j];
                let adv = qx * xi + qe * eta;
                let drift = qx - qe;
                // i·L q written out with i·(−i w) = w
                let lq = qxx + qee + q0 * pot + Complex64::new(w0 * (xi + eta), 0.0) * q0;
                row[j] = I * lq + (adv + q0) * w1 + drift * a1;
            }
        });
}

/// `max|q|` refined by a quadratic fit through the 3×3 neighbourhood of
/// the largest node.
pub fn refined_peak(q: &Array2<Complex64>) -> f64 {
    let (n0, n1) = q.dim();
    let mut best = (0, 0, f64::NEG_INFINITY);
    for ((i, j), z) in q.indexed_iter() {
        let a = z.norm();
        if a > best.2 || a.is_nan() {
            best = (i, j, a);
            if a.is_nan() {
                return f64::NAN;
            }
        }
    }
    let (i, j, f0) = best;
    if i == 0 || j == 0 || i + 1 >= n0 || j + 1 >= n1 {
        return f0;
    }
    let axis_gain = |fm: f64, fp: f64| {
        let curv = fp - 2.0 * f0 + fm;
        if curv < 0.0 {
            -(fp - fm) * (fp - fm) / (8.0 * curv)
        } else {
            0.0
        }
    };
    f0 + axis_gain(q[[i - 1, j]].norm(), q[[i + 1, j]].norm()) + axis_gain(q[[i, j - 1]].norm(), q[[i, j + 1]].norm())
}

/// Convenience wrapper: build an integrator and run it.
pub fn simulate(config: SimConfig, initial: Array2<Complex64>) -> Result<SimOutput, SimError> {
    Integrator::new(config)?.run(initial)
}

/// Relative grid-L2 distance `‖a − b‖ / ‖b‖`.
pub fn relative_l2(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let num: f64 = Zip::from(a).and(b).fold(0.0, |s, x, y| s + (x - y).norm_sqr());
    let den: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    (num / den).sqrt()
}
