//! Closed-form solutions of the reduced non-isospectral DSI system: the line
//! soliton with time-varying amplitude, the (1,1) explode-decay dromion with
//! its driving boundary potentials, and the gauge map onto the isospectral
//! equation.
//!
//! Both solutions come from `q = G/F`, `U = 2∂²_η log F`, `V = 2∂²_ξ log F`.
//! All evaluations are written in scaled form so that large phases saturate
//! to zero instead of overflowing.

use num_complex::Complex64;

use crate::grid::{FieldSnapshot, Grid};
use crate::model::{non_negative, positive, NonisoCoefficients, ParamError, PhaseVariant, SpectralMode};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// `ln(e^a + e^b)` without overflow; `a` or `b` may be `−∞`.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `e^s / (1 + e^s)`.
fn logistic(s: f64) -> f64 {
    0.5 * (1.0 + (0.5 * s).tanh())
}

/// Line soliton `q = 2√(kR lR)·sech(χR + ψ)·e^{iχI}` with `e^{2ψ} = 1/(16 kR lR)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSoliton {
    mode: SpectralMode,
}

impl LineSoliton {
    pub fn new(mode: SpectralMode) -> Self {
        Self { mode }
    }

    pub fn mode(&self) -> &SpectralMode {
        &self.mode
    }

    pub fn psi(&self, t: f64) -> f64 {
        -0.5 * (16.0 * self.mode.re_product(t)).ln()
    }

    pub fn psi_rate(&self, t: f64) -> f64 {
        let (k, l) = (self.mode.evolve_k(t), self.mode.evolve_l(t));
        let (kt, lt) = (self.mode.k_rate(t), self.mode.l_rate(t));
        -0.5 * (kt.re / k.re + lt.re / l.re)
    }

    fn chi(&self, xi: f64, eta: f64, t: f64) -> Complex64 {
        self.mode.chi(xi, eta, t, PhaseVariant::FullPlaneWave).chi()
    }

    pub fn q(&self, xi: f64, eta: f64, t: f64) -> Complex64 {
        let chi = self.chi(xi, eta, t);
        let amp = 2.0 * self.mode.re_product(t).sqrt() * sech(chi.re + self.psi(t));
        Complex64::from_polar(amp, chi.im)
    }

    /// `(U, V) = (2lR²·sech², 2kR²·sech²)` of `χR + ψ`.
    pub fn potentials(&self, xi: f64, eta: f64, t: f64) -> (f64, f64) {
        let chi = self.chi(xi, eta, t);
        let s2 = sech(chi.re + self.psi(t)).powi(2);
        let (kr, lr) = (self.mode.evolve_k(t).re, self.mode.evolve_l(t).re);
        (2.0 * lr * lr * s2, 2.0 * kr * kr * s2)
    }

    pub fn evaluate(&self, xi: f64, eta: f64, t: f64) -> (Complex64, f64, f64) {
        let (u, v) = self.potentials(xi, eta, t);
        (self.q(xi, eta, t), u, v)
    }

    /// Analytic `∂q/∂t`.
    pub fn q_t(&self, xi: f64, eta: f64, t: f64) -> Complex64 {
        let chi = self.chi(xi, eta, t);
        let chi_t = self.mode.k_rate(t) * xi
            + self.mode.l_rate(t) * eta
            + self.mode.omega(t, PhaseVariant::FullPlaneWave);
        let s = 2.0 * (chi.re + self.psi(t));
        let f_log_rate = logistic(s) * 2.0 * (chi_t.re + self.psi_rate(t));
        self.q(xi, eta, t) * (chi_t - f_log_rate)
    }
}

/// Parameters of the (1,1) dromion
/// `q = ρ e^{χ₁+χ₂} / (δ + α e^{χ₁+χ₁*} + β e^{χ₂+χ₂*} + γ e^{χ₁+χ₁*+χ₂+χ₂*})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DromionParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    mode: SpectralMode,
}

impl DromionParams {
    /// Requires `α, β ≥ 0`, `γ, δ > 0` (so `F > 0`) and `δγ − αβ > 0`.
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, mode: SpectralMode) -> Result<Self, ParamError> {
        non_negative("alpha", alpha)?;
        non_negative("beta", beta)?;
        positive("gamma", gamma)?;
        positive("delta", delta)?;
        let det = delta * gamma - alpha * beta;
        if det <= 0.0 {
            return Err(ParamError::DegenerateAmplitude(det));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            delta,
            mode,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn mode(&self) -> &SpectralMode {
        &self.mode
    }
    pub fn coeffs(&self) -> &NonisoCoefficients {
        self.mode.coeffs()
    }

    /// `δγ − αβ`.
    pub fn determinant(&self) -> f64 {
        self.delta * self.gamma - self.alpha * self.beta
    }

    /// `ρ₀ = ρ(0)`, fixed positive by `ρ(0)² = 16·kR(0)·lR(0)·(δγ − αβ)`.
    pub fn rho0(&self) -> f64 {
        self.rho_from_constraint(0.0)
    }

    /// `ρ(t) = ρ₀ e^{ω₁t}`.
    pub fn rho(&self, t: f64) -> f64 {
        self.rho0() * (self.coeffs().omega1 * t).exp()
    }

    /// `√(16·kR(t)·lR(t)·(δγ − αβ))`, the amplitude demanded by the
    /// bilinear constraint at time `t`.
    pub fn rho_from_constraint(&self, t: f64) -> f64 {
        (16.0 * self.mode.re_product(t) * self.determinant()).sqrt()
    }

    /// Supremum of `|q|` over the plane: `ρ(t) / (2(√(δγ) + √(αβ)))`.
    pub fn peak_amplitude(&self, t: f64) -> f64 {
        self.rho(t) / (2.0 * ((self.delta * self.gamma).sqrt() + (self.alpha * self.beta).sqrt()))
    }

    fn phases(&self, xi: f64, eta: f64, t: f64) -> (Complex64, Complex64) {
        (
            self.mode.chi(xi, eta, t, PhaseVariant::DromionXi).chi(),
            self.mode.chi(xi, eta, t, PhaseVariant::DromionEta).chi(),
        )
    }

    /// The four terms of `F·e^{−(χ₁R+χ₂R)}` in the order δ, α, β, γ.
    fn scaled_terms(&self, c1: f64, c2: f64) -> [f64; 4] {
        let (u, v) = (c1 + c2, c1 - c2);
        [
            self.delta * (-u).exp(),
            self.alpha * v.exp(),
            self.beta * (-v).exp(),
            self.gamma * u.exp(),
        ]
    }

    pub fn q(&self, xi: f64, eta: f64, t: f64) -> Complex64 {
        let (c1, c2) = self.phases(xi, eta, t);
        let d: f64 = self.scaled_terms(c1.re, c2.re).iter().sum();
        Complex64::from_polar(self.rho(t) / d, c1.im + c2.im)
    }

    /// Analytic `∂q/∂t`, using `ρ_t = ω₁ρ`.
    pub fn q_t(&self, xi: f64, eta: f64, t: f64) -> Complex64 {
        let (c1, c2) = self.phases(xi, eta, t);
        let c1_t = self.mode.k_rate(t) * xi + self.mode.omega(t, PhaseVariant::DromionXi);
        let c2_t = self.mode.l_rate(t) * eta + self.mode.omega(t, PhaseVariant::DromionEta);
        let [td, ta, tb, tg] = self.scaled_terms(c1.re, c2.re);
        let d = td + ta + tb + tg;
        let f_log_rate = (ta * 2.0 * c1_t.re + tb * 2.0 * c2_t.re + tg * 2.0 * (c1_t.re + c2_t.re)) / d;
        let q = Complex64::from_polar(self.rho(t) / d, c1.im + c2.im);
        q * (self.coeffs().omega1 + c1_t + c2_t - f_log_rate)
    }

    /// `(U, V) = (2∂²_η log F, 2∂²_ξ log F)` in closed form.
    pub fn potentials(&self, xi: f64, eta: f64, t: f64) -> (f64, f64) {
        let (c1, c2) = self.phases(xi, eta, t);
        let (kr, lr) = (self.mode.evolve_k(t).re, self.mode.evolve_l(t).re);
        let (a, b) = (2.0 * c1.re, 2.0 * c2.re);
        let (ld, la, lb, lg) = (self.delta.ln(), self.alpha.ln(), self.beta.ln(), self.gamma.ln());
        // F = P + e^b Q with P = δ + αe^a, Q = β + γe^a, and symmetrically in ξ
        let log_ratio_eta = b + log_add_exp(lb, lg + a) - log_add_exp(ld, la + a);
        let log_ratio_xi = a + log_add_exp(la, lg + b) - log_add_exp(ld, lb + b);
        let u = 2.0 * lr * lr * sech(0.5 * log_ratio_eta).powi(2);
        let v = 2.0 * kr * kr * sech(0.5 * log_ratio_xi).powi(2);
        (u, v)
    }

    pub fn evaluate(&self, xi: f64, eta: f64, t: f64) -> (Complex64, f64, f64) {
        let (u, v) = self.potentials(xi, eta, t);
        (self.q(xi, eta, t), u, v)
    }

    /// Inflow boundary potentials `u2(η, t) = lim_{ξ→−∞} U` and
    /// `u1(ξ, t) = lim_{η→−∞} V`, both evaluated at the same `coord`.
    /// Returns `(u1(coord), u2(coord))`.
    pub fn boundary_potentials(&self, coord: f64, t: f64) -> (f64, f64) {
        (self.u1(coord, t), self.u2(coord, t))
    }

    pub fn u1(&self, xi: f64, t: f64) -> f64 {
        let c1 = self.mode.chi(xi, 0.0, t, PhaseVariant::DromionXi).chi();
        let kr = self.mode.evolve_k(t).re;
        2.0 * kr * kr * sech(c1.re + 0.5 * (self.alpha / self.delta).ln()).powi(2)
    }

    pub fn u2(&self, eta: f64, t: f64) -> f64 {
        let c2 = self.mode.chi(0.0, eta, t, PhaseVariant::DromionEta).chi();
        let lr = self.mode.evolve_l(t).re;
        2.0 * lr * lr * sech(c2.re + 0.5 * (self.beta / self.delta).ln()).powi(2)
    }
}

/// Demo dromion: `α = β = 1`, `γ = δ = 2`, `kR0 = lR0 = 1/2`, `kI0 = lI0 = 0`,
/// `ω₀ = a₁ = 0`, growth rate `omega1`.
pub fn demo_dromion(omega1: f64) -> DromionParams {
    let coeffs = NonisoCoefficients::new(0.0, omega1, 0.0, 0.0).expect("finite demo coefficients");
    let mode = SpectralMode::new(0.5, 0.0, 0.5, 0.0, coeffs).expect("positive demo mode");
    DromionParams::new(1.0, 1.0, 2.0, 2.0, mode).expect("non-degenerate demo dromion")
}

/// Demo line soliton: `kR0 = lR0 = 2/5`, `kI0 = lI0 = 0`, `ω₀ = a₁ = 0`,
/// growth rate `omega1`.
pub fn demo_line_soliton(omega1: f64) -> LineSoliton {
    let coeffs = NonisoCoefficients::new(0.0, omega1, 0.0, 0.0).expect("finite demo coefficients");
    LineSoliton::new(SpectralMode::new(0.4, 0.0, 0.4, 0.0, coeffs).expect("positive demo mode"))
}

/// Any closed-form solution the verifiers and the integrator can consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactSolution {
    /// `q ≡ 0`, `U = V = 0`.
    Zero(NonisoCoefficients),
    LineSoliton(LineSoliton),
    Dromion(DromionParams),
}

impl ExactSolution {
    pub fn coeffs(&self) -> &NonisoCoefficients {
        match self {
            ExactSolution::Zero(c) => c,
            ExactSolution::LineSoliton(s) => s.mode().coeffs(),
            ExactSolution::Dromion(d) => d.coeffs(),
        }
    }

    pub fn q(&self, xi: f64, eta: f64, t: f64) -> Complex64 {
        match self {
            ExactSolution::Zero(_) => Complex64::new(0.0, 0.0),
            ExactSolution::LineSoliton(s) => s.q(xi, eta, t),
            ExactSolution::Dromion(d) => d.q(xi, eta, t),
        }
    }

    pub fn q_t(&self, xi: f64, eta: f64, t: f64) -> Complex64 {
        match self {
            ExactSolution::Zero(_) => Complex64::new(0.0, 0.0),
            ExactSolution::LineSoliton(s) => s.q_t(xi, eta, t),
            ExactSolution::Dromion(d) => d.q_t(xi, eta, t),
        }
    }

    pub fn potentials(&self, xi: f64, eta: f64, t: f64) -> (f64, f64) {
        match self {
            ExactSolution::Zero(_) => (0.0, 0.0),
            ExactSolution::LineSoliton(s) => s.potentials(xi, eta, t),
            ExactSolution::Dromion(d) => d.potentials(xi, eta, t),
        }
    }

    /// `(u1(coord, t), u2(coord, t))`; the line soliton's potentials vanish
    /// in both inflow limits.
    pub fn boundary_potentials(&self, coord: f64, t: f64) -> (f64, f64) {
        match self {
            ExactSolution::Dromion(d) => d.boundary_potentials(coord, t),
            _ => (0.0, 0.0),
        }
    }

    pub fn snapshot(&self, grid: Grid, t: f64) -> FieldSnapshot {
        FieldSnapshot::from_fn(grid, t, |xi, eta| {
            let (u, v) = self.potentials(xi, eta, t);
            (self.q(xi, eta, t), u, v)
        })
    }

    /// Snapshot of the gauge-transformed fields `(q̂, Û, V̂)`.
    pub fn isospectral_snapshot(&self, grid: Grid, t: f64) -> FieldSnapshot {
        let c = *self.coeffs();
        FieldSnapshot::from_fn(grid, t, |xi, eta| {
            let (u, v) = self.potentials(xi, eta, t);
            gauge_to_isospectral(self.q(xi, eta, t), u, v, xi, eta, t, &c)
        })
    }

    /// `∂q̂/∂t` of the gauge-transformed solution.
    pub fn isospectral_q_t(&self, xi: f64, eta: f64, t: f64) -> Complex64 {
        let c = self.coeffs();
        let phase = gauge_phase(xi, eta, t, c);
        let q = self.q(xi, eta, t);
        (self.q_t(xi, eta, t) - I * (0.5 * c.a1 * c.a1) * q) * Complex64::from_polar(1.0, -phase)
    }
}

/// Phase `φ` of the gauge map `q̂ = q·e^{−iφ}`:
/// `φ = ¼ω₁(ξ² + η²) + ½a₁(ξ − η) + ½a₁²t`.
pub fn gauge_phase(xi: f64, eta: f64, t: f64, coeffs: &NonisoCoefficients) -> f64 {
    0.25 * coeffs.omega1 * (xi * xi + eta * eta) + 0.5 * coeffs.a1 * (xi - eta) + 0.5 * coeffs.a1 * coeffs.a1 * t
}

/// Maps a solution of the non-isospectral system onto the isospectral DSI
/// system:
///
/// * `q̂ = q·e^{−iφ}` with φ from [`gauge_phase`],
/// * `Û = U + ¼ω₁²η² − (½a₁ω₁ − ω₀)η`,
/// * `V̂ = V + ¼ω₁²ξ² + (½a₁ω₁ + ω₀)ξ`.
///
/// Terms that evaluate to exactly zero are skipped, so vanishing
/// coefficients give the bit-exact identity.
pub fn gauge_to_isospectral(
    q: Complex64,
    u: f64,
    v: f64,
    xi: f64,
    eta: f64,
    t: f64,
    coeffs: &NonisoCoefficients,
) -> (Complex64, f64, f64) {
    let (w0, w1, a1) = (coeffs.omega0, coeffs.omega1, coeffs.a1);
    let phase = gauge_phase(xi, eta, t, coeffs);
    let q_hat = if phase == 0.0 { q } else { q * Complex64::from_polar(1.0, -phase) };
    let du = 0.25 * w1 * w1 * eta * eta - (0.5 * a1 * w1 - w0) * eta;
    let dv = 0.25 * w1 * w1 * xi * xi + (0.5 * a1 * w1 + w0) * xi;
    let u_hat = if du == 0.0 { u } else { u + du };
    let v_hat = if dv == 0.0 { v } else { v + dv };
    (q_hat, u_hat, v_hat)
}

/// Location and value of the maximum of `f` over `grid`, refined by
/// repeated local zooming around the best node.
pub fn refine_maximum<F>(grid: &Grid, f: F) -> (f64, f64, f64)
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let values = grid.sample(&f);
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for ((i, j), &v) in values.indexed_iter() {
        if v > best.2 {
            best = (i, j, v);
        }
    }
    let (mut x0, mut y0, mut fbest) = (grid.coord(best.0), grid.coord(best.1), best.2);
    let mut span = grid.spacing();
    const STEPS: i32 = 10;
    for _ in 0..12 {
        let step = span / STEPS as f64;
        let (mut bx, mut by) = (x0, y0);
        for a in -STEPS..=STEPS {
            for b in -STEPS..=STEPS {
                let (x, y) = (x0 + a as f64 * step, y0 + b as f64 * step);
                let v = f(x, y);
                if v > fbest {
                    fbest = v;
                    bx = x;
                    by = y;
                }
            }
        }
        x0 = bx;
        y0 = by;
        span = 2.0 * step;
    }
    (x0, y0, fbest)
}
