//! Hirota bilinear layer: D-operators on pairs `(G, F)`, the bilinear
//! residuals of the reduced system, and the order-by-order checks of the
//! ε-expansion `G = εg₁ + ε³g₃ + …`, `F = 1 + ε²f₂ + ε⁴f₄ + …`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{DromionParams, LineSoliton};
use crate::model::{NonisoCoefficients, PhaseVariant, SpectralMode};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BilinearError {
    #[error("finite-difference step must be positive and finite, got {0}")]
    Step(f64),
    #[error("derivative orders (t={t}, xi={xi}, eta={eta}) exceed (1, 2, 2)")]
    UnsupportedOrder { t: u8, xi: u8, eta: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub xi: f64,
    pub eta: f64,
    pub t: f64,
}

impl Point {
    pub fn new(xi: f64, eta: f64, t: f64) -> Self {
        Self { xi, eta, t }
    }
}

/// Derivative orders `(∂_t, ∂_ξ, ∂_η)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Orders {
    pub t: u8,
    pub xi: u8,
    pub eta: u8,
}

impl Orders {
    pub const fn new(t: u8, xi: u8, eta: u8) -> Self {
        Self { t, xi, eta }
    }

    pub fn total(&self) -> u8 {
        self.t + self.xi + self.eta
    }

    fn check(&self) -> Result<(), BilinearError> {
        if self.t > 1 || self.xi > 2 || self.eta > 2 {
            return Err(BilinearError::UnsupportedOrder {
                t: self.t,
                xi: self.xi,
                eta: self.eta,
            });
        }
        Ok(())
    }
}

/// A smooth complex function of `(ξ, η, t)`.
pub trait SpaceTimeField: Send + Sync {
    fn value(&self, p: Point) -> Complex64;

    /// Analytic partial derivative, if available.
    fn partial(&self, _orders: Orders, _p: Point) -> Option<Complex64> {
        None
    }
}

impl<F> SpaceTimeField for F
where
    F: Fn(Point) -> Complex64 + Send + Sync,
{
    fn value(&self, p: Point) -> Complex64 {
        self(p)
    }
}

/// Exponent data of `exp(A(t)ξ + B(t)η + C(t))` and its time rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpCoeffs {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub a_t: Complex64,
    pub b_t: Complex64,
    pub c_t: Complex64,
}

impl ExpCoeffs {
    pub fn steady(a: Complex64, b: Complex64, c: Complex64) -> Self {
        Self {
            a,
            b,
            c,
            a_t: ZERO,
            b_t: ZERO,
            c_t: ZERO,
        }
    }
}

type CoeffFn = dyn Fn(f64) -> ExpCoeffs + Send + Sync;

/// One exponential term with time-dependent exponent.
#[derive(Clone)]
pub struct ExpTerm {
    coeffs: Arc<CoeffFn>,
}

impl ExpTerm {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> ExpCoeffs + Send + Sync + 'static,
    {
        Self { coeffs: Arc::new(f) }
    }

    /// `exp(aξ + bη + c)` with constant exponent data.
    pub fn steady(a: Complex64, b: Complex64, c: Complex64) -> Self {
        let e = ExpCoeffs::steady(a, b, c);
        Self::new(move |_| e)
    }

    fn partial(&self, o: Orders, p: Point) -> Complex64 {
        let e = (self.coeffs)(p.t);
        let ex = (e.a * p.xi + e.b * p.eta + e.c).exp();
        let an = e.a.powu(o.xi as u32);
        let bp = e.b.powu(o.eta as u32);
        if o.t == 0 {
            return an * bp * ex;
        }
        let mut factor = an * bp * (e.a_t * p.xi + e.b_t * p.eta + e.c_t);
        if o.xi > 0 {
            factor += e.a.powu(o.xi as u32 - 1) * (o.xi as f64) * e.a_t * bp;
        }
        if o.eta > 0 {
            factor += e.b.powu(o.eta as u32 - 1) * (o.eta as f64) * e.b_t * an;
        }
        factor * ex
    }
}

impl std::fmt::Debug for ExpTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ExpTerm")
    }
}

/// Finite sum of exponential terms with analytic derivatives of every order.
/// The empty sum is the zero field.
#[derive(Debug, Clone, Default)]
pub struct ExpSum {
    terms: Vec<ExpTerm>,
}

impl ExpSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        if c == ZERO {
            return Self::zero();
        }
        Self::from_terms(vec![ExpTerm::steady(ZERO, ZERO, c.ln())])
    }

    pub fn from_terms(terms: Vec<ExpTerm>) -> Self {
        Self { terms }
    }

    pub fn push(&mut self, term: ExpTerm) {
        self.terms.push(term);
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl SpaceTimeField for ExpSum {
    fn value(&self, p: Point) -> Complex64 {
        self.partial(Orders::new(0, 0, 0), p).unwrap_or(ZERO)
    }

    fn partial(&self, orders: Orders, p: Point) -> Option<Complex64> {
        Some(self.terms.iter().map(|t| t.partial(orders, p)).sum())
    }
}

/// The pair `(G, F)` with `q = G/F`. When `analytic` is false, partials
/// are always taken by finite differences even if the fields supply them.
#[derive(Clone)]
pub struct BilinearPair {
    pub g: Arc<dyn SpaceTimeField>,
    pub f: Arc<dyn SpaceTimeField>,
    pub analytic: bool,
}

impl BilinearPair {
    pub fn new(g: Arc<dyn SpaceTimeField>, f: Arc<dyn SpaceTimeField>) -> Self {
        Self { g, f, analytic: true }
    }

    pub fn with_analytic(mut self, analytic: bool) -> Self {
        self.analytic = analytic;
        self
    }

    /// `G ≡ 0`, `F ≡ 1`.
    pub fn zero() -> Self {
        Self::new(Arc::new(ExpSum::zero()), Arc::new(ExpSum::one()))
    }

    pub fn line_soliton(s: &LineSoliton) -> Self {
        let e = LineSolitonExpansion::new(s);
        let mut f = ExpSum::one();
        f.push(e.f2);
        Self::new(Arc::new(ExpSum::from_terms(vec![e.g1])), Arc::new(f))
    }

    pub fn dromion(d: &DromionParams) -> Self {
        let terms = dromion_terms(d);
        let g = ExpSum::from_terms(vec![terms.g]);
        let f = ExpSum::from_terms(terms.f);
        Self::new(Arc::new(g), Arc::new(f))
    }
}

/// `FD` weights for one axis: `(offset, weight)` scaled by `1/h^order`.
fn stencil(order: u8, h: f64) -> Vec<(f64, f64)> {
    match order {
        0 => vec![(0.0, 1.0)],
        1 => [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)]
            .iter()
            .map(|&(o, w)| (o * h, w / (12.0 * h)))
            .collect(),
        _ => [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)]
            .iter()
            .map(|&(o, w)| (o * h, w / (12.0 * h * h)))
            .collect(),
    }
}

fn fd_partial(f: &dyn SpaceTimeField, o: Orders, p: Point, h: f64) -> Complex64 {
    let (st, sx, se) = (stencil(o.t, h), stencil(o.xi, h), stencil(o.eta, h));
    let mut acc = ZERO;
    for &(dt, wt) in &st {
        for &(dx, wx) in &sx {
            for &(de, we) in &se {
                acc += f.value(Point::new(p.xi + dx, p.eta + de, p.t + dt)) * (wt * wx * we);
            }
        }
    }
    acc
}

fn partial(f: &dyn SpaceTimeField, o: Orders, p: Point, step: f64, analytic: bool) -> Complex64 {
    if o.total() == 0 {
        return f.value(p);
    }
    if analytic {
        if let Some(v) = f.partial(o, p) {
            return v;
        }
    }
    fd_partial(f, o, p, step)
}

fn binomial(n: u8, k: u8) -> f64 {
    match (n, k) {
        (_, 0) => 1.0,
        (n, k) if k == n => 1.0,
        (2, 1) => 2.0,
        _ => unreachable!("orders are at most 2"),
    }
}

fn check_step(step: f64) -> Result<(), BilinearError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(BilinearError::Step(step));
    }
    Ok(())
}

/// `D_t^m D_ξ^n D_η^p G·F` at `point`, expanded by the Leibniz rule
/// `Σ C(m,i)C(n,j)C(p,k)(−1)^{(m−i)+(n−j)+(p−k)} ∂^{(i,j,k)}G·∂^{(m−i,n−j,p−k)}F`.
pub fn hirota_d(orders: Orders, pair: &BilinearPair, point: Point, step: f64) -> Result<Complex64, BilinearError> {
    check_step(step)?;
    orders.check()?;
    Ok(hirota_unchecked(orders, pair.g.as_ref(), pair.f.as_ref(), point, step, pair.analytic))
}

fn hirota_unchecked(
    o: Orders,
    g: &dyn SpaceTimeField,
    f: &dyn SpaceTimeField,
    p: Point,
    step: f64,
    analytic: bool,
) -> Complex64 {
    let term = |a: Orders| {
        let rest = Orders::new(o.t - a.t, o.xi - a.xi, o.eta - a.eta);
        let sign = if rest.total().is_multiple_of(2) { 1.0 } else { -1.0 };
        let c = binomial(o.t, a.t) * binomial(o.xi, a.xi) * binomial(o.eta, a.eta) * sign;
        let gp = partial(g, a, p, step, analytic);
        if gp == ZERO {
            return ZERO;
        }
        gp * partial(f, rest, p, step, analytic) * c
    };
    // each term is summed with its mirror first, so D^odd F·F is exactly zero
    let mut acc = ZERO;
    for i in 0..=o.t {
        for j in 0..=o.xi {
            for k in 0..=o.eta {
                let a = (i, j, k);
                let b = (o.t - i, o.xi - j, o.eta - k);
                if a < b {
                    acc += term(Orders::new(i, j, k)) + term(Orders::new(b.0, b.1, b.2));
                } else if a == b {
                    acc += term(Orders::new(i, j, k));
                }
            }
        }
    }
    acc
}

/// The evolution operator
/// `[iD_t + D_ξ² + D_η² − iω₁(ξD_ξ + ηD_η) − ia₁(D_ξ − D_η) + (ω₀(ξ+η) − iω₁)] g·f`.
fn evolution_operator(
    g: &dyn SpaceTimeField,
    f: &dyn SpaceTimeField,
    p: Point,
    c: &NonisoCoefficients,
    step: f64,
    analytic: bool,
) -> Complex64 {
    let d = |o: Orders| hirota_unchecked(o, g, f, p, step, analytic);
    let dt = d(Orders::new(1, 0, 0));
    let dxx = d(Orders::new(0, 2, 0));
    let dee = d(Orders::new(0, 0, 2));
    let dx = d(Orders::new(0, 1, 0));
    let de = d(Orders::new(0, 0, 1));
    let gf = g.value(p) * f.value(p);
    I * dt + dxx + dee - I * c.omega1 * (dx * p.xi + de * p.eta) - I * c.a1 * (dx - de)
        + (Complex64::new(c.omega0 * (p.xi + p.eta), 0.0) - I * c.omega1) * gf
}

/// Evolution-equation bilinear residual of `pair` at `point`.
pub fn residual_6a(
    pair: &BilinearPair,
    point: Point,
    coeffs: &NonisoCoefficients,
    step: f64,
) -> Result<Complex64, BilinearError> {
    check_step(step)?;
    Ok(evolution_operator(pair.g.as_ref(), pair.f.as_ref(), point, coeffs, step, pair.analytic))
}

/// Constraint residual `2D_ξD_η F·F − |G|²` at `point` (real part; the
/// imaginary part vanishes for real `F`).
pub fn residual_6b(pair: &BilinearPair, point: Point, step: f64) -> Result<f64, BilinearError> {
    check_step(step)?;
    let f = pair.f.as_ref();
    let dd = hirota_unchecked(Orders::new(0, 1, 1), f, f, point, step, pair.analytic);
    Ok(2.0 * dd.re - pair.g.value(point).norm_sqr())
}

/// Sample lattice `nodes × nodes × times` on `[−L, L]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub half_width: f64,
    pub nodes: usize,
    pub times: Vec<f64>,
}

impl Default for Lattice {
    fn default() -> Self {
        Self {
            half_width: 2.0,
            nodes: 5,
            times: vec![-0.5, 0.0, 0.2],
        }
    }
}

impl Lattice {
    pub fn points(&self) -> Vec<Point> {
        let coord = |i: usize| {
            if self.nodes == 1 {
                0.0
            } else {
                -self.half_width + 2.0 * self.half_width * i as f64 / (self.nodes - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.nodes * self.nodes * self.times.len());
        for &t in &self.times {
            for i in 0..self.nodes {
                for j in 0..self.nodes {
                    out.push(Point::new(coord(i), coord(j), t));
                }
            }
        }
        out
    }
}

/// Largest magnitude of `f` over the lattice and where it occurs.
pub fn lattice_max<F>(lattice: &Lattice, f: F) -> Result<(f64, Point), BilinearError>
where
    F: Fn(Point) -> Result<f64, BilinearError> + Sync,
{
    let pts = lattice.points();
    let vals: Result<Vec<(f64, Point)>, BilinearError> = pts.par_iter().map(|&p| f(p).map(|v| (v.abs(), p))).collect();
    Ok(vals?
        .into_iter()
        .fold((0.0, pts.first().copied().unwrap_or(Point::new(0.0, 0.0, 0.0))), |acc, x| {
            if x.0 > acc.0 || x.0.is_nan() {
                x
            } else {
                acc
            }
        }))
}

/// Default FD step `1e-3 / max(kR, lR)` at `t = 0`.
pub fn default_step(mode: &SpectralMode) -> f64 {
    1e-3 / mode.evolve_k(0.0).re.max(mode.evolve_l(0.0).re)
}

/// Terms `g₁, g₃, …` and `f₀ = 1, f₂, f₄, …` of the ε-expansion, keyed by
/// their power of ε.
#[derive(Clone)]
pub struct Expansion {
    pub g: Vec<(usize, Arc<dyn SpaceTimeField>)>,
    pub f: Vec<(usize, Arc<dyn SpaceTimeField>)>,
    pub coeffs: NonisoCoefficients,
}

impl Expansion {
    /// One-soliton series `g₁ = e^χ`, `f₂ = e^{χ+χ*+2ψ}`, higher terms zero.
    pub fn line_soliton(s: &LineSoliton) -> Self {
        let e = LineSolitonExpansion::new(s);
        Self {
            g: vec![(1, Arc::new(ExpSum::from_terms(vec![e.g1])))],
            f: vec![
                (0, Arc::new(ExpSum::one())),
                (2, Arc::new(ExpSum::from_terms(vec![e.f2]))),
            ],
            coeffs: *s.mode().coeffs(),
        }
    }

    /// Dromion series normalized by δ:
    /// `g₁ = ρe^{χ₁+χ₂}/δ`, `f₂ = (αa + βb)/δ + ((δγ − αβ)/δ²)ab`,
    /// `f₄ = (αβ/δ²)ab` with `a = e^{χ₁+χ₁*}`, `b = e^{χ₂+χ₂*}`.
    pub fn dromion(d: &DromionParams) -> Self {
        let mode = *d.mode();
        let (al, be, ga, de) = (d.alpha(), d.beta(), d.gamma(), d.delta());
        let rho0 = d.rho0();
        let w1 = d.coeffs().omega1;
        let ln = |x: f64| Complex64::new(x.ln(), 0.0);
        let g1 = ExpTerm::new(move |t| {
            let mut e = product_exponent(&mode, t);
            e.c += ln(rho0 / de) + w1 * t;
            e.c_t += w1;
            e
        });
        let mut f2 = ExpSum::zero();
        if al > 0.0 {
            f2.push(real_exponent_term(mode, true, false, ln(al / de)));
        }
        if be > 0.0 {
            f2.push(real_exponent_term(mode, false, true, ln(be / de)));
        }
        f2.push(real_exponent_term(mode, true, true, ln((de * ga - al * be) / (de * de))));
        let mut f = vec![(0, Arc::new(ExpSum::one()) as Arc<dyn SpaceTimeField>), (2, Arc::new(f2))];
        if al * be > 0.0 {
            f.push((
                4,
                Arc::new(ExpSum::from_terms(vec![real_exponent_term(mode, true, true, ln(al * be / (de * de)))])),
            ));
        }
        Self {
            g: vec![(1, Arc::new(ExpSum::from_terms(vec![g1])))],
            f,
            coeffs: *d.coeffs(),
        }
    }

    pub fn max_order(&self) -> usize {
        let g = self.g.iter().map(|x| x.0).max().unwrap_or(0);
        let f = self.f.iter().map(|x| x.0).max().unwrap_or(0);
        2 * g.max(f)
    }

    /// Residual of the order-`n` equation at `p`: for odd `n` the
    /// evolution operator applied to `Σ g_i·f_j`, for even `n`
    /// `Σ 2D_ξD_η f_i·f_j − Σ g_i g_j*`, both over `i + j = n`.
    pub fn order_residual(&self, n: usize, p: Point, step: f64, analytic: bool) -> Complex64 {
        let mut acc = ZERO;
        if n % 2 == 1 {
            for (i, g) in &self.g {
                for (j, f) in &self.f {
                    if i + j == n {
                        acc += evolution_operator(g.as_ref(), f.as_ref(), p, &self.coeffs, step, analytic);
                    }
                }
            }
        } else {
            for (i, fi) in &self.f {
                for (j, fj) in &self.f {
                    if i + j == n {
                        acc += hirota_unchecked(Orders::new(0, 1, 1), fi.as_ref(), fj.as_ref(), p, step, analytic) * 2.0;
                    }
                }
            }
            for (i, gi) in &self.g {
                for (j, gj) in &self.g {
                    if i + j == n {
                        acc -= gi.value(p) * gj.value(p).conj();
                    }
                }
            }
        }
        acc
    }
}

/// Max residual of one ε-order over the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderResidual {
    pub order: usize,
    pub max_residual: f64,
    pub worst: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonReport {
    pub orders: Vec<OrderResidual>,
    pub tolerance: f64,
}

impl EpsilonReport {
    pub fn passed(&self) -> bool {
        self.orders.iter().all(|o| o.max_residual <= self.tolerance)
    }

    /// The order with the largest residual.
    pub fn worst(&self) -> Option<&OrderResidual> {
        self.orders
            .iter()
            .max_by(|a, b| a.max_residual.partial_cmp(&b.max_residual).unwrap_or(std::cmp::Ordering::Greater))
    }

    pub fn order(&self, n: usize) -> Option<&OrderResidual> {
        self.orders.iter().find(|o| o.order == n)
    }
}

/// Evaluates every order `1..=max_order` of the expansion on the lattice
/// with analytic derivatives. Nonvanishing sources are reported, not raised.
pub fn epsilon_order_check(expansion: &Expansion, lattice: &Lattice, tolerance: f64) -> EpsilonReport {
    let orders = (1..=expansion.max_order())
        .map(|n| {
            let (max_residual, worst) =
                lattice_max(lattice, |p| Ok(expansion.order_residual(n, p, 1e-3, true).norm())).expect("analytic evaluation");
            OrderResidual {
                order: n,
                max_residual,
                worst,
            }
        })
        .collect();
    EpsilonReport { orders, tolerance }
}

struct LineSolitonExpansion {
    g1: ExpTerm,
    f2: ExpTerm,
}

impl LineSolitonExpansion {
    fn new(s: &LineSoliton) -> Self {
        let mode = *s.mode();
        let g1 = ExpTerm::new(move |t| ExpCoeffs {
            a: mode.evolve_k(t),
            b: mode.evolve_l(t),
            c: mode.accumulated_phase(t, PhaseVariant::FullPlaneWave),
            a_t: mode.k_rate(t),
            b_t: mode.l_rate(t),
            c_t: mode.omega(t, PhaseVariant::FullPlaneWave),
        });
        let sol = *s;
        let f2 = ExpTerm::new(move |t| {
            let re2 = |z: Complex64| Complex64::new(2.0 * z.re, 0.0);
            ExpCoeffs {
                a: re2(mode.evolve_k(t)),
                b: re2(mode.evolve_l(t)),
                c: re2(mode.accumulated_phase(t, PhaseVariant::FullPlaneWave)) + 2.0 * sol.psi(t),
                a_t: re2(mode.k_rate(t)),
                b_t: re2(mode.l_rate(t)),
                c_t: re2(mode.omega(t, PhaseVariant::FullPlaneWave)) + 2.0 * sol.psi_rate(t),
            }
        });
        Self { g1, f2 }
    }
}

/// Exponent of `e^{χ₁+χ₂}`.
fn product_exponent(mode: &SpectralMode, t: f64) -> ExpCoeffs {
    ExpCoeffs {
        a: mode.evolve_k(t),
        b: mode.evolve_l(t),
        c: mode.accumulated_phase(t, PhaseVariant::DromionXi) + mode.accumulated_phase(t, PhaseVariant::DromionEta),
        a_t: mode.k_rate(t),
        b_t: mode.l_rate(t),
        c_t: mode.omega(t, PhaseVariant::DromionXi) + mode.omega(t, PhaseVariant::DromionEta),
    }
}

/// `e^{c0 + [χ₁+χ₁*] + [χ₂+χ₂*]}` with each bracket included on request.
fn real_exponent_term(mode: SpectralMode, xi: bool, eta: bool, c0: Complex64) -> ExpTerm {
    ExpTerm::new(move |t| {
        let re2 = |z: Complex64| Complex64::new(2.0 * z.re, 0.0);
        let mut e = ExpCoeffs::steady(ZERO, ZERO, c0);
        if xi {
            e.a = re2(mode.evolve_k(t));
            e.a_t = re2(mode.k_rate(t));
            e.c += re2(mode.accumulated_phase(t, PhaseVariant::DromionXi));
            e.c_t += re2(mode.omega(t, PhaseVariant::DromionXi));
        }
        if eta {
            e.b = re2(mode.evolve_l(t));
            e.b_t = re2(mode.l_rate(t));
            e.c += re2(mode.accumulated_phase(t, PhaseVariant::DromionEta));
            e.c_t += re2(mode.omega(t, PhaseVariant::DromionEta));
        }
        e
    })
}

struct DromionTerms {
    g: ExpTerm,
    f: Vec<ExpTerm>,
}

fn dromion_terms(d: &DromionParams) -> DromionTerms {
    let mode = *d.mode();
    let rho0 = d.rho0();
    let w1 = d.coeffs().omega1;
    let ln = |x: f64| Complex64::new(x.ln(), 0.0);
    let g = ExpTerm::new(move |t| {
        let mut e = product_exponent(&mode, t);
        e.c += ln(rho0) + w1 * t;
        e.c_t += w1;
        e
    });
    let mut f = vec![ExpTerm::steady(ZERO, ZERO, ln(d.delta()))];
    if d.alpha() > 0.0 {
        f.push(real_exponent_term(mode, true, false, ln(d.alpha())));
    }
    if d.beta() > 0.0 {
        f.push(real_exponent_term(mode, false, true, ln(d.beta())));
    }
    f.push(real_exponent_term(mode, true, true, ln(d.gamma())));
    DromionTerms { g, f }
}
