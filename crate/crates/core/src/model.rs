//! System coefficients and the scalar time dynamics every other module builds
//! on: evolution of the spectral parameters `k(t)`, `l(t)`, the dispersion
//! relation and the closed-form accumulated phases `∫₀ᵗ Ω(s) ds`.
//!
//! Each spectral parameter obeys `i p_t − i ω₁ p = −ω₀`, i.e.
//! `p_t = ω₁ p + i ω₀`. Its real part grows as `e^{ω₁t}` and its imaginary
//! part relaxes towards `−ω₀/ω₁`. The constants stored here are the
//! integration constants of that solution, not the values at `t = 0`
//! (see [`SpectralParameter::from_initial_value`]).

use num_complex::Complex64;
use thiserror::Error;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("degenerate dromion amplitude: delta*gamma - alpha*beta = {0} must be positive")]
    DegenerateAmplitude(f64),
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64, ParamError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ParamError::NonFinite { name, value })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64, ParamError> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(ParamError::NotPositive { name, value })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64, ParamError> {
    finite(name, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(ParamError::Negative { name, value })
    }
}

/// Real constants of the non-isospectral system.
///
/// `a0` does not enter the reduced equations; it is kept only to emit the
/// original-variable field `q·e^{−2i a₀ t}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NonisoCoefficients {
    /// Inhomogeneity strength ω₀.
    pub omega0: f64,
    /// Dilation / growth rate ω₁ (1/time).
    pub omega1: f64,
    /// Drift coefficient a₁.
    pub a1: f64,
    /// Pure phase constant a₀.
    pub a0: f64,
}

impl NonisoCoefficients {
    pub fn new(omega0: f64, omega1: f64, a1: f64, a0: f64) -> Result<Self, ParamError> {
        Ok(Self {
            omega0: finite("omega0", omega0)?,
            omega1: finite("omega1", omega1)?,
            a1: finite("a1", a1)?,
            a0: finite("a0", a0)?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.omega0 == 0.0 && self.omega1 == 0.0 && self.a1 == 0.0 && self.a0 == 0.0
    }

    /// Phase factor `e^{−2i a₀ t}` mapping the reduced field back to the
    /// original variable of the unreduced equation.
    pub fn original_variable_factor(&self, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * self.a0 * t)
    }
}

/// `∫₀ᵗ e^{c s} ds`, exact including the `c = 0` limit.
fn exp_integral(c: f64, t: f64) -> f64 {
    if c == 0.0 {
        t
    } else {
        (c * t).exp_m1() / c
    }
}

/// One spectral parameter `p(t)` solving `p_t = rate·p + i·drift`.
///
/// For `rate ≠ 0`: `p(t) = (re0 + i im0)·e^{rate·t} − i·drift/rate`.
/// For `rate = 0` the equation is solved directly: `p(t) = re0 + i(im0 + drift·t)`.
/// The branch is selected by exact equality on the rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParameter {
    re0: f64,
    im0: f64,
    rate: f64,
    drift: f64,
}

impl SpectralParameter {
    pub fn new(re0: f64, im0: f64, rate: f64, drift: f64) -> Self {
        Self {
            re0,
            im0,
            rate,
            drift,
        }
    }

    /// Builds the parameter whose value at `t = 0` is `value`.
    pub fn from_initial_value(value: Complex64, rate: f64, drift: f64) -> Self {
        let im0 = if rate == 0.0 {
            value.im
        } else {
            value.im + drift / rate
        };
        Self::new(value.re, im0, rate, drift)
    }

    /// Integration constant `re0 + i·im0`.
    pub fn constant(&self) -> Complex64 {
        Complex64::new(self.re0, self.im0)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn at(&self, t: f64) -> Complex64 {
        if self.rate == 0.0 {
            Complex64::new(self.re0, self.im0 + self.drift * t)
        } else {
            let g = (self.rate * t).exp();
            Complex64::new(self.re0 * g, self.im0 * g - self.drift / self.rate)
        }
    }

    pub fn time_derivative(&self, t: f64) -> Complex64 {
        self.at(t) * self.rate + I * self.drift
    }

    /// `∫₀ᵗ p(s) ds`.
    pub fn integral(&self, t: f64) -> Complex64 {
        let c = self.constant();
        if self.rate == 0.0 {
            c * t + I * (0.5 * self.drift * t * t)
        } else {
            let shift = self.drift / self.rate;
            c * exp_integral(self.rate, t) - I * (shift * t)
        }
    }

    /// `∫₀ᵗ p(s)² ds`.
    pub fn integral_of_square(&self, t: f64) -> Complex64 {
        let c = self.constant();
        if self.rate == 0.0 {
            let w = self.drift;
            c * c * t + I * c * (w * t * t) - w * w * t * t * t / 3.0
        } else {
            let shift = self.drift / self.rate;
            c * c * exp_integral(2.0 * self.rate, t) - I * c * (2.0 * shift) * exp_integral(self.rate, t)
                - shift * shift * t
        }
    }

    /// Same trajectory with the time origin moved to `t0`: `p'(s) = p(t0 + s)`.
    pub fn rebased(&self, t0: f64) -> Self {
        if self.rate == 0.0 {
            Self::new(self.re0, self.im0 + self.drift * t0, 0.0, self.drift)
        } else {
            let g = (self.rate * t0).exp();
            Self::new(self.re0 * g, self.im0 * g, self.rate, self.drift)
        }
    }
}

/// Which phase is assembled: the full plane-wave phase
/// `χ = kξ + lη + ∫Ω`, or one of the two factored dromion phases
/// `χ₁ = kξ + ∫Ω₁`, `χ₂ = lη + ∫Ω₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseVariant {
    FullPlaneWave,
    DromionXi,
    DromionEta,
}

/// Value of a phase `χ` at one spacetime point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState(pub Complex64);

impl PhaseState {
    pub fn chi(&self) -> Complex64 {
        self.0
    }
    pub fn re(&self) -> f64 {
        self.0.re
    }
    pub fn im(&self) -> f64 {
        self.0.im
    }
}

/// Dispersion relation: the unique `Ω` solving
/// `iΩ + k² + l² − i a₁(k − l) − i ω₁ = 0`.
pub fn dispersion(k: Complex64, l: Complex64, coeffs: &NonisoCoefficients) -> Complex64 {
    I * (k * k + l * l) + (k - l) * coeffs.a1 + coeffs.omega1
}

/// A pair of spectral parameters `(k(t), l(t))` with their coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMode {
    k: SpectralParameter,
    l: SpectralParameter,
    coeffs: NonisoCoefficients,
}

impl SpectralMode {
    /// Takes the integration constants `(kR0, kI0, lR0, lI0)`.
    /// `kR0` and `lR0` must be positive so that `16·kR·lR > 0`.
    pub fn new(
        k_re0: f64,
        k_im0: f64,
        l_re0: f64,
        l_im0: f64,
        coeffs: NonisoCoefficients,
    ) -> Result<Self, ParamError> {
        positive("k_re0", k_re0)?;
        finite("k_im0", k_im0)?;
        positive("l_re0", l_re0)?;
        finite("l_im0", l_im0)?;
        let coeffs = NonisoCoefficients::new(coeffs.omega0, coeffs.omega1, coeffs.a1, coeffs.a0)?;
        Ok(Self {
            k: SpectralParameter::new(k_re0, k_im0, coeffs.omega1, coeffs.omega0),
            l: SpectralParameter::new(l_re0, l_im0, coeffs.omega1, coeffs.omega0),
            coeffs,
        })
    }

    /// Builds the mode from the values `k(0)`, `l(0)` instead of the
    /// integration constants.
    pub fn from_initial_values(
        k0: Complex64,
        l0: Complex64,
        coeffs: NonisoCoefficients,
    ) -> Result<Self, ParamError> {
        let k = SpectralParameter::from_initial_value(k0, coeffs.omega1, coeffs.omega0);
        let l = SpectralParameter::from_initial_value(l0, coeffs.omega1, coeffs.omega0);
        Self::new(k.re0, k.im0, l.re0, l.im0, coeffs)
    }

    /// Copy of this mode whose `l` evolves with growth rate `l_rate`
    /// instead of ω₁. The result no longer solves the spectral evolution
    /// equation; it exists to build negative controls for the truncation
    /// checks.
    pub fn with_detuned_l_rate(&self, l_rate: f64) -> Self {
        let mut out = *self;
        out.l = SpectralParameter::new(self.l.re0, self.l.im0, l_rate, self.coeffs.omega0);
        out
    }

    pub fn coeffs(&self) -> &NonisoCoefficients {
        &self.coeffs
    }

    pub fn k_parameter(&self) -> &SpectralParameter {
        &self.k
    }

    pub fn l_parameter(&self) -> &SpectralParameter {
        &self.l
    }

    /// `k(t) = kR0·e^{ω₁t} + i(kI0·e^{ω₁t} − ω₀/ω₁)`.
    pub fn evolve_k(&self, t: f64) -> Complex64 {
        self.k.at(t)
    }

    pub fn evolve_l(&self, t: f64) -> Complex64 {
        self.l.at(t)
    }

    pub fn k_rate(&self, t: f64) -> Complex64 {
        self.k.time_derivative(t)
    }

    pub fn l_rate(&self, t: f64) -> Complex64 {
        self.l.time_derivative(t)
    }

    /// `kR(t)·lR(t)`; equals `kR0·lR0·e^{2ω₁t}` for an undetuned mode.
    pub fn re_product(&self, t: f64) -> f64 {
        self.evolve_k(t).re * self.evolve_l(t).re
    }

    /// Integrand `Ω(t)` of the accumulated phase for the given variant.
    pub fn omega(&self, t: f64, variant: PhaseVariant) -> Complex64 {
        let a1 = self.coeffs.a1;
        match variant {
            PhaseVariant::FullPlaneWave => dispersion(self.evolve_k(t), self.evolve_l(t), &self.coeffs),
            PhaseVariant::DromionXi => {
                let k = self.evolve_k(t);
                I * k * k + k * a1
            }
            PhaseVariant::DromionEta => {
                let l = self.evolve_l(t);
                I * l * l - l * a1
            }
        }
    }

    /// Closed-form `∫₀ᵗ Ω(s) ds`.
    pub fn accumulated_phase(&self, t: f64, variant: PhaseVariant) -> Complex64 {
        let a1 = self.coeffs.a1;
        match variant {
            PhaseVariant::FullPlaneWave => {
                I * (self.k.integral_of_square(t) + self.l.integral_of_square(t))
                    + (self.k.integral(t) - self.l.integral(t)) * a1
                    + self.coeffs.omega1 * t
            }
            PhaseVariant::DromionXi => I * self.k.integral_of_square(t) + self.k.integral(t) * a1,
            PhaseVariant::DromionEta => I * self.l.integral_of_square(t) - self.l.integral(t) * a1,
        }
    }

    pub fn chi(&self, xi: f64, eta: f64, t: f64, variant: PhaseVariant) -> PhaseState {
        let phase = self.accumulated_phase(t, variant);
        let chi = match variant {
            PhaseVariant::FullPlaneWave => self.evolve_k(t) * xi + self.evolve_l(t) * eta + phase,
            PhaseVariant::DromionXi => self.evolve_k(t) * xi + phase,
            PhaseVariant::DromionEta => self.evolve_l(t) * eta + phase,
        };
        PhaseState(chi)
    }

    /// Mode with the time origin moved to `t0`, so that
    /// `rebased(t0).evolve_k(s) == evolve_k(t0 + s)`.
    pub fn rebased(&self, t0: f64) -> Self {
        Self {
            k: self.k.rebased(t0),
            l: self.l.rebased(t0),
            coeffs: self.coeffs,
        }
    }
}
