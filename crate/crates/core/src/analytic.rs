//! Closed-form two-Gaussian superposition evolving under the scaled free
//! Schrödinger equation (Planck constant `hbar * sqrt(eps)`).
//!
//! Used as the accuracy oracle for the transition-equation solver: the
//! solver's density must match [`density_at`] for every `eps > 0`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fringe::{self, Extremum, Visibility};
use crate::scalar::Real;
use crate::wavefield::{ComplexField, DensityProfile, Grid1D, Provenance, SimParams};

/// Boundary amplitude allowed relative to the peak of the initial state.
pub const BOUNDARY_AMPLITUDE_REL: f64 = 1e-10;

/// Coarsest spacing accepted for the initial state, in units of sigma.
pub const MAX_DX_OVER_SIGMA: f64 = 0.5;

/// Two Gaussians of rms width `sigma` centred at `±d`.
#[derive(Debug, Clone)]
pub struct TwoGaussianConfig<T> {
    pub d: T,
    pub sigma: T,
    pub params: SimParams<T>,
}

impl<T: Real> TwoGaussianConfig<T> {
    pub fn new(d: T, sigma: T, params: SimParams<T>) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
        }
        if !(d >= T::zero()) || !d.is_finite() {
            return Err(Error::InvalidParams(format!("d must be nonnegative, got {d}")));
        }
        Ok(Self { d, sigma, params })
    }

    /// Same packets with a different degree of quantumness.
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        Ok(Self {
            d: self.d,
            sigma: self.sigma,
            params: self.params.clone().with_epsilon(epsilon)?,
        })
    }

    /// Half-extent a grid needs for the initial boundary amplitude to fall
    /// below [`BOUNDARY_AMPLITUDE_REL`] of the peak.
    pub fn required_half_extent(&self) -> T {
        let decades = T::lit(BOUNDARY_AMPLITUDE_REL).recip().ln();
        self.d + T::lit(2.0) * self.sigma * decades.sqrt()
    }
}

/// Time-dependent widths and normalization of the analytic state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticState<T> {
    pub time: T,
    /// `sigma^2 + i hbar_s t / 2m`.
    pub a_t_squared: Complex<T>,
    /// `hbar_s^2 t^2 / (4 m^2 sigma^2) + sigma^2`.
    pub sigma_t_squared: T,
    pub n0: T,
    d: T,
    sigma: T,
    mass: T,
    /// `hbar_s * t`; the state depends on eps and t only through this.
    reduced_time: T,
}

impl<T: Real> AnalyticState<T> {
    pub fn at(config: &TwoGaussianConfig<T>, t: T) -> Result<Self> {
        if !(t >= T::zero()) || !t.is_finite() {
            return Err(Error::InvalidTime(format!("t must be nonnegative, got {t}")));
        }
        let reduced_time = config.params.hbar_scaled() * t;
        Ok(Self::from_reduced_time(config, t, reduced_time))
    }

    fn from_reduced_time(config: &TwoGaussianConfig<T>, time: T, reduced_time: T) -> Self {
        let sigma = config.sigma;
        let m = config.params.mass();
        let two = T::lit(2.0);
        let sigma2 = sigma * sigma;
        let a_t_squared = Complex::new(sigma2, reduced_time / (two * m));
        let sigma_t_squared = reduced_time * reduced_time / (T::lit(4.0) * m * m * sigma2) + sigma2;
        Self {
            time,
            a_t_squared,
            sigma_t_squared,
            n0: normalization_constant(config),
            d: config.d,
            sigma,
            mass: m,
            reduced_time,
        }
    }

    pub fn sigma_t(&self) -> T {
        self.sigma_t_squared.sqrt()
    }

    /// Wave function at `x`.
    pub fn psi(&self, x: T) -> Complex<T> {
        let quarter_inv = (self.a_t_squared * T::lit(4.0)).inv();
        let prefactor = Complex::new(self.sigma, T::zero()) / self.a_t_squared.sqrt() * self.n0.sqrt();
        let (l, r) = (x - self.d, x + self.d);
        let g1 = (-quarter_inv * (l * l)).exp();
        let g2 = (-quarter_inv * (r * r)).exp();
        prefactor * (g1 + g2)
    }

    /// Density at `x`, envelope minus interference term.
    pub fn density(&self, x: T) -> T {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let s2 = self.sigma_t_squared;
        let d = self.d;
        let e1 = (-(x - d) * (x - d) / (four * s2)).exp();
        let e2 = (-(x + d) * (x + d) / (four * s2)).exp();
        let cross = (-(x * x + d * d) / (two * s2)).exp();
        let phase = self.reduced_time * x * d / (four * self.mass * self.sigma * self.sigma * s2);
        let sin = phase.sin();
        let rho = self.n0 * self.sigma / s2.sqrt() * ((e1 + e2) * (e1 + e2) - four * cross * sin * sin);
        rho.max(T::zero())
    }

    /// Spacing between neighbouring fringes; infinite before any phase
    /// difference builds up.
    pub fn fringe_spacing(&self) -> T {
        let k = self.reduced_time * self.d
            / (T::lit(2.0) * self.mass * self.sigma * self.sigma * self.sigma_t_squared);
        if k > T::zero() {
            T::TAU() / k
        } else {
            T::infinity()
        }
    }
}

/// `N0 = [2 sqrt(2 pi) sigma (exp(-d^2 / 2 sigma^2) + 1)]^-1`.
pub fn normalization_constant<T: Real>(config: &TwoGaussianConfig<T>) -> T {
    let two = T::lit(2.0);
    let sigma = config.sigma;
    let overlap = (-config.d * config.d / (two * sigma * sigma)).exp();
    (two * (two * T::PI()).sqrt() * sigma * (overlap + T::one())).recip()
}

/// Real, even initial superposition sampled on `grid`.
///
/// Fails when the grid is too short for the tails to vanish at the
/// boundaries, or too coarse to resolve a single packet.
pub fn initial_state<T: Real>(config: &TwoGaussianConfig<T>, grid: &Grid1D<T>) -> Result<ComplexField<T>> {
    let required = config.required_half_extent();
    if grid.dx() > T::lit(MAX_DX_OVER_SIGMA) * config.sigma {
        return Err(Error::GridTooNarrow {
            required_extent: required.as_f64(),
            detail: format!(
                "{} points give dx = {:.4}, coarser than {} sigma",
                grid.len(),
                grid.dx(),
                MAX_DX_OVER_SIGMA
            ),
        });
    }
    let amp = (normalization_constant(config)).sqrt();
    let four_s2 = T::lit(4.0) * config.sigma * config.sigma;
    let d = config.d;
    let value = |x: T| amp * ((-(x - d) * (x - d) / four_s2).exp() + (-(x + d) * (x + d) / four_s2).exp());
    let peak = value(d).max(value(T::zero()));
    let edge = value(grid.x_min()).max(value(grid.x_max()));
    if edge > T::lit(BOUNDARY_AMPLITUDE_REL) * peak {
        return Err(Error::GridTooNarrow {
            required_extent: required.as_f64(),
            detail: format!(
                "boundary amplitude {:.3e} exceeds {:.0e} of the peak",
                (edge / peak).as_f64(),
                BOUNDARY_AMPLITUDE_REL
            ),
        });
    }
    ComplexField::from_fn(*grid, |x| Complex::new(value(x), T::zero()))
}

/// Exact scaled wave function at time `t`.
pub fn wavefunction_at<T: Real>(config: &TwoGaussianConfig<T>, t: T, grid: &Grid1D<T>) -> Result<ComplexField<T>> {
    let state = AnalyticState::at(config, t)?;
    ComplexField::from_fn(*grid, |x| state.psi(x))
}

/// Closed-form density (envelope minus interference term) at time `t`.
pub fn density_at<T: Real>(config: &TwoGaussianConfig<T>, t: T, grid: &Grid1D<T>) -> Result<DensityProfile<T>> {
    let state = AnalyticState::at(config, t)?;
    let rho = grid.points().into_iter().map(|x| state.density(x)).collect();
    DensityProfile::new(*grid, rho, t, config.params.epsilon(), Provenance::Analytic)
}

/// Fringe visibility of the closed-form density at time `t`.
///
/// Extrema are located on a dense sampling of the pattern and then refined
/// by golden-section search on the closed form.
pub fn analytic_visibility<T: Real>(config: &TwoGaussianConfig<T>, t: T) -> Result<Visibility<T>> {
    let state = AnalyticState::at(config, t)?;
    if config.params.epsilon() == T::zero() {
        return Ok(Visibility::none());
    }
    Ok(state_visibility(&state))
}

pub(crate) fn state_visibility<T: Real>(state: &AnalyticState<T>) -> Visibility<T> {
    let half_width = state.d + T::lit(10.0) * state.sigma_t();
    let spacing = state.fringe_spacing();
    let fringes = (T::lit(2.0) * half_width / spacing).to_usize().unwrap_or(0);
    let n = (64 * fringes).clamp(4001, 400_001);
    let grid = Grid1D::symmetric(half_width, n).expect("positive half width");
    let samples: Vec<T> = grid.points().into_iter().map(|x| state.density(x)).collect();
    let peak = samples.iter().fold(T::zero(), |a, &b| a.max(b));

    let extrema: Vec<Extremum<T>> = fringe::sample_extrema(&samples)
        .into_iter()
        .map(|(i, is_max)| {
            let (lo, hi) = (grid.x(i - 1), grid.x(i + 1));
            let x = if is_max {
                fringe::golden_section(|x| -state.density(x), lo, hi)
            } else {
                fringe::golden_section(|x| state.density(x), lo, hi)
            };
            // never accept a refined value worse than the bracketing sample
            let sampled = samples[i];
            let refined = state.density(x);
            let value = if is_max { refined.max(sampled) } else { refined.min(sampled) };
            Extremum { x, value, is_max }
        })
        .collect();
    fringe::visibility_from_extrema(&extrema, peak)
}
