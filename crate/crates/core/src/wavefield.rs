//! Discretization and field types shared by every other module.
//!
//! All types here are immutable once constructed. Constructors validate the
//! uniform spacing and finite samples.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stencil;

/// Uniform 1-D grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    x_min: T,
    x_max: T,
    n_points: usize,
    dx: T,
}

impl<T: Real> Grid1D<T> {
    pub fn new(x_min: T, x_max: T, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        let dx = (x_max - x_min) / T::from_count(n_points - 1);
        if dx <= T::zero() {
            return Err(Error::InvalidGrid("spacing underflows to zero".into()));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
            dx,
        })
    }

    /// Grid on `[-half_extent, half_extent]`.
    pub fn symmetric(half_extent: T, n_points: usize) -> Result<Self> {
        Self::new(-half_extent, half_extent, n_points)
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    /// Coordinate of node `i`.
    ///
    /// Evaluated as a weighted sum of the endpoints so that a symmetric grid
    /// is exactly antisymmetric: `x(i) == -x(n - 1 - i)` bit for bit.
    #[inline]
    pub fn x(&self, i: usize) -> T {
        let last = self.n_points - 1;
        let a = T::from_count(last - i);
        let b = T::from_count(i);
        (a * self.x_min + b * self.x_max) / T::from_count(last)
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Same node layout with half the spacing (`2n - 1` points).
    pub fn refined(&self) -> Self {
        Self::new(self.x_min, self.x_max, 2 * self.n_points - 1)
            .expect("refinement of a valid grid is valid")
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: T) -> usize {
        let s = ((x - self.x_min) / self.dx).round();
        if s <= T::zero() {
            0
        } else {
            s.to_usize().unwrap_or(usize::MAX).min(self.n_points - 1)
        }
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Same number of points and bounds, up to a relative tolerance on the
    /// bounds.
    pub fn same_as(&self, other: &Self) -> bool {
        let tol = T::lit(1e-12) * (self.x_max - self.x_min);
        self.n_points == other.n_points
            && (self.x_min - other.x_min).abs() <= tol
            && (self.x_max - other.x_max).abs() <= tol
    }
}

/// Builds a uniform grid; see [`Grid1D::new`].
pub fn make_grid<T: Real>(x_min: T, x_max: T, n_points: usize) -> Result<Grid1D<T>> {
    Grid1D::new(x_min, x_max, n_points)
}

fn check_finite<T: Real>(values: impl IntoIterator<Item = T>) -> Result<()> {
    for (index, v) in values.into_iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(())
}

fn check_len<T>(grid: &Grid1D<T>, got: usize) -> Result<()>
where
    T: Real,
{
    if grid.len() != got {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got,
        });
    }
    Ok(())
}

/// Complex wave-function samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField<T> {
    grid: Grid1D<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> ComplexField<T> {
    pub fn new(grid: Grid1D<T>, values: Vec<Complex<T>>) -> Result<Self> {
        check_len(&grid, values.len())?;
        for (index, v) in values.iter().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D<T>, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid1D<T>) -> Self {
        Self {
            grid,
            values: vec![Complex::new(T::zero(), T::zero()); grid.len()],
        }
    }

    /// Crate-internal constructor for values already known to be finite.
    pub(crate) fn from_trusted(grid: Grid1D<T>, values: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn amplitudes(&self) -> Vec<T> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_amplitude(&self) -> T {
        self.values
            .iter()
            .map(|v| v.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Multiplies every sample by `c`.
    pub fn scaled(&self, c: Complex<T>) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| v * c).collect())
    }
}

/// Real samples on a grid (potentials, velocities, residuals, currents).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField<T> {
    grid: Grid1D<T>,
    values: Vec<T>,
}

impl<T: Real> RealField<T> {
    pub fn new(grid: Grid1D<T>, values: Vec<T>) -> Result<Self> {
        check_len(&grid, values.len())?;
        check_finite(values.iter().copied())?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid1D<T>, value: T) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub(crate) fn from_trusted(grid: Grid1D<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |a, &b| a.max(b.abs()))
    }

    /// Linear interpolation at `x`; `None` outside the grid.
    pub fn interpolate(&self, x: T) -> Option<T> {
        if !self.grid.contains(x) {
            return None;
        }
        let s = (x - self.grid.x_min()) / self.grid.dx();
        let last = self.grid.len() - 1;
        let i = s.floor().to_usize().unwrap_or(0).min(last - 1);
        let w = s - T::from_count(i);
        Some(self.values[i] * (T::one() - w) + self.values[i + 1] * w)
    }
}

/// Amplitude and unwrapped action of a complex field, `psi = A exp(i S / hbar)`.
///
/// `action` is anchored to zero at the node of largest amplitude. The phase
/// removed by that anchoring is kept in `reference_phase` so the original
/// field can be rebuilt exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarField<T> {
    pub(crate) grid: Grid1D<T>,
    pub(crate) amplitude: Vec<T>,
    pub(crate) action: Vec<T>,
    pub(crate) hbar: T,
    pub(crate) reference_phase: T,
    pub(crate) anchor: usize,
}

impl<T: Real> PolarField<T> {
    /// Builds a polar field from explicit amplitude and action samples.
    pub fn new(grid: Grid1D<T>, amplitude: Vec<T>, action: Vec<T>, hbar: T) -> Result<Self> {
        check_len(&grid, amplitude.len())?;
        check_len(&grid, action.len())?;
        check_finite(amplitude.iter().copied())?;
        check_finite(action.iter().copied())?;
        if let Some(index) = amplitude.iter().position(|a| *a < T::zero()) {
            return Err(Error::InvalidParams(format!(
                "negative amplitude at index {index}"
            )));
        }
        if !(hbar > T::zero()) {
            return Err(Error::InvalidParams("hbar must be positive".into()));
        }
        let anchor = argmax(&amplitude);
        Ok(Self {
            grid,
            amplitude,
            action,
            hbar,
            reference_phase: T::zero(),
            anchor,
        })
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn amplitude(&self) -> &[T] {
        &self.amplitude
    }

    pub fn action(&self) -> &[T] {
        &self.action
    }

    /// Action unit used for the phase, `phase = S / hbar`.
    pub fn hbar(&self) -> T {
        self.hbar
    }

    pub fn reference_phase(&self) -> T {
        self.reference_phase
    }

    /// Node where the action is pinned to zero.
    pub fn anchor(&self) -> usize {
        self.anchor
    }

    /// Full phase at node `i`, including the reference phase.
    pub fn phase(&self, i: usize) -> T {
        self.action[i] / self.hbar + self.reference_phase
    }

    /// Rebuilds `A exp(i S / hbar)` with the reference phase restored.
    pub fn recompose(&self) -> ComplexField<T> {
        let values = (0..self.grid.len())
            .map(|i| Complex::from_polar(self.amplitude[i], self.phase(i)))
            .collect();
        ComplexField::from_trusted(self.grid, values)
    }
}

pub(crate) fn argmax<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// External potential `V(x, t)`.
pub type Potential<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Physical and numerical parameters of a run.
///
/// The scaled Planck constant is derived, never stored, so
/// `hbar_scaled() == hbar * sqrt(epsilon)` holds by construction.
#[derive(Clone)]
pub struct SimParams<T> {
    mass: T,
    hbar: T,
    epsilon: T,
    dt_safety: T,
    amp_floor_rel: T,
    potential: Option<Potential<T>>,
}

impl<T: fmt::Debug> fmt::Debug for SimParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimParams")
            .field("mass", &self.mass)
            .field("hbar", &self.hbar)
            .field("epsilon", &self.epsilon)
            .field("dt_safety", &self.dt_safety)
            .field("amp_floor_rel", &self.amp_floor_rel)
            .field("potential", &self.potential.as_ref().map(|_| "V(x, t)"))
            .finish()
    }
}

pub const DEFAULT_DT_SAFETY: f64 = 0.5;
pub const DEFAULT_AMP_FLOOR_REL: f64 = 1e-8;

impl<T: Real> SimParams<T> {
    pub fn new(mass: T, hbar: T, epsilon: T) -> Result<Self> {
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::InvalidParams(format!("mass must be positive, got {mass}")));
        }
        if !(hbar > T::zero()) || !hbar.is_finite() {
            return Err(Error::InvalidParams(format!("hbar must be positive, got {hbar}")));
        }
        if !(epsilon >= T::zero() && epsilon <= T::one()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        Ok(Self {
            mass,
            hbar,
            epsilon,
            dt_safety: T::lit(DEFAULT_DT_SAFETY),
            amp_floor_rel: T::lit(DEFAULT_AMP_FLOOR_REL),
            potential: None,
        })
    }

    /// `hbar = m = 1`.
    pub fn natural(epsilon: T) -> Result<Self> {
        Self::new(T::one(), T::one(), epsilon)
    }

    pub fn with_dt_safety(mut self, dt_safety: T) -> Result<Self> {
        if !(dt_safety > T::zero() && dt_safety <= T::one()) {
            return Err(Error::InvalidParams(format!(
                "dt_safety must lie in (0, 1], got {dt_safety}"
            )));
        }
        self.dt_safety = dt_safety;
        Ok(self)
    }

    pub fn with_amp_floor_rel(mut self, amp_floor_rel: T) -> Result<Self> {
        if !(amp_floor_rel > T::zero()) || !amp_floor_rel.is_finite() {
            return Err(Error::InvalidParams(format!(
                "amp_floor_rel must be positive, got {amp_floor_rel}"
            )));
        }
        self.amp_floor_rel = amp_floor_rel;
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Result<Self> {
        let checked = Self::new(self.mass, self.hbar, epsilon)?;
        self.epsilon = checked.epsilon;
        Ok(self)
    }

    pub fn with_potential(mut self, potential: Potential<T>) -> Self {
        self.potential = Some(potential);
        self
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn hbar_scaled(&self) -> T {
        self.hbar * self.epsilon.sqrt()
    }

    pub fn dt_safety(&self) -> T {
        self.dt_safety
    }

    pub fn amp_floor_rel(&self) -> T {
        self.amp_floor_rel
    }

    pub fn potential(&self) -> Option<&Potential<T>> {
        self.potential.as_ref()
    }

    /// `V(x, t)`, zero when no potential is set.
    #[inline]
    pub fn potential_at(&self, x: T, t: T) -> T {
        match &self.potential {
            Some(v) => v(x, t),
            None => T::zero(),
        }
    }
}

/// Where a density profile came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Simulated,
    Analytic,
    Initial,
}

/// Probability density `|psi|^2` with its time, degree of quantumness and
/// origin.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile<T> {
    grid: Grid1D<T>,
    rho: Vec<T>,
    time: T,
    epsilon: T,
    provenance: Provenance,
}

impl<T: Real> DensityProfile<T> {
    pub fn new(
        grid: Grid1D<T>,
        rho: Vec<T>,
        time: T,
        epsilon: T,
        provenance: Provenance,
    ) -> Result<Self> {
        check_len(&grid, rho.len())?;
        check_finite(rho.iter().copied())?;
        if let Some(index) = rho.iter().position(|r| *r < T::zero()) {
            return Err(Error::InvalidParams(format!(
                "negative density at index {index}"
            )));
        }
        Ok(Self {
            grid,
            rho,
            time,
            epsilon,
            provenance,
        })
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn peak(&self) -> T {
        self.rho.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    /// Trapezoid integral of the density.
    pub fn integral(&self) -> T {
        stencil::trapezoid(&self.rho, self.grid.dx())
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Resamples onto `target` by linear interpolation. Points of `target`
    /// outside this profile's grid get zero density.
    pub fn resample(&self, target: &Grid1D<T>) -> Self {
        let field = RealField::from_trusted(self.grid, self.rho.clone());
        let rho = (0..target.len())
            .map(|i| field.interpolate(target.x(i)).unwrap_or(T::zero()).max(T::zero()))
            .collect();
        Self {
            grid: *target,
            rho,
            time: self.time,
            epsilon: self.epsilon,
            provenance: self.provenance,
        }
    }
}

/// Pointwise `|psi|^2`, tagged with the caller's metadata.
pub fn density<T: Real>(
    psi: &ComplexField<T>,
    time: T,
    epsilon: T,
    provenance: Provenance,
) -> DensityProfile<T> {
    DensityProfile {
        grid: *psi.grid(),
        rho: psi.values().iter().map(|v| v.norm_sqr()).collect(),
        time,
        epsilon,
        provenance,
    }
}

/// `∫ |psi|^2 dx` by the composite trapezoid rule.
pub fn norm<T: Real>(psi: &ComplexField<T>) -> T {
    norm_of_values(psi.values(), psi.grid().dx())
}

pub(crate) fn norm_of_values<T: Real>(values: &[Complex<T>], dx: T) -> T {
    let n = values.len();
    let interior = values[1..n - 1]
        .iter()
        .fold(T::zero(), |acc, v| acc + v.norm_sqr());
    let ends = (values[0].norm_sqr() + values[n - 1].norm_sqr()) * T::lit(0.5);
    (interior + ends) * dx
}
