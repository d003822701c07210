//! Polar (Madelung) form of a wave function and the hydrodynamic quantities
//! built on it: Bohm's quantum potential, the classicality-enforcing term of
//! the transition equation, continuity and Hamilton–Jacobi residuals, the
//! phase map onto the scaled Schrödinger wave function, and Bohmian
//! velocities and trajectories.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stencil::{first_derivative, second_derivative};
use crate::wavefield::{argmax, ComplexField, PolarField, RealField, SimParams};

/// Polar field together with the probability current and quantum potential.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroFields<T> {
    pub polar: PolarField<T>,
    pub current: RealField<T>,
    pub quantum_potential: RealField<T>,
}

/// Wraps an angle into `(-pi, pi]`.
#[inline]
fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let mut w = a - two_pi * (a / two_pi).round();
    if w <= -T::PI() {
        w += two_pi;
    } else if w > T::PI() {
        w -= two_pi;
    }
    w
}

/// Regularized divisor floor for a field whose largest amplitude is `max_amp`.
#[inline]
pub(crate) fn amplitude_floor<T: Real>(max_amp: T, amp_floor_rel: T) -> T {
    amp_floor_rel * max_amp
}

/// Decomposes `psi` into amplitude and unwrapped action `S = hbar * phase`.
///
/// The phase is unwrapped outward from the node of largest amplitude, where
/// the action is pinned to zero.
pub fn polar_decompose<T: Real>(psi: &ComplexField<T>, hbar: T) -> Result<PolarField<T>> {
    if !(hbar > T::zero()) {
        return Err(Error::InvalidParams("hbar must be positive".into()));
    }
    let values = psi.values();
    let amplitude = psi.amplitudes();
    let anchor = argmax(&amplitude);
    if !(amplitude[anchor] > T::zero()) {
        return Err(Error::PhaseUndefined);
    }
    let reference_phase = values[anchor].arg();
    let n = values.len();
    let two_pi = T::TAU();

    // raw phases relative to the anchor, then shifted by whole turns so
    // adjacent nodes differ by at most pi
    let raw: Vec<T> = values.iter().map(|v| v.arg() - reference_phase).collect();
    let mut phase = vec![T::zero(); n];
    phase[anchor] = T::zero();
    let unwrap = |prev: T, r: T| r + two_pi * ((prev - r) / two_pi).round();
    for i in anchor + 1..n {
        phase[i] = unwrap(phase[i - 1], raw[i]);
    }
    for i in (0..anchor).rev() {
        phase[i] = unwrap(phase[i + 1], raw[i]);
    }

    Ok(PolarField {
        grid: *psi.grid(),
        amplitude,
        action: phase.into_iter().map(|p| p * hbar).collect(),
        hbar,
        reference_phase,
        anchor,
    })
}

/// Bohm's quantum potential `U = -(hbar^2 / 2m) A'' / A`.
///
/// The divisor is floored at `amp_floor_rel * max(A)` so nodes of the
/// amplitude give large but finite values.
pub fn quantum_potential<T: Real>(polar: &PolarField<T>, params: &SimParams<T>) -> RealField<T> {
    let amp = polar.amplitude();
    let max_amp = amp.iter().fold(T::zero(), |a, &b| a.max(b));
    let floor = amplitude_floor(max_amp, params.amp_floor_rel());
    let coef = -params.hbar() * params.hbar() / (T::lit(2.0) * params.mass());
    let lap = second_derivative(amp, polar.grid().dx());
    let values = lap
        .iter()
        .zip(amp)
        .map(|(&l, &a)| {
            if max_amp > T::zero() {
                coef * l / a.max(floor)
            } else {
                T::zero()
            }
        })
        .collect();
    RealField::from_trusted(*polar.grid(), values)
}

/// True where the classicality term is switched off.
///
/// For `eps > 0` that is every point below `floor`. In the classical limit
/// only exact zeros and sub-floor nodes (local minima) are clamped: there the
/// term must cancel the kinetic term identically, and switching it off in the
/// sub-floor tails would let them disperse freely and drive the interior
/// unstable.
#[inline]
pub(crate) fn is_clamped<T: Real>(a_prev: T, a: T, a_next: T, floor: T, classical: bool) -> bool {
    if classical {
        a == T::zero() || (a < floor && a <= a_prev && a <= a_next)
    } else {
        a == T::zero() || a < floor
    }
}

/// `(A''/A) psi` at an interior node, evaluated as `A'' * (psi / |psi|)`.
///
/// A small amplitude only fixes the direction `psi / |psi|`, so the term
/// stays bounded by `|A''|` away from clamped nodes.
#[inline]
pub(crate) fn curvature_term<T: Real>(
    a_prev: T,
    a: T,
    a_next: T,
    psi: Complex<T>,
    inv_dx2: T,
    floor: T,
    classical: bool,
) -> Complex<T> {
    if is_clamped(a_prev, a, a_next, floor, classical) {
        return Complex::new(T::zero(), T::zero());
    }
    let lap = (a_next - (a + a) + a_prev) * inv_dx2;
    Complex::new(psi.re / a, psi.im / a) * lap
}

/// Classicality-enforcing term `(1 - eps) (hbar^2 / 2m) (|psi|'' / |psi|) psi`.
///
/// Equal to `-(1 - eps) U psi` with `U` the quantum potential of `|psi|`.
/// Clamped to zero below `amp_floor_rel * max|psi|` as described for the
/// solver.
pub fn classicality_potential_term<T: Real>(
    psi: &ComplexField<T>,
    params: &SimParams<T>,
) -> ComplexField<T> {
    let grid = *psi.grid();
    let amp = psi.amplitudes();
    let max_amp = amp.iter().fold(T::zero(), |a, &b| a.max(b));
    let weight = T::one() - params.epsilon();
    if max_amp == T::zero() || weight == T::zero() {
        return ComplexField::zeros(grid);
    }
    let floor = amplitude_floor(max_amp, params.amp_floor_rel());
    let coef = weight * params.hbar() * params.hbar() / (T::lit(2.0) * params.mass());
    let lap = second_derivative(&amp, grid.dx());
    let n = amp.len();
    let classical = params.epsilon() == T::zero();
    let values = (0..n)
        .map(|i| {
            let a = amp[i];
            let prev = if i > 0 { amp[i - 1] } else { amp[i + 1] };
            let next = if i + 1 < n { amp[i + 1] } else { amp[i - 1] };
            if is_clamped(prev, a, next, floor, classical) {
                return Complex::new(T::zero(), T::zero());
            }
            let v = psi.values()[i];
            Complex::new(v.re / a, v.im / a) * (coef * lap[i])
        })
        .collect();
    ComplexField::from_trusted(grid, values)
}

struct MidpointState<T> {
    amp_mid: Vec<T>,
    action_mid: Vec<T>,
    d_amp: Vec<T>,
    d_action: Vec<T>,
}

/// Midpoint amplitude and action plus the per-node increments between two
/// snapshots. The action increment is read off the pointwise phase change,
/// so it is independent of where each snapshot was anchored.
fn midpoint_state<T: Real>(p0: &PolarField<T>, p1: &PolarField<T>, dt: T) -> Result<MidpointState<T>> {
    if !p0.grid().same_as(p1.grid()) {
        return Err(Error::GridMismatch);
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidTime(format!("dt must be positive, got {dt}")));
    }
    if p0.hbar() != p1.hbar() {
        return Err(Error::InvalidParams(
            "snapshots were decomposed with different action units".into(),
        ));
    }
    let hbar = p0.hbar();
    let n = p0.grid().len();
    let mut amp_mid = Vec::with_capacity(n);
    let mut action_mid = Vec::with_capacity(n);
    let mut d_amp = Vec::with_capacity(n);
    let mut d_action = Vec::with_capacity(n);
    for i in 0..n {
        let (a0, a1) = (p0.amplitude()[i], p1.amplitude()[i]);
        let ds = hbar * wrap_angle(p1.phase(i) - p0.phase(i));
        amp_mid.push((a0 + a1) * T::lit(0.5));
        action_mid.push(p0.action()[i] + ds * T::lit(0.5));
        d_amp.push(a1 - a0);
        d_action.push(ds);
    }
    Ok(MidpointState {
        amp_mid,
        action_mid,
        d_amp,
        d_action,
    })
}

/// Residual of the continuity equation
/// `dA/dt + (1/m) A' S' + (1/2m) A S''` between two snapshots.
pub fn continuity_residual<T: Real>(
    polar_t0: &PolarField<T>,
    polar_t1: &PolarField<T>,
    dt: T,
    params: &SimParams<T>,
) -> Result<RealField<T>> {
    let mid = midpoint_state(polar_t0, polar_t1, dt)?;
    let dx = polar_t0.grid().dx();
    let m = params.mass();
    let grad_a = first_derivative(&mid.amp_mid, dx);
    let grad_s = first_derivative(&mid.action_mid, dx);
    let lap_s = second_derivative(&mid.action_mid, dx);
    let half = T::lit(0.5);
    let values = (0..mid.amp_mid.len())
        .map(|i| {
            mid.d_amp[i] / dt + grad_a[i] * grad_s[i] / m + half * mid.amp_mid[i] * lap_s[i] / m
        })
        .collect();
    RealField::new(*polar_t0.grid(), values)
}

/// Residual of the scaled Hamilton–Jacobi equation
/// `dS/dt + (S')^2 / 2m + V - eps (hbar^2 / 2m) A'' / A` between two
/// snapshots. `t0` is the time of the first snapshot; the potential is
/// evaluated at the midpoint time.
pub fn hj_residual<T: Real>(
    polar_t0: &PolarField<T>,
    polar_t1: &PolarField<T>,
    t0: T,
    dt: T,
    params: &SimParams<T>,
) -> Result<RealField<T>> {
    let mid = midpoint_state(polar_t0, polar_t1, dt)?;
    let grid = *polar_t0.grid();
    let dx = grid.dx();
    let m = params.mass();
    let two_m = T::lit(2.0) * m;
    let grad_s = first_derivative(&mid.action_mid, dx);
    let lap_a = second_derivative(&mid.amp_mid, dx);
    let max_amp = mid.amp_mid.iter().fold(T::zero(), |a, &b| a.max(b));
    let floor = amplitude_floor(max_amp, params.amp_floor_rel());
    let quantum = params.epsilon() * params.hbar() * params.hbar() / two_m;
    let t_mid = t0 + dt * T::lit(0.5);
    let values = (0..grid.len())
        .map(|i| {
            let ratio = if max_amp > T::zero() {
                lap_a[i] / mid.amp_mid[i].max(floor)
            } else {
                T::zero()
            };
            mid.d_action[i] / dt + grad_s[i] * grad_s[i] / two_m + params.potential_at(grid.x(i), t_mid)
                - quantum * ratio
        })
        .collect();
    RealField::new(grid, values)
}

/// Maps a transition-equation solution onto the scaled Schrödinger wave
/// function, `psi_eps * exp(i S_eps (1/sqrt(eps) - 1) / hbar)`.
///
/// The amplitude is untouched, so `|result|^2 == |psi_eps|^2` up to the
/// rounding of a unit-modulus factor.
pub fn map_to_scaled<T: Real>(
    psi_eps: &ComplexField<T>,
    params: &SimParams<T>,
) -> Result<ComplexField<T>> {
    if params.epsilon() == T::zero() {
        return Err(Error::ClassicalLimit);
    }
    let factor = T::one() / params.epsilon().sqrt() - T::one();
    rephase(psi_eps, params.hbar(), factor)
}

/// Inverse of [`map_to_scaled`]: takes a scaled wave function (phase in
/// units of `hbar * sqrt(eps)`) back to the transition-equation field.
pub fn map_from_scaled<T: Real>(
    psi_scaled: &ComplexField<T>,
    params: &SimParams<T>,
) -> Result<ComplexField<T>> {
    if params.epsilon() == T::zero() {
        return Err(Error::ClassicalLimit);
    }
    let factor = params.epsilon().sqrt() - T::one();
    rephase(psi_scaled, params.hbar_scaled(), factor)
}

fn rephase<T: Real>(psi: &ComplexField<T>, hbar: T, factor: T) -> Result<ComplexField<T>> {
    let polar = polar_decompose(psi, hbar)?;
    let values = psi
        .values()
        .iter()
        .zip(polar.action())
        .map(|(v, &s)| v * Complex::from_polar(T::one(), s * factor / hbar))
        .collect();
    Ok(ComplexField::from_trusted(*psi.grid(), values))
}

/// Bohmian velocity `S' / m`.
pub fn bohm_velocity<T: Real>(polar: &PolarField<T>, params: &SimParams<T>) -> RealField<T> {
    let m = params.mass();
    let grad = first_derivative(polar.action(), polar.grid().dx());
    RealField::from_trusted(*polar.grid(), grad.into_iter().map(|g| g / m).collect())
}

/// Probability current `j = A^2 S' / m`.
pub fn probability_current<T: Real>(polar: &PolarField<T>, params: &SimParams<T>) -> RealField<T> {
    let v = bohm_velocity(polar, params);
    let values = v
        .values()
        .iter()
        .zip(polar.amplitude())
        .map(|(&vi, &a)| a * a * vi)
        .collect();
    RealField::from_trusted(*polar.grid(), values)
}

/// Decomposes `psi` and derives current and quantum potential in one go.
pub fn hydro_fields<T: Real>(psi: &ComplexField<T>, params: &SimParams<T>) -> Result<HydroFields<T>> {
    let polar = polar_decompose(psi, params.hbar())?;
    let current = probability_current(&polar, params);
    let quantum_potential = quantum_potential(&polar, params);
    Ok(HydroFields {
        polar,
        current,
        quantum_potential,
    })
}

/// Positions of a single test particle, possibly cut short.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub positions: Vec<T>,
    /// Set when the particle left the grid before the last velocity field.
    pub exited: bool,
}

/// Integrates `dx/dt = v(x, t)` with the explicit midpoint rule.
///
/// `velocity_fields[k]` is the velocity at time `k * dt`; values between
/// snapshots are interpolated linearly in time and space.
pub fn integrate_trajectory<T: Real>(
    x0: T,
    velocity_fields: &[RealField<T>],
    dt: T,
) -> Result<Trajectory<T>> {
    let first = velocity_fields
        .first()
        .ok_or_else(|| Error::InvalidParams("no velocity fields".into()))?;
    let grid = *first.grid();
    if velocity_fields.iter().any(|f| !f.grid().same_as(&grid)) {
        return Err(Error::GridMismatch);
    }
    if !grid.contains(x0) {
        return Err(Error::InvalidParams(format!("x0 = {x0} lies outside the grid")));
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidTime(format!("dt must be positive, got {dt}")));
    }

    let half = T::lit(0.5);
    let mut times = vec![T::zero()];
    let mut positions = vec![x0];
    let mut x = x0;
    for k in 0..velocity_fields.len() - 1 {
        let (now, next) = (&velocity_fields[k], &velocity_fields[k + 1]);
        let Some(v0) = now.interpolate(x) else { break };
        let x_half = x + half * dt * v0;
        let v_half = match (now.interpolate(x_half), next.interpolate(x_half)) {
            (Some(a), Some(b)) => half * (a + b),
            _ => {
                return Ok(Trajectory {
                    times,
                    positions,
                    exited: true,
                })
            }
        };
        x += dt * v_half;
        if !grid.contains(x) {
            return Ok(Trajectory {
                times,
                positions,
                exited: true,
            });
        }
        times.push(T::from_count(k + 1) * dt);
        positions.push(x);
    }
    Ok(Trajectory {
        times,
        positions,
        exited: false,
    })
}
