//! Explicit finite-difference integrator for the 1-D transition equation
//!
//! ```text
//! i hbar dpsi/dt = -(hbar^2/2m) psi'' + V psi + (1 - eps)(hbar^2/2m)(|psi|''/|psi|) psi
//! ```
//!
//! Space is discretized with the three-point Laplacian on a uniform grid
//! with homogeneous Dirichlet ends; time with classical RK4. The free
//! semi-discrete operator has a purely imaginary spectrum of radius
//! `2 hbar / (m dx^2)`, inside RK4's imaginary-axis stability interval
//! `|lambda dt| <= 2 sqrt(2)` whenever `dt <= 1.41 m dx^2 / hbar`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::madelung::{amplitude_floor, curvature_term};
use crate::scalar::Real;
use crate::wavefield::{norm_of_values, ComplexField, Grid1D, SimParams};

/// Largest relative norm change a single step may produce before the run
/// is declared unstable.
pub const STEP_NORM_TOLERANCE: f64 = 1e-3;

/// Identifier written into run manifests.
pub const SCHEME_ID: &str = "mol-fd2-central/rk4/dirichlet0/clamped-node-floor";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    DirichletZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    pub params: SimParams<T>,
    pub grid: Grid1D<T>,
    pub t_final: T,
    pub snapshot_times: Vec<T>,
    pub boundary: Boundary,
    pub integrator: Integrator,
}

impl<T: Real> SolverConfig<T> {
    /// Config recording only the final state.
    pub fn new(params: SimParams<T>, grid: Grid1D<T>, t_final: T) -> Result<Self> {
        Self::with_snapshots(params, grid, t_final, vec![t_final])
    }

    pub fn with_snapshots(
        params: SimParams<T>,
        grid: Grid1D<T>,
        t_final: T,
        mut snapshot_times: Vec<T>,
    ) -> Result<Self> {
        if !(t_final >= T::zero()) || !t_final.is_finite() {
            return Err(Error::InvalidTime(format!("t_final must be nonnegative, got {t_final}")));
        }
        if let Some(bad) = snapshot_times
            .iter()
            .find(|t| !(**t >= T::zero() && **t <= t_final))
        {
            return Err(Error::InvalidTime(format!(
                "snapshot time {bad} outside [0, {t_final}]"
            )));
        }
        snapshot_times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        snapshot_times.dedup();
        Ok(Self {
            params,
            grid,
            t_final,
            snapshot_times,
            boundary: Boundary::DirichletZero,
            integrator: Integrator::Rk4,
        })
    }

    pub fn dt(&self) -> T {
        stability_dt(&self.params, &self.grid)
    }
}

/// Output of [`evolve`].
#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub snapshots: Vec<(T, ComplexField<T>)>,
    /// Norm after every accepted step, starting with the initial norm at t = 0.
    pub norm_series: Vec<(T, T)>,
    pub dt_used: T,
    pub steps_taken: usize,
    /// Largest modulus of the classicality-enforcing term seen in any step.
    pub max_classicality_term: T,
    /// Set for eps = 0, where the two stiff terms cancel analytically and
    /// the run is only trusted against the classical reference.
    pub singular_regime: bool,
}

impl<T: Real> RunResult<T> {
    pub fn initial_norm(&self) -> T {
        self.norm_series.first().map(|p| p.1).unwrap_or(T::zero())
    }

    /// Largest relative deviation of the norm from its initial value.
    pub fn norm_drift(&self) -> T {
        let n0 = self.initial_norm();
        if n0 == T::zero() {
            return T::zero();
        }
        self.norm_series
            .iter()
            .fold(T::zero(), |acc, &(_, n)| acc.max(((n - n0) / n0).abs()))
    }

    pub fn final_state(&self) -> Option<&ComplexField<T>> {
        self.snapshots.last().map(|(_, f)| f)
    }

    pub fn snapshot_at(&self, t: T) -> Option<&ComplexField<T>> {
        self.snapshots
            .iter()
            .find(|(ts, _)| (*ts - t).abs() <= T::lit(1e-12) * (T::one() + t.abs()))
            .map(|(_, f)| f)
    }
}

/// `dt = dt_safety * m dx^2 / hbar`.
pub fn stability_dt<T: Real>(params: &SimParams<T>, grid: &Grid1D<T>) -> T {
    params.dt_safety() * params.mass() * grid.dx() * grid.dx() / params.hbar()
}

/// Time derivative of `psi` under the transition equation.
///
/// The classicality term is dropped at nodes whose amplitude is below
/// `amp_floor_rel * max|psi|`; boundary nodes are held at zero.
pub fn rhs<T: Real>(psi: &ComplexField<T>, t: T, params: &SimParams<T>) -> ComplexField<T> {
    let grid = *psi.grid();
    let mut ws = Workspace::new(grid.len());
    let mut out = vec![Complex::new(T::zero(), T::zero()); grid.len()];
    let mut state = psi.values().to_vec();
    zero_boundaries(&mut state);
    let kernel = Kernel::new(params, &grid);
    kernel.eval(&state, t, &mut out, &mut ws.amp);
    ComplexField::from_trusted(grid, out)
}

/// One RK4 step of size `dt` starting at time `t`.
pub fn step<T: Real>(psi: &ComplexField<T>, t: T, dt: T, params: &SimParams<T>) -> Result<ComplexField<T>> {
    let grid = *psi.grid();
    let kernel = Kernel::new(params, &grid);
    let mut ws = Workspace::new(grid.len());
    let mut state = psi.values().to_vec();
    zero_boundaries(&mut state);
    let before = norm_of_values(&state, grid.dx());
    kernel.rk4(&mut state, t, dt, &mut ws);
    check_step(&state, before, grid.dx(), 0, t + dt)?;
    Ok(ComplexField::from_trusted(grid, state))
}

/// Integrates `psi0` to `config.t_final`, landing exactly on every
/// snapshot time.
pub fn evolve<T: Real>(config: &SolverConfig<T>, psi0: &ComplexField<T>) -> Result<RunResult<T>> {
    if !psi0.grid().same_as(&config.grid) {
        return Err(Error::GridMismatch);
    }
    let grid = config.grid;
    let dx = grid.dx();
    let dt = config.dt();
    let kernel = Kernel::new(&config.params, &grid);
    let mut ws = Workspace::new(grid.len());
    let mut state = psi0.values().to_vec();
    zero_boundaries(&mut state);

    let mut targets = config.snapshot_times.clone();
    if targets.last().is_none_or(|&t| t < config.t_final) {
        targets.push(config.t_final);
    }
    let record: Vec<bool> = targets
        .iter()
        .map(|t| config.snapshot_times.contains(t))
        .collect();

    let mut norm = norm_of_values(&state, dx);
    let mut norm_series = vec![(T::zero(), norm)];
    let mut snapshots = Vec::new();
    let mut steps_taken = 0usize;
    let mut max_term = kernel.classicality_magnitude(&state, &mut ws.amp);
    let mut t = T::zero();

    for (target, keep) in targets.into_iter().zip(record) {
        let span = target - t;
        let start = t;
        let n = if span > T::zero() {
            (span / dt - T::lit(1e-9)).ceil().to_usize().unwrap_or(0).max(1)
        } else {
            0
        };
        for k in 0..n {
            let h = if k + 1 == n {
                target - (start + T::from_count(k) * dt)
            } else {
                dt
            };
            kernel.rk4(&mut state, t, h, &mut ws);
            steps_taken += 1;
            t = if k + 1 == n {
                target
            } else {
                start + T::from_count(k + 1) * dt
            };
            let next = check_step(&state, norm, dx, steps_taken, t)?;
            norm = next;
            norm_series.push((t, norm));
            max_term = max_term.max(ws.last_classicality);
        }
        if keep {
            snapshots.push((target, ComplexField::from_trusted(grid, state.clone())));
        }
    }

    Ok(RunResult {
        snapshots,
        norm_series,
        dt_used: dt,
        steps_taken,
        max_classicality_term: max_term,
        singular_regime: config.params.epsilon() == T::zero(),
    })
}

fn zero_boundaries<T: Real>(state: &mut [Complex<T>]) {
    let n = state.len();
    state[0] = Complex::new(T::zero(), T::zero());
    state[n - 1] = Complex::new(T::zero(), T::zero());
}

fn check_step<T: Real>(state: &[Complex<T>], before: T, dx: T, step: usize, time: T) -> Result<T> {
    let after = norm_of_values(state, dx);
    if !after.is_finite() {
        return Err(Error::Diverged {
            step,
            time: time.as_f64(),
        });
    }
    if before > T::zero() {
        let change = ((after - before) / before).abs();
        if change > T::lit(STEP_NORM_TOLERANCE) {
            return Err(Error::Instability {
                step,
                time: time.as_f64(),
                relative_change: change.as_f64(),
            });
        }
    }
    Ok(after)
}

struct Workspace<T> {
    k1: Vec<Complex<T>>,
    k2: Vec<Complex<T>>,
    k3: Vec<Complex<T>>,
    k4: Vec<Complex<T>>,
    stage: Vec<Complex<T>>,
    amp: Vec<T>,
    last_classicality: T,
}

impl<T: Real> Workspace<T> {
    fn new(n: usize) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self {
            k1: vec![z; n],
            k2: vec![z; n],
            k3: vec![z; n],
            k4: vec![z; n],
            stage: vec![z; n],
            amp: vec![T::zero(); n],
            last_classicality: T::zero(),
        }
    }
}

/// Precomputed coefficients of the semi-discrete right-hand side.
struct Kernel<'a, T> {
    params: &'a SimParams<T>,
    grid: Grid1D<T>,
    /// `hbar / 2m`
    kinetic: T,
    /// `1 - eps`
    weight: T,
    inv_dx2: T,
    floor_rel: T,
    classical: bool,
}

impl<'a, T: Real> Kernel<'a, T> {
    fn new(params: &'a SimParams<T>, grid: &Grid1D<T>) -> Self {
        let dx = grid.dx();
        Self {
            params,
            grid: *grid,
            kinetic: params.hbar() / (T::lit(2.0) * params.mass()),
            weight: T::one() - params.epsilon(),
            inv_dx2: T::one() / (dx * dx),
            floor_rel: params.amp_floor_rel(),
            classical: params.epsilon() == T::zero(),
        }
    }

    fn fill_amplitudes(&self, psi: &[Complex<T>], amp: &mut [T]) -> T {
        let mut max_amp = T::zero();
        for (a, v) in amp.iter_mut().zip(psi) {
            *a = v.norm();
            max_amp = max_amp.max(*a);
        }
        max_amp
    }

    /// Writes `dpsi/dt` into `out`.
    fn eval(&self, psi: &[Complex<T>], t: T, out: &mut [Complex<T>], amp: &mut [T]) {
        let n = psi.len();
        let nonlinear = self.weight != T::zero();
        let floor = if nonlinear {
            amplitude_floor(self.fill_amplitudes(psi, amp), self.floor_rel)
        } else {
            T::zero()
        };
        let has_potential = self.params.potential().is_some();
        let inv_hbar = T::one() / self.params.hbar();
        let two = T::lit(2.0);

        out[0] = Complex::new(T::zero(), T::zero());
        out[n - 1] = Complex::new(T::zero(), T::zero());
        for i in 1..n - 1 {
            let v = psi[i];
            let lap = (psi[i + 1] - v * two + psi[i - 1]) * self.inv_dx2;
            // h = (hbar/2m) (psi'' - (1-eps) (A''/A) psi) - (V/hbar) psi;  dpsi/dt = i h
            let mut h = lap;
            if nonlinear {
                h -= curvature_term(amp[i - 1], amp[i], amp[i + 1], v, self.inv_dx2, floor, self.classical) * self.weight;
            }
            h *= self.kinetic;
            if has_potential {
                h -= v * (self.params.potential_at(self.grid.x(i), t) * inv_hbar);
            }
            out[i] = Complex::new(-h.im, h.re);
        }
    }

    /// Largest `|(1 - eps)(hbar^2/2m)(A''/A) psi|` over the grid.
    fn classicality_magnitude(&self, psi: &[Complex<T>], amp: &mut [T]) -> T {
        self.fill_amplitudes(psi, amp);
        self.classicality_from_amp(psi, amp)
    }

    fn rk4(&self, state: &mut [Complex<T>], t: T, dt: T, ws: &mut Workspace<T>) {
        let half = dt * T::lit(0.5);
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);

        self.eval(state, t, &mut ws.k1, &mut ws.amp);
        ws.last_classicality = self.classicality_from_amp(state, &ws.amp);
        for ((s, y), k) in ws.stage.iter_mut().zip(state.iter()).zip(&ws.k1) {
            *s = y + k * half;
        }
        self.eval(&ws.stage, t + half, &mut ws.k2, &mut ws.amp);
        for ((s, y), k) in ws.stage.iter_mut().zip(state.iter()).zip(&ws.k2) {
            *s = y + k * half;
        }
        self.eval(&ws.stage, t + half, &mut ws.k3, &mut ws.amp);
        for ((s, y), k) in ws.stage.iter_mut().zip(state.iter()).zip(&ws.k3) {
            *s = y + k * dt;
        }
        self.eval(&ws.stage, t + dt, &mut ws.k4, &mut ws.amp);
        for (i, y) in state.iter_mut().enumerate() {
            *y += (ws.k1[i] + (ws.k2[i] + ws.k3[i]) * two + ws.k4[i]) * sixth;
        }
    }

    /// Diagnostic magnitude of the classicality term using amplitudes
    /// already computed for the first stage.
    fn classicality_from_amp(&self, psi: &[Complex<T>], amp: &[T]) -> T {
        if self.weight == T::zero() {
            return T::zero();
        }
        let n = psi.len();
        let max_amp = amp.iter().fold(T::zero(), |a, &b| a.max(b));
        let floor = amplitude_floor(max_amp, self.floor_rel);
        let coef = self.weight * self.kinetic * self.params.hbar();
        (1..n - 1).fold(T::zero(), |acc, i| {
            let term = curvature_term(amp[i - 1], amp[i], amp[i + 1], psi[i], self.inv_dx2, floor, self.classical);
            acc.max(term.norm() * coef)
        })
    }
}
