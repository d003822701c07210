//! Solver-versus-oracle comparisons: error norms, fringe visibility of
//! sampled densities, epsilon sweeps, refinement studies and the
//! interference retardation time.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{analytic_visibility, density_at, initial_state, TwoGaussianConfig};
use crate::error::{Error, Result};
use crate::fringe::{self, Extremum, Visibility};
use crate::scalar::Real;
use crate::solver::{evolve, RunResult, SolverConfig};
use crate::stencil::trapezoid;
use crate::wavefield::{density, DensityProfile, Grid1D, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSummary<T> {
    pub x_min: T,
    pub x_max: T,
    pub n_points: usize,
    pub dx: T,
}

impl<T: Real> From<&Grid1D<T>> for GridSummary<T> {
    fn from(g: &Grid1D<T>) -> Self {
        Self {
            x_min: g.x_min(),
            x_max: g.x_max(),
            n_points: g.len(),
            dx: g.dx(),
        }
    }
}

/// Agreement between one solver run and its reference density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport<T> {
    pub epsilon: T,
    pub time: T,
    pub linf_error_rel_peak: T,
    pub l2_error: T,
    pub visibility_sim: T,
    pub visibility_analytic: T,
    pub norm_drift: T,
    pub grid: GridSummary<T>,
    pub dt_used: T,
    pub steps_taken: usize,
    pub reference: Provenance,
    pub singular_regime: bool,
}

/// Two-Gaussian interference experiment; the degree of quantumness in
/// `config.params` is overridden per run.
#[derive(Debug, Clone)]
pub struct Experiment<T> {
    pub config: TwoGaussianConfig<T>,
    pub grid: Grid1D<T>,
    pub t_final: T,
}

impl<T: Real> Experiment<T> {
    /// `d = 3 sigma`, `t = 20 m sigma^2 / hbar`, `±80 sigma` with 4096 points,
    /// natural units.
    pub fn default_interference() -> Result<Self> {
        let params = crate::wavefield::SimParams::natural(T::one())?;
        Ok(Self {
            config: TwoGaussianConfig::new(T::lit(3.0), T::one(), params)?,
            grid: Grid1D::symmetric(T::lit(80.0), 4096)?,
            t_final: T::lit(20.0),
        })
    }
}

/// Everything produced by one comparison run.
#[derive(Debug, Clone)]
pub struct ExperimentRun<T> {
    pub report: ComparisonReport<T>,
    pub run: RunResult<T>,
    pub simulated: DensityProfile<T>,
    pub reference: DensityProfile<T>,
}

fn check_same_grid<T: Real>(a: &DensityProfile<T>, b: &DensityProfile<T>) -> Result<()> {
    if a.grid().same_as(b.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `max |sim - ref| / max ref`.
pub fn linf_error<T: Real>(sim: &DensityProfile<T>, reference: &DensityProfile<T>) -> Result<T> {
    check_same_grid(sim, reference)?;
    let peak = reference.peak();
    let diff = sim
        .rho()
        .iter()
        .zip(reference.rho())
        .fold(T::zero(), |acc, (s, r)| acc.max((*s - *r).abs()));
    if peak > T::zero() {
        Ok(diff / peak)
    } else {
        Ok(diff)
    }
}

/// `sqrt(∫ (sim - ref)^2 dx)`.
pub fn l2_error<T: Real>(sim: &DensityProfile<T>, reference: &DensityProfile<T>) -> Result<T> {
    check_same_grid(sim, reference)?;
    let sq: Vec<T> = sim
        .rho()
        .iter()
        .zip(reference.rho())
        .map(|(s, r)| (*s - *r) * (*s - *r))
        .collect();
    Ok(trapezoid(&sq, sim.grid().dx()).sqrt())
}

/// Fringe visibility of sampled data, with extrema refined by three-point
/// parabolic fits.
pub fn measured_visibility<T: Real>(profile: &DensityProfile<T>) -> Visibility<T> {
    let rho = profile.rho();
    let peak = profile.peak();
    if !(peak > T::zero()) {
        return Visibility::none();
    }
    let grid = profile.grid();
    let extrema: Vec<Extremum<T>> = fringe::sample_extrema(rho)
        .into_iter()
        .map(|(i, is_max)| {
            let (offset, value) = fringe::parabolic_vertex(rho[i - 1], rho[i], rho[i + 1]);
            Extremum {
                x: grid.x(i) + offset * grid.dx(),
                value: value.max(T::zero()),
                is_max,
            }
        })
        .collect();
    fringe::visibility_from_extrema(&extrema, peak)
}

/// Runs the solver for one degree of quantumness and compares the density at
/// `t_final` with the closed form (or, for eps = 0, with the initial
/// density).
pub fn run_comparison<T: Real>(experiment: &Experiment<T>, epsilon: T, t_final: T) -> Result<ExperimentRun<T>> {
    let config = experiment.config.with_epsilon(epsilon)?;
    let psi0 = initial_state(&config, &experiment.grid)?;
    let solver = SolverConfig::new(config.params.clone(), experiment.grid, t_final)?;
    let run = evolve(&solver, &psi0)?;
    let simulated = density(
        run.final_state().expect("final snapshot recorded"),
        t_final,
        epsilon,
        Provenance::Simulated,
    );
    let reference = reference_density(&config, &experiment.grid, t_final)?;
    let visibility_analytic = if epsilon == T::zero() {
        T::zero()
    } else {
        analytic_visibility(&config, t_final)?.value
    };
    let report = ComparisonReport {
        epsilon,
        time: t_final,
        linf_error_rel_peak: linf_error(&simulated, &reference)?,
        l2_error: l2_error(&simulated, &reference)?,
        visibility_sim: measured_visibility(&simulated).value,
        visibility_analytic,
        norm_drift: run.norm_drift(),
        grid: GridSummary::from(&experiment.grid),
        dt_used: run.dt_used,
        steps_taken: run.steps_taken,
        reference: reference.provenance(),
        singular_regime: run.singular_regime,
    };
    Ok(ExperimentRun {
        report,
        run,
        simulated,
        reference,
    })
}

/// Closed-form density for eps > 0; the initial density for eps = 0, which
/// the classical limit keeps frozen.
pub fn reference_density<T: Real>(
    config: &TwoGaussianConfig<T>,
    grid: &Grid1D<T>,
    t: T,
) -> Result<DensityProfile<T>> {
    if config.params.epsilon() == T::zero() {
        let psi0 = initial_state(config, grid)?;
        Ok(density(&psi0, t, T::zero(), Provenance::Initial))
    } else {
        density_at(config, t, grid)
    }
}

/// One comparison per entry of `eps_list`, run in parallel. A failing run
/// does not stop the others.
pub fn epsilon_sweep<T: Real>(eps_list: &[T], experiment: &Experiment<T>) -> Vec<(T, Result<ComparisonReport<T>>)> {
    eps_list
        .par_iter()
        .map(|&eps| {
            let report = run_comparison(experiment, eps, experiment.t_final).map(|r| r.report);
            (eps, report)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow<T> {
    pub dx: T,
    pub dt: T,
    pub linf_error: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable<T> {
    pub rows: Vec<ConvergenceRow<T>>,
    /// `log2(e_k / e_{k+1})` for consecutive rows.
    pub orders: Vec<T>,
    /// Set when the error fails to decrease strictly between levels.
    pub non_monotone: bool,
}

/// Observed orders between consecutive `(dx, error)` levels.
pub fn observed_orders<T: Real>(errors: &[T]) -> (Vec<T>, bool) {
    let orders: Vec<T> = errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect();
    let non_monotone = errors.windows(2).any(|w| !(w[1] < w[0]));
    (orders, non_monotone)
}

/// Repeats the experiment with the spacing halved `levels - 1` times (time
/// step rescaled by the stability rule) and reports the observed order of
/// the density error at `t_final`.
pub fn convergence_study<T: Real>(experiment: &Experiment<T>, levels: usize) -> Result<ConvergenceTable<T>> {
    if levels < 3 {
        return Err(Error::InvalidParams(format!("need at least 3 levels, got {levels}")));
    }
    let grids: Vec<Grid1D<T>> = std::iter::successors(Some(experiment.grid), |g| Some(g.refined()))
        .take(levels)
        .collect();
    let rows = grids
        .par_iter()
        .map(|grid| {
            let level = Experiment {
                config: experiment.config.clone(),
                grid: *grid,
                t_final: experiment.t_final,
            };
            let out = run_comparison(&level, experiment.config.params.epsilon(), experiment.t_final)?;
            Ok(ConvergenceRow {
                dx: grid.dx(),
                dt: out.run.dt_used,
                linf_error: out.report.linf_error_rel_peak,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<T> = rows.iter().map(|r| r.linf_error).collect();
    let (orders, non_monotone) = observed_orders(&errors);
    Ok(ConvergenceTable {
        rows,
        orders,
        non_monotone,
    })
}

/// Time for the interference pattern to reach a visibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Retardation<T> {
    At(T),
    /// The classical limit never interferes.
    Never,
}

impl<T: Real> Retardation<T> {
    pub fn time(&self) -> Option<T> {
        match self {
            Retardation::At(t) => Some(*t),
            Retardation::Never => None,
        }
    }
}

/// Smallest time at which the analytic visibility reaches `target`.
///
/// The scan runs over the reduced time `hbar_s t`, so the result for any
/// `eps` is the `eps = 1` result stretched by `1 / sqrt(eps)`.
pub fn retardation_curve<T: Real>(config: &TwoGaussianConfig<T>, target: T) -> Result<Retardation<T>> {
    if !(target > T::zero() && target < T::one()) {
        return Err(Error::InvalidParams(format!("target visibility must lie in (0, 1), got {target}")));
    }
    let hbar_s = config.params.hbar_scaled();
    if hbar_s == T::zero() {
        return Ok(Retardation::Never);
    }
    let unit = config.params.mass() * config.sigma * config.sigma;
    let visibility = |t: T| analytic_visibility(config, t).map(|v| v.value);

    let growth = T::lit(1.03);
    let mut reduced = T::lit(1e-3) * unit;
    let limit = T::lit(1e12) * unit;
    let mut prev_t = T::zero();
    while reduced <= limit {
        let t = reduced / hbar_s;
        if visibility(t)? >= target {
            let (mut lo, mut hi) = (prev_t, t);
            while hi - lo > T::lit(1e-14) * hi {
                let mid = (lo + hi) * T::lit(0.5);
                if mid <= lo || mid >= hi {
                    break;
                }
                if visibility(mid)? >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Retardation::At(hi));
        }
        prev_t = t;
        reduced *= growth;
    }
    Err(Error::InvalidParams(format!(
        "visibility {target} not reached within the scanned time range"
    )))
}
