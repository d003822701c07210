use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use serde::Serialize;

use qtransition::analysis::{convergence_study, linf_error, l2_error, measured_visibility, reference_density, ConvergenceTable, GridSummary};
use qtransition::analytic::{analytic_visibility, density_at, initial_state, wavefunction_at};
use qtransition::madelung::{bohm_velocity, hydro_fields, map_from_scaled};
use qtransition::solver::evolve;
use qtransition::{density, norm, Complex, ComplexField, Grid1D, Provenance, SimParams, SolverConfig};

use crate::config::{dedup_epsilons, label, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::{create_dir, run_dir, snapshot_name, write_csv, write_json, Header};

pub const SNAPSHOT_HEADER: [&str; 5] = ["x", "rho_sim", "rho_analytic", "re_psi", "im_psi"];
pub const ANALYTIC_HEADER: [&str; 4] = ["x", "rho_analytic", "re_psi", "im_psi"];
pub const DECOMPOSE_HEADER: [&str; 6] = ["x", "amplitude", "action", "quantum_potential", "current", "velocity"];

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotRecord {
    pub time: f64,
    pub file: String,
    pub reference: Provenance,
    pub linf_error_rel_peak: f64,
    pub l2_error: f64,
    pub visibility_sim: f64,
    pub visibility_analytic: Option<f64>,
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub grid: GridSummary<f64>,
    pub dt_used: f64,
    pub steps_taken: usize,
    pub norm_drift: f64,
    pub max_classicality_term: f64,
    pub singular_regime: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub header: Header,
    pub epsilon: f64,
    pub config: ExperimentConfig,
    pub run: RunStats,
    pub snapshots: Vec<SnapshotRecord>,
}

/// Simulates one degree of quantumness and writes `eps_<e>/`.
pub fn simulate_one(cfg: &ExperimentConfig, epsilon: f64, root: &Path) -> Result<RunManifest> {
    let exp = cfg.experiment(epsilon)?;
    let psi0 = initial_state(&exp.config, &exp.grid)?;
    let times = cfg.output_times();
    let solver = SolverConfig::with_snapshots(exp.config.params.clone(), exp.grid, cfg.t_final_units, times)?;
    let run = evolve(&solver, &psi0)?;

    let dir = run_dir(root, epsilon);
    create_dir(&dir)?;
    let x = exp.grid.points();
    let mut snapshots = Vec::with_capacity(run.snapshots.len());
    for (t, psi) in &run.snapshots {
        let sim = density(psi, *t, epsilon, Provenance::Simulated);
        let reference = reference_density(&exp.config, &exp.grid, *t)?;
        let (re, im): (Vec<f64>, Vec<f64>) = psi.values().iter().map(|z| (z.re, z.im)).unzip();
        let name = snapshot_name(*t);
        write_csv(
            &dir.join(&name),
            &SNAPSHOT_HEADER,
            &[&x, sim.rho(), reference.rho(), &re, &im],
        )?;
        let visibility_analytic = if epsilon > 0.0 {
            Some(analytic_visibility(&exp.config, *t)?.value)
        } else {
            None
        };
        snapshots.push(SnapshotRecord {
            time: *t,
            file: name,
            reference: reference.provenance(),
            linf_error_rel_peak: linf_error(&sim, &reference)?,
            l2_error: l2_error(&sim, &reference)?,
            visibility_sim: measured_visibility(&sim).value,
            visibility_analytic,
            norm: norm(psi),
        });
    }

    let manifest = RunManifest {
        header: Header::new("simulate"),
        epsilon,
        config: cfg.single(epsilon),
        run: RunStats {
            grid: GridSummary::from(&exp.grid),
            dt_used: run.dt_used,
            steps_taken: run.steps_taken,
            norm_drift: run.norm_drift(),
            max_classicality_term: run.max_classicality_term,
            singular_regime: run.singular_regime,
        },
        snapshots,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn print_run(m: &RunManifest) {
    let last = m.snapshots.last();
    println!(
        "eps {}: {} steps, dt {:.3e}, norm drift {:.2e}, linf/peak {:.3e} vs {:?}",
        label(m.epsilon),
        m.run.steps_taken,
        m.run.dt_used,
        m.run.norm_drift,
        last.map_or(f64::NAN, |s| s.linf_error_rel_peak),
        last.map_or(Provenance::Analytic, |s| s.reference),
    );
}

pub fn simulate(cfg: &ExperimentConfig, root: &Path) -> Result<()> {
    let (eps, dropped) = dedup_epsilons(&cfg.epsilon);
    warn_duplicates(&dropped);
    create_dir(root)?;
    for e in eps {
        let m = simulate_one(cfg, e, root)?;
        print_run(&m);
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub status: &'static str,
    pub directory: String,
    pub manifest: Option<String>,
    pub csv: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepManifest {
    #[serde(flatten)]
    pub header: Header,
    pub config: ExperimentConfig,
    pub duplicates_removed: Vec<f64>,
    pub runs: Vec<SweepEntry>,
}

fn warn_duplicates(dropped: &[f64]) {
    if !dropped.is_empty() {
        let list: Vec<String> = dropped.iter().map(|e| label(*e)).collect();
        eprintln!("warning: duplicate epsilon values ignored: {}", list.join(", "));
    }
}

/// Runs every epsilon in its own thread, then writes `sweep_manifest.json`.
pub fn sweep(cfg: &ExperimentConfig, root: &Path) -> Result<()> {
    let (eps, dropped) = dedup_epsilons(&cfg.epsilon);
    warn_duplicates(&dropped);
    create_dir(root)?;

    let results: Vec<(f64, Result<RunManifest>)> = thread::scope(|s| {
        let handles: Vec<_> = eps
            .iter()
            .map(|&e| (e, s.spawn(move || simulate_one(cfg, e, root))))
            .collect();
        handles
            .into_iter()
            .map(|(e, h)| (e, h.join().unwrap_or_else(|_| Err(CliError::Config(format!("run for eps {e} panicked"))))))
            .collect()
    });

    let mut failed = Vec::new();
    let runs = results
        .iter()
        .map(|(e, r)| {
            let directory = run_dir(Path::new(""), *e).display().to_string();
            match r {
                Ok(m) => {
                    print_run(m);
                    SweepEntry {
                        epsilon: *e,
                        status: "ok",
                        manifest: Some(format!("{directory}/manifest.json")),
                        csv: m.snapshots.iter().map(|s| format!("{directory}/{}", s.file)).collect(),
                        directory,
                        error: None,
                    }
                }
                Err(err) => {
                    eprintln!("eps {}: {err}", label(*e));
                    failed.push(err.exit_code());
                    SweepEntry {
                        epsilon: *e,
                        status: "failed",
                        directory,
                        manifest: None,
                        csv: Vec::new(),
                        error: Some(err.to_string()),
                    }
                }
            }
        })
        .collect();

    let manifest = SweepManifest {
        header: Header::new("sweep"),
        config: ExperimentConfig {
            epsilon: eps.clone(),
            ..cfg.clone()
        },
        duplicates_removed: dropped,
        runs,
    };
    write_json(&root.join("sweep_manifest.json"), &manifest)?;
    match failed.first() {
        None => Ok(()),
        Some(&code) => Err(CliError::SweepFailed {
            failed: failed.len(),
            total: eps.len(),
            code,
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticEntry {
    pub epsilon: f64,
    pub time: f64,
    pub file: String,
    pub visibility: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticManifest {
    #[serde(flatten)]
    pub header: Header,
    pub config: ExperimentConfig,
    pub files: Vec<AnalyticEntry>,
}

/// Closed-form densities for every `(epsilon, t)` pair, no integration.
pub fn analytic(cfg: &ExperimentConfig, root: &Path) -> Result<()> {
    let (eps, dropped) = dedup_epsilons(&cfg.epsilon);
    warn_duplicates(&dropped);
    let grid = cfg.grid()?;
    let x = grid.points();
    let mut files = Vec::new();
    for &e in &eps {
        let config = cfg.two_gaussians(e)?;
        initial_state(&config, &grid)?;
        let dir = run_dir(root, e);
        create_dir(&dir)?;
        for t in cfg.output_times() {
            let rho = density_at(&config, t, &grid)?;
            let scaled = wavefunction_at(&config, t, &grid)?;
            let psi = if e > 0.0 { map_from_scaled(&scaled, &config.params)? } else { scaled };
            let (re, im): (Vec<f64>, Vec<f64>) = psi.values().iter().map(|z| (z.re, z.im)).unzip();
            let name = format!("analytic_t{}.csv", label(t));
            write_csv(&dir.join(&name), &ANALYTIC_HEADER, &[&x, rho.rho(), &re, &im])?;
            let visibility = if e > 0.0 { Some(analytic_visibility(&config, t)?.value) } else { None };
            println!("eps {} t {}: {}", label(e), label(t), dir.join(&name).display());
            files.push(AnalyticEntry {
                epsilon: e,
                time: t,
                file: format!("{}/{name}", run_dir(Path::new(""), e).display()),
                visibility,
            });
        }
    }
    let manifest = AnalyticManifest {
        header: Header::new("analytic"),
        config: ExperimentConfig {
            epsilon: eps,
            ..cfg.clone()
        },
        files,
    };
    write_json(&root.join("analytic_manifest.json"), &manifest)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceManifest {
    #[serde(flatten)]
    pub header: Header,
    pub config: ExperimentConfig,
    pub levels: usize,
    pub table: ConvergenceTable<f64>,
}

pub fn convergence(cfg: &ExperimentConfig, levels: usize, root: &Path) -> Result<()> {
    let [e] = cfg.epsilon[..] else {
        return Err(CliError::Config(format!(
            "convergence takes exactly one epsilon, got {}",
            cfg.epsilon.len()
        )));
    };
    let exp = cfg.experiment(e)?;
    let table = convergence_study(&exp, levels)?;
    create_dir(root)?;
    let col = |f: fn(&qtransition::analysis::ConvergenceRow<f64>) -> f64| table.rows.iter().map(f).collect::<Vec<_>>();
    write_csv(
        &root.join("convergence.csv"),
        &["dx", "dt", "linf_error"],
        &[&col(|r| r.dx), &col(|r| r.dt), &col(|r| r.linf_error)],
    )?;
    for (row, order) in table.rows.iter().zip(std::iter::once(None).chain(table.orders.iter().map(Some))) {
        match order {
            Some(p) => println!("dx {:.4e}  error {:.4e}  order {:.3}", row.dx, row.linf_error, p),
            None => println!("dx {:.4e}  error {:.4e}", row.dx, row.linf_error),
        }
    }
    if table.non_monotone {
        eprintln!("warning: error does not decrease monotonically with dx");
    }
    let manifest = ConvergenceManifest {
        header: Header::new("convergence"),
        config: cfg.clone(),
        levels,
        table,
    };
    write_json(&root.join("convergence.json"), &manifest)
}

/// Reads `x`, `re_psi`, `im_psi` columns (any order, extra columns ignored)
/// from a uniformly spaced CSV.
pub fn read_field(path: &Path) -> Result<ComplexField> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_field(&text).map_err(|(line, message)| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

pub fn parse_field(text: &str) -> std::result::Result<ComplexField, (usize, String)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let line_of = |pos: Option<&csv::Position>| pos.map_or(1, |p| p.line() as usize);
    let names = reader
        .headers()
        .map_err(|e| (line_of(e.position()), e.to_string()))?
        .clone();
    if names.iter().all(str::is_empty) {
        return Err((1, "empty file: expected a header row".to_string()));
    }
    let column = |name: &str| {
        names
            .iter()
            .position(|n| n == name)
            .ok_or((1, format!("missing column {name:?}")))
    };
    let (ix, ire, iim) = (column("x")?, column("re_psi")?, column("im_psi")?);

    let mut xs = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| (line_of(e.position()), e.to_string()))?;
        let line_no = line_of(record.position());
        if record.len() != names.len() {
            return Err((line_no, format!("expected {} fields, found {}", names.len(), record.len())));
        }
        let num = |i: usize| {
            record[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or((line_no, format!("{}: not a finite number: {:?}", &names[i], &record[i])))
        };
        xs.push((line_no, num(ix)?));
        values.push(Complex::new(num(ire)?, num(iim)?));
    }
    if xs.len() < 3 {
        return Err((1, format!("need at least 3 data rows, found {}", xs.len())));
    }
    let (first, last) = (xs[0].1, xs[xs.len() - 1].1);
    let grid = Grid1D::new(first, last, xs.len()).map_err(|e| (xs[1].0, e.to_string()))?;
    let tol = 1e-6 * grid.dx();
    for (i, &(line_no, x)) in xs.iter().enumerate() {
        if (x - grid.x(i)).abs() > tol {
            return Err((line_no, format!("x = {x} breaks uniform spacing (expected {})", grid.x(i))));
        }
    }
    ComplexField::new(grid, values).map_err(|e| (1, e.to_string()))
}

pub fn decompose(input: &Path, output: &Path, hbar: f64, mass: f64) -> Result<()> {
    let psi = read_field(input)?;
    let params = SimParams::new(mass, hbar, 1.0)?;
    let h = hydro_fields(&psi, &params)?;
    let velocity = bohm_velocity(&h.polar, &params);
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let x = psi.grid().points();
    write_csv(
        output,
        &DECOMPOSE_HEADER,
        &[
            &x,
            h.polar.amplitude(),
            h.polar.action(),
            h.quantum_potential.values(),
            h.current.values(),
            velocity.values(),
        ],
    )?;
    println!("{} points -> {}", x.len(), output.display());
    Ok(())
}

pub fn default_decompose_output(input: &Path, root: &Path) -> PathBuf {
    let stem = input.file_stem().map_or("field".into(), |s| s.to_string_lossy());
    root.join(format!("{stem}_polar.csv"))
}
