//! Run orchestration: the split transport/hydro loop with monitors, and the
//! certify, picard and validate modes.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::{
    moment_diagnostics, pressure_lower_bound, BlowupCertificate, MonitorEvent, MonitorSnapshot, MonitorThresholds,
    SingularityMonitor, Status, Trigger,
};
use crate::coefficients::{check_structural_assumptions, StructuralReport};
use crate::error::{Error, Result};
use crate::hydro::{
    advance_flow_map, max_velocity_gradient, vacuum_stationarity_check, DriftReport, FlowMap, FluidState, HydroSolver,
};
use crate::io::plot::emit_plots;
use crate::io::{write_timeseries, Manifest, Snapshot, TimeSeriesRow};
use crate::picard::{horizon_sweep, picard_iterate, HorizonSweep, IterationTrace};
use crate::scenarios::{builtin, compute_certificate, validate_scenario, Physics, Scenario, Setup, Splitting, ValidationReport};
use crate::symhyp::{collision_source_f, radiation_source_g};
use crate::transport::{RadiationField, TransportBackend, TransportSolver};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Certify,
    Picard,
    Validate,
}

/// Command-line overrides applied on top of a scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub cells: Option<usize>,
    pub ordinates: Option<usize>,
    pub groups: Option<usize>,
    pub dt: Option<f64>,
    pub cfl: Option<f64>,
    pub horizon: Option<f64>,
    pub backend: Option<TransportBackend>,
    pub seed: Option<u64>,
    pub cadence: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if let Some(n) = self.cells {
            if n < 3 {
                return bad(format!("--cells must be at least 3, got {n}"));
            }
            s.grid.cells = n;
        }
        if let Some(n) = self.ordinates {
            if n == 0 {
                return bad("--ordinates must be at least 1".into());
            }
            s.radiation.ordinates = n;
        }
        if let Some(n) = self.groups {
            if n == 0 {
                return bad("--groups must be at least 1".into());
            }
            s.radiation.groups = n;
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return bad(format!("--dt must be positive, got {dt}"));
            }
            s.run.dt = Some(dt);
            if let Some(p) = s.picard.as_mut() {
                p.dt = dt;
            }
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0 && c <= 1.0) {
                return bad(format!("--cfl must lie in (0, 1], got {c}"));
            }
            s.run.cfl = c;
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return bad(format!("--horizon must be positive, got {h}"));
            }
            s.run.horizon = h;
            if let Some(p) = s.picard.as_mut() {
                p.horizon = h;
            }
        }
        if let Some(b) = self.backend {
            s.run.backend = b;
        }
        if let Some(seed) = self.seed {
            s.initial.seed = seed;
        }
        if let Some(c) = self.cadence {
            if c == 0 {
                return bad("--cadence must be at least 1".into());
            }
            s.run.cadence = c;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Built-in scenario name or path to a scenario file.
    pub scenario: String,
    pub overrides: Overrides,
    pub out: PathBuf,
    pub mode: Mode,
}

/// Resolves a scenario by file path (when it exists or ends in `.toml`) or built-in name.
pub fn resolve_scenario(spec: &str, checked: bool) -> Result<Scenario> {
    let path = Path::new(spec);
    if path.exists() || spec.ends_with(".toml") {
        if !path.exists() {
            return Err(Error::NotFound(format!("scenario file {spec}")));
        }
        if checked {
            Scenario::load(path)
        } else {
            Scenario::from_toml_str(&std::fs::read_to_string(path)?)
        }
    } else {
        builtin(spec)
    }
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub rows: Vec<TimeSeriesRow>,
    pub setup: Setup,
    pub fluid: FluidState,
    pub radiation: RadiationField,
    pub t: f64,
    pub steps: usize,
    pub status: Status,
    pub events: Vec<MonitorEvent>,
    pub certificate: BlowupCertificate,
    pub drift: Option<DriftReport>,
    /// Snapshots where `∫_{B₀} p < C(m)(1 − 1e−6)`.
    pub holder_violations: usize,
}

impl SimulationResult {
    pub fn trigger_time(&self) -> Option<f64> {
        self.events.first().map(|e| e.t)
    }
}

fn momentum_source(setup: &Setup, fluid: &FluidState, rad: &RadiationField) -> Result<Vec<[f64; 4]>> {
    (0..setup.grid.len())
        .into_par_iter()
        .map(|cell| {
            let intens = rad.cell_intensities(cell);
            let w = fluid.w[cell];
            if setup.model.scattering.is_some() {
                collision_source_f(&intens, w, &setup.model, &setup.freq, &setup.quad, &setup.constants)
            } else {
                radiation_source_g(&intens, w, &setup.model, &setup.freq, &setup.quad, &setup.constants)
            }
        })
        .collect()
}

struct Diagnostics<'a> {
    setup: &'a Setup,
    rad_mask: Option<Vec<bool>>,
}

impl Diagnostics<'_> {
    fn row(&self, step: usize, t: f64, dt: f64, fluid: &FluidState, rad: &RadiationField, w_clip: f64) -> TimeSeriesRow {
        let grid = &self.setup.grid;
        let mom = fluid.momentum(grid);
        let mut row = TimeSeriesRow {
            step,
            t,
            dt,
            mass: fluid.mass(grid),
            momentum_x: mom[0],
            momentum_y: mom[1],
            momentum_z: mom[2],
            max_u: fluid.max_speed(),
            max_grad_u: max_velocity_gradient(&fluid.u, grid),
            min_rho: fluid.min_rho(),
            rad_dev_b0: rad.max_deviation(&self.setup.model, &self.setup.freq, self.rad_mask.as_deref()),
            w_clip,
            ..Default::default()
        };
        if let Some(geo) = &self.setup.geometry {
            let d = moment_diagnostics(fluid, geo, grid, t);
            row.second_moment = Some(d.second_moment);
            row.dm_dt = Some(d.dm_dt);
            row.mass_b0 = Some(d.m);
            row.mass_a0 = Some(d.m_a0);
            let p: f64 = (0..grid.len()).filter(|&i| geo.b0_mask[i]).map(|i| fluid.p[i]).sum();
            row.pressure_b0 = Some(p * grid.cell_volume());
        }
        row
    }
}

/// The split time loop. Stops at the horizon or at the first blow-up trigger.
pub fn simulate(scenario: &Scenario, thresholds: &MonitorThresholds) -> Result<SimulationResult> {
    let setup = scenario.setup()?;
    let run = scenario.run;
    let grid = setup.grid.clone();
    let gamma = setup.constants.gamma;
    let rho_max = setup.fluid.rho.iter().copied().fold(0.0, f64::max);
    let hydro = HydroSolver::new(grid.clone(), gamma, setup.constants.alpha, run.cfl, rho_max)?;
    let transport = TransportSolver {
        grid: grid.clone(),
        freq: setup.freq.clone(),
        quad: setup.quad.clone(),
        model: setup.model.clone(),
        constants: setup.constants,
        backend: run.backend,
    };
    let certificate = compute_certificate(scenario, &setup, thresholds)?;
    let diag = Diagnostics {
        setup: &setup,
        rad_mask: setup.geometry.as_ref().map(|g| g.b0_mask.clone()),
    };
    let moves_fluid = run.physics != Physics::RadiationOnly;
    let moves_radiation = run.physics != Physics::FluidOnly;

    let mut fluid = setup.fluid.clone();
    let mut rad = setup.radiation.clone();
    let mut t = 0.0;
    let mut step = 0;
    let first = diag.row(0, 0.0, 0.0, &fluid, &rad, 0.0);
    let m0 = first.mass_a0;
    let mut monitor = SingularityMonitor::new(*thresholds, first.max_grad_u, m0);
    let mut rows = vec![first];
    rows[0].status = Status::Healthy.as_str().into();
    let mut flow = setup.geometry.as_ref().filter(|_| moves_fluid).map(|g| {
        let seeds = g.boundary_seeds(grid.dim());
        let n = seeds.len();
        FlowMap::new(seeds, n)
    });
    let r0 = setup.geometry.as_ref().map(|g| g.r0);
    let mut holder_violations = 0;
    let horizon = run.horizon;

    while t < horizon * (1.0 - 1e-12) && monitor.status != Status::BlownUp {
        let mut stable = run.dt.unwrap_or(f64::INFINITY);
        if moves_fluid {
            stable = stable.min(hydro.max_dt(&fluid)).min(hydro.vacuum_dt(&fluid));
        }
        if moves_radiation && run.backend == TransportBackend::Sweep {
            stable = stable.min(transport.sweep_dt());
        }
        if !stable.is_finite() {
            return Err(Error::InvalidConfig(
                "no stability limit applies to this run; set a time step with dt".into(),
            ));
        }
        let dt = stable.min(horizon - t);
        let advanced = advance(&setup, &hydro, &transport, run.physics, run.splitting, &fluid, &rad, dt, t);
        let (next_fluid, next_rad, w_clip) = match advanced {
            Ok(x) => x,
            Err(Error::NearSingularity { t: ts, cell }) => {
                monitor.record(ts, Trigger::Gradient, cell as f64);
                break;
            }
            Err(Error::SolverDiverged(_)) => {
                monitor.record(t, Trigger::Divergence, f64::NAN);
                break;
            }
            Err(e) => return Err(e),
        };
        if let Some(map) = flow.as_mut() {
            *map = advance_flow_map(map, &fluid.u, &next_fluid.u, dt, &grid);
        }
        fluid = next_fluid;
        rad = next_rad;
        t += dt;
        step += 1;
        let mut row = diag.row(step, t, dt, &fluid, &rad, w_clip);
        if let (Some(m), Some(p), Some(r0)) = (row.mass_b0, row.pressure_b0, r0) {
            if m > 0.0 && p < pressure_lower_bound(m, r0, gamma, grid.dim()) * (1.0 - 1e-6) {
                holder_violations += 1;
            }
        }
        let seen = monitor.events.len();
        let status = monitor.observe(&MonitorSnapshot {
            t,
            max_grad_u: row.max_grad_u,
            min_rho: row.min_rho,
            dt: stable,
            w_clip,
            mass_a0: row.mass_a0,
        });
        row.status = status.as_str().into();
        row.events = monitor.events[seen..]
            .iter()
            .map(|e| e.trigger.as_str())
            .collect::<Vec<_>>()
            .join("|");
        let keep = step % run.cadence == 0 || status == Status::BlownUp || t >= horizon * (1.0 - 1e-12);
        if keep {
            rows.push(row);
        }
    }
    if monitor.status == Status::BlownUp && rows.last().is_some_and(|r| r.status != "blown-up") {
        let mut row = diag.row(step, t, 0.0, &fluid, &rad, 0.0);
        row.status = Status::BlownUp.as_str().into();
        row.events = monitor.events.iter().map(|e| e.trigger.as_str()).collect::<Vec<_>>().join("|");
        rows.push(row);
    }
    let drift = flow.as_ref().map(|m| vacuum_stationarity_check(m, &grid));
    Ok(SimulationResult {
        rows,
        fluid,
        radiation: rad,
        t,
        steps: step,
        status: monitor.status,
        events: monitor.events,
        certificate,
        drift,
        holder_violations,
        setup,
    })
}

#[allow(clippy::too_many_arguments)]
fn advance(
    setup: &Setup,
    hydro: &HydroSolver,
    transport: &TransportSolver,
    physics: Physics,
    splitting: Splitting,
    fluid: &FluidState,
    rad: &RadiationField,
    dt: f64,
    t: f64,
) -> Result<(FluidState, RadiationField, f64)> {
    match physics {
        Physics::RadiationOnly => Ok((fluid.clone(), transport.step(rad, fluid, dt)?, 0.0)),
        Physics::FluidOnly => {
            let out = hydro.step(fluid, None, dt, t)?;
            Ok((out.state, rad.clone(), out.w_clip))
        }
        Physics::Coupled => match splitting {
            Splitting::Strang => {
                let half = transport.step(rad, fluid, 0.5 * dt)?;
                let src = momentum_source(setup, fluid, &half)?;
                let out = hydro.step(fluid, Some(&src), dt, t)?;
                let full = transport.step(&half, &out.state, 0.5 * dt)?;
                Ok((out.state, full, out.w_clip))
            }
            Splitting::Lie => {
                let next = transport.step(rad, fluid, dt)?;
                let src = momentum_source(setup, fluid, &next)?;
                let out = hydro.step(fluid, Some(&src), dt, t)?;
                Ok((out.state, next, out.w_clip))
            }
        },
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub timeseries: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
    pub snapshots: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub mode: Mode,
    pub status: Option<Status>,
    /// 0 completed, 2 blown-up detected, 1 failed validation.
    pub exit_code: i32,
    pub artifacts: RunArtifacts,
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    scenario: &'a str,
    status: Status,
    t_end: f64,
    steps: usize,
    trigger_time: Option<f64>,
    events: &'a [MonitorEvent],
    drift: &'a Option<DriftReport>,
    holder_violations: usize,
}

#[derive(Serialize)]
struct PicardSummary<'a> {
    scenario: &'a str,
    trace: &'a IterationTrace,
    max_ratio_last_half: Option<f64>,
    telescoping_ratio: Option<f64>,
    contraction_failure_at: Option<usize>,
    horizon_sweep: &'a HorizonSweep,
}

#[derive(Serialize)]
struct ValidationSummary<'a> {
    scenario: &'a ValidationReport,
    structural: Option<&'a StructuralReport>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn finish(out: &Path, mut artifacts: RunArtifacts) -> Result<RunArtifacts> {
    let manifest_path = out.join("manifest.json");
    let files: Vec<PathBuf> = artifacts.files.iter().filter(|f| **f != manifest_path).cloned().collect();
    Manifest::build(out, &files)?.save(&manifest_path)?;
    artifacts.manifest = manifest_path;
    Ok(artifacts)
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    std::fs::create_dir_all(&config.out)?;
    let out = config.out.as_path();
    let mut scenario = resolve_scenario(&config.scenario, config.mode != Mode::Validate)?;
    config.overrides.apply(&mut scenario)?;
    let mut art = RunArtifacts::default();
    let scenario_file = out.join("scenario.toml");
    scenario.save(&scenario_file)?;
    art.files.push(scenario_file);
    let thresholds = MonitorThresholds::default();

    let (status, exit_code) = match config.mode {
        Mode::Validate => {
            let report = validate_scenario(&scenario);
            let structural = scenario.setup().ok().map(|s| {
                let bound = report.hs_w0.unwrap_or(1.0).max(1.0);
                check_structural_assumptions(&s.model, &s.constants, &s.freq, &s.quad, bound)
            });
            let p = out.join("validation.json");
            write_json(
                &p,
                &ValidationSummary {
                    scenario: &report,
                    structural: structural.as_ref(),
                },
            )?;
            art.files.push(p);
            let ok = report.passed() && structural.as_ref().is_some_and(|r| r.passed());
            (None, if ok { 0 } else { 1 })
        }
        Mode::Certify => {
            let setup = scenario.setup()?;
            let cert = compute_certificate(&scenario, &setup, &thresholds)?;
            let p = out.join("certificate.json");
            write_json(&p, &cert)?;
            art.certificate = Some(p.clone());
            art.files.push(p);
            (None, 0)
        }
        Mode::Picard => {
            let problem = scenario.picard_problem()?;
            let (trace, failure) = match picard_iterate(&problem) {
                Ok(o) => (o.trace, None),
                Err(Error::ContractionFailure { k, trace }) => (*trace, Some(k)),
                Err(e) => return Err(e),
            };
            let doublings = scenario.picard.map(|p| p.doublings).unwrap_or(0);
            let sweep = horizon_sweep(&problem, doublings)?;
            let csv_path = out.join("picard.csv");
            trace.write_csv(std::fs::File::create(&csv_path)?)?;
            let json_path = out.join("picard.json");
            write_json(
                &json_path,
                &PicardSummary {
                    scenario: &scenario.name,
                    trace: &trace,
                    max_ratio_last_half: trace.max_ratio_last_half(),
                    telescoping_ratio: trace.telescoping_ratio(),
                    contraction_failure_at: failure,
                    horizon_sweep: &sweep,
                },
            )?;
            art.files.push(csv_path);
            art.files.push(json_path);
            let plots = emit_plots(out, &[], &BlowupCertificate::default(), Some(&trace))?;
            art.files.extend(plots.iter().cloned());
            art.plots = plots;
            (None, if failure.is_some() { 1 } else { 0 })
        }
        Mode::Simulate => {
            let report = validate_scenario(&scenario);
            if !report.passed() {
                return Err(Error::InvalidConfig(format!(
                    "scenario '{}' does not validate: {}",
                    scenario.name,
                    report.failures().join("; ")
                )));
            }
            let res = simulate(&scenario, &thresholds)?;
            let init = out.join("snapshot_initial.ebsnap");
            Snapshot::from_state(0.0, &res.setup.grid, &res.setup.constants, &res.setup.fluid, &res.setup.radiation)
                .save(&init)?;
            let fin = out.join("snapshot_final.ebsnap");
            Snapshot::from_state(res.t, &res.setup.grid, &res.setup.constants, &res.fluid, &res.radiation).save(&fin)?;
            let ts = out.join("timeseries.csv");
            write_timeseries(&ts, &res.rows)?;
            let cert = out.join("certificate.json");
            write_json(&cert, &res.certificate)?;
            let summary = out.join("summary.json");
            write_json(
                &summary,
                &SimulationSummary {
                    scenario: &scenario.name,
                    status: res.status,
                    t_end: res.t,
                    steps: res.steps,
                    trigger_time: res.trigger_time(),
                    events: &res.events,
                    drift: &res.drift,
                    holder_violations: res.holder_violations,
                },
            )?;
            let plots = emit_plots(out, &res.rows, &res.certificate, None)?;
            art.snapshots = vec![init.clone(), fin.clone()];
            art.timeseries = Some(ts.clone());
            art.certificate = Some(cert.clone());
            art.files.extend([init, fin, ts, cert, summary]);
            art.files.extend(plots.iter().cloned());
            art.plots = plots;
            let code = if res.status == Status::BlownUp { 2 } else { 0 };
            (Some(res.status), code)
        }
    };
    let artifacts = finish(out, art)?;
    Ok(RunOutcome {
        mode: config.mode,
        status,
        exit_code,
        artifacts,
    })
}

/// Re-renders plots from the files of an earlier run and refreshes its manifest.
pub fn plot(out: &Path) -> Result<Vec<PathBuf>> {
    let ts = out.join("timeseries.csv");
    let rows = if ts.exists() { crate::io::read_timeseries(&ts)? } else { Vec::new() };
    let cert_path = out.join("certificate.json");
    let cert: BlowupCertificate = if cert_path.exists() {
        serde_json::from_str(&std::fs::read_to_string(&cert_path)?)?
    } else {
        BlowupCertificate::default()
    };
    let picard_path = out.join("picard.csv");
    let trace = if picard_path.exists() {
        Some(IterationTrace::read_csv(std::fs::File::open(&picard_path)?)?)
    } else {
        None
    };
    let plots = emit_plots(out, &rows, &cert, trace.as_ref())?;
    let manifest_path = out.join("manifest.json");
    let mut files: Vec<PathBuf> = if manifest_path.exists() {
        Manifest::load(&manifest_path)?.entries.iter().map(|e| out.join(&e.path)).collect()
    } else {
        Vec::new()
    };
    files.extend(plots.iter().cloned());
    files.retain(|f| f.exists());
    Manifest::build(out, &files)?.save(&manifest_path)?;
    Ok(plots)
}
