use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use super::{mollify, sobolev_norm, MollifierConfig};
use crate::coefficients::{CoefficientModel, PhysicalConstants};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hydro::{symmetric_dt, symmetric_rate, FluidState};
use crate::quadrature::{AngularQuadrature, FrequencyGrid};
use crate::symhyp::{collision_source_f, radiation_source_g, SymmetrizedState};
use crate::transport::{RadiationField, TransportBackend, TransportSolver};

/// Uniformly sampled fluid and radiation trajectory on `[0, T]`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub fluid: Vec<SymmetrizedState>,
    pub radiation: Vec<RadiationField>,
}

impl Trajectory {
    /// The same state held for `steps + 1` samples.
    pub fn constant(u: SymmetrizedState, i: RadiationField, steps: usize, dt: f64) -> Self {
        Trajectory {
            dt,
            fluid: vec![u; steps + 1],
            radiation: vec![i; steps + 1],
        }
    }

    pub fn samples(&self) -> usize {
        self.fluid.len()
    }

    pub fn last(&self) -> (&SymmetrizedState, &RadiationField) {
        (self.fluid.last().expect("non-empty"), self.radiation.last().expect("non-empty"))
    }
}

/// Initial data and discretization for the iteration experiment.
#[derive(Clone, Debug)]
pub struct PicardProblem {
    pub grid: Grid,
    pub constants: PhysicalConstants,
    pub model: CoefficientModel,
    pub freq: FrequencyGrid,
    pub quad: AngularQuadrature,
    pub w0: Vec<f64>,
    pub u0: Vec<[f64; 3]>,
    pub i0: RadiationField,
    pub mollifier: MollifierConfig,
    pub horizon: f64,
    pub dt: f64,
    pub k_max: usize,
    /// Order of the recorded Sobolev norms.
    pub s: usize,
}

impl PicardProblem {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).ceil().max(1.0) as usize
    }

    /// Step actually used: `T / steps`.
    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        let n = self.grid.len();
        if self.w0.len() != n || self.u0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.w0.len().min(self.u0.len()),
            });
        }
        self.i0.check_layout(&self.freq, &self.quad, &self.grid)?;
        if !(self.horizon > 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "horizon and dt must be positive (T = {}, dt = {})",
                self.horizon, self.dt
            )));
        }
        if self.w0.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("w0 must be finite and non-negative".into()));
        }
        if self.i0.intensities.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput("I0 must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Initial data mollified at level `k`; the flag is false when `ε_k < 2h`.
    pub fn initial_data(&self, k: usize) -> Result<(SymmetrizedState, RadiationField, bool)> {
        let eps = self.mollifier.epsilon(k);
        let m = mollify(&self.w0, eps, &self.grid, &self.mollifier)?;
        let applied = m.applied;
        let mut u = SymmetrizedState::zeros(self.grid.len());
        u.w = m.field;
        for c in 0..3 {
            let comp: Vec<f64> = self.u0.iter().map(|v| v[c]).collect();
            if comp.iter().all(|&x| x == 0.0) {
                continue;
            }
            for (dst, v) in u.u.iter_mut().zip(mollify(&comp, eps, &self.grid, &self.mollifier)?.field) {
                dst[c] = v;
            }
        }
        let mut i = self.i0.clone();
        let cells = i.cells;
        for gk in 0..i.groups * i.ordinates {
            let ray = &mut i.intensities[gk * cells..(gk + 1) * cells];
            let sm = mollify(ray, eps, &self.grid, &self.mollifier)?.field;
            ray.copy_from_slice(&sm);
        }
        Ok((u, i, applied))
    }

    fn transport(&self) -> TransportSolver {
        TransportSolver {
            grid: self.grid.clone(),
            freq: self.freq.clone(),
            quad: self.quad.clone(),
            model: self.model.clone(),
            constants: self.constants,
            backend: TransportBackend::Characteristic,
        }
    }
}

/// One linear solve: transport with absorption frozen at `previous`, and the
/// symmetric system with matrices `Aⱼ(U^(k))` and source `G(I^(k), U^(k))`.
pub fn linearized_solve(
    problem: &PicardProblem,
    previous: &Trajectory,
    initial: (&SymmetrizedState, &RadiationField),
) -> Result<Trajectory> {
    let steps = problem.steps();
    let dt = problem.step_size();
    if previous.samples() != steps + 1 {
        return Err(Error::DimensionMismatch {
            expected: steps + 1,
            found: previous.samples(),
        });
    }
    let grid = &problem.grid;
    let gamma = problem.constants.gamma;
    let kappa = problem.constants.kappa();
    let alpha = problem.constants.alpha;
    let transport = problem.transport();
    let mut fluid = Vec::with_capacity(steps + 1);
    let mut radiation = Vec::with_capacity(steps + 1);
    fluid.push(initial.0.clone());
    radiation.push(initial.1.clone());
    for n in 0..steps {
        let frozen = &previous.fluid[n];
        let frozen_i = &previous.radiation[n];
        if frozen.w.iter().chain(frozen.u.iter().flatten()).any(|x| !x.is_finite())
            || frozen_i.intensities.iter().any(|x| !x.is_finite())
        {
            return Err(Error::InvalidInput(format!("non-finite frozen coefficients at step {n}")));
        }
        let limit = symmetric_dt(grid, gamma, frozen, 1.0);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepRejected { required_dt: limit });
        }
        let frozen_fluid = FluidState::from_symmetrized(frozen, gamma)?;
        let source = frozen_source(problem, frozen, frozen_i)?;

        let next_i = transport.step(&radiation[n], &frozen_fluid, dt)?;
        let cur: &SymmetrizedState = &fluid[n];
        let rate = symmetric_rate(grid, gamma, frozen, cur);
        let mut next = cur.clone();
        for i in 0..grid.len() {
            next.w[i] += dt * (rate[i][0] + source[i][0]);
            for c in 0..3 {
                next.u[i][c] += dt * (rate[i][1 + c] + source[i][1 + c] / kappa - alpha * cur.u[i][c]);
            }
        }
        fluid.push(next);
        radiation.push(next_i);
    }
    Ok(Trajectory { dt, fluid, radiation })
}

fn frozen_source(problem: &PicardProblem, u: &SymmetrizedState, i: &RadiationField) -> Result<Vec<[f64; 4]>> {
    (0..problem.grid.len())
        .into_par_iter()
        .map(|cell| {
            let w = u.w[cell].max(0.0);
            let intens = i.cell_intensities(cell);
            if problem.model.scattering.is_some() {
                collision_source_f(&intens, w, &problem.model, &problem.freq, &problem.quad, &problem.constants)
            } else {
                radiation_source_g(&intens, w, &problem.model, &problem.freq, &problem.quad, &problem.constants)
            }
        })
        .collect()
}

/// `max_t ‖ΔU‖₀` and `(Σ_g Σ_k w_g w_k max_t ‖ΔI_gk‖₀²)^(1/2)`.
pub fn trajectory_difference(a: &Trajectory, b: &Trajectory, problem: &PicardProblem) -> (f64, f64) {
    let grid = &problem.grid;
    let mut du = 0.0f64;
    for (x, y) in a.fluid.iter().zip(&b.fluid) {
        let mut sq = 0.0;
        let dw: Vec<f64> = x.w.iter().zip(&y.w).map(|(p, q)| p - q).collect();
        sq += grid.l2_norm(&dw).powi(2);
        for c in 0..3 {
            let d: Vec<f64> = x.u.iter().zip(&y.u).map(|(p, q)| p[c] - q[c]).collect();
            sq += grid.l2_norm(&d).powi(2);
        }
        du = du.max(sq.sqrt());
    }
    let groups = problem.freq.len();
    let nk = problem.quad.len();
    let cells = grid.len();
    let mut di = 0.0;
    for g in 0..groups {
        for k in 0..nk {
            let s = (g * nk + k) * cells;
            let mut worst = 0.0f64;
            for (x, y) in a.radiation.iter().zip(&b.radiation) {
                let d: Vec<f64> = x.intensities[s..s + cells]
                    .iter()
                    .zip(&y.intensities[s..s + cells])
                    .map(|(p, q)| p - q)
                    .collect();
                worst = worst.max(grid.l2_norm(&d));
            }
            di += problem.freq.weights[g] * problem.quad.weights[k] * worst * worst;
        }
    }
    (du, di.sqrt())
}

fn state_sobolev_norm(u: &SymmetrizedState, s: usize, grid: &Grid) -> Result<f64> {
    let mut sq = sobolev_norm(&u.w, s, grid)?.powi(2);
    for c in 0..3 {
        let comp: Vec<f64> = u.u.iter().map(|v| v[c]).collect();
        sq += sobolev_norm(&comp, s, grid)?.powi(2);
    }
    Ok(sq.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖U^(k+1) − U^(k)‖`, time-max.
    pub diff_u: f64,
    /// Weighted intensity difference, time-max inside the `(v, Ω)` sum.
    pub diff_i: f64,
    /// `diff_{k+1} / diff_k` on the combined difference; set once `k+1` is recorded.
    pub ratio: Option<f64>,
    /// `max_t ‖U^(k)‖_s`.
    pub norm_s: f64,
    /// Whether the level-`k` mollifier was active (`ε_k ≥ 2h`).
    pub mollified: bool,
}

impl IterationRecord {
    pub fn combined(&self) -> f64 {
        self.diff_u.hypot(self.diff_i)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub horizon: f64,
    pub dt: f64,
    pub s: usize,
    records: Vec<IterationRecord>,
    /// Consecutive-level differences of the mollified initial fluid data.
    pub telescoping: Vec<f64>,
}

impl IterationTrace {
    pub fn new(horizon: f64, dt: f64, s: usize) -> Self {
        IterationTrace {
            horizon,
            dt,
            s,
            ..Default::default()
        }
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    /// Appends the next record and fills in the previous record's ratio.
    pub fn push(&mut self, mut record: IterationRecord) {
        record.k = self.records.len();
        record.ratio = None;
        let d = record.combined();
        if let Some(prev) = self.records.last_mut() {
            let p = prev.combined();
            if p > 0.0 {
                prev.ratio = Some(d / p);
            }
        }
        self.records.push(record);
    }

    pub fn ratios(&self) -> Vec<(usize, f64)> {
        self.records.iter().filter_map(|r| r.ratio.map(|x| (r.k, x))).collect()
    }

    /// Largest measured ratio over the last half of the iterations.
    pub fn max_ratio_last_half(&self) -> Option<f64> {
        let r = self.ratios();
        let half = r.len() / 2;
        r[half..].iter().map(|x| x.1).reduce(f64::max)
    }

    /// Geometric decay ratio of the telescoping differences (log-linear fit).
    pub fn telescoping_ratio(&self) -> Option<f64> {
        fitted_ratio(&self.telescoping)
    }

    /// CSV with columns `k, diff_U, diff_I, r_k, norm_s`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "diff_U", "diff_I", "r_k", "norm_s"])?;
        for r in &self.records {
            w.write_record([
                r.k.to_string(),
                format!("{:e}", r.diff_u),
                format!("{:e}", r.diff_i),
                r.ratio.map(|x| format!("{x:e}")).unwrap_or_default(),
                format!("{:e}", r.norm_s),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`IterationTrace::write_csv`]. Horizon, step and
    /// mollifier flags are not stored there and come back as defaults.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut trace = IterationTrace::default();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("picard trace row has {} columns", rec.len())))?
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("picard trace: {e}")))
            };
            let ratio = match rec.get(3) {
                Some("") | None => None,
                Some(_) => Some(num(3)?),
            };
            trace.records.push(IterationRecord {
                k: trace.records.len(),
                diff_u: num(1)?,
                diff_i: num(2)?,
                ratio,
                norm_s: num(4)?,
                mollified: false,
            });
        }
        Ok(trace)
    }
}

/// `exp` of the least-squares slope of `ln d_k` against `k`.
pub fn fitted_ratio(d: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = d
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(k, &x)| (k as f64, x.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

/// `‖J_{ε_{k+1}}U₀ − J_{ε_k}U₀‖₀` for every level pair where both mollifiers are active.
pub fn mollifier_telescoping(problem: &PicardProblem, levels: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let (mut prev, _, mut applied) = problem.initial_data(0)?;
    for k in 1..=levels {
        let (next, _, next_applied) = problem.initial_data(k)?;
        if !(applied && next_applied) {
            break;
        }
        let mut sq = 0.0;
        let dw: Vec<f64> = next.w.iter().zip(&prev.w).map(|(a, b)| a - b).collect();
        sq += problem.grid.l2_norm(&dw).powi(2);
        for c in 0..3 {
            let d: Vec<f64> = next.u.iter().zip(&prev.u).map(|(a, b)| a[c] - b[c]).collect();
            sq += problem.grid.l2_norm(&d).powi(2);
        }
        out.push(sq.sqrt());
        prev = next;
        applied = next_applied;
    }
    Ok(out)
}

/// Largest level `≤ max_level` at which the mollifier is still active (0 if none).
fn finest_active_level(problem: &PicardProblem, max_level: usize) -> Result<usize> {
    let h = problem.grid.min_spacing();
    Ok((0..=max_level)
        .take_while(|&k| problem.mollifier.epsilon(k) >= 2.0 * h)
        .last()
        .unwrap_or(0))
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub trace: IterationTrace,
    pub solution: Trajectory,
}

/// Runs `k_max + 2` linear solves so that ratios `r_0 … r_{k_max}` are measured.
pub fn picard_iterate(problem: &PicardProblem) -> Result<PicardOutcome> {
    problem.validate()?;
    let steps = problem.steps();
    let dt = problem.step_size();
    let mut trace = IterationTrace::new(problem.horizon, dt, problem.s);
    trace.telescoping = mollifier_telescoping(problem, problem.k_max + 2)?;
    let finest = finest_active_level(problem, problem.k_max + 2)?;
    let (u0, i0, _) = problem.initial_data(0)?;
    let mut current = Trajectory::constant(u0, i0, steps, dt);
    let mut growth = 0;
    let mut last = f64::NAN;
    for k in 0..=problem.k_max + 1 {
        // below 2h the data stays at the finest resolvable level
        let level = (k + 1).min(finest);
        let (u, i, _) = problem.initial_data(level)?;
        let mollified = k + 1 <= finest;
        let next = linearized_solve(problem, &current, (&u, &i))?;
        let (diff_u, diff_i) = trajectory_difference(&next, &current, problem);
        let norm_s = current
            .fluid
            .iter()
            .map(|f| state_sobolev_norm(f, problem.s, &problem.grid))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let record = IterationRecord {
            k,
            diff_u,
            diff_i,
            ratio: None,
            norm_s,
            mollified,
        };
        let d = record.combined();
        trace.push(record);
        growth = if d > last { growth + 1 } else { 0 };
        last = d;
        if growth >= 3 {
            return Err(Error::ContractionFailure {
                k,
                trace: Box::new(trace),
            });
        }
        current = next;
    }
    Ok(PicardOutcome { trace, solution: current })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonEntry {
    pub horizon: f64,
    pub max_ratio: f64,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonSweep {
    pub entries: Vec<HorizonEntry>,
    /// First horizon whose late-iteration ratio reached 1.
    pub first_failure: Option<f64>,
}

/// Repeats the experiment with the horizon doubled `doublings` times.
pub fn horizon_sweep(problem: &PicardProblem, doublings: usize) -> Result<HorizonSweep> {
    let mut entries = Vec::new();
    let mut first_failure = None;
    for j in 0..=doublings {
        let mut p = problem.clone();
        p.horizon = problem.horizon * 2f64.powi(j as i32);
        let (trace, diverged) = match picard_iterate(&p) {
            Ok(o) => (o.trace, false),
            Err(Error::ContractionFailure { trace, .. }) => (*trace, true),
            // iterates that leave the step's stability region count as divergence
            Err(Error::StepRejected { .. } | Error::SolverDiverged(_)) => (IterationTrace::new(p.horizon, p.dt, p.s), true),
            Err(e) => return Err(e),
        };
        let max_ratio = if diverged {
            trace.ratios().iter().map(|x| x.1).fold(f64::NAN, f64::max)
        } else {
            trace.max_ratio_last_half().unwrap_or(0.0)
        };
        if first_failure.is_none() && (diverged || max_ratio >= 1.0) {
            first_failure = Some(p.horizon);
        }
        entries.push(HorizonEntry {
            horizon: p.horizon,
            max_ratio,
            diverged,
        });
    }
    Ok(HorizonSweep { entries, first_failure })
}
