//! Fluid update, vacuum dynamics, particle paths and vacuum geometry.
//!
//! Density is advanced with a conservative Rusanov flux, velocity with a
//! local Lax–Friedrichs discretization of the symmetric quasilinear rows.
//! Cells that are vacuum together with all their face neighbors follow the
//! pressureless (damped) Burgers dynamics instead.

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::kappa;
use crate::error::{invalid, Error, Result};
use crate::grid::{Edge, Grid};
use crate::symhyp::{max_wave_speed, rho_from_w, w_from_rho, SymmetrizedState};

#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub rho: Vec<f64>,
    pub u: Vec<[f64; 3]>,
    pub w: Vec<f64>,
    pub p: Vec<f64>,
    pub gamma: f64,
}

impl FluidState {
    pub fn new(rho: Vec<f64>, u: Vec<[f64; 3]>, gamma: f64) -> Result<Self> {
        if rho.len() != u.len() {
            return Err(Error::DimensionMismatch {
                expected: rho.len(),
                found: u.len(),
            });
        }
        let mut s = FluidState {
            w: vec![0.0; rho.len()],
            p: vec![0.0; rho.len()],
            rho,
            u,
            gamma,
        };
        s.refresh()?;
        Ok(s)
    }

    pub fn from_symmetrized(state: &SymmetrizedState, gamma: f64) -> Result<Self> {
        let rho = state
            .w
            .iter()
            .map(|&w| rho_from_w(w.max(0.0), gamma))
            .collect::<Result<Vec<_>>>()?;
        FluidState::new(rho, state.u.clone(), gamma)
    }

    /// Restores `w = ρ^((γ−1)/2)` and `p = ρ^γ`.
    pub fn refresh(&mut self) -> Result<()> {
        for i in 0..self.rho.len() {
            let r = self.rho[i];
            self.w[i] = w_from_rho(r, self.gamma)?;
            self.p[i] = if r == 0.0 { 0.0 } else { r.powf(self.gamma) };
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn symmetrized(&self) -> SymmetrizedState {
        SymmetrizedState {
            w: self.w.clone(),
            u: self.u.clone(),
        }
    }

    pub fn mass(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.rho)
    }

    pub fn momentum(&self, grid: &Grid) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (r, u) in self.rho.iter().zip(&self.u) {
            for a in 0..3 {
                m[a] += r * u[a];
            }
        }
        m.map(|x| x * grid.cell_volume())
    }

    pub fn max_speed(&self) -> f64 {
        self.u
            .iter()
            .map(|u| (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `max_x |∇u|` (Frobenius norm of the centered-difference Jacobian).
pub fn max_velocity_gradient(u: &[[f64; 3]], grid: &Grid) -> f64 {
    velocity_gradient_norms(u, grid).into_iter().fold(0.0, f64::max)
}

pub fn velocity_gradient_norms(u: &[[f64; 3]], grid: &Grid) -> Vec<f64> {
    let mut acc = vec![0.0; grid.len()];
    for comp in 0..3 {
        let f: Vec<f64> = u.iter().map(|v| v[comp]).collect();
        if f.iter().all(|&x| x == 0.0) {
            continue;
        }
        for axis in 0..grid.dim() {
            for (a, d) in acc.iter_mut().zip(grid.derivative(&f, axis)) {
                *a += d * d;
            }
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Spatial part of the local Lax–Friedrichs discretization of
/// `A₀∂ₜU + Σⱼ Aⱼ(Ū)∂ⱼU = 0`, i.e. `−Σⱼ A₀⁻¹Aⱼ(Ū) δⱼU + diffusion`, with
/// matrices frozen at `frozen` and differences taken on `state`.
pub fn symmetric_rate(grid: &Grid, gamma: f64, frozen: &SymmetrizedState, state: &SymmetrizedState) -> Vec<[f64; 4]> {
    let k = kappa(gamma);
    let off_w = 0.5 * (gamma - 1.0);
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ub = frozen.cell(i);
            let uc = state.cell(i);
            let mut rate = [0.0; 4];
            for axis in 0..grid.dim() {
                let h = grid.spacing(axis);
                let l = grid.neighbor(i, axis, -1).unwrap_or(i);
                let r = grid.neighbor(i, axis, 1).unwrap_or(i);
                let ul = state.cell(l);
                let ur = state.cell(r);
                let d: [f64; 4] = std::array::from_fn(|c| (ur[c] - ul[c]) / (2.0 * h));
                let uj = ub[1 + axis];
                // A₀⁻¹Aⱼ(Ū) δU
                rate[0] -= uj * d[0] + off_w * ub[0] * d[1 + axis];
                for c in 1..4 {
                    rate[c] -= uj * d[c];
                }
                rate[1 + axis] -= off_w / k * ub[0] * d[0];
                let a_here = max_wave_speed(ub, gamma, axis);
                let a_l = a_here.max(max_wave_speed(frozen.cell(l), gamma, axis));
                let a_r = a_here.max(max_wave_speed(frozen.cell(r), gamma, axis));
                for c in 0..4 {
                    rate[c] += (a_r * (ur[c] - uc[c]) - a_l * (uc[c] - ul[c])) / (2.0 * h);
                }
            }
            rate
        })
        .collect()
}

/// Largest stable step of the symmetric LLF operator at CFL number `cfl`.
pub fn symmetric_dt(grid: &Grid, gamma: f64, frozen: &SymmetrizedState, cfl: f64) -> f64 {
    let worst = (0..grid.len())
        .map(|i| {
            (0..grid.dim())
                .map(|a| max_wave_speed(frozen.cell(i), gamma, a) / grid.spacing(a))
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    if worst == 0.0 {
        f64::INFINITY
    } else {
        cfl / worst
    }
}

#[derive(Clone, Debug)]
pub struct HydroSolver {
    pub grid: Grid,
    pub gamma: f64,
    /// Linear damping rate.
    pub alpha: f64,
    pub cfl: f64,
    /// Density below which a cell counts as vacuum.
    pub rho_vac: f64,
}

#[derive(Clone, Debug)]
pub struct HydroOutcome {
    pub state: FluidState,
    /// Largest negative density removed by clipping.
    pub w_clip: f64,
    pub vacuum_cells: usize,
}

impl HydroSolver {
    pub fn new(grid: Grid, gamma: f64, alpha: f64, cfl: f64, rho0_max: f64) -> Result<Self> {
        crate::coefficients::check_gamma(gamma)?;
        if !(cfl > 0.0 && cfl <= 1.0) {
            return invalid(format!("CFL number must lie in (0, 1], got {cfl}"));
        }
        if !(alpha >= 0.0) {
            return invalid(format!("damping rate must be non-negative, got {alpha}"));
        }
        Ok(HydroSolver {
            grid,
            gamma,
            alpha,
            cfl,
            rho_vac: 1e-12 * rho0_max.max(0.0),
        })
    }

    /// A cell is vacuum only if it and all its face neighbors are below threshold.
    pub fn vacuum_mask(&self, state: &FluidState) -> Vec<bool> {
        let below: Vec<bool> = state.rho.iter().map(|&r| r <= self.rho_vac).collect();
        (0..self.grid.len())
            .map(|i| {
                below[i]
                    && (0..self.grid.dim()).all(|a| {
                        [-1, 1]
                            .iter()
                            .all(|&o| self.grid.neighbor(i, a, o).map(|j| below[j]).unwrap_or(true))
                    })
            })
            .collect()
    }

    /// Acoustic CFL limit `cfl / max Σⱼ (|uⱼ| + √γ w)/hⱼ`.
    pub fn max_dt(&self, state: &FluidState) -> f64 {
        symmetric_dt(&self.grid, self.gamma, &state.symmetrized(), self.cfl)
    }

    /// Step limit of the vacuum characteristics, `0.5 / max|∇u|` over vacuum cells.
    pub fn vacuum_dt(&self, state: &FluidState) -> f64 {
        let mask = self.vacuum_mask(state);
        let g = velocity_gradient_norms(&state.u, &self.grid);
        let worst = g
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(g, _)| *g)
            .fold(0.0, f64::max);
        if worst == 0.0 {
            f64::INFINITY
        } else {
            0.5 / worst
        }
    }

    /// One explicit step. `source` holds `G` per cell (or `None` for no source).
    pub fn step(&self, state: &FluidState, source: Option<&[[f64; 4]]>, dt: f64, t: f64) -> Result<HydroOutcome> {
        let grid = &self.grid;
        let n = grid.len();
        if state.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: state.len(),
            });
        }
        if let Some(s) = source {
            if s.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.len() });
            }
        }
        let required = self.max_dt(state);
        if dt > required * (1.0 + 1e-12) {
            return Err(Error::StepRejected { required_dt: required });
        }
        let gamma = self.gamma;
        let k = kappa(gamma);
        let sym = state.symmetrized();
        let rate = symmetric_rate(grid, gamma, &sym, &sym);
        let mask = self.vacuum_mask(state);
        let sg = gamma.sqrt();

        let flux_div: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut div = 0.0;
                for axis in 0..grid.dim() {
                    let h = grid.spacing(axis);
                    let face = |l: usize, r: usize| {
                        let (ul, ur) = (state.u[l][axis], state.u[r][axis]);
                        let a = (ul.abs() + sg * state.w[l]).max(ur.abs() + sg * state.w[r]);
                        0.5 * (state.rho[l] * ul + state.rho[r] * ur) - 0.5 * a * (state.rho[r] - state.rho[l])
                    };
                    let l = grid.neighbor(i, axis, -1).unwrap_or(i);
                    let r = grid.neighbor(i, axis, 1).unwrap_or(i);
                    div += (face(i, r) - face(l, i)) / h;
                }
                div
            })
            .collect();

        let alpha = self.alpha;
        let mut rho = vec![0.0; n];
        let mut u = vec![[0.0; 3]; n];
        let mut w_clip = 0.0f64;
        for i in 0..n {
            let mut r = state.rho[i] - dt * flux_div[i];
            let src = source.map(|s| s[i]).unwrap_or([0.0; 4]);
            if !mask[i] && src[0] != 0.0 && state.w[i] > 0.0 {
                let drho_dw = 2.0 / (gamma - 1.0) * state.w[i].powf((3.0 - gamma) / (gamma - 1.0));
                r += dt * drho_dw * src[0];
            }
            if r < 0.0 {
                w_clip = w_clip.max(-r);
                r = 0.0;
            }
            rho[i] = r;
            if !mask[i] {
                for c in 0..3 {
                    u[i][c] = state.u[i][c] + dt * (rate[i][1 + c] + src[1 + c] / k - alpha * state.u[i][c]);
                }
            }
        }
        let vacuum_cells = mask.iter().filter(|&&m| m).count();
        if vacuum_cells > 0 {
            let ub = vacuum_burgers_step(&state.u, &mask, dt, alpha, grid, t)?;
            for i in 0..n {
                if mask[i] {
                    u[i] = ub[i];
                }
            }
        }
        if rho.iter().any(|x| !x.is_finite()) || u.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::SolverDiverged(format!("non-finite fluid state at t = {t}")));
        }
        let mut next = FluidState {
            rho,
            u,
            w: vec![0.0; n],
            p: vec![0.0; n],
            gamma,
        };
        next.refresh()?;
        Ok(HydroOutcome {
            state: next,
            w_clip,
            vacuum_cells,
        })
    }
}

/// Damped pressureless update on masked cells:
/// `u(t+Δt, x) = e^{−αΔt} u(t, x − φ u(t+Δt, x))`, `φ = (e^{αΔt} − 1)/α`,
/// solved by fixed-point iteration with multilinear interpolation.
pub fn vacuum_burgers_step(
    u: &[[f64; 3]],
    mask: &[bool],
    dt: f64,
    alpha: f64,
    grid: &Grid,
    t: f64,
) -> Result<Vec<[f64; 3]>> {
    if u.len() != grid.len() || mask.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: u.len().min(mask.len()),
        });
    }
    let comps: Vec<Vec<f64>> = (0..3).map(|c| u.iter().map(|v| v[c]).collect()).collect();
    let active: Vec<bool> = comps.iter().map(|f| f.iter().any(|&x| x != 0.0)).collect();
    let decay = (-alpha * dt).exp();
    let phi = if alpha > 0.0 { (alpha * dt).exp_m1() / alpha } else { dt };
    let dim = grid.dim();
    let sample = |x: [f64; 3]| -> [f64; 3] {
        let x = grid.wrap(x);
        std::array::from_fn(|c| {
            if active[c] {
                decay * grid.sample(&comps[c], x, Edge::Extrapolate)
            } else {
                0.0
            }
        })
    };
    let out: Vec<Result<[f64; 3]>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if !mask[i] {
                return Ok(u[i]);
            }
            let x = grid.center(i);
            let mut cur = u[i].map(|v| decay * v);
            let scale = 1.0 + cur.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for _ in 0..50 {
                let mut foot = x;
                for a in 0..dim {
                    foot[a] -= phi * cur[a];
                }
                let next = sample(foot);
                let change = (0..3).map(|c| (next[c] - cur[c]).abs()).fold(0.0, f64::max);
                cur = next;
                if change <= 1e-14 * scale {
                    return Ok(cur);
                }
            }
            Err(Error::NearSingularity { t, cell: i })
        })
        .collect();
    out.into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowMap {
    pub initial: Vec<[f64; 3]>,
    pub positions: Vec<[f64; 3]>,
    pub frozen: Vec<bool>,
    /// Number of leading tracers that mark ∂A₀ and ∂B₀.
    pub boundary_tracers: usize,
    pub t: f64,
}

impl FlowMap {
    pub fn new(seeds: Vec<[f64; 3]>, boundary_tracers: usize) -> Self {
        FlowMap {
            frozen: vec![false; seeds.len()],
            initial: seeds.clone(),
            positions: seeds,
            boundary_tracers,
            t: 0.0,
        }
    }

    pub fn max_displacement(&self, count: usize) -> f64 {
        self.positions
            .iter()
            .zip(&self.initial)
            .take(count)
            .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Midpoint RK2 for `dX/dt = u(t, X)` with `u` linear in time between
/// `u_start` and `u_end`.
pub fn advance_flow_map(map: &FlowMap, u_start: &[[f64; 3]], u_end: &[[f64; 3]], dt: f64, grid: &Grid) -> FlowMap {
    let comp = |u: &[[f64; 3]], c: usize| -> Vec<f64> { u.iter().map(|v| v[c]).collect() };
    let s: Vec<Vec<f64>> = (0..3).map(|c| comp(u_start, c)).collect();
    let mid: Vec<Vec<f64>> = (0..3)
        .map(|c| u_start.iter().zip(u_end).map(|(a, b)| 0.5 * (a[c] + b[c])).collect())
        .collect();
    let dim = grid.dim();
    let vel = |f: &[Vec<f64>], x: [f64; 3]| -> [f64; 3] {
        std::array::from_fn(|c| if c < dim { grid.sample(&f[c], x, Edge::Clamp) } else { 0.0 })
    };
    let mut next = map.clone();
    for i in 0..map.positions.len() {
        if map.frozen[i] {
            continue;
        }
        let x = map.positions[i];
        let v1 = vel(&s, x);
        let xm: [f64; 3] = std::array::from_fn(|a| x[a] + 0.5 * dt * v1[a]);
        let v2 = vel(&mid, grid.wrap(xm));
        let mut xn: [f64; 3] = std::array::from_fn(|a| x[a] + dt * v2[a]);
        if grid.periodic() {
            xn = grid.wrap(xn);
        } else if !grid.contains(xn) {
            next.frozen[i] = true;
            continue;
        }
        next.positions[i] = xn;
    }
    next.t = map.t + dt;
    next
}

/// `ρ(t) = ρ₀(foot) exp(−∫₀ᵗ div u ds)`, trapezoid rule on uniform samples.
pub fn lagrangian_density(rho0_at_foot: f64, divu_history: &[f64], dt: f64) -> f64 {
    let n = divu_history.len();
    if n < 2 {
        return rho0_at_foot;
    }
    let integral = dt * (divu_history.iter().sum::<f64>() - 0.5 * (divu_history[0] + divu_history[n - 1]));
    rho0_at_foot * (-integral).exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct VacuumGeometry {
    pub center: [f64; 3],
    pub a0_radius: f64,
    pub b0_radius: f64,
    pub r0: f64,
    pub a0_mask: Vec<bool>,
    pub b0_mask: Vec<bool>,
}

impl VacuumGeometry {
    /// Concentric balls `A₀ = B_a`, `B₀ = B_b` inside `B_{R₀}`.
    pub fn balls(grid: &Grid, center: [f64; 3], a0_radius: f64, b0_radius: f64, r0: f64) -> Result<Self> {
        if !(0.0 < a0_radius && a0_radius < b0_radius && b0_radius <= r0) {
            return invalid(format!(
                "need 0 < a0 < b0 <= R0, got a0 = {a0_radius}, b0 = {b0_radius}, R0 = {r0}"
            ));
        }
        let dist = |x: [f64; 3]| ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) + (x[2] - center[2]).powi(2)).sqrt();
        let centers = grid.centers();
        Ok(VacuumGeometry {
            center,
            a0_radius,
            b0_radius,
            r0,
            a0_mask: centers.iter().map(|&x| dist(x) < a0_radius).collect(),
            b0_mask: centers.iter().map(|&x| dist(x) < b0_radius).collect(),
        })
    }

    pub fn radius(&self, x: [f64; 3]) -> f64 {
        ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2) + (x[2] - self.center[2]).powi(2)).sqrt()
    }

    /// Discrete closure check: every `A₀` cell's face neighbors lie in `B₀`.
    pub fn closure_contained(&self, grid: &Grid) -> bool {
        (0..grid.len()).filter(|&i| self.a0_mask[i]).all(|i| {
            (0..grid.dim()).all(|a| {
                [-1, 1]
                    .iter()
                    .all(|&o| grid.neighbor(i, a, o).map(|j| self.b0_mask[j]).unwrap_or(false))
            })
        })
    }

    /// Tracers on `∂A₀` and `∂B₀`.
    pub fn boundary_seeds(&self, dim: usize) -> Vec<[f64; 3]> {
        let mut dirs: Vec<[f64; 3]> = Vec::new();
        if dim == 1 {
            dirs.push([1.0, 0.0, 0.0]);
            dirs.push([-1.0, 0.0, 0.0]);
        } else {
            for a in 0..3 {
                for s in [-1.0, 1.0] {
                    let mut d = [0.0; 3];
                    d[a] = s;
                    dirs.push(d);
                }
            }
            let q = 1.0 / 3f64.sqrt();
            for sx in [-q, q] {
                for sy in [-q, q] {
                    for sz in [-q, q] {
                        dirs.push([sx, sy, sz]);
                    }
                }
            }
        }
        let mut seeds = Vec::new();
        for r in [self.a0_radius, self.b0_radius] {
            for d in &dirs {
                seeds.push(std::array::from_fn(|a| self.center[a] + r * d[a]));
            }
        }
        seeds
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub t: f64,
    pub max_drift: f64,
    pub cell_width: f64,
    pub pass: bool,
}

/// Boundary tracers of `A₀`, `B₀` must stay within one cell width.
pub fn vacuum_stationarity_check(map: &FlowMap, grid: &Grid) -> DriftReport {
    let drift = map.max_displacement(map.boundary_tracers);
    let h = grid.min_spacing();
    DriftReport {
        t: map.t,
        max_drift: drift,
        cell_width: h,
        pass: drift <= h,
    }
}
