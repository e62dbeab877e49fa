//! Radiative transfer `(1/c)∂ₜI + Ω·∇I = A_r` on the discrete
//! (frequency × ordinate × cell) lattice, and the radiation moments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{absorption_ka, emission_s, sigma_a_effective, CoefficientModel, Emission, PhysicalConstants};
use crate::error::{invalid, Error, Result};
use crate::grid::{Edge, Grid};
use crate::hydro::FluidState;
use crate::quadrature::{gauss_legendre, AngularQuadrature, FrequencyGrid};
use crate::symhyp::scattering_terms;

/// Intensities stored ray-family-major: index `(g * K + k) * cells + cell`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiationField {
    pub intensities: Vec<f64>,
    pub groups: usize,
    pub ordinates: usize,
    pub cells: usize,
}

impl RadiationField {
    pub fn from_fn(groups: usize, ordinates: usize, cells: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut intensities = Vec::with_capacity(groups * ordinates * cells);
        for g in 0..groups {
            for k in 0..ordinates {
                for c in 0..cells {
                    intensities.push(f(g, k, c));
                }
            }
        }
        RadiationField {
            intensities,
            groups,
            ordinates,
            cells,
        }
    }

    /// `I ≡ B̄(v_g)`.
    pub fn equilibrium(model: &CoefficientModel, freq: &FrequencyGrid, quad: &AngularQuadrature, cells: usize) -> Self {
        RadiationField::from_fn(freq.len(), quad.len(), cells, |g, _, _| model.bbar(freq.nodes[g]))
    }

    pub fn index(&self, g: usize, k: usize, cell: usize) -> usize {
        (g * self.ordinates + k) * self.cells + cell
    }

    pub fn get(&self, g: usize, k: usize, cell: usize) -> f64 {
        self.intensities[self.index(g, k, cell)]
    }

    pub fn ray(&self, g: usize, k: usize) -> &[f64] {
        let s = (g * self.ordinates + k) * self.cells;
        &self.intensities[s..s + self.cells]
    }

    /// All `(g, k)` intensities of one cell, group-major.
    pub fn cell_intensities(&self, cell: usize) -> Vec<f64> {
        (0..self.groups * self.ordinates)
            .map(|gk| self.intensities[gk * self.cells + cell])
            .collect()
    }

    pub fn check_layout(&self, freq: &FrequencyGrid, quad: &AngularQuadrature, grid: &Grid) -> Result<()> {
        let expected = freq.len() * quad.len() * grid.len();
        if self.groups != freq.len() || self.ordinates != quad.len() || self.cells != grid.len() || self.intensities.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.intensities.len(),
            });
        }
        Ok(())
    }

    /// `sup |I − B̄|` over masked cells (all cells when `mask` is `None`).
    pub fn max_deviation(&self, model: &CoefficientModel, freq: &FrequencyGrid, mask: Option<&[bool]>) -> f64 {
        let mut worst = 0.0f64;
        for g in 0..self.groups {
            let b = model.bbar(freq.nodes[g]);
            for k in 0..self.ordinates {
                for (c, &i) in self.ray(g, k).iter().enumerate() {
                    if mask.map(|m| m[c]).unwrap_or(true) {
                        worst = worst.max((i - b).abs());
                    }
                }
            }
        }
        worst
    }

    /// `(Σ_g Σ_k w_g w_k ‖I − B̄‖₀²)^(1/2)`.
    pub fn deviation_norm(&self, model: &CoefficientModel, freq: &FrequencyGrid, quad: &AngularQuadrature, grid: &Grid) -> f64 {
        let mut acc = 0.0;
        for g in 0..self.groups {
            let b = model.bbar(freq.nodes[g]);
            for k in 0..self.ordinates {
                let dev: Vec<f64> = self.ray(g, k).iter().map(|i| i - b).collect();
                acc += freq.weights[g] * quad.weights[k] * grid.l2_norm(&dev).powi(2);
            }
        }
        acc.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonPath {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
    pub c: f64,
}

impl PhotonPath {
    pub fn position(&self, t: f64) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + self.c * self.direction[a] * t)
    }
}

/// `B̄ + (I₀ − B̄) exp(−∫₀ᵗ c K_a(τ) dτ)`; the path integral uses a
/// composite 4-point Gauss rule on `segments` pieces.
pub fn integrate_along_ray(
    i0: f64,
    bbar: f64,
    ka_along_path: impl Fn(f64) -> f64,
    t: f64,
    c: f64,
    segments: usize,
) -> Result<f64> {
    if !(t >= 0.0) {
        return invalid(format!("ray duration must be non-negative, got {t}"));
    }
    let tau = c * path_integral(&ka_along_path, t, segments.max(1));
    Ok(bbar + (i0 - bbar) * (-tau).exp())
}

fn path_integral(f: &impl Fn(f64) -> f64, t: f64, segments: usize) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let (x, w) = gauss_legendre(4);
    let h = t / segments as f64;
    let mut acc = 0.0;
    for s in 0..segments {
        let a = s as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc += 0.5 * h * wi * f(a + 0.5 * h * (xi + 1.0));
        }
    }
    acc
}

/// Times in `[0, t]` where the path crosses a line of cell centers, with both ends.
fn lattice_crossings(grid: &Grid, path: &PhotonPath, t: f64) -> Vec<f64> {
    let mut knots = vec![0.0, t];
    let lo = grid.lo();
    for a in 0..grid.dim() {
        let speed = path.c * path.direction[a];
        if speed == 0.0 {
            continue;
        }
        let h = grid.spacing(a);
        let s0 = (path.origin[a] - lo[a]) / h - 0.5;
        let s1 = s0 + speed * t / h;
        let (from, to) = if s0 < s1 { (s0, s1) } else { (s1, s0) };
        let mut j = from.floor() + 1.0;
        while j < to {
            knots.push((j - s0) * h / speed);
            j += 1.0;
        }
    }
    knots.sort_by(f64::total_cmp);
    knots
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TransportBackend {
    /// Semi-Lagrangian tracing along photon characteristics.
    #[default]
    Characteristic,
    /// First-order upwind with implicit absorption.
    Sweep,
}

impl std::str::FromStr for TransportBackend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "characteristic" => Ok(TransportBackend::Characteristic),
            "sweep" => Ok(TransportBackend::Sweep),
            _ => Err(Error::InvalidConfig(format!("unknown backend {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
struct Relaxation {
    rate: Vec<f64>,
    source: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TransportSolver {
    pub grid: Grid,
    pub freq: FrequencyGrid,
    pub quad: AngularQuadrature,
    pub model: CoefficientModel,
    pub constants: PhysicalConstants,
    pub backend: TransportBackend,
}

impl TransportSolver {
    /// Largest step allowed by the sweep backend.
    pub fn sweep_dt(&self) -> f64 {
        let worst = self
            .quad
            .ordinates
            .iter()
            .map(|o| (0..self.grid.dim()).map(|a| o[a].abs() / self.grid.spacing(a)).sum::<f64>())
            .fold(0.0, f64::max);
        if worst == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (self.constants.c * worst)
        }
    }

    /// Advances every `(g, k)` family by `dt` against the frozen fluid state.
    pub fn step(&self, field: &RadiationField, fluid: &FluidState, dt: f64) -> Result<RadiationField> {
        field.check_layout(&self.freq, &self.quad, &self.grid)?;
        if fluid.len() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                found: fluid.len(),
            });
        }
        if !(dt >= 0.0) {
            return invalid(format!("time step must be non-negative, got {dt}"));
        }
        if self.backend == TransportBackend::Sweep {
            let limit = self.sweep_dt();
            if dt > limit * (1.0 + 1e-12) {
                return Err(Error::StepRejected { required_dt: limit });
            }
        }
        let families: Vec<(usize, usize)> = (0..field.groups)
            .flat_map(|g| (0..field.ordinates).map(move |k| (g, k)))
            .collect();
        let relax: Vec<Relaxation> = (0..field.groups)
            .into_par_iter()
            .map(|g| self.relaxation_field(fluid, g))
            .collect::<Result<_>>()?;
        let rays: Vec<Result<Vec<f64>>> = families
            .par_iter()
            .map(|&(g, k)| match self.backend {
                TransportBackend::Characteristic => self.trace_family(field, &relax[g], g, k, dt),
                TransportBackend::Sweep => self.sweep_family(field, &relax[g], g, k, dt),
            })
            .collect();
        let mut out = field.clone();
        for ((g, k), ray) in families.iter().zip(rays) {
            let ray = ray?;
            let s = out.index(*g, *k, 0);
            out.intensities[s..s + out.cells].copy_from_slice(&ray);
        }
        if self.model.scattering.is_some() {
            self.scatter(&mut out, fluid, dt)?;
        }
        if out.intensities.iter().any(|x| !x.is_finite()) {
            return Err(Error::SolverDiverged("non-finite intensity".into()));
        }
        Ok(out)
    }

    /// Relaxation rate and target at one point: `dI/dt = c σ (I∞ − I)`.
    fn relaxation(&self, v: f64, w: f64) -> Result<(f64, f64)> {
        match &self.model.emission {
            Emission::Lte => Ok((absorption_ka(v, w, &self.constants, &self.model)?, self.model.bbar(v))),
            Emission::Custom { .. } => {
                let sa = sigma_a_effective(v, w, &self.constants, &self.model)?;
                let s = emission_s(v, w, 0.0, &self.constants, &self.model)?;
                Ok((sa, if sa > 0.0 { s / sa } else { 0.0 }))
            }
        }
    }

    /// Per-cell rate and rate-weighted target for group `g`, from the frozen fluid.
    fn relaxation_field(&self, fluid: &FluidState, g: usize) -> Result<Relaxation> {
        let v = self.freq.nodes[g];
        let mut rate = Vec::with_capacity(fluid.len());
        let mut source = Vec::with_capacity(fluid.len());
        for &w in &fluid.w {
            let (r, t) = self.relaxation(v, w.max(0.0))?;
            rate.push(r);
            source.push(r * t);
        }
        Ok(Relaxation { rate, source })
    }

    fn trace_family(&self, field: &RadiationField, relax: &Relaxation, g: usize, k: usize, dt: f64) -> Result<Vec<f64>> {
        let grid = &self.grid;
        let v = self.freq.nodes[g];
        let bbar = self.model.bbar(v);
        let omega = self.quad.ordinates[k];
        let c = self.constants.c;
        let ray = field.ray(g, k);
        let edge = Edge::Ghost(bbar);
        let dim = grid.dim();
        let travel = (0..dim).map(|a| (c * omega[a] * dt).abs() / grid.spacing(a)).fold(0.0, f64::max);
        let segments = travel.ceil() as usize + 1;
        let uniform_lte = matches!(self.model.emission, Emission::Lte);
        let (gx, gw) = gauss_legendre(2);
        let mut out = vec![0.0; grid.len()];
        for (cell, o) in out.iter_mut().enumerate() {
            let x = grid.center(cell);
            let mut foot = x;
            for a in 0..dim {
                foot[a] -= c * omega[a] * dt;
            }
            let path = PhotonPath {
                origin: foot,
                direction: omega,
                c,
            };
            let i0 = grid.sample(ray, grid.wrap(foot), edge);
            let sample = |f: &[f64], tau: f64| grid.sample(f, grid.wrap(path.position(tau)), Edge::Clamp).max(0.0);
            let value = if uniform_lte {
                // the interpolant is polynomial of degree <= dim between lattice
                // crossings, so two Gauss points per piece integrate it exactly
                let knots = lattice_crossings(grid, &path, dt);
                let mut tau_int = 0.0;
                for piece in knots.windows(2) {
                    let (a, b) = (piece[0], piece[1]);
                    for (xi, wi) in gx.iter().zip(&gw) {
                        tau_int += 0.5 * (b - a) * wi * sample(&relax.rate, a + 0.5 * (b - a) * (xi + 1.0));
                    }
                }
                bbar + (i0 - bbar) * (-c * tau_int).exp()
            } else {
                // piecewise relaxation with frozen rate and target on each sub-segment
                let h = dt / segments as f64;
                let mut i = i0;
                for s in 0..segments {
                    let a = s as f64 * h;
                    let mut rate = 0.0;
                    let mut target = 0.0;
                    for (xi, wi) in gx.iter().zip(&gw) {
                        let tau = a + 0.5 * h * (xi + 1.0);
                        rate += 0.5 * wi * sample(&relax.rate, tau);
                        target += 0.5 * wi * sample(&relax.source, tau);
                    }
                    if rate > 0.0 {
                        let tgt = target / rate;
                        i = tgt + (i - tgt) * (-c * rate * h).exp();
                    }
                }
                i
            };
            *o = value.max(0.0);
        }
        Ok(out)
    }

    fn sweep_family(&self, field: &RadiationField, relax: &Relaxation, g: usize, k: usize, dt: f64) -> Result<Vec<f64>> {
        let grid = &self.grid;
        let v = self.freq.nodes[g];
        let bbar = self.model.bbar(v);
        let omega = self.quad.ordinates[k];
        let c = self.constants.c;
        let ray = field.ray(g, k);
        let mut out = vec![0.0; grid.len()];
        for (cell, o) in out.iter_mut().enumerate() {
            let i = ray[cell];
            let mut adv = 0.0;
            for a in 0..grid.dim() {
                if omega[a] == 0.0 {
                    continue;
                }
                let nu = c * omega[a].abs() * dt / grid.spacing(a);
                let up = grid.neighbor(cell, a, if omega[a] > 0.0 { -1 } else { 1 });
                let iu = up.map(|j| ray[j]).unwrap_or(bbar);
                adv += nu * (i - iu);
            }
            let cr = c * dt * relax.rate[cell];
            *o = ((i - adv + c * dt * relax.source[cell]) / (1.0 + cr)).max(0.0);
        }
        Ok(out)
    }

    /// Explicit in-scattering with implicit out-scattering, cell by cell.
    fn scatter(&self, field: &mut RadiationField, fluid: &FluidState, dt: f64) -> Result<()> {
        let kernel = self.model.scattering.as_ref().expect("checked by caller");
        let c = self.constants.c;
        let nk = field.ordinates;
        let updates: Vec<Vec<f64>> = (0..field.cells)
            .into_par_iter()
            .map(|cell| {
                let rho = fluid.rho[cell];
                let local = field.cell_intensities(cell);
                if rho == 0.0 {
                    return local;
                }
                let mut next = local.clone();
                for g in 0..field.groups {
                    for k in 0..nk {
                        let (gain, out_rate) = scattering_terms(&local, g, k, kernel, &self.freq, &self.quad);
                        let i = local[g * nk + k];
                        next[g * nk + k] = (i + c * dt * rho * gain) / (1.0 + c * dt * rho * out_rate);
                    }
                }
                next
            })
            .collect();
        for (cell, vals) in updates.into_iter().enumerate() {
            for (gk, v) in vals.into_iter().enumerate() {
                field.intensities[gk * field.cells + cell] = v;
            }
        }
        Ok(())
    }
}

/// Radiation flux `F_r = ΣΣ w_g w_k I Ω_k` and pressure `P_r = (1/c) ΣΣ w_g w_k I Ω_k⊗Ω_k` per cell.
pub fn radiation_moments(
    field: &RadiationField,
    freq: &FrequencyGrid,
    quad: &AngularQuadrature,
    grid: &Grid,
    c: f64,
) -> Result<(Vec<[f64; 3]>, Vec<[[f64; 3]; 3]>)> {
    field.check_layout(freq, quad, grid)?;
    let mut flux = vec![[0.0; 3]; field.cells];
    let mut pressure = vec![[[0.0; 3]; 3]; field.cells];
    for g in 0..field.groups {
        for k in 0..field.ordinates {
            let wt = freq.weights[g] * quad.weights[k];
            let o = quad.ordinates[k];
            for (cell, &i) in field.ray(g, k).iter().enumerate() {
                let s = wt * i;
                for a in 0..3 {
                    flux[cell][a] += s * o[a];
                    for b in 0..3 {
                        pressure[cell][a][b] += s * o[a] * o[b] / c;
                    }
                }
            }
        }
    }
    Ok((flux, pressure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Absorption, PlanckProfile, ScatteringKernel};
    use crate::grid::Boundary;
    use crate::quadrature::{build_frequency_grid, build_ordinates};
    use std::f64::consts::PI;

    fn solver(grid: Grid, absorption: Absorption, backend: TransportBackend, quad: AngularQuadrature) -> TransportSolver {
        TransportSolver {
            grid,
            freq: build_frequency_grid(1, 2.0).unwrap(),
            quad,
            model: CoefficientModel {
                planck: PlanckProfile::Flat { value: 1.0 },
                absorption,
                ..CoefficientModel::default()
            },
            constants: PhysicalConstants::default(),
            backend,
        }
    }

    fn fluid(grid: &Grid, rho: f64) -> FluidState {
        FluidState::new(vec![rho; grid.len()], vec![[0.0; 3]; grid.len()], 2.0).unwrap()
    }

    #[test]
    fn ray_examples() {
        assert_eq!(integrate_along_ray(2.5, 2.5, |t| 3.0 + t, 1.7, 2.0, 4).unwrap(), 2.5);
        assert_eq!(integrate_along_ray(2.5, 1.0, |_| 0.0, 1.7, 2.0, 4).unwrap(), 2.5);
        let r = integrate_along_ray(3.0, 1.0, |_| 0.7, 1.0, 1.0, 4).unwrap();
        assert!((r - (1.0 + 2.0 * (-0.7f64).exp())).abs() < 1e-12);
        assert!(integrate_along_ray(1.0, 1.0, |_| 1.0, -1.0, 1.0, 4).is_err());
        let p = PhotonPath {
            origin: [1.0, 2.0, 3.0],
            direction: [0.0, 1.0, 0.0],
            c: 2.0,
        };
        assert_eq!(p.position(0.5), [1.0, 3.0, 3.0]);
    }

    #[test]
    fn uniform_medium_decays_at_exact_rate() {
        for backend in [TransportBackend::Characteristic, TransportBackend::Sweep] {
            let g = Grid::line(32, 0.0, 1.0, Boundary::Periodic).unwrap();
            let s = solver(g.clone(), Absorption::Constant { kbar: 2.0 }, backend, build_ordinates(2).unwrap());
            let f = fluid(&g, 1.0);
            let mut field = RadiationField::from_fn(1, s.quad.len(), g.len(), |_, _, _| 3.0);
            let dt = 0.5 * s.sweep_dt();
            for _ in 0..100 {
                field = s.step(&field, &f, dt).unwrap();
            }
            // the sweep's backward-Euler absorption has its own closed form
            let exact = match backend {
                TransportBackend::Characteristic => 1.0 + 2.0 * (-2.0 * 100.0 * dt).exp(),
                TransportBackend::Sweep => 1.0 + 2.0 * (1.0 + 2.0 * dt).powi(-100),
            };
            let tol = 1e-12;
            for &i in &field.intensities {
                assert!(((i - exact) / (exact - 1.0)).abs() <= tol, "{backend:?}: {i} vs {exact}");
            }
        }
    }

    #[test]
    fn free_streaming_conserves_total_intensity() {
        let g = Grid::line(64, 0.0, 1.0, Boundary::Periodic).unwrap();
        for backend in [TransportBackend::Characteristic, TransportBackend::Sweep] {
            let s = solver(g.clone(), Absorption::Zero, backend, build_ordinates(2).unwrap());
            let f = fluid(&g, 0.0);
            let mut field = RadiationField::from_fn(1, s.quad.len(), g.len(), |_, k, c| 1.0 + ((c + 3 * k) % 7) as f64);
            let total = |f: &RadiationField| -> f64 {
                (0..s.quad.len()).map(|k| s.quad.weights[k] * g.integrate(f.ray(0, k))).sum()
            };
            let t0 = total(&field);
            for _ in 0..20 {
                field = s.step(&field, &f, 0.7 * s.sweep_dt()).unwrap();
            }
            assert!((total(&field) - t0).abs() <= 1e-10 * t0);
        }
    }

    #[test]
    fn sweep_cfl_violation_is_rejected() {
        let g = Grid::line(16, 0.0, 1.0, Boundary::Open).unwrap();
        let s = solver(g.clone(), Absorption::Zero, TransportBackend::Sweep, AngularQuadrature::rod());
        let f = fluid(&g, 0.0);
        let field = RadiationField::equilibrium(&s.model, &s.freq, &s.quad, g.len());
        match s.step(&field, &f, 2.0 * s.sweep_dt()) {
            Err(Error::StepRejected { required_dt }) => assert!((required_dt - 1.0 / 16.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn maximum_principle_holds() {
        let g = Grid::line(64, -1.0, 1.0, Boundary::Open).unwrap();
        for backend in [TransportBackend::Characteristic, TransportBackend::Sweep] {
            let s = solver(g.clone(), Absorption::Constant { kbar: 5.0 }, backend, build_ordinates(2).unwrap());
            let rho: Vec<f64> = g.centers().iter().map(|x| if x[0].abs() < 0.5 { 1.0 } else { 0.0 }).collect();
            let f = FluidState::new(rho, vec![[0.0; 3]; 64], 2.0).unwrap();
            let mut field = RadiationField::from_fn(1, s.quad.len(), 64, |_, k, c| if (c + k) % 5 == 0 { 4.0 } else { 0.5 });
            let (lo, hi) = (0.5f64.min(1.0), 4.0f64.max(1.0));
            for _ in 0..30 {
                field = s.step(&field, &f, 0.9 * s.sweep_dt()).unwrap();
                assert!(field.intensities.iter().all(|&i| i >= lo - 1e-12 && i <= hi + 1e-12));
            }
        }
    }

    #[test]
    fn moments_examples() {
        let g = Grid::line(4, 0.0, 1.0, Boundary::Open).unwrap();
        let freq = FrequencyGrid {
            nodes: vec![0.5],
            weights: vec![1.0],
            v_max: 1.0,
            degree: 1,
        };
        let quad = build_ordinates(4).unwrap();
        let zero = RadiationField::from_fn(1, quad.len(), 4, |_, _, _| 0.0);
        let (f, p) = radiation_moments(&zero, &freq, &quad, &g, 2.0).unwrap();
        assert!(f.iter().flatten().all(|&x| x == 0.0) && p.iter().flatten().flatten().all(|&x| x == 0.0));
        let j = 1.5;
        let c = 2.0;
        let iso = RadiationField::from_fn(1, quad.len(), 4, |_, _, _| j);
        let (f, p) = radiation_moments(&iso, &freq, &quad, &g, c).unwrap();
        for cell in 0..4 {
            for a in 0..3 {
                assert!(f[cell][a].abs() < 1e-12);
                for b in 0..3 {
                    let e = if a == b { 4.0 * PI * j / (3.0 * c) } else { 0.0 };
                    assert!((p[cell][a][b] - e).abs() < 1e-8);
                }
            }
            let trace = p[cell][0][0] + p[cell][1][1] + p[cell][2][2];
            assert!((trace - 4.0 * PI * j / c).abs() < 1e-12);
        }
        let k = 5;
        let beam = RadiationField::from_fn(1, quad.len(), 4, |_, kk, _| if kk == k { 2.0 } else { 0.0 });
        let (f, _) = radiation_moments(&beam, &freq, &quad, &g, c).unwrap();
        for a in 0..3 {
            assert!((f[0][a] - 2.0 * quad.weights[k] * quad.ordinates[k][a]).abs() < 1e-12);
        }
        let bad = RadiationField::from_fn(1, 3, 4, |_, _, _| 0.0);
        assert!(radiation_moments(&bad, &freq, &quad, &g, c).is_err());
    }

    #[test]
    fn scattering_conserves_photon_number_for_symmetric_kernel() {
        // σ̄_s(v'→v) = σ̄'_s(v→v') with v = v' in a single group: gain and loss balance
        let g = Grid::line(8, 0.0, 1.0, Boundary::Periodic).unwrap();
        let mut s = solver(g.clone(), Absorption::Zero, TransportBackend::Characteristic, build_ordinates(2).unwrap());
        s.model.scattering = Some(ScatteringKernel::isotropic_separable(0.5, 1.0, 2.0));
        let f = fluid(&g, 1.0);
        let mut field = RadiationField::from_fn(1, s.quad.len(), 8, |_, k, _| 1.0 + k as f64);
        let total = |f: &RadiationField| -> f64 { (0..s.quad.len()).map(|k| s.quad.weights[k] * f.ray(0, k).iter().sum::<f64>()).sum() };
        let t0 = total(&field);
        for _ in 0..50 {
            field = s.step(&field, &f, 0.05).unwrap();
        }
        let spread = (0..s.quad.len()).map(|k| field.get(0, k, 0)).fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(x), b.max(x)));
        assert!(spread.1 - spread.0 < 0.5 * (s.quad.len() as f64 - 1.0));
        assert!((total(&field) - t0).abs() < 0.05 * t0);
    }
}
