//! Blow-up certificates and the run-time singularity monitor.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::coefficients::check_gamma;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::hydro::{FluidState, VacuumGeometry};

/// `T_c = 2R₀/c`.
pub fn critical_time(r0: f64, c: f64) -> Result<f64> {
    if !(r0 > 0.0 && c > 0.0) {
        return invalid(format!("R0 and c must be positive (R0 = {r0}, c = {c})"));
    }
    Ok(2.0 * r0 / c)
}

/// Volume of the unit ball in dimension 1, 2 or 3.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => PI,
        _ => 4.0 * PI / 3.0,
    }
}

/// Hölder lower bound `∫ p dx ≥ m^γ R₀^{d(1−γ)} |B₁|^{1−γ}` for mass `m` inside `B_{R₀}`.
pub fn pressure_lower_bound(m: f64, r0: f64, gamma: f64, dim: usize) -> f64 {
    m.powf(gamma) * r0.powf(dim as f64 * (1.0 - gamma)) * unit_ball_volume(dim).powf(1.0 - gamma)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentDiagnostics {
    pub t: f64,
    /// Mass over `B₀`.
    pub m: f64,
    /// Mass over `A₀`.
    pub m_a0: f64,
    /// `∫_{B₀} ρ |x − x_c|² dx`.
    pub second_moment: f64,
    /// `2 ∫_{B₀} (x − x_c)·ρu dx`.
    pub dm_dt: f64,
}

pub fn moment_diagnostics(state: &FluidState, geometry: &VacuumGeometry, grid: &Grid, t: f64) -> MomentDiagnostics {
    let vol = grid.cell_volume();
    let mut m = 0.0;
    let mut m_a0 = 0.0;
    let mut second = 0.0;
    let mut flux = 0.0;
    for i in 0..grid.len() {
        if !geometry.b0_mask[i] {
            continue;
        }
        let x = grid.center(i);
        let r: [f64; 3] = std::array::from_fn(|a| x[a] - geometry.center[a]);
        let rho = state.rho[i];
        m += rho;
        if geometry.a0_mask[i] {
            m_a0 += rho;
        }
        second += rho * (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
        flux += rho * (r[0] * state.u[i][0] + r[1] * state.u[i][1] + r[2] * state.u[i][2]);
    }
    MomentDiagnostics {
        t,
        m: m * vol,
        m_a0: m_a0 * vol,
        second_moment: second * vol,
        dm_dt: 2.0 * flux * vol,
    }
}

/// Largest time for which `M(0) + M′(0)t + d·C t² ≤ m₀R₀²` can hold, `C` the
/// pressure lower bound. With `d = 3` this is the closed form with |B₁| = 4π/3.
pub fn moment_blowup_bound(m0: f64, r0: f64, gamma: f64, m_init: f64, m_prime: f64) -> Result<f64> {
    moment_blowup_bound_dim(m0, r0, gamma, m_init, m_prime, 3)
}

pub fn moment_blowup_bound_dim(m0: f64, r0: f64, gamma: f64, m_init: f64, m_prime: f64, dim: usize) -> Result<f64> {
    if !(m0 > 0.0) {
        return invalid(format!("the moment bound needs positive mass, got m0 = {m0}"));
    }
    if !(r0 > 0.0) {
        return invalid(format!("R0 must be positive, got {r0}"));
    }
    check_gamma(gamma)?;
    if !(1..=3).contains(&dim) {
        return invalid(format!("dimension must be 1, 2 or 3, got {dim}"));
    }
    let cap = m0 * r0 * r0;
    if m_init > cap {
        return Err(Error::InconsistentData(format!(
            "second moment {m_init} exceeds m0 R0^2 = {cap}"
        )));
    }
    let c = pressure_lower_bound(m0, r0, gamma, dim);
    let d = dim as f64;
    let disc = m_prime * m_prime - 4.0 * d * c * (m_init - cap);
    Ok((-m_prime + disc.sqrt()) / (2.0 * d * c))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub lambda_min: f64,
    pub t_burgers: Option<f64>,
    /// Cells whose Jacobian has a complex-conjugate pair (reported, never triggering).
    pub complex_cells: usize,
}

/// Minimum real eigenvalue of `∇u₀` over the mask; `t_burgers = −1/λ_min` when negative.
pub fn hyperbolic_singularity_scan(u0: &[[f64; 3]], mask: &[bool], grid: &Grid) -> Result<ScanResult> {
    if u0.len() != grid.len() || mask.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: u0.len().min(mask.len()),
        });
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::NoVacuumRegion);
    }
    let dim = grid.dim();
    // J[c][a] = ∂_a u_c
    let mut jac = vec![[[0.0; 3]; 3]; grid.len()];
    for c in 0..dim {
        let f: Vec<f64> = u0.iter().map(|v| v[c]).collect();
        for a in 0..dim {
            for (j, d) in jac.iter_mut().zip(grid.derivative(&f, a)) {
                j[c][a] = d;
            }
        }
    }
    let mut lambda_min = f64::INFINITY;
    let mut complex_cells = 0;
    for (i, j) in jac.iter().enumerate() {
        if !mask[i] {
            continue;
        }
        if dim == 1 {
            lambda_min = lambda_min.min(j[0][0]);
            continue;
        }
        let m = Matrix3::from_fn(|r, c| j[r][c]);
        let eig = m.complex_eigenvalues();
        let scale = 1.0 + m.norm();
        let mut has_complex = false;
        for e in eig.iter() {
            if e.im.abs() <= 1e-12 * scale {
                lambda_min = lambda_min.min(e.re);
            } else {
                has_complex = true;
            }
        }
        if has_complex {
            complex_cells += 1;
        }
    }
    let t_burgers = if lambda_min < 0.0 { Some(-1.0 / lambda_min) } else { None };
    Ok(ScanResult {
        lambda_min,
        t_burgers,
        complex_cells,
    })
}

/// Root of `f(t) = 1 − (λ/α)(e^{−αt} − 1)·(−1)`, i.e. `t₀ = −ln(1 + α/λ)/α`, when `λ < −α`.
pub fn damped_blowup_time(lambda: f64, alpha: f64) -> Result<Option<f64>> {
    if !(alpha > 0.0) {
        return invalid(format!("damping rate must be positive, got {alpha}"));
    }
    if lambda < -alpha {
        Ok(Some(-(alpha / lambda).ln_1p() / alpha))
    } else {
        Ok(None)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlowupCertificate {
    pub t_c: Option<f64>,
    pub t_moment: Option<f64>,
    pub lambda_min: Option<f64>,
    pub t_burgers: Option<f64>,
    pub t_damped: Option<f64>,
    pub monitor_threshold: f64,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorThresholds {
    /// Blown-up when `max|∇u| ≥ max(gradient_factor · max|∇u₀|, gradient_floor)`.
    pub gradient_factor: f64,
    pub gradient_floor: f64,
    /// Blown-up when the accepted step drops below `dt_factor · dt₀`.
    pub dt_factor: f64,
    /// Near-singular above this fraction of the gradient threshold.
    pub near_fraction: f64,
    /// Relative mass change over `A₀` that counts as a vacuum breach.
    pub mass_tolerance: f64,
    /// Density clipped per step that counts as a positivity failure.
    pub clip_tolerance: f64,
}

impl Default for MonitorThresholds {
    fn default() -> Self {
        MonitorThresholds {
            gradient_factor: 1e3,
            gradient_floor: 1e3,
            dt_factor: 1e-6,
            near_fraction: 0.1,
            mass_tolerance: 1e-3,
            clip_tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Healthy,
    NearSingular,
    BlownUp,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Healthy => "healthy",
            Status::NearSingular => "near-singular",
            Status::BlownUp => "blown-up",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    Gradient,
    TimeStep,
    WClip,
    VacuumBreach,
    /// The solver itself failed (non-finite state or characteristic crossing).
    Divergence,
}

impl Trigger {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trigger::Gradient => "gradient",
            Trigger::TimeStep => "time-step",
            Trigger::WClip => "w-clip",
            Trigger::VacuumBreach => "vacuum-breach",
            Trigger::Divergence => "divergence",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonitorEvent {
    pub t: f64,
    pub trigger: Trigger,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MonitorSnapshot {
    pub t: f64,
    pub max_grad_u: f64,
    pub min_rho: f64,
    pub dt: f64,
    pub w_clip: f64,
    /// Mass over `A₀`, when the scenario has one.
    pub mass_a0: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SingularityMonitor {
    pub thresholds: MonitorThresholds,
    pub gradient_threshold: f64,
    dt0: Option<f64>,
    m0: Option<f64>,
    pub status: Status,
    pub events: Vec<MonitorEvent>,
}

impl SingularityMonitor {
    pub fn new(thresholds: MonitorThresholds, initial_max_grad: f64, m0: Option<f64>) -> Self {
        SingularityMonitor {
            gradient_threshold: (thresholds.gradient_factor * initial_max_grad).max(thresholds.gradient_floor),
            thresholds,
            dt0: None,
            m0: m0.filter(|&m| m > 0.0),
            status: Status::Healthy,
            events: Vec::new(),
        }
    }

    /// Time of the first blow-up trigger.
    pub fn trigger_time(&self) -> Option<f64> {
        self.events.first().map(|e| e.t)
    }

    /// Records a trigger detected outside `observe` and marks the run blown-up.
    pub fn record(&mut self, t: f64, trigger: Trigger, value: f64) {
        self.events.push(MonitorEvent { t, trigger, value });
        self.status = Status::BlownUp;
    }

    pub fn observe(&mut self, snap: &MonitorSnapshot) -> Status {
        if self.status == Status::BlownUp {
            return self.status;
        }
        let th = self.thresholds;
        let dt0 = *self.dt0.get_or_insert(snap.dt);
        let mut fire = |trigger, value| {
            self.events.push(MonitorEvent { t: snap.t, trigger, value });
        };
        if snap.max_grad_u >= self.gradient_threshold || !snap.max_grad_u.is_finite() {
            fire(Trigger::Gradient, snap.max_grad_u);
        }
        if snap.dt < th.dt_factor * dt0 {
            fire(Trigger::TimeStep, snap.dt);
        }
        if snap.w_clip > th.clip_tolerance {
            fire(Trigger::WClip, snap.w_clip);
        }
        if let (Some(m0), Some(m)) = (self.m0, snap.mass_a0) {
            let rel = (m - m0).abs() / m0;
            if rel > th.mass_tolerance {
                fire(Trigger::VacuumBreach, rel);
            }
        }
        self.status = if !self.events.is_empty() {
            Status::BlownUp
        } else if snap.max_grad_u >= th.near_fraction * self.gradient_threshold {
            Status::NearSingular
        } else {
            Status::Healthy
        };
        self.status
    }
}

/// Second divided differences `f[t₀,t₁,t₂]·2` of a non-uniformly sampled series.
pub fn second_derivative_samples(t: &[f64], f: &[f64]) -> Vec<(f64, f64)> {
    (1..t.len().saturating_sub(1))
        .map(|i| {
            let (a, b, c) = (t[i - 1], t[i], t[i + 1]);
            let d1 = (f[i] - f[i - 1]) / (b - a);
            let d2 = (f[i + 1] - f[i]) / (c - b);
            (b, 2.0 * (d2 - d1) / (c - a))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn critical_time_examples() {
        assert_eq!(critical_time(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(critical_time(1.0, 1.0).unwrap(), 2.0);
        for c in [0.3, 1.0, 7.0] {
            assert_eq!(critical_time(2.0, c).unwrap(), 2.0 * critical_time(1.0, c).unwrap());
        }
        assert!(critical_time(0.0, 1.0).is_err());
        assert!(critical_time(1.0, -1.0).is_err());
    }

    #[test]
    fn moment_bound_examples() {
        let t = moment_blowup_bound(1.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        assert!((t - 2.0 / 3.0 * PI.sqrt()).abs() < 1e-12);
        assert_eq!(moment_blowup_bound(1.0, 1.0, 2.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(moment_blowup_bound(1.0, 1.0, 2.0, 0.0, 0.5).unwrap() < t);
        assert!(matches!(moment_blowup_bound(0.0, 1.0, 2.0, 0.0, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(moment_blowup_bound(1.0, 1.0, 2.0, 1.5, 0.0), Err(Error::InconsistentData(_))));
    }

    #[test]
    fn moment_bound_is_root_of_the_quadratic() {
        for (m0, r0, gamma, mi, mp) in [(1.0, 1.0, 2.0, 0.2, 0.3), (0.5, 2.0, 1.4, 1.0, -0.2), (2.0, 0.7, 3.0, 0.1, 0.0)] {
            for dim in 1..=3 {
                let t = moment_blowup_bound_dim(m0, r0, gamma, mi, mp, dim).unwrap();
                let c = pressure_lower_bound(m0, r0, gamma, dim);
                let q = mi + mp * t + dim as f64 * c * t * t - m0 * r0 * r0;
                assert!(q.abs() < 1e-12, "{q}");
            }
        }
    }

    #[test]
    fn moment_diagnostics_examples() {
        let g = Grid::line(10, -1.0, 1.0, Boundary::Open).unwrap();
        let geo = VacuumGeometry::balls(&g, [0.0; 3], 0.5, 0.9, 1.0).unwrap();
        let zero = FluidState::new(vec![0.0; 10], vec![[0.0; 3]; 10], 2.0).unwrap();
        let d = moment_diagnostics(&zero, &geo, &g, 0.0);
        assert_eq!((d.m, d.second_moment, d.dm_dt), (0.0, 0.0, 0.0));
        let mut rho = vec![0.0; 10];
        rho[6] = 1.0;
        let s = FluidState::new(rho, vec![[0.0; 3]; 10], 2.0).unwrap();
        let d = moment_diagnostics(&s, &geo, &g, 0.0);
        let r = g.center(6)[0];
        assert!((d.m - 0.2).abs() < 1e-15);
        assert!((d.second_moment - 0.2 * r * r).abs() < 1e-15);
        assert_eq!(d.dm_dt, 0.0);
    }

    #[test]
    fn scan_examples() {
        let g = Grid::line(40, -1.0, 1.0, Boundary::Open).unwrap();
        let mask = vec![true; 40];
        let u: Vec<[f64; 3]> = g.centers().iter().map(|x| [-x[0], 0.0, 0.0]).collect();
        let r = hyperbolic_singularity_scan(&u, &mask, &g).unwrap();
        assert!((r.lambda_min + 1.0).abs() < 1e-12);
        assert!((r.t_burgers.unwrap() - 1.0).abs() < 1e-12);
        let r = hyperbolic_singularity_scan(&vec![[0.0; 3]; 40], &mask, &g).unwrap();
        assert_eq!(r.lambda_min, 0.0);
        assert_eq!(r.t_burgers, None);
        assert!(matches!(
            hyperbolic_singularity_scan(&u, &vec![false; 40], &g),
            Err(Error::NoVacuumRegion)
        ));
        let g3 = Grid::cube(6, -1.0, 1.0, Boundary::Open).unwrap();
        let rot: Vec<[f64; 3]> = g3.centers().iter().map(|x| [-x[1], x[0], 0.0]).collect();
        let r = hyperbolic_singularity_scan(&rot, &vec![true; g3.len()], &g3).unwrap();
        assert!(r.lambda_min.abs() < 1e-12);
        assert_eq!(r.t_burgers, None);
        assert_eq!(r.complex_cells, g3.len());
    }

    #[test]
    fn damped_examples() {
        for alpha in [0.5, 1.0, 3.0] {
            let t = damped_blowup_time(-2.0 * alpha, alpha).unwrap().unwrap();
            assert!((t - 2f64.ln() / alpha).abs() < 1e-12);
            assert_eq!(damped_blowup_time(-alpha, alpha).unwrap(), None);
        }
        let t = damped_blowup_time(-2.0, 1e-6).unwrap().unwrap();
        assert!((t - 0.5).abs() <= 1e-5);
        assert!(damped_blowup_time(-2.0, 0.0).is_err());
    }

    #[test]
    fn monitor_stays_healthy_on_a_stationary_state() {
        let mut m = SingularityMonitor::new(MonitorThresholds::default(), 0.0, Some(1.0));
        for i in 0..1000 {
            let s = MonitorSnapshot {
                t: i as f64 * 0.01,
                dt: 0.01,
                min_rho: 1.0,
                mass_a0: Some(1.0),
                ..MonitorSnapshot::default()
            };
            assert_eq!(m.observe(&s), Status::Healthy);
        }
    }

    #[test]
    fn monitor_triggers() {
        let mut m = SingularityMonitor::new(MonitorThresholds::default(), 2.0, None);
        assert_eq!(m.gradient_threshold, 2000.0);
        let mut s = MonitorSnapshot { t: 0.0, dt: 0.1, max_grad_u: 2.0, ..Default::default() };
        assert_eq!(m.observe(&s), Status::Healthy);
        s.max_grad_u = 300.0;
        assert_eq!(m.observe(&s), Status::NearSingular);
        s.t = 0.5;
        s.dt = 1e-8;
        assert_eq!(m.observe(&s), Status::BlownUp);
        assert_eq!(m.trigger_time(), Some(0.5));
        assert_eq!(m.events[0].trigger, Trigger::TimeStep);
    }

    #[test]
    fn second_derivative_of_quadratic_is_exact() {
        let t = [0.0, 0.1, 0.25, 0.3, 0.7];
        let f: Vec<f64> = t.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        for (_, d) in second_derivative_samples(&t, &f) {
            assert!((d - 6.0).abs() < 1e-10);
        }
    }
}
