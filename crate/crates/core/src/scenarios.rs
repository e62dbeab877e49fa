//! Experiment definitions: grid, model, initial-data generators, geometry and
//! expected certificates, with a TOML file format.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blowup::{
    critical_time, damped_blowup_time, hyperbolic_singularity_scan, moment_blowup_bound_dim, moment_diagnostics,
    BlowupCertificate, MonitorThresholds,
};
use crate::coefficients::{
    Absorption, CoefficientModel, Emission, PhysicalConstants, PlanckProfile, ScatteringKernel,
};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};
use crate::hydro::{max_velocity_gradient, FluidState, VacuumGeometry};
use crate::picard::{MollifierConfig, MollifierProfile, PicardProblem};
use crate::quadrature::{build_frequency_grid, build_ordinates, AngularQuadrature, FrequencyGrid};
use crate::symhyp::w_from_rho;
use crate::transport::{RadiationField, TransportBackend};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// 1 or 3.
    pub dim: usize,
    /// Cells per axis.
    pub cells: usize,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AbsorptionSpec {
    Gaussian { d1: f64, d2: f64, v0: f64 },
    Constant { kbar: f64 },
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSpec {
    pub sigma0: f64,
    pub center: f64,
    pub half_width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub planck: PlanckProfile,
    pub absorption: AbsorptionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scattering: Option<ScatteringSpec>,
}

impl ModelSpec {
    pub fn build(&self) -> CoefficientModel {
        let absorption = match self.absorption {
            AbsorptionSpec::Gaussian { d1, d2, v0 } => Absorption::Gaussian { d1, d2, v0 },
            AbsorptionSpec::Constant { kbar } => Absorption::Constant { kbar },
            AbsorptionSpec::Zero => Absorption::Zero,
        };
        CoefficientModel {
            planck: self.planck,
            absorption,
            emission: Emission::Lte,
            scattering: self
                .scattering
                .map(|s| ScatteringKernel::isotropic_separable(s.sigma0, s.center, s.half_width)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiationSpec {
    pub groups: usize,
    pub v_max: f64,
    /// 1 selects the two-stream set ±x̂; n ≥ 2 the product rule with 2n² ordinates.
    pub ordinates: usize,
}

impl RadiationSpec {
    pub fn quadrature(&self) -> Result<AngularQuadrature> {
        match self.ordinates {
            0 => Err(Error::InvalidConfig("ordinates must be at least 1".into())),
            1 => Ok(AngularQuadrature::rod()),
            n => build_ordinates(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DensityProfile {
    Zero,
    Uniform { value: f64 },
    /// `amplitude · (1 − r²/radius²)⁴` on `r < radius`.
    Bump { amplitude: f64, radius: f64, center: [f64; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VelocityProfile {
    Zero,
    Uniform { value: [f64; 3] },
    /// `uⱼ = slope · (xⱼ − centerⱼ)` on the active axes.
    Linear { slope: f64, center: [f64; 3] },
    /// `u₁ = amplitude · sin(π · wavenumber · x₁)`.
    Sine { amplitude: f64, wavenumber: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadiationProfile {
    Equilibrium,
    /// `I = B̄ (1 + amplitude · φ(x))` with `φ = (1 − r²/radius²)⁴`, the same for every ray.
    Bump { amplitude: f64, radius: f64, center: [f64; 3] },
    /// As `Bump`, with a seeded random factor in `[0.5, 1]` per `(v, Ω)`.
    RandomBump { amplitude: f64, radius: f64, center: [f64; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub density: DensityProfile,
    pub velocity: VelocityProfile,
    pub radiation: RadiationProfile,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub center: [f64; 3],
    pub a0: f64,
    pub b0: f64,
    pub r0: f64,
}

/// Which precondition the scenario declares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    #[default]
    None,
    /// Local vacuum state: vacuum annulus, positive inner mass, far-field equilibrium.
    LocalVacuum,
    /// Vacuum region on which `∇u₀` has a negative real eigenvalue.
    HyperbolicSet,
    /// As `HyperbolicSet` with damping and `λ < −α`.
    DampedHyperbolicSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Physics {
    #[default]
    Coupled,
    RadiationOnly,
    FluidOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    #[default]
    Strang,
    Lie,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub horizon: f64,
    /// Fixed step; the CFL limit applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub cfl: f64,
    #[serde(default = "one")]
    pub cadence: usize,
    #[serde(default)]
    pub backend: TransportBackend,
    #[serde(default)]
    pub splitting: Splitting,
    #[serde(default)]
    pub physics: Physics,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardSpec {
    pub epsilon0: f64,
    pub k_max: usize,
    pub horizon: f64,
    pub dt: f64,
    pub s: usize,
    #[serde(default)]
    pub doublings: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCertificate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_moment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_burgers: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_damped: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub claim: Claim,
    pub grid: GridSpec,
    pub constants: PhysicalConstants,
    pub model: ModelSpec,
    pub radiation: RadiationSpec,
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySpec>,
    pub run: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardSpec>,
    #[serde(default)]
    pub expected: ExpectedCertificate,
}

/// Runtime objects generated from a scenario.
#[derive(Clone, Debug)]
pub struct Setup {
    pub grid: Grid,
    pub constants: PhysicalConstants,
    pub model: CoefficientModel,
    pub freq: FrequencyGrid,
    pub quad: AngularQuadrature,
    pub fluid: FluidState,
    pub radiation: RadiationField,
    pub geometry: Option<VacuumGeometry>,
}

fn bump(x: [f64; 3], center: [f64; 3], radius: f64, dim: usize) -> f64 {
    let r2: f64 = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>() / (radius * radius);
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - r2).powi(4)
    }
}

/// `∫_{r<a} (1 − r²/a²)⁴ r^{2j} dx` in dimension 1 or 3.
pub fn bump_moment(dim: usize, radius: f64, j: usize) -> f64 {
    // ∫₀¹ s^{2p−1}(1−s²)⁴ ds = B(p, 5)/2 = 12 / (p(p+1)(p+2)(p+3)(p+4))
    let p = (dim + 2 * j) as f64 / 2.0;
    let beta_half = 12.0 / (p * (p + 1.0) * (p + 2.0) * (p + 3.0) * (p + 4.0));
    let sphere = if dim == 1 { 2.0 } else { 4.0 * std::f64::consts::PI };
    sphere * radius.powi((dim + 2 * j) as i32) * beta_half
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Reads a scenario file and rejects it unless it validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let s = Scenario::from_toml_str(&text)?;
        let report = validate_scenario(&s);
        if !report.passed() {
            return Err(Error::InvalidConfig(format!(
                "scenario '{}' violates its declared preconditions: {}",
                s.name,
                report.failures().join("; ")
            )));
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let g = &self.grid;
        let grid = match g.dim {
            1 => Grid::line(g.cells, g.lo, g.hi, g.boundary),
            3 => Grid::cube(g.cells, g.lo, g.hi, g.boundary),
            d => return Err(Error::InvalidConfig(format!("dimension must be 1 or 3, got {d}"))),
        };
        grid.map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn setup(&self) -> Result<Setup> {
        self.check_ranges()?;
        let grid = self.build_grid()?;
        let dim = grid.dim();
        let constants = self.constants;
        constants.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let model = self.model.build();
        let freq = build_frequency_grid(self.radiation.groups, self.radiation.v_max)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let quad = self.radiation.quadrature()?;
        let centers = grid.centers();

        let rho: Vec<f64> = centers
            .iter()
            .map(|&x| match self.initial.density {
                DensityProfile::Zero => 0.0,
                DensityProfile::Uniform { value } => value,
                DensityProfile::Bump { amplitude, radius, center } => amplitude * bump(x, center, radius, dim),
            })
            .collect();
        let u: Vec<[f64; 3]> = centers
            .iter()
            .map(|&x| match self.initial.velocity {
                VelocityProfile::Zero => [0.0; 3],
                VelocityProfile::Uniform { value } => value,
                VelocityProfile::Linear { slope, center } => {
                    std::array::from_fn(|a| if a < dim { slope * (x[a] - center[a]) } else { 0.0 })
                }
                VelocityProfile::Sine { amplitude, wavenumber } => {
                    [amplitude * (std::f64::consts::PI * wavenumber * x[0]).sin(), 0.0, 0.0]
                }
            })
            .collect();
        let fluid = FluidState::new(rho, u, constants.gamma).map_err(|e| Error::InvalidConfig(e.to_string()))?;

        let mut rng = ChaCha8Rng::seed_from_u64(self.initial.seed);
        let factors: Vec<f64> = (0..freq.len() * quad.len()).map(|_| rng.gen_range(0.5..=1.0)).collect();
        let radiation = RadiationField::from_fn(freq.len(), quad.len(), grid.len(), |g, k, cell| {
            let b = model.bbar(freq.nodes[g]);
            let x = centers[cell];
            match self.initial.radiation {
                RadiationProfile::Equilibrium => b,
                RadiationProfile::Bump { amplitude, radius, center } => b * (1.0 + amplitude * bump(x, center, radius, dim)),
                RadiationProfile::RandomBump { amplitude, radius, center } => {
                    b * (1.0 + amplitude * factors[g * quad.len() + k] * bump(x, center, radius, dim))
                }
            }
        });
        let geometry = match self.geometry {
            Some(gs) => Some(
                VacuumGeometry::balls(&grid, gs.center, gs.a0, gs.b0, gs.r0)
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?,
            ),
            None => None,
        };
        Ok(Setup {
            grid,
            constants,
            model,
            freq,
            quad,
            fluid,
            radiation,
            geometry,
        })
    }

    fn check_ranges(&self) -> Result<()> {
        let r = &self.run;
        if !(r.cfl > 0.0 && r.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!("CFL number must lie in (0, 1], got {}", r.cfl)));
        }
        if !(r.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", r.horizon)));
        }
        if r.cadence == 0 {
            return Err(Error::InvalidConfig("output cadence must be at least 1".into()));
        }
        if let Some(dt) = r.dt {
            if !(dt > 0.0) {
                return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    /// Iteration experiment built from the `picard` section.
    pub fn picard_problem(&self) -> Result<PicardProblem> {
        let spec = self
            .picard
            .ok_or_else(|| Error::InvalidConfig(format!("scenario '{}' has no picard section", self.name)))?;
        let s = self.setup()?;
        Ok(PicardProblem {
            w0: s.fluid.w.clone(),
            u0: s.fluid.u.clone(),
            i0: s.radiation,
            grid: s.grid,
            constants: s.constants,
            model: s.model,
            freq: s.freq,
            quad: s.quad,
            mollifier: MollifierConfig {
                epsilon0: spec.epsilon0,
                profile: MollifierProfile::Shifted,
            },
            horizon: spec.horizon,
            dt: spec.dt,
            k_max: spec.k_max,
            s: spec.s,
        })
    }
}

/// Vacuum cells used by the hyperbolic-set scan.
fn vacuum_cells(s: &Scenario, setup: &Setup) -> Vec<bool> {
    match (&setup.geometry, s.claim) {
        (Some(g), Claim::LocalVacuum) => (0..setup.grid.len()).map(|i| g.b0_mask[i] && !g.a0_mask[i]).collect(),
        _ => setup.fluid.rho.iter().map(|&r| r == 0.0).collect(),
    }
}

/// Certificate computed from the generated fields.
pub fn compute_certificate(s: &Scenario, setup: &Setup, thresholds: &MonitorThresholds) -> Result<BlowupCertificate> {
    let mut cert = BlowupCertificate::default();
    let grid = &setup.grid;
    if let Some(geo) = &setup.geometry {
        cert.t_c = Some(critical_time(geo.r0, setup.constants.c)?);
        if s.claim == Claim::LocalVacuum {
            let d = moment_diagnostics(&setup.fluid, geo, grid, 0.0);
            if d.m > 0.0 {
                let bound = moment_blowup_bound_dim(d.m, geo.r0, setup.constants.gamma, d.second_moment, d.dm_dt, grid.dim())?;
                cert.t_moment = Some(bound);
            } else {
                cert.notes.push("no mass inside A0; moment bound undefined".into());
            }
        }
    }
    let mask = vacuum_cells(s, setup);
    match hyperbolic_singularity_scan(&setup.fluid.u, &mask, grid) {
        Ok(scan) => {
            cert.lambda_min = Some(scan.lambda_min);
            cert.t_burgers = scan.t_burgers;
            if scan.complex_cells > 0 {
                cert.notes.push(format!("{} vacuum cells with complex Jacobian eigenvalues", scan.complex_cells));
            }
            if setup.constants.alpha > 0.0 {
                cert.t_damped = damped_blowup_time(scan.lambda_min, setup.constants.alpha)?;
            }
        }
        Err(Error::NoVacuumRegion) => cert.notes.push("no vacuum cells".into()),
        Err(e) => return Err(e),
    }
    let g0 = max_velocity_gradient(&setup.fluid.u, grid);
    cert.monitor_threshold = (thresholds.gradient_factor * g0).max(thresholds.gradient_floor);
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Offending cell indices.
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub checks: Vec<ValidationCheck>,
    pub m0: Option<f64>,
    pub hs_w0: Option<f64>,
    pub hs_u0: Option<f64>,
    pub far_field_deviation: Option<f64>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect()
    }

    fn push(&mut self, name: &str, cells: Vec<usize>, ok_detail: impl Into<String>, what: &str, grid: Option<&Grid>) {
        let pass = cells.is_empty();
        let detail = if pass {
            ok_detail.into()
        } else {
            let first: Vec<String> = cells
                .iter()
                .take(5)
                .map(|&i| match grid {
                    Some(g) => format!("{i} at {:?}", trim(g.center(i), g.dim())),
                    None => i.to_string(),
                })
                .collect();
            format!("{} cells {what}, first: {}", cells.len(), first.join(", "))
        };
        self.checks.push(ValidationCheck {
            name: name.into(),
            pass,
            detail,
            cells,
        });
    }

    fn flag(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(ValidationCheck {
            name: name.into(),
            pass,
            detail,
            cells: Vec::new(),
        });
    }
}

fn trim(x: [f64; 3], dim: usize) -> Vec<f64> {
    x[..dim].to_vec()
}

/// Checks every declared precondition against the generated fields.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut rep = ValidationReport {
        scenario: s.name.clone(),
        ..Default::default()
    };
    let setup = match s.setup() {
        Ok(x) => x,
        Err(e) => {
            rep.flag("construction", false, e.to_string());
            return rep;
        }
    };
    let grid = &setup.grid;
    let fluid = &setup.fluid;
    let n = grid.len();

    let bad: Vec<usize> = (0..n).filter(|&i| !(fluid.rho[i] >= 0.0) || !fluid.rho[i].is_finite()).collect();
    rep.push("density-nonnegative", bad, "rho0 >= 0", "with negative or non-finite density", Some(grid));
    let cells = setup.radiation.cells;
    let bad: Vec<usize> = (0..n)
        .filter(|&i| {
            (0..setup.radiation.groups * setup.radiation.ordinates)
                .any(|gk| !(setup.radiation.intensities[gk * cells + i] >= 0.0))
        })
        .collect();
    rep.push("intensity-nonnegative", bad, "I0 >= 0", "with negative intensity", Some(grid));

    rep.hs_w0 = crate::picard::sobolev_norm(&fluid.w, 3, grid).ok();
    rep.hs_u0 = (0..3)
        .map(|c| {
            let f: Vec<f64> = fluid.u.iter().map(|v| v[c]).collect();
            crate::picard::sobolev_norm(&f, 3, grid).map(|x| x * x)
        })
        .sum::<Result<f64>>()
        .ok()
        .map(f64::sqrt);
    let finite = rep.hs_w0.is_some_and(f64::is_finite) && rep.hs_u0.is_some_and(f64::is_finite);
    rep.flag(
        "finite-sobolev-norms",
        finite,
        format!("|w0|_3 = {:?}, |u0|_3 = {:?}", rep.hs_w0, rep.hs_u0),
    );

    if let Some(geo) = &setup.geometry {
        let far: Vec<usize> = (0..n).filter(|&i| geo.radius(grid.center(i)) >= geo.r0).collect();
        let mut dev = 0.0f64;
        let mut bad = Vec::new();
        for &i in &far {
            let mut worst = 0.0f64;
            for g in 0..setup.freq.len() {
                let b = setup.model.bbar(setup.freq.nodes[g]);
                for k in 0..setup.quad.len() {
                    worst = worst.max((setup.radiation.get(g, k, i) - b).abs());
                }
            }
            dev = dev.max(worst);
            if worst > 1e-14 {
                bad.push(i);
            }
        }
        rep.far_field_deviation = Some(dev);
        if s.claim == Claim::LocalVacuum {
            rep.push(
                "far-field-equilibrium",
                bad,
                format!("max |I0 - B| outside B_R0 = {dev:e}"),
                "outside B_R0 away from equilibrium",
                Some(grid),
            );
        }
    }

    match s.claim {
        Claim::None => {}
        Claim::LocalVacuum => match &setup.geometry {
            None => rep.flag("geometry", false, "local vacuum claim without a geometry section".into()),
            Some(geo) => {
                let annulus: Vec<usize> = (0..n).filter(|&i| geo.b0_mask[i] && !geo.a0_mask[i]).collect();
                let bad: Vec<usize> = annulus
                    .iter()
                    .copied()
                    .filter(|&i| fluid.rho[i] != 0.0 || fluid.u[i].iter().any(|&x| x != 0.0))
                    .collect();
                rep.push(
                    "annulus-vacuum",
                    bad,
                    format!("rho0 = u0 = 0 on {} annulus cells", annulus.len()),
                    "in B0 - A0 with nonzero data",
                    Some(grid),
                );
                let vol = grid.cell_volume();
                let m0: f64 = (0..n).filter(|&i| geo.a0_mask[i]).map(|i| fluid.rho[i]).sum::<f64>() * vol;
                rep.m0 = Some(m0);
                rep.flag("positive-mass", m0 > 0.0, format!("m0 = {m0:e}"));
                rep.flag(
                    "geometry-contained",
                    geo.closure_contained(grid) && !annulus.is_empty(),
                    format!("A0 = {}, B0 = {}, R0 = {}", geo.a0_radius, geo.b0_radius, geo.r0),
                );
            }
        },
        Claim::HyperbolicSet | Claim::DampedHyperbolicSet => {
            let mask = vacuum_cells(s, &setup);
            match hyperbolic_singularity_scan(&fluid.u, &mask, grid) {
                Err(e) => rep.flag("vacuum-region", false, e.to_string()),
                Ok(scan) => {
                    rep.flag(
                        "negative-eigenvalue",
                        scan.lambda_min < 0.0,
                        format!("lambda_min = {}", scan.lambda_min),
                    );
                    if s.claim == Claim::DampedHyperbolicSet {
                        let alpha = setup.constants.alpha;
                        rep.flag(
                            "damping-dominated",
                            alpha > 0.0 && scan.lambda_min < -alpha,
                            format!("lambda_min = {}, alpha = {alpha}", scan.lambda_min),
                        );
                    }
                }
            }
        }
    }
    rep
}

fn gaussian() -> ModelSpec {
    ModelSpec {
        planck: PlanckProfile::default(),
        absorption: AbsorptionSpec::Gaussian { d1: 1.0, d2: 1.0, v0: 3.0 },
        scattering: None,
    }
}

fn constants(c: f64, gamma: f64, alpha: f64) -> PhysicalConstants {
    PhysicalConstants {
        c,
        gamma,
        alpha,
        ..PhysicalConstants::default()
    }
}

fn run(horizon: f64, dt: Option<f64>, cfl: f64, physics: Physics) -> RunSpec {
    RunSpec {
        horizon,
        dt,
        cfl,
        cadence: 1,
        backend: TransportBackend::Characteristic,
        splitting: Splitting::Strang,
        physics,
    }
}

fn expected_moment_bound(dim: usize, amplitude: f64, a0: f64, r0: f64, gamma: f64) -> f64 {
    let m0 = amplitude * bump_moment(dim, a0, 0);
    let second = amplitude * bump_moment(dim, a0, 1);
    moment_blowup_bound_dim(m0, r0, gamma, second, 0.0, dim).expect("positive built-in mass")
}

/// The shipped scenarios.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let origin = [0.0; 3];
    let rod = |groups| RadiationSpec {
        groups,
        v_max: 8.0,
        ordinates: 1,
    };
    let bump_rad = |amplitude, radius| RadiationProfile::Bump {
        amplitude,
        radius,
        center: origin,
    };
    let dens = |amplitude, radius| DensityProfile::Bump {
        amplitude,
        radius,
        center: origin,
    };

    let h = 5.0 / 512.0;
    let relaxation = Scenario {
        name: "lemma31-relaxation".into(),
        description: "Radiation relaxes to equilibrium inside B0 by the critical time 2R0/c.".into(),
        claim: Claim::LocalVacuum,
        grid: GridSpec {
            dim: 1,
            cells: 512,
            lo: -2.5,
            hi: 2.5,
            boundary: Boundary::Open,
        },
        constants: constants(1.0, 2.0, 0.0),
        model: gaussian(),
        radiation: rod(4),
        initial: InitialSpec {
            density: dens(1.0, 0.5),
            velocity: VelocityProfile::Zero,
            radiation: bump_rad(0.5, 1.0),
            seed: 0,
        },
        geometry: Some(GeometrySpec {
            center: origin,
            a0: 0.5,
            b0: 0.8,
            r0: 1.0,
        }),
        run: run(2.0, Some(0.8 * h), 0.5, Physics::RadiationOnly),
        picard: None,
        expected: ExpectedCertificate {
            t_c: Some(2.0),
            ..Default::default()
        },
    };

    let annulus = Scenario {
        name: "lemma31-annulus".into(),
        description: "Coupled run with a vacuum annulus B0 - A0; its boundary must not move.".into(),
        claim: Claim::LocalVacuum,
        grid: GridSpec {
            dim: 1,
            cells: 256,
            lo: -2.0,
            hi: 2.0,
            boundary: Boundary::Open,
        },
        constants: constants(20.0, 2.0, 0.0),
        model: gaussian(),
        radiation: rod(4),
        initial: InitialSpec {
            density: dens(0.1, 0.5),
            velocity: VelocityProfile::Zero,
            radiation: bump_rad(0.05, 1.0),
            seed: 0,
        },
        geometry: Some(GeometrySpec {
            center: origin,
            a0: 0.5,
            b0: 1.0,
            r0: 1.0,
        }),
        run: run(0.2, None, 0.4, Physics::Coupled),
        picard: None,
        expected: ExpectedCertificate {
            t_c: Some(0.1),
            t_moment: Some(expected_moment_bound(1, 0.1, 0.5, 1.0, 2.0)),
            ..Default::default()
        },
    };

    let moment = Scenario {
        name: "theorem34-moment".into(),
        description: "3D local vacuum state; the second moment grows at least quadratically after T_c.".into(),
        claim: Claim::LocalVacuum,
        grid: GridSpec {
            dim: 3,
            cells: 40,
            lo: -1.25,
            hi: 1.25,
            boundary: Boundary::Open,
        },
        constants: constants(40.0, 2.0, 0.0),
        model: gaussian(),
        radiation: RadiationSpec {
            groups: 2,
            v_max: 8.0,
            ordinates: 2,
        },
        initial: InitialSpec {
            density: dens(1.0, 0.5),
            velocity: VelocityProfile::Zero,
            radiation: RadiationProfile::RandomBump {
                amplitude: 0.5,
                radius: 1.0,
                center: origin,
            },
            seed: 7,
        },
        geometry: Some(GeometrySpec {
            center: origin,
            a0: 0.5,
            b0: 0.9,
            r0: 1.0,
        }),
        run: run(1.0, None, 0.4, Physics::Coupled),
        picard: None,
        expected: ExpectedCertificate {
            t_c: Some(0.05),
            t_moment: Some(expected_moment_bound(3, 1.0, 0.5, 1.0, 2.0)),
            ..Default::default()
        },
    };

    let burgers = Scenario {
        name: "theorem36-burgers-1d".into(),
        description: "Vacuum everywhere with u0 = -x; the gradient blows up at t = 1.".into(),
        claim: Claim::HyperbolicSet,
        grid: GridSpec {
            dim: 1,
            cells: 400,
            lo: -1.0,
            hi: 1.0,
            boundary: Boundary::Open,
        },
        constants: constants(1.0, 2.0, 0.0),
        model: gaussian(),
        radiation: rod(2),
        initial: InitialSpec {
            density: DensityProfile::Zero,
            velocity: VelocityProfile::Linear { slope: -1.0, center: origin },
            radiation: RadiationProfile::Equilibrium,
            seed: 0,
        },
        geometry: None,
        run: run(1.5, None, 0.5, Physics::FluidOnly),
        picard: None,
        expected: ExpectedCertificate {
            t_burgers: Some(1.0),
            ..Default::default()
        },
    };

    let damped = Scenario {
        name: "corollary38-damped".into(),
        description: "Damped vacuum dynamics with lambda = -2, alpha = 1; blow-up at ln 2.".into(),
        claim: Claim::DampedHyperbolicSet,
        constants: constants(1.0, 2.0, 1.0),
        initial: InitialSpec {
            velocity: VelocityProfile::Linear { slope: -2.0, center: origin },
            ..burgers.initial
        },
        expected: ExpectedCertificate {
            t_burgers: Some(0.5),
            t_damped: Some(2f64.ln()),
            ..Default::default()
        },
        run: run(1.0, None, 0.5, Physics::FluidOnly),
        ..burgers.clone()
    };

    let picard = Scenario {
        name: "picard-contraction".into(),
        description: "Linearized iteration on small smooth periodic data with a short horizon.".into(),
        claim: Claim::None,
        grid: GridSpec {
            dim: 1,
            cells: 512,
            lo: -1.0,
            hi: 1.0,
            boundary: Boundary::Periodic,
        },
        constants: constants(1.0, 2.0, 0.0),
        model: gaussian(),
        radiation: rod(2),
        initial: InitialSpec {
            density: dens(0.01, 0.5),
            velocity: VelocityProfile::Sine {
                amplitude: 0.05,
                wavenumber: 1.0,
            },
            radiation: RadiationProfile::RandomBump {
                amplitude: 0.2,
                radius: 1.0,
                center: origin,
            },
            seed: 3,
        },
        geometry: None,
        run: run(0.1, Some(0.005), 0.5, Physics::Coupled),
        picard: Some(PicardSpec {
            epsilon0: 0.5,
            k_max: 8,
            horizon: 0.1,
            dt: 0.005,
            s: 3,
            doublings: 4,
        }),
        expected: ExpectedCertificate::default(),
    };

    let scattering = Scenario {
        name: "section4-scattering".into(),
        description: "Coupled run with the isotropic separable scattering kernel.".into(),
        claim: Claim::None,
        grid: GridSpec {
            dim: 1,
            cells: 128,
            lo: -2.0,
            hi: 2.0,
            boundary: Boundary::Open,
        },
        constants: constants(1.0, 2.0, 0.0),
        model: ModelSpec {
            scattering: Some(ScatteringSpec {
                sigma0: 0.5,
                center: 3.0,
                half_width: 3.0,
            }),
            ..gaussian()
        },
        radiation: rod(4),
        initial: InitialSpec {
            density: dens(0.5, 1.0),
            velocity: VelocityProfile::Zero,
            radiation: bump_rad(0.5, 1.0),
            seed: 0,
        },
        geometry: None,
        run: run(0.5, None, 0.4, Physics::Coupled),
        picard: None,
        expected: ExpectedCertificate::default(),
    };

    let rest = Scenario {
        name: "uniform-rest".into(),
        description: "Uniform gas at rest in radiative equilibrium; nothing should change.".into(),
        claim: Claim::None,
        grid: GridSpec {
            dim: 1,
            cells: 64,
            lo: 0.0,
            hi: 1.0,
            boundary: Boundary::Periodic,
        },
        constants: constants(1.0, 2.0, 0.0),
        model: gaussian(),
        radiation: rod(2),
        initial: InitialSpec {
            density: DensityProfile::Uniform { value: 1.0 },
            velocity: VelocityProfile::Zero,
            radiation: RadiationProfile::Equilibrium,
            seed: 0,
        },
        geometry: None,
        run: run(1.0, Some(0.01), 0.5, Physics::Coupled),
        picard: None,
        expected: ExpectedCertificate::default(),
    };

    vec![relaxation, annulus, moment, burgers, damped, picard, scattering, rest]
}

pub fn builtin(name: &str) -> Result<Scenario> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::NotFound(format!("unknown scenario '{name}'")))
}

/// `w₀` of the generated density, for diagnostics.
pub fn initial_w(setup: &Setup) -> Result<Vec<f64>> {
    setup.fluid.rho.iter().map(|&r| w_from_rho(r, setup.constants.gamma)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_cover_the_required_set() {
        let all = builtin_scenarios();
        assert!(all.len() >= 6);
        for name in [
            "lemma31-relaxation",
            "theorem34-moment",
            "theorem36-burgers-1d",
            "corollary38-damped",
            "picard-contraction",
            "section4-scattering",
        ] {
            assert!(all.iter().any(|s| s.name == name), "{name}");
        }
        assert!(matches!(builtin("nope"), Err(Error::NotFound(_))));
    }

    #[test]
    fn every_builtin_validates() {
        for s in builtin_scenarios() {
            let r = validate_scenario(&s);
            assert!(r.passed(), "{}: {:?}", s.name, r.failures());
        }
    }

    #[test]
    fn expected_certificates_match_the_fields() {
        for s in builtin_scenarios() {
            let setup = s.setup().unwrap();
            let cert = compute_certificate(&s, &setup, &MonitorThresholds::default()).unwrap();
            let e = s.expected;
            if let Some(t) = e.t_c {
                assert_eq!(cert.t_c, Some(t), "{}", s.name);
            }
            if let Some(t) = e.t_burgers {
                assert!((cert.t_burgers.unwrap() - t).abs() < 1e-12, "{}", s.name);
            }
            if let Some(t) = e.t_damped {
                assert!((cert.t_damped.unwrap() - t).abs() < 1e-12, "{}", s.name);
            }
            if let Some(t) = e.t_moment {
                let got = cert.t_moment.unwrap();
                assert!((got - t).abs() / t < 0.05, "{}: {got} vs {t}", s.name);
            }
        }
    }

    #[test]
    fn bump_moments_match_quadrature() {
        for dim in [1, 3] {
            for j in 0..2 {
                let n = 200_000;
                let a = 0.7;
                let ds = a / n as f64;
                let mut acc = 0.0;
                for i in 0..n {
                    let r = (i as f64 + 0.5) * ds;
                    let shell = if dim == 1 { 2.0 } else { 4.0 * std::f64::consts::PI * r * r };
                    acc += (1.0 - r * r / (a * a)).powi(4) * r.powi(2 * j as i32) * shell * ds;
                }
                assert!((acc - bump_moment(dim, a, j)).abs() < 1e-9, "{dim} {j}");
            }
        }
    }

    #[test]
    fn toml_round_trip() {
        for s in builtin_scenarios() {
            let text = s.to_toml_string().unwrap();
            let back = Scenario::from_toml_str(&text).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn annulus_violation_is_located() {
        let mut s = builtin("lemma31-annulus").unwrap();
        s.initial.velocity = VelocityProfile::Uniform { value: [0.1, 0.0, 0.0] };
        let r = validate_scenario(&s);
        let c = r.check("annulus-vacuum").unwrap();
        assert!(!c.pass);
        let setup = s.setup().unwrap();
        let geo = setup.geometry.unwrap();
        assert!(!c.cells.is_empty());
        assert!(c.cells.iter().all(|&i| geo.b0_mask[i] && !geo.a0_mask[i]));
    }

    #[test]
    fn empty_a0_fails_with_zero_mass() {
        let mut s = builtin("lemma31-annulus").unwrap();
        s.initial.density = DensityProfile::Zero;
        let r = validate_scenario(&s);
        assert_eq!(r.m0, Some(0.0));
        assert!(!r.check("positive-mass").unwrap().pass);
    }

    #[test]
    fn seeded_fields_are_deterministic() {
        let s = builtin("theorem34-moment").unwrap();
        let mut small = s.clone();
        small.grid.cells = 8;
        let a = small.setup().unwrap();
        let b = small.setup().unwrap();
        assert_eq!(a.radiation.intensities, b.radiation.intensities);
        small.initial.seed += 1;
        let c = small.setup().unwrap();
        assert_ne!(a.radiation.intensities, c.radiation.intensities);
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        let mut s = builtin("uniform-rest").unwrap();
        s.run.cfl = 1.5;
        assert!(matches!(s.setup(), Err(Error::InvalidConfig(_))));
        let mut s = builtin("uniform-rest").unwrap();
        s.run.cadence = 0;
        assert!(matches!(s.setup(), Err(Error::InvalidConfig(_))));
    }
}
