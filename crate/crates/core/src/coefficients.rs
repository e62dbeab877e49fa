//! Radiation coefficient models: the Planck-like profile B̄(v), the LTE
//! absorption coefficient K_a = ρ K̄_a, induced emission, the density
//! normalized emission/absorption pair used when scattering is on, and
//! scattering kernels.
//!
//! Every coefficient carrying a density factor is extended by zero at
//! w = 0 (vacuum).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::symhyp::rho_from_w;

mod structural;

pub use structural::{
    check_structural_assumptions, check_structural_assumptions_with, StructuralCheck,
    StructuralOptions, StructuralReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Light speed.
    pub c: f64,
    /// Planck constant.
    pub h: f64,
    /// Adiabatic exponent, 1 < γ <= 3.
    pub gamma: f64,
    /// Gas constant in p_m = Rρθ.
    pub r_gas: f64,
    /// Linear damping rate of the damped Euler variant (0 when inactive).
    #[serde(default)]
    pub alpha: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            c: 1.0,
            h: 1.0,
            gamma: 2.0,
            r_gas: 1.0,
            alpha: 0.0,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.h > 0.0 && self.r_gas > 0.0) {
            return invalid(format!(
                "c, h and R must be positive (c = {}, h = {}, R = {})",
                self.c, self.h, self.r_gas
            ));
        }
        if !(self.alpha >= 0.0) {
            return invalid(format!("damping rate must be non-negative, got {}", self.alpha));
        }
        check_gamma(self.gamma)
    }

    /// κ = (γ-1)²/(4γ), the velocity block of the symmetrizer.
    pub fn kappa(&self) -> f64 {
        kappa(self.gamma)
    }
}

pub(crate) fn kappa(gamma: f64) -> f64 {
    (gamma - 1.0).powi(2) / (4.0 * gamma)
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma <= 3.0 {
        Ok(())
    } else {
        invalid(format!("adiabatic exponent must lie in (1, 3], got {gamma}"))
    }
}

fn check_gamma_model(gamma: f64) -> Result<()> {
    check_gamma(gamma).map_err(|_| {
        Error::InvalidModel(format!("adiabatic exponent must lie in (1, 3], got {gamma}"))
    })
}

/// The equilibrium profile B̄(v).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlanckProfile {
    /// `scale * v^3 / (exp(v / v_ref) - 1)`.
    Planck { scale: f64, v_ref: f64 },
    Flat { value: f64 },
    Zero,
}

impl Default for PlanckProfile {
    fn default() -> Self {
        PlanckProfile::Planck {
            scale: 1.0,
            v_ref: 1.0,
        }
    }
}

impl PlanckProfile {
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            PlanckProfile::Planck { scale, v_ref } => {
                let x = v / v_ref;
                if x < 1e-8 {
                    scale * v * v * v_ref
                } else {
                    scale * v.powi(3) / x.exp_m1()
                }
            }
            PlanckProfile::Flat { value } => value,
            PlanckProfile::Zero => 0.0,
        }
    }
}

type ScalarFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type ScalarFn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Density-normalized absorption K̄_a(v, w).
#[derive(Clone)]
pub enum Absorption {
    /// `K̄_a = D₁√R / w · exp(-(D₂√R / w)((v - v₀)/v₀)²)`, the LTE example with
    /// temperature θ = w²/R.
    Gaussian { d1: f64, d2: f64, v0: f64 },
    /// `K̄_a ≡ kbar`; with kbar != 0 this violates K̄_a → 0 at vacuum.
    Constant { kbar: f64 },
    Zero,
    /// User supplied K̄_a(v, w).
    Custom(ScalarFn2),
}

impl fmt::Debug for Absorption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Absorption::Gaussian { d1, d2, v0 } => f
                .debug_struct("Gaussian")
                .field("d1", d1)
                .field("d2", d2)
                .field("v0", v0)
                .finish(),
            Absorption::Constant { kbar } => f.debug_struct("Constant").field("kbar", kbar).finish(),
            Absorption::Zero => write!(f, "Zero"),
            Absorption::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// How emission S and absorption σ_a are formed.
#[derive(Clone)]
pub enum Emission {
    /// Induced-process LTE pair built from K_a and B̄.
    Lte,
    /// Pluggable `S = ρ S̄(v, w)`, `σ_a = ρ σ̄_a(v, w)`.
    Custom { s_bar: ScalarFn2, sigma_a_bar: ScalarFn2 },
}

impl fmt::Debug for Emission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Emission::Lte => write!(f, "Lte"),
            Emission::Custom { .. } => write!(f, "Custom(..)"),
        }
    }
}

/// Density-normalized scattering kernels σ̄_s(v'→v, Ω'·Ω) and σ̄'_s(v→v', Ω·Ω').
#[derive(Clone)]
pub struct ScatteringKernel {
    /// Arguments `(v_from, v_to, mu)`.
    pub sigma_bar: ScalarFn3,
    /// Arguments `(v, v_prime, mu)`.
    pub sigma_bar_prime: ScalarFn3,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl fmt::Debug for ScatteringKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScatteringKernel")
            .field("lambda1", &self.lambda1)
            .field("lambda2", &self.lambda2)
            .finish_non_exhaustive()
    }
}

/// Smooth compactly supported frequency window `(1 - ((v - center)/half_width)²)²`.
pub fn frequency_window(v: f64, center: f64, half_width: f64) -> f64 {
    let s = (v - center) / half_width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s * s;
        t * t
    }
}

impl ScatteringKernel {
    /// Isotropic separable kernel σ̄_s = σ̄'_s = σ₀ g(v') g(v).
    pub fn isotropic_separable(sigma0: f64, center: f64, half_width: f64) -> Self {
        let g = move |v: f64| frequency_window(v, center, half_width);
        ScatteringKernel {
            sigma_bar: Arc::new(move |vf, vt, _| sigma0 * g(vf) * g(vt)),
            sigma_bar_prime: Arc::new(move |v, vp, _| sigma0 * g(v) * g(vp)),
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }

    /// A present but identically vanishing kernel.
    pub fn zero() -> Self {
        ScatteringKernel {
            sigma_bar: Arc::new(|_, _, _| 0.0),
            sigma_bar_prime: Arc::new(|_, _, _| 0.0),
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoefficientModel {
    pub planck: PlanckProfile,
    pub absorption: Absorption,
    pub emission: Emission,
    pub scattering: Option<ScatteringKernel>,
}

impl Default for CoefficientModel {
    fn default() -> Self {
        CoefficientModel {
            planck: PlanckProfile::default(),
            absorption: Absorption::Gaussian {
                d1: 1.0,
                d2: 1.0,
                v0: 3.0,
            },
            emission: Emission::Lte,
            scattering: None,
        }
    }
}

impl CoefficientModel {
    /// K_a ≡ 0, S ≡ 0, no scattering.
    pub fn zero() -> Self {
        CoefficientModel {
            planck: PlanckProfile::default(),
            absorption: Absorption::Zero,
            emission: Emission::Lte,
            scattering: None,
        }
    }

    pub fn bbar(&self, v: f64) -> f64 {
        self.planck.eval(v)
    }

    pub fn with_scattering(mut self, kernel: ScatteringKernel) -> Self {
        self.scattering = Some(kernel);
        self
    }
}

fn check_frequency(v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        invalid(format!("frequency must be positive, got {v}"))
    }
}

fn check_w(w: f64) -> Result<()> {
    if w >= 0.0 {
        Ok(())
    } else {
        invalid(format!("symmetrizing variable must be non-negative, got {w}"))
    }
}

/// K̄_a(v, w), extended by 0 at w = 0.
pub fn kbar_a(v: f64, w: f64, constants: &PhysicalConstants, model: &CoefficientModel) -> Result<f64> {
    check_frequency(v)?;
    check_w(w)?;
    check_gamma_model(constants.gamma)?;
    if w == 0.0 {
        return Ok(0.0);
    }
    Ok(match &model.absorption {
        Absorption::Gaussian { d1, d2, v0 } => {
            let sr = constants.r_gas.sqrt();
            let detune = (v - v0) / v0;
            d1 * sr * (-(d2 * sr / w) * detune * detune - w.ln()).exp()
        }
        Absorption::Constant { kbar } => *kbar,
        Absorption::Zero => 0.0,
        Absorption::Custom(f) => f(v, w),
    })
}

/// K_a(v, w) = ρ K̄_a with ρ = w^(2/(γ-1)), extended by 0 at w = 0.
pub fn absorption_ka(
    v: f64,
    w: f64,
    constants: &PhysicalConstants,
    model: &CoefficientModel,
) -> Result<f64> {
    check_frequency(v)?;
    check_w(w)?;
    check_gamma_model(constants.gamma)?;
    if w == 0.0 {
        return Ok(0.0);
    }
    let gamma = constants.gamma;
    Ok(match &model.absorption {
        Absorption::Gaussian { d1, d2, v0 } => {
            let sr = constants.r_gas.sqrt();
            let detune = (v - v0) / v0;
            let power = (3.0 - gamma) / (gamma - 1.0);
            d1 * sr * (power * w.ln() - (d2 * sr / w) * detune * detune).exp()
        }
        _ => rho_from_w(w, gamma)? * kbar_a(v, w, constants, model)?,
    })
}

fn induced_factor(v: f64, value: f64, constants: &PhysicalConstants) -> f64 {
    1.0 + constants.c * constants.c * value / (2.0 * constants.h * v.powi(3))
}

/// Emission S(v, w, I).
pub fn emission_s(
    v: f64,
    w: f64,
    intensity: f64,
    constants: &PhysicalConstants,
    model: &CoefficientModel,
) -> Result<f64> {
    check_frequency(v)?;
    check_w(w)?;
    match &model.emission {
        Emission::Lte => {
            let ka = absorption_ka(v, w, constants, model)?;
            Ok(ka * model.bbar(v) * induced_factor(v, intensity, constants))
        }
        Emission::Custom { s_bar, .. } => {
            if w == 0.0 {
                return Ok(0.0);
            }
            Ok(rho_from_w(w, constants.gamma)? * s_bar(v, w))
        }
    }
}

/// Absorption σ_a(v, w).
pub fn sigma_a_effective(
    v: f64,
    w: f64,
    constants: &PhysicalConstants,
    model: &CoefficientModel,
) -> Result<f64> {
    check_frequency(v)?;
    check_w(w)?;
    match &model.emission {
        Emission::Lte => {
            let ka = absorption_ka(v, w, constants, model)?;
            Ok(ka * induced_factor(v, model.bbar(v), constants))
        }
        Emission::Custom { sigma_a_bar, .. } => {
            if w == 0.0 {
                return Ok(0.0);
            }
            Ok(rho_from_w(w, constants.gamma)? * sigma_a_bar(v, w))
        }
    }
}

/// Density-normalized pair (S̄, σ̄_a). With LTE emission these are
/// `K̄_a B̄ (1 + c²I/2hv³)` and `K̄_a (1 + c²B̄/2hv³)`.
pub fn normalized_emission_absorption(
    v: f64,
    w: f64,
    intensity: f64,
    constants: &PhysicalConstants,
    model: &CoefficientModel,
) -> Result<(f64, f64)> {
    check_frequency(v)?;
    check_w(w)?;
    if w == 0.0 {
        return Ok((0.0, 0.0));
    }
    match &model.emission {
        Emission::Lte => {
            let kb = kbar_a(v, w, constants, model)?;
            let bbar = model.bbar(v);
            Ok((
                kb * bbar * induced_factor(v, intensity, constants),
                kb * induced_factor(v, bbar, constants),
            ))
        }
        Emission::Custom { s_bar, sigma_a_bar } => Ok((s_bar(v, w), sigma_a_bar(v, w))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constants(gamma: f64) -> PhysicalConstants {
        PhysicalConstants {
            gamma,
            ..PhysicalConstants::default()
        }
    }

    fn gaussian(d1: f64, d2: f64, v0: f64) -> CoefficientModel {
        CoefficientModel {
            absorption: Absorption::Gaussian { d1, d2, v0 },
            ..CoefficientModel::default()
        }
    }

    #[test]
    fn ka_vanishes_at_vacuum() {
        let m = gaussian(1.0, 1.0, 2.0);
        for gamma in [1.2, 2.0, 3.0] {
            for v in [0.1, 2.0, 7.0] {
                assert_eq!(absorption_ka(v, 0.0, &constants(gamma), &m).unwrap(), 0.0);
                assert_eq!(kbar_a(v, 0.0, &constants(gamma), &m).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn ka_hand_values() {
        // v = v0: unit exponential, exponent (3-γ)/(γ-1) = 1 at γ = 2
        let m = gaussian(1.0, 1.0, 1.5);
        let ka = absorption_ka(1.5, 4.0, &constants(2.0), &m).unwrap();
        assert!((ka - 4.0).abs() < 1e-14);
        // v = 2 v0, w = 1: exp(-1)
        let ka = absorption_ka(3.0, 1.0, &constants(2.0), &m).unwrap();
        assert!((ka - (-1f64).exp()).abs() < 1e-15);
        let kb = kbar_a(1.5, 1.0, &constants(2.0), &m).unwrap();
        assert!((kb - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ka_argument_errors() {
        let m = gaussian(1.0, 1.0, 1.0);
        assert!(matches!(
            absorption_ka(0.0, 1.0, &constants(2.0), &m),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            absorption_ka(1.0, 1.0, &constants(3.5), &m),
            Err(Error::InvalidModel(_))
        ));
        assert!(matches!(
            kbar_a(1.0, 1.0, &constants(1.0), &m),
            Err(Error::InvalidModel(_))
        ));
        assert!(emission_s(-1.0, 1.0, 0.0, &constants(2.0), &m).is_err());
    }

    #[test]
    fn ka_equals_density_times_kbar() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = gaussian(1.3, 0.7, 2.5);
        for _ in 0..100 {
            let gamma = rng.gen_range(1.05..=3.0);
            let v = rng.gen_range(0.05..8.0);
            let w = rng.gen_range(0.01..3.0);
            let c = constants(gamma);
            let ka = absorption_ka(v, w, &c, &m).unwrap();
            let rhs = w.powf(2.0 / (gamma - 1.0)) * kbar_a(v, w, &c, &m).unwrap();
            assert!((ka - rhs).abs() <= 1e-12 * ka.abs().max(1e-300), "{ka} vs {rhs}");
        }
    }

    #[test]
    fn kbar_decays_along_dyadic_ladder() {
        let m = gaussian(1.0, 1.0, 2.0);
        let c = constants(1.4);
        let v = 3.0;
        let ladder: Vec<f64> = (1..=40)
            .map(|n| kbar_a(v, 2f64.powi(-n), &c, &m).unwrap())
            .collect();
        // exp(-C/w) dominates 1/w: eventually monotone, and the tail is zero to double precision
        let tail = &ladder[3..];
        assert!(tail.windows(2).all(|p| p[1] <= p[0]));
        assert!(*ladder.last().unwrap() < 1e-100);
    }

    #[test]
    fn ka_over_rho_decays_at_both_ends() {
        let m = gaussian(1.0, 1.0, 2.0);
        let c = constants(2.0);
        let v = 2.5;
        let ratio = |rho: f64| {
            let w = crate::symhyp::w_from_rho(rho, 2.0).unwrap();
            absorption_ka(v, w, &c, &m).unwrap() / rho
        };
        let small: Vec<f64> = (10..30).map(|n| ratio(10f64.powi(-n))).collect();
        assert!(small.windows(2).all(|p| p[1] <= p[0]));
        let large: Vec<f64> = (2..30).map(|n| ratio(10f64.powi(n))).collect();
        assert!(large.windows(2).all(|p| p[1] <= p[0]));
        assert!(large.last().unwrap() < &1e-6);
    }

    #[test]
    fn emission_examples() {
        let m = gaussian(1.0, 1.0, 2.0);
        let c = constants(2.0);
        let ka = absorption_ka(1.7, 0.8, &c, &m).unwrap();
        let s = emission_s(1.7, 0.8, 0.0, &c, &m).unwrap();
        assert!((s - ka * m.bbar(1.7)).abs() < 1e-15);
        assert_eq!(emission_s(1.7, 0.0, 5.0, &c, &m).unwrap(), 0.0);
        assert_eq!(sigma_a_effective(1.7, 0.0, &c, &m).unwrap(), 0.0);
    }

    #[test]
    fn emission_absorption_cancellation_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = gaussian(0.9, 1.1, 2.0);
        for _ in 0..100 {
            let c = PhysicalConstants {
                gamma: rng.gen_range(1.1..=3.0),
                c: rng.gen_range(0.5..4.0),
                h: rng.gen_range(0.5..2.0),
                ..PhysicalConstants::default()
            };
            let v = rng.gen_range(0.2..6.0);
            let w = rng.gen_range(0.0..2.0);
            let i = rng.gen_range(0.0..5.0);
            let s = emission_s(v, w, i, &c, &m).unwrap();
            let sa = sigma_a_effective(v, w, &c, &m).unwrap();
            let ka = absorption_ka(v, w, &c, &m).unwrap();
            let lhs = s - sa * i;
            let rhs = -ka * (i - m.bbar(v));
            let scale = (s.abs() + (sa * i).abs()).max(1.0);
            assert!((lhs - rhs).abs() <= 1e-12 * scale, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn coefficients_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = gaussian(1.0, 1.0, 2.0).with_scattering(ScatteringKernel::isotropic_separable(
            0.5, 2.0, 1.5,
        ));
        let k = m.scattering.clone().unwrap();
        for _ in 0..500 {
            let c = constants(rng.gen_range(1.01..=3.0));
            let v = rng.gen_range(0.01..10.0);
            let vp = rng.gen_range(0.01..10.0);
            let w = rng.gen_range(0.0..5.0);
            let i = rng.gen_range(0.0..5.0);
            let mu = rng.gen_range(-1.0..=1.0);
            assert!(absorption_ka(v, w, &c, &m).unwrap() >= 0.0);
            assert!(kbar_a(v, w, &c, &m).unwrap() >= 0.0);
            assert!(emission_s(v, w, i, &c, &m).unwrap() >= 0.0);
            assert!(sigma_a_effective(v, w, &c, &m).unwrap() >= 0.0);
            assert!((k.sigma_bar)(vp, v, mu) >= 0.0);
            assert!((k.sigma_bar_prime)(v, vp, mu) >= 0.0);
        }
    }

    #[test]
    fn custom_emission_vanishes_at_vacuum() {
        let m = CoefficientModel {
            emission: Emission::Custom {
                s_bar: Arc::new(|_, _| 2.0),
                sigma_a_bar: Arc::new(|_, _| 3.0),
            },
            ..CoefficientModel::default()
        };
        let c = constants(2.0);
        assert_eq!(emission_s(1.0, 0.0, 1.0, &c, &m).unwrap(), 0.0);
        assert_eq!(sigma_a_effective(1.0, 0.0, &c, &m).unwrap(), 0.0);
        assert!((emission_s(1.0, 0.5, 1.0, &c, &m).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn planck_profile_is_nonnegative_and_square_integrable() {
        let p = PlanckProfile::default();
        let g = crate::quadrature::build_frequency_grid(32, 40.0).unwrap();
        assert!(g.nodes.iter().all(|&v| p.eval(v) >= 0.0));
        // ∫ v^6/(e^v-1)^2 dv is finite (~ 6! ζ-like constant); the tail beyond 40 is negligible
        let l2 = g.integrate(|v| p.eval(v).powi(2));
        assert!(l2.is_finite() && l2 > 0.0);
    }
}
