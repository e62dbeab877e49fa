//! Symmetrized form of the isentropic fluid equations.
//!
//! With `w = ρ^((γ-1)/2)` and `U = (w, u)` the fluid part becomes
//! `A₀ ∂ₜU + Σⱼ Aⱼ(U) ∂ⱼU = G(I, U)` with a constant diagonal symmetrizer
//! `A₀ = diag(1, κ, κ, κ)`, `κ = (γ-1)²/(4γ)`, and symmetric `Aⱼ(U)`.
//! Axes are 0-based throughout (`axis = 0` is x).

use nalgebra::Matrix4;

use crate::coefficients::{
    check_gamma, kappa, kbar_a, normalized_emission_absorption, emission_s, sigma_a_effective,
    CoefficientModel, PhysicalConstants,
};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{AngularQuadrature, FrequencyGrid};

pub fn w_from_rho(rho: f64, gamma: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return invalid(format!("density must be non-negative, got {rho}"));
    }
    check_gamma(gamma)?;
    Ok(if rho == 0.0 {
        0.0
    } else {
        rho.powf(0.5 * (gamma - 1.0))
    })
}

pub fn rho_from_w(w: f64, gamma: f64) -> Result<f64> {
    if !(w >= 0.0) {
        return invalid(format!("symmetrizing variable must be non-negative, got {w}"));
    }
    check_gamma(gamma)?;
    Ok(if w == 0.0 {
        0.0
    } else {
        w.powf(2.0 / (gamma - 1.0))
    })
}

/// Cell-wise `(w, u)` fields.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrizedState {
    pub w: Vec<f64>,
    pub u: Vec<[f64; 3]>,
}

impl SymmetrizedState {
    pub fn zeros(n: usize) -> Self {
        SymmetrizedState {
            w: vec![0.0; n],
            u: vec![[0.0; 3]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn cell(&self, i: usize) -> [f64; 4] {
        [self.w[i], self.u[i][0], self.u[i][1], self.u[i][2]]
    }

    pub fn set_cell(&mut self, i: usize, v: [f64; 4]) {
        self.w[i] = v[0];
        self.u[i] = [v[1], v[2], v[3]];
    }
}

/// `diag(1, κ, κ, κ)`.
pub fn assemble_a0(gamma: f64) -> Result<Matrix4<f64>> {
    check_gamma(gamma)?;
    let k = kappa(gamma);
    Ok(Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, k, k, k)))
}

/// `Aⱼ(U)` for `U = (w, u₁, u₂, u₃)`.
pub fn assemble_aj(cell: [f64; 4], gamma: f64, axis: usize) -> Result<Matrix4<f64>> {
    if axis > 2 {
        return invalid(format!("axis index must be 0, 1 or 2, got {axis}"));
    }
    check_gamma(gamma)?;
    let k = kappa(gamma);
    let uj = cell[1 + axis];
    let off = 0.5 * (gamma - 1.0) * cell[0];
    let mut a = Matrix4::zeros();
    a[(0, 0)] = uj;
    a[(0, 1 + axis)] = off;
    a[(1 + axis, 0)] = off;
    for d in 1..4 {
        a[(d, d)] = k * uj;
    }
    Ok(a)
}

/// Characteristic speeds of `A₀⁻¹Aⱼ(U)`: `uⱼ ± √γ w` and `uⱼ` (triple).
pub fn characteristic_speeds(cell: [f64; 4], gamma: f64, axis: usize) -> [f64; 4] {
    let uj = cell[1 + axis];
    let cs = gamma.sqrt() * cell[0];
    [uj - cs, uj, uj, uj + cs]
}

/// Spectral radius of `A₀⁻¹Aⱼ(U)`.
pub fn max_wave_speed(cell: [f64; 4], gamma: f64, axis: usize) -> f64 {
    cell[1 + axis].abs() + gamma.sqrt() * cell[0].abs()
}

fn check_cell_len(cell: &[f64], freq: &FrequencyGrid, quad: &AngularQuadrature) -> Result<()> {
    let expected = freq.len() * quad.len();
    if cell.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: cell.len(),
        });
    }
    Ok(())
}

/// Radiation momentum source `G = (0, G₁, G₂, G₃)`,
/// `Gⱼ = κ/c · Σ_g Σ_k w_g w_k K̄_a(v_g, w) (I_gk − B̄(v_g)) Ω_k,j`.
///
/// `cell` holds the intensities of one cell, group-major (`g * K + k`).
pub fn radiation_source_g(
    cell: &[f64],
    w: f64,
    model: &CoefficientModel,
    freq: &FrequencyGrid,
    quad: &AngularQuadrature,
    constants: &PhysicalConstants,
) -> Result<[f64; 4]> {
    check_cell_len(cell, freq, quad)?;
    let nk = quad.len();
    let mut g = [0.0; 4];
    for (gi, (&v, &wv)) in freq.nodes.iter().zip(&freq.weights).enumerate() {
        let kb = kbar_a(v, w, constants, model)?;
        if kb == 0.0 {
            continue;
        }
        let bbar = model.bbar(v);
        for (k, (o, &wk)) in quad.ordinates.iter().zip(&quad.weights).enumerate() {
            let excess = cell[gi * nk + k] - bbar;
            if excess == 0.0 {
                continue;
            }
            let s = wv * wk * kb * excess;
            for j in 0..3 {
                g[1 + j] += s * o[j];
            }
        }
    }
    let pre = constants.kappa() / constants.c;
    for gj in g.iter_mut().skip(1) {
        *gj *= pre;
    }
    Ok(g)
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Normalized in-scattering `Σ w' (v/v') σ̄_s(v'→v, Ω'·Ω) I'` and
/// out-scattering rate `Σ w' σ̄'_s(v→v', Ω·Ω')` at `(g, k)`.
pub(crate) fn scattering_terms(
    cell: &[f64],
    g: usize,
    k: usize,
    kernel: &crate::coefficients::ScatteringKernel,
    freq: &FrequencyGrid,
    quad: &AngularQuadrature,
) -> (f64, f64) {
    let nk = quad.len();
    let v = freq.nodes[g];
    let omega = &quad.ordinates[k];
    let mut gain = 0.0;
    let mut out_rate = 0.0;
    for (gp, (&vp, &wvp)) in freq.nodes.iter().zip(&freq.weights).enumerate() {
        for (kp, (op, &wkp)) in quad.ordinates.iter().zip(&quad.weights).enumerate() {
            let mu = dot(op, omega);
            let ww = wvp * wkp;
            gain += ww * (v / vp) * (kernel.sigma_bar)(vp, v, mu) * cell[gp * nk + kp];
            out_rate += ww * (kernel.sigma_bar_prime)(v, vp, mu);
        }
    }
    (gain, out_rate)
}

/// Momentum source of the scattering system,
/// `Fⱼ = −κ/c ΣΣ (S̄ − σ̄_a I + ΣΣ((v/v')σ̄_s I' − σ̄'_s I)) Ωⱼ`, zero at vacuum.
pub fn collision_source_f(
    cell: &[f64],
    w: f64,
    model: &CoefficientModel,
    freq: &FrequencyGrid,
    quad: &AngularQuadrature,
    constants: &PhysicalConstants,
) -> Result<[f64; 4]> {
    check_cell_len(cell, freq, quad)?;
    let kernel = model
        .scattering
        .as_ref()
        .ok_or_else(|| Error::InvalidModel("the scattering source needs a kernel".into()))?;
    if w == 0.0 {
        return Ok([0.0; 4]);
    }
    let nk = quad.len();
    let mut f = [0.0; 4];
    for (g, (&v, &wv)) in freq.nodes.iter().zip(&freq.weights).enumerate() {
        for (k, (o, &wk)) in quad.ordinates.iter().zip(&quad.weights).enumerate() {
            let i = cell[g * nk + k];
            let (s_bar, sa_bar) = normalized_emission_absorption(v, w, i, constants, model)?;
            let (gain, out_rate) = scattering_terms(cell, g, k, kernel, freq, quad);
            let integrand = s_bar - sa_bar * i + gain - out_rate * i;
            for j in 0..3 {
                f[1 + j] += wv * wk * integrand * o[j];
            }
        }
    }
    let pre = -constants.kappa() / constants.c;
    for fj in f.iter_mut().skip(1) {
        *fj *= pre;
    }
    Ok(f)
}

/// Collision term `A_r = S − σ_a I + ΣΣ((v/v')σ_s I' − σ'_s I)` at every `(g, k)`
/// of one cell. A model without a kernel has scattering switched off.
pub fn collision_ar(
    cell: &[f64],
    rho: f64,
    model: &CoefficientModel,
    freq: &FrequencyGrid,
    quad: &AngularQuadrature,
    constants: &PhysicalConstants,
) -> Result<Vec<f64>> {
    check_cell_len(cell, freq, quad)?;
    let w = w_from_rho(rho, constants.gamma)?;
    let nk = quad.len();
    let mut out = vec![0.0; cell.len()];
    if rho == 0.0 {
        return Ok(out);
    }
    for (g, &v) in freq.nodes.iter().enumerate() {
        let sa = sigma_a_effective(v, w, constants, model)?;
        for k in 0..nk {
            let i = cell[g * nk + k];
            let mut a = emission_s(v, w, i, constants, model)? - sa * i;
            if let Some(kernel) = &model.scattering {
                let (gain, out_rate) = scattering_terms(cell, g, k, kernel, freq, quad);
                a += rho * (gain - out_rate * i);
            }
            out[g * nk + k] = a;
        }
    }
    Ok(out)
}
