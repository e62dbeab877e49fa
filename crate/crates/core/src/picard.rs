//! Discrete Sobolev norms, mollification, and the linearized Picard
//! iteration with its contraction diagnostics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

mod iteration;

pub use iteration::{
    fitted_ratio, horizon_sweep, linearized_solve, mollifier_telescoping, picard_iterate, trajectory_difference,
    HorizonEntry, HorizonSweep, IterationRecord, IterationTrace, PicardOutcome, PicardProblem, Trajectory,
};

/// `(Σ_{|α|≤s} ‖D^α f‖₀²)^(1/2)` with centered differences.
pub fn sobolev_norm(field: &[f64], s: usize, grid: &Grid) -> Result<f64> {
    if s > 3 {
        return Err(Error::UnsupportedOrder(s));
    }
    if field.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: field.len(),
        });
    }
    let dim = grid.dim();
    let mut cache: HashMap<[usize; 3], Vec<f64>> = HashMap::new();
    cache.insert([0; 3], field.to_vec());
    let mut total = 0.0;
    for order in 0..=s {
        for alpha in multi_indices(dim, order) {
            if !cache.contains_key(&alpha) {
                let axis = (0..3).find(|&a| alpha[a] > 0).unwrap();
                let mut parent = alpha;
                parent[axis] -= 1;
                let d = grid.derivative(&cache[&parent], axis);
                cache.insert(alpha, d);
            }
            let n = grid.l2_norm(&cache[&alpha]);
            total += n * n;
        }
    }
    Ok(total.sqrt())
}

fn multi_indices(dim: usize, order: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..=order {
        for b in 0..=order - a {
            let c = order - a - b;
            let alpha = [a, b, c];
            if (dim..3).all(|k| alpha[k] == 0) {
                out.push(alpha);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MollifierProfile {
    /// Bump of radius 1/2 centered at distance 0.4 from the origin. Its
    /// first moment is nonzero, so `‖J_ε u − u‖` is genuinely first order.
    #[default]
    Shifted,
    /// The standard radial bump `exp(−1/(1−|y|²))`; second order on smooth data.
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierConfig {
    pub epsilon0: f64,
    #[serde(default)]
    pub profile: MollifierProfile,
}

impl MollifierConfig {
    /// `ε_k = 2⁻ᵏ ε₀`.
    pub fn epsilon(&self, k: usize) -> f64 {
        self.epsilon0 * 0.5f64.powi(k as i32)
    }

    fn center_and_radius(&self, dim: usize) -> ([f64; 3], f64) {
        match self.profile {
            MollifierProfile::Symmetric => ([0.0; 3], 1.0),
            MollifierProfile::Shifted => {
                let mut c = [0.0; 3];
                for x in c.iter_mut().take(dim) {
                    *x = 0.4 / (dim as f64).sqrt();
                }
                (c, 0.5)
            }
        }
    }

    /// The profile `φ(y)` before discrete normalization.
    pub fn profile_value(&self, y: [f64; 3], dim: usize) -> f64 {
        let (c, r) = self.center_and_radius(dim);
        let d2: f64 = (0..dim).map(|a| (y[a] - c[a]).powi(2)).sum::<f64>() / (r * r);
        if d2 >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - d2)).exp()
        }
    }

    /// Sup of `|∇φ|` for the normalized continuous profile (measured on a fine lattice).
    pub fn profile_gradient_bound(&self, dim: usize) -> f64 {
        let (c, r) = self.center_and_radius(dim);
        let n = 2000;
        let mut mass = 0.0;
        let mut gmax = 0.0f64;
        let dt = r / n as f64;
        for i in 0..n {
            let t = (i as f64 + 0.5) * dt;
            let d2 = (t / r).powi(2);
            let f = (-1.0 / (1.0 - d2)).exp();
            let df = f * 2.0 * t / (r * r) / (1.0 - d2).powi(2);
            gmax = gmax.max(df);
            mass += f * dt * shell(dim, t);
        }
        let _ = c;
        gmax / mass
    }
}

fn shell(dim: usize, t: f64) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI * t,
        _ => 4.0 * std::f64::consts::PI * t * t,
    }
}

#[derive(Clone, Debug)]
pub struct Mollified {
    pub field: Vec<f64>,
    /// False when `ε < 2h` and the input was returned unchanged.
    pub applied: bool,
}

/// Discrete convolution with the scaled profile. Weights are normalized to
/// unit sum on the lattice, so constants are preserved; open edges repeat
/// the boundary cell.
pub fn mollify(field: &[f64], epsilon: f64, grid: &Grid, config: &MollifierConfig) -> Result<Mollified> {
    if field.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: field.len(),
        });
    }
    let h = grid.min_spacing();
    if !(epsilon >= 2.0 * h) {
        return Ok(Mollified {
            field: field.to_vec(),
            applied: false,
        });
    }
    let dim = grid.dim();
    let mut reach = [0isize; 3];
    for (a, r) in reach.iter_mut().enumerate().take(dim) {
        *r = (epsilon / grid.spacing(a)).ceil() as isize;
    }
    let mut stencil: Vec<([isize; 3], f64)> = Vec::new();
    for k in -reach[2]..=reach[2] {
        for j in -reach[1]..=reach[1] {
            for i in -reach[0]..=reach[0] {
                let off = [i, j, k];
                let mut y = [0.0; 3];
                for a in 0..dim {
                    y[a] = off[a] as f64 * grid.spacing(a) / epsilon;
                }
                let v = config.profile_value(y, dim);
                if v > 0.0 {
                    stencil.push((off, v));
                }
            }
        }
    }
    let total: f64 = stencil.iter().map(|s| s.1).sum();
    for s in stencil.iter_mut() {
        s.1 /= total;
    }
    let shape = grid.shape();
    let periodic = grid.periodic();
    let out = (0..grid.len())
        .map(|idx| {
            let ijk = grid.unravel(idx);
            let mut acc = 0.0;
            for (off, wt) in &stencil {
                let mut src = [0usize; 3];
                for a in 0..3 {
                    let n = shape[a] as isize;
                    // (J u)(x) = Σ φ(y) u(x − εy)
                    let p = ijk[a] as isize - off[a];
                    src[a] = if periodic { p.rem_euclid(n) } else { p.clamp(0, n - 1) } as usize;
                }
                acc += wt * field[grid.ravel(src)];
            }
            acc
        })
        .collect();
    Ok(Mollified {
        field: out,
        applied: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use std::f64::consts::PI;

    #[test]
    fn sobolev_examples() {
        let g = Grid::line(256, 0.0, 2.0 * PI, Boundary::Periodic).unwrap();
        let f: Vec<f64> = g.centers().iter().map(|x| x[0].sin()).collect();
        let n1 = sobolev_norm(&f, 1, &g).unwrap();
        assert!((n1 - (2.0 * PI).sqrt()).abs() < 0.01 * (2.0 * PI).sqrt());
        assert_eq!(sobolev_norm(&f, 0, &g).unwrap(), g.l2_norm(&f));
        assert_eq!(sobolev_norm(&vec![0.0; 256], 3, &g).unwrap(), 0.0);
        assert!(matches!(sobolev_norm(&f, 4, &g), Err(Error::UnsupportedOrder(4))));
    }

    #[test]
    fn sobolev_counts_mixed_derivatives_in_3d() {
        // f = x y on a cube: the only nonzero derivatives are f, ∂x f = y, ∂y f = x, ∂xy f = 1
        let g = Grid::cube(8, 0.0, 1.0, Boundary::Open).unwrap();
        let f: Vec<f64> = g.centers().iter().map(|x| x[0] * x[1]).collect();
        let n = sobolev_norm(&f, 2, &g).unwrap();
        let l2 = |h: &dyn Fn([f64; 3]) -> f64| g.l2_norm(&g.centers().iter().map(|&x| h(x)).collect::<Vec<_>>());
        let expect = (l2(&|x| x[0] * x[1]).powi(2) + l2(&|x| x[1]).powi(2) + l2(&|x| x[0]).powi(2) + 1.0).sqrt();
        assert!((n - expect).abs() < 1e-10);
    }

    #[test]
    fn mollifier_preserves_constants_and_mass() {
        let g = Grid::line(64, 0.0, 1.0, Boundary::Periodic).unwrap();
        for profile in [MollifierProfile::Shifted, MollifierProfile::Symmetric] {
            let cfg = MollifierConfig { epsilon0: 0.2, profile };
            let m = mollify(&vec![3.5; 64], 0.2, &g, &cfg).unwrap();
            assert!(m.applied);
            assert!(m.field.iter().all(|v| (v - 3.5).abs() < 1e-12));
            let f: Vec<f64> = g.centers().iter().map(|x| (2.0 * PI * x[0]).sin().powi(3) + 1.0).collect();
            let m = mollify(&f, 0.2, &g, &cfg).unwrap();
            assert!((g.integrate(&m.field) - g.integrate(&f)).abs() < 1e-10);
        }
    }

    #[test]
    fn narrow_mollifier_is_flagged_noop() {
        let g = Grid::line(64, 0.0, 1.0, Boundary::Periodic).unwrap();
        let cfg = MollifierConfig { epsilon0: 0.01, profile: MollifierProfile::Shifted };
        let f: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let m = mollify(&f, 0.01, &g, &cfg).unwrap();
        assert!(!m.applied);
        assert_eq!(m.field, f);
    }

    #[test]
    fn shifted_mollifier_error_is_first_order() {
        let g = Grid::line(1024, 0.0, 1.0, Boundary::Periodic).unwrap();
        let cfg = MollifierConfig { epsilon0: 0.2, profile: MollifierProfile::Shifted };
        let f: Vec<f64> = g.centers().iter().map(|x| (2.0 * PI * x[0]).sin()).collect();
        let err = |eps: f64| {
            let m = mollify(&f, eps, &g, &cfg).unwrap().field;
            g.l2_norm(&m.iter().zip(&f).map(|(a, b)| a - b).collect::<Vec<_>>())
        };
        for k in 0..4 {
            let ratio = err(cfg.epsilon(k + 1)) / err(cfg.epsilon(k));
            assert!((ratio - 0.5).abs() < 0.1, "k = {k}: {ratio}");
        }
    }

    #[test]
    fn mollified_indicator_has_bounded_gradient() {
        let g = Grid::line(512, -1.0, 1.0, Boundary::Open).unwrap();
        let cfg = MollifierConfig { epsilon0: 0.1, profile: MollifierProfile::Symmetric };
        let f: Vec<f64> = g.centers().iter().map(|x| if x[0].abs() < 0.3 { 1.0 } else { 0.0 }).collect();
        let m = mollify(&f, 0.1, &g, &cfg).unwrap().field;
        let grad = g.derivative(&m, 0).iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let bound = cfg.profile_gradient_bound(1) / 0.1;
        assert!(grad.is_finite() && grad <= 1.05 * bound, "{grad} vs {bound}");
    }
}
