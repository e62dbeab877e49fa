//! Discretizations of the photon direction sphere and the frequency half-line.
//!
//! Weights are kept in steradians and frequency units (never normalized),
//! so every moment formula is a plain weighted sum.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularQuadrature {
    pub ordinates: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl AngularQuadrature {
    /// Validates the sphere-rule invariants: unit ordinates, total weight 4π,
    /// vanishing first moment.
    pub fn new(ordinates: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        if ordinates.len() != weights.len() || ordinates.is_empty() {
            return invalid("ordinates and weights must be non-empty and of equal length");
        }
        let q = AngularQuadrature { ordinates, weights };
        q.check()?;
        Ok(q)
    }

    fn check(&self) -> Result<()> {
        for (o, &w) in self.ordinates.iter().zip(&self.weights) {
            let norm = (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return invalid(format!("ordinate {o:?} is not a unit vector"));
            }
            if !(w > 0.0) {
                return invalid(format!("non-positive angular weight {w}"));
            }
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 4.0 * PI).abs() > 1e-10 {
            return invalid(format!("angular weights sum to {total}, not 4π"));
        }
        let first = self.first_moment();
        if first.iter().any(|c| c.abs() > 1e-10) {
            return invalid(format!("first angular moment {first:?} does not vanish"));
        }
        Ok(())
    }

    /// Two-stream set `±x̂` with weight 2π each: the direction set of a
    /// genuinely one-dimensional world, rescaled to the measure of S².
    pub fn rod() -> Self {
        AngularQuadrature {
            ordinates: vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
            weights: vec![2.0 * PI, 2.0 * PI],
        }
    }

    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn first_moment(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (o, w) in self.ordinates.iter().zip(&self.weights) {
            for i in 0..3 {
                m[i] += w * o[i];
            }
        }
        m
    }

    pub fn second_moment(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (o, w) in self.ordinates.iter().zip(&self.weights) {
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += w * o[i] * o[j];
                }
            }
        }
        m
    }

    /// Index of the ordinate with the largest projection on `dir`.
    pub fn closest(&self, dir: [f64; 3]) -> usize {
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (k, o) in self.ordinates.iter().enumerate() {
            let d = o[0] * dir[0] + o[1] * dir[1] + o[2] * dir[2];
            if d > best_dot {
                best_dot = d;
                best = k;
            }
        }
        best
    }
}

/// Product rule on S²: Gauss-Legendre in the polar cosine times a uniform
/// trapezoid in azimuth, `order` polar nodes by `2 * order` azimuths.
pub fn build_ordinates(order: usize) -> Result<AngularQuadrature> {
    if order < 2 {
        return invalid(format!("angular order must be >= 2, got {order}"));
    }
    let (mu, wmu) = gauss_legendre(order);
    let n_phi = 2 * order;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut ordinates = Vec::with_capacity(order * n_phi);
    let mut weights = Vec::with_capacity(order * n_phi);
    for (&m, &wm) in mu.iter().zip(&wmu) {
        let s = (1.0 - m * m).sqrt();
        for p in 0..n_phi {
            let phi = (p as f64 + 0.5) * dphi;
            ordinates.push([s * phi.cos(), s * phi.sin(), m]);
            weights.push(wm * dphi);
        }
    }
    AngularQuadrature::new(ordinates, weights)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub v_max: f64,
    /// Highest polynomial degree integrated exactly on `[0, v_max]`.
    pub degree: usize,
}

impl FrequencyGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&v, &w)| w * f(v)).sum()
    }
}

/// Gauss-Legendre rule mapped onto `(0, v_max]`.
pub fn build_frequency_grid(groups: usize, v_max: f64) -> Result<FrequencyGrid> {
    if groups < 1 {
        return invalid("at least one frequency group is required");
    }
    if !(v_max > 0.0) || !v_max.is_finite() {
        return invalid(format!("v_max must be positive, got {v_max}"));
    }
    let (x, w) = gauss_legendre(groups);
    let half = 0.5 * v_max;
    Ok(FrequencyGrid {
        nodes: x.iter().map(|&xi| half * (xi + 1.0)).collect(),
        weights: w.iter().map(|&wi| half * wi).collect(),
        v_max,
        degree: 2 * groups - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn order_below_two_rejected() {
        assert!(build_ordinates(1).is_err());
        assert!(build_ordinates(0).is_err());
    }

    #[test]
    fn order4_weights_and_first_moment() {
        let q = build_ordinates(4).unwrap();
        assert_eq!(q.len(), 32);
        assert!((q.total_weight() - 4.0 * PI).abs() < 1e-12);
        for c in q.first_moment() {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn second_moment_matches_monte_carlo_oracle() {
        // oracle: uniform directions on S², E[Ω_i Ω_j] * 4π
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 400_000;
        let mut mc = [[0.0; 3]; 3];
        for _ in 0..n {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            let s = (1.0 - z * z).sqrt();
            let o = [s * phi.cos(), s * phi.sin(), z];
            for i in 0..3 {
                for j in 0..3 {
                    mc[i][j] += o[i] * o[j];
                }
            }
        }
        let q = build_ordinates(4).unwrap();
        let m = q.second_moment();
        for i in 0..3 {
            for j in 0..3 {
                let mc_ij = 4.0 * PI * mc[i][j] / n as f64;
                assert!((m[i][j] - mc_ij).abs() < 0.03, "({i},{j}) {} vs {mc_ij}", m[i][j]);
                let exact = if i == j { 4.0 * PI / 3.0 } else { 0.0 };
                assert!((m[i][j] - exact).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn second_moment_isotropy_for_all_orders() {
        for order in 4..12 {
            let m = build_ordinates(order).unwrap().second_moment();
            for i in 0..3 {
                for j in 0..3 {
                    let exact = if i == j { 4.0 * PI / 3.0 } else { 0.0 };
                    assert!((m[i][j] - exact).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn rod_set_satisfies_sphere_invariants() {
        let r = AngularQuadrature::rod();
        assert!(AngularQuadrature::new(r.ordinates.clone(), r.weights.clone()).is_ok());
    }

    #[test]
    fn frequency_rule_examples() {
        let g = build_frequency_grid(8, 1.0).unwrap();
        assert!((g.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
        assert!((g.integrate(|v| v.powi(3)) - 0.25).abs() < 1e-12);
        assert!(g.nodes.windows(2).all(|p| p[1] > p[0]));
        assert!(g.nodes[0] > 0.0);

        let one = build_frequency_grid(1, 2.0).unwrap();
        assert_eq!(one.nodes.len(), 1);
        assert!((one.nodes[0] - 1.0).abs() < 1e-15);
        assert!((one.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn frequency_rule_rejects_bad_input() {
        assert!(build_frequency_grid(0, 1.0).is_err());
        assert!(build_frequency_grid(4, 0.0).is_err());
        assert!(build_frequency_grid(4, -1.0).is_err());
    }

    #[test]
    fn frequency_rule_exact_to_declared_degree() {
        for groups in 1..10 {
            let g = build_frequency_grid(groups, 3.0).unwrap();
            for p in 0..=g.degree {
                let exact = 3f64.powi(p as i32 + 1) / (p as f64 + 1.0);
                let q = g.integrate(|v| v.powi(p as i32));
                assert!((q - exact).abs() <= 1e-11 * exact.max(1.0), "groups {groups} p {p}");
            }
        }
    }

    #[test]
    fn refinement_reduces_error_on_smooth_integrands() {
        // ∫ exp(Ω_x + 0.5 Ω_z) dΩ over S² has the closed form 4π sinh(r)/r
        let r = (1.0f64 + 0.25).sqrt();
        let exact = 4.0 * PI * r.sinh() / r;
        let mut prev = f64::INFINITY;
        for order in [2, 4, 8] {
            let q = build_ordinates(order).unwrap();
            let v: f64 = q
                .ordinates
                .iter()
                .zip(&q.weights)
                .map(|(o, w)| w * (o[0] + 0.5 * o[2]).exp())
                .sum();
            let err = (v - exact).abs();
            assert!(err <= prev * 1.1);
            prev = err;
        }
        let mut prev = f64::INFINITY;
        for groups in [1, 2, 4] {
            let g = build_frequency_grid(groups, 2.0).unwrap();
            let err = (g.integrate(|v| (-v).exp()) - (1.0 - (-2f64).exp())).abs();
            assert!(err <= prev * 1.1);
            prev = err;
        }
    }
}
