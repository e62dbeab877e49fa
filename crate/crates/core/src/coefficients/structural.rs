//! Sampled verification of the structural assumptions a coefficient model
//! must satisfy for the local theory: Sobolev-type bounds on K_a and K̄_a,
//! Lipschitz continuity of K̄_a in w, the o(ρ) vacuum limit, finiteness of
//! the scattering double integrals, and the bounds on a pluggable S̄, σ̄_a.
//!
//! Nothing here is a proof. Each check reports its measured supremum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    absorption_ka, emission_s, kbar_a, normalized_emission_absorption, sigma_a_effective,
    CoefficientModel, Emission, PhysicalConstants,
};
use crate::grid::{Boundary, Grid};
use crate::picard::sobolev_norm;
use crate::quadrature::{AngularQuadrature, FrequencyGrid};

#[derive(Clone, Debug, Serialize)]
pub struct StructuralCheck {
    pub name: String,
    pub measured: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct StructuralReport {
    pub checks: Vec<StructuralCheck>,
}

impl StructuralReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&StructuralCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, measured: f64, pass: bool, detail: String) {
        self.checks.push(StructuralCheck {
            name: name.to_string(),
            measured,
            pass,
            detail,
        });
    }
}

#[derive(Clone, Debug)]
pub struct StructuralOptions {
    /// Sobolev order of the norm bounds.
    pub s: usize,
    /// Random w-fields per norm level.
    pub samples: usize,
    /// Random pairs per frequency node in the Lipschitz scan.
    pub pairs: usize,
    pub seed: u64,
    /// Spatial grid on which the w-fields live.
    pub space: Grid,
}

impl Default for StructuralOptions {
    fn default() -> Self {
        StructuralOptions {
            s: 3,
            samples: 6,
            pairs: 400,
            seed: 0x5eed,
            space: Grid::line(128, -1.0, 1.0, Boundary::Open).expect("static grid"),
        }
    }
}

/// Norm levels ‖w‖_s = M·θ probed by the bound checks, θ = 2^-j.
const THETAS: [f64; 21] = {
    let mut t = [1.0; 21];
    let mut j = 1;
    while j < 21 {
        t[j] = t[j - 1] * 0.5;
        j += 1;
    }
    t
};

/// A ratio ladder counts as bounded when its small-norm end does not exceed
/// twice the largest ratio seen over the upper half of the ladder.
fn ladder_bounded(by_theta: &[f64]) -> bool {
    let upper = by_theta[..by_theta.len() / 2].iter().copied().fold(0.0, f64::max);
    by_theta[by_theta.len() - 1] <= 2.0 * upper
}

pub fn check_structural_assumptions(
    model: &CoefficientModel,
    constants: &PhysicalConstants,
    freq: &FrequencyGrid,
    quad: &AngularQuadrature,
    norm_bound: f64,
) -> StructuralReport {
    check_structural_assumptions_with(model, constants, freq, quad, norm_bound, &StructuralOptions::default())
}

pub fn check_structural_assumptions_with(
    model: &CoefficientModel,
    constants: &PhysicalConstants,
    freq: &FrequencyGrid,
    quad: &AngularQuadrature,
    norm_bound: f64,
    options: &StructuralOptions,
) -> StructuralReport {
    let mut report = StructuralReport::default();
    if let Err(e) = constants.validate() {
        report.push("constants", f64::NAN, false, e.to_string());
        return report;
    }
    if !(norm_bound > 0.0) || options.s > 3 {
        report.push(
            "options",
            f64::NAN,
            false,
            format!("need M > 0 and s <= 3 (M = {norm_bound}, s = {})", options.s),
        );
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let fields = sample_fields(&mut rng, options, norm_bound);
    let w_max = fields
        .iter()
        .flat_map(|(_, f)| f.iter().copied())
        .fold(0.0, f64::max)
        .max(1e-3);

    nonnegativity(&mut report, &mut rng, model, constants, freq, quad, w_max);
    vacuum_degeneracy(&mut report, model, constants, freq, quad);
    o_rho(&mut report, model, constants, freq);
    sobolev_bound(&mut report, model, constants, freq, options, &fields);
    lipschitz(&mut report, &mut rng, model, constants, freq, options.pairs, w_max);
    scattering_integrals(&mut report, model, freq, quad);
    emission_bounds(&mut report, &mut rng, model, constants, freq, options, &fields, w_max);
    report
}

/// Non-negative sums of polynomial bumps, rescaled to each norm level.
fn sample_fields(rng: &mut ChaCha8Rng, options: &StructuralOptions, m: f64) -> Vec<(f64, Vec<f64>)> {
    let g = &options.space;
    let dim = g.dim();
    let (lo, hi) = (g.lo(), g.hi());
    let mut out = Vec::new();
    for _ in 0..options.samples {
        let bumps: Vec<([f64; 3], f64, f64)> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let mut c = [0.0; 3];
                let mut radius = f64::INFINITY;
                for a in 0..dim {
                    let len = hi[a] - lo[a];
                    c[a] = lo[a] + len * rng.gen_range(0.3..0.7);
                    radius = radius.min(len * rng.gen_range(0.15..0.3));
                }
                (c, radius, rng.gen_range(0.2..1.0))
            })
            .collect();
        let shape: Vec<f64> = g
            .centers()
            .iter()
            .map(|x| {
                bumps
                    .iter()
                    .map(|(c, r, a)| {
                        let d2: f64 = (0..dim).map(|k| (x[k] - c[k]).powi(2)).sum::<f64>() / (r * r);
                        if d2 < 1.0 {
                            a * (1.0 - d2).powi(4)
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect();
        let norm = sobolev_norm(&shape, options.s, g).unwrap_or(0.0);
        if norm == 0.0 {
            continue;
        }
        for &theta in &THETAS {
            let scale = m * theta / norm;
            out.push((theta, shape.iter().map(|v| v * scale).collect()));
        }
    }
    out
}

fn nonnegativity(
    report: &mut StructuralReport,
    rng: &mut ChaCha8Rng,
    model: &CoefficientModel,
    c: &PhysicalConstants,
    freq: &FrequencyGrid,
    quad: &AngularQuadrature,
    w_max: f64,
) {
    let mut worst = 0.0f64;
    let mut failure = None;
    for &v in &freq.nodes {
        if model.bbar(v) < 0.0 {
            worst = worst.min(model.bbar(v));
            failure.get_or_insert(format!("B̄({v}) < 0"));
        }
        for _ in 0..32 {
            let w = rng.gen_range(0.0..=w_max);
            let i = rng.gen_range(0.0..=2.0 * model.bbar(v).abs().max(1.0));
            let values = [
                ("K_a", absorption_ka(v, w, c, model)),
                ("K̄_a", kbar_a(v, w, c, model)),
                ("S", emission_s(v, w, i, c, model)),
                ("σ_a", sigma_a_effective(v, w, c, model)),
            ];
            for (name, val) in values {
                match val {
                    Ok(x) if x >= 0.0 => {}
                    Ok(x) => {
                        worst = worst.min(x);
                        failure.get_or_insert(format!("{name}(v = {v}, w = {w}) = {x}"));
                    }
                    Err(e) => {
                        failure.get_or_insert(format!("{name}(v = {v}, w = {w}): {e}"));
                    }
                }
            }
        }
    }
    if let Some(k) = &model.scattering {
        for &vf in &freq.nodes {
            for &vt in &freq.nodes {
                for o in &quad.ordinates {
                    let mu = o[2];
                    for x in [(k.sigma_bar)(vf, vt, mu), (k.sigma_bar_prime)(vf, vt, mu)] {
                        if !(x >= 0.0) {
                            worst = worst.min(x);
                            failure.get_or_insert(format!("scattering kernel ({vf}, {vt}, {mu}) = {x}"));
                        }
                    }
                }
            }
        }
    }
    let pass = failure.is_none();
    report.push(
        "nonnegativity",
        worst,
        pass,
        failure.unwrap_or_else(|| "all sampled coefficients >= 0".into()),
    );
}

fn vacuum_degeneracy(
    report: &mut StructuralReport,
    model: &CoefficientModel,
    c: &PhysicalConstants,
    freq: &FrequencyGrid,
    _quad: &AngularQuadrature,
) {
    let mut worst = 0.0f64;
    for &v in &freq.nodes {
        let i = model.bbar(v) + 1.0;
        let vals = [
            absorption_ka(v, 0.0, c, model),
            emission_s(v, 0.0, i, c, model),
            sigma_a_effective(v, 0.0, c, model),
        ];
        for x in vals {
            worst = worst.max(x.map(f64::abs).unwrap_or(f64::INFINITY));
        }
    }
    report.push(
        "vacuum-degeneracy",
        worst,
        worst == 0.0,
        "max |coefficient| at w = 0 (ρ-carrying coefficients)".into(),
    );
}

/// K̄_a along w = 2⁻ⁿ must die out: the o(ρ) condition K_a/ρ → 0.
fn o_rho(report: &mut StructuralReport, model: &CoefficientModel, c: &PhysicalConstants, freq: &FrequencyGrid) {
    let mut worst_last = 0.0f64;
    let mut failure = None;
    for &v in &freq.nodes {
        let ladder: Vec<f64> = (1..=40)
            .map(|n| kbar_a(v, 2f64.powi(-n), c, model).unwrap_or(f64::NAN))
            .collect();
        let last = *ladder.last().unwrap();
        let peak = ladder.iter().copied().fold(0.0, f64::max);
        worst_last = worst_last.max(last);
        let vanishes = last <= 1e-8 * peak.max(1.0);
        let monotone = ladder[29..].windows(2).all(|p| p[1] <= p[0]);
        if !(vanishes && monotone) && failure.is_none() {
            failure = Some(format!(
                "at v = {v}: K̄_a(2^-40) = {last:e}, tail monotone = {monotone}"
            ));
        }
    }
    let pass = failure.is_none();
    report.push(
        "o-rho",
        worst_last,
        pass,
        failure.unwrap_or_else(|| "K̄_a(v, w) -> 0 as w -> 0 at every frequency node".into()),
    );
}

fn sobolev_bound(
    report: &mut StructuralReport,
    model: &CoefficientModel,
    c: &PhysicalConstants,
    freq: &FrequencyGrid,
    options: &StructuralOptions,
    fields: &[(f64, Vec<f64>)],
) {
    let g = &options.space;
    let mut by_theta = vec![0.0f64; THETAS.len()];
    for (theta, w) in fields {
        let wn = sobolev_norm(w, options.s, g).unwrap_or(f64::NAN);
        let mut ka_sup = 0.0f64;
        let mut kb_sup = 0.0f64;
        let mut kb_l2 = 0.0;
        for (&v, &wv) in freq.nodes.iter().zip(&freq.weights) {
            let ka: Vec<f64> = w.iter().map(|&x| absorption_ka(v, x, c, model).unwrap_or(f64::NAN)).collect();
            let kb: Vec<f64> = w.iter().map(|&x| kbar_a(v, x, c, model).unwrap_or(f64::NAN)).collect();
            let na = sobolev_norm(&ka, options.s, g).unwrap_or(f64::NAN);
            let nb = sobolev_norm(&kb, options.s, g).unwrap_or(f64::NAN);
            ka_sup = ka_sup.max(na);
            kb_sup = kb_sup.max(nb);
            kb_l2 += wv * nb * nb;
        }
        let ratio = (ka_sup + kb_sup + kb_l2.sqrt()) / wn;
        let slot = THETAS.iter().position(|t| t == theta).unwrap();
        by_theta[slot] = by_theta[slot].max(ratio);
    }
    let measured = by_theta.iter().copied().fold(0.0, f64::max);
    let large = by_theta[0];
    let small = *by_theta.last().unwrap();
    let pass = measured.is_finite() && (measured == 0.0 || ladder_bounded(&by_theta));
    report.push(
        "sobolev-bound",
        measured,
        pass,
        format!(
            "sup (‖K_a‖ + ‖K̄_a‖_(L2∩L∞)) / ‖w‖_{} = {measured:e}; ratio at θ = 1: {large:e}, at θ = 1/32: {small:e}",
            options.s
        ),
    );
}

fn lipschitz(
    report: &mut StructuralReport,
    rng: &mut ChaCha8Rng,
    model: &CoefficientModel,
    c: &PhysicalConstants,
    freq: &FrequencyGrid,
    pairs: usize,
    w_max: f64,
) {
    let mut per_node = Vec::with_capacity(freq.len());
    for &v in &freq.nodes {
        let mut k = 0.0f64;
        for p in 0..pairs {
            let (a, b) = if p % 2 == 0 {
                (rng.gen_range(0.0..=w_max), rng.gen_range(0.0..=w_max))
            } else {
                let lo = (w_max * 1e-12).ln();
                let hi = w_max.ln();
                (rng.gen_range(lo..=hi).exp(), rng.gen_range(lo..=hi).exp())
            };
            if a <= 0.0 || b <= 0.0 || a == b {
                continue;
            }
            let fa = kbar_a(v, a, c, model).unwrap_or(f64::NAN);
            let fb = kbar_a(v, b, c, model).unwrap_or(f64::NAN);
            let q = (fa - fb).abs() / (a - b).abs();
            k = if q.is_nan() { f64::NAN } else { k.max(q) };
        }
        per_node.push(k);
    }
    let sup = per_node.iter().copied().fold(0.0, f64::max);
    let finite = per_node.iter().all(|k| k.is_finite());
    report.push(
        "lipschitz",
        sup,
        finite,
        format!("max divided difference of K̄_a in w over (0, {w_max:.3e}]"),
    );
    let l2: f64 = per_node
        .iter()
        .zip(&freq.weights)
        .map(|(k, w)| w * k * k)
        .sum::<f64>()
        .sqrt();
    let norm = sup.max(l2);
    report.push(
        "lipschitz-norm",
        norm,
        norm.is_finite(),
        format!("‖K(v)‖_(L∞∩L2): sup {sup:e}, L2 {l2:e}"),
    );
}

fn scattering_integrals(
    report: &mut StructuralReport,
    model: &CoefficientModel,
    freq: &FrequencyGrid,
    quad: &AngularQuadrature,
) {
    let Some(k) = &model.scattering else {
        report.push("zhen8-lambda1", 0.0, true, "no scattering kernel".into());
        report.push("zhen8-lambda2", 0.0, true, "no scattering kernel".into());
        return;
    };
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let mut inner_s = Vec::new();
    let mut inner_p = Vec::new();
    for &v in &freq.nodes {
        for o in &quad.ordinates {
            let mut s = 0.0;
            let mut p = 0.0;
            for (&vp, &wvp) in freq.nodes.iter().zip(&freq.weights) {
                for (op, &wkp) in quad.ordinates.iter().zip(&quad.weights) {
                    let mu = dot(op, o);
                    s += wvp * wkp * (v / vp).powi(2) * (k.sigma_bar)(vp, v, mu).powi(2);
                    p += wvp * wkp * (k.sigma_bar_prime)(v, vp, mu);
                }
            }
            inner_s.push(s);
            inner_p.push(p);
        }
    }
    let outer = |inner: &[f64], lam: f64| -> f64 {
        let mut acc = 0.0;
        let mut idx = 0;
        for &wv in &freq.weights {
            for &wk in &quad.weights {
                acc += wv * wk * inner[idx].powf(lam);
                idx += 1;
            }
        }
        acc
    };
    let l1: Vec<f64> = [1.0, 0.5].iter().map(|&l| outer(&inner_s, l)).collect();
    let sup_p = inner_p.iter().copied().fold(0.0, f64::max);
    let l2: Vec<f64> = [1.0, 2.0].iter().map(|&l| outer(&inner_p, l) + sup_p).collect();
    let m1 = l1.iter().copied().fold(0.0, f64::max);
    let m2 = l2.iter().copied().fold(0.0, f64::max);
    report.push(
        "zhen8-lambda1",
        m1,
        m1.is_finite(),
        format!("λ1 = 1: {:e}, λ1 = 1/2: {:e}", l1[0], l1[1]),
    );
    report.push(
        "zhen8-lambda2",
        m2,
        m2.is_finite(),
        format!("λ2 = 1: {:e}, λ2 = 2: {:e}", l2[0], l2[1]),
    );
}

#[allow(clippy::too_many_arguments)]
fn emission_bounds(
    report: &mut StructuralReport,
    rng: &mut ChaCha8Rng,
    model: &CoefficientModel,
    c: &PhysicalConstants,
    freq: &FrequencyGrid,
    options: &StructuralOptions,
    fields: &[(f64, Vec<f64>)],
    w_max: f64,
) {
    if matches!(model.emission, Emission::Lte) {
        report.push("fg22", 0.0, true, "LTE emission: covered by the K_a checks".into());
        return;
    }
    let g = &options.space;
    let mut by_theta = vec![0.0f64; THETAS.len()];
    for (theta, w) in fields {
        let wn = sobolev_norm(w, options.s, g).unwrap_or(f64::NAN);
        let mut sbar_l1 = 0.0;
        let mut s_l2 = 0.0;
        let mut sa_sup = 0.0f64;
        let mut sabar_l2 = 0.0;
        for (&v, &wv) in freq.nodes.iter().zip(&freq.weights) {
            let mut sbar = Vec::with_capacity(w.len());
            let mut sabar = Vec::with_capacity(w.len());
            let mut s = Vec::with_capacity(w.len());
            let mut sa = Vec::with_capacity(w.len());
            for &x in w {
                let (a, b) = normalized_emission_absorption(v, x, 0.0, c, model).unwrap_or((f64::NAN, f64::NAN));
                sbar.push(a);
                sabar.push(b);
                s.push(emission_s(v, x, 0.0, c, model).unwrap_or(f64::NAN));
                sa.push(sigma_a_effective(v, x, c, model).unwrap_or(f64::NAN));
            }
            let n = |f: &[f64]| sobolev_norm(f, options.s, g).unwrap_or(f64::NAN);
            sbar_l1 += wv * n(&sbar);
            s_l2 += wv * n(&s).powi(2);
            sa_sup = sa_sup.max(n(&sa));
            sabar_l2 += wv * n(&sabar).powi(2);
        }
        let ratio = (sbar_l1 + s_l2.sqrt() + sa_sup + sabar_l2.sqrt()) / wn;
        let slot = THETAS.iter().position(|t| t == theta).unwrap();
        by_theta[slot] = by_theta[slot].max(ratio);
    }
    let measured = by_theta.iter().copied().fold(0.0, f64::max);
    let pass = measured.is_finite() && (measured == 0.0 || ladder_bounded(&by_theta));
    report.push(
        "fg22-norms",
        measured,
        pass,
        format!("sup (‖S̄‖ + ‖S‖ + ‖σ_a‖ + ‖σ̄_a‖) / ‖w‖_s over norm levels: {by_theta:?}"),
    );

    // ∂_w of S̄ and σ̄_a by divided differences, L∞ ∩ L1 in v
    let mut per_node = Vec::with_capacity(freq.len());
    for &v in &freq.nodes {
        let mut k = 0.0f64;
        for _ in 0..options.pairs {
            let a = rng.gen_range(0.0..=w_max);
            let b = rng.gen_range(0.0..=w_max);
            if a <= 0.0 || b <= 0.0 || a == b {
                continue;
            }
            let (sa, ga) = normalized_emission_absorption(v, a, 0.0, c, model).unwrap_or((f64::NAN, f64::NAN));
            let (sb, gb) = normalized_emission_absorption(v, b, 0.0, c, model).unwrap_or((f64::NAN, f64::NAN));
            let q = ((sa - sb).abs() + (ga - gb).abs()) / (a - b).abs();
            k = if q.is_nan() { f64::NAN } else { k.max(q) };
        }
        per_node.push(k);
    }
    let sup = per_node.iter().copied().fold(0.0, f64::max);
    let l1: f64 = per_node.iter().zip(&freq.weights).map(|(k, w)| w * k).sum();
    let norm = sup.max(l1);
    report.push(
        "fg22-derivative",
        norm,
        norm.is_finite(),
        format!("‖|∂_w σ̄_a| + |∂_w S̄|‖_(L∞∩L1): sup {sup:e}, L1 {l1:e}"),
    );
}
