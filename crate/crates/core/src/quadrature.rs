//! One-dimensional quadrature: fixed-node Gauss–Legendre rules and adaptive
//! Gauss–Kronrod (7/15) integration, plus expectation rules for the scalar
//! distribution families.
//!
//! Fixed-node rules matter when an expectation is differentiated
//! numerically: adaptive subdivision changes with the integrand and makes
//! the result only piecewise smooth in its parameters.

use crate::distributions::Distribution;
use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
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

/// A fixed set of weighted nodes: `∫ f ≈ Σ w_k f(x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FixedRule {
    /// Composite Gauss–Legendre on `[a, b]` with `panels` equal panels.
    pub fn composite(a: f64, b: f64, order: usize, panels: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(order * panels);
        let mut weights = Vec::with_capacity(order * panels);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(lo + 0.5 * width * (x + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        Self { nodes, weights }
    }

    /// Rule for `[a, inf)` through `x = a + scale * u / (1 - u)`, composite
    /// Gauss–Legendre in `u`.
    pub fn semi_infinite(a: f64, scale: f64, order: usize, panels: usize) -> Self {
        let base = Self::composite(0.0, 1.0, order, panels);
        let mut nodes = Vec::with_capacity(base.nodes.len());
        let mut weights = Vec::with_capacity(base.nodes.len());
        for (u, w) in base.nodes.iter().zip(&base.weights) {
            let one_minus = 1.0 - u;
            nodes.push(a + scale * u / one_minus);
            weights.push(w * scale / (one_minus * one_minus));
        }
        Self { nodes, weights }
    }

    /// Expectation rule for a scalar distribution: density-weighted nodes
    /// for the continuous families, the atoms otherwise.
    pub fn for_distribution(dist: &Distribution, order: usize, panels: usize) -> Self {
        match dist {
            Distribution::Constant { value } => Self {
                nodes: vec![*value],
                weights: vec![1.0],
            },
            Distribution::Empirical { support } => Self {
                nodes: support.clone(),
                weights: vec![1.0 / support.len() as f64; support.len()],
            },
            _ => {
                let (lo, hi) = dist.support();
                let base = if hi.is_finite() {
                    Self::composite(lo, hi, order, panels)
                } else {
                    Self::semi_infinite(lo, natural_scale(dist), order, panels)
                };
                let weights = base
                    .nodes
                    .iter()
                    .zip(&base.weights)
                    .map(|(x, w)| w * dist.pdf(*x).unwrap_or(0.0))
                    .collect();
                Self {
                    nodes: base.nodes,
                    weights,
                }
            }
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| if *w == 0.0 { 0.0 } else { w * f(*x) })
            .sum()
    }
}

fn natural_scale(dist: &Distribution) -> f64 {
    match dist {
        Distribution::Exponential { mean } | Distribution::TruncatedExponential { mean, .. } => {
            *mean
        }
        Distribution::TruncatedChiSquared { dof, .. } => *dof as f64,
        _ => 1.0,
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
}

/// Adaptive Gauss–Kronrod on a finite interval, bisecting the interval
/// with the largest error estimate until the total estimate meets
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("finite limits required, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let value: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::Domain("integrand produced a non-finite value".into()));
        }
        if err <= abs_tol.max(rel_tol * value.abs()) || parts.len() >= max_intervals {
            return Ok(QuadResult {
                value,
                error_estimate: err,
            });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Adaptive integration over `[a, inf)` through `x = a + u / (1 - u)`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    integrate_adaptive(
        |u| {
            let om = 1.0 - u;
            let v = f(a + u / om) / (om * om);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
        max_intervals,
    )
}

/// `E φ(X)` for one scalar distribution by adaptive quadrature (atoms are
/// summed exactly).
pub fn expectation<F: FnMut(f64) -> f64>(dist: &Distribution, mut phi: F, rel_tol: f64) -> Result<f64> {
    match dist {
        Distribution::Constant { value } => Ok(phi(*value)),
        Distribution::Empirical { support } => {
            Ok(support.iter().map(|&v| phi(v)).sum::<f64>() / support.len() as f64)
        }
        _ => {
            let (lo, hi) = dist.support();
            let mut integrand = |x: f64| phi(x) * dist.pdf(x).unwrap_or(0.0);
            let r = if hi.is_finite() {
                integrate_adaptive(&mut integrand, lo, hi, 1e-14, rel_tol, 2000)?
            } else {
                // Split so the heavy part of the mass sits on a finite piece.
                let cut = lo + 20.0 * natural_scale(dist);
                let head = integrate_adaptive(&mut integrand, lo, cut, 1e-15, rel_tol, 2000)?;
                let tail = integrate_semi_infinite(&mut integrand, cut, 1e-15, rel_tol, 2000)?;
                QuadResult {
                    value: head.value + tail.value,
                    error_estimate: head.error_estimate + tail.error_estimate,
                }
            };
            Ok(r.value)
        }
    }
}
