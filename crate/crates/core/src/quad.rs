//! One-dimensional quadrature: adaptive Gauss–Kronrod on finite intervals and
//! Gauss–Laguerre rules for integrals against Gamma densities.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` until the estimated error is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numerical { routine: "integrate", diagnostics: format!("non-finite bounds [{a}, {b}]") });
    }
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = kronrod15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let value: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::Numerical {
                routine: "integrate",
                diagnostics: format!("non-finite integrand on [{a}, {b}]"),
            });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral { value, error, evaluations });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Numerical {
                routine: "integrate",
                diagnostics: format!(
                    "no convergence after {evaluations} evaluations: value {value:e}, error {error:e}"
                ),
            });
        }
        let worst = pieces.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).map(|(i, _)| i).unwrap_or(0);
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod15(&f, lo, mid);
        let (v2, e2) = kronrod15(&f, mid, hi);
        evaluations += 30;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Gauss rule for `∫₀^∞ g(u) u^a e^{-u} du / Γ(a+1)`, i.e. the expectation of
/// `g` under a Gamma(a+1, 1) law. Weights sum to one.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

type RuleCache = HashMap<(usize, u32), Arc<GaussLaguerre>>;

impl GaussLaguerre {
    /// Golub–Welsch construction from the Laguerre three-term recurrence.
    fn build(n: usize, a: f64) -> Self {
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jacobi[(i, i)] = 2.0 * i as f64 + a + 1.0;
            if i > 0 {
                let off = (i as f64 * (i as f64 + a)).sqrt();
                jacobi[(i, i - 1)] = off;
                jacobi[(i - 1, i)] = off;
            }
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1 / total).collect() }
    }

    /// Cached rule with `n` nodes for integer shape parameter `a`.
    pub fn cached(n: usize, a: u32) -> Arc<GaussLaguerre> {
        static CACHE: OnceLock<Mutex<RuleCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&(n, a)) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(Self::build(n, a as f64));
        cache.lock().expect("rule cache poisoned").entry((n, a)).or_insert(rule).clone()
    }

    pub fn expectation<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&u, &w)| w * g(u)).sum()
    }
}

/// `E[g(S)]` for `S ~ Gamma(shape, rate)`, escalating the node count from 16
/// until two successive rules agree to `tol`.
pub fn gamma_expectation<F: Fn(f64) -> f64>(g: F, shape: u32, rate: f64, tol: f64) -> Result<f64> {
    assert!(shape >= 1, "gamma shape must be positive");
    let mut previous = f64::NAN;
    for &n in &[16usize, 32, 64, 128, 256, 512] {
        let rule = GaussLaguerre::cached(n, shape - 1);
        let value = rule.expectation(|u| g(u / rate));
        if (value - previous).abs() < tol {
            return Ok(value);
        }
        previous = value;
    }
    Err(Error::Numerical {
        routine: "gamma_expectation",
        diagnostics: format!("shape {shape}, rate {rate}: 512-node rule still moving (last {previous:e})"),
    })
}
