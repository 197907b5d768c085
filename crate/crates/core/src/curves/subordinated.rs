//! Survival under the clock `θ_t = t + J'_t`, where `J'` is compound Poisson
//! with Exp(α) sizes.
//!
//! `τ^θ > T` iff `τ > θ_T`, and `θ` is independent of the diffusion, so
//!
//! ```text
//! P^θ(0,T) = E[A(0,θ_T) e^{−B(0,θ_T)x}]
//!          = Σ_n Poisson(n; ωT) E[A(0,T+G_n) e^{−B(0,T+G_n)x}],   G_n ~ Gamma(n, α)
//! ```
//!
//! which is the Bochner-subordinated semigroup evaluated without its
//! eigenfunction expansion.

use super::affine::log_factors;
use super::{CirParams, JumpParams};
use crate::error::{domain, Error, Result};
use crate::quad::{gamma_expectation, GaussLaguerre};

const MAX_TERMS: usize = 10_000;

/// `φ(u) = u (u + α + ω) / (u + α)`, so that `E[e^{−uθ_t}] = e^{−tφ(u)}`.
pub fn levy_exponent(j: &JumpParams, u: f64) -> Result<f64> {
    j.validate()?;
    if !(u.is_finite() && u >= 0.0) {
        return Err(domain(format!("Lévy exponent needs u >= 0, got {u}")));
    }
    Ok(u * (u + j.alpha + j.omega) / (u + j.alpha))
}

fn cir_kernel(p: &CirParams, tau: f64, x: f64) -> f64 {
    let (log_a, b) = log_factors(p, tau);
    (log_a - b * x).exp()
}

fn poisson_log_pmf(n: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    -mean + n as f64 * mean.ln() - log_fact
}

/// Mixture truncated after `terms` Poisson terms (`n = 0..terms`).
pub fn subordinated_survival_truncated(
    p: &CirParams,
    clock: &JumpParams,
    maturity: f64,
    x: f64,
    tol: f64,
    terms: usize,
) -> Result<f64> {
    let mean = clock.omega * maturity;
    let mut total = 0.0;
    for n in 0..terms {
        let weight = poisson_log_pmf(n, mean).exp();
        if weight == 0.0 {
            continue;
        }
        let conditional = if n == 0 {
            cir_kernel(p, maturity, x)
        } else {
            gamma_expectation(|s| cir_kernel(p, maturity + s, x), n as u32, clock.alpha, tol)?
        };
        total += weight * conditional;
    }
    Ok(total)
}

/// `P^θ(0,T)` at state `x`, with the Poisson series cut once the omitted
/// mass is below `tol`.
pub fn subordinated_survival(p: &CirParams, clock: &JumpParams, maturity: f64, x: f64, tol: f64) -> Result<f64> {
    p.validate()?;
    clock.validate()?;
    if !(maturity.is_finite() && maturity >= 0.0) {
        return Err(domain(format!("maturity must be >= 0, got {maturity}")));
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(domain(format!("state must be >= 0, got {x}")));
    }
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be > 0, got {tol}")));
    }
    if maturity == 0.0 {
        return Ok(1.0);
    }
    let mean = clock.omega * maturity;
    let mut mass = 0.0;
    let mut terms = 0;
    while 1.0 - mass >= tol {
        if terms >= MAX_TERMS {
            return Err(Error::Numerical {
                routine: "subordinated_survival",
                diagnostics: format!(
                    "Poisson tail {:e} still above tol {tol:e} after {MAX_TERMS} terms (mean {mean})",
                    1.0 - mass
                ),
            });
        }
        mass += poisson_log_pmf(terms, mean).exp();
        terms += 1;
        // 1 - mass cannot drop below rounding level
        if mass >= 1.0 - 4.0 * f64::EPSILON {
            break;
        }
    }
    subordinated_survival_truncated(p, clock, maturity, x, tol, terms)
}

/// `k^θ(x) = x + ∫ (1 − A(0,s)e^{−B(0,s)x}) ω α e^{−αs} ds`.
pub fn adjusted_killing_rate(p: &CirParams, clock: &JumpParams, x: f64, tol: f64) -> Result<f64> {
    p.validate()?;
    clock.validate()?;
    if !(x.is_finite() && x >= 0.0) {
        return Err(domain(format!("state must be >= 0, got {x}")));
    }
    if clock.omega == 0.0 {
        return Ok(x);
    }
    let survived = gamma_expectation(|s| cir_kernel(p, s, x), 1, clock.alpha, tol)?;
    Ok(x + clock.omega * (1.0 - survived))
}

/// `k^θ` tabulated on `[0, x_max]` with cubic Hermite interpolation; the
/// derivative `1 + ω E[B(0,s) A(0,s) e^{−B(0,s)x}]` is tabulated too.
/// Above `x_max` the rate is evaluated directly.
#[derive(Debug, Clone)]
pub struct KillingRate {
    params: CirParams,
    clock: JumpParams,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl KillingRate {
    const NODES_DIRECT: usize = 128;

    pub fn new(p: &CirParams, clock: &JumpParams) -> Result<Self> {
        p.validate()?;
        clock.validate()?;
        let x_max = (20.0 * p.beta.max(p.x0)).max(1.0);
        let step = 1e-3;
        let n = (x_max / step).ceil() as usize + 1;
        let mut table =
            Self { params: *p, clock: *clock, step, values: Vec::with_capacity(n), slopes: Vec::with_capacity(n) };
        for i in 0..n {
            let (v, d) = table.direct(i as f64 * step);
            table.values.push(v);
            table.slopes.push(d);
        }
        Ok(table)
    }

    fn direct(&self, x: f64) -> (f64, f64) {
        if self.clock.omega == 0.0 {
            return (x, 1.0);
        }
        let rule = GaussLaguerre::cached(Self::NODES_DIRECT, 0);
        let (mut surv, mut slope) = (0.0, 0.0);
        for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
            let (log_a, b) = log_factors(&self.params, u / self.clock.alpha);
            let k = (log_a - b * x).exp();
            surv += w * k;
            slope += w * b * k;
        }
        (x + self.clock.omega * (1.0 - surv), 1.0 + self.clock.omega * slope)
    }

    pub fn x_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// `k^θ(x)` for `x ≥ 0` (negative inputs are treated as 0).
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        let pos = x / self.step;
        let i = pos as usize;
        if i + 1 >= self.values.len() {
            return self.direct(x).0;
        }
        let s = pos - i as f64;
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
    }
}
