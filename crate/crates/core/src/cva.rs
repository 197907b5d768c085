//! CVA estimators: plain Monte Carlo, independent closed form, adaptive
//! control variate.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{MarketCurve, ModelKind};
use crate::error::{domain, Result};
use crate::exposure::{positive_part_moment, ExposureParams};
use crate::paths::{correlate_drivers, ScenarioEngine, SimConfig};
use crate::quad::integrate;
use crate::stats::Moments;

/// Bound on the running control-variate coefficient.
pub const MU_CLAMP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    PlainMc,
    AdaptiveCv,
    /// Control variate paired by shuffling exposure and survival paths.
    ShuffledCv,
    IndependentClosedForm,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Estimator::PlainMc => "plain_mc",
            Estimator::AdaptiveCv => "adaptive_cv",
            Estimator::ShuffledCv => "shuffled_cv",
            Estimator::IndependentClosedForm => "independent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvaEstimate {
    pub value: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub m: usize,
    pub estimator: Estimator,
    pub rho: f64,
    /// `None` for the closed form, which does not depend on the model.
    pub model: Option<ModelKind>,
}

impl CvaEstimate {
    pub fn new(value: f64, std_error: f64, m: usize, estimator: Estimator, rho: f64, model: Option<ModelKind>) -> Self {
        let half = 1.96 * std_error;
        Self { value, std_error, ci95: (value - half, value + half), m, estimator, rho, model }
    }

    fn from_moments(m: &Moments, estimator: Estimator, rho: f64, model: ModelKind) -> Self {
        Self::new(m.mean(), m.std_error(), m.count() as usize, estimator, rho, Some(model))
    }

    pub fn with_model(mut self, model: ModelKind) -> Self {
        self.model = Some(model);
        self
    }

    /// Whether the two 95% intervals are disjoint.
    pub fn separated_from(&self, other: &CvaEstimate) -> bool {
        self.ci95.0 > other.ci95.1 || other.ci95.0 > self.ci95.1
    }
}

/// Writes `model,rho,estimator,cva,std_error,ci_lo,ci_hi,m,runtime_seconds`.
/// `runtimes` is written when given; otherwise the column is left empty so
/// that output depends only on the seed.
pub fn write_results_csv<W: Write>(estimates: &[CvaEstimate], runtimes: Option<&[f64]>, mut out: W) -> Result<()> {
    writeln!(out, "model,rho,estimator,cva,std_error,ci_lo,ci_hi,m,runtime_seconds")?;
    for (i, e) in estimates.iter().enumerate() {
        let model = e.model.map(|m| m.to_string()).unwrap_or_default();
        let runtime = runtimes.and_then(|r| r.get(i)).map(|s| format!("{s:.3}")).unwrap_or_default();
        writeln!(
            out,
            "{model},{:.4},{},{:.10e},{:.6e},{:.10e},{:.10e},{},{runtime}",
            e.rho, e.estimator, e.value, e.std_error, e.ci95.0, e.ci95.1, e.m
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingConfig {
    #[serde(default)]
    pub recovery: f64,
    /// Flat deterministic rate; `B_t = e^{rt}`.
    #[serde(default)]
    pub rate: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self { recovery: 0.0, rate: 0.0 }
    }
}

impl PricingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.recovery >= 0.0 && self.recovery < 1.0) {
            return Err(domain(format!("recovery must lie in [0, 1), got {}", self.recovery)));
        }
        if !self.rate.is_finite() {
            return Err(domain("rate must be finite"));
        }
        Ok(())
    }

    pub fn discount(&self, t: f64) -> f64 {
        (-self.rate * t).exp()
    }
}

/// `(1−R) Σ_k V⁺_{t_k}/B_{t_k} (S_{t_{k−1}} − S_{t_k})`.
pub fn cva_payoff(times: &[f64], exposure: &[f64], survival: &[f64], pricing: &PricingConfig) -> f64 {
    let mut acc = 0.0;
    for k in 1..times.len() {
        let v = exposure[k].max(0.0);
        if v > 0.0 {
            acc += v * pricing.discount(times[k]) * (survival[k - 1] - survival[k]);
        }
    }
    (1.0 - pricing.recovery) * acc
}

/// Payoffs of one scenario: `Y` for each correlation, and the control `Z`
/// (survival driven by `W^⊥`) when asked for.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPayoffs {
    pub y: Vec<f64>,
    pub z: Option<f64>,
}

pub fn scenario_payoffs(
    engine: &ScenarioEngine,
    index: u64,
    rhos: &[f64],
    pricing: &PricingConfig,
    control: bool,
) -> Result<ScenarioPayoffs> {
    let d = engine.drivers(index);
    let exposure = engine.exposure(&d)?;
    let times = d.grid.base();
    let y = rhos
        .iter()
        .map(|&rho| {
            let dw = correlate_drivers(rho, &d.dw_v, &d.dw_perp)?;
            let s = engine.intensity_from(&d, &dw)?.survival;
            Ok(cva_payoff(times, &exposure.values, &s, pricing))
        })
        .collect::<Result<Vec<f64>>>()?;
    let z = if control {
        let s = engine.control_survival(&d)?;
        Some(cva_payoff(times, &exposure.values, &s, pricing))
    } else {
        None
    };
    Ok(ScenarioPayoffs { y, z })
}

/// All scenarios, generated in parallel and returned in index order.
pub fn collect_payoffs(
    engine: &ScenarioEngine,
    scenarios: usize,
    rhos: &[f64],
    pricing: &PricingConfig,
    control: bool,
) -> Result<Vec<ScenarioPayoffs>> {
    engine.ensure_nonnegative_shift()?;
    pricing.validate()?;
    (0..scenarios as u64).into_par_iter().map(|i| scenario_payoffs(engine, i, rhos, pricing, control)).collect()
}

pub fn cva_plain_mc(engine: &ScenarioEngine, sim: &SimConfig, pricing: &PricingConfig) -> Result<CvaEstimate> {
    sim.validate()?;
    let payoffs = collect_payoffs(engine, sim.scenarios, &[sim.rho], pricing, false)?;
    let m: Moments = payoffs.iter().map(|p| p.y[0]).collect();
    Ok(CvaEstimate::from_moments(&m, Estimator::PlainMc, sim.rho, engine.model().kind()))
}

/// Running state of the adaptive coefficient: `V_k`, `C_k` are the sample
/// means of `Ξ²` and `YΞ` over the first `k` scenarios.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CvControlState {
    pub k: u64,
    pub c: f64,
    pub v: f64,
}

impl CvControlState {
    /// `μ_k = C_k / V_k`, with `μ = 0` while `V_k = 0`, clamped to
    /// `±MU_CLAMP`.
    pub fn mu(&self) -> f64 {
        if self.v == 0.0 {
            0.0
        } else {
            (self.c / self.v).clamp(-MU_CLAMP, MU_CLAMP)
        }
    }

    /// Consumes scenario `k+1` and returns `Y − μ_k Ξ`.
    pub fn step(&mut self, y: f64, xi: f64) -> f64 {
        let term = y - self.mu() * xi;
        self.k += 1;
        let k = self.k as f64;
        self.c += (y * xi - self.c) / k;
        self.v += (xi * xi - self.v) / k;
        term
    }
}

/// Result of running the adaptive recursion over `(Y_k, Z_k)` in order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    pub terms: Moments,
    pub state: CvControlState,
    /// `μ_k` after each scenario.
    pub mu_path: Vec<f64>,
}

pub fn adaptive_control_variate(y: &[f64], z: &[f64], expected_z: f64) -> AdaptiveRun {
    assert_eq!(y.len(), z.len());
    let mut state = CvControlState::default();
    let mut terms = Moments::new();
    let mut mu_path = Vec::with_capacity(y.len());
    for (&yk, &zk) in y.iter().zip(z) {
        terms.push(state.step(yk, zk - expected_z));
        mu_path.push(state.mu());
    }
    AdaptiveRun { terms, state, mu_path }
}

/// Adaptive control-variate estimate; `expected_control` is `E[Z]`, the
/// independent CVA.
pub fn cva_adaptive_cv(
    engine: &ScenarioEngine,
    sim: &SimConfig,
    pricing: &PricingConfig,
    expected_control: f64,
) -> Result<CvaEstimate> {
    sim.validate()?;
    let payoffs = collect_payoffs(engine, sim.scenarios, &[sim.rho], pricing, true)?;
    let y: Vec<f64> = payoffs.iter().map(|p| p.y[0]).collect();
    let z: Vec<f64> = payoffs.iter().map(|p| p.z.expect("control requested")).collect();
    let run = adaptive_control_variate(&y, &z, expected_control);
    Ok(CvaEstimate::from_moments(&run.terms, Estimator::AdaptiveCv, sim.rho, engine.model().kind()))
}

/// Cross-check of the control variate where `Z_k` combines the exposure of
/// scenario `k` with the correlated survival path of scenario `k+1 mod m`.
pub fn cva_shuffled_cv(
    engine: &ScenarioEngine,
    sim: &SimConfig,
    pricing: &PricingConfig,
    expected_control: f64,
) -> Result<CvaEstimate> {
    sim.validate()?;
    engine.ensure_nonnegative_shift()?;
    pricing.validate()?;
    let m = sim.scenarios as u64;
    let pairs = (0..m)
        .into_par_iter()
        .map(|i| {
            let d = engine.drivers(i);
            let exposure = engine.exposure(&d)?;
            let s = engine.intensity(&d, sim.rho)?.survival;
            let y = cva_payoff(d.grid.base(), &exposure.values, &s, pricing);
            let other = engine.drivers((i + 1) % m);
            let s_other = engine.intensity(&other, sim.rho)?.survival;
            let z = cva_payoff(d.grid.base(), &exposure.values, &s_other, pricing);
            Ok((y, z))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (y, z): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let run = adaptive_control_variate(&y, &z, expected_control);
    Ok(CvaEstimate::from_moments(&run.terms, Estimator::ShuffledCv, sim.rho, engine.model().kind()))
}

/// `(1−R) ∫₀ᵀ E[V_u⁺]/B_u h(u) e^{−∫₀ᵘh} du`, integrated piece by piece of
/// the hazard curve. The reported error is the quadrature error estimate.
pub fn cva_independent(
    market: &MarketCurve,
    exposure: &ExposureParams,
    pricing: &PricingConfig,
    horizon: f64,
    tol: f64,
) -> Result<CvaEstimate> {
    pricing.validate()?;
    exposure.validate()?;
    if !(horizon > 0.0 && horizon <= exposure.maturity + 1e-12) {
        return Err(domain(format!("need 0 < T <= exposure maturity, got T = {horizon}")));
    }
    let mut cuts: Vec<f64> = market.knots().map(|(t, _)| t).filter(|&t| t < horizon).collect();
    cuts.push(horizon);
    let (mut value, mut error) = (0.0, 0.0);
    let mut a = 0.0;
    for &b in &cuts {
        let hazard = market.hazard(0.5 * (a + b));
        let r = integrate(
            |u| positive_part_moment(exposure, u) * pricing.discount(u) * hazard * market.survival(u),
            a,
            b,
            tol,
            0.0,
        )?;
        value += r.value;
        error += r.error;
        a = b;
    }
    let scale = 1.0 - pricing.recovery;
    Ok(CvaEstimate::new(scale * value, scale * error, 0, Estimator::IndependentClosedForm, 0.0, None))
}

/// `(1−R) Σ_k E[V⁺_{t_k}]/B_{t_k} (P^M(t_{k−1}) − P^M(t_k))`: the mean of the
/// control payoff on `times` when the model reprices the market curve.
pub fn cva_independent_on_grid(
    market: &MarketCurve,
    exposure: &ExposureParams,
    pricing: &PricingConfig,
    times: &[f64],
) -> Result<f64> {
    pricing.validate()?;
    exposure.validate()?;
    let mut acc = 0.0;
    for k in 1..times.len() {
        let v = positive_part_moment(exposure, times[k]);
        acc += v * pricing.discount(times[k]) * (market.survival(times[k - 1]) - market.survival(times[k]));
    }
    Ok((1.0 - pricing.recovery) * acc)
}

/// One row per `(ρ, estimator)` with common random numbers across `ρ`.
/// The adaptive estimator is added when `expected_control` is given.
pub fn rho_sweep(
    engine: &ScenarioEngine,
    rhos: &[f64],
    sim: &SimConfig,
    pricing: &PricingConfig,
    expected_control: Option<f64>,
) -> Result<Vec<CvaEstimate>> {
    sim.validate()?;
    if let Some(r) = rhos.iter().find(|r| !(r.abs() <= 1.0)) {
        return Err(domain(format!("correlation must lie in [-1, 1], got {r}")));
    }
    let payoffs = collect_payoffs(engine, sim.scenarios, rhos, pricing, expected_control.is_some())?;
    let kind = engine.model().kind();
    let mut out = Vec::new();
    for (j, &rho) in rhos.iter().enumerate() {
        let y: Vec<f64> = payoffs.iter().map(|p| p.y[j]).collect();
        let plain: Moments = y.iter().copied().collect();
        out.push(CvaEstimate::from_moments(&plain, Estimator::PlainMc, rho, kind));
        if let Some(ez) = expected_control {
            let z: Vec<f64> = payoffs.iter().map(|p| p.z.expect("control requested")).collect();
            let run = adaptive_control_variate(&y, &z, ez);
            out.push(CvaEstimate::from_moments(&run.terms, Estimator::AdaptiveCv, rho, kind));
        }
    }
    Ok(out)
}
