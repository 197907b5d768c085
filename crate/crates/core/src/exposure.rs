//! Exposure models driven by a supplied Brownian path.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::stats::{norm_cdf, norm_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureKind {
    /// `dV = σ dW`: forward contract or total return swap.
    GaussianForward,
    /// `dV = [γ(T−t) − V/(T−t)] dt + σ dW`: swap-like profile pinned at maturity.
    DriftedBridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureParams {
    pub kind: ExposureKind,
    pub sigma: f64,
    /// Moneyness drift, used by the bridge only.
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub v0: f64,
    pub maturity: f64,
}

impl ExposureParams {
    pub fn gaussian(sigma: f64, maturity: f64) -> Self {
        Self { kind: ExposureKind::GaussianForward, sigma, gamma: 0.0, v0: 0.0, maturity }
    }

    pub fn bridge(sigma: f64, gamma: f64, maturity: f64) -> Self {
        Self { kind: ExposureKind::DriftedBridge, sigma, gamma, v0: 0.0, maturity }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(domain(format!("exposure sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(domain(format!("exposure maturity must be > 0, got {}", self.maturity)));
        }
        if !(self.gamma.is_finite() && self.v0.is_finite()) {
            return Err(domain("exposure gamma and v0 must be finite"));
        }
        Ok(())
    }

    /// Mean and variance of `V_u`.
    ///
    /// Bridge: with `U_t = V_t/(T−t)`, Itô gives `dU = γ dt + σ/(T−t) dW`, so
    /// `V_t = (T−t)[V₀/T + γt + σ∫₀ᵗ (T−s)⁻¹ dW_s]`. The stochastic integral has
    /// variance `1/(T−t) − 1/T`, hence `m = (T−t)V₀/T + γt(T−t)` and
    /// `s² = σ² t (T−t) / T`.
    pub fn marginal(&self, u: f64) -> (f64, f64) {
        match self.kind {
            ExposureKind::GaussianForward => (self.v0, self.sigma * self.sigma * u),
            ExposureKind::DriftedBridge => {
                let t_mat = self.maturity;
                let rem = (t_mat - u).max(0.0);
                (rem * self.v0 / t_mat + self.gamma * u * rem, self.sigma * self.sigma * u * rem / t_mat)
            }
        }
    }
}

/// Simulates `V` on `times` (starting at 0) from driver increments `dw`
/// (`dw[k]` spans `times[k]..times[k+1]`).
///
/// The forward is exact. The bridge uses the integrating-factor solution
/// with each driver increment rescaled to the exact variance of
/// `∫(T−s)⁻¹dW` over its step, so it has no drift singularity at `T` and
/// its marginals are exact. At and beyond maturity the bridge is pinned to 0.
pub fn simulate_exposure(e: &ExposureParams, times: &[f64], dw: &[f64]) -> Result<Vec<f64>> {
    e.validate()?;
    if times.len() != dw.len() + 1 {
        return Err(Error::Shape(format!(
            "{} grid nodes need {} increments, got {}",
            times.len(),
            times.len() - 1,
            dw.len()
        )));
    }
    let mut v = Vec::with_capacity(times.len());
    v.push(e.v0);
    match e.kind {
        ExposureKind::GaussianForward => {
            let mut cur = e.v0;
            for &d in dw {
                cur += e.sigma * d;
                v.push(cur);
            }
        }
        ExposureKind::DriftedBridge => {
            let t_mat = e.maturity;
            let pin = 1e-12 * t_mat.max(1.0);
            let mut integral = 0.0;
            let mut pinned = false;
            for k in 1..times.len() {
                let (t0, t1) = (times[k - 1], times[k]);
                if pinned || t1 >= t_mat - pin {
                    pinned = true;
                    v.push(0.0);
                    continue;
                }
                let dt = t1 - t0;
                let var = 1.0 / (t_mat - t1) - 1.0 / (t_mat - t0);
                integral += dw[k - 1] * (var / dt).sqrt();
                let rem = t_mat - t1;
                v.push(rem * (e.v0 / t_mat + e.gamma * t1 + e.sigma * integral));
            }
        }
    }
    Ok(v)
}

/// `E[V_u⁺] = mΦ(m/s) + sφ(m/s)` for `V_u ~ N(m, s²)`.
pub fn expected_positive_part(e: &ExposureParams, u: f64) -> Result<f64> {
    e.validate()?;
    if !(u.is_finite() && u >= 0.0 && u <= e.maturity + 1e-12) {
        return Err(domain(format!("need 0 <= u <= {}, got {u}", e.maturity)));
    }
    Ok(positive_part_moment(e, u))
}

pub(crate) fn positive_part_moment(e: &ExposureParams, u: f64) -> f64 {
    let (m, s2) = e.marginal(u);
    if s2 <= 0.0 {
        return m.max(0.0);
    }
    let s = s2.sqrt();
    let z = m / s;
    m * norm_cdf(z) + s * norm_pdf(z)
}

/// `u,expected_positive_exposure` rows.
pub fn write_profile_csv<W: Write>(e: &ExposureParams, times: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "u,expected_positive_exposure")?;
    for &u in times {
        writeln!(out, "{u:.10},{:.12e}", expected_positive_part(e, u)?)?;
    }
    Ok(())
}
