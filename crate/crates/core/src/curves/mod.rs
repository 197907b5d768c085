//! Analytic survival curves for the three intensity models and the
//! deterministic shift that calibrates them to a market curve.

mod affine;
mod market;
mod shift;
mod subordinated;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use affine::{cir_bond_factors, cir_survival, jcir_bond_factors, jcir_survival};
pub use market::MarketCurve;
pub use shift::{calibrate_shift, ShiftCurve, SHIFT_TOLERANCE};
pub use subordinated::{
    adjusted_killing_rate, levy_exponent, subordinated_survival, subordinated_survival_truncated, KillingRate,
};

/// Square-root diffusion parameters `dX = κ(β − X)dt + η√X dW`, `X₀ = x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirParams {
    pub kappa: f64,
    pub beta: f64,
    pub eta: f64,
    pub x0: f64,
}

impl CirParams {
    /// `kappa` and `eta` must be positive. `beta` and `x0` may be zero, which
    /// gives degenerate curves that are handy in tests.
    pub fn new(kappa: f64, beta: f64, eta: f64, x0: f64) -> Result<Self> {
        let p = Self { kappa, beta, eta, x0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.kappa) && self.kappa > 0.0) {
            return Err(domain(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(ok(self.eta) && self.eta > 0.0) {
            return Err(domain(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(ok(self.beta) && self.beta >= 0.0) {
            return Err(domain(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(ok(self.x0) && self.x0 >= 0.0) {
            return Err(domain(format!("x0 must be >= 0, got {}", self.x0)));
        }
        Ok(())
    }

    /// `2κβ > η²`: the diffusion never reaches zero.
    pub fn feller(&self) -> bool {
        2.0 * self.kappa * self.beta > self.eta * self.eta
    }
}

impl fmt::Display for CirParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CIR({}, {}, {}, {})", self.kappa, self.beta, self.eta, self.x0)
    }
}

/// Compound Poisson with arrival rate `omega` and Exp(`alpha`) jump sizes,
/// i.e. Lévy measure `ν(ds) = ω α e^{−αs} ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpParams {
    pub omega: f64,
    pub alpha: f64,
}

impl JumpParams {
    pub fn new(omega: f64, alpha: f64) -> Result<Self> {
        let j = Self { omega, alpha };
        j.validate()?;
        Ok(j)
    }

    /// Parameterised by the mean jump size `1/α`.
    pub fn from_mean_size(omega: f64, mean_size: f64) -> Result<Self> {
        if !(mean_size.is_finite() && mean_size > 0.0) {
            return Err(domain(format!("mean jump size must be > 0, got {mean_size}")));
        }
        Self::new(omega, 1.0 / mean_size)
    }

    pub fn none() -> Self {
        Self { omega: 0.0, alpha: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(domain(format!("omega must be >= 0, got {}", self.omega)));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(domain(format!("alpha must be > 0, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn mean_size(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn is_trivial(&self) -> bool {
        self.omega == 0.0
    }
}

impl fmt::Display for JumpParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "jumps(omega={}, mean={})", self.omega, self.mean_size())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cir,
    Jcir,
    Tccir,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Cir, ModelKind::Jcir, ModelKind::Tccir];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            ModelKind::Cir => "CIR",
            ModelKind::Jcir => "JCIR",
            ModelKind::Tccir => "TCCIR",
        })
    }
}

/// An un-shifted intensity model with analytic survival curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntensityModel {
    Cir(CirParams),
    /// CIR with compound-Poisson jumps added to the intensity.
    Jcir(CirParams, JumpParams),
    /// CIR run on the clock `θ_t = t + J'_t`.
    TcCir(CirParams, JumpParams),
}

impl IntensityModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            IntensityModel::Cir(_) => ModelKind::Cir,
            IntensityModel::Jcir(..) => ModelKind::Jcir,
            IntensityModel::TcCir(..) => ModelKind::Tccir,
        }
    }

    pub fn cir(&self) -> &CirParams {
        match self {
            IntensityModel::Cir(p) | IntensityModel::Jcir(p, _) | IntensityModel::TcCir(p, _) => p,
        }
    }

    pub fn jumps(&self) -> Option<&JumpParams> {
        match self {
            IntensityModel::Cir(_) => None,
            IntensityModel::Jcir(_, j) | IntensityModel::TcCir(_, j) => Some(j),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cir().validate()?;
        if let Some(j) = self.jumps() {
            j.validate()?;
        }
        Ok(())
    }

    /// Model survival `P(0, t)` at the initial state.
    pub fn survival(&self, t: f64) -> Result<f64> {
        match self {
            IntensityModel::Cir(p) => cir_survival(p, 0.0, t, p.x0),
            IntensityModel::Jcir(p, j) => jcir_survival(p, j, 0.0, t, p.x0),
            IntensityModel::TcCir(p, j) => subordinated_survival(p, j, t, p.x0, 1e-12),
        }
    }
}

impl fmt::Display for IntensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntensityModel::Cir(p) => write!(f, "CIR {p}"),
            IntensityModel::Jcir(p, j) => write!(f, "JCIR {p} {j}"),
            IntensityModel::TcCir(p, j) => write!(f, "TCCIR {p} clock {j}"),
        }
    }
}
