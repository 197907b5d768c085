//! TOML run configuration.
//!
//! ```toml
//! models = ["cir", "jcir", "tccir"]
//! estimators = ["plain_mc", "adaptive_cv", "independent_closed_form"]
//! rhos = [-0.9, 0.0, 0.9]
//!
//! [cir]
//! kappa = 0.02
//! beta = 0.161
//! eta = 0.08
//! x0 = 0.03
//!
//! [intensity_jumps]
//! omega = 0.07
//! mean_size = 0.08
//!
//! [clock]
//! omega = 0.6
//! mean_size = 0.512
//!
//! [market]
//! hazard = 0.05
//!
//! [exposure]
//! kind = "gaussian_forward"
//! sigma = 0.08
//! maturity = 3.0
//!
//! [sim]
//! horizon = 3.0
//! delta = 0.01
//! scenarios = 100000
//! seed = 42
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::curves::{CirParams, IntensityModel, JumpParams, MarketCurve, ModelKind};
use crate::cva::{Estimator, PricingConfig};
use crate::error::{Error, Result};
use crate::exposure::ExposureParams;
use crate::paths::SimConfig;

/// Compound-Poisson parameters given either as `alpha` (rate of the
/// exponential sizes) or `mean_size = 1/alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub omega: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub mean_size: Option<f64>,
}

impl JumpSpec {
    pub fn params(&self) -> Result<JumpParams> {
        match (self.alpha, self.mean_size) {
            (Some(a), None) => JumpParams::new(self.omega, a),
            (None, Some(m)) => JumpParams::from_mean_size(self.omega, m),
            _ => Err(Error::Config("jump section needs exactly one of `alpha` and `mean_size`".into())),
        }
    }
}

/// Market hazard curve: a flat `hazard` up to the simulation horizon,
/// explicit `ends`/`hazards`, or a `file` of `time hazard` rows.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    #[serde(default)]
    pub hazard: Option<f64>,
    #[serde(default)]
    pub ends: Option<Vec<f64>>,
    #[serde(default)]
    pub hazards: Option<Vec<f64>>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Fill the `runtime_seconds` column. Off by default so that result
    /// files are reproducible byte for byte.
    #[serde(default)]
    pub runtime: bool,
    /// Number of scenarios per model written to `paths_<model>.csv`.
    #[serde(default)]
    pub dump_paths: usize,
    /// Write `exposure_profile.csv` with `E[V_u⁺]` on the base grid.
    #[serde(default)]
    pub profile: bool,
}

fn all_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

fn default_estimators() -> Vec<Estimator> {
    vec![Estimator::PlainMc, Estimator::AdaptiveCv, Estimator::IndependentClosedForm]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "all_models")]
    pub models: Vec<ModelKind>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    /// Correlation grid. Empty means `[sim.rho]` for `cva` and the
    /// seven-point grid from −0.9 to 0.9 for `sweep`.
    #[serde(default)]
    pub rhos: Vec<f64>,
    /// ψ tabulation step, `delta/2` when absent.
    #[serde(default)]
    pub shift_step: Option<f64>,
    pub cir: CirParams,
    #[serde(default)]
    pub intensity_jumps: Option<JumpSpec>,
    #[serde(default)]
    pub clock: Option<JumpSpec>,
    pub market: MarketSpec,
    pub exposure: ExposureParams,
    pub sim: SimConfig,
    #[serde(default)]
    pub pricing: PricingConfig,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    /// Parses without touching the file system; see [`RunConfig::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn market_curve(&self) -> Result<MarketCurve> {
        let m = &self.market;
        match (m.hazard, &m.ends, &m.hazards, &m.file) {
            (Some(h), None, None, None) => MarketCurve::flat(h, self.sim.horizon),
            (None, Some(e), Some(h), None) => MarketCurve::piecewise(e.clone(), h.clone()),
            (None, None, None, Some(f)) => MarketCurve::from_file(self.resolve(f)),
            _ => Err(Error::Config("market section needs one of `hazard`, `ends` + `hazards`, or `file`".into())),
        }
    }

    pub fn model(&self, kind: ModelKind) -> Result<IntensityModel> {
        let need = |spec: &Option<JumpSpec>, name: &str| {
            spec.as_ref()
                .ok_or_else(|| Error::Config(format!("model {kind} needs a [{name}] section")))
                .and_then(JumpSpec::params)
        };
        let model = match kind {
            ModelKind::Cir => IntensityModel::Cir(self.cir),
            ModelKind::Jcir => IntensityModel::Jcir(self.cir, need(&self.intensity_jumps, "intensity_jumps")?),
            ModelKind::Tccir => IntensityModel::TcCir(self.cir, need(&self.clock, "clock")?),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn shift_step(&self) -> f64 {
        self.shift_step.unwrap_or(self.sim.delta / 2.0)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Domain checks on every section, including that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("no models selected".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators selected".into()));
        }
        for &k in &self.models {
            self.model(k)?;
        }
        for spec in [&self.intensity_jumps, &self.clock].into_iter().flatten() {
            spec.params()?;
        }
        self.sim.validate()?;
        self.exposure.validate()?;
        self.pricing.validate()?;
        if let Some(r) = self.rhos.iter().find(|r| !(r.abs() <= 1.0)) {
            return Err(Error::Config(format!("correlation must lie in [-1, 1], got {r}")));
        }
        let step = self.shift_step();
        if !(step > 0.0 && step <= self.sim.delta) {
            return Err(Error::Config(format!("shift_step must lie in (0, delta], got {step}")));
        }
        if self.exposure.maturity + 1e-12 < self.sim.horizon {
            return Err(Error::Config(format!(
                "exposure maturity {} is before the horizon {}",
                self.exposure.maturity, self.sim.horizon
            )));
        }
        if let Some(f) = &self.market.file {
            let path = self.resolve(f);
            if !path.is_file() {
                return Err(Error::Config(format!("market file {} does not exist", path.display())));
            }
        }
        let market = self.market_curve()?;
        if market.horizon() + 1e-12 < self.sim.horizon {
            return Err(Error::Config(format!(
                "market curve ends at {} before the horizon {}",
                market.horizon(),
                self.sim.horizon
            )));
        }
        Ok(())
    }
}
