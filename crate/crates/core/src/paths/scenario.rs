use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::brownian::{correlate_drivers, gaussian_increments, reconstruct_synchronized_bm};
use super::clock::{sample_clock, sample_compound_poisson, ClockPath};
use super::grid::{build_refined_grid, build_refined_grid_with_nodes, RefinedGrid};
use super::scheme::diop_into;
use super::survival::survival_path;
use crate::curves::{IntensityModel, KillingRate, ShiftCurve, SHIFT_TOLERANCE};
use crate::error::{domain, Error, Result};
use crate::exposure::{simulate_exposure, ExposureParams};
use crate::rng::{Purpose, StreamFactory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// `T` in years.
    pub horizon: f64,
    /// Base step `δ`.
    pub delta: f64,
    /// Number of scenarios `m`.
    pub scenarios: usize,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(domain(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !(self.delta > 0.0 && self.delta <= self.horizon) {
            return Err(domain(format!("need 0 < delta <= T, got delta = {}", self.delta)));
        }
        if self.scenarios == 0 {
            return Err(domain("need at least one scenario"));
        }
        if !(self.rho.is_finite() && self.rho.abs() <= 1.0) {
            return Err(domain(format!("correlation must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(())
    }
}

/// Random inputs of one scenario. Driver increments live on `grid.fine()`,
/// the clock axis; without a clock that is the base grid itself.
#[derive(Debug, Clone)]
pub struct ScenarioDrivers {
    pub index: u64,
    pub clock: ClockPath,
    pub grid: Arc<RefinedGrid>,
    pub dw_v: Vec<f64>,
    pub dw_perp: Vec<f64>,
    /// JCIR intensity jumps `(time, size)`.
    pub intensity_jumps: Vec<(f64, f64)>,
}

/// Exposure driven by the synchronized driver `W̃^V` on the base grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposurePath {
    pub dw: Vec<f64>,
    pub values: Vec<f64>,
}

/// Intensity-side paths for one correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPath {
    /// `X` (or `X^θ`) at base nodes, before the positive part.
    pub state: Vec<f64>,
    /// Shifted intensity `λ` on base nodes.
    pub lambda: Vec<f64>,
    pub survival: Vec<f64>,
}

/// Everything simulated for one scenario at one correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub index: u64,
    pub rho: f64,
    pub times: Vec<f64>,
    pub fine_times: Vec<f64>,
    pub dw_v: Vec<f64>,
    pub dw_perp: Vec<f64>,
    pub dw_lambda: Vec<f64>,
    pub exposure: ExposurePath,
    pub intensity: IntensityPath,
    /// Survival path driven by `W^⊥` instead of `W^λ`, same jumps and clock.
    pub control_survival: Option<Vec<f64>>,
}

impl PathBundle {
    /// `scenario,t,x,lambda,s,v` rows (base grid).
    pub fn write_csv<W: Write>(bundles: &[PathBundle], mut out: W) -> Result<()> {
        writeln!(out, "scenario,t,x,lambda,s,v")?;
        for b in bundles {
            for k in 0..b.times.len() {
                writeln!(
                    out,
                    "{},{:.10},{:.12e},{:.12e},{:.12e},{:.12e}",
                    b.index,
                    b.times[k],
                    b.intensity.state[k],
                    b.intensity.lambda[k],
                    b.intensity.survival[k],
                    b.exposure.values[k]
                )?;
            }
        }
        Ok(())
    }
}

/// Generates per-scenario paths for one calibrated model. Scenario `i`
/// depends only on `(seed, i)`.
#[derive(Debug, Clone)]
pub struct ScenarioEngine {
    model: IntensityModel,
    killing: Option<KillingRate>,
    exposure: ExposureParams,
    horizon: f64,
    delta: f64,
    streams: StreamFactory,
    calendar: Arc<RefinedGrid>,
    psi: Vec<f64>,
    shift_min: (f64, f64),
    shift_nonnegative: bool,
    label: String,
}

impl ScenarioEngine {
    pub fn new(
        model: IntensityModel,
        shift: &ShiftCurve,
        exposure: ExposureParams,
        horizon: f64,
        delta: f64,
        seed: u64,
    ) -> Result<Self> {
        model.validate()?;
        exposure.validate()?;
        if !(horizon.is_finite() && horizon > 0.0 && delta > 0.0 && delta <= horizon) {
            return Err(domain(format!("need 0 < delta <= T, got delta = {delta}, T = {horizon}")));
        }
        if shift.kind() != model.kind() {
            return Err(Error::Config(format!("{} shift supplied for a {} model", shift.kind(), model.kind())));
        }
        if shift.horizon() < horizon - 1e-9 {
            return Err(Error::Config(format!("shift covers [0, {}] but T = {horizon}", shift.horizon())));
        }
        let killing = match &model {
            IntensityModel::TcCir(p, clock) => Some(KillingRate::new(p, clock)?),
            _ => None,
        };
        let calendar = Arc::new(build_refined_grid(&ClockPath::identity(horizon), horizon, delta));
        let psi = calendar.base().iter().map(|&t| shift.value_at(t)).collect();
        let shift_min = shift.times().zip(shift.values().iter().copied()).fold((0.0, f64::INFINITY), |acc, (t, v)| {
            if v < acc.1 {
                (t, v)
            } else {
                acc
            }
        });
        Ok(Self {
            label: format!("{model} with {} shift (min {:e})", shift.kind(), shift.min()),
            model,
            killing,
            exposure,
            horizon,
            delta,
            streams: StreamFactory::new(seed),
            calendar,
            psi,
            shift_min,
            shift_nonnegative: shift.nonnegative(),
        })
    }

    pub fn from_config(
        model: IntensityModel,
        shift: &ShiftCurve,
        exposure: ExposureParams,
        sim: &SimConfig,
    ) -> Result<Self> {
        sim.validate()?;
        Self::new(model, shift, exposure, sim.horizon, sim.delta, sim.seed)
    }

    /// Fails when the shift is negative beyond tolerance: the shifted
    /// intensity can then go negative and the model is not of Cox type.
    pub fn ensure_nonnegative_shift(&self) -> Result<()> {
        if self.shift_nonnegative {
            return Ok(());
        }
        let (t, v) = self.shift_min;
        Err(Error::Calibration {
            t,
            reason: format!("shift reaches {v:e} < -{SHIFT_TOLERANCE:e} for {}; refusing to price", self.model),
        })
    }

    pub fn model(&self) -> &IntensityModel {
        &self.model
    }

    pub fn exposure_params(&self) -> &ExposureParams {
        &self.exposure
    }

    pub fn streams(&self) -> &StreamFactory {
        &self.streams
    }

    pub fn times(&self) -> &[f64] {
        self.calendar.base()
    }

    pub fn drivers(&self, index: u64) -> ScenarioDrivers {
        self.drivers_with_nodes(index, &[])
    }

    /// As [`Self::drivers`], with extra clock-axis nodes in the refined grid
    /// (e.g. calendar times, to read `W` at `t` rather than `θ_t`).
    pub fn drivers_with_nodes(&self, index: u64, extra: &[f64]) -> ScenarioDrivers {
        let (clock, grid) = match &self.model {
            IntensityModel::TcCir(_, j) => {
                let clock = sample_clock(j, self.horizon, &mut self.streams.stream(index, Purpose::ClockJumps));
                let grid = build_refined_grid_with_nodes(&clock, self.horizon, self.delta, extra);
                (clock, Arc::new(grid))
            }
            _ if extra.is_empty() => (ClockPath::identity(self.horizon), Arc::clone(&self.calendar)),
            _ => {
                let clock = ClockPath::identity(self.horizon);
                let grid = build_refined_grid_with_nodes(&clock, self.horizon, self.delta, extra);
                (clock, Arc::new(grid))
            }
        };
        let dw_v = gaussian_increments(grid.fine_steps(), &mut self.streams.stream(index, Purpose::ExposureDriver));
        let dw_perp =
            gaussian_increments(grid.fine_steps(), &mut self.streams.stream(index, Purpose::OrthogonalDriver));
        let intensity_jumps = match &self.model {
            IntensityModel::Jcir(_, j) => {
                let (t, y) =
                    sample_compound_poisson(j, self.horizon, &mut self.streams.stream(index, Purpose::IntensityJumps));
                t.into_iter().zip(y).collect()
            }
            _ => Vec::new(),
        };
        ScenarioDrivers { index, clock, grid, dw_v, dw_perp, intensity_jumps }
    }

    /// `Ṽ` on the base grid; does not depend on the correlation.
    pub fn exposure(&self, d: &ScenarioDrivers) -> Result<ExposurePath> {
        let dw = reconstruct_synchronized_bm(&d.dw_v, &d.grid)?;
        let values = simulate_exposure(&self.exposure, d.grid.base(), &dw)?;
        Ok(ExposurePath { dw, values })
    }

    /// Intensity-side paths driven by `dw_lambda` on the refined grid.
    pub fn intensity_from(&self, d: &ScenarioDrivers, dw_lambda: &[f64]) -> Result<IntensityPath> {
        let grid = &d.grid;
        if dw_lambda.len() + 1 != grid.fine().len() {
            return Err(Error::Shape(format!(
                "refined grid has {} intervals, got {} increments",
                grid.fine().len() - 1,
                dw_lambda.len()
            )));
        }
        let mut fine_state = Vec::new();
        diop_into(self.model.cir(), grid.fine(), dw_lambda, &d.intensity_jumps, &mut fine_state);
        let state: Vec<f64> = grid.base_index().iter().map(|&i| fine_state[i]).collect();
        let lambda: Vec<f64> = match &self.killing {
            Some(k) => state.iter().zip(&self.psi).map(|(&x, &s)| k.eval(x) + s).collect(),
            None => state.iter().zip(&self.psi).map(|(&x, &s)| x.max(0.0) + s).collect(),
        };
        let survival = survival_path(&lambda, grid.base(), &self.label)?;
        Ok(IntensityPath { state, lambda, survival })
    }

    pub fn intensity(&self, d: &ScenarioDrivers, rho: f64) -> Result<IntensityPath> {
        let dw_lambda = correlate_drivers(rho, &d.dw_v, &d.dw_perp)?;
        self.intensity_from(d, &dw_lambda)
    }

    /// Survival path with `W^⊥` in place of `W^λ`.
    pub fn control_survival(&self, d: &ScenarioDrivers) -> Result<Vec<f64>> {
        Ok(self.intensity_from(d, &d.dw_perp)?.survival)
    }

    pub fn bundle(&self, index: u64, rho: f64, with_control: bool) -> Result<PathBundle> {
        let d = self.drivers(index);
        let dw_lambda = correlate_drivers(rho, &d.dw_v, &d.dw_perp)?;
        let intensity = self.intensity_from(&d, &dw_lambda)?;
        let exposure = self.exposure(&d)?;
        let control_survival = if with_control { Some(self.control_survival(&d)?) } else { None };
        Ok(PathBundle {
            index,
            rho,
            times: d.grid.base().to_vec(),
            fine_times: d.grid.fine().to_vec(),
            dw_v: d.dw_v,
            dw_perp: d.dw_perp,
            dw_lambda,
            exposure,
            intensity,
            control_survival,
        })
    }
}
