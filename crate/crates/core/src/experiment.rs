//! Command implementations behind the `tccva` binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::RunConfig;
use crate::curves::{
    calibrate_shift, CirParams, IntensityModel, JumpParams, MarketCurve, ModelKind, ShiftCurve, SHIFT_TOLERANCE,
};
use crate::cva::{
    cva_independent, cva_independent_on_grid, cva_shuffled_cv, rho_sweep, write_results_csv, CvaEstimate, Estimator,
};
use crate::error::{Error, Result};
use crate::exposure::write_profile_csv;
use crate::paths::{base_grid, PathBundle, ScenarioEngine, SimConfig};
use crate::validation::{run_suite, OracleReport, SuiteScale};

/// Correlation grid used by `sweep` when the config gives none.
pub const SWEEP_RHOS: [f64; 7] = [-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9];

/// Runs `f` on a dedicated pool of `threads` workers (`None`: rayon default).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSummary {
    pub model: ModelKind,
    pub min_psi: f64,
    pub argmin: f64,
    pub nonnegative: bool,
    pub file: PathBuf,
}

pub fn shift_minimum(shift: &ShiftCurve) -> (f64, f64) {
    shift.times().zip(shift.values()).fold((0.0, f64::INFINITY), |best, (t, &v)| if v < best.1 { (t, v) } else { best })
}

/// Writes `shift_<model>.csv` per model and `calibration.csv` with the
/// minimum of each shift.
pub fn cmd_calibrate(cfg: &RunConfig, out: &Path) -> Result<Vec<CalibrationSummary>> {
    let market = cfg.market_curve()?;
    let mut rows = Vec::new();
    for &kind in &cfg.models {
        let shift = calibrate_shift(&cfg.model(kind)?, &market, cfg.shift_step())?;
        let name = format!("shift_{}.csv", kind.to_string().to_lowercase());
        let mut w = create(out, &name)?;
        shift.write_csv(&mut w)?;
        w.flush()?;
        let (argmin, min_psi) = shift_minimum(&shift);
        rows.push(CalibrationSummary {
            model: kind,
            min_psi,
            argmin,
            nonnegative: shift.nonnegative(),
            file: out.join(name),
        });
    }
    let mut w = create(out, "calibration.csv")?;
    writeln!(w, "model,min_psi,t_min,nonnegative")?;
    for r in &rows {
        writeln!(w, "{},{:.6e},{:.6},{}", r.model, r.min_psi, r.argmin, r.nonnegative)?;
    }
    w.flush()?;
    Ok(rows)
}

/// Whether every summary passes the nonnegativity gate.
pub fn all_nonnegative(rows: &[CalibrationSummary]) -> bool {
    rows.iter().all(|r| r.min_psi >= -SHIFT_TOLERANCE)
}

/// Smallest JCIR arrival rate (with fixed mean jump size) whose shift
/// dips below `−SHIFT_TOLERANCE` on the market horizon, by bisection on
/// `[0, hi]`. `None` if `hi` itself keeps the shift nonnegative.
pub fn jump_rate_threshold(
    p: &CirParams,
    mean_size: f64,
    market: &MarketCurve,
    step: f64,
    hi: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let ok = |omega: f64| -> Result<bool> {
        let model = IntensityModel::Jcir(*p, JumpParams::from_mean_size(omega, mean_size)?);
        Ok(calibrate_shift(&model, market, step)?.nonnegative())
    };
    if ok(hi)? {
        return Ok(None);
    }
    if !ok(0.0)? {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (0.0, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(hi))
}

fn engine_for(cfg: &RunConfig, kind: ModelKind, market: &MarketCurve) -> Result<ScenarioEngine> {
    let model = cfg.model(kind)?;
    let shift = calibrate_shift(&model, market, cfg.shift_step())?;
    ScenarioEngine::from_config(model, &shift, cfg.exposure, &cfg.sim)
}

/// Estimates for every selected model, estimator and correlation. Rows come
/// in a fixed order: closed form first, then by model, correlation,
/// estimator. Also returns per-row wall-clock seconds.
pub fn run_estimators(cfg: &RunConfig, rhos: &[f64]) -> Result<(Vec<CvaEstimate>, Vec<f64>)> {
    cfg.validate()?;
    let market = cfg.market_curve()?;
    let times = base_grid(cfg.sim.horizon, cfg.sim.delta);
    let control_mean = cva_independent_on_grid(&market, &cfg.exposure, &cfg.pricing, &times)?;
    let wants = |e: Estimator| cfg.estimators.contains(&e);
    let mut rows = Vec::new();
    let mut secs = Vec::new();
    if wants(Estimator::IndependentClosedForm) {
        let start = Instant::now();
        rows.push(cva_independent(&market, &cfg.exposure, &cfg.pricing, cfg.sim.horizon, 1e-10)?);
        secs.push(start.elapsed().as_secs_f64());
    }
    for &kind in &cfg.models {
        let engine = engine_for(cfg, kind, &market)?;
        if wants(Estimator::PlainMc) || wants(Estimator::AdaptiveCv) {
            let start = Instant::now();
            let sweep =
                rho_sweep(&engine, rhos, &cfg.sim, &cfg.pricing, wants(Estimator::AdaptiveCv).then_some(control_mean))?;
            let each = start.elapsed().as_secs_f64() / rhos.len() as f64;
            for r in sweep.into_iter().filter(|r| wants(r.estimator)) {
                rows.push(r);
                secs.push(each);
            }
        }
        if wants(Estimator::ShuffledCv) {
            for &rho in rhos {
                let start = Instant::now();
                let sim = SimConfig { rho, ..cfg.sim };
                rows.push(cva_shuffled_cv(&engine, &sim, &cfg.pricing, control_mean)?);
                secs.push(start.elapsed().as_secs_f64());
            }
        }
    }
    Ok((rows, secs))
}

fn write_side_outputs(cfg: &RunConfig, out: &Path) -> Result<()> {
    if cfg.output.profile {
        let mut w = create(out, "exposure_profile.csv")?;
        write_profile_csv(&cfg.exposure, &base_grid(cfg.sim.horizon, cfg.sim.delta), &mut w)?;
        w.flush()?;
    }
    if cfg.output.dump_paths > 0 {
        let market = cfg.market_curve()?;
        for &kind in &cfg.models {
            let engine = engine_for(cfg, kind, &market)?;
            let bundles = (0..cfg.output.dump_paths.min(cfg.sim.scenarios) as u64)
                .map(|i| engine.bundle(i, cfg.sim.rho, false))
                .collect::<Result<Vec<PathBundle>>>()?;
            let mut w = create(out, &format!("paths_{}.csv", kind.to_string().to_lowercase()))?;
            PathBundle::write_csv(&bundles, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_estimates(cfg: &RunConfig, out: &Path, name: &str, rows: &[CvaEstimate], secs: &[f64]) -> Result<PathBuf> {
    let mut w = create(out, name)?;
    write_results_csv(rows, cfg.output.runtime.then_some(secs), &mut w)?;
    w.flush()?;
    write_side_outputs(cfg, out)?;
    Ok(out.join(name))
}

/// Selected estimators at `rhos` (or `[sim.rho]`), written to `cva.csv`.
pub fn cmd_cva(cfg: &RunConfig, out: &Path) -> Result<(Vec<CvaEstimate>, PathBuf)> {
    let rhos = if cfg.rhos.is_empty() { vec![cfg.sim.rho] } else { cfg.rhos.clone() };
    let (rows, secs) = run_estimators(cfg, &rhos)?;
    let path = write_estimates(cfg, out, "cva.csv", &rows, &secs)?;
    Ok((rows, path))
}

/// Correlation sweep (default grid [`SWEEP_RHOS`]) written to `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<(Vec<CvaEstimate>, PathBuf)> {
    let rhos = if cfg.rhos.is_empty() { SWEEP_RHOS.to_vec() } else { cfg.rhos.clone() };
    let (rows, secs) = run_estimators(cfg, &rhos)?;
    let path = write_estimates(cfg, out, "sweep.csv", &rows, &secs)?;
    Ok((rows, path))
}

/// Parameters of the validation suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationInputs {
    pub cir: CirParams,
    pub jumps: JumpParams,
    pub clock: JumpParams,
    pub market: MarketCurve,
}

impl ValidationInputs {
    /// CIR (0.02, 0.161, 0.08, 0.03), intensity jumps (0.07, mean 0.08),
    /// clock (0.6, mean 0.512), flat 5% hazard to 3 years.
    pub fn reference() -> Self {
        Self {
            cir: CirParams { kappa: 0.02, beta: 0.161, eta: 0.08, x0: 0.03 },
            jumps: JumpParams { omega: 0.07, alpha: 1.0 / 0.08 },
            clock: JumpParams { omega: 0.6, alpha: 1.0 / 0.512 },
            market: MarketCurve::flat(0.05, 3.0).expect("valid curve"),
        }
    }

    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let r = Self::reference();
        let spec = |s: &Option<crate::config::JumpSpec>, d: JumpParams| {
            s.map(|s| s.params()).transpose().map(|p| p.unwrap_or(d))
        };
        Ok(Self {
            cir: cfg.cir,
            jumps: spec(&cfg.intensity_jumps, r.jumps)?,
            clock: spec(&cfg.clock, r.clock)?,
            market: cfg.market_curve()?,
        })
    }
}

/// Runs the oracle suite and writes `validation.csv`.
pub fn cmd_validate(inputs: &ValidationInputs, full: bool, seed: u64, out: &Path) -> Result<Vec<OracleReport>> {
    let scale = if full { SuiteScale::full() } else { SuiteScale::ci() };
    let reports = run_suite(&inputs.cir, &inputs.jumps, &inputs.clock, &inputs.market, scale, seed)?;
    let mut w = create(out, "validation.csv")?;
    OracleReport::write_csv(&reports, &mut w)?;
    w.flush()?;
    Ok(reports)
}
