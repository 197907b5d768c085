use std::io::Write;

use super::{IntensityModel, MarketCurve, ModelKind};
use crate::error::{domain, Error, Result};

/// A shift is "nonnegative" when its minimum is at least `-SHIFT_TOLERANCE`
/// (per year, i.e. 0.1bp of intensity).
pub const SHIFT_TOLERANCE: f64 = 1e-5;

/// Deterministic shift `ψ` tabulated on `{0, δ_ψ, 2δ_ψ, …}` and linearly
/// interpolated between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftCurve {
    kind: ModelKind,
    step: f64,
    values: Vec<f64>,
    /// `∫₀^{t_i} ψ` of the interpolant.
    cumulative: Vec<f64>,
}

impl ShiftCurve {
    pub fn from_values(kind: ModelKind, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || values.len() < 2 {
            return Err(domain("shift curve needs a positive step and at least two nodes"));
        }
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in values.windows(2) {
            acc += 0.5 * step * (w[0] + w[1]);
            cumulative.push(acc);
        }
        Ok(Self { kind, step, values, cumulative })
    }

    /// A constant shift `c` on `[0, horizon]`.
    pub fn constant(kind: ModelKind, c: f64, horizon: f64, step: f64) -> Result<Self> {
        let n = (horizon / step - 1e-9).ceil().max(1.0) as usize;
        Self::from_values(kind, step, vec![c; n + 1])
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.step)
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn nonnegative(&self) -> bool {
        self.min() >= -SHIFT_TOLERANCE
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let pos = (t / self.step).max(0.0);
        let last = self.values.len() - 2;
        let i = (pos as usize).min(last);
        (i, (pos - i as f64).clamp(0.0, 1.0))
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let (i, s) = self.locate(t);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }

    /// `∫₀ᵗ ψ` of the piecewise-linear interpolant (flat beyond the last node).
    pub fn integral(&self, t: f64) -> f64 {
        let horizon = self.horizon();
        if t > horizon {
            return self.cumulative[self.values.len() - 1] + (t - horizon) * self.values[self.values.len() - 1];
        }
        let (i, s) = self.locate(t);
        let h = s * self.step;
        self.cumulative[i] + h * (self.values[i] + 0.5 * s * (self.values[i + 1] - self.values[i]))
    }

    /// `t,psi` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,psi")?;
        for (t, v) in self.times().zip(&self.values) {
            writeln!(out, "{t:.10},{v:.12e}")?;
        }
        Ok(())
    }
}

/// Tabulates `ψ(t) = −d/dt ln(P^M(0,t) / P_model(0,t))` with central
/// differences (second-order one-sided differences at the two ends).
pub fn calibrate_shift(model: &IntensityModel, market: &MarketCurve, step: f64) -> Result<ShiftCurve> {
    model.validate()?;
    tabulate_shift(
        model.kind(),
        market.horizon(),
        step,
        |t| -market.integrated_hazard(t),
        |t| {
            let p = model.survival(t)?;
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Calibration { t, reason: format!("model survival is {p} for {model}") });
            }
            Ok(p.ln())
        },
    )
}

fn tabulate_shift<M, F>(kind: ModelKind, horizon: f64, step: f64, log_market: M, log_model: F) -> Result<ShiftCurve>
where
    M: Fn(f64) -> f64,
    F: Fn(f64) -> Result<f64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(domain(format!("shift step must be > 0, got {step}")));
    }
    let n = ((horizon / step) - 1e-9).ceil().max(2.0) as usize;
    let log_ratio = (0..=n)
        .map(|i| {
            let t = i as f64 * step;
            Ok(log_market(t) - log_model(t)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut values = Vec::with_capacity(n + 1);
    values.push(-(-3.0 * log_ratio[0] + 4.0 * log_ratio[1] - log_ratio[2]) / (2.0 * step));
    for i in 1..n {
        values.push(-(log_ratio[i + 1] - log_ratio[i - 1]) / (2.0 * step));
    }
    values.push(-(3.0 * log_ratio[n] - 4.0 * log_ratio[n - 1] + log_ratio[n - 2]) / (2.0 * step));
    ShiftCurve::from_values(kind, step, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{cir_survival, CirParams, JumpParams};
    use approx::assert_relative_eq;

    fn set_a() -> CirParams {
        CirParams::new(0.02, 0.161, 0.08, 0.03).unwrap()
    }

    #[test]
    fn degenerate_model_shift_is_hazard() {
        let p = CirParams::new(0.3, 0.0, 0.1, 0.0).unwrap();
        let market = MarketCurve::flat(0.05, 3.0).unwrap();
        let psi = calibrate_shift(&IntensityModel::Cir(p), &market, 0.005).unwrap();
        for v in psi.values() {
            assert_relative_eq!(*v, 0.05, epsilon = 1e-10);
        }
        assert!(psi.nonnegative());
    }

    #[test]
    fn market_equal_to_model_gives_zero() {
        let p = set_a();
        let log_p = |t: f64| cir_survival(&p, 0.0, t, p.x0).map(f64::ln);
        let psi = tabulate_shift(ModelKind::Cir, 3.0, 0.01, |t| log_p(t).unwrap(), log_p).unwrap();
        assert!(psi.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_model_survival_is_a_calibration_error() {
        let r = tabulate_shift(
            ModelKind::Cir,
            1.0,
            0.1,
            |t| -t,
            |t| if t > 0.5 { Err(Error::Calibration { t, reason: "zero".into() }) } else { Ok(0.0) },
        );
        assert!(matches!(r, Err(Error::Calibration { .. })));
    }

    #[test]
    fn round_trip_all_models() {
        let p = set_a();
        let market = MarketCurve::flat(0.05, 3.0).unwrap();
        let models = [
            IntensityModel::Cir(p),
            IntensityModel::Jcir(p, JumpParams::from_mean_size(0.07, 0.08).unwrap()),
            IntensityModel::TcCir(p, JumpParams::from_mean_size(0.6, 0.512).unwrap()),
        ];
        for m in models {
            let psi = calibrate_shift(&m, &market, 0.005).unwrap();
            for t in psi.times() {
                let fitted = (-psi.integral(t)).exp() * m.survival(t).unwrap();
                assert!((fitted - market.survival(t)).abs() < 1e-6, "{m} at {t}");
            }
            assert!(psi.nonnegative(), "{m}: min {}", psi.min());
        }
    }

    #[test]
    fn interpolation_and_integral() {
        let c = ShiftCurve::from_values(ModelKind::Cir, 0.5, vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(c.value_at(0.25), 0.5);
        assert_eq!(c.value_at(5.0), 1.0);
        assert_relative_eq!(c.integral(0.5), 0.25);
        assert_relative_eq!(c.integral(0.25), 0.0625);
        assert_relative_eq!(c.integral(1.0), 0.75);
        assert_relative_eq!(c.integral(2.0), 1.75);
    }

    #[test]
    fn csv_export() {
        let c = ShiftCurve::constant(ModelKind::Jcir, 0.01, 1.0, 0.5).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("t,psi\n0.0000000000,1.000000000000e-2"));
    }
}
