use super::{CirParams, JumpParams};
use crate::error::{domain, Result};
use crate::quad;

fn check_times(t: f64, maturity: f64) -> Result<f64> {
    if !(t.is_finite() && maturity.is_finite()) || t < 0.0 || maturity < t {
        return Err(domain(format!("need 0 <= t <= T, got t = {t}, T = {maturity}")));
    }
    Ok(maturity - t)
}

/// `(ln A, B)` for time to maturity `tau`, written with `e^{-γτ}` so that
/// long horizons do not overflow.
pub(crate) fn log_factors(p: &CirParams, tau: f64) -> (f64, f64) {
    if tau == 0.0 {
        return (0.0, 0.0);
    }
    let (k, e2) = (p.kappa, p.eta * p.eta);
    let gamma = (k * k + 2.0 * e2).sqrt();
    let em = (-gamma * tau).exp();
    let one_minus = -(-gamma * tau).exp_m1();
    let den = (gamma + k) * one_minus + 2.0 * gamma * em;
    let b = 2.0 * one_minus / den;
    let log_a = (2.0 * k * p.beta / e2) * ((2.0 * gamma).ln() + 0.5 * (k - gamma) * tau - den.ln());
    (log_a, b)
}

/// Zero-coupon factors `(A, B)` with `E[exp(−∫ₜᵀ X_s ds) | X_t = x] = A e^{−Bx}`.
pub fn cir_bond_factors(p: &CirParams, t: f64, maturity: f64) -> Result<(f64, f64)> {
    p.validate()?;
    let tau = check_times(t, maturity)?;
    let (log_a, b) = log_factors(p, tau);
    Ok((log_a.exp(), b))
}

/// `A(t,T) e^{−B(t,T) x}`.
pub fn cir_survival(p: &CirParams, t: f64, maturity: f64, x: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(domain(format!("state must be >= 0, got {x}")));
    }
    let (a, b) = cir_bond_factors(p, t, maturity)?;
    Ok(a * (-b * x).exp())
}

/// JCIR factors `(Ā, B̄)`. The jumps leave `B` unchanged and multiply `A` by
/// `exp(−ω ∫ₜᵀ B(s,T) / (α + B(s,T)) ds)`, the compensated Laplace transform
/// of Exp(α) jumps.
pub fn jcir_bond_factors(p: &CirParams, j: &JumpParams, t: f64, maturity: f64) -> Result<(f64, f64)> {
    j.validate()?;
    let (a, b) = cir_bond_factors(p, t, maturity)?;
    let tau = maturity - t;
    if j.omega == 0.0 || tau == 0.0 {
        return Ok((a, b));
    }
    let alpha = j.alpha;
    let integral = quad::integrate(
        |u| {
            let bu = log_factors(p, u).1;
            bu / (alpha + bu)
        },
        0.0,
        tau,
        1e-9,
        1e-15,
    )?;
    Ok((a * (-j.omega * integral.value).exp(), b))
}

pub fn jcir_survival(p: &CirParams, j: &JumpParams, t: f64, maturity: f64, x: f64) -> Result<f64> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(domain(format!("state must be >= 0, got {x}")));
    }
    let (a, b) = jcir_bond_factors(p, j, t, maturity)?;
    Ok(a * (-b * x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn set_a() -> CirParams {
        CirParams::new(0.02, 0.161, 0.08, 0.03).unwrap()
    }

    /// Textbook form, only valid for moderate horizons.
    fn naive(p: &CirParams, tau: f64) -> (f64, f64) {
        let g = (p.kappa * p.kappa + 2.0 * p.eta * p.eta).sqrt();
        let e = (g * tau).exp() - 1.0;
        let den = (g + p.kappa) * e + 2.0 * g;
        let b = 2.0 * e / den;
        let a = (2.0 * g * ((p.kappa + g) * tau / 2.0).exp() / den).powf(2.0 * p.kappa * p.beta / (p.eta * p.eta));
        (a, b)
    }

    #[test]
    fn zero_length_is_identity() {
        assert_eq!(cir_bond_factors(&set_a(), 1.5, 1.5).unwrap(), (1.0, 0.0));
        assert_eq!(cir_survival(&set_a(), 2.0, 2.0, 0.4).unwrap(), 1.0);
        let j = JumpParams::from_mean_size(0.07, 0.08).unwrap();
        assert_eq!(jcir_survival(&set_a(), &j, 2.0, 2.0, 0.4).unwrap(), 1.0);
    }

    #[test]
    fn stable_form_matches_textbook() {
        let p = set_a();
        for tau in [0.01, 0.5, 3.0, 10.0] {
            let (a, b) = cir_bond_factors(&p, 0.0, tau).unwrap();
            let (a2, b2) = naive(&p, tau);
            assert_relative_eq!(a, a2, max_relative = 1e-12);
            assert_relative_eq!(b, b2, max_relative = 1e-12);
        }
        // naive form overflows here, the stable one does not
        let (a, b) = cir_bond_factors(&p, 0.0, 5000.0).unwrap();
        assert!(a.is_finite() && b.is_finite());
    }

    #[test]
    fn deterministic_limit() {
        let p = CirParams::new(0.3, 0.1, 1e-6, 0.05).unwrap();
        let tau = 2.0;
        let (_, b) = cir_bond_factors(&p, 0.0, tau).unwrap();
        assert_relative_eq!(b, (1.0 - (-0.3f64 * tau).exp()) / 0.3, max_relative = 1e-9);
    }

    #[test]
    fn zero_intensity_survives() {
        let p = CirParams::new(0.5, 0.0, 0.2, 0.0).unwrap();
        for t in [0.5, 3.0, 30.0] {
            assert_relative_eq!(cir_survival(&p, 0.0, t, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn monotone_in_maturity_and_state() {
        let p = set_a();
        let mut prev = 1.0;
        for k in 1..60 {
            let s = cir_survival(&p, 0.0, k as f64 * 0.1, 0.03).unwrap();
            assert!(s > 0.0 && s <= prev);
            prev = s;
        }
        assert!(cir_survival(&p, 0.0, 2.0, 0.1).unwrap() < cir_survival(&p, 0.0, 2.0, 0.05).unwrap());
    }

    #[test]
    fn jcir_without_jumps_is_cir() {
        let p = set_a();
        let j = JumpParams::none();
        assert_eq!(jcir_survival(&p, &j, 0.0, 3.0, 0.03).unwrap(), cir_survival(&p, 0.0, 3.0, 0.03).unwrap());
    }

    #[test]
    fn jcir_below_cir() {
        let p = set_a();
        let j = JumpParams::from_mean_size(0.07, 0.08).unwrap();
        for t in [0.5, 1.0, 3.0] {
            assert!(jcir_survival(&p, &j, 0.0, t, 0.03).unwrap() < cir_survival(&p, 0.0, t, 0.03).unwrap());
        }
    }

    #[test]
    fn jcir_small_jump_limit() {
        // For mean jump size -> 0 at fixed omega*mean, jumps act like a drift
        // of omega/alpha, i.e. extra integrated intensity ≈ omega/alpha * ∫B.
        let p = set_a();
        let j = JumpParams::new(1000.0, 1e5).unwrap();
        let s = jcir_survival(&p, &j, 0.0, 1.0, 0.03).unwrap();
        let drift = CirParams::new(p.kappa, p.beta + 0.01 / p.kappa, p.eta, p.x0).unwrap();
        assert_relative_eq!(s, cir_survival(&drift, 0.0, 1.0, 0.03).unwrap(), max_relative = 1e-4);
    }

    #[test]
    fn bad_inputs() {
        assert!(cir_survival(&set_a(), 1.0, 0.5, 0.03).is_err());
        assert!(cir_survival(&set_a(), 0.0, 1.0, -0.1).is_err());
    }
}
