use rand::Rng;

use super::clock::sample_compound_poisson;
use crate::curves::{CirParams, JumpParams};
use crate::error::{Error, Result};

fn check_shape(times: &[f64], dw: &[f64]) -> Result<()> {
    if times.is_empty() || times.len() != dw.len() + 1 {
        return Err(Error::Shape(format!(
            "{} grid nodes need {} increments, got {}",
            times.len(),
            times.len().saturating_sub(1),
            dw.len()
        )));
    }
    Ok(())
}

/// Euler step with the positive part in drift and diffusion, plus the sum
/// of jumps arriving in `(t_i, t_{i+1}]`.
pub(crate) fn diop_into(p: &CirParams, times: &[f64], dw: &[f64], jumps: &[(f64, f64)], out: &mut Vec<f64>) {
    out.clear();
    out.reserve(times.len());
    let mut x = p.x0;
    out.push(x);
    let mut ji = 0;
    for i in 0..dw.len() {
        let h = times[i + 1] - times[i];
        let xp = x.max(0.0);
        x += p.kappa * (p.beta - xp) * h + p.eta * xp.sqrt() * dw[i];
        while ji < jumps.len() && jumps[ji].0 <= times[i + 1] {
            x += jumps[ji].1;
            ji += 1;
        }
        out.push(x);
    }
}

/// `X̄_{i+1} = X̄_i + κ(β − X̄_i⁺)h + η√(X̄_i⁺) ΔW_i` from `X̄_0 = x0`.
pub fn simulate_cir_diop(p: &CirParams, times: &[f64], dw: &[f64]) -> Result<Vec<f64>> {
    check_shape(times, dw)?;
    let mut out = Vec::new();
    diop_into(p, times, dw, &[], &mut out);
    Ok(out)
}

/// Diop path with the given jumps added at the first node at or after each
/// arrival time.
pub fn simulate_jcir_with_jumps(p: &CirParams, times: &[f64], dw: &[f64], jumps: &[(f64, f64)]) -> Result<Vec<f64>> {
    check_shape(times, dw)?;
    if jumps.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(Error::Shape("jump times must be sorted".into()));
    }
    let mut out = Vec::new();
    diop_into(p, times, dw, jumps, &mut out);
    Ok(out)
}

/// Diop path plus compound-Poisson(`ω`, Exp(`α`)) jumps drawn from `rng`,
/// independent of `dw`.
pub fn simulate_jcir<R: Rng + ?Sized>(
    p: &CirParams,
    j: &JumpParams,
    times: &[f64],
    dw: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_shape(times, dw)?;
    let horizon = *times.last().expect("non-empty");
    let (t, y) = sample_compound_poisson(j, horizon, rng);
    let jumps: Vec<(f64, f64)> = t.into_iter().zip(y).collect();
    simulate_jcir_with_jumps(p, times, dw, &jumps)
}
