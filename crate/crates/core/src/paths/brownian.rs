use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::grid::RefinedGrid;
use crate::error::{domain, Error, Result};

/// Independent `N(0, h_j)` increments for consecutive steps `h_j`.
pub fn gaussian_increments<R: Rng + ?Sized>(steps: impl Iterator<Item = f64>, rng: &mut R) -> Vec<f64> {
    steps
        .map(|h| {
            let z: f64 = StandardNormal.sample(rng);
            h.sqrt() * z
        })
        .collect()
}

/// `dW^λ = ρ dW^V + √(1−ρ²) dW^⊥`.
pub fn correlate_drivers(rho: f64, dw_v: &[f64], dw_perp: &[f64]) -> Result<Vec<f64>> {
    if !(rho.is_finite() && rho.abs() <= 1.0) {
        return Err(domain(format!("correlation must lie in [-1, 1], got {rho}")));
    }
    if dw_v.len() != dw_perp.len() {
        return Err(Error::Shape(format!("driver lengths differ: {} vs {}", dw_v.len(), dw_perp.len())));
    }
    let c = (1.0 - rho * rho).sqrt();
    Ok(dw_v.iter().zip(dw_perp).map(|(v, p)| rho * v + c * p).collect())
}

/// `W̃` increments on the base grid from `W` increments on the refined
/// clock grid: each base increment sums the clock-grid increments between
/// `θ_{t_k}` and `θ_{t_{k+1}}` that are not inside a jump gap.
pub fn reconstruct_synchronized_bm(dw_fine: &[f64], grid: &RefinedGrid) -> Result<Vec<f64>> {
    let fine = grid.fine();
    if dw_fine.len() + 1 != fine.len() {
        return Err(Error::Shape(format!(
            "refined grid has {} intervals, got {} increments",
            fine.len() - 1,
            dw_fine.len()
        )));
    }
    let base = grid.base();
    let idx = grid.base_index();
    let in_gap = grid.in_gap();
    let mut out = Vec::with_capacity(base.len() - 1);
    for k in 0..base.len() - 1 {
        let (mut w, mut length) = (0.0, 0.0);
        for j in idx[k]..idx[k + 1] {
            if !in_gap[j] {
                w += dw_fine[j];
                length += fine[j + 1] - fine[j];
            }
        }
        let dt = base[k + 1] - base[k];
        if (length - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::Structural(format!(
                "continuous clock time over [{}, {}] is {length}, expected {dt}: jump gaps are not marked",
                base[k],
                base[k + 1]
            )));
        }
        out.push(w);
    }
    Ok(out)
}

/// Values of a path at the refined-grid nodes, from its increments.
pub fn cumulate(dw: &[f64]) -> Vec<f64> {
    let mut w = Vec::with_capacity(dw.len() + 1);
    let mut acc = 0.0;
    w.push(0.0);
    for d in dw {
        acc += d;
        w.push(acc);
    }
    w
}
