use super::clock::ClockPath;

/// Nodes closer than this (relative to the horizon) are merged.
const MERGE_TOL: f64 = 1e-12;

/// `{0, δ, 2δ, …, T}`; the last step is shorter when `δ` does not divide `T`.
pub fn base_grid(horizon: f64, delta: f64) -> Vec<f64> {
    let n = (horizon / delta - 1e-9).ceil().max(1.0) as usize;
    let mut t: Vec<f64> = (0..n).map(|k| k as f64 * delta).collect();
    t.push(horizon);
    t
}

/// Simulation grid on the clock axis for one clock realisation.
///
/// Each base interval `[t_k, t_{k+1}]` is mapped to `[θ_{t_k}, θ_{t_{k+1}}]`
/// and cut into `n_k = ⌈Δθ/δ⌉` equal pieces. The endpoints of every jump
/// gap `(θ_{t_i−}, θ_{t_i})` are inserted as extra nodes so that increments
/// inside a gap can be told apart from the continuous part.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedGrid {
    delta: f64,
    base: Vec<f64>,
    fine: Vec<f64>,
    base_index: Vec<usize>,
    fill_ins: Vec<usize>,
    gaps: Vec<(f64, f64)>,
    in_gap: Vec<bool>,
}

impl RefinedGrid {
    /// The calendar grid `𝒯`.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// Sorted nodes `𝒯^θ_fine`, starting at 0.
    pub fn fine(&self) -> &[f64] {
        &self.fine
    }

    /// `fine[base_index()[k]] == θ_{t_k}`.
    pub fn base_index(&self) -> &[usize] {
        &self.base_index
    }

    /// `n_k` for each base interval.
    pub fn fill_ins(&self) -> &[usize] {
        &self.fill_ins
    }

    /// Jump gaps `(θ_{t_i−}, θ_{t_i})` in time order.
    pub fn gaps(&self) -> &[(f64, f64)] {
        &self.gaps
    }

    /// Whether fine interval `j` (from `fine[j]` to `fine[j+1]`) lies in a gap.
    pub fn in_gap(&self) -> &[bool] {
        &self.in_gap
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn max_spacing(&self) -> f64 {
        self.fine.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn fine_steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.fine.windows(2).map(|w| w[1] - w[0])
    }

    /// Drops gap markers, for exercising the structural check.
    pub fn without_gap_markers(mut self) -> Self {
        self.gaps.clear();
        self.in_gap.iter_mut().for_each(|g| *g = false);
        self
    }
}

/// Refined grid for `clock` on `[0, T]` with base step `delta`.
pub fn build_refined_grid(clock: &ClockPath, horizon: f64, delta: f64) -> RefinedGrid {
    build_refined_grid_with_nodes(clock, horizon, delta, &[])
}

/// As [`build_refined_grid`], also inserting the clock-axis points `extra`
/// (those outside `[0, θ_T]` are ignored).
pub fn build_refined_grid_with_nodes(clock: &ClockPath, horizon: f64, delta: f64, extra: &[f64]) -> RefinedGrid {
    assert!(delta > 0.0 && horizon > 0.0);
    let base = base_grid(horizon, delta);
    let image: Vec<f64> = base.iter().map(|&t| clock.theta_at(t)).collect();
    let merge = MERGE_TOL * image.last().copied().unwrap_or(1.0).max(1.0);

    let gaps: Vec<(f64, f64)> =
        clock.jumps().filter(|&(t, _)| t <= horizon).map(|(t, _)| (clock.theta_before(t), clock.theta_at(t))).collect();
    let mut extra: Vec<f64> = extra.to_vec();
    extra.sort_by(f64::total_cmp);

    let mut fine = Vec::with_capacity(image.len() * 2);
    let mut base_index = Vec::with_capacity(image.len());
    let mut fill_ins = Vec::with_capacity(image.len() - 1);
    fine.push(0.0);
    base_index.push(0);
    let mut candidates: Vec<(f64, bool)> = Vec::new();
    let (mut gi, mut ei) = (0, 0);
    for k in 0..image.len() - 1 {
        let (a, b) = (image[k], image[k + 1]);
        let n = ((b - a) / delta - 1e-9).ceil().max(1.0) as usize;
        fill_ins.push(n);
        candidates.clear();
        let h = (b - a) / n as f64;
        candidates.extend((1..n).map(|j| (a + j as f64 * h, false)));
        while gi < gaps.len() && gaps[gi].1 <= b {
            candidates.push((gaps[gi].0, true));
            candidates.push((gaps[gi].1, true));
            gi += 1;
        }
        while ei < extra.len() && extra[ei] <= b {
            if extra[ei] > a {
                candidates.push((extra[ei], true));
            }
            ei += 1;
        }
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut last_required = true;
        for &(x, required) in &candidates {
            if x <= a + merge || x >= b - merge {
                continue;
            }
            let prev = *fine.last().expect("non-empty");
            if x - prev <= merge {
                if required && !last_required {
                    *fine.last_mut().expect("non-empty") = x;
                    last_required = true;
                }
                continue;
            }
            fine.push(x);
            last_required = required;
        }
        if b - *fine.last().expect("non-empty") <= merge && !last_required {
            fine.pop();
        }
        fine.push(b);
        base_index.push(fine.len() - 1);
    }

    let mut in_gap = Vec::with_capacity(fine.len() - 1);
    let mut g = 0;
    for w in fine.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        while g < gaps.len() && gaps[g].1 < mid {
            g += 1;
        }
        in_gap.push(g < gaps.len() && gaps[g].0 < mid && mid < gaps[g].1);
    }

    RefinedGrid { delta, base, fine, base_index, fill_ins, gaps, in_gap }
}
