use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::curves::JumpParams;

/// One realisation of `θ_t = t + Σ_{tᵢ ≤ t} Yᵢ` on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockPath {
    horizon: f64,
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
}

impl ClockPath {
    /// The identity clock.
    pub fn identity(horizon: f64) -> Self {
        Self { horizon, jump_times: Vec::new(), jump_sizes: Vec::new() }
    }

    /// A clock with prescribed jumps. Times must be increasing in `(0, horizon]`
    /// and sizes positive.
    pub fn from_jumps(horizon: f64, jump_times: Vec<f64>, jump_sizes: Vec<f64>) -> Self {
        assert_eq!(jump_times.len(), jump_sizes.len());
        assert!(jump_times.windows(2).all(|w| w[0] <= w[1]));
        assert!(jump_times.iter().all(|&t| t > 0.0 && t <= horizon));
        assert!(jump_sizes.iter().all(|&y| y > 0.0));
        Self { horizon, jump_times, jump_sizes }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn jump_sizes(&self) -> &[f64] {
        &self.jump_sizes
    }

    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.jump_times.iter().copied().zip(self.jump_sizes.iter().copied())
    }

    /// `θ_t`, right-continuous: a jump at `t` is included.
    pub fn theta_at(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        t + self.jump_sizes[..k].iter().sum::<f64>()
    }

    /// `θ_{t−}`.
    pub fn theta_before(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s < t);
        t + self.jump_sizes[..k].iter().sum::<f64>()
    }
}

/// Compound-Poisson arrivals on `(0, horizon]` with Exp(`α`) marks.
/// Returns `(times, sizes)`; used for both clock and intensity jumps.
pub(crate) fn sample_compound_poisson<R: Rng + ?Sized>(
    j: &JumpParams,
    horizon: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut times = Vec::new();
    let mut sizes = Vec::new();
    if j.omega == 0.0 || horizon <= 0.0 {
        return (times, sizes);
    }
    let gaps = Exp::new(j.omega).expect("omega > 0");
    let marks = Exp::new(j.alpha).expect("alpha > 0");
    let mut t = 0.0;
    loop {
        t += gaps.sample(rng);
        if t > horizon {
            break;
        }
        times.push(t);
        sizes.push(marks.sample(rng));
    }
    (times, sizes)
}

/// Poisson(`ω`) arrival times on `(0, T]` with i.i.d. Exp(`α`) sizes.
pub fn sample_clock<R: Rng + ?Sized>(clock: &JumpParams, horizon: f64, rng: &mut R) -> ClockPath {
    let (jump_times, jump_sizes) = sample_compound_poisson(clock, horizon, rng);
    ClockPath { horizon, jump_times, jump_sizes }
}
