//! Seeded path generation: clock, refined grids, Diop CIR scheme,
//! synchronized Brownian reconstruction and per-scenario bundles.

mod brownian;
mod clock;
mod grid;
mod scenario;
mod scheme;
mod survival;

pub use brownian::{correlate_drivers, cumulate, gaussian_increments, reconstruct_synchronized_bm};
pub use clock::{sample_clock, ClockPath};
pub use grid::{base_grid, build_refined_grid, build_refined_grid_with_nodes, RefinedGrid};
pub use scenario::{ExposurePath, IntensityPath, PathBundle, ScenarioDrivers, ScenarioEngine, SimConfig};
pub use scheme::{simulate_cir_diop, simulate_jcir, simulate_jcir_with_jumps};
pub use survival::survival_path;
