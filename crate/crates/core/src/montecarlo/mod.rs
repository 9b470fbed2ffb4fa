//! Monte Carlo oracle: random phase screens with the prescribed structure
//! function, projected onto LG modes and averaged over an ensemble.
//!
//! Screen `i` of an ensemble is drawn from a ChaCha8 stream selected by
//! `i / 2` under the master seed, so results do not depend on scheduling;
//! per-sample results are combined by pairwise summation in ensemble order.

mod estimate;
mod overlap;
mod screen;

pub use estimate::{
    ensemble_overlap, estimate_amplitudes, estimate_amplitudes_with, MonteCarloConfig,
    OverlapEstimate, DEFAULT_GRID_N, MIN_SAMPLES,
};
pub use overlap::{
    azimuthal_populations, check_resolution, project_overlap, PolarGrid, DEFAULT_N_THETA,
};
pub use screen::{
    generate_screen, mean_and_std_err, measure_phase_coherence, measure_structure_function,
    spectral_constant, PhaseScreen, ScreenGenerator, ScreenGeometry, SeparationEstimate,
};

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

// Azimuthal samples for a single overlap: enough for harmonic `l_out - l_in`.
fn screen_n_theta(l_in: i64, l_out: i64) -> usize {
    let k = l_out.abs_diff(l_in) as usize;
    DEFAULT_N_THETA.max((8 * k).next_power_of_two())
}
