//! Shared fixtures for the kernel benchmarks.

pub use k4flab_core;

use k4flab_core::greedy::partial_state;
use k4flab_core::Graph;

/// State of the greedy process once `⌊r n^{8/5}⌋` edges are reachable,
/// approximated by replaying the run for `r n^{8/5} / 0.9` steps.
pub fn mid_process(n: usize, seed: u64, r: f64) -> (Graph, Graph) {
    let steps = (r * (n as f64).powf(1.6) / 0.9) as u64;
    partial_state(n, seed, steps).expect("valid size")
}
