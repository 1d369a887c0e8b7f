//! Command-line front end: configuration layering and the experiment
//! commands that write CSV/JSON artefacts.

pub mod commands;
pub mod config;
pub mod csvio;

/// Default worker count: `MANET_THREADS` if set, else the available
/// parallelism.
pub fn default_threads() -> usize {
    std::env::var("MANET_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
