use crate::routing::PathState;

pub const W_MIN: f64 = 1.0;
pub const W_INIT: f64 = 4.0;
pub const DEFAULT_BETA: f64 = 10.0;
pub const DEFAULT_GAMMA: f64 = 0.1;

/// Shrinks the window after a marked TU was aborted.
pub fn window_on_abort(ps: &mut PathState, beta: f64, w_min: f64) -> f64 {
    ps.window = (ps.window - beta).max(w_min);
    ps.window
}

/// Grows path `p`'s window after an unmarked TU completed, by
/// `gamma / (sum of the pair's windows)`.
pub fn window_on_success(paths: &mut [PathState], p: usize, gamma: f64) -> f64 {
    let total: f64 = paths.iter().map(|ps| ps.window).sum();
    paths[p].window += gamma / total;
    paths[p].window
}

/// A new TU may go out while fewer than `floor(window)` are unfinished.
pub fn admit(ps: &PathState) -> bool {
    (ps.outstanding as f64) < ps.window.floor()
}
