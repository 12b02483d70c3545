//! Order-preserving map over frame indices, parallel when the `parallel` feature is on.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Runs on the current rayon pool; identical to `Sequential` without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `f(state, i)` for every `i` in `range`, results in index order. `init`
/// builds one scratch state per worker.
pub fn map_indexed<S, T, I, F>(exec: Execution, range: Range<usize>, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
    T: Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => range.into_par_iter().map_init(&init, |s, i| f(s, i)).collect(),
        _ => {
            let mut state = init();
            range.map(|i| f(&mut state, i)).collect()
        }
    }
}
