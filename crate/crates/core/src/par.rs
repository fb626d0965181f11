//! Execution policy for the data-parallel kernels.

use std::ops::Range;

use serde::{Deserialize, Serialize};

/// How an embarrassingly parallel kernel is evaluated.
///
/// `Parallel` falls back to `Sequential` when the crate is built without the
/// `parallel` feature. Both policies produce bitwise-identical output: every
/// kernel writes one independent value per index and never reduces across
/// threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this policy will actually use worker threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `(0..n).map(f).collect()` under this policy.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to consecutive index ranges of length `chunk` (the last
    /// may be shorter) and concatenates the results. Chunk boundaries depend
    /// only on `n` and `chunk`, never on the policy.
    pub fn map_chunks<T, F>(self, n: usize, chunk: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>) -> Vec<T> + Sync + Send,
    {
        let chunk = chunk.max(1);
        self.map_indexed(n.div_ceil(chunk), |c| f(c * chunk..((c + 1) * chunk).min(n)))
            .into_iter()
            .flatten()
            .collect()
    }

    /// Map over a slice, preserving order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}
