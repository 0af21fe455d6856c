//! Data-parallel execution with a sequential fallback.
//!
//! Every parallel loop in the crate goes through [`Strategy::map`], which
//! returns results in index order regardless of how work was scheduled, so
//! output is identical under both strategies. Without the `parallel` feature
//! only [`Strategy::Sequential`] exists.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Strategy {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Strategy {
    /// `(0..n).map(f)` collected in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Strategy::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Strategy::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }

    /// Maps over a slice, preserving order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        match self {
            Strategy::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Strategy::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Every strategy compiled into this build.
    pub fn available() -> &'static [Strategy] {
        #[cfg(feature = "parallel")]
        {
            &[Strategy::Sequential, Strategy::Parallel]
        }
        #[cfg(not(feature = "parallel"))]
        {
            &[Strategy::Sequential]
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Sequential => "sequential",
            #[cfg(feature = "parallel")]
            Strategy::Parallel => "parallel",
        }
    }
}
