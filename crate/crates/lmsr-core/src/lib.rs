//! Query-model emulation of quantum algorithms for lexicographically minimal
//! string rotation, with exact classical string oracles.

pub mod apps;
pub mod det_sampling;
pub mod error;
pub mod experiments;
pub mod lmsr_quantum;
pub mod oracle_model;
pub mod pattern_match;
pub mod q_subroutines;
pub mod sensitivity_lab;
pub mod strings_core;

pub use error::{Error, Result};

/// Maps `f` over `0..k`, in parallel when the `parallel` feature is on. Output order is index order.
pub fn par_map<T: Send>(k: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..k).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..k).map(f).collect()
    }
}
