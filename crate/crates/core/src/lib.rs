//! Composite blue-sideband pulse sequences that prepare Dicke and NOON
//! states on a trapped-ion chain.
//!
//! Under uniform illumination the `N`-ion, one-mode dynamics stays on the
//! `(N+1)`-level ladder `|W^N_n>|n>`. [`chain`] models that ladder exactly,
//! [`optim`] searches for minimal-area sequences, [`oracle`] checks the
//! reduction against the full tensor-product space, [`robustness`] sweeps
//! parameter noise and [`timing`] converts areas into durations.

pub mod chain;
pub mod cli;
pub mod error;
pub mod optim;
pub mod oracle;
pub mod robustness;
pub mod tables;
pub mod timing;

pub use error::{Error, Result};
