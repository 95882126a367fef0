pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod solver;
pub mod spectral;
pub mod wkb;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/wkb.md")]
    mod wkb {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
}
