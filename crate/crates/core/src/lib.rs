//! Streaming keyword spotting with attention-augmented convolutional
//! recurrent networks.

pub mod detect;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod arch;
pub mod io;
pub mod model;
pub mod nncore;
pub mod streaming;

pub use error::{Error, Result, WeightFileError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/architectures.md")]
    mod architectures {}
    #[doc = include_str!("../../../book/src/footprint.md")]
    mod footprint {}
    #[doc = include_str!("../../../book/src/streaming.md")]
    mod streaming {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
