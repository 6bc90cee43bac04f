//! Multi-resolution function spaces, Haar wavelets and the U-Net machinery
//! built on them.

pub mod autodiff;
pub mod diffusion;
mod error;
pub mod io;
pub mod spaces;
pub mod train;
pub mod triangle;
pub mod unet;
pub mod wavelet;

pub use error::{Error, Result};

/// The user guide from `book/`, compiled here so its examples run as doctests.
pub mod guide {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/wavelets.md")]
    pub mod wavelets {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    pub mod spaces {}
    #[doc = include_str!("../../../book/src/triangle.md")]
    pub mod triangle {}
    #[doc = include_str!("../../../book/src/unet.md")]
    pub mod unet {}
    #[doc = include_str!("../../../book/src/training.md")]
    pub mod training {}
    #[doc = include_str!("../../../book/src/diffusion.md")]
    pub mod diffusion {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
