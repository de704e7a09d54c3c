//! Pseudo-spectral simulation and Gevrey-class analysis of the fifth-order
//! KdV-BBM water-wave model on a periodic domain.

// Guards of the form `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyticity;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimates;
pub mod norms;
pub mod params;
pub mod spectral;

pub use error::{Error, Result};
