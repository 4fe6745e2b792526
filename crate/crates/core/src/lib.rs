//! Analysis and simulation of disturbance-observer (DOb) based motion
//! controllers in continuous and discrete time.
//!
//! The crate is organised bottom-up:
//!
//! * [`poly`] and [`tf`]: polynomial and rational transfer-function algebra.
//! * [`discretize`]: zero-order hold, Backward Euler and Tustin maps.
//! * [`dob`]: inner/outer loop synthesis from the design parameters.
//! * [`analysis`]: sensitivity peaks, Bode integrals, design constraints,
//!   root loci and critical-parameter search.
//! * [`sim`]: fixed-step closed-loop servo simulation plus filter oracles.

pub mod analysis;
pub mod discretize;
pub mod dob;
pub mod error;
pub mod fmt;
pub mod poly;
pub mod quad;
pub mod sim;
pub mod tf;

pub use error::{Error, Result};
pub use num_complex::Complex64;
