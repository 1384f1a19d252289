//! Bistatic SAR target recognition toolkit.
//!
//! The chain runs from point-scatterer targets ([`scene`]) through simulated
//! phase histories and k-space patches ([`echo`]) to complex image clips
//! ([`imaging`]), polarimetric feature cubes ([`polarimetry`]), the CGBC and
//! PCANN classifiers ([`classify`]) and the experiment harness ([`eval`]).

pub mod classify;
pub mod config;
pub mod dataset;
pub mod clipio;
pub mod echo;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod linalg;
pub mod polarimetry;
pub mod scene;

pub use error::{Error, Result};
