//! Simulation and analysis toolkit for dispersion-compensated non-classical
//! target detection (DNCTD) LiDAR.
//!
//! The analytic layers ([`chrono`], [`detection`]) are generic over
//! [`Scalar`]; the stochastic and stream-processing layers work in `f64`
//! and integer picoseconds. The aliases below name the `f64` instantiations
//! used throughout the rest of the crate.

pub mod chrono;
pub mod detection;
pub mod error;
pub mod lidar;
mod linalg;
pub mod montecarlo;
pub mod numeric;
pub mod scalar;
pub mod stream;
pub mod tagcount;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Biphoton = chrono::ChronocyclicGaussian2<f64>;
pub type Wavepacket = chrono::ChronocyclicGaussian1<f64>;
pub type Density = chrono::Gaussian1D<f64>;

pub type Biphoton32 = chrono::ChronocyclicGaussian2<f32>;
pub type Wavepacket32 = chrono::ChronocyclicGaussian1<f32>;
pub type Density32 = chrono::Gaussian1D<f32>;
