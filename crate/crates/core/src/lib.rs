//! Simulation and analysis of reset control systems under sensor
//! quantization, with time regularization as the mitigation.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the type
//! aliases at the crate root fix it to `f64`, which is what the CLI and the
//! experiment presets use.
//!
//! ```
//! use resetq::{linear, sidf, reset};
//!
//! let ci = reset::clegg::<f64>();
//! let df = sidf::describing_function(&ci, &[1.0]).unwrap();
//! let phase = df.values()[0].unwrap().arg().to_degrees();
//! assert!((phase + 38.15).abs() < 0.01);
//! # let _ = linear::Discretization::Tustin;
//! ```

pub mod error;
pub mod hbeta;
pub mod linear;
pub mod metrics;
pub mod presets;
pub mod reset;
pub mod scalar;
pub mod sidf;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub type StateSpaceModel = linear::StateSpace<f64>;
pub type FrequencyResponse = linear::FrequencyResponseCurve<f64>;
pub type ResetElement = reset::ResetElement<f64>;
pub type ResetController = reset::ResetController<f64>;
pub type TimeRegularization = reset::TimeRegularization<f64>;
pub type CgLpPidParams = reset::CgLpPidParams<f64>;
pub type StabilityCertificate = hbeta::StabilityCertificate<f64>;

pub type QuantizerSpec = sim::QuantizerSpec<f64>;
pub type SimulationTrace = sim::SimulationTrace<f64>;
pub type SimConfig = sim::SimConfig<f64>;
