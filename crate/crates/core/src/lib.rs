//! Design, compilation, and exact verification of compensating pulse
//! sequences for spin ensembles with rf-field and gradient dispersion.
//!
//! The pipeline has three stages:
//!
//! 1. [`fourier`] — describe the rotation angle you want as a function of
//!    the dispersion parameters (rf scale `eps`, position `s`, or both) and
//!    approximate it by a truncated cosine series.
//! 2. [`compiler`] — turn each series term into a short element of hard rf
//!    pulses and gradient lobes whose net effect is that term's rotation to
//!    first order, splitting large coefficients so every element stays small.
//! 3. [`simulator`] / [`analysis`] — propagate the compiled sequence
//!    exactly (closed-form rotation products) over a dispersion mesh, check
//!    it against an independent Runge-Kutta integration, and score the
//!    achieved profile against the target and the series prediction.
//!
//! Everything is deterministic: identical inputs produce byte-identical
//! designs, programs, and datasets.
//!
//! ```
//! use fourpulse::fourier::{coefficients_1d, even_extension, TargetProfile1D};
//! use fourpulse::compiler::{compile_eps, Axis};
//! use fourpulse::simulator::{propagate, DispersionPoint};
//! use fourpulse::so3::{apply, SpinState};
//!
//! // A 90-degree rotation that holds up while the rf field droops 40%.
//! let target = TargetProfile1D::uniform_eps(std::f64::consts::FRAC_PI_2, 0.4)?;
//! let design = coefficients_1d(&even_extension(&target), 5)?;
//! let program = compile_eps(&design, Axis::Y, 5f64.to_radians())?;
//!
//! let weak_rf = DispersionPoint::new(0.0, 0.7)?;
//! let m = apply(&propagate(&program, weak_rf), &SpinState::E_Z);
//! assert!(m.0[0] > 0.999); // still lands on e_x despite the droop
//! # Ok::<(), fourpulse::Error>(())
//! ```

pub mod analysis;
pub mod compiler;
mod error;
pub mod fourier;
pub mod simulator;
pub mod so3;

pub use error::{Error, Result};

pub use compiler::{Axis, EulerStage, Provenance, PulseProgram, PulseSegment, SegmentKind};
pub use fourier::{
    Design, FourierDesign1D, FourierDesign2D, TargetProfile1D, TargetProfile2D, Term1, Term2,
    Variable,
};
pub use simulator::{DispersionPoint, EnsembleMesh, SimulationResult};
pub use so3::{AxisAngle, Generator, Mat3, Rotation, SpinState};
