//! Moment-based detectors for entanglement, Schmidt number and channel classes.
//!
//! A positive but not completely positive map `L` is applied to one half of a
//! bipartite state; the power sums `s_n = Tr S^n` of the normalized output `S`
//! certify that `S` is not PSD, and hence that the state is entangled (or has
//! Schmidt number above `r` when `L` is `r`-positive). The same tests on a
//! channel's Choi state classify entanglement-breaking and Schmidt-number-breaking
//! channels, and the Reduction map yields an explicit channel-discrimination task.
//!
//! ```
//! use posmap_core::{maps::PositiveMapSpec, moments, states};
//!
//! let rho = states::isotropic(3, 0.9).unwrap();
//! let map = PositiveMapSpec::reduction_for_r(2, 3).unwrap();
//! let s = moments::map_moments(&map, &rho, 3, 3, 5).unwrap();
//! assert!(moments::theorem1_check(&s).unwrap().detected());
//! ```

pub mod channels;
pub mod discrimination;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod moments;
pub mod states;
pub mod sweep;

pub use channels::{ChannelFamily, ChannelMomentVector, ChannelSpec};
pub use discrimination::{ChannelPair, WitnessReport, WitnessVerdict};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, LinearMap, Spectrum, Subsystem};
pub use maps::{PositiveMapSpec, RPositivityClaim};
pub use moments::{DetectionReport, Detector, HankelMatrix, MomentVector, Verdict};
pub use num_complex::Complex64;
pub use states::{SchmidtBoundedSample, StateFamily};
pub use sweep::{Probe, ScanRow, Target};
