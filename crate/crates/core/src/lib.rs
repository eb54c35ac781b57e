//! Neumann-Poincaré spectra of simply connected planar domains, computed from the
//! Grunsky coefficients of the exterior conformal map and cross-checked against
//! an independent Nyström discretization of the boundary integral operator.

pub mod conformal;
pub mod decay;
pub mod error;
pub mod grunsky;
pub mod layer;
pub mod nystrom;
pub mod preset;
pub mod spectrum;

pub use conformal::{parse_domain, BoundarySample, Domain, DomainSpec, ExteriorMap, UnivalenceReport, Verdict};
pub use decay::{DecayModel, DecayReport, IndexRange, LemmaConstantReport};
pub use error::{Error, Result};
pub use grunsky::{FaberTable, GrunskyTable, SymmetrizedGrunsky};
pub use nystrom::{compare, Comparison, KernelMatrix};
pub use preset::Preset;
pub use spectrum::{DensityCoefficients, Spectrum, TruncatedNpMatrix};
