//! Single- and two-particle Green's functions of N fermions in a harmonic
//! trap whose center of mass is driven by a fluctuating bath force.
//!
//! The fermions are bosonized: each oscillator level is a momentum state of a
//! chiral fermion on a ring, the bath couples linearly to particle-hole boson
//! modes, and every fermion correlator reduces to a Gaussian average of
//! vertex operators. Fourier integrals over the ring angles become coefficient
//! extractions from truncated Laurent series (see [`series`]).
//!
//! Module map:
//! - [`series`]: truncated multivariate Laurent series
//! - [`bath`]: model parameters, bath spectra and boson mode correlators
//! - [`greens`]: vertex expectations, hole and particle propagators
//! - [`density`]: reduced single-particle density matrix after injection
//! - [`oracle`]: independent numerical checks (quadrature, Wick, finite bath)

pub mod bath;
pub mod density;
pub mod error;
pub mod greens;
pub mod oracle;
pub mod quad;
pub mod series;

pub use bath::{
    BathSpectrum, CorrelatorMode, CouplingProfile, ModeCorrelator, ModeValues, ModelParams,
};
pub use density::{DensityMatrix, InjectionState, LevelWindow};
pub use error::{Error, Result};
pub use greens::{DecayFunction, PropagatorKind, TruncationPolicy, Vertex};
pub use num_complex::Complex64;
pub use series::{ExponentWindow, LaurentSeries, Monomial, SeriesError};
