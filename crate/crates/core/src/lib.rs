//! Semiclassical trace asymptotics for integral operators with phase-space
//! symbols, and the entanglement entropy of free fermions built on them.
//!
//! The crate computes the quantities of the two-term Widom expansion through
//! independent routes (closed forms, oscillatory quadrature, Nyström
//! spectra, Monte Carlo) so that they can be checked against one another.

pub mod entropy;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod lemmas;
pub mod numerics;
pub mod spectrum;
pub mod trace;
pub mod widom;

pub use error::{Error, Result};
pub use fourier::{GammaEvaluation, GammaMethod, Symbol};
pub use geometry::{coupling_integral, BoundaryPoint, CriticalSet, Domain, Shape};
pub use lemmas::{
    excluded_volume, identity_check, roccaforte_order_check, surface_term, TranslateFamily,
    VolumeMethod, Weight,
};
pub use spectrum::Spectrum;
pub use trace::{
    asymptotic_fit, exact_trace, trace_f, trace_power_mc, trace_square, AsymptoticFit,
    OperatorSpec, SquareMethod, TraceMethod, TraceResult,
};
pub use widom::{f_tilde, widom_prediction, SpectralFunction, TargetStatus, WidomPrediction};
