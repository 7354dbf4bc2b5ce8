//! Discrete periodic model of real band-limited signals: grid geometry,
//! transforms, convolution, lattice sampling and interpolation.

pub mod fft;
mod grid;
mod interp;
pub mod io;
mod lattice;
mod signal;

pub use grid::Grid;
pub use interp::{interpolate_dense, interpolate_from_lattice, sample_on_lattice, RIDGE};
pub(crate) use interp::{AliasMap, LatticeProjector, RealBasis};
pub use lattice::{DiagonalLayout, SamplingLattice};
pub use signal::{
    canonical_sign, convolve, forward_spectrum, l2, sign_invariant_error, BandLimitedSignal, FrequencySupport,
    OUT_OF_BAND_TOL, SUPPORT_THRESHOLD,
};
pub(crate) use signal::{containment_violation, fit_box};
