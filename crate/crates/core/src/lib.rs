//! Recovery of real-valued band-limited signals, up to one global sign, from
//! unsigned samples of their convolutions with a semi-discrete frame.
//!
//! Everything lives on a periodic grid in one or two dimensions:
//!
//! - [`blcore`]: grids, transforms, band-limited signals, lattices, interpolation.
//! - [`frames`]: filter banks, Meyer wavelets, curvelet windows, overlap graphs.
//! - [`sampling`]: sign-blind lattice construction and density bookkeeping.
//! - [`recovery`]: per-band sign retrieval (brute-force oracle and fast solver).
//! - [`stitching`]: cross-band sign matching and the end-to-end pipeline.
//! - [`experiments`]: counterexamples, instability demos, stability probes.
//!
//! Range checks are written as `!(x > 0.0)` so that NaN fails them.
//!
//! ```
//! use sign_retrieval::blcore::{sign_invariant_error, Grid};
//! use sign_retrieval::experiments::random_signal;
//! use sign_retrieval::frames::meyer_frame;
//! use sign_retrieval::recovery::MeasurementSet;
//! use sign_retrieval::sampling::meyer_lattices;
//! use sign_retrieval::stitching::{full_pipeline, PipelineConfig};
//!
//! # fn main() -> sign_retrieval::Result<()> {
//! let grid = Grid::line(1024, 24.0)?;
//! let frame = meyer_frame(4, &grid)?;
//! let lattices = meyer_lattices(&frame, 3.0 / 16.0)?;
//! let f = random_signal(&grid, 5.0, 0.125, 7)?;
//!
//! let measurements = MeasurementSet::measure(&f, &frame, &lattices)?;
//! let (g, _report) = full_pipeline(&measurements, &frame, &PipelineConfig::verified())?;
//! assert!(sign_invariant_error(g.values(), f.values()) < 1e-10);
//! # Ok(())
//! # }
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blcore;
pub mod error;
pub mod experiments;
pub mod frames;
pub mod recovery;
pub mod sampling;
pub mod stitching;

pub use error::{Error, Result};
