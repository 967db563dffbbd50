//! The DPP operator and the exact time-slice recursion.

mod directions;
mod field;
mod frame;
mod operator;
mod params;
mod quadrature;
mod solver;

pub use directions::{direction_set, DirectionSet};
pub use field::{read_field_csv, Field, FieldCsvWriter, FieldSidecar};
pub use frame::{minimal_rotation, orthonormal_frame, paired_frames, Frame};
pub use operator::{averaging_fn, averaging_op, midrange_fn, midrange_op, Midrange};
pub use params::DppParams;
pub use quadrature::{disk_quadrature, gauss_legendre, DiskQuadrature};
pub use solver::{solve, SliceSink, Solver};
