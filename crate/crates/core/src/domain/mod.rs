//! Geometry of the parabolic cylinder, its boundary strip, grids and
//! boundary data.

mod boundary;
mod cylinder;
pub mod expr;
mod grid;

pub use boundary::BoundaryData;
pub use cylinder::{classify, ParabolicCylinder, PointClass, SpaceBox};
pub use expr::Expr;
pub use grid::{make_grid, SpatialGrid};
