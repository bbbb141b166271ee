pub mod data;
pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod field;
pub mod fit;
pub mod galerkin;
pub mod geometry;
pub mod regime;
pub mod solver2d;
pub mod snapshot;
pub mod solver3d;
pub mod spectral;
pub mod transport;
pub mod vertical;
