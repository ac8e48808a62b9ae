//! Eulerian and Lagrangian reduced-order models for transport-dominated
//! parametrized PDEs.
//!
//! Full-order data comes from [`fom`]; [`lagframe`] moves it between frames;
//! [`dmd`] and [`pdmd`] build the linear ROMs; [`analysis`] measures them;
//! [`io`] is the on-disk boundary shared with external compressors.

pub mod analysis;
pub mod dmd;
pub mod error;
pub mod experiments;
pub mod fom;
pub mod io;
pub mod lagframe;
pub mod linalg;
pub mod pdmd;
pub mod rbf;
pub mod snapshot;

pub use error::{Error, Result};
pub use snapshot::{Frame, Grid, Normalization, ParamSet, SnapshotSet, TimeAxis};
