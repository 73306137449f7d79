//! Integration of gradient (normal) fields into depth maps over masked pixel
//! domains.

pub mod anisotropic;
pub mod domain;
pub mod error;
pub mod fields;
pub mod flatten;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod mumford_shah;
pub mod noise;
pub mod nonconvex;
pub mod normals;
pub mod operators;
pub mod pipeline;
pub mod quadratic;
pub mod raster;
pub mod sparse;
pub mod synthetic;
pub mod tv;

pub use error::{Error, ErrorClass, Result};
