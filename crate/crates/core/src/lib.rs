//! Numerical toolkit for operator spaces: matrix norms at every level,
//! completely bounded maps, categorical constructions, tensor products,
//! trace-class spaces, direct limits and coalgebras.

pub mod affine;
pub mod category;
pub mod coalgebra;
pub mod colimit;
pub mod config;
pub mod dual;
pub mod element;
pub mod error;
pub mod interval;
pub mod maps;
pub mod matrix;
pub mod rng;
pub mod space;
pub mod svd;
pub mod tensor;
pub mod trace_class;

pub use error::{OpError, Result};
pub use interval::{Interval, Status};
pub use matrix::{CMat, C64};
pub use element::LevelElement;
pub use maps::{OSMap, Verdict, Witness};
pub use space::OSpace;
