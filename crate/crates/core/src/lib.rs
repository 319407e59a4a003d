//! Horizontal p-adic measures on finite abelian groups and the horizontal p-adic
//! L-functions of elliptic curves, computed exactly at finite truncation.

pub mod arith;
pub mod arithstat;
pub mod curves;
pub mod cyclotomic;
pub mod dirichlet;
pub mod error;
pub mod fpcurve;
pub mod groupmeasure;
pub mod horizontal;
pub mod kurihara;
pub mod modsym;
pub mod numeric;
pub mod properties;
pub mod suites;

pub use cyclotomic::{CycNumber, ValQ};
pub use error::{Error, Result};
