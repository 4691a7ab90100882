//! Verification toolkit for the exponential Diophantine equation
//! `(2^k - 1)(b^k - 1) = y^q`.

pub mod arith;
pub mod bennett;
pub mod bigstr;
pub mod bounds;
pub mod cfrac;
pub mod checkpoint;
pub mod error;
pub mod interval;
pub mod pool;
pub mod scans;

pub use error::{Error, Result};
