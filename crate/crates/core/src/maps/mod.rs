//! Interval maps, map sequences and skew-products.

pub mod interval;
pub mod sequence;
pub mod skew;

pub use interval::{bisect_root, schwarzian, Family, IntervalDomain, IntervalMap};
pub use sequence::{estimate_modulus, fiber_sequence, MapSequence};
pub use skew::{
    verify_partial_hyperbolicity, BaseMap, Domination, DominationReport, FiberFamily, SkewPoint, SkewProduct,
};
