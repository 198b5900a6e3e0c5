//! Exact computation for constant-length-2 substitutions on `{0,1}`-colored
//! infinite binary trees, centered on the Jacaranda tree.
//!
//! - [`tree`]: prefixes, the substitution map, fixed points, the shift action
//!   and the tree ultrametric.
//! - [`structure`]: the line map `chi`, odd/even type classification and the
//!   inverse (source) maps.
//! - [`complexity`]: exact patch enumeration and complexity tables.
//! - [`aperiodicity`]: finite-depth stabilizer refutation certificates.
//! - [`entropy`]: entropy estimators and the skew-product bounds.

pub mod address;
pub mod aperiodicity;
pub mod bits;
pub mod complexity;
pub mod entropy;
pub mod error;
pub mod shared;
pub mod structure;
pub mod tree;

pub use address::{Address, Letter};
pub use bits::Bits;
pub use error::{Error, Result};
pub use tree::{Dyadic, RootImage, Substreetution, TreePrefix};
