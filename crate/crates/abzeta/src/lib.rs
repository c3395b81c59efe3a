//! Zeta functions counting finite-index subgroups of almost Bieberbach groups
//! modelled on the Heisenberg group.

pub mod error;
pub mod groupalg;
pub mod congruence;
pub mod membership;
pub mod ratfunc;
pub mod oracle;
pub mod catalog;
pub mod series;

pub use error::Error;
pub use groupalg::{nk_mul, AutomorphismSpec, GroupElement, NkElement, Presentation};
pub use ratfunc::{PolyUX, RationalUX};
