//! Fixtures shared by the benchmarks.

use abzeta::catalog::{self, FamilySpec};

/// One representative per holonomy shape.
pub fn representatives() -> Vec<FamilySpec> {
    [("N", Some(2)), ("G2", None), ("G3", None), ("G6", None), ("p4E", Some(1)), ("p6H", Some(1))]
        .into_iter()
        .map(|(n, q)| catalog::family(n, q).expect("valid family"))
        .collect()
}
