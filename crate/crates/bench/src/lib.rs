//! Shared inputs for the criterion benchmarks.

use posmap_core::states::{isotropic, random_schmidt_bounded, tiles_upb_state};
use posmap_core::{ComplexMatrix, PositiveMapSpec};

/// Two-qutrit states covering a pure-ish, a bound entangled and a random mixed input.
pub fn gallery() -> Vec<(&'static str, ComplexMatrix)> {
    vec![
        ("isotropic_0.8", isotropic(3, 0.8).expect("isotropic")),
        ("tiles", tiles_upb_state()),
        (
            "random_sn2",
            random_schmidt_bounded(3, 2, 4, 1).expect("sample").state,
        ),
    ]
}

pub fn maps() -> Vec<PositiveMapSpec> {
    vec![
        PositiveMapSpec::reduction(0.5, 3).expect("reduction"),
        PositiveMapSpec::choi(),
        PositiveMapSpec::breuer_hall(posmap_core::maps::example_breuer_hall_u()).expect("U"),
    ]
}
