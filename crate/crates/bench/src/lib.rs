//! Shared fixtures for the benchmarks.

use copoly_core::{diblock, parse_sequence, Copolymer, PhasePoint};

/// Sequences of increasing period used across benchmarks.
pub fn fixtures() -> Vec<(&'static str, Copolymer)> {
    vec![
        ("diblock2", Copolymer::new(parse_sequence("++--").unwrap())),
        ("diblock8", Copolymer::new(diblock(8).unwrap())),
        ("diblock32", Copolymer::new(diblock(32).unwrap())),
    ]
}

pub fn localized_point() -> PhasePoint {
    PhasePoint::new(1.0, 0.0).unwrap()
}

pub fn delocalized_point() -> PhasePoint {
    PhasePoint::new(1.0, 1.2).unwrap()
}
