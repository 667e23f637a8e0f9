//! Periodic copolymers at a selective interface: transfer-matrix free
//! energy, critical curve, asymptotic constants and a finite-`N` oracle.
//!
//! ```
//! use copoly_core::{parse_sequence, solve_b_tilde, Copolymer, PhasePoint};
//!
//! let model = Copolymer::new(parse_sequence("++--").unwrap());
//! let r = solve_b_tilde(&model, PhasePoint::new(1.0, 0.0).unwrap()).unwrap();
//! assert!(r.b_tilde > 0.3);
//! ```

pub mod error;
pub mod free_energy;
pub mod measure;
pub mod model;
pub mod oracle;
pub mod perron;
pub mod phase;
pub mod return_law;
pub mod sequence;
pub mod transfer;

pub use error::{Error, Result};
pub use free_energy::{solve_b_tilde, variational_check, FreeEnergyResult, VariationalCheck};
pub use measure::{ExcursionMeasure, Triple};
pub use model::Copolymer;
pub use oracle::{
    excursion_stats, free_energy_estimate, log_partition_exact, log_partition_exact_bounded,
    sample_paths, tail_decay_check, EmpiricalStats, FreeEnergyEstimate, PathSample, PathSampler,
    TailFit,
};
pub use perron::{perron, EigenData};
pub use phase::{
    classify, critical_h, evaluate, m_big_omega, m_omega, sweep_curve, z_hat, CriticalPoint,
    CurveSweep, Phase, PhaseEvaluation,
};
pub use return_law::{ReturnLaw, C_K};
pub use sequence::{diblock, parse_sequence, switched_alternating, PeriodicSequence, XiMatrix};
pub use transfer::{mean_excursion, phi, phi_tilde, PhasePoint};
