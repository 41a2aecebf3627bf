//! Constants behind the built-in `paper-sec5` preset: a five-compartment
//! Metzler/Hurwitz cascade driving the four canonical IFFMs, three initial
//! intermediate states, horizon 1.5, and a 121-point log grid over
//! `[1e-3, 1e3]`.

use nalgebra::{DMatrix, DVector};

use crate::linsys::LinearSubsystem;
use crate::motifs::{InitialPolicy, MotifKind, MotifSpec, X0Policy, Y0Policy};

pub const D: f64 = 1.2;
pub const BETA: f64 = 1.5;
pub const K_M: f64 = 0.8;
pub const HORIZON: f64 = 1.5;
/// Accepted in configs for completeness; enters no equation.
pub const GAMMA: f64 = 0.8;

pub const GRID_MIN: f64 = 1e-3;
pub const GRID_MAX: f64 = 1e3;
pub const GRID_POINTS: usize = 121;

pub fn matrix_a() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        5,
        &[
            -3.0, 0.8, 0.0, 0.0, 0.0, //
            0.4, -2.6, 0.7, 0.0, 0.0, //
            0.0, 0.5, -2.8, 0.6, 0.0, //
            0.0, 0.0, 0.4, -2.3, 0.7, //
            0.0, 0.0, 0.0, 0.3, -1.7,
        ],
    )
}

pub fn vector_b() -> DVector<f64> {
    DVector::from_row_slice(&[1.0, 0.8, 0.9, 0.7, 0.6])
}

pub fn coupling() -> DVector<f64> {
    DVector::from_row_slice(&[0.9, 0.7, 0.8, 0.6, 0.5])
}

pub fn subsystem() -> LinearSubsystem {
    LinearSubsystem::new(matrix_a(), vector_b()).expect("preset subsystem must validate")
}

/// The three initial intermediate states, indexed 1..=3.
pub fn x0(index: usize) -> DVector<f64> {
    match index {
        1 => DVector::zeros(5),
        2 => DVector::from_row_slice(&[0.5, 0.6, 0.7, 0.8, 0.9]),
        3 => DVector::from_row_slice(&[2.0, 2.1, 2.3, 2.4, 2.5]),
        _ => panic!("preset x0 index must be 1..=3, got {index}"),
    }
}

/// Parameterized motif for IFFM `1..=4`.
pub fn motif(iffm_index: u8) -> MotifSpec {
    let kind = MotifKind::from_iffm_index(iffm_index)
        .unwrap_or_else(|| panic!("IFFM index must be 1..=4, got {iffm_index}"));
    MotifSpec::new(kind, coupling(), D, BETA, K_M).expect("preset motif must validate")
}

/// Output start rule used by the preset: adapted steady state for IFFM1 and
/// IFFM3, Michaelis start for IFFM2 and IFFM4.
pub fn y0_policy(kind: MotifKind) -> Y0Policy {
    match kind.iffm_index() {
        Some(1) | Some(3) => Y0Policy::AdaptedSteadyState,
        Some(2) | Some(4) => Y0Policy::MichaelisStart,
        _ => Y0Policy::AdaptedSteadyState,
    }
}

/// The three initial policies the preset runs for a given motif.
pub fn inits_for(kind: MotifKind) -> Vec<InitialPolicy> {
    (1..=3)
        .map(|i| InitialPolicy::new(X0Policy::Explicit(x0(i)), y0_policy(kind)))
        .collect()
}
