//! Hitting times and hitting probabilities for continuous-time quantum walks
//! on finite undirected graphs, measured at the event times of a Poisson
//! process.
//!
//! The walk evolves under `H = D - A` (degree minus adjacency) and is probed
//! for presence at a final vertex `v_f` at rate `λ`. Closed forms for the
//! expected hitting time `τ_h` and the total hitting probability `p_h` are
//! obtained by linear solves against the superoperator pencil
//! `N_λ = L_λ - Q_f`, with a pseudoinverse whenever the pencil is singular.
//! Singularity (infinite hitting times) is detected three independent ways:
//! a non-empty dark subspace, a vanishing smallest singular value, and the
//! disconnected-complement construction.
//!
//! Every numeric routine is generic over a [`Real`] scalar (`f32` or `f64`);
//! the `*64` aliases at the crate root pin the double-precision instances the
//! tolerances in this crate are tuned for.

// `!(x > 0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixtures;
pub mod graph;
pub mod hitting;
pub mod scalar;
pub mod spectral;
pub mod superop;
pub mod trajectory;

pub use error::{Error, Result};
pub use graph::{Graph, HermitianMatrix};
pub use hitting::{
    Asymptotics, DarkSubspace, HittingMatrices, HittingReport, HittingTime, InfiniteDiagnosis,
    SweepPoint,
};
pub use scalar::Real;
pub use spectral::Spectrum;
pub use superop::{MeasurementSetup, Superoperator};
pub use trajectory::{MasterEquationEstimate, SurvivalCurve, TrajectoryStats};

/// Complex scalar used for states and operators.
pub type Complex<T> = nalgebra::Complex<T>;
/// Dense complex matrix.
pub type CMatrix<T> = nalgebra::DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVector<T> = nalgebra::DVector<Complex<T>>;

pub type HermitianMatrix64 = HermitianMatrix<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type Superoperator64 = Superoperator<f64>;
pub type MeasurementSetup64 = MeasurementSetup<f64>;
pub type HittingReport64 = HittingReport<f64>;
pub type HittingMatrices64 = HittingMatrices<f64>;
pub type DarkSubspace64 = DarkSubspace<f64>;
pub type CMatrix64 = CMatrix<f64>;
pub type CVector64 = CVector<f64>;
pub type Complex64 = Complex<f64>;

pub type HermitianMatrix32 = HermitianMatrix<f32>;
pub type Spectrum32 = Spectrum<f32>;
