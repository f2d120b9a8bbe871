//! Law-of-large-numbers moments and 1/N corrections of empirical spectral
//! measures, computed from the local expansion of Harish-Chandra transforms
//! and Schur generating functions, together with the oracles used to check
//! them: non-crossing partition sums, quadrature of closed-form measures,
//! exact small-N operator identities and random-matrix Monte Carlo.

#![forbid(unsafe_code)]

pub mod error;
pub mod measures;
pub mod models;
pub mod momentengine;
pub mod ncpart;
pub mod rational;
pub mod rmtmc;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
pub use measures::{KFunction, MeasureKind, SpectralMeasure};
pub use momentengine::{AsymptoticInput, ExpansionResult, Side};
pub use ncpart::{CumulantTable, NoncrossingPartition};
pub use rational::PartialFractions;
pub use rmtmc::{EnsembleSpec, MCReport};
pub use series::TruncatedSeries;
pub use verify::{CheckReport, SpectrumPoint};
