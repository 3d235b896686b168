//! Spatial-mode entanglement witnesses for an ideal Bose gas of fixed particle
//! number.
//!
//! The pipeline runs trap modes ([`modes`], [`basis`]) through fixed-N Bose
//! occupations ([`thermal`]) into the normalized one-body density matrix and
//! its region functionals ([`coherence`]), and finally the bipartite purity
//! witness, the detector-coherence witness and the tripartite W witness
//! ([`witness`]). [`oracle`] recomputes every functional by brute-force grid
//! summation.

pub mod basis;
pub mod coherence;
pub mod constants;
pub mod error;
pub mod hermite;
pub mod modes;
pub mod oracle;
pub mod quadrature;
pub mod thermal;
pub mod witness;

pub use basis::{AxisBasis, Interval};
pub use coherence::{
    CoherenceFunctionals, CoherenceOptions, DetectorProfile, DiagonalConvention, SlabPartition,
    Strategy, TripartiteMatrix,
};
pub use error::{Result, WitnessError};
pub use modes::{Mode, ModeSet, TrapSpec};
pub use thermal::{AxialOptions, AxialWeights, GasSpec, ThermalWeights, TransverseReduction};
pub use witness::{BipartiteReport, Classification, EvalOptions, TripartiteReport};
