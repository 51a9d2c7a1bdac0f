//! Simulation engine for quantized detector networks.
//!
//! A quantized detector network assigns one qubit to every place an
//! apparatus could register new information. The joint state of those
//! qubits, the labstate, starts in the void state |0...0), is prepared by
//! throwing a preparation switch, and evolves stage by stage through
//! creation-operator rewrite rules that must conserve probability
//! (semi-unitarity). Outcome probabilities follow from the Born rule on the
//! final labstate.
//!
//! The crate provides:
//!
//! - [`register`]: registers, basis encoding, signal monomials, sparse
//!   labstates, Born probabilities and rank-p subspace combinatorics;
//! - [`stage`]: stage maps, semi-unitarity validation, program execution,
//!   path-integral amplitudes (with a brute-force enumeration oracle) and
//!   effective POVM extraction;
//! - [`experiments`]: preset networks for Stern-Gerlach, PVM tests, slit
//!   interference, EPR pairs, two-photon interferometry and products of
//!   independent experiments;
//! - [`netdef`]: the `.qdn.json` network definition format and probability
//!   table emission (JSON/CSV);
//! - [`oracle`]: a dense reference evolution for cross-checks.
//!
//! ```
//! use num_complex::Complex64;
//! use qdn::experiments::stern_gerlach;
//!
//! let program = stern_gerlach(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap();
//! let output = program.run().unwrap();
//! let up = qdn::SignalMonomial::from_indices(&[1]).unwrap();
//! assert!((output.table.probability(&up) - 0.36).abs() < 1e-12);
//! ```

pub mod error;
pub mod experiments;
pub mod netdef;
pub mod oracle;
pub mod register;
pub mod stage;

pub use error::QdnError;
pub use register::{
    BasisIndex, Labstate, ProbabilityTable, RegisterSpec, SignalMonomial, TableRow,
};
pub use stage::{
    NetworkProgram, Passthrough, PovmEffect, RewriteRule, RunOutput, StageMap, ValidationReport,
};
