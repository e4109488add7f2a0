//! Numerical laboratory for pseudo-Anosov Reeb dynamics on mapping tori.
//!
//! The crate is organized as a pipeline. `expr` parses the small formula
//! language used by config files. `models` holds the local dynamics: plane
//! sector maps with prong singularities, hyperbolic torus automorphisms and
//! their unit-roof suspensions. `contact` builds singular chart forms,
//! smooths them near the prong axis and verifies the contact condition on
//! grids. `flow` integrates Reeb fields and finds periodic orbits through
//! return maps. `lefschetz` computes fixed point indices by winding numbers
//! and checks that index sums survive perturbation. `census` enumerates
//! periodic orbits of torus automorphisms exactly, with homotopy class keys
//! and growth statistics. `chain` does the chain-level bookkeeping: Euler
//! characteristics split by grading, nonvanishing and hypertightness
//! certificates, torsion tube generators and growth of the count filtered
//! by action.

pub mod census;
pub mod chain;
pub mod contact;
pub mod expr;
pub mod flow;
pub mod lefschetz;
pub mod models;
pub mod numeric;
pub mod snf;

pub use census::{Census, HomotopyClassKey, OrbitRecord};
pub use chain::{ChainCase, ChainSummary};
pub use contact::{ChartContactForm, GridSpec, SmoothingChart, SmoothingFunction};
pub use expr::{Binding, Expression, Var};
pub use flow::{FlowModel, Section, Trajectory};
pub use lefschetz::{FlowOrbitCensus, OrbitType};
pub use models::{StandardPaMap, SuspensionFlow, TorusAutomorphism};
