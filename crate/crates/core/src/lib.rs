//! Expected game lengths for two-player dreidel variants.
//!
//! The crate computes exact (arbitrary-precision rational) and certified
//! high-precision expected spin counts for the two-outcome and four-outcome
//! two-player dreidel games and for the gambler's-ruin walk, by solving the
//! absorbing-chain hitting-time systems directly. On top of the solvers it
//! provides the experimental-mathematics layer: difference tables, symbolic
//! constant derivations, least-squares asymptotics and error-decay profiles.
//!
//! Modules:
//! * [`arith`] — exact rationals, configurable-precision floats, affine
//!   expressions over model unknowns and small symbolic polynomials,
//! * [`chain`] — state enumeration, hitting-time systems and both solvers,
//! * [`games`] — the three rule sets, the gambler closed form and a
//!   reproducible Monte Carlo simulator,
//! * [`keyeq`] — the pot-2 reformulation: shin-chain expansion, the same-line
//!   identity and the reduced per-line solver,
//! * [`analysis`] — difference tables, constant derivations, fits, error
//!   profiles and the play-time report.

pub mod analysis;
pub mod arith;
pub mod chain;
pub mod games;
pub mod keyeq;
