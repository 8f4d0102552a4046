//! Experimental-mathematics layer: difference tables, symbolic constant
//! derivation, least-squares asymptotics, error-decay profiles and the
//! practical play-time report.

mod fit;
mod symbolic;

pub use fit::{
    eval_model, fit_full, fit_simplified, FitResult, GridBounds, ModelCoefficients, SCoefficients,
};
pub use symbolic::{
    bilinear_model, derive_constants_recurrence, pot_model, verify_conjecture_in_key, CaseSplit,
    ConjectureCheck, SymbolicError,
};

use crate::arith::{rat, ratio, ArithError, BigFloat, Rational};
use crate::chain::{ChainError, Engine, GameState, SolveMode, SpinValue};
use crate::games::Game;
use crate::keyeq::KeyError;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("empty or inverted fit grid")]
    EmptyGrid,
    #[error("degenerate fit: normal equations are singular")]
    DegenerateFit,
    #[error("pot offset requested but the model has no pot coefficients")]
    MissingPotCoefficients,
    #[error("a play-time report needs at least 2 nuts per player")]
    TooFewNuts,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

/// Difference direction over the state space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `D(a+1,p,b) - D(a,p,b)`
    DeltaA,
    /// `D(a,p,b+1) - D(a,p,b)`
    DeltaB,
    /// second difference in `a`
    Delta2A,
    /// second difference in `b`
    Delta2B,
    /// `D(a,p+1,b) - D(a,p,b)`
    PotDelta,
}

/// A run of exact or high-precision differences along one direction.
#[derive(Clone, Debug)]
pub struct DifferenceTable {
    pub direction: Direction,
    pub base: GameState,
    pub entries: Vec<SpinValue>,
}

fn value_sub(x: &SpinValue, y: &SpinValue) -> SpinValue {
    match (x, y) {
        (SpinValue::Exact(a), SpinValue::Exact(b)) => SpinValue::Exact(a - b),
        _ => {
            let (xv, xe) = to_float_pair(x);
            let (yv, ye) = to_float_pair(y);
            // bounds add: a first difference carries twice the solve bound
            SpinValue::HiPrec { value: xv.sub(&yv), error: xe.add(&ye) }
        }
    }
}

fn to_float_pair(v: &SpinValue) -> (BigFloat, BigFloat) {
    match v {
        SpinValue::Exact(r) => (BigFloat::from_rational(r, 256), BigFloat::zero(64)),
        SpinValue::HiPrec { value, error } => (value.clone(), error.clone()),
    }
}

/// Exact (or high-precision) differences starting at `base`, stepping the
/// direction's index; `len` entries.
pub fn difference_table(
    engine: &Engine,
    game: Game,
    direction: Direction,
    base: GameState,
    len: u32,
    mode: &SolveMode,
) -> Result<DifferenceTable, AnalysisError> {
    let at = |a: u32, p: u32, b: u32| engine.expected_spins(game, GameState::new(a, p, b), mode);
    let mut entries = Vec::with_capacity(len as usize);
    for k in 0..len {
        let GameState { a, p, b } = base;
        let entry = match direction {
            Direction::DeltaA => value_sub(&at(a + k + 1, p, b)?, &at(a + k, p, b)?),
            Direction::DeltaB => value_sub(&at(a, p, b + k + 1)?, &at(a, p, b + k)?),
            Direction::Delta2A => {
                let first = value_sub(&at(a + k + 1, p, b)?, &at(a + k, p, b)?);
                let second = value_sub(&at(a + k + 2, p, b)?, &at(a + k + 1, p, b)?);
                value_sub(&second, &first)
            }
            Direction::Delta2B => {
                let first = value_sub(&at(a, p, b + k + 1)?, &at(a, p, b + k)?);
                let second = value_sub(&at(a, p, b + k + 2)?, &at(a, p, b + k + 1)?);
                value_sub(&second, &first)
            }
            Direction::PotDelta => value_sub(&at(a, p + k + 1, b)?, &at(a, p + k, b)?),
        };
        entries.push(entry);
    }
    Ok(DifferenceTable { direction, base, entries })
}

/// Model error at a single point: `ε(a,b) = value(a, 2, b) - model(a, b)`.
pub fn epsilon(
    engine: &Engine,
    game: Game,
    coeffs: &ModelCoefficients,
    a: u32,
    b: u32,
    mode: &SolveMode,
) -> Result<Rational, AnalysisError> {
    let value = engine.expected_spins(game, GameState::new(a, 2, b), mode)?;
    Ok(value.to_rational() - eval_model(coeffs, a, b, None)?)
}

/// Model errors along the diagonal with their step-to-step decay ratios.
#[derive(Clone, Debug)]
pub struct ErrorProfile {
    pub eps: BTreeMap<(u32, u32), Rational>,
    /// `(k, |ε(k+1,k+1)| / |ε(k,k)|)`
    pub decay_ratios: Vec<(u32, Rational)>,
    pub band: (Rational, Rational),
    /// All ratios inside the acceptance band around the nominal 1/4 decay.
    pub ratios_in_band: bool,
}

/// Diagonal error profile on `k_min ..= k_max`. The decay band `[1/8, 1/2]`
/// brackets the expected quarter rate while tolerating lower-order terms.
pub fn error_profile(
    engine: &Engine,
    game: Game,
    coeffs: &ModelCoefficients,
    k_min: u32,
    k_max: u32,
    mode: &SolveMode,
) -> Result<ErrorProfile, AnalysisError> {
    let mut eps = BTreeMap::new();
    for k in k_min..=k_max {
        eps.insert((k, k), epsilon(engine, game, coeffs, k, k, mode)?);
    }
    let band = (ratio(1, 8), ratio(1, 2));
    let mut decay_ratios = Vec::new();
    let mut ratios_in_band = true;
    for k in k_min..k_max {
        let num = eps[&(k + 1, k + 1)].abs();
        let den = eps[&(k, k)].abs();
        if den.is_zero() {
            ratios_in_band = false;
            continue;
        }
        let r = num / den;
        if r < band.0 || r > band.1 {
            ratios_in_band = false;
        }
        decay_ratios.push((k, r));
    }
    Ok(ErrorProfile { eps, decay_ratios, band, ratios_in_band })
}

/// Average play time in minutes when both players start with
/// `nuts_per_player` nuts: each antes one, so the game starts at
/// `(nuts-1, 2, nuts-1)`.
pub fn duration_report(
    engine: &Engine,
    nuts_per_player: u32,
    seconds_per_spin: &Rational,
    mode: &SolveMode,
) -> Result<BigFloat, AnalysisError> {
    if nuts_per_player < 2 {
        return Err(AnalysisError::TooFewNuts);
    }
    let a = nuts_per_player - 1;
    let q = engine.expected_spins(Game::Full, GameState::new(a, 2, a), mode)?;
    let minutes = q.to_rational() * seconds_per_spin / rat(60);
    Ok(BigFloat::from_rational(&minutes, 256))
}
