//! Generic absorbing-chain engine: enumerate the conserved-total state
//! space of a rule set, assemble the expected-absorption-time system
//! `(I - P) x = 1`, and solve it exactly or in certified high precision.
//!
//! The conserved total `a + p + b` partitions every rule set into finite
//! independent systems, so all solving and caching is per `(game, total)`.

mod cache_io;
mod exact;
mod hiprec;

pub use cache_io::{read_jsonl, table_records, write_jsonl, CacheRecord};
pub use exact::solve_exact;
pub use hiprec::{solve_hiprec, HiprecSolution, DEFAULT_ITERATION_CAP};

use crate::arith::{parse_decimal, parse_rational, rat, BigFloat, Rational};
use crate::games::{Game, GameError};
use num_traits::Zero;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("conserved totals below 2 have no spinnable states")]
    EmptyDomain,
    #[error("singular hitting-time system: absorption is not certain from every state")]
    Singular,
    #[error("no convergence within {0} sweeps; tolerance too small for the precision")]
    NoConvergence(u64),
    #[error("state {state} is not part of the {game} total-{total} table")]
    MissingState { game: &'static str, total: u32, state: GameState },
    #[error(transparent)]
    Rules(#[from] GameError),
    #[error("cache data: {0}")]
    Cache(String),
}

/// (spinner, pot, waiting player) with every field a nut count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GameState {
    pub a: u32,
    pub p: u32,
    pub b: u32,
}

impl GameState {
    pub fn new(a: u32, p: u32, b: u32) -> Self {
        GameState { a, p, b }
    }

    /// The conserved quantity.
    pub fn total(&self) -> u32 {
        self.a + self.p + self.b
    }

    /// Either player out of nuts ends the game.
    pub fn is_absorbing(&self) -> bool {
        self.a == 0 || self.b == 0
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.p, self.b)
    }
}

/// Where one branch of a spin lands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Successor {
    Absorb,
    State(GameState),
}

impl Successor {
    pub fn from_state(s: GameState) -> Self {
        if s.is_absorbing() {
            Successor::Absorb
        } else {
            Successor::State(s)
        }
    }
}

/// The branch distribution of one spin from one state.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionLaw {
    pub branches: Vec<(Rational, Successor)>,
}

impl TransitionLaw {
    /// Branch probabilities must be positive and sum to exactly one.
    pub fn new(branches: Vec<(Rational, Successor)>) -> Self {
        let mut sum = rat(0);
        for (p, _) in &branches {
            assert!(*p > rat(0), "branch probability must be positive");
            sum += p;
        }
        assert_eq!(sum, rat(1), "branch probabilities must sum to 1");
        TransitionLaw { branches }
    }
}

/// Every non-absorbing state with the given conserved total, in
/// lexicographic (a, p) order. The enumeration is the same for every rule
/// set; the rules only decide the transition structure on top of it.
pub fn enumerate_states(total: u32) -> Result<Vec<GameState>, ChainError> {
    if total < 2 {
        return Err(ChainError::EmptyDomain);
    }
    let mut out = Vec::with_capacity((total as usize) * (total as usize - 1) / 2);
    for a in 1..total {
        for p in 0..=(total - a - 1) {
            out.push(GameState { a, p, b: total - a - p });
        }
    }
    Ok(out)
}

/// The linear system `(I - P) x = 1` restricted to non-absorbing states.
/// Rows are sorted by column and keep the diagonal; absorbing successors
/// simply drop out (their expected remaining spins is zero).
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub game: Game,
    pub total: u32,
    pub states: Vec<GameState>,
    index: HashMap<GameState, usize>,
    rows: Vec<Vec<(usize, Rational)>>,
}

impl SparseSystem {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &GameState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn row(&self, i: usize) -> &[(usize, Rational)] {
        &self.rows[i]
    }
}

/// Assemble the hitting-time system for one conserved total.
pub fn build_system(game: Game, total: u32) -> Result<SparseSystem, ChainError> {
    let states = enumerate_states(total)?;
    let index: HashMap<GameState, usize> =
        states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut rows = Vec::with_capacity(states.len());
    for s in &states {
        let law = game.transitions(*s)?;
        let mut row: Vec<(usize, Rational)> = Vec::with_capacity(law.branches.len() + 1);
        let mut insert = |col: usize, delta: Rational| {
            match row.binary_search_by_key(&col, |(c, _)| *c) {
                Ok(pos) => {
                    row[pos].1 += delta;
                    if row[pos].1.is_zero() {
                        row.remove(pos);
                    }
                }
                Err(pos) => row.insert(pos, (col, delta)),
            }
        };
        insert(index[s], rat(1));
        for (prob, succ) in &law.branches {
            if let Successor::State(t) = succ {
                let col = *index.get(t).unwrap_or_else(|| {
                    panic!("successor {t} of {s} escapes total {total}")
                });
                insert(col, -prob.clone());
            }
        }
        rows.push(row);
    }
    Ok(SparseSystem { game, total, states, index, rows })
}

/// One solved expectation: exact rational, or high-precision with a
/// certified absolute error bound.
#[derive(Clone, Debug, PartialEq)]
pub enum SpinValue {
    Exact(Rational),
    HiPrec { value: BigFloat, error: BigFloat },
}

impl SpinValue {
    /// The value as a rational; exact values verbatim, high-precision ones
    /// as the (dyadic) rational they carry.
    pub fn to_rational(&self) -> Rational {
        match self {
            SpinValue::Exact(r) => r.clone(),
            SpinValue::HiPrec { value, .. } => value.to_rational(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            SpinValue::Exact(r) => crate::arith::rational_to_f64(r),
            SpinValue::HiPrec { value, .. } => value.to_f64(),
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            SpinValue::Exact(r) => Some(r),
            SpinValue::HiPrec { .. } => None,
        }
    }
}

/// How a table was (or should be) produced.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SolveMode {
    Exact,
    HiPrec { precision_bits: u32, tol: BigFloat },
}

impl SolveMode {
    /// 256 bits, residual tolerance 10^-30.
    pub fn hiprec_default() -> Self {
        Self::hiprec(crate::arith::BigFloat::from_rational(
            &crate::arith::pow10_rational(-30),
            64,
        ))
    }

    pub fn hiprec(tol: BigFloat) -> Self {
        SolveMode::HiPrec { precision_bits: crate::arith::DEFAULT_PRECISION_BITS, tol }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SolveMode::Exact => "exact",
            SolveMode::HiPrec { .. } => "hiprec",
        }
    }
}

#[derive(Clone, Debug)]
enum TableValues {
    Exact(Vec<Rational>),
    HiPrec { values: Vec<BigFloat>, error: BigFloat },
}

/// Expected-spins table for one `(game, total)` slice.
#[derive(Clone, Debug)]
pub struct SpinTable {
    pub game: Game,
    pub total: u32,
    pub mode: SolveMode,
    pub states: Vec<GameState>,
    index: HashMap<GameState, usize>,
    values: TableValues,
}

impl SpinTable {
    /// Value for a state of this table's total. Absorbing states are exact
    /// zero in either mode.
    pub fn get(&self, s: &GameState) -> Result<SpinValue, ChainError> {
        if s.total() != self.total {
            return Err(ChainError::MissingState {
                game: self.game.id(),
                total: self.total,
                state: *s,
            });
        }
        if s.is_absorbing() {
            return Ok(SpinValue::Exact(rat(0)));
        }
        let i = self.index.get(s).ok_or(ChainError::MissingState {
            game: self.game.id(),
            total: self.total,
            state: *s,
        })?;
        Ok(self.value_at(*i))
    }

    pub fn value_at(&self, i: usize) -> SpinValue {
        match &self.values {
            TableValues::Exact(v) => SpinValue::Exact(v[i].clone()),
            TableValues::HiPrec { values, error } => SpinValue::HiPrec {
                value: values[i].clone(),
                error: error.clone(),
            },
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (GameState, SpinValue)> + '_ {
        self.states.iter().enumerate().map(|(i, s)| (*s, self.value_at(i)))
    }

    /// Certified max-error bound for high-precision tables.
    pub fn error_bound(&self) -> Option<&BigFloat> {
        match &self.values {
            TableValues::Exact(_) => None,
            TableValues::HiPrec { error, .. } => Some(error),
        }
    }
}

/// Solve the table for one `(game, total)` in the requested mode.
pub fn solve_table(game: Game, total: u32, mode: &SolveMode) -> Result<SpinTable, ChainError> {
    let system = build_system(game, total)?;
    let values = match mode {
        SolveMode::Exact => TableValues::Exact(solve_exact(&system)?),
        SolveMode::HiPrec { precision_bits, tol } => {
            let sol = solve_hiprec(&system, *precision_bits, tol, DEFAULT_ITERATION_CAP)?;
            TableValues::HiPrec { values: sol.values, error: sol.error_bound }
        }
    };
    Ok(SpinTable {
        game,
        total,
        mode: mode.clone(),
        index: system.index,
        states: system.states,
        values,
    })
}

type CacheKey = (Game, u32, SolveMode);
type PointKey = (Game, GameState, &'static str);

/// Solver front-end with a per-(game, total, mode) result cache.
///
/// Tables for distinct totals are independent; the cache map is the only
/// shared structure and all access goes through its lock. Values loaded
/// from a cache file are held point-wise and served without recomputation.
#[derive(Default)]
pub struct Engine {
    tables: Mutex<HashMap<CacheKey, Arc<SpinTable>>>,
    preloaded: Mutex<HashMap<PointKey, SpinValue>>,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    /// The full table for one conserved total, cached.
    pub fn table(&self, game: Game, total: u32, mode: &SolveMode) -> Result<Arc<SpinTable>, ChainError> {
        let key = (game, total, mode.clone());
        if let Some(t) = self.tables.lock().unwrap().get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(solve_table(game, total, mode)?);
        let mut guard = self.tables.lock().unwrap();
        let entry = guard.entry(key).or_insert_with(|| Arc::clone(&table));
        Ok(Arc::clone(entry))
    }

    /// Expected spins from one state; zero for absorbing states, otherwise
    /// solved (with caching) via the state's conserved-total system.
    pub fn expected_spins(
        &self,
        game: Game,
        state: GameState,
        mode: &SolveMode,
    ) -> Result<SpinValue, ChainError> {
        if state.is_absorbing() {
            return Ok(SpinValue::Exact(rat(0)));
        }
        if let Some(v) = self
            .preloaded
            .lock()
            .unwrap()
            .get(&(game, state, mode.tag()))
        {
            return Ok(v.clone());
        }
        self.table(game, state.total(), mode)?.get(&state)
    }

    /// Every table solved so far, for cache persistence.
    pub fn solved_tables(&self) -> Vec<Arc<SpinTable>> {
        self.tables.lock().unwrap().values().cloned().collect()
    }

    /// Ingest cache-file records; later queries for these points are served
    /// verbatim.
    pub fn preload(&self, records: &[CacheRecord], precision_bits: u32) -> Result<usize, ChainError> {
        let mut map = self.preloaded.lock().unwrap();
        for rec in records {
            let game = Game::parse(&rec.game)
                .ok_or_else(|| ChainError::Cache(format!("unknown game {:?}", rec.game)))?;
            let state = GameState::new(rec.a, rec.p, rec.b);
            let value = match rec.mode.as_str() {
                "exact" => SpinValue::Exact(
                    parse_rational(&rec.value)
                        .map_err(|e| ChainError::Cache(e.to_string()))?,
                ),
                "hiprec" => {
                    let v = parse_decimal(&rec.value)
                        .map_err(|e| ChainError::Cache(e.to_string()))?;
                    let err = match &rec.error {
                        Some(e) => parse_decimal(e)
                            .map_err(|e| ChainError::Cache(e.to_string()))?,
                        None => Rational::zero(),
                    };
                    SpinValue::HiPrec {
                        value: BigFloat::from_rational(&v, precision_bits),
                        error: BigFloat::from_rational(&err, 64),
                    }
                }
                other => {
                    return Err(ChainError::Cache(format!("unknown mode {other:?}")));
                }
            };
            map.insert((game, state, if rec.mode == "exact" { "exact" } else { "hiprec" }), value);
        }
        Ok(map.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    fn st(a: u32, p: u32, b: u32) -> GameState {
        GameState::new(a, p, b)
    }

    #[test]
    fn enumeration_order_and_counts() {
        assert_eq!(
            enumerate_states(3).unwrap(),
            vec![st(1, 0, 2), st(1, 1, 1), st(2, 0, 1)]
        );
        assert_eq!(enumerate_states(2).unwrap(), vec![st(1, 0, 1)]);
        // total 6: fifteen states, ten of them with a nonempty pot
        let six = enumerate_states(6).unwrap();
        assert_eq!(six.len(), 15);
        assert_eq!(six.iter().filter(|s| s.p >= 1).count(), 10);
        assert!(matches!(enumerate_states(1), Err(ChainError::EmptyDomain)));
        // deterministic lexicographic (a, p) order
        let states = enumerate_states(8).unwrap();
        let mut sorted = states.clone();
        sorted.sort_by_key(|s| (s.a, s.p));
        assert_eq!(states, sorted);
    }

    #[test]
    fn system_rows_match_hand_derivations() {
        let sys = build_system(Game::Simplified, 6).unwrap();
        // (1,4,1): both branches absorb, so the row is x = 1
        let i = sys.index_of(&st(1, 4, 1)).unwrap();
        assert_eq!(sys.row(i), &[(i, rat(1))]);
        // (1,2,2) inside total 5: gimel maps back to itself, shin absorbs
        let sys5 = build_system(Game::Simplified, 5).unwrap();
        let i = sys5.index_of(&st(1, 2, 2)).unwrap();
        assert_eq!(sys5.row(i), &[(i, ratio(1, 2))]);
        // full (1,1,1): hay and nun both return to the state
        let sys3 = build_system(Game::Full, 3).unwrap();
        let i = sys3.index_of(&st(1, 1, 1)).unwrap();
        assert_eq!(sys3.row(i), &[(i, ratio(1, 2))]);
    }

    #[test]
    fn expected_spins_boundary_and_cache_coherence() {
        let engine = Engine::new();
        let zero = engine
            .expected_spins(Game::Simplified, st(0, 7, 5), &SolveMode::Exact)
            .unwrap();
        assert_eq!(zero, SpinValue::Exact(rat(0)));
        let a = engine
            .expected_spins(Game::Simplified, st(1, 1, 4), &SolveMode::Exact)
            .unwrap();
        let b = engine
            .expected_spins(Game::Simplified, st(1, 1, 4), &SolveMode::Exact)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a, SpinValue::Exact(ratio(33, 16)));
    }
}
