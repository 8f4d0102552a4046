//! The concrete rule sets: the two-outcome dreidel game, the four-outcome
//! dreidel game and the ±1 gambler walk, plus the gambler closed form and a
//! reproducible Monte Carlo simulator.
//!
//! A state is always read as (spinner, pot, waiting player); every dreidel
//! transition hands the top to the other player, so successors are written
//! with the roles already swapped. The gambler walk uses the same triple by
//! mapping position `x` over thresholds `M`, `N` to `(N + x, 0, M - x)`:
//! expected duration becomes the product of the two components and the walk
//! conserves the total just like the pot games do.

use crate::arith::{rat, ratio, BigFloat, Rational};
use crate::chain::{GameState, Successor, TransitionLaw};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("state ({0}) is absorbing; no transitions apply")]
    Absorbing(GameState),
    #[error("gambler position {a} outside the open interval (-{n}, {m})")]
    GamblerOutOfRange { a: i64, m: i64, n: i64 },
    #[error("invalid gambler parameters: need M, N >= 1 and -N <= a <= M")]
    BadGamblerParams,
    #[error("simulation needs at least one trial")]
    NoTrials,
    #[error("trial {trial} exceeded the spin cap of {cap}")]
    SpinCapExceeded { trial: u64, cap: u64 },
}

/// Rule-set identifier shared by the solver, simulator and serialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Game {
    Simplified,
    Full,
    Gambler,
}

impl Game {
    pub fn id(self) -> &'static str {
        match self {
            Game::Simplified => "simplified",
            Game::Full => "full",
            Game::Gambler => "gambler",
        }
    }

    pub fn parse(s: &str) -> Option<Game> {
        match s {
            "simplified" => Some(Game::Simplified),
            "full" => Some(Game::Full),
            "gambler" => Some(Game::Gambler),
            _ => None,
        }
    }

    /// Number of equally likely faces per spin.
    pub fn faces(self) -> u32 {
        match self {
            Game::Simplified => 2,
            Game::Full => 4,
            Game::Gambler => 2,
        }
    }

    /// Successor for one face of the spinner, with roles swapped where the
    /// rules pass the turn. `face` indexes the equally likely outcomes.
    pub fn step(self, s: GameState, face: u32) -> GameState {
        let GameState { a, p, b } = s;
        match self {
            Game::Simplified => match face {
                // gimel: spinner takes the pot, both re-ante
                0 => GameState { a: b - 1, p: 2, b: a + p - 1 },
                // shin: spinner pays one in
                _ => GameState { a: b, p: p + 1, b: a - 1 },
            },
            Game::Full => match face {
                0 => GameState { a: b - 1, p: 2, b: a + p - 1 },
                // hay: spinner takes the smaller half of the pot
                1 => GameState { a: b, p: p - p / 2, b: a + p / 2 },
                // nun: nothing moves, the turn passes
                2 => GameState { a: b, p, b: a },
                _ => GameState { a: b, p: p + 1, b: a - 1 },
            },
            Game::Gambler => match face {
                0 => GameState { a: a + 1, p, b: b - 1 },
                _ => GameState { a: a - 1, p, b: b + 1 },
            },
        }
    }

    /// Full branch list for a non-absorbing state.
    pub fn transitions(self, s: GameState) -> Result<TransitionLaw, GameError> {
        if s.is_absorbing() {
            return Err(GameError::Absorbing(s));
        }
        let prob = ratio(1, self.faces() as i64);
        let branches = (0..self.faces())
            .map(|face| {
                let next = self.step(s, face);
                (prob.clone(), Successor::from_state(next))
            })
            .collect();
        Ok(TransitionLaw::new(branches))
    }
}

/// Two-outcome game: gimel and shin, each probability 1/2.
pub fn simplified_transitions(s: GameState) -> Result<TransitionLaw, GameError> {
    Game::Simplified.transitions(s)
}

/// Four-outcome game: gimel, hay, nun, shin, each probability 1/4.
pub fn full_transitions(s: GameState) -> Result<TransitionLaw, GameError> {
    Game::Full.transitions(s)
}

/// Win/ruin thresholds and a starting position for the ±1 walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GamblerParams {
    pub m: i64,
    pub n: i64,
    pub a: i64,
}

impl GamblerParams {
    pub fn new(m: i64, n: i64, a: i64) -> Result<Self, GameError> {
        if m < 1 || n < 1 || a < -n || a > m {
            return Err(GameError::BadGamblerParams);
        }
        Ok(GamblerParams { m, n, a })
    }

    /// Conserved-total encoding of the position: `(N + a, 0, M - a)`.
    pub fn state(&self) -> GameState {
        GameState {
            a: (self.n + self.a) as u32,
            p: 0,
            b: (self.m - self.a) as u32,
        }
    }

    pub fn total(&self) -> u32 {
        (self.m + self.n) as u32
    }
}

/// ±1 step with equal probability; the boundary positions are absorbing.
pub fn gambler_transitions(a: i64, params: &GamblerParams) -> Result<TransitionLaw, GameError> {
    if a <= -params.n || a >= params.m {
        return Err(GameError::GamblerOutOfRange { a, m: params.m, n: params.n });
    }
    let here = GamblerParams { a, ..*params }.state();
    Game::Gambler.transitions(here)
}

/// Expected number of plays: `(N + a)(M - a)`, exact.
pub fn gambler_closed_form(params: &GamblerParams) -> Rational {
    rat(params.n + params.a) * rat(params.m - params.a)
}

/// Hard stop for degenerate simulations.
pub const DEFAULT_SPIN_CAP: u64 = 100_000_000;

/// Outcome of a batch of simulated games.
#[derive(Clone, Debug)]
pub struct SimResult {
    pub trials: u64,
    pub mean: BigFloat,
    pub stderr: BigFloat,
    pub histogram: BTreeMap<u64, u64>,
    pub seed: u64,
}

impl Serialize for SimResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("SimResult", 5)?;
        st.serialize_field("trials", &self.trials)?;
        st.serialize_field("mean", &self.mean.to_decimal(17))?;
        st.serialize_field("stderr", &self.stderr.to_decimal(6))?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("histogram", &self.histogram)?;
        st.end()
    }
}

#[derive(Default)]
struct TrialStats {
    count: u64,
    sum: u128,
    sum_sq: u128,
    histogram: BTreeMap<u64, u64>,
    capped: Option<u64>,
}

impl TrialStats {
    fn record(&mut self, spins: u64) {
        self.count += 1;
        self.sum += spins as u128;
        self.sum_sq += (spins as u128) * (spins as u128);
        *self.histogram.entry(spins).or_insert(0) += 1;
    }

    fn merge(mut self, other: TrialStats) -> TrialStats {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        for (len, n) in other.histogram {
            *self.histogram.entry(len).or_insert(0) += n;
        }
        self.capped = match (self.capped, other.capped) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }
}

/// Play `trials` independent games and summarize the spin counts.
///
/// Each trial uses its own ChaCha stream (`set_stream(trial_index)`) off the
/// shared 64-bit seed, so the result is identical however the trials are
/// scheduled across threads.
pub fn simulate(
    game: Game,
    start: GameState,
    trials: u64,
    seed: u64,
    spin_cap: u64,
) -> Result<SimResult, GameError> {
    if trials == 0 {
        return Err(GameError::NoTrials);
    }
    if start.is_absorbing() {
        return Err(GameError::Absorbing(start));
    }
    let faces = game.faces();
    let stats = (0..trials)
        .into_par_iter()
        .fold(TrialStats::default, |mut acc, trial| {
            if acc.capped.is_some() {
                return acc;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let mut state = start;
            let mut spins: u64 = 0;
            while !state.is_absorbing() {
                if spins >= spin_cap {
                    acc.capped = Some(trial);
                    return acc;
                }
                let face = rng.random_range(0..faces);
                state = game.step(state, face);
                spins += 1;
            }
            acc.record(spins);
            acc
        })
        .reduce(TrialStats::default, TrialStats::merge);
    if let Some(trial) = stats.capped {
        return Err(GameError::SpinCapExceeded { trial, cap: spin_cap });
    }
    let n = rat(trials as i64);
    let sum = Rational::from_integer(stats.sum.into());
    let sum_sq = Rational::from_integer(stats.sum_sq.into());
    let mean = &sum / &n;
    let prec = 128;
    let stderr = if trials > 1 {
        // sample variance over n-1, then / n for the squared standard error
        let var = (&sum_sq - &sum * &sum / &n) / rat(trials as i64 - 1);
        BigFloat::from_rational(&(var / &n), prec).sqrt()
    } else {
        BigFloat::zero(prec)
    };
    Ok(SimResult {
        trials,
        mean: BigFloat::from_rational(&mean, prec),
        stderr,
        histogram: stats.histogram,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    fn st(a: u32, p: u32, b: u32) -> GameState {
        GameState { a, p, b }
    }

    #[test]
    fn simplified_branches() {
        let law = simplified_transitions(st(2, 2, 2)).unwrap();
        assert_eq!(
            law.branches,
            vec![
                (ratio(1, 2), Successor::State(st(1, 2, 3))),
                (ratio(1, 2), Successor::State(st(2, 3, 1))),
            ]
        );
        let law = simplified_transitions(st(1, 1, 4)).unwrap();
        assert_eq!(
            law.branches,
            vec![
                (ratio(1, 2), Successor::State(st(3, 2, 1))),
                (ratio(1, 2), Successor::Absorb),
            ]
        );
        // both branches absorbing: the one-spin state behind D(1,4,1) = 1
        let law = simplified_transitions(st(1, 4, 1)).unwrap();
        assert_eq!(
            law.branches,
            vec![(ratio(1, 2), Successor::Absorb), (ratio(1, 2), Successor::Absorb)]
        );
        assert_eq!(
            simplified_transitions(st(0, 2, 4)),
            Err(GameError::Absorbing(st(0, 2, 4)))
        );
    }

    #[test]
    fn full_branches() {
        let law = full_transitions(st(1, 1, 1)).unwrap();
        assert_eq!(
            law.branches,
            vec![
                (ratio(1, 4), Successor::Absorb),
                (ratio(1, 4), Successor::State(st(1, 1, 1))),
                (ratio(1, 4), Successor::State(st(1, 1, 1))),
                (ratio(1, 4), Successor::Absorb),
            ]
        );
        let law = full_transitions(st(1, 2, 1)).unwrap();
        assert_eq!(
            law.branches,
            vec![
                (ratio(1, 4), Successor::Absorb),
                (ratio(1, 4), Successor::State(st(1, 1, 2))),
                (ratio(1, 4), Successor::State(st(1, 2, 1))),
                (ratio(1, 4), Successor::Absorb),
            ]
        );
        // hay takes floor(5/2) = 2, leaving 3 in the pot
        assert_eq!(Game::Full.step(st(3, 5, 2), 1), st(2, 3, 5));
    }

    #[test]
    fn hay_never_empties_the_pot() {
        for p in 1..50u32 {
            let next = Game::Full.step(st(5, p, 5), 1);
            assert!(next.p >= 1, "p={p} gave pot {}", next.p);
            assert_eq!(next.p, p.div_ceil(2));
        }
    }

    #[test]
    fn nun_is_a_role_swap_involution() {
        for (a, p, b) in [(1, 2, 3), (4, 0, 2), (7, 5, 1)] {
            let s = st(a, p, b);
            let once = Game::Full.step(s, 2);
            assert_eq!(Game::Full.step(once, 2), s);
        }
    }

    #[test]
    fn transitions_conserve_total_and_normalize() {
        for game in [Game::Simplified, Game::Full, Game::Gambler] {
            for total in 2..=30u32 {
                for s in crate::chain::enumerate_states(total).unwrap() {
                    let law = game.transitions(s).unwrap();
                    let mut prob_sum = rat(0);
                    for (prob, succ) in &law.branches {
                        prob_sum += prob;
                        if let Successor::State(next) = succ {
                            assert_eq!(next.total(), total, "{game:?} {s} -> {next}");
                        }
                    }
                    assert_eq!(prob_sum, rat(1));
                }
            }
        }
    }

    #[test]
    fn gambler_rules() {
        let p = GamblerParams::new(3, 2, 1).unwrap();
        let law = gambler_transitions(1, &p).unwrap();
        // position 1 maps to (3, 0, 2); up to (4,0,1), down to (2,0,3)
        assert_eq!(
            law.branches,
            vec![
                (ratio(1, 2), Successor::State(st(4, 0, 1))),
                (ratio(1, 2), Successor::State(st(2, 0, 3))),
            ]
        );
        let edge = GamblerParams::new(1, 1, 0).unwrap();
        let law = gambler_transitions(0, &edge).unwrap();
        assert!(law.branches.iter().all(|(_, s)| *s == Successor::Absorb));
        assert!(gambler_transitions(3, &p).is_err());
    }

    #[test]
    fn gambler_closed_form_examples() {
        let p = GamblerParams::new(5, 5, 0).unwrap();
        assert_eq!(gambler_closed_form(&p), rat(25));
        let q = GamblerParams::new(4, 2, 1).unwrap();
        assert_eq!(gambler_closed_form(&q), rat(9));
        let at_win = GamblerParams::new(4, 2, 4).unwrap();
        assert_eq!(gambler_closed_form(&at_win), rat(0));
        assert!(GamblerParams::new(4, 2, 5).is_err());
    }

    #[test]
    fn simulation_is_seed_reproducible() {
        let a = simulate(Game::Simplified, st(2, 2, 2), 2000, 7, DEFAULT_SPIN_CAP).unwrap();
        let b = simulate(Game::Simplified, st(2, 2, 2), 2000, 7, DEFAULT_SPIN_CAP).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.histogram, b.histogram);
        let c = simulate(Game::Simplified, st(2, 2, 2), 2000, 8, DEFAULT_SPIN_CAP).unwrap();
        assert_ne!(a.histogram, c.histogram);
        // histogram counts sum to trials
        assert_eq!(a.histogram.values().sum::<u64>(), 2000);
    }

    #[test]
    fn simulation_rejects_bad_input() {
        match simulate(Game::Full, st(0, 2, 2), 10, 1, DEFAULT_SPIN_CAP) {
            Err(GameError::Absorbing(_)) => {}
            other => panic!("expected absorbing error, got {other:?}"),
        }
        match simulate(Game::Full, st(1, 2, 1), 0, 1, DEFAULT_SPIN_CAP) {
            Err(GameError::NoTrials) => {}
            other => panic!("expected trials error, got {other:?}"),
        }
        // a tiny cap trips immediately on a state that cannot absorb fast
        match simulate(Game::Gambler, st(10, 0, 10), 4, 1, 3) {
            Err(GameError::SpinCapExceeded { cap: 3, .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }
}
