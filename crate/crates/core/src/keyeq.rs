//! The pot-2 reformulation of the two-outcome game.
//!
//! Conditioning on the first gimel turns every expectation into a constant
//! plus pot-2 terms on the same conserved line: following the shin chain
//! from any state, each spin either pays one nut in (probability 1/2,
//! continue down the chain) or resets the pot to two (a gimel), so
//!
//! ```text
//! T(a,b) = Σ_{i=0}^{min(2a-2, 2b-1)} (1/2)^i
//!        + Σ_{i=1}^{min(a,b)}   T(b-i, a+i) / 2^(2i-1)
//!        + Σ_{i=2}^{min(a,b+1)} T(a-i, b+i) / 2^(2i-2)
//! ```
//!
//! with `T(x,y) = 0` on the boundary. This key identity closes the pot-2
//! line `x + y = a + b` under itself, giving an `(m-1)`-unknown exact system
//! per line total `m` — far smaller than the full conserved-total system and
//! the workhorse behind the large fits.

use crate::arith::{pow2, rat, solve_dense_exact, Rational};
use crate::chain::{solve_table, ChainError, GameState, SolveMode};
use crate::games::Game;
use num_traits::Signed;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KeyError {
    #[error("state ({0}, {1}, {2}) is not a spinnable game state")]
    InvalidState(u32, u32, u32),
    #[error("lookup is missing T({0}, {1})")]
    MissingLookup(u32, u32),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// A constant plus a combination of pot-2 expectations on one line:
/// `constant + Σ coeff · T(x, y)` with every `(x, y)` on `x + y = total - 2`.
///
/// Coefficients are dyadic by construction. When the combination describes a
/// pot-2 state it may reference that state itself; `self_reference` flags
/// this and the term is kept in `terms` untouched.
#[derive(Clone, Debug, PartialEq)]
pub struct TCombination {
    pub constant: Rational,
    pub terms: BTreeMap<(u32, u32), Rational>,
    pub self_reference: bool,
}

impl TCombination {
    /// Evaluate against exact T values on the line.
    pub fn eval<F>(&self, mut lookup: F) -> Result<Rational, KeyError>
    where
        F: FnMut(u32, u32) -> Option<Rational>,
    {
        let mut acc = self.constant.clone();
        for ((x, y), c) in &self.terms {
            let t = lookup(*x, *y).ok_or(KeyError::MissingLookup(*x, *y))?;
            acc += c * t;
        }
        Ok(acc)
    }
}

impl Serialize for TCombination {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            #[serde(rename = "const")]
            constant: String,
            terms: BTreeMap<String, String>,
            #[serde(skip_serializing_if = "std::ops::Not::not")]
            self_reference: bool,
            #[serde(skip)]
            _p: std::marker::PhantomData<&'a ()>,
        }
        Wire {
            constant: self.constant.to_string(),
            terms: self
                .terms
                .iter()
                .map(|((x, y), c)| (format!("{x},{y}"), c.to_string()))
                .collect(),
            self_reference: self.self_reference,
            _p: std::marker::PhantomData,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TCombination {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            #[serde(rename = "const")]
            constant: String,
            terms: BTreeMap<String, String>,
            #[serde(default)]
            self_reference: bool,
        }
        let wire = Wire::deserialize(deserializer)?;
        let constant = crate::arith::parse_rational(&wire.constant)
            .map_err(|e| D::Error::custom(e.to_string()))?;
        let mut terms = BTreeMap::new();
        for (key, value) in wire.terms {
            let (x, y) = key
                .split_once(',')
                .ok_or_else(|| D::Error::custom(format!("bad term key {key:?}")))?;
            let x: u32 = x.trim().parse().map_err(D::Error::custom)?;
            let y: u32 = y.trim().parse().map_err(D::Error::custom)?;
            let c = crate::arith::parse_rational(&value)
                .map_err(|e| D::Error::custom(e.to_string()))?;
            terms.insert((x, y), c);
        }
        Ok(TCombination { constant, terms, self_reference: wire.self_reference })
    }
}

/// Express `D(a, p, b)` as a constant plus pot-2 terms by walking the shin
/// chain: each visited state contributes its spin to the constant, its gimel
/// branch becomes a pot-2 term, and the walk continues through the shin
/// branch until it absorbs. Terminates because the payer loses a nut every
/// step.
pub fn expand_shin_chain(a: u32, p: u32, b: u32) -> Result<TCombination, KeyError> {
    if a == 0 || b == 0 {
        return Err(KeyError::InvalidState(a, p, b));
    }
    let start = GameState::new(a, p, b);
    let mut cur = start;
    let mut weight = rat(1);
    let mut constant = rat(0);
    let mut terms: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
    loop {
        constant += &weight;
        let gimel = Game::Simplified.step(cur, 0);
        if !gimel.is_absorbing() {
            let entry = terms.entry((gimel.a, gimel.b)).or_insert_with(|| rat(0));
            *entry += &weight * pow2(-1);
        }
        let shin = Game::Simplified.step(cur, 1);
        if shin.is_absorbing() {
            break;
        }
        weight *= pow2(-1);
        cur = shin;
    }
    let self_reference = p == 2 && terms.contains_key(&(a, b));
    Ok(TCombination { constant, terms, self_reference })
}

/// The key identity for `T(a, b)` in closed form: first-gimel coefficients
/// with the boundary terms already dropped.
pub fn key_coefficients(a: u32, b: u32) -> TCombination {
    assert!(a >= 1 && b >= 1);
    let mut constant = rat(0);
    let first_limit = (2 * a as i64 - 2).min(2 * b as i64 - 1);
    for i in 0..=first_limit {
        constant += pow2(-i);
    }
    // the two gimel sums can land on the same pot-2 state (the index shift
    // is a - b); coefficients accumulate there
    let mut terms: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
    for i in 1..=a.min(b) {
        let (x, y) = (b - i, a + i);
        if x >= 1 {
            *terms.entry((x, y)).or_insert_with(|| rat(0)) += pow2(1 - 2 * i as i64);
        }
    }
    for i in 2..=a.min(b + 1) {
        let (x, y) = (a - i, b + i);
        if x >= 1 {
            *terms.entry((x, y)).or_insert_with(|| rat(0)) += pow2(2 - 2 * i as i64);
        }
    }
    let self_reference = terms.contains_key(&(a, b));
    TCombination { constant, terms, self_reference }
}

/// Evaluate the right side of the key identity with supplied exact pot-2
/// values on the line `x + y = a + b`.
pub fn key_rhs<F>(a: u32, b: u32, lookup: F) -> Result<Rational, KeyError>
where
    F: FnMut(u32, u32) -> Option<Rational>,
{
    key_coefficients(a, b).eval(lookup)
}

/// One line of the identity check.
#[derive(Clone, Debug)]
pub struct LineCheck {
    pub m: u32,
    pub checked: u32,
    pub failures: Vec<(u32, u32, Rational)>,
}

/// Outcome of checking the key identity against chain-solver values.
#[derive(Clone, Debug)]
pub struct KeyReport {
    pub lines: Vec<LineCheck>,
    pub worst_discrepancy: Rational,
}

impl KeyReport {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.failures.is_empty())
    }
}

/// Check `key_rhs(a, b) == T(a, b)` with exact equality for every
/// `a, b >= 1`, `a + b <= m_max`, with T taken from the generic chain solver
/// (independent of this module's own line solver).
pub fn verify_key(m_max: u32) -> Result<KeyReport, KeyError> {
    assert!(m_max >= 2);
    let mut lines = Vec::new();
    let mut worst = rat(0);
    for m in 2..=m_max {
        let table = solve_table(Game::Simplified, m + 2, &SolveMode::Exact)?;
        let mut t_line: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
        for x in 1..m {
            let s = GameState::new(x, 2, m - x);
            t_line.insert((x, m - x), table.get(&s)?.as_exact().unwrap().clone());
        }
        let mut check = LineCheck { m, checked: 0, failures: Vec::new() };
        for x in 1..m {
            let expected = &t_line[&(x, m - x)];
            let rhs = key_rhs(x, m - x, |i, j| t_line.get(&(i, j)).cloned())?;
            check.checked += 1;
            if rhs != *expected {
                let diff = (&rhs - expected).abs();
                if diff > worst {
                    worst = diff.clone();
                }
                check.failures.push((x, m - x, diff));
            }
        }
        lines.push(check);
    }
    Ok(KeyReport { lines, worst_discrepancy: worst })
}

/// Exact pot-2 values on one line total.
#[derive(Clone, Debug)]
pub struct TLine {
    pub m: u32,
    /// `values[x - 1]` is `T(x, m - x)`.
    pub values: Vec<Rational>,
    /// Set when the per-line system was singular and the chain solver was
    /// used instead (never observed; kept as the documented escape hatch).
    pub used_fallback: bool,
}

impl TLine {
    pub fn t(&self, x: u32) -> &Rational {
        &self.values[(x - 1) as usize]
    }
}

/// Solve the key identity as a linear system in the `m - 1` unknowns of one
/// line, exactly. Falls back to the chain solver if the line system is ever
/// singular.
pub fn reduced_solve_t(m: u32) -> Result<TLine, KeyError> {
    if m < 2 {
        return Err(KeyError::Chain(ChainError::EmptyDomain));
    }
    let n = (m - 1) as usize;
    let mut matrix = vec![vec![rat(0); n]; n];
    let mut rhs = vec![rat(0); n];
    for a in 1..m {
        let row = (a - 1) as usize;
        let comb = key_coefficients(a, m - a);
        matrix[row][row] = rat(1);
        for ((x, _y), c) in &comb.terms {
            matrix[row][(x - 1) as usize] -= c;
        }
        rhs[row] = comb.constant;
    }
    match solve_dense_exact(&matrix, &rhs) {
        Some(values) => Ok(TLine { m, values, used_fallback: false }),
        None => {
            let table = solve_table(Game::Simplified, m + 2, &SolveMode::Exact)?;
            let values = (1..m)
                .map(|x| {
                    table
                        .get(&GameState::new(x, 2, m - x))
                        .map(|v| v.as_exact().unwrap().clone())
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(TLine { m, values, used_fallback: true })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    #[test]
    fn expansion_matches_worked_examples() {
        let c = expand_shin_chain(2, 2, 2).unwrap();
        assert_eq!(c.constant, ratio(7, 4));
        assert_eq!(c.terms, BTreeMap::from([((1, 3), ratio(1, 2))]));
        assert!(!c.self_reference);

        let c = expand_shin_chain(3, 2, 1).unwrap();
        assert_eq!(c.constant, ratio(3, 2));
        assert_eq!(c.terms, BTreeMap::from([((1, 3), ratio(1, 4))]));

        let c = expand_shin_chain(1, 2, 3).unwrap();
        assert_eq!(c.constant, rat(1));
        assert_eq!(c.terms, BTreeMap::from([((2, 2), ratio(1, 2))]));

        assert!(expand_shin_chain(0, 2, 3).is_err());
    }

    #[test]
    fn self_reference_is_flagged() {
        // (1,2,2): the gimel branch returns to the state itself
        let c = expand_shin_chain(1, 2, 2).unwrap();
        assert!(c.self_reference);
        assert_eq!(c.terms.get(&(1, 2)), Some(&ratio(1, 2)));
        // and the closed form carries the same self term
        let k = key_coefficients(1, 2);
        assert!(k.self_reference);
        assert_eq!(k.terms.get(&(1, 2)), Some(&ratio(1, 2)));
    }

    #[test]
    fn expansion_reproduces_key_coefficients() {
        for a in 1..=12u32 {
            for b in 1..=12u32 {
                let expand = expand_shin_chain(a, 2, b).unwrap();
                let closed = key_coefficients(a, b);
                assert_eq!(expand.constant, closed.constant, "const at ({a},{b})");
                assert_eq!(expand.terms, closed.terms, "terms at ({a},{b})");
            }
        }
    }

    #[test]
    fn key_rhs_hand_values() {
        // (2,2) with T(1,3) = 5/2: 7/4 + 5/4 + 0 = 3
        let rhs = key_rhs(2, 2, |x, y| {
            ((x, y) == (1, 3)).then(|| ratio(5, 2)).or_else(|| Some(rat(3)))
        })
        .unwrap();
        assert_eq!(rhs, rat(3));
        // (1,1): the first sum alone, one spin ends the game
        assert_eq!(key_rhs(1, 1, |_, _| None).unwrap(), rat(1));
        // (3,1) with T(1,3) = 5/2: 3/2 + 0 + 5/8 = 17/8
        let rhs = key_rhs(3, 1, |x, y| ((x, y) == (1, 3)).then(|| ratio(5, 2))).unwrap();
        assert_eq!(rhs, ratio(17, 8));
    }

    #[test]
    fn key_identity_holds_on_small_lines() {
        let report = verify_key(8).unwrap();
        assert!(report.all_pass(), "worst: {}", report.worst_discrepancy);
        assert_eq!(report.lines.len(), 7);
    }

    #[test]
    fn reduced_lines_match_known_values() {
        let line = reduced_solve_t(2).unwrap();
        assert_eq!(line.values, vec![rat(1)]);
        let line = reduced_solve_t(4).unwrap();
        assert_eq!(line.values, vec![ratio(5, 2), rat(3), ratio(17, 8)]);
        assert!(!line.used_fallback);
    }

    #[test]
    fn reduced_lines_match_the_chain_solver() {
        for m in 2..=12u32 {
            let line = reduced_solve_t(m).unwrap();
            let table = solve_table(Game::Simplified, m + 2, &SolveMode::Exact).unwrap();
            for x in 1..m {
                let chain = table.get(&GameState::new(x, 2, m - x)).unwrap();
                assert_eq!(
                    line.t(x),
                    chain.as_exact().unwrap(),
                    "T({x},{}) on line {m}",
                    m - x
                );
            }
        }
    }

    #[test]
    fn expansion_agrees_with_chain_values_at_any_pot() {
        // constant + Σ coeff · T equals the chain value for D(a,p,b)
        for total in 2..=14u32 {
            let table = solve_table(Game::Simplified, total, &SolveMode::Exact).unwrap();
            let line = total - 2;
            for s in &table.states {
                let comb = expand_shin_chain(s.a, s.p, s.b).unwrap();
                let combined = comb
                    .eval(|x, y| {
                        assert_eq!(x + y, line, "terms stay on the line");
                        table
                            .get(&GameState::new(x, 2, y))
                            .ok()
                            .and_then(|v| v.as_exact().cloned())
                    })
                    .unwrap();
                assert_eq!(combined, *table.get(s).unwrap().as_exact().unwrap(), "{s}");
            }
        }
    }

    #[test]
    fn coefficients_are_dyadic() {
        for (a, b) in [(3, 9), (9, 3), (7, 7), (1, 12)] {
            let c = key_coefficients(a, b);
            for coeff in c.terms.values() {
                let d = coeff.denom();
                assert_eq!(d & (d - 1u32), 0u32.into(), "denominator {d} not a power of two");
            }
        }
    }

    #[test]
    fn wire_format_round_trips() {
        let c = expand_shin_chain(2, 2, 2).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"const":"7/4","terms":{"1,3":"1/2"}}"#);
        let back: TCombination = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
