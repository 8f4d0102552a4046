//! Affine expressions over the closed set of named unknowns
//! `c0..c3, s0..s2`, and exact Gaussian elimination over them.

use super::{rat, ArithError, Rational};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt;

/// The seven model unknowns. The set is closed: elimination stays
/// deterministic and expressions never grow new symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unknown {
    C0,
    C1,
    C2,
    C3,
    S0,
    S1,
    S2,
}

impl Unknown {
    pub const ALL: [Unknown; 7] = [
        Unknown::C0,
        Unknown::C1,
        Unknown::C2,
        Unknown::C3,
        Unknown::S0,
        Unknown::S1,
        Unknown::S2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Unknown::C0 => "c0",
            Unknown::C1 => "c1",
            Unknown::C2 => "c2",
            Unknown::C3 => "c3",
            Unknown::S0 => "s0",
            Unknown::S1 => "s1",
            Unknown::S2 => "s2",
        }
    }
}

impl fmt::Display for Unknown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fixed pivot order for elimination.
pub const PIVOT_ORDER: [Unknown; 7] = [
    Unknown::C3,
    Unknown::S1,
    Unknown::S2,
    Unknown::S0,
    Unknown::C1,
    Unknown::C2,
    Unknown::C0,
];

/// `constant + Σ coeff · unknown`; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineExpr {
    pub constant: Rational,
    terms: BTreeMap<Unknown, Rational>,
}

impl AffineExpr {
    pub fn zero() -> Self {
        AffineExpr { constant: rat(0), terms: BTreeMap::new() }
    }

    pub fn constant(c: Rational) -> Self {
        AffineExpr { constant: c, terms: BTreeMap::new() }
    }

    pub fn unknown(u: Unknown) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(u, rat(1));
        AffineExpr { constant: rat(0), terms }
    }

    pub fn coeff(&self, u: Unknown) -> Rational {
        self.terms.get(&u).cloned().unwrap_or_else(|| rat(0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (Unknown, &Rational)> {
        self.terms.iter().map(|(u, c)| (*u, c))
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.constant += &rhs.constant;
        for (u, c) in &rhs.terms {
            out.add_term(*u, c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(&rat(-1)))
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return AffineExpr::zero();
        }
        AffineExpr {
            constant: &self.constant * k,
            terms: self.terms.iter().map(|(u, c)| (*u, c * k)).collect(),
        }
    }

    fn add_term(&mut self, u: Unknown, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(u).or_insert_with(|| rat(0));
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&u);
        }
    }

    /// Replace `u` by an affine expression (which must not itself mention `u`).
    pub fn substitute(&self, u: Unknown, value: &AffineExpr) -> Self {
        debug_assert!(value.coeff(u).is_zero());
        match self.terms.get(&u) {
            None => self.clone(),
            Some(c) => {
                let mut out = self.clone();
                let c = c.clone();
                out.terms.remove(&u);
                out.add(&value.scale(&c))
            }
        }
    }

    /// Evaluate with every unknown bound.
    pub fn eval(&self, assignment: &BTreeMap<Unknown, Rational>) -> Result<Rational, ArithError> {
        let mut out = self.constant.clone();
        for (u, c) in &self.terms {
            let v = assignment.get(u).ok_or(ArithError::Inconsistent)?;
            out += c * v;
        }
        Ok(out)
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if !self.constant.is_zero() || self.terms.is_empty() {
            write!(f, "{}", self.constant)?;
            first = false;
        }
        for (u, c) in &self.terms {
            if first {
                write!(f, "{c}*{u}")?;
                first = false;
            } else {
                write!(f, " + {c}*{u}")?;
            }
        }
        Ok(())
    }
}

/// Outcome of eliminating a list of affine constraints: every pivoted
/// unknown expressed over the free ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemSolution {
    pub solved: BTreeMap<Unknown, AffineExpr>,
    pub free: Vec<Unknown>,
}

impl SystemSolution {
    /// The solved expression for `u`, if `u` was pivoted.
    pub fn get(&self, u: Unknown) -> Option<&AffineExpr> {
        self.solved.get(&u)
    }
}

/// Exact elimination over the seven unknowns with the fixed pivot order.
/// Returns the reduced assignment, or `Inconsistent` when a nonzero constant
/// equation survives.
pub fn solve_affine_system(constraints: &[AffineExpr]) -> Result<SystemSolution, ArithError> {
    let mut eqs: Vec<AffineExpr> = constraints.to_vec();
    let mut solved: BTreeMap<Unknown, AffineExpr> = BTreeMap::new();
    for &pivot in PIVOT_ORDER.iter() {
        let Some(idx) = eqs.iter().position(|e| !e.coeff(pivot).is_zero()) else {
            continue;
        };
        let eq = eqs.swap_remove(idx);
        let c = eq.coeff(pivot);
        // pivot = -(eq - c*pivot)/c
        let mut rest = eq.clone();
        rest = rest.sub(&AffineExpr::unknown(pivot).scale(&c));
        let expr = rest.scale(&(rat(-1) / c));
        for e in eqs.iter_mut() {
            *e = e.substitute(pivot, &expr);
        }
        for v in solved.values_mut() {
            *v = v.substitute(pivot, &expr);
        }
        solved.insert(pivot, expr);
    }
    for e in &eqs {
        if !e.is_zero() {
            return Err(ArithError::Inconsistent);
        }
    }
    let free = Unknown::ALL
        .iter()
        .copied()
        .filter(|u| !solved.contains_key(u))
        .collect();
    Ok(SystemSolution { solved, free })
}
