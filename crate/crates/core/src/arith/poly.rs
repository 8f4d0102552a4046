//! Polynomials in the formal variables `a`, `b`, `p` whose coefficients are
//! affine expressions over the named unknowns. Degree stays tiny (the models
//! are at most bilinear plus a pot factor), so a plain monomial map is the
//! right representation.

use super::{rat, AffineExpr, ArithError, Rational, Unknown};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Formal variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    A,
    B,
    P,
}

/// Exponent triple for `a^i b^j p^k`.
type Monomial = (u8, u8, u8);

const MAX_TOTAL_DEGREE: u32 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyABP {
    terms: BTreeMap<Monomial, AffineExpr>,
}

impl PolyABP {
    pub fn zero() -> Self {
        PolyABP { terms: BTreeMap::new() }
    }

    pub fn constant(c: AffineExpr) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((0, 0, 0), c);
        }
        PolyABP { terms }
    }

    pub fn rational(c: Rational) -> Self {
        Self::constant(AffineExpr::constant(c))
    }

    pub fn unknown(u: Unknown) -> Self {
        Self::constant(AffineExpr::unknown(u))
    }

    pub fn var(v: Var) -> Self {
        let mono = match v {
            Var::A => (1, 0, 0),
            Var::B => (0, 1, 0),
            Var::P => (0, 0, 1),
        };
        let mut terms = BTreeMap::new();
        terms.insert(mono, AffineExpr::constant(rat(1)));
        PolyABP { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(&rat(-1)))
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        PolyABP {
            terms: self.terms.iter().map(|(m, c)| (*m, c.scale(k))).collect(),
        }
    }

    fn add_term(&mut self, m: Monomial, c: AffineExpr) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing = existing.add(&c);
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    /// Product. At most one factor may carry unknowns in its coefficients,
    /// otherwise the result would leave the affine-coefficient domain.
    pub fn mul(&self, rhs: &Self) -> Result<Self, ArithError> {
        let mut out = Self::zero();
        for (ml, cl) in &self.terms {
            for (mr, cr) in &rhs.terms {
                let m = (ml.0 + mr.0, ml.1 + mr.1, ml.2 + mr.2);
                if (m.0 + m.1 + m.2) as u32 > MAX_TOTAL_DEGREE {
                    // no model in this crate goes past bilinear-times-pot
                    return Err(ArithError::NonAffineMapping);
                }
                let coeff = if cl.is_constant() {
                    cr.scale(&cl.constant)
                } else if cr.is_constant() {
                    cl.scale(&cr.constant)
                } else {
                    return Err(ArithError::NonlinearUnknowns);
                };
                out.add_term(m, coeff);
            }
        }
        Ok(out)
    }

    /// The affine coefficient of every monomial present, constant term
    /// included, in deterministic monomial order. The polynomial is
    /// identically zero iff every returned expression is zero.
    pub fn collect_constraints(&self) -> Vec<AffineExpr> {
        self.terms.values().cloned().collect()
    }

    pub fn coefficient(&self, a_exp: u8, b_exp: u8, p_exp: u8) -> AffineExpr {
        self.terms
            .get(&(a_exp, b_exp, p_exp))
            .cloned()
            .unwrap_or_else(AffineExpr::zero)
    }

    /// Substitute rational values for the three variables; unknowns stay
    /// symbolic.
    pub fn substitute_values(&self, a: &Rational, b: &Rational, p: &Rational) -> AffineExpr {
        let mut out = AffineExpr::zero();
        for ((i, j, k), c) in &self.terms {
            let mut factor = Rational::one();
            for _ in 0..*i {
                factor *= a;
            }
            for _ in 0..*j {
                factor *= b;
            }
            for _ in 0..*k {
                factor *= p;
            }
            out = out.add(&c.scale(&factor));
        }
        out
    }

    /// Evaluate fully: rational variable values plus an unknown assignment.
    pub fn eval(
        &self,
        a: &Rational,
        b: &Rational,
        p: &Rational,
        assignment: &BTreeMap<Unknown, Rational>,
    ) -> Result<Rational, ArithError> {
        self.substitute_values(a, b, p).eval(assignment)
    }

    fn pow(&self, n: u8) -> Result<Self, ArithError> {
        let mut out = Self::rational(rat(1));
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Compose with `a -> map.a, b -> map.b, p -> map.p`. The images must be
    /// affine with integer coefficients and free of unknowns.
    pub fn shift_substitute(&self, map: &SubstMap) -> Result<Self, ArithError> {
        map.validate()?;
        let mut out = Self::zero();
        for ((i, j, k), c) in &self.terms {
            let term = map
                .a
                .pow(*i)?
                .mul(&map.b.pow(*j)?)?
                .mul(&map.p.pow(*k)?)?;
            let mut scaled = PolyABP::zero();
            for (m, base) in &term.terms {
                // base is unknown-free by validation; multiply by the
                // original affine coefficient
                scaled.add_term(*m, c.scale(&base.constant));
            }
            out = out.add(&scaled);
        }
        Ok(out)
    }

    /// Total degree of the highest monomial present.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|(i, j, k)| (*i + *j + *k) as u32)
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for PolyABP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for ((i, j, k), c) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (sym, e) in [("a", i), ("b", j), ("p", k)] {
                for _ in 0..*e {
                    write!(f, "*{sym}")?;
                }
            }
        }
        Ok(())
    }
}

/// Images of the three variables under a shift substitution.
#[derive(Clone, Debug)]
pub struct SubstMap {
    pub a: PolyABP,
    pub b: PolyABP,
    pub p: PolyABP,
}

impl SubstMap {
    /// Identity map.
    pub fn identity() -> Self {
        SubstMap {
            a: PolyABP::var(Var::A),
            b: PolyABP::var(Var::B),
            p: PolyABP::var(Var::P),
        }
    }

    fn validate(&self) -> Result<(), ArithError> {
        for image in [&self.a, &self.b, &self.p] {
            if image.total_degree() > 1 {
                return Err(ArithError::NonAffineMapping);
            }
            for c in image.terms.values() {
                if !c.is_constant() || !c.constant.is_integer() {
                    return Err(ArithError::NonAffineMapping);
                }
            }
        }
        Ok(())
    }
}

/// Small builder for affine integer images like `b + p - 1`.
pub fn linear_image(ca: i64, cb: i64, cp: i64, constant: i64) -> PolyABP {
    PolyABP::var(Var::A)
        .scale(&rat(ca))
        .add(&PolyABP::var(Var::B).scale(&rat(cb)))
        .add(&PolyABP::var(Var::P).scale(&rat(cp)))
        .add(&PolyABP::rational(rat(constant)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    fn ab() -> PolyABP {
        PolyABP::var(Var::A).mul(&PolyABP::var(Var::B)).unwrap()
    }

    #[test]
    fn substitution_expands_products() {
        // a*b under a -> b-1, b -> a+p-1, p -> 2 gives
        // ab + bp - b - a - p + 1
        let map = SubstMap {
            a: linear_image(0, 1, 0, -1),
            b: linear_image(1, 0, 1, -1),
            p: PolyABP::rational(rat(2)),
        };
        let out = ab().shift_substitute(&map).unwrap();
        let mut expected = PolyABP::zero();
        expected = expected.add(&ab());
        expected = expected.add(&PolyABP::var(Var::B).mul(&PolyABP::var(Var::P)).unwrap());
        expected = expected.sub(&PolyABP::var(Var::B));
        expected = expected.sub(&PolyABP::var(Var::A));
        expected = expected.sub(&PolyABP::var(Var::P));
        expected = expected.add(&PolyABP::rational(rat(1)));
        assert_eq!(out, expected);
    }

    #[test]
    fn substitution_of_single_variable() {
        // p under p -> p + 1
        let map = SubstMap { p: linear_image(0, 0, 1, 1), ..SubstMap::identity() };
        let out = PolyABP::var(Var::P).shift_substitute(&map).unwrap();
        assert_eq!(
            out,
            PolyABP::var(Var::P).add(&PolyABP::rational(rat(1)))
        );
    }

    #[test]
    fn swap_keeps_unknown_coefficients() {
        // c3*ab + c2*a under a <-> b gives c3*ab + c2*b
        let poly = ab()
            .mul(&PolyABP::unknown(Unknown::C3))
            .unwrap()
            .add(&PolyABP::var(Var::A).mul(&PolyABP::unknown(Unknown::C2)).unwrap());
        let map = SubstMap {
            a: PolyABP::var(Var::B),
            b: PolyABP::var(Var::A),
            p: PolyABP::var(Var::P),
        };
        let out = poly.shift_substitute(&map).unwrap();
        let expected = ab()
            .mul(&PolyABP::unknown(Unknown::C3))
            .unwrap()
            .add(&PolyABP::var(Var::B).mul(&PolyABP::unknown(Unknown::C2)).unwrap());
        assert_eq!(out, expected);
    }

    #[test]
    fn non_affine_mapping_is_rejected() {
        let map = SubstMap { a: ab(), ..SubstMap::identity() };
        assert_eq!(
            PolyABP::var(Var::A).shift_substitute(&map),
            Err(ArithError::NonAffineMapping)
        );
        let half = SubstMap {
            a: PolyABP::rational(ratio(1, 2)),
            ..SubstMap::identity()
        };
        assert_eq!(
            PolyABP::var(Var::A).shift_substitute(&half),
            Err(ArithError::NonAffineMapping)
        );
    }

    #[test]
    fn unknown_times_unknown_is_rejected() {
        let c3 = PolyABP::unknown(Unknown::C3);
        assert_eq!(c3.mul(&c3), Err(ArithError::NonlinearUnknowns));
    }

    #[test]
    fn collect_constraints_examples() {
        // (c3 - 12/19) * ab
        let poly = ab().mul(
            &PolyABP::constant(
                AffineExpr::unknown(Unknown::C3).sub(&AffineExpr::constant(ratio(12, 19))),
            ),
        )
        .unwrap();
        let cons = poly.collect_constraints();
        assert_eq!(cons.len(), 1);
        assert_eq!(cons[0].coeff(Unknown::C3), rat(1));
        assert_eq!(cons[0].constant, ratio(-12, 19));
        assert!(PolyABP::zero().collect_constraints().is_empty());
    }

    #[test]
    fn substitute_then_eval_commutes_with_eval_then_substitute() {
        use std::collections::BTreeMap;
        // spot commutation check on a handful of small polynomials; the
        // property test in the crate tests covers random instances
        let poly = ab()
            .mul(&PolyABP::unknown(Unknown::C3))
            .unwrap()
            .add(&PolyABP::var(Var::P).scale(&ratio(3, 2)));
        let map = SubstMap {
            a: linear_image(0, 1, 0, -1),
            b: linear_image(1, 0, 1, -1),
            p: PolyABP::rational(rat(2)),
        };
        let composed = poly.shift_substitute(&map).unwrap();
        let mut assign = BTreeMap::new();
        for u in Unknown::ALL {
            assign.insert(u, rat(2));
        }
        let (a, b, p) = (rat(5), rat(7), rat(3));
        let direct = composed.eval(&a, &b, &p, &assign).unwrap();
        // evaluate the mapping numerically first
        let am = map.a.eval(&a, &b, &p, &assign).unwrap();
        let bm = map.b.eval(&a, &b, &p, &assign).unwrap();
        let pm = map.p.eval(&a, &b, &p, &assign).unwrap();
        let via_values = poly.eval(&am, &bm, &pm, &assign).unwrap();
        assert_eq!(direct, via_values);
    }
}
