//! Binary floating point at a configurable precision.
//!
//! A value is `mantissa * 2^exp` with the mantissa normalized to exactly
//! `prec` bits (round to nearest, ties to even). Conversions from rationals
//! are correctly rounded; addition and multiplication compute the exact
//! result before rounding once.

use super::{decimal_string, ArithError, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

/// Default working precision; enough to carry 30-digit constants with
/// generous headroom.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

#[derive(Clone, Debug)]
pub struct BigFloat {
    mantissa: BigInt,
    exp: i64,
    prec: u32,
}

impl BigFloat {
    pub fn zero(prec: u32) -> Self {
        BigFloat { mantissa: BigInt::zero(), exp: 0, prec: prec.max(1) }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::new(BigInt::from(n), 0, prec)
    }

    /// Correctly rounded conversion from an exact rational.
    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        if r.is_zero() {
            return Self::zero(prec);
        }
        Self::div_integers(r.numer().clone(), r.denom().clone(), prec)
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        match Rational::from_float(x) {
            Some(r) => Self::from_rational(&r, prec),
            None => Self::zero(prec),
        }
    }

    /// Normalize `m * 2^e` to `prec` mantissa bits, rounding half to even.
    fn new(m: BigInt, e: i64, prec: u32) -> Self {
        let prec = prec.max(1);
        if m.is_zero() {
            return Self::zero(prec);
        }
        let bits = m.magnitude().bits();
        if bits > prec as u64 {
            let drop = bits - prec as u64;
            let (q, carried) = round_shift(&m, drop);
            let mut out = BigFloat { mantissa: q, exp: e + drop as i64, prec };
            if carried {
                // 0b111.. rounded up to 0b1000..: one extra bit, low bit zero
                out.mantissa >>= 1;
                out.exp += 1;
            }
            out
        } else {
            let lift = prec as u64 - bits;
            BigFloat { mantissa: m << lift, exp: e - lift as i64, prec }
        }
    }

    /// Correctly rounded n / d at `prec` bits; both nonzero.
    fn div_integers(n: BigInt, d: BigInt, prec: u32) -> Self {
        debug_assert!(!d.is_zero());
        let prec = prec.max(1);
        let negative = n.is_negative() != d.is_negative();
        let n = n.abs();
        let d = d.abs();
        // aim for prec + 2 quotient bits
        let want = prec as i64 + 2;
        let have = n.bits() as i64 - d.bits() as i64;
        let shift = (want - have).max(0) as u64;
        let scaled = &n << shift;
        let (q, r) = num_integer::Integer::div_rem(&scaled, &d);
        // round q to prec bits with the division remainder as sticky
        let bits = q.magnitude().bits();
        debug_assert!(bits >= prec as u64);
        let drop = bits - prec as u64;
        let mut exp = -(shift as i64) + drop as i64;
        let mut mant = if drop == 0 {
            if r.is_zero() {
                q
            } else {
                // exact quotient fits; remainder only matters if we must round,
                // which we do not when no bits are dropped
                q
            }
        } else {
            let low_mask = (BigInt::one() << drop) - 1;
            let dropped = &q & &low_mask;
            let truncated = &q >> drop;
            let half = BigInt::one() << (drop - 1);
            match dropped.cmp(&half) {
                Ordering::Greater => truncated + 1,
                Ordering::Less => truncated,
                Ordering::Equal => {
                    if !r.is_zero() {
                        truncated + 1
                    } else if (&truncated & BigInt::one()).is_zero() {
                        truncated
                    } else {
                        truncated + 1
                    }
                }
            }
        };
        if mant.magnitude().bits() > prec as u64 {
            mant >>= 1;
            exp += 1;
        }
        if negative {
            mant = -mant;
        }
        BigFloat { mantissa: mant, exp, prec }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    /// Exact value as a (dyadic) rational.
    pub fn to_rational(&self) -> Rational {
        if self.exp >= 0 {
            Rational::from_integer(&self.mantissa << self.exp as u64)
        } else {
            Rational::new(self.mantissa.clone(), BigInt::one() << (-self.exp) as u64)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        // keep the top 64 bits and scale
        let bits = self.mantissa.magnitude().bits();
        let excess = bits.saturating_sub(64);
        let top: BigInt = &self.mantissa >> excess;
        top.to_f64().unwrap_or(0.0) * 2f64.powi((self.exp + excess as i64) as i32)
    }

    pub fn abs(&self) -> Self {
        BigFloat { mantissa: self.mantissa.abs(), exp: self.exp, prec: self.prec }
    }

    pub fn neg(&self) -> Self {
        BigFloat { mantissa: -self.mantissa.clone(), exp: self.exp, prec: self.prec }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() {
            return Self::new(rhs.mantissa.clone(), rhs.exp, prec);
        }
        if rhs.is_zero() {
            return Self::new(self.mantissa.clone(), self.exp, prec);
        }
        let e = self.exp.min(rhs.exp);
        let a = &self.mantissa << (self.exp - e) as u64;
        let b = &rhs.mantissa << (rhs.exp - e) as u64;
        Self::new(a + b, e, prec)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let prec = self.prec.max(rhs.prec);
        Self::new(&self.mantissa * &rhs.mantissa, self.exp + rhs.exp, prec)
    }

    pub fn div(&self, rhs: &Self) -> Result<Self, ArithError> {
        if rhs.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() {
            return Ok(Self::zero(prec));
        }
        let mut out = Self::div_integers(self.mantissa.clone(), rhs.mantissa.clone(), prec);
        out.exp += self.exp - rhs.exp;
        Ok(out)
    }

    /// Square root (faithfully rounded; exact when the value is a perfect
    /// dyadic square). Negative input is a caller bug.
    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "sqrt of negative BigFloat");
        if self.is_zero() {
            return self.clone();
        }
        let mut m = self.mantissa.clone();
        let mut e = self.exp;
        if e % 2 != 0 {
            m <<= 1;
            e -= 1;
        }
        let extra = 2 * (self.prec as u64 + 4);
        let s = (&m << extra).sqrt();
        Self::new(s, e / 2 - (extra / 2) as i64, self.prec)
    }

    pub fn cmp_value(&self, rhs: &Self) -> Ordering {
        match (self.is_zero(), rhs.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return if rhs.is_negative() { Ordering::Greater } else { Ordering::Less },
            (false, true) => return if self.is_negative() { Ordering::Less } else { Ordering::Greater },
            _ => {}
        }
        let e = self.exp.min(rhs.exp);
        let a = &self.mantissa << (self.exp - e) as u64;
        let b = &rhs.mantissa << (rhs.exp - e) as u64;
        a.cmp(&b)
    }

    /// Significant-digit decimal rendering (half-even).
    pub fn to_decimal(&self, digits: usize) -> String {
        decimal_string(&self.to_rational(), digits)
    }

    /// Mantissa with trailing zero bits stripped, plus adjusted exponent;
    /// canonical across precisions for hashing and equality.
    fn canonical(&self) -> (BigInt, i64) {
        if self.is_zero() {
            return (BigInt::zero(), 0);
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0);
        (&self.mantissa >> tz, self.exp + tz as i64)
    }
}

/// Shift `m` right by `drop` bits with round-half-even; returns the shifted
/// value and whether rounding carried into an extra bit.
fn round_shift(m: &BigInt, drop: u64) -> (BigInt, bool) {
    let neg = m.is_negative();
    let mag = m.abs();
    let low_mask = (BigInt::one() << drop) - 1;
    let dropped = &mag & &low_mask;
    let truncated = &mag >> drop;
    let half = BigInt::one() << (drop - 1);
    let bits_before = truncated.bits();
    let rounded = match dropped.cmp(&half) {
        Ordering::Greater => truncated + 1,
        Ordering::Less => truncated,
        Ordering::Equal => {
            if (&truncated & BigInt::one()).is_zero() {
                truncated
            } else {
                truncated + 1
            }
        }
    };
    let carried = rounded.bits() > bits_before;
    (if neg { -rounded } else { rounded }, carried)
}

impl PartialEq for BigFloat {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl Eq for BigFloat {}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

impl Ord for BigFloat {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl Hash for BigFloat {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let (m, e) = self.canonical();
        m.hash(state);
        e.hash(state);
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.prec as f64) * std::f64::consts::LOG10_2).floor().max(6.0) as usize;
        write!(f, "{}", self.to_decimal(digits.min(40)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{parse_decimal, pow2, rat, ratio};

    #[test]
    fn conversion_round_trips_exactly_for_dyadics() {
        let x = BigFloat::from_rational(&ratio(13, 8), 128);
        assert_eq!(x.to_rational(), ratio(13, 8));
        let y = BigFloat::from_i64(-42, 64);
        assert_eq!(y.to_rational(), rat(-42));
    }

    #[test]
    fn from_rational_is_correctly_rounded() {
        // 1/3 at prec p: nearest multiple of 2^-(p+1)... check against the
        // exact bound |x - 1/3| <= 2^-prec (relative half-ulp)
        for prec in [64u32, 100, 256] {
            let x = BigFloat::from_rational(&ratio(1, 3), prec);
            let err = (x.to_rational() - ratio(1, 3)).abs();
            assert!(err <= pow2(-(prec as i64 + 1)), "prec={prec} err={err}");
            // correctly rounded means no dyadic with prec bits is closer
            let up = x.to_rational() + pow2(x.exp);
            let down = x.to_rational() - pow2(x.exp);
            assert!((up - ratio(1, 3)).abs() >= err);
            assert!((down - ratio(1, 3)).abs() >= err);
        }
    }

    #[test]
    fn arithmetic_matches_exact_rationals_when_exact() {
        let a = BigFloat::from_rational(&ratio(3, 4), 128);
        let b = BigFloat::from_rational(&ratio(5, 8), 128);
        assert_eq!(a.add(&b).to_rational(), ratio(11, 8));
        assert_eq!(a.sub(&b).to_rational(), ratio(1, 8));
        assert_eq!(a.mul(&b).to_rational(), ratio(15, 32));
        // 6/5 is not dyadic; division rounds correctly instead
        let q = a.div(&b).unwrap();
        assert!((q.to_rational() - ratio(6, 5)).abs() <= pow2(-128));
        assert!(BigFloat::zero(64).div(&BigFloat::zero(64)).is_err());
    }

    #[test]
    fn sqrt_is_accurate() {
        let x = BigFloat::from_i64(2, 200);
        let r = x.sqrt();
        let err = (r.mul(&r).to_rational() - rat(2)).abs();
        assert!(err < pow2(-190));
        let four = BigFloat::from_i64(4, 64);
        assert_eq!(four.sqrt().to_rational(), rat(2));
    }

    #[test]
    fn printing_round_trips_at_thirty_digits() {
        // d <= prec * 0.30 must round-trip through the decimal rendering
        let c = parse_decimal("-0.304636562751640396971893222635").unwrap();
        let x = BigFloat::from_rational(&c, 256);
        let s = x.to_decimal(30);
        assert_eq!(s, "-0.304636562751640396971893222635");
        let back = BigFloat::from_rational(&parse_decimal(&s).unwrap(), 256);
        // identical to the half-ulp of the 30-digit rendering
        assert_eq!(back.to_decimal(30), s);
    }

    #[test]
    fn ordering_and_equality_ignore_precision() {
        let a = BigFloat::from_i64(2, 64);
        let b = BigFloat::from_i64(2, 256);
        assert_eq!(a, b);
        assert!(BigFloat::from_i64(-1, 64) < BigFloat::zero(64));
        assert!(BigFloat::from_i64(3, 64) > b);
    }
}
