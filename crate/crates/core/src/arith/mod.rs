//! Exact arbitrary-precision numeric types and the small symbolic layer
//! shared by every other module.
//!
//! Values live in one of three domains:
//! * [`Rational`] — canonical arbitrary-precision fractions, the domain of
//!   every exact expectation,
//! * [`BigFloat`] — binary floating point at a configurable precision, used
//!   by the iterative solver and for rendering constants,
//! * [`AffineExpr`] / [`PolyABP`] — affine expressions over a closed set of
//!   named unknowns and polynomials in the formal variables `a`, `b`, `p`,
//!   the vehicle for the symbolic derivations.

mod affine;
mod bigfloat;
mod dense;
mod poly;

pub use affine::{solve_affine_system, AffineExpr, SystemSolution, Unknown, PIVOT_ORDER};
pub use bigfloat::{BigFloat, DEFAULT_PRECISION_BITS};
pub use dense::solve_dense_exact;
pub use poly::{linear_image, PolyABP, SubstMap, Var};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Canonical arbitrary-precision fraction. `num_rational` keeps the
/// denominator positive and the fraction fully reduced after every
/// operation, which is exactly the invariant we need.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("could not parse {0:?} as a rational")]
    BadRational(String),
    #[error("could not parse {0:?} as a decimal number")]
    BadDecimal(String),
    #[error("geometric sum requires |x| < 1")]
    GeometricDiverges,
    #[error("geometric sum degree must be 0, 1 or 2 (got {0})")]
    GeometricDegree(u8),
    #[error("substitution images must be affine with integer coefficients")]
    NonAffineMapping,
    #[error("product of two expressions that both carry unknowns is not affine")]
    NonlinearUnknowns,
    #[error("inconsistent affine system")]
    Inconsistent,
}

/// Integer as a rational.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Small fraction literal.
pub fn ratio(n: i64, d: i64) -> Rational {
    assert!(d != 0, "ratio denominator must be nonzero");
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// 2^k as a rational, k may be negative.
pub fn pow2(k: i64) -> Rational {
    let one = BigInt::one();
    if k >= 0 {
        Rational::from_integer(one << k as u64)
    } else {
        Rational::new(one.clone(), one << (-k) as u64)
    }
}

/// Parse the wire format for exact values: `"33/16"`, or a plain integer
/// without the slash.
pub fn parse_rational(s: &str) -> Result<Rational, ArithError> {
    s.trim()
        .parse::<Rational>()
        .map_err(|_| ArithError::BadRational(s.to_string()))
}

/// Parse a decimal literal (optional sign, fraction part and exponent) into
/// the exact rational it denotes.
pub fn parse_decimal(s: &str) -> Result<Rational, ArithError> {
    let t = s.trim();
    let bad = || ArithError::BadDecimal(s.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    let (mantissa_str, exp_str) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], Some(&t[i + 1..])),
        None => (t, None),
    };
    let (sign, digits_part) = match mantissa_str.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa_str.strip_prefix('+').unwrap_or(mantissa_str)),
    };
    let (int_part, frac_part) = match digits_part.find('.') {
        Some(i) => (&digits_part[..i], &digits_part[i + 1..]),
        None => (digits_part, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().all(|c| c.is_ascii_digit()) || !frac_part.bytes().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut numer: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().map_err(|_| bad())?
    };
    let ten = BigInt::from(10);
    for c in frac_part.bytes() {
        numer = &numer * &ten + BigInt::from((c - b'0') as u32);
    }
    let mut value = Rational::new(numer * BigInt::from(sign), BigInt::one());
    let mut scale = -(frac_part.len() as i64);
    if let Some(e) = exp_str {
        scale += e.parse::<i64>().map_err(|_| bad())?;
    }
    let ten = Rational::from_integer(BigInt::from(10));
    if scale > 0 {
        for _ in 0..scale {
            value *= &ten;
        }
    } else {
        for _ in 0..(-scale) {
            value /= &ten;
        }
    }
    Ok(value)
}

/// Closed form of `Σ_{i≥1} i^d x^i` for `d ∈ {0,1,2}` and `|x| < 1`.
pub fn geometric_poly_sum(d: u8, x: &Rational) -> Result<Rational, ArithError> {
    if x.abs() >= rat(1) {
        return Err(ArithError::GeometricDiverges);
    }
    let one = rat(1);
    let om = &one - x;
    match d {
        0 => Ok(x / &om),
        1 => Ok(x / (&om * &om)),
        2 => Ok(x * (&one + x) / (&om * &om * &om)),
        other => Err(ArithError::GeometricDegree(other)),
    }
}

/// floor(log10(|r|)) for nonzero r.
fn decimal_exponent(r: &Rational) -> i64 {
    debug_assert!(!r.is_zero());
    let n = r.numer().magnitude();
    let d = r.denom().magnitude();
    // bits -> decimal estimate, then correct by direct comparison.
    let mut e = ((n.bits() as i64 - d.bits() as i64) as f64 * std::f64::consts::LOG10_2).floor() as i64;
    let abs = r.abs();
    loop {
        let p = pow10(e);
        if abs < p {
            e -= 1;
            continue;
        }
        if abs >= pow10(e + 1) {
            e += 1;
            continue;
        }
        return e;
    }
}

/// 10^k as a rational, k may be negative.
pub fn pow10_rational(k: i64) -> Rational {
    let ten = BigInt::from(10);
    if k >= 0 {
        Rational::from_integer(ten.pow(k as u32))
    } else {
        Rational::new(BigInt::one(), ten.pow((-k) as u32))
    }
}

use pow10_rational as pow10;

/// Round a rational to the nearest integer, ties to even.
pub fn round_half_even(r: &Rational) -> BigInt {
    let (q, rem) = r.numer().div_mod_floor(r.denom());
    // rem in [0, denom); compare 2*rem with denom
    let twice: BigInt = &rem * 2;
    match twice.cmp(r.denom()) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q.is_even() {
                q
            } else {
                q + 1
            }
        }
    }
}

/// Render a rational to `digits` significant decimal digits (half-even).
///
/// Small exponents print in plain positional form, everything else in
/// scientific notation.
pub fn decimal_string(r: &Rational, digits: usize) -> String {
    let digits = digits.max(1);
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let abs = r.abs();
    let mut e = decimal_exponent(&abs);
    let mut mant = round_half_even(&(&abs * pow10(digits as i64 - 1 - e)));
    let cap = BigInt::from(10).pow(digits as u32);
    if mant >= cap {
        // rounding carried into a new leading digit, e.g. 9.99 -> 10.0
        mant /= 10;
        e += 1;
    }
    let ds = mant.to_string();
    debug_assert_eq!(ds.len(), digits);
    let sign = if neg { "-" } else { "" };
    if e >= -4 && (e as i128) < digits as i128 + 6 {
        // positional
        if e >= digits as i64 - 1 {
            let zeros = (e - digits as i64 + 1) as usize;
            format!("{sign}{ds}{}", "0".repeat(zeros))
        } else if e >= 0 {
            let point = (e + 1) as usize;
            format!("{sign}{}.{}", &ds[..point], &ds[point..])
        } else {
            let zeros = (-e - 1) as usize;
            format!("{sign}0.{}{}", "0".repeat(zeros), ds)
        }
    } else if digits == 1 {
        format!("{sign}{ds}e{e}")
    } else {
        format!("{sign}{}.{}e{e}", &ds[..1], &ds[1..])
    }
}

/// Render a rational in fixed-point form with `frac_digits` digits after the
/// point (half-even), e.g. `format_fixed(169/6, 2) == "28.17"`.
pub fn format_fixed(r: &Rational, frac_digits: usize) -> String {
    let scaled = round_half_even(&(r * pow10(frac_digits as i64)));
    let neg = scaled.sign() == Sign::Minus;
    let mag = scaled.magnitude().to_string();
    let mag = if mag.len() <= frac_digits {
        format!("{}{}", "0".repeat(frac_digits - mag.len() + 1), mag)
    } else {
        mag
    };
    let split = mag.len() - frac_digits;
    let sign = if neg { "-" } else { "" };
    if frac_digits == 0 {
        format!("{sign}{mag}")
    } else {
        format!("{sign}{}.{}", &mag[..split], &mag[split..])
    }
}

/// True when `x` matches `reference` to at least `digits` significant
/// decimal digits, i.e. the difference is below one unit in the reference's
/// `digits`-th significant place.
pub fn agrees_to_digits(x: &Rational, reference: &Rational, digits: u32) -> bool {
    if reference.is_zero() {
        return x.is_zero();
    }
    let scale = decimal_exponent(&reference.abs()) + 1 - digits as i64;
    (x - reference).abs() < pow10(scale)
}

/// Exact conversion to f64 is not generally possible; this gives the nearest
/// double, good enough for diagnostics and initial guesses.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back to mantissa/denominator scaling for extreme exponents
        let shift = r.numer().bits() as i64 - r.denom().bits() as i64;
        let scaled = r * pow2(-shift);
        scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_wire_format_round_trips() {
        let r = ratio(33, 16);
        assert_eq!(r.to_string(), "33/16");
        assert_eq!(parse_rational("33/16").unwrap(), r);
        // integers serialize without the slash
        assert_eq!(rat(25).to_string(), "25");
        assert_eq!(parse_rational("25").unwrap(), rat(25));
        assert_eq!(parse_rational("-7/3").unwrap(), ratio(-7, 3));
        assert!(parse_rational("x/y").is_err());
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_decimal("-1.5e2").unwrap(), rat(-150));
        assert_eq!(parse_decimal("2.5e-1").unwrap(), ratio(1, 4));
        assert_eq!(
            parse_decimal("-0.304636562751640396971893222635").unwrap(),
            Rational::new(
                "-304636562751640396971893222635".parse().unwrap(),
                BigInt::from(10).pow(30)
            )
        );
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("1.2.3").is_err());
    }

    #[test]
    fn geometric_sums_match_closed_forms() {
        let x = ratio(1, 4);
        assert_eq!(geometric_poly_sum(0, &x).unwrap(), ratio(1, 3));
        assert_eq!(geometric_poly_sum(1, &x).unwrap(), ratio(4, 9));
        assert_eq!(geometric_poly_sum(2, &x).unwrap(), ratio(20, 27));
        assert_eq!(geometric_poly_sum(3, &x), Err(ArithError::GeometricDegree(3)));
        assert_eq!(geometric_poly_sum(0, &rat(1)), Err(ArithError::GeometricDiverges));
    }

    #[test]
    fn geometric_sum_agrees_with_partial_sums() {
        // brute-force oracle: truncated sums converge to the closed form
        for x in [ratio(1, 4), ratio(1, 2)] {
            for d in 0..=2u8 {
                let mut partial = rat(0);
                let mut xp = rat(1);
                for i in 1..=200i64 {
                    xp *= &x;
                    partial += rat(i.pow(d as u32)) * &xp;
                }
                let exact = geometric_poly_sum(d, &x).unwrap();
                let tail = (&exact - &partial).abs();
                // tail is bounded by a crude multiple of x^200
                let bound = rat(200i64.pow(d as u32) * 16) * pow2(-200);
                assert!(tail < bound, "d={d} x={x} tail={tail}");
                assert!(partial < exact);
            }
        }
    }

    #[test]
    fn brute_force_sixty_terms_pin_d2_value() {
        // independent check of the d=2 closed form at x = 1/4
        let x = ratio(1, 4);
        let mut partial = rat(0);
        let mut xp = rat(1);
        for i in 1..=60i64 {
            xp *= &x;
            partial += rat(i * i) * &xp;
        }
        let diff = (ratio(20, 27) - partial).abs();
        assert!(diff < pow2(-100));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&ratio(1, 4), 3), "0.250");
        assert_eq!(decimal_string(&rat(25), 2), "25");
        assert_eq!(decimal_string(&ratio(-1, 3), 5), "-0.33333");
        assert_eq!(decimal_string(&rat(0), 10), "0");
        assert_eq!(decimal_string(&ratio(1, 1000000), 3), "1.00e-6");
        assert_eq!(decimal_string(&pow10(-12), 3), "1.00e-12");
        assert_eq!(decimal_string(&ratio(999, 100), 2), "10");
        assert_eq!(format_fixed(&ratio(12, 5), 2), "2.40");
        assert_eq!(format_fixed(&ratio(-1, 8), 2), "-0.12");
        assert_eq!(format_fixed(&rat(3), 0), "3");
    }

    #[test]
    fn half_even_rounding() {
        assert_eq!(round_half_even(&ratio(5, 2)), BigInt::from(2));
        assert_eq!(round_half_even(&ratio(7, 2)), BigInt::from(4));
        assert_eq!(round_half_even(&ratio(-5, 2)), BigInt::from(-2));
        assert_eq!(round_half_even(&ratio(9, 4)), BigInt::from(2));
    }
}
