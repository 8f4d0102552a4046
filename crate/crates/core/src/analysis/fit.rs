//! Least-squares asymptotics.
//!
//! The pot-2 expectations are asymptotically affine-bilinear; the fits pin
//! the free constants. For the two-outcome game the bilinear coefficient and
//! the `c1 - c2` gap are already exact (12/19 and 2/19), so only two
//! parameters are fitted — against exact per-line values, with the normal
//! equations formed and solved over rationals. The four-outcome fit leaves
//! all four parameters free and consumes certified high-precision values,
//! which are dyadic, so its normal equations are exact as well.

use super::AnalysisError;
use crate::arith::{
    decimal_string, parse_decimal, rat, ratio, solve_dense_exact, BigFloat, Rational,
};
use crate::chain::{Engine, GameState, SolveMode};
use crate::games::Game;
use crate::keyeq::reduced_solve_t;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Pot-direction constants of the affine-in-pot model.
#[derive(Clone, Debug, PartialEq)]
pub struct SCoefficients {
    pub s2: Rational,
    pub s1: Rational,
    pub s0: Rational,
}

/// Calibrated model constants. All entries are exact rationals; fitted
/// decimals are stored as the exact value the fit produced.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCoefficients {
    pub game: Game,
    pub c3: Rational,
    pub c2: Rational,
    pub c1: Rational,
    pub c0: Rational,
    pub s: Option<SCoefficients>,
}

impl ModelCoefficients {
    /// Pot-direction constants implied by the recurrence once `c2` is known:
    /// `s2 = 4/19`, `s1 = 8/19`, `s0 = c2 - 18/19`.
    fn simplified_s(c2: &Rational) -> SCoefficients {
        SCoefficients {
            s2: ratio(4, 19),
            s1: ratio(8, 19),
            s0: c2 - ratio(18, 19),
        }
    }

    /// The standard two-outcome calibration: exact 12/19 and 2/19 plus the
    /// 30-digit constants reproduced by [`fit_simplified`] on the default
    /// 30..60 grid.
    pub fn simplified_reference() -> Self {
        let c2 = parse_decimal("-0.304636562751640396971893222635").expect("constant");
        let c0 = parse_decimal("2.13102617218341081870452144156").expect("constant");
        ModelCoefficients {
            game: Game::Simplified,
            c3: ratio(12, 19),
            c1: &c2 + ratio(2, 19),
            s: Some(Self::simplified_s(&c2)),
            c2,
            c0,
        }
    }

    /// The standard four-outcome calibration, reproduced by [`fit_full`] on
    /// the default 15..25 grid.
    pub fn full_reference() -> Self {
        ModelCoefficients {
            game: Game::Full,
            c3: parse_decimal("2.21814151862618181904832628843").expect("constant"),
            c2: parse_decimal("-1.09709667033405910669478639669").expect("constant"),
            c1: parse_decimal("-0.447079544643588135688652268182").expect("constant"),
            c0: parse_decimal("2.83880783734231869675987135868").expect("constant"),
            s: None,
        }
    }
}

/// Evaluate the model exactly. Without `p` this is the pot-2 value
/// `c3·ab + c2·a + c1·b + c0`; with `p` the pot correction
/// `(p - 2)(s2·a + s1·b + s0)` is added, which requires the s-constants.
/// At `p = 2` the correction is exactly zero, so the result is bit-identical
/// to the pot-2 path.
pub fn eval_model(
    coeffs: &ModelCoefficients,
    a: u32,
    b: u32,
    p: Option<u32>,
) -> Result<Rational, AnalysisError> {
    let (ar, br) = (rat(a as i64), rat(b as i64));
    let mut out = &coeffs.c3 * &ar * &br + &coeffs.c2 * &ar + &coeffs.c1 * &br + &coeffs.c0;
    if let Some(p) = p {
        let s = coeffs.s.as_ref().ok_or(AnalysisError::MissingPotCoefficients)?;
        out += (rat(p as i64) - rat(2)) * (&s.s2 * &ar + &s.s1 * &br + &s.s0);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridBounds {
    pub a_min: u32,
    pub a_max: u32,
    pub b_min: u32,
    pub b_max: u32,
}

/// Fitted coefficients with residual diagnostics over the fit grid.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub coeffs: ModelCoefficients,
    pub grid: GridBounds,
    pub residual_max: Rational,
    pub residual_rms: BigFloat,
    /// Arithmetic that produced the fitted values.
    pub mode: &'static str,
    pub underdetermined: bool,
}

impl FitResult {
    fn diagnostics(points: &[(u32, u32, Rational)], coeffs: &ModelCoefficients) -> (Rational, BigFloat) {
        let mut max = rat(0);
        let mut sum_sq = rat(0);
        for (a, b, value) in points {
            let r = value - eval_model(coeffs, *a, *b, None).expect("pot-2 eval");
            if r.abs() > max {
                max = r.abs();
            }
            sum_sq += &r * &r;
        }
        let rms = BigFloat::from_rational(&(sum_sq / rat(points.len() as i64)), 256).sqrt();
        (max, rms)
    }
}

impl Serialize for FitResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let digits = 30;
        let mut st = serializer.serialize_struct("FitResult", 12)?;
        st.serialize_field("game", self.coeffs.game.id())?;
        st.serialize_field("c3", &decimal_string(&self.coeffs.c3, digits))?;
        st.serialize_field("c2", &decimal_string(&self.coeffs.c2, digits))?;
        st.serialize_field("c1", &decimal_string(&self.coeffs.c1, digits))?;
        st.serialize_field("c0", &decimal_string(&self.coeffs.c0, digits))?;
        if let Some(s) = &self.coeffs.s {
            st.serialize_field(
                "s",
                &[
                    decimal_string(&s.s2, digits),
                    decimal_string(&s.s1, digits),
                    decimal_string(&s.s0, digits),
                ],
            )?;
        } else {
            st.skip_field("s")?;
        }
        st.serialize_field(
            "grid",
            &[self.grid.a_min, self.grid.a_max, self.grid.b_min, self.grid.b_max],
        )?;
        st.serialize_field("residual_max", &decimal_string(&self.residual_max, 3))?;
        st.serialize_field("residual_rms", &self.residual_rms.to_decimal(3))?;
        st.serialize_field("mode", self.mode)?;
        st.serialize_field("underdetermined", &self.underdetermined)?;
        st.end()
    }
}

/// Exact pot-2 values for the grid, one per-line solve per diagonal.
fn simplified_grid_values(grid: &GridBounds) -> Result<Vec<(u32, u32, Rational)>, AnalysisError> {
    let lines: Vec<_> = ((grid.a_min + grid.b_min)..=(grid.a_max + grid.b_max)).collect();
    let solved: Vec<_> = lines
        .par_iter()
        .map(|&m| reduced_solve_t(m).map(|line| (m, line)))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (m, line) in solved {
        let a_lo = grid.a_min.max(m.saturating_sub(grid.b_max)).max(1);
        let a_hi = grid.a_max.min(m.saturating_sub(grid.b_min));
        for a in a_lo..=a_hi {
            out.push((a, m - a, line.t(a).clone()));
        }
    }
    Ok(out)
}

/// Two-parameter exact least squares for the two-outcome game on
/// `a_min..=a_max × b_min..=b_max`: with `c3 = 12/19` and `c1 = c2 + 2/19`
/// pinned, fit `y(a,b) = T(a,b) - (12/19)ab - (2/19)b` against `{a+b, 1}`.
///
/// Degenerate grids (a single distinct `a+b` value) return the
/// minimal-norm solution and set the flag.
pub fn fit_simplified(
    a_min: u32,
    a_max: u32,
    b_min: u32,
    b_max: u32,
) -> Result<FitResult, AnalysisError> {
    if a_min < 1 || a_min > a_max || b_min < 1 || b_min > b_max {
        return Err(AnalysisError::EmptyGrid);
    }
    let grid = GridBounds { a_min, a_max, b_min, b_max };
    let points = simplified_grid_values(&grid)?;
    let c3 = ratio(12, 19);
    let gap = ratio(2, 19);

    // y against {u, 1} with u = a + b
    let mut g_uu = rat(0);
    let mut g_u1 = rat(0);
    let mut r_u = rat(0);
    let mut r_1 = rat(0);
    let n = rat(points.len() as i64);
    for (a, b, t) in &points {
        let u = rat((a + b) as i64);
        let y = t - &c3 * rat((a * b) as i64) - &gap * rat(*b as i64);
        g_uu += &u * &u;
        g_u1 += &u;
        r_u += &u * &y;
        r_1 += y;
    }
    let det = &g_uu * &n - &g_u1 * &g_u1;
    let (c2, c0, underdetermined) = if det.is_zero() {
        // every grid point shares the same a+b: minimal-norm solution of
        // u·c2 + c0 = mean(y)
        let u = &g_u1 / &n;
        let mean = &r_1 / &n;
        let denom = &u * &u + rat(1);
        (&u * &mean / &denom, mean / denom, true)
    } else {
        let c2 = (&r_u * &n - &g_u1 * &r_1) / &det;
        let c0 = (&g_uu * &r_1 - &g_u1 * &r_u) / &det;
        (c2, c0, false)
    };

    let coeffs = ModelCoefficients {
        game: Game::Simplified,
        c3,
        c1: &c2 + gap,
        s: Some(ModelCoefficients::simplified_s(&c2)),
        c2,
        c0,
    };
    let (residual_max, residual_rms) = FitResult::diagnostics(&points, &coeffs);
    Ok(FitResult { coeffs, grid, residual_max, residual_rms, mode: "exact", underdetermined })
}

/// Four-parameter least squares for the four-outcome game on the grid,
/// against `{ab, a, b, 1}`. Values are solved to the given tolerance; the
/// normal equations over their (dyadic) rationals are exact.
pub fn fit_full(
    engine: &Engine,
    a_min: u32,
    a_max: u32,
    b_min: u32,
    b_max: u32,
    mode: &SolveMode,
) -> Result<FitResult, AnalysisError> {
    if a_min < 1 || a_min > a_max || b_min < 1 || b_min > b_max {
        return Err(AnalysisError::EmptyGrid);
    }
    let grid = GridBounds { a_min, a_max, b_min, b_max };
    let totals: Vec<u32> = ((a_min + b_min + 2)..=(a_max + b_max + 2)).collect();
    let tables = totals
        .par_iter()
        .map(|&total| engine.table(Game::Full, total, mode))
        .collect::<Result<Vec<_>, _>>()?;
    let mut points: Vec<(u32, u32, Rational)> = Vec::new();
    for table in tables {
        for a in a_min..=a_max {
            let total = table.total;
            if total < a + 2 + b_min || total > a + 2 + b_max {
                continue;
            }
            let b = total - a - 2;
            let q = table.get(&GameState::new(a, 2, b))?;
            points.push((a, b, q.to_rational()));
        }
    }
    if points.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }

    let basis = |a: u32, b: u32| {
        [rat((a * b) as i64), rat(a as i64), rat(b as i64), rat(1)]
    };
    let mut gram = vec![vec![rat(0); 4]; 4];
    let mut rhs = vec![rat(0); 4];
    for (a, b, q) in &points {
        let phi = basis(*a, *b);
        for i in 0..4 {
            for j in i..4 {
                gram[i][j] += &phi[i] * &phi[j];
            }
            rhs[i] += &phi[i] * q;
        }
    }
    for i in 0..4 {
        for j in 0..i {
            gram[i][j] = gram[j][i].clone();
        }
    }
    let solution = solve_dense_exact(&gram, &rhs).ok_or(AnalysisError::DegenerateFit)?;
    let [c3, c2, c1, c0]: [Rational; 4] =
        solution.try_into().expect("four coefficients");
    let coeffs = ModelCoefficients { game: Game::Full, c3, c2, c1, c0, s: None };
    let (residual_max, residual_rms) = FitResult::diagnostics(&points, &coeffs);
    Ok(FitResult {
        coeffs,
        grid,
        residual_max,
        residual_rms,
        mode: "hiprec",
        underdetermined: false,
    })
}
