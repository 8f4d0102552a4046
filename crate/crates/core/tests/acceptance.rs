//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with its runtime (visible with `--nocapture`).
//!
//! Criteria:
//! * A — the exact total-6 table,
//! * B — the line identity against the chain solver up to sum 40,
//! * C — the symbolic constants from both derivation routes,
//! * D — the two-parameter fit on 30..60 to >= 25 digits,
//! * E — the model error at (100, 100) below 1e-12,
//! * F — the four-parameter fit on 15..25 to >= 10 digits and the spot
//!       check at (35, 22) below 1e-10,
//! * G — play-time reports 28.10 and 69.33 minutes within 0.01,
//! * H — the gambler closed form for all thresholds up to 20,
//! * I — per-line solver vs chain solver up to line 40, expansion vs
//!       closed-form coefficients up to 12,
//! * J — million-trial simulations within four standard errors.

use dreidel_core::analysis::{
    derive_constants_recurrence, duration_report, eval_model, fit_full, fit_simplified,
    verify_conjecture_in_key, ModelCoefficients,
};
use dreidel_core::arith::{
    agrees_to_digits, pow10_rational, rat, ratio, AffineExpr, Rational, Unknown,
};
use dreidel_core::chain::{Engine, GameState, SolveMode, SpinValue};
use dreidel_core::games::{gambler_closed_form, simulate, Game, GamblerParams, DEFAULT_SPIN_CAP};
use dreidel_core::keyeq::{expand_shin_chain, key_coefficients, reduced_solve_t, verify_key};
use num_traits::Signed;
use std::time::{Duration, Instant};

fn report(name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    println!("criterion {name}: PASS ({elapsed:.2?})");
    assert!(
        elapsed <= budget,
        "criterion {name} exceeded its runtime budget: {elapsed:.2?} > {budget:?}"
    );
}

fn exact(v: SpinValue) -> Rational {
    v.as_exact().expect("exact value").clone()
}

#[test]
fn criterion_a_exact_table_reproduction() {
    let started = Instant::now();
    let engine = Engine::new();
    let expect = [
        ((1u32, 1u32, 4u32), ratio(33, 16)),
        ((1, 2, 3), ratio(5, 2)),
        ((1, 3, 2), ratio(9, 4)),
        ((1, 4, 1), rat(1)),
        ((2, 1, 3), ratio(57, 16)),
        ((2, 2, 2), rat(3)),
        ((2, 3, 1), ratio(3, 2)),
        ((3, 1, 2), ratio(15, 4)),
        ((3, 2, 1), ratio(17, 8)),
        ((4, 1, 1), ratio(9, 4)),
    ];
    for ((a, p, b), want) in expect {
        let got = engine
            .expected_spins(Game::Simplified, GameState::new(a, p, b), &SolveMode::Exact)
            .unwrap();
        assert_eq!(exact(got), want, "D({a},{p},{b})");
    }
    report("A (exact table reproduction)", started, Duration::from_secs(1));
}

#[test]
fn criterion_b_key_identity() {
    let started = Instant::now();
    let outcome = verify_key(40).unwrap();
    assert!(
        outcome.all_pass(),
        "violations, worst discrepancy {}",
        outcome.worst_discrepancy
    );
    assert_eq!(outcome.lines.len(), 39);
    report("B (key identity to line 40)", started, Duration::from_secs(300));
}

#[test]
fn criterion_c_symbolic_constants() {
    let started = Instant::now();
    let constant = |sol: &dreidel_core::arith::SystemSolution, u: Unknown| -> Rational {
        let e = sol.get(u).unwrap_or_else(|| panic!("{u} unsolved"));
        assert!(e.is_constant() || u == Unknown::S0 || u == Unknown::C1);
        e.constant.clone()
    };
    let rec = derive_constants_recurrence().unwrap();
    assert_eq!(constant(&rec, Unknown::C3), ratio(12, 19));
    assert_eq!(constant(&rec, Unknown::S2), ratio(4, 19));
    assert_eq!(constant(&rec, Unknown::S1), ratio(8, 19));
    let s0 = rec.get(Unknown::S0).unwrap();
    assert_eq!(
        s0,
        &AffineExpr::unknown(Unknown::C2).add(&AffineExpr::constant(ratio(-18, 19))),
        "s0 = c2 - 18/19"
    );
    let c1 = rec.get(Unknown::C1).unwrap();
    assert_eq!(
        c1,
        &AffineExpr::unknown(Unknown::C2).add(&AffineExpr::constant(ratio(2, 19))),
        "c1 = c2 + 2/19"
    );

    let key = verify_conjecture_in_key().unwrap();
    for sol in [&key.case_a_above_b, &key.case_a_le_b] {
        assert_eq!(constant(sol, Unknown::C3), ratio(12, 19));
        let c1 = sol.get(Unknown::C1).unwrap();
        assert_eq!(c1.coeff(Unknown::C2), rat(1));
        assert_eq!(c1.constant, ratio(2, 19));
    }
    report("C (symbolic constants)", started, Duration::from_secs(1));
}

#[test]
fn criterion_d_simplified_fit() {
    let started = Instant::now();
    let fit = fit_simplified(30, 60, 30, 60).unwrap();
    let reference = ModelCoefficients::simplified_reference();
    assert!(
        agrees_to_digits(&fit.coeffs.c2, &reference.c2, 25),
        "c2 = {}",
        dreidel_core::arith::decimal_string(&fit.coeffs.c2, 30)
    );
    assert!(
        agrees_to_digits(&fit.coeffs.c0, &reference.c0, 25),
        "c0 = {}",
        dreidel_core::arith::decimal_string(&fit.coeffs.c0, 30)
    );
    // residual sanity on the fitted grid
    assert!(fit.residual_max < pow10_rational(-17), "residual {}", fit.residual_max);
    report("D (simplified fit, 25+ digits)", started, Duration::from_secs(900));
}

#[test]
fn criterion_e_error_bound_at_100() {
    let started = Instant::now();
    let line = reduced_solve_t(200).unwrap();
    let t = line.t(100);
    let model = eval_model(&ModelCoefficients::simplified_reference(), 100, 100, None).unwrap();
    let err = (t - model).abs();
    assert!(err < pow10_rational(-12), "|T - model| = {err}");
    report("E (1e-12 error at (100,100))", started, Duration::from_secs(600));
}

#[test]
fn criterion_f_full_game_conjecture() {
    let started = Instant::now();
    let engine = Engine::new();
    let mode = SolveMode::hiprec_default();
    let fit = fit_full(&engine, 15, 25, 15, 25, &mode).unwrap();
    let reference = ModelCoefficients::full_reference();
    for (name, got, want) in [
        ("ab", &fit.coeffs.c3, &reference.c3),
        ("a", &fit.coeffs.c2, &reference.c2),
        ("b", &fit.coeffs.c1, &reference.c1),
        ("1", &fit.coeffs.c0, &reference.c0),
    ] {
        assert!(
            agrees_to_digits(got, want, 10),
            "{name} coefficient: {}",
            dreidel_core::arith::decimal_string(got, 15)
        );
    }
    // spot check far outside the fit grid
    let q = engine
        .expected_spins(Game::Full, GameState::new(35, 2, 22), &mode)
        .unwrap();
    let approx = eval_model(&fit.coeffs, 35, 22, None).unwrap();
    let spot = (q.to_rational() - approx).abs();
    assert!(spot < pow10_rational(-10), "|Q - model| at (35,22) = {spot}");
    report("F (full-game conjecture)", started, Duration::from_secs(1800));
}

#[test]
fn criterion_g_durations() {
    let started = Instant::now();
    let engine = Engine::new();
    let mode = SolveMode::hiprec_default();
    let ten = duration_report(&engine, 10, &rat(10), &mode).unwrap();
    let diff = (ten.to_rational() - ratio(2810, 100)).abs();
    assert!(diff <= ratio(1, 100), "10 nuts: {} min", ten.to_decimal(6));
    let fifteen = duration_report(&engine, 15, &rat(10), &mode).unwrap();
    let diff = (fifteen.to_rational() - ratio(6933, 100)).abs();
    assert!(diff <= ratio(1, 100), "15 nuts: {} min", fifteen.to_decimal(6));
    report("G (play-time reports)", started, Duration::from_secs(300));
}

#[test]
fn criterion_h_gambler_oracle() {
    let started = Instant::now();
    let engine = Engine::new();
    for m in 1..=20i64 {
        for n in 1..=20i64 {
            for a in -n..=m {
                let params = GamblerParams::new(m, n, a).unwrap();
                let solved = engine
                    .expected_spins(Game::Gambler, params.state(), &SolveMode::Exact)
                    .unwrap();
                assert_eq!(
                    exact(solved),
                    gambler_closed_form(&params),
                    "M={m} N={n} a={a}"
                );
            }
        }
    }
    report("H (gambler closed form)", started, Duration::from_secs(10));
}

#[test]
fn criterion_i_dual_method_equivalence() {
    let started = Instant::now();
    for m in 2..=40u32 {
        let line = reduced_solve_t(m).unwrap();
        assert!(!line.used_fallback, "line {m} fell back to the chain solver");
        let engine = Engine::new();
        let table = engine.table(Game::Simplified, m + 2, &SolveMode::Exact).unwrap();
        for x in 1..m {
            let chain = table.get(&GameState::new(x, 2, m - x)).unwrap();
            assert_eq!(*line.t(x), exact(chain), "T({x},{}) line {m}", m - x);
        }
    }
    for a in 1..=12u32 {
        for b in 1..=12u32 {
            let expanded = expand_shin_chain(a, 2, b).unwrap();
            let closed = key_coefficients(a, b);
            assert_eq!(expanded.constant, closed.constant, "constant at ({a},{b})");
            assert_eq!(expanded.terms, closed.terms, "coefficients at ({a},{b})");
        }
    }
    report("I (dual-method equivalence)", started, Duration::from_secs(300));
}

#[test]
fn criterion_j_statistical_validation() {
    let started = Instant::now();
    // fixed documented seed for the acceptance runs
    const SEED: u64 = 1729;
    let cases = [
        (Game::Simplified, GameState::new(2, 2, 2), rat(3)),
        (Game::Full, GameState::new(1, 1, 1), rat(2)),
        // gambler M = N = 5 at position 0 encodes to (5, 0, 5)
        (Game::Gambler, GameState::new(5, 0, 5), rat(25)),
    ];
    for (game, start, truth) in cases {
        let sim = simulate(game, start, 1_000_000, SEED, DEFAULT_SPIN_CAP).unwrap();
        let diff = (sim.mean.to_rational() - &truth).abs();
        let four_se = sim.stderr.to_rational() * rat(4);
        assert!(
            diff <= four_se,
            "{game:?} {start}: mean {} vs {truth} (4se = {})",
            sim.mean.to_decimal(8),
            sim.stderr.to_decimal(4)
        );
    }
    report("J (statistical validation)", started, Duration::from_secs(120));
}
