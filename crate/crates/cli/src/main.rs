//! Command-line surface for the dreidel game-length library: solving,
//! verification, constant derivation, fitting, simulation and play-time
//! reports, with optional file-based caching.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dreidel_core::analysis::{
    derive_constants_recurrence, duration_report, epsilon, eval_model, fit_full, fit_simplified,
    verify_conjecture_in_key, ModelCoefficients,
};
use dreidel_core::arith::{
    decimal_string, format_fixed, pow10_rational, rat, AffineExpr, BigFloat, Unknown, PIVOT_ORDER,
};
use dreidel_core::chain::{
    read_jsonl, table_records, write_jsonl, CacheRecord, Engine, GameState, SolveMode, SpinValue,
};
use dreidel_core::games::{gambler_closed_form, simulate, Game, GamblerParams, DEFAULT_SPIN_CAP};
use dreidel_core::keyeq::verify_key;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dreidel",
    version,
    about = "Expected game lengths for two-player dreidel variants",
    max_term_width = 100
)]
struct Cli {
    /// JSON-lines cache file: loaded before computing, updated afterwards.
    /// Without it every run is fully in-memory.
    #[arg(long, global = true, value_name = "PATH")]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameArg {
    Simplified,
    Full,
    Gambler,
}

impl From<GameArg> for Game {
    fn from(g: GameArg) -> Game {
        match g {
            GameArg::Simplified => Game::Simplified,
            GameArg::Full => Game::Full,
            GameArg::Gambler => Game::Gambler,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Hiprec,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct StateArgs {
    /// Nut count of the player about to spin (gambler: current position,
    /// may be negative).
    #[arg(long, allow_negative_numbers = true)]
    a: i64,
    /// Pot nut count (dreidel games; default 2, the fresh-ante pot).
    #[arg(long)]
    p: Option<u32>,
    /// Nut count of the waiting player (dreidel games).
    #[arg(long)]
    b: Option<u32>,
    /// Gambler win threshold.
    #[arg(long = "M")]
    m: Option<i64>,
    /// Gambler ruin threshold.
    #[arg(long = "N")]
    n: Option<i64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Expected spins from one state.
    Solve {
        #[arg(long, value_enum)]
        game: GameArg,
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        /// Significant digits for high-precision output.
        #[arg(long, default_value_t = 30)]
        digits: u32,
    },
    /// Expected spins for every state of one conserved total.
    Table {
        #[arg(long, value_enum)]
        game: GameArg,
        #[arg(long)]
        total: u32,
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long, default_value_t = 30)]
        digits: u32,
    },
    /// Check the pot-2 line identity against the chain solver.
    VerifyKey {
        #[arg(long = "max-sum")]
        max_sum: u32,
    },
    /// Derive the model constants from the game recurrence.
    DeriveConstants,
    /// Re-derive the shared constants through the line identity.
    VerifyConjectureKey,
    /// Least-squares calibration of the free model constants.
    Fit {
        #[arg(long, value_enum)]
        game: GameArg,
        #[arg(long)]
        min: u32,
        #[arg(long)]
        max: u32,
        /// Significant digits for the printed coefficients.
        #[arg(long, default_value_t = 30)]
        digits: u32,
    },
    /// Model error at one pot-2 state, against the built-in calibration.
    Error {
        #[arg(long, value_enum)]
        game: GameArg,
        #[arg(long)]
        a: u32,
        #[arg(long)]
        b: u32,
    },
    /// Monte Carlo estimate of the expected spins.
    Simulate {
        #[arg(long, value_enum)]
        game: GameArg,
        #[arg(long)]
        a: u32,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        b: u32,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Average play time in minutes for the four-outcome game.
    Duration {
        #[arg(long)]
        nuts: u32,
        #[arg(long = "seconds-per-spin")]
        seconds_per_spin: u32,
    },
    /// Gambler's-ruin expected duration by the closed form.
    Gamblers {
        #[arg(long = "M")]
        m: i64,
        #[arg(long = "N")]
        n: i64,
        #[arg(long, allow_negative_numbers = true)]
        a: i64,
        /// Cross-check the closed form against the chain solver.
        #[arg(long)]
        verify: bool,
    },
}

fn precision_bits() -> Result<u32> {
    match std::env::var("DREIDEL_PRECISION_BITS") {
        Ok(s) => {
            let bits: u32 = s
                .parse()
                .map_err(|_| anyhow!("DREIDEL_PRECISION_BITS must be an integer, got {s:?}"))?;
            if bits < 128 {
                bail!("DREIDEL_PRECISION_BITS must be at least 128, got {bits}");
            }
            Ok(bits)
        }
        Err(_) => Ok(256),
    }
}

fn hiprec_mode(bits: u32) -> SolveMode {
    SolveMode::HiPrec {
        precision_bits: bits,
        tol: BigFloat::from_rational(&pow10_rational(-30), 64),
    }
}

fn solve_mode(arg: ModeArg, bits: u32) -> SolveMode {
    match arg {
        ModeArg::Exact => SolveMode::Exact,
        ModeArg::Hiprec => hiprec_mode(bits),
    }
}

fn render_value(v: &SpinValue, digits: u32) -> String {
    match v {
        SpinValue::Exact(r) => r.to_string(),
        SpinValue::HiPrec { value, .. } => value.to_decimal(digits as usize),
    }
}

fn dreidel_state(state: &StateArgs) -> Result<GameState> {
    if state.m.is_some() || state.n.is_some() {
        bail!("--M/--N apply to the gambler game only");
    }
    let a = u32::try_from(state.a).map_err(|_| anyhow!("--a must be nonnegative for dreidel games"))?;
    let b = state.b.ok_or_else(|| anyhow!("dreidel games need --b"))?;
    Ok(GameState::new(a, state.p.unwrap_or(2), b))
}

fn gambler_state(state: &StateArgs) -> Result<GameState> {
    let m = state.m.ok_or_else(|| anyhow!("gambler needs --M"))?;
    let n = state.n.ok_or_else(|| anyhow!("gambler needs --N"))?;
    if state.b.is_some() || state.p.is_some() {
        bail!("--p/--b do not apply to the gambler game; use --M/--N/--a");
    }
    let params = GamblerParams::new(m, n, state.a)?;
    Ok(params.state())
}

fn load_cache(engine: &Engine, path: &PathBuf, bits: u32) -> Result<Vec<CacheRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = fs::File::open(path).with_context(|| format!("reading cache {path:?}"))?;
    let records = read_jsonl(std::io::BufReader::new(file))
        .with_context(|| format!("unreadable cache file {path:?}"))?;
    engine.preload(&records, bits)?;
    Ok(records)
}

fn store_cache(engine: &Engine, path: &PathBuf, loaded: Vec<CacheRecord>, digits: u32) -> Result<()> {
    // merge what was loaded with everything solved this run
    let mut merged: BTreeMap<(String, u32, u32, u32, String), CacheRecord> = loaded
        .into_iter()
        .map(|r| ((r.game.clone(), r.a, r.p, r.b, r.mode.clone()), r))
        .collect();
    for table in engine.solved_tables() {
        for rec in table_records(&table, digits) {
            merged.insert((rec.game.clone(), rec.a, rec.p, rec.b, rec.mode.clone()), rec);
        }
    }
    let records: Vec<CacheRecord> = merged.into_values().collect();
    let mut out = Vec::new();
    write_jsonl(&mut out, &records)?;
    fs::write(path, out).with_context(|| format!("writing cache {path:?}"))?;
    Ok(())
}

fn print_assignment(solved: &BTreeMap<Unknown, AffineExpr>, free: &[Unknown]) {
    for u in PIVOT_ORDER {
        if let Some(expr) = solved.get(&u) {
            println!("{u} = {expr}");
        }
    }
    let free_names: Vec<&str> = free.iter().map(|u| u.as_str()).collect();
    println!("free: {}", free_names.join(", "));
}

/// Built-in calibration used by `error`: exact constants where the
/// derivation pins them, fitted 30-digit constants otherwise. The gambler
/// walk is its own model, `a·b` exactly.
fn reference_model(game: Game, bits: u32) -> (ModelCoefficients, SolveMode) {
    match game {
        Game::Simplified => (ModelCoefficients::simplified_reference(), SolveMode::Exact),
        Game::Full => (ModelCoefficients::full_reference(), hiprec_mode(bits)),
        Game::Gambler => (
            ModelCoefficients { game, c3: rat(1), c2: rat(0), c1: rat(0), c0: rat(0), s: None },
            SolveMode::Exact,
        ),
    }
}

fn run(cli: Cli) -> Result<()> {
    let bits = precision_bits()?;
    let engine = Engine::new();
    let loaded = match &cli.cache {
        Some(path) => load_cache(&engine, path, bits)?,
        None => Vec::new(),
    };

    match &cli.cmd {
        Cmd::Solve { game, state, mode, digits } => {
            let game = Game::from(*game);
            let start = match game {
                Game::Gambler => gambler_state(state)?,
                _ => dreidel_state(state)?,
            };
            let value = engine.expected_spins(game, start, &solve_mode(*mode, bits))?;
            println!("{}", render_value(&value, *digits));
        }
        Cmd::Table { game, total, format, mode, digits } => {
            let game = Game::from(*game);
            let table = engine.table(game, *total, &solve_mode(*mode, bits))?;
            match format {
                FormatArg::Json => {
                    let records = table_records(&table, *digits);
                    let mut out = Vec::new();
                    write_jsonl(&mut out, &records)?;
                    std::io::stdout().write_all(&out)?;
                }
                FormatArg::Csv => {
                    println!("a,p,b,value");
                    for (s, v) in table.iter() {
                        println!("{},{},{},{}", s.a, s.p, s.b, render_value(&v, *digits));
                    }
                }
            }
        }
        Cmd::VerifyKey { max_sum } => {
            let report = verify_key(*max_sum)?;
            for line in &report.lines {
                if line.failures.is_empty() {
                    println!("line {:>3}: ok ({} states)", line.m, line.checked);
                } else {
                    println!("line {:>3}: FAIL ({} violations)", line.m, line.failures.len());
                }
            }
            if report.all_pass() {
                println!("all lines up to {max_sum} satisfy the identity exactly");
            } else {
                bail!("identity violated; worst discrepancy {}", report.worst_discrepancy);
            }
        }
        Cmd::DeriveConstants => {
            let sol = derive_constants_recurrence()?;
            print_assignment(&sol.solved, &sol.free);
        }
        Cmd::VerifyConjectureKey => {
            let check = verify_conjecture_in_key()?;
            println!("case a >= b+1:");
            print_assignment(&check.case_a_above_b.solved, &check.case_a_above_b.free);
            println!("case a <= b:");
            print_assignment(&check.case_a_le_b.solved, &check.case_a_le_b.free);
            println!("cases agree");
        }
        Cmd::Fit { game, min, max, digits } => {
            let fit = match game {
                GameArg::Simplified => fit_simplified(*min, *max, *min, *max)?,
                GameArg::Full => fit_full(&engine, *min, *max, *min, *max, &hiprec_mode(bits))?,
                GameArg::Gambler => bail!("fit applies to the dreidel games"),
            };
            println!("{}", serde_json::to_string_pretty(&fit)?);
            let d = *digits as usize;
            println!("c3 = {}", decimal_string(&fit.coeffs.c3, d));
            println!("c2 = {}", decimal_string(&fit.coeffs.c2, d));
            println!("c1 = {}", decimal_string(&fit.coeffs.c1, d));
            println!("c0 = {}", decimal_string(&fit.coeffs.c0, d));
        }
        Cmd::Error { game, a, b } => {
            let game = Game::from(*game);
            let (coeffs, mode) = reference_model(game, bits);
            let e = epsilon(&engine, game, &coeffs, *a, *b, &mode)?;
            let model = eval_model(&coeffs, *a, *b, None)?;
            println!(
                "value - model = {} (model {})",
                decimal_string(&e, 6),
                decimal_string(&model, 20)
            );
        }
        Cmd::Simulate { game, a, p, b, trials, seed } => {
            let result = simulate(
                Game::from(*game),
                GameState::new(*a, *p, *b),
                *trials,
                *seed,
                DEFAULT_SPIN_CAP,
            )?;
            println!("{}", serde_json::to_string(&result)?);
        }
        Cmd::Duration { nuts, seconds_per_spin } => {
            let minutes = duration_report(
                &engine,
                *nuts,
                &rat(*seconds_per_spin as i64),
                &hiprec_mode(bits),
            )?;
            println!("{}", format_fixed(&minutes.to_rational(), 2));
        }
        Cmd::Gamblers { m, n, a, verify } => {
            let params = GamblerParams::new(*m, *n, *a)?;
            let expected = gambler_closed_form(&params);
            if *verify {
                let solved =
                    engine.expected_spins(Game::Gambler, params.state(), &SolveMode::Exact)?;
                let solved = solved.to_rational();
                if solved == expected {
                    println!("{expected} (chain solver agrees exactly)");
                } else {
                    bail!("closed form {expected} but chain solver found {solved}");
                }
            } else {
                println!("{expected}");
            }
        }
    }

    if let Some(path) = &cli.cache {
        store_cache(&engine, path, loaded, 30)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
