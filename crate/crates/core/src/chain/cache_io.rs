//! JSON-lines cache files: one record per state.
//!
//! Exact values serialize as `num/den` strings, high-precision ones as
//! decimal strings with their digit count and certified error bound:
//!
//! ```text
//! {"game":"simplified","a":1,"p":2,"b":3,"value":"5/2","mode":"exact"}
//! {"game":"full","a":1,"p":2,"b":1,"value":"2.40000000...","mode":"hiprec","digits":30,"error":"1.0e-28"}
//! ```

use super::{ChainError, SpinTable, SpinValue};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CacheRecord {
    pub game: String,
    pub a: u32,
    pub p: u32,
    pub b: u32,
    pub value: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Records for every non-absorbing state of a table, in enumeration order.
pub fn table_records(table: &SpinTable, digits: u32) -> Vec<CacheRecord> {
    table
        .iter()
        .map(|(s, v)| {
            let (value, mode, dig, error) = match &v {
                SpinValue::Exact(r) => (r.to_string(), "exact", None, None),
                SpinValue::HiPrec { value, error } => (
                    value.to_decimal(digits as usize),
                    "hiprec",
                    Some(digits),
                    Some(error.to_decimal(3)),
                ),
            };
            CacheRecord {
                game: table.game.id().to_string(),
                a: s.a,
                p: s.p,
                b: s.b,
                value,
                mode: mode.to_string(),
                digits: dig,
                error,
            }
        })
        .collect()
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[CacheRecord]) -> Result<(), ChainError> {
    for rec in records {
        let line = serde_json::to_string(rec).map_err(|e| ChainError::Cache(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| ChainError::Cache(e.to_string()))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<CacheRecord>, ChainError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| ChainError::Cache(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CacheRecord = serde_json::from_str(&line)
            .map_err(|e| ChainError::Cache(format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{solve_table, Engine, GameState, SolveMode};
    use crate::games::Game;

    #[test]
    fn cache_round_trip_serves_identical_values() {
        let table = solve_table(Game::Simplified, 6, &SolveMode::Exact).unwrap();
        let records = table_records(&table, 30);
        assert_eq!(records.len(), 15);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &records).unwrap();
        // every line is strict JSON
        for line in std::str::from_utf8(&buf).unwrap().lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("value").is_some());
        }
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, records);

        let engine = Engine::new();
        engine.preload(&back, 256).unwrap();
        let v = engine
            .expected_spins(Game::Simplified, GameState::new(2, 2, 2), &SolveMode::Exact)
            .unwrap();
        assert_eq!(v.to_rational(), crate::arith::rat(3));
    }

    #[test]
    fn hiprec_records_carry_digits_and_error() {
        let table = solve_table(Game::Full, 4, &SolveMode::hiprec_default()).unwrap();
        let records = table_records(&table, 30);
        assert!(records.iter().all(|r| r.mode == "hiprec"
            && r.digits == Some(30)
            && r.error.is_some()));
        // Dr(1,2,1) = 12/5 prints as 2.4 to thirty digits
        let rec = records.iter().find(|r| (r.a, r.p, r.b) == (1, 2, 1)).unwrap();
        assert!(rec.value.starts_with("2.39999999999999999999")
            || rec.value.starts_with("2.40000000000000000000"));
    }

    #[test]
    fn malformed_lines_are_reported() {
        let data = b"{\"game\":\"simplified\",\"a\":1}\n" as &[u8];
        assert!(read_jsonl(data).is_err());
    }
}
