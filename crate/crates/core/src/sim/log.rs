//! Line-delimited trajectory records.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::reward::Status;

/// One simulation step as written to a trajectory log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Episode time (s).
    pub t: f64,
    /// x, y, z (m), θy (rad).
    pub pose: [f64; 4],
    /// vx, vy, vz (m/s), ωy (rad/s).
    pub twist: [f64; 4],
    /// fx, fy, fz (N), τy (N·m) as measured.
    pub wrench: [f64; 4],
    pub reward: f64,
    pub status: Status,
}

pub fn write_records<W: Write>(mut w: W, records: &[StepRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<StepRecord>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
