//! Snapshot files and the diagnostics CSV.
//!
//! Snapshot format (plain text):
//!
//! ```text
//! NISO-AC v1 <nx> <ny> <hx> <hy> <x0> <y0> <time> <step>
//! <phi> <theta>        # nx * ny lines, row-major
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every
//! finite `f64` exactly.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::diagnostics::DiagnosticsRow;
use crate::grid::{Field, Grid2D};
use crate::stepper::SimState;

const MAGIC: &str = "NISO-AC";
const VERSION: &str = "v1";

pub const CSV_HEADER: &str =
    "time,E_total,S_total,phi_min,phi_max,theta_min,theta_max,R_phi,R_theta,interface_gap,newton_iters,cg_iters";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("snapshot format: {0}")]
    Format(String),
}

fn format_err(msg: impl Into<String>) -> IoError {
    IoError::Format(msg.into())
}

pub fn write_snapshot(state: &SimState, path: &Path) -> Result<(), IoError> {
    let g = state.phi.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "{MAGIC} {VERSION} {} {} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {}",
        g.nx(),
        g.ny(),
        g.hx(),
        g.hy(),
        g.x0(),
        g.y0(),
        state.time,
        state.step
    )?;
    for (p, t) in state.phi.values().iter().zip(state.theta.values()) {
        writeln!(w, "{p:.16e} {t:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]. `last_dphi_dt` is not
/// stored and comes back as zero.
pub fn read_snapshot(path: &Path) -> Result<SimState, IoError> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines.next().ok_or_else(|| format_err("empty file"))??;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 10 || tokens[0] != MAGIC {
        return Err(format_err("missing NISO-AC header"));
    }
    if tokens[1] != VERSION {
        return Err(format_err(format!("unsupported version `{}`", tokens[1])));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| format_err(format!("bad integer `{s}`")));
    let real = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format_err(format!("bad real `{s}`")))
    };
    let (nx, ny) = (int(tokens[2])?, int(tokens[3])?);
    let grid = Grid2D::new(
        nx,
        ny,
        real(tokens[4])?,
        real(tokens[5])?,
        real(tokens[6])?,
        real(tokens[7])?,
    )
    .map_err(|e| format_err(e.to_string()))?;
    let time = real(tokens[8])?;
    let step = tokens[9].parse::<u64>().map_err(|_| format_err("bad step"))?;

    let n = grid.len();
    let mut phi = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if phi.len() == n {
            return Err(format_err(format!("more than {n} value lines")));
        }
        let mut it = line.split_whitespace();
        let (Some(p), Some(t), None) = (it.next(), it.next(), it.next()) else {
            return Err(format_err(format!("line {} is not a `phi theta` pair", phi.len() + 2)));
        };
        phi.push(real(p)?);
        theta.push(real(t)?);
    }
    if phi.len() != n {
        return Err(format_err(format!("expected {n} value lines, found {}", phi.len())));
    }
    let phi = Field::new(grid, phi).map_err(|e| format_err(e.to_string()))?;
    let theta = Field::new(grid, theta).map_err(|e| format_err(e.to_string()))?;
    Ok(SimState {
        last_dphi_dt: Field::zeros(grid),
        phi,
        theta,
        time,
        step,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One CSV line (without newline) in [`CSV_HEADER`] order.
pub fn format_row(row: &DiagnosticsRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        row.time,
        row.e_total,
        row.s_total,
        row.phi_min,
        row.phi_max,
        row.theta_min,
        row.theta_max,
        opt(row.r_phi),
        opt(row.r_theta),
        opt(row.interface_gap),
        row.newton_iters,
        row.cg_iters
    )
}

/// Appends `row` to the CSV at `path`, writing the header first if the file
/// does not exist yet.
pub fn append_diagnostics(row: &DiagnosticsRow, path: &Path) -> Result<(), IoError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut out = String::new();
    if f.metadata()?.len() == 0 {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    out.push_str(&format_row(row));
    out.push('\n');
    f.write_all(out.as_bytes())?;
    Ok(())
}
