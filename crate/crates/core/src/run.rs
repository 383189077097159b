//! Run driver: time loop, output cadence, summaries and parameter sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::diagnostics::DiagnosticsRow;
use crate::error::Error;
use crate::exec;
use crate::io::{append_diagnostics, write_snapshot, IoError};
use crate::reference::mcf_circle_radius;
use crate::stepper::{advance, SimState, StepError, StepStats};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const LAST_GOOD_FILE: &str = "snapshot_last_good.txt";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.csv";
pub const SWEEP_HEADER: &str =
    "value,status,final_time,E_drift_rel,S_change,R_phi_final,R_theta_final,R_phi_mcf_max_rel_err";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numeric(#[from] Error),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("usage: {0}")]
    Usage(String),
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.into())
    }
}

/// Hooks called by [`simulate`]. All default to doing nothing.
pub trait Observer {
    /// After every completed step.
    fn on_step(&mut self, _state: &SimState, _stats: &StepStats) -> Result<(), RunError> {
        Ok(())
    }
    /// For every diagnostics sample, including the initial one.
    fn on_row(&mut self, _row: &DiagnosticsRow) -> Result<(), RunError> {
        Ok(())
    }
    /// For every snapshot, including the initial and final states.
    fn on_snapshot(&mut self, _state: &SimState) -> Result<(), RunError> {
        Ok(())
    }
}

impl Observer for () {}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: u64,
    pub final_time: f64,
    /// `|E(end) - E(0)| / |E(0)|`.
    pub e_drift_rel: f64,
    /// `S(end) - S(0)`.
    pub s_change: f64,
    pub r_phi_final: Option<f64>,
    pub r_theta_final: Option<f64>,
    /// Largest relative deviation of `R_phi` from the curvature-flow radius,
    /// for circular initial data.
    pub r_phi_mcf_max_rel_err: Option<f64>,
    pub failure: Option<StepError>,
}

impl RunSummary {
    /// The single line printed at the end of a run.
    pub fn line(&self) -> String {
        let o = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        let mut s = format!(
            "final_time={:.6} steps={} E_drift_rel={:.3e} S_change={:.6e} R_phi={} R_theta={}",
            self.final_time,
            self.steps,
            self.e_drift_rel,
            self.s_change,
            o(self.r_phi_final),
            o(self.r_theta_final)
        );
        if let Some(f) = &self.failure {
            s.push_str(&format!(" FAILED: {f}"));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<DiagnosticsRow>,
    /// Final state, or the last good state after a step failure.
    pub final_state: SimState,
    pub summary: RunSummary,
}

/// Integrates `cfg` to `t_end`. A step failure ends the run early and is
/// reported in `summary.failure`; other errors are returned.
pub fn simulate(cfg: &RunConfig, obs: &mut dyn Observer) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let params = &cfg.model;
    let mut state = cfg.initial_state()?;
    let bcs = cfg.boundaries(&state);
    let n_steps = cfg.n_steps();

    let mut rows = Vec::new();
    let row = DiagnosticsRow::sample(&state, params, 0, 0)?;
    obs.on_row(&row)?;
    rows.push(row);
    obs.on_snapshot(&state)?;

    let (mut newton, mut cg) = (0, 0);
    let mut failure = None;
    for n in 1..=n_steps {
        match advance(&state, params, &cfg.controls, &bcs) {
            Ok((next, stats)) => {
                state = next;
                newton += stats.newton_iters;
                cg += stats.cg_iters;
                obs.on_step(&state, &stats)?;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        let last = n == n_steps;
        if n % cfg.diagnostics_every == 0 || last {
            let row = DiagnosticsRow::sample(&state, params, newton, cg)?;
            obs.on_row(&row)?;
            rows.push(row);
            newton = 0;
            cg = 0;
        }
        if n % cfg.snapshot_every == 0 || last {
            obs.on_snapshot(&state)?;
        }
    }
    if failure.is_some() && rows.last().map(|r| r.time) != Some(state.time) {
        let row = DiagnosticsRow::sample(&state, params, newton, cg)?;
        obs.on_row(&row)?;
        rows.push(row);
    }

    let summary = summarize(cfg, &rows, &state, failure);
    Ok(RunOutcome {
        rows,
        final_state: state,
        summary,
    })
}

fn summarize(cfg: &RunConfig, rows: &[DiagnosticsRow], state: &SimState, failure: Option<StepError>) -> RunSummary {
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let r_phi_mcf_max_rel_err = cfg.initial_circle_radius().and_then(|r0| {
        rows.iter()
            .filter(|r| r.time > 0.0)
            .filter_map(|r| {
                let exact = mcf_circle_radius(r0, r.time)?;
                Some((r.r_phi? - exact).abs() / exact)
            })
            .reduce(f64::max)
    });
    RunSummary {
        steps: state.step,
        final_time: state.time,
        e_drift_rel: (last.e_total - first.e_total).abs() / first.e_total.abs(),
        s_change: last.s_total - first.s_total,
        r_phi_final: last.r_phi,
        r_theta_final: last.r_theta,
        r_phi_mcf_max_rel_err,
        failure,
    }
}

/// Writes `diagnostics.csv` and `snapshot_<step>.txt` files into a directory.
pub struct DirectoryWriter {
    dir: PathBuf,
}

impl DirectoryWriter {
    /// Creates `dir` if needed and removes a diagnostics file left by an
    /// earlier run.
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir)?;
        let csv = dir.join(DIAGNOSTICS_FILE);
        if csv.exists() {
            fs::remove_file(&csv)?;
        }
        Ok(DirectoryWriter { dir: dir.to_path_buf() })
    }

    pub fn snapshot_path(&self, step: u64) -> PathBuf {
        self.dir.join(format!("snapshot_{step:06}.txt"))
    }
}

impl Observer for DirectoryWriter {
    fn on_row(&mut self, row: &DiagnosticsRow) -> Result<(), RunError> {
        append_diagnostics(row, &self.dir.join(DIAGNOSTICS_FILE))?;
        Ok(())
    }

    fn on_snapshot(&mut self, state: &SimState) -> Result<(), RunError> {
        write_snapshot(state, &self.snapshot_path(state.step))?;
        Ok(())
    }
}

/// Runs `cfg` writing output into `dir`. After a step failure the last good
/// state is also written to `snapshot_last_good.txt`.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome, RunError> {
    let mut writer = DirectoryWriter::create(dir)?;
    let outcome = simulate(cfg, &mut writer)?;
    if outcome.summary.failure.is_some() {
        write_snapshot(&outcome.final_state, &dir.join(LAST_GOOD_FILE))?;
    }
    Ok(outcome)
}

#[derive(Debug)]
pub struct SweepEntry {
    pub value: String,
    pub result: Result<RunSummary, RunError>,
}

impl SweepEntry {
    pub fn succeeded(&self) -> bool {
        matches!(&self.result, Ok(s) if s.failure.is_none())
    }

    pub fn csv_line(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        match &self.result {
            Ok(s) => format!(
                "{},{},{},{},{},{},{},{}",
                self.value,
                if s.failure.is_none() { "ok" } else { "step_failure" },
                s.final_time,
                s.e_drift_rel,
                s.s_change,
                o(s.r_phi_final),
                o(s.r_theta_final),
                o(s.r_phi_mcf_max_rel_err)
            ),
            Err(_) => format!("{},error,,,,,,", self.value),
        }
    }
}

/// Runs one simulation per value of the numeric key `key`, each in
/// `out_dir/<key>_<value>`, and writes `sweep_summary.csv`. Sub-runs
/// execute concurrently; a failing sub-run does not stop the others.
pub fn sweep(base: &RunConfig, key: &str, values: &[String], out_dir: &Path) -> Result<Vec<SweepEntry>, RunError> {
    if values.is_empty() {
        return Err(RunError::Usage("sweep needs at least one value".into()));
    }
    if !RunConfig::is_numeric_key(key) {
        return Err(RunError::Usage(format!("`{key}` is not a numeric configuration key")));
    }
    let mut configs = Vec::with_capacity(values.len());
    for v in values {
        let mut c = base.clone();
        c.set(key, v)?;
        c.validate()?;
        configs.push((v.clone(), c));
    }
    fs::create_dir_all(out_dir)?;
    let entries = exec::map_items(&configs, |(v, c)| SweepEntry {
        value: v.clone(),
        result: run_to_dir(c, &out_dir.join(format!("{key}_{v}"))).map(|o| o.summary),
    });
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for e in &entries {
        text.push_str(&e.csv_line());
        text.push('\n');
    }
    fs::write(out_dir.join(SWEEP_SUMMARY_FILE), text)?;
    Ok(entries)
}
