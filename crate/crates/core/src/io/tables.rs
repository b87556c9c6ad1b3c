//! CSV tables: per-step trace, nodal state dumps, sweep summary and reparametrized curves.
//!
//! Reals are written with 17 significant digits so every value round-trips exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::{InequalityReport, State, StepRecord};
use crate::viscosity::{ReparamTrajectory, SweepReport};

pub const TRACE_HEADER: &str =
    "step,t,F,E,D,slope,rate_L2,rate_H1,power,inner_iters,slope_id_rel_err,align_rel_err,cum_arc_len";
pub const PHASE_HEADER: &str = "step,node,z";
pub const DISPLACEMENT_HEADER: &str = "step,node,ux,uy";
pub const SWEEP_HEADER: &str = "delta,S,max_norm_residual,max_advancing_slope,pairwise_distance_to_next";
pub const REPARAM_HEADER: &str = "s,t,t_prime,z_prime_h1,z_prime_l2,slope";
pub const INEQUALITY_HEADER: &str = "step,t,F,bound,increment_sum,slack_raw,slack_fitted";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let io = |e: csv::Error| Error::Io {
        path: path.display().to_string(),
        source: e.into(),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(io)?;
    w.write_record(header.split(',')).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows of a CSV file whose header must equal `header` exactly, with 1-based file line numbers.
fn read_rows(path: &Path, header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let origin = path.display().to_string();
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.clone(),
        line,
        msg,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Io {
            path: origin.clone(),
            source: e.into(),
        })?;
    let mut out = Vec::new();
    let width = header.split(',').count();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| perr(k + 1, e.to_string()))?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        if k == 0 {
            if fields.join(",") != header {
                return Err(perr(line, format!("header mismatch: expected `{header}`")));
            }
            continue;
        }
        if fields.len() != width {
            return Err(perr(line, format!("expected {width} columns, found {}", fields.len())));
        }
        out.push((line, fields));
    }
    if out.is_empty() && std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true) {
        return Err(perr(1, "empty file".into()));
    }
    Ok(out)
}

fn parse_f(origin: &Path, line: usize, col: &str, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: origin.display().to_string(),
        line,
        msg: format!("column {col}: `{s}` is not a number"),
    })
}

fn parse_u(origin: &Path, line: usize, col: &str, s: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::Parse {
        path: origin.display().to_string(),
        line,
        msg: format!("column {col}: `{s}` is not a nonnegative integer"),
    })
}

/// One row of the trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub f: f64,
    pub e: f64,
    pub d: f64,
    pub slope: f64,
    pub rate_l2: f64,
    pub rate_h1: f64,
    pub power: f64,
    pub inner_iters: usize,
    pub slope_id_rel_err: f64,
    pub align_rel_err: f64,
    pub cum_arc_len: f64,
}

impl From<&StepRecord> for TraceRow {
    fn from(r: &StepRecord) -> Self {
        TraceRow {
            step: r.step,
            t: r.t,
            f: r.energy.total,
            e: r.energy.elastic,
            d: r.energy.dissipation,
            slope: r.slope,
            rate_l2: r.rate_l2,
            rate_h1: r.rate_h1,
            power: r.power,
            inner_iters: r.inner_iters,
            slope_id_rel_err: r.slope_identity_rel_err,
            align_rel_err: r.alignment_rel_err,
            cum_arc_len: r.cum_arc_length,
        }
    }
}

impl TraceRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.step.to_string(),
            num(self.t),
            num(self.f),
            num(self.e),
            num(self.d),
            num(self.slope),
            num(self.rate_l2),
            num(self.rate_h1),
            num(self.power),
            self.inner_iters.to_string(),
            num(self.slope_id_rel_err),
            num(self.align_rel_err),
            num(self.cum_arc_len),
        ]
    }
}

pub fn trace_csv_string(records: &[StepRecord]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&TraceRow::from(r).fields().join(","));
        s.push('\n');
    }
    s
}

pub fn write_trace(path: impl AsRef<Path>, records: &[StepRecord]) -> Result<()> {
    write_rows(
        path.as_ref(),
        TRACE_HEADER,
        records.iter().map(|r| TraceRow::from(r).fields()),
    )
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let path = path.as_ref();
    let cols: Vec<&str> = TRACE_HEADER.split(',').collect();
    read_rows(path, TRACE_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            let r = |i: usize| parse_f(path, line, cols[i], &f[i]);
            Ok(TraceRow {
                step: parse_u(path, line, cols[0], &f[0])?,
                t: r(1)?,
                f: r(2)?,
                e: r(3)?,
                d: r(4)?,
                slope: r(5)?,
                rate_l2: r(6)?,
                rate_h1: r(7)?,
                power: r(8)?,
                inner_iters: parse_u(path, line, cols[9], &f[9])?,
                slope_id_rel_err: r(10)?,
                align_rel_err: r(11)?,
                cum_arc_len: r(12)?,
            })
        })
        .collect()
}

pub fn write_phase_dump(path: impl AsRef<Path>, states: &[State]) -> Result<()> {
    let rows = states.iter().enumerate().flat_map(|(i, s)| {
        s.z.iter()
            .enumerate()
            .map(move |(n, z)| vec![i.to_string(), n.to_string(), num(*z)])
    });
    write_rows(path.as_ref(), PHASE_HEADER, rows)
}

pub fn write_displacement_dump(path: impl AsRef<Path>, states: &[State]) -> Result<()> {
    let rows = states.iter().enumerate().flat_map(|(i, s)| {
        s.u.chunks(2)
            .enumerate()
            .map(move |(n, u)| vec![i.to_string(), n.to_string(), num(u[0]), num(u[1])])
    });
    write_rows(path.as_ref(), DISPLACEMENT_HEADER, rows)
}

/// Groups `step,node,values…` rows into one interleaved vector per step. Steps must start
/// at 0 and be consecutive; nodes must be listed in order.
fn read_nodal(path: &Path, header: &str, comps: usize) -> Result<Vec<Vec<f64>>> {
    let cols: Vec<&str> = header.split(',').collect();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for (line, f) in read_rows(path, header)? {
        let step = parse_u(path, line, cols[0], &f[0])?;
        let node = parse_u(path, line, cols[1], &f[1])?;
        if step == out.len() {
            out.push(Vec::new());
        }
        if step + 1 != out.len() || node * comps != out[step].len() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line,
                msg: format!("rows out of order at step {step}, node {node}"),
            });
        }
        for c in 0..comps {
            out[step].push(parse_f(path, line, cols[2 + c], &f[2 + c])?);
        }
    }
    Ok(out)
}

pub fn read_phase_dump(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    read_nodal(path.as_ref(), PHASE_HEADER, 1)
}

pub fn read_displacement_dump(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    read_nodal(path.as_ref(), DISPLACEMENT_HEADER, 2)
}

pub fn write_sweep(path: impl AsRef<Path>, report: &SweepReport) -> Result<()> {
    let rows = report.rows.iter().map(|r| {
        vec![
            num(r.delta),
            num(r.arc_length),
            num(r.max_norm_residual),
            num(r.max_advancing_slope),
            num(r.pairwise_distance_to_next.unwrap_or(f64::NAN)),
        ]
    });
    write_rows(path.as_ref(), SWEEP_HEADER, rows)
}

/// `(delta, S, max_norm_residual, max_advancing_slope, pairwise_distance_to_next)` rows.
pub fn read_sweep(path: impl AsRef<Path>) -> Result<Vec<[f64; 5]>> {
    let path = path.as_ref();
    let cols: Vec<&str> = SWEEP_HEADER.split(',').collect();
    read_rows(path, SWEEP_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            let mut row = [0.0; 5];
            for i in 0..5 {
                row[i] = parse_f(path, line, cols[i], &f[i])?;
            }
            Ok(row)
        })
        .collect()
}

pub fn write_reparam(path: impl AsRef<Path>, rt: &ReparamTrajectory) -> Result<()> {
    let rows = rt.grid.iter().map(|p| {
        vec![
            num(p.s),
            num(p.t),
            num(p.t_prime),
            num(p.z_prime_h1),
            num(p.z_prime_l2),
            num(p.slope),
        ]
    });
    write_rows(path.as_ref(), REPARAM_HEADER, rows)
}

pub fn write_inequality(path: impl AsRef<Path>, rep: &InequalityReport) -> Result<()> {
    let rows = rep.rows.iter().map(|r| {
        vec![
            r.step.to_string(),
            num(r.t),
            num(r.energy),
            num(r.bound),
            num(r.increment_sum),
            num(r.slack_raw),
            num(r.slack_fitted),
        ]
    });
    write_rows(path.as_ref(), INEQUALITY_HEADER, rows)
}
