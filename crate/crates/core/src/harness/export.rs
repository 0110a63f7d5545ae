//! CSV and TOML artifacts.
//!
//! Trajectory columns, in order: `t, v, theta, alpha, q, h, delta_p, delta_m,
//! P, phi, q_cmd, residual_G, V, sat_flags`. Reals are written in scientific
//! notation with 17 significant digits, which round-trips `f64` exactly.
//! `sat_flags` is a bit mask: 1 stabilizer, 2 nozzle, 4 thrust.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use super::{io_err, HarnessError, HarnessResult};
use crate::canonical_2d::PlanarSample;
use crate::closed_loop::TrajectoryLog;

pub const TRAJECTORY_COLUMNS: [&str; 14] =
    ["t", "v", "theta", "alpha", "q", "h", "delta_p", "delta_m", "P", "phi", "q_cmd", "residual_G", "V", "sat_flags"];

pub const PLANAR_COLUMNS: [&str; 9] = ["t", "x1", "x2", "y1", "y2", "u1", "u2", "V", "dV_dt"];

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> HarnessResult<csv::Writer<File>> {
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_trajectory_csv(log: &TrajectoryLog<f64>, path: &Path) -> HarnessResult<()> {
    let mut w = writer(path)?;
    w.write_record(TRAJECTORY_COLUMNS)?;
    for r in &log.records {
        let s = &r.x.state;
        let reals = [
            r.t,
            s.v,
            s.theta,
            s.alpha,
            s.q,
            s.h,
            r.x.delta_p,
            r.delta_m,
            r.thrust,
            r.phi,
            r.q_cmd,
            r.residual_g,
            r.clf,
        ];
        let mut row: Vec<String> = reals.iter().map(|x| real(*x)).collect();
        row.push(r.saturation.bits().to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// One parsed trajectory row: the 13 real columns and the flag mask.
pub type TrajectoryRow = ([f64; 13], u8);

pub fn read_trajectory_csv(path: &Path) -> HarnessResult<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TRAJECTORY_COLUMNS {
        return Err(HarnessError::Parse(format!("unexpected trajectory header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = |i: usize| HarnessError::Parse(format!("bad value in column {}", TRAJECTORY_COLUMNS[i]));
        let mut reals = [0.0; 13];
        for (i, x) in reals.iter_mut().enumerate() {
            *x = rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| bad(i))?;
        }
        let flags = rec.get(13).and_then(|s| s.parse().ok()).ok_or_else(|| bad(13))?;
        rows.push((reals, flags));
    }
    Ok(rows)
}

pub fn write_planar_csv(samples: &[PlanarSample<f64>], path: &Path) -> HarnessResult<()> {
    let mut w = writer(path)?;
    w.write_record(PLANAR_COLUMNS)?;
    for p in samples {
        let row = [p.t, p.x[0], p.x[1], p.y[0], p.y[1], p.u[0], p.u[1], p.clf, p.clf_rate];
        w.write_record(row.iter().map(|x| real(*x)))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_toml<S: Serialize>(value: &S, path: &Path) -> HarnessResult<()> {
    let text = toml::to_string(value).map_err(|e| HarnessError::Serialize(e.to_string()))?;
    std::fs::write(path, text).map_err(io_err(path))
}
