//! Text formats written by the command line tool.
//!
//! Floats are printed with `{:.16e}` so files round-trip bit for bit. Reports
//! are `key = value` lines in the same syntax as the run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::assumptions::AssumptionReport;
use crate::error::{Result, WedError};
use crate::experiments::SweepRun;
use crate::functional::{ElResidual, WedBreakdown};
use crate::grid::{SpatialGrid, StateVector, Trajectory};
use crate::optimizer::SolveReport;

pub const EL_HEADER: &str = "m,t,residual_H_norm,xi_H_norm";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header `t,<x_1>,...,<x_N>` followed by one row per time node `m = 0..M`.
pub fn trajectory_csv(traj: &Trajectory, grid: &SpatialGrid) -> String {
    let mut out = String::from("t");
    for x in grid.nodes() {
        out.push(',');
        out += &num(x);
    }
    out.push('\n');
    for (m, u) in traj.states().iter().enumerate() {
        out += &num(traj.time(m));
        for v in u.iter() {
            out.push(',');
            out += &num(*v);
        }
        out.push('\n');
    }
    out
}

/// Contents of a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub nodes: Vec<f64>,
    pub times: Vec<f64>,
    pub trajectory: Trajectory,
}

pub fn read_trajectory_csv(text: &str) -> Result<TrajectoryFile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| WedError::config("trajectory file is empty"))?;
    let mut cols = header.split(',');
    if cols.next().map(str::trim) != Some("t") {
        return Err(WedError::config("trajectory header must start with 't'"));
    }
    let nodes = cols.map(|c| parse_float(c, "header")).collect::<Result<Vec<_>>>()?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line.split(',').map(|c| parse_float(c, "row")).collect::<Result<Vec<_>>>()?;
        if row.len() != nodes.len() + 1 {
            return Err(WedError::config(format!(
                "trajectory row {} has {} columns, expected {}",
                i + 1,
                row.len(),
                nodes.len() + 1
            )));
        }
        times.push(row[0]);
        states.push(StateVector::new(row[1..].to_vec()));
    }
    let horizon = *times.last().ok_or_else(|| WedError::config("trajectory file has no rows"))?;
    let trajectory = Trajectory::new(states, horizon)?;
    Ok(TrajectoryFile { nodes, times, trajectory })
}

fn parse_float(s: &str, what: &str) -> Result<f64> {
    let s = s.trim();
    s.parse().map_err(|_| WedError::config(format!("trajectory {what}: '{s}' is not a number")))
}

/// One row per node `m = 1..M`.
pub fn el_csv(el: &ElResidual) -> String {
    let mut out = String::from(EL_HEADER);
    out.push('\n');
    for (i, (r, x)) in el.residual_norms.iter().zip(&el.xi_norms).enumerate() {
        let m = i + 1;
        let _ = writeln!(out, "{m},{},{},{}", num(el.tau * m as f64), num(*r), num(*x));
    }
    out
}

/// Ordered `key = value` report.
#[derive(Debug, Clone, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.lines.push((key.into(), value.to_string()));
        self
    }

    pub fn float(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.put(key, num(value))
    }

    pub fn extend(&mut self, other: &Report) -> &mut Self {
        self.lines.extend(other.lines.iter().cloned());
        self
    }

    pub fn to_text(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Reads back a report written by [`Report::to_text`].
pub fn parse_report(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn breakdown(r: &mut Report, prefix: &str, b: &WedBreakdown) {
    r.float(format!("{prefix}.total"), b.total)
        .float(format!("{prefix}.dissipation"), b.dissipation_part)
        .float(format!("{prefix}.phi1"), b.phi1_part)
        .float(format!("{prefix}.phi2"), b.phi2_part);
}

pub fn solve_report(rep: &SolveReport) -> Report {
    let mut r = Report::new();
    r.put("label", rep.label)
        .put("method", rep.method.name())
        .float("epsilon", rep.config.epsilon)
        .float("lambda", rep.config.lambda)
        .put("steps", rep.config.steps)
        .put("quadrature", rep.config.quadrature.name())
        .put("converged", rep.converged)
        .put("iterations", rep.iterations)
        .put("evaluations", rep.evaluations)
        .float("grad_norm", rep.grad_norm);
    breakdown(&mut r, "value", &rep.value);
    r.float("el.residual_max", rep.el.residual_max)
        .float("el.residual_l2", rep.el.residual_l2)
        .float("el.terminal_xi_norm", rep.el.terminal_xi_norm);
    r
}

pub fn value_history_csv(history: &[f64]) -> String {
    let mut out = String::from("iteration,value\n");
    for (i, v) in history.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", num(*v));
    }
    out
}

pub fn assumption_report(rep: &AssumptionReport) -> Report {
    let mut r = Report::new();
    r.float("radius", rep.radius)
        .put("samples", rep.samples)
        .put("seed", rep.seed)
        .put("all_pass", rep.all_pass())
        .float("constant.kernel_norm", rep.constants.kernel_norm);
    for (name, v) in rep.constants.named() {
        r.float(format!("constant.{name}"), v);
    }
    for rec in &rep.records {
        let p = format!("check.{}", rec.name);
        r.put(format!("{p}.statement"), rec.statement)
            .put(format!("{p}.sample_count"), rec.sample_count)
            .float(format!("{p}.worst_ratio"), rec.worst_ratio)
            .float(format!("{p}.constant"), rec.constant_used)
            .put(format!("{p}.pass"), rec.pass);
        if let Some(w) = &rec.witness {
            for (i, v) in w.iter().enumerate() {
                let vals: Vec<String> = v.iter().map(|x| num(*x)).collect();
                r.put(format!("{p}.witness.{i}"), vals.join(","));
            }
        }
    }
    r
}

/// Fitted log-log slope, failures and, for lambda sweeps, Cauchy distances.
pub fn sweep_summary(run: &SweepRun) -> Report {
    let mut r = Report::new();
    r.put("rows", run.table.rows.len())
        .put("converged_rows", run.table.rows.iter().filter(|x| x.converged).count())
        .put("error_norm", "err_L2H = sqrt(sum_{m=1..M} tau |u_m - v_m|_H^2), |w|_H^2 = h sum_i w_i^2");
    match run.table.log_slope() {
        Some(s) => r.float("log_slope_err_vs_epsilon", s),
        None => r.put("log_slope_err_vs_epsilon", "none"),
    };
    for (i, row) in run.table.rows.iter().enumerate() {
        if let Some(f) = &row.failure {
            r.put(format!("failure.{i}"), f);
        }
    }
    for (i, d) in run.successive.iter().enumerate() {
        r.float(format!("successive_distance.{i}"), *d);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_round_trip_is_exact() {
        let grid = SpatialGrid::unit(5).unwrap();
        let traj = Trajectory::from_fn(&grid, 7, 0.3, |t, x| (t * 3.1).sin() * x / 3.0 + 1e-300).unwrap();
        let text = trajectory_csv(&traj, &grid);
        let back = read_trajectory_csv(&text).unwrap();
        assert_eq!(back.trajectory, traj);
        assert_eq!(back.nodes, grid.nodes());
        assert_eq!(trajectory_csv(&back.trajectory, &grid), text);
    }

    #[test]
    fn malformed_trajectory_is_rejected() {
        assert!(read_trajectory_csv("").is_err());
        assert!(read_trajectory_csv("x,1\n0,1\n").is_err());
        assert!(read_trajectory_csv("t,0.5\n0,1,2\n").is_err());
        assert!(read_trajectory_csv("t,0.5\n0,abc\n").is_err());
    }

    #[test]
    fn report_round_trip() {
        let mut r = Report::new();
        r.put("a", 1).float("b", 0.1).put("c", "x = y");
        let map = parse_report(&r.to_text());
        assert_eq!(map["a"], "1");
        assert_eq!(map["b"].parse::<f64>().unwrap(), 0.1);
        assert_eq!(map["c"], "x = y");
    }
}
