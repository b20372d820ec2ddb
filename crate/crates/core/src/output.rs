//! File formats: orbit and branch CSV, events JSON, flux tables, loop
//! guesses. Numbers are written with 17 significant digits.

use std::io::{Read, Write};

use serde::Serialize;

use crate::charts::project_sphere;
use crate::continuation::{ContinuationBranch, EventKind, MeshSolution};
use crate::error::{Error, Result};
use crate::fields::{ChartId, ChartPoint, Params, Vec3};
use crate::infinity::{flux_numeric, flux_through_cylinder, R_STAR};
use crate::lins::LinProblem;

/// Round-trip exact formatting of a double.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("i/o: {e}"))
}

/// One row of an orbit file.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRow {
    pub segment: String,
    pub t_normalized: f64,
    pub chart: ChartId,
    pub coords: Vec3,
}

/// Node samples of a mesh solution as orbit rows.
pub fn mesh_rows(segment: &str, sol: &MeshSolution) -> Vec<OrbitRow> {
    let chart = sol.chart.unwrap_or(ChartId::Original);
    (0..sol.n_nodes())
        .map(|k| {
            let u = sol.node(k);
            OrbitRow { segment: segment.into(), t_normalized: sol.node_time(k), chart, coords: [u[0], u[1], u[2]] }
        })
        .collect()
}

/// `segment,t_normalized,chart,c1,c2,c3`; the chart column names the
/// coordinate block of each row.
pub fn write_orbit_csv<W: Write>(w: W, rows: &[OrbitRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["segment", "t_normalized", "chart", "c1", "c2", "c3"]).map_err(io_err)?;
    for r in rows {
        out.write_record([
            r.segment.clone(),
            fmt17(r.t_normalized),
            r.chart.tag().to_string(),
            fmt17(r.coords[0]),
            fmt17(r.coords[1]),
            fmt17(r.coords[2]),
        ])
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Both Lin segments in their own charts.
pub fn lin_rows(problem: &LinProblem) -> Vec<OrbitRow> {
    let mut rows = mesh_rows("u_B", &problem.seg_infinity);
    rows.extend(mesh_rows("u", &problem.seg_finite));
    rows
}

/// The connecting orbit in original coordinates with its projection
/// `p / (1 + |p|)` into the unit ball; `u_B` nodes with `w_B <= min_w` are
/// left out.
pub fn write_projection_csv<W: Write>(w: W, problem: &LinProblem, min_w: f64) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["segment", "t", "chart", "x", "y", "z", "projection", "px", "py", "pz"]).map_err(io_err)?;
    for (seg, t, u) in problem.concatenated_orbit(min_w) {
        let p = project_sphere(&ChartPoint::original(u))?;
        let name = if seg == crate::lins::SEG_INFINITY { "u_B" } else { "u" };
        let mut rec = vec![name.to_string(), fmt17(t), ChartId::Original.tag().to_string()];
        rec.extend(u.iter().map(|v| fmt17(*v)));
        rec.push("ball".into());
        rec.extend(p.iter().map(|v| fmt17(*v)));
        out.write_record(&rec).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// One row per branch point: arclength, step data, the solution summary
/// (parameters and segment endpoints, named by chart coordinates) and the
/// monitors.
pub fn write_branch_csv<W: Write>(w: W, branch: &ContinuationBranch) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["point".to_string(), "arclength".into(), "step".into(), "iterations".into()];
    header.extend(branch.data_names.iter().cloned());
    header.extend(branch.monitor_names.iter().map(|m| format!("monitor_{m}")));
    out.write_record(&header).map_err(io_err)?;
    for (k, p) in branch.points.iter().enumerate() {
        let mut rec = vec![k.to_string(), fmt17(p.arclength), fmt17(p.step), p.iterations.to_string()];
        rec.extend(p.data.iter().map(|v| fmt17(*v)));
        rec.extend(p.monitors.iter().map(|v| fmt17(*v)));
        out.write_record(&rec).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[derive(Debug, Clone, Serialize)]
struct EventRecord<'a> {
    #[serde(rename = "type")]
    kind: EventKind,
    monitor: Option<&'a str>,
    after_point: usize,
    arclength: f64,
    parameters: serde_json::Map<String, serde_json::Value>,
    monitors: serde_json::Map<String, serde_json::Value>,
}

/// Events of a branch as a JSON array.
pub fn events_json(branch: &ContinuationBranch) -> serde_json::Value {
    let recs: Vec<EventRecord<'_>> = branch
        .events
        .iter()
        .map(|e| EventRecord {
            kind: e.kind,
            monitor: e.monitor.map(|m| branch.monitor_names[m].as_str()),
            after_point: e.after,
            arclength: e.arclength,
            parameters: branch.data_names.iter().cloned().zip(e.data.iter().map(|v| serde_json::json!(v))).collect(),
            monitors: branch.monitor_names.iter().cloned().zip(e.monitors.iter().map(|v| serde_json::json!(v))).collect(),
        })
        .collect();
    serde_json::to_value(recs).expect("plain data serializes")
}

pub fn write_events_json<W: Write>(w: W, branch: &ContinuationBranch) -> Result<()> {
    serde_json::to_writer_pretty(w, &events_json(branch)).map_err(io_err)
}

/// `r, closed_form, numeric` on the grid `start:step:stop` plus the exact
/// roots `0` and `r*`. The numeric column is the quadrature flux at height
/// `w_b` divided by `w_b^2`.
pub fn flux_table(start: f64, step: f64, stop: f64, w_b: f64, params: &Params) -> Result<Vec<[f64; 3]>> {
    if !(step > 0.0) || stop < start || !(w_b > 0.0) {
        return Err(Error::InvalidInput(format!("bad flux table range {start}:{step}:{stop}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    let mut rs: Vec<f64> = (0..=n).map(|k| start + k as f64 * step).collect();
    for root in [0.0, R_STAR] {
        if root >= start && root <= stop && rs.iter().all(|r| (r - root).abs() > 1e-12) {
            rs.push(root);
        }
    }
    rs.sort_by(f64::total_cmp);
    Ok(rs
        .into_iter()
        .map(|r| [r, flux_through_cylinder(r, params), flux_numeric(r, w_b, params) / (w_b * w_b)])
        .collect())
}

pub fn write_flux_csv<W: Write>(w: W, rows: &[[f64; 3]]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["r", "closed_form", "numeric"]).map_err(io_err)?;
    for r in rows {
        out.write_record(r.iter().map(|v| fmt17(*v))).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Loop samples from CSV with columns `t,x,y,z`.
pub fn read_loop_csv<R: Read>(r: R) -> Result<Vec<(f64, Vec3)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(io_err)?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::InvalidInput(format!("loop file lacks column '{name}'")))
    };
    let idx = [col("t")?, col("x")?, col("y")?, col("z")?];
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(io_err)?;
        let mut v = [0.0; 4];
        for (k, &i) in idx.iter().enumerate() {
            let s = rec.get(i).unwrap_or("");
            v[k] = s.parse().map_err(|_| Error::InvalidInput(format!("bad number '{s}' in loop file")))?;
        }
        out.push((v[0], [v[1], v[2], v[3]]));
    }
    Ok(out)
}

pub fn write_loop_csv<W: Write>(w: W, samples: &[(f64, Vec3)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "x", "y", "z"]).map_err(io_err)?;
    for (t, u) in samples {
        out.write_record([fmt17(*t), fmt17(u[0]), fmt17(u[1]), fmt17(u[2])]).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [std::f64::consts::PI, 1e-300, -2.0 / 3.0, 123456789.123456789, 0.0] {
            assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn loop_csv_round_trip() {
        let pts: Vec<(f64, Vec3)> = (0..5).map(|k| (0.1 * k as f64, [k as f64 / 3.0, 1.0, -2.5])).collect();
        let mut buf = Vec::new();
        write_loop_csv(&mut buf, &pts).unwrap();
        assert_eq!(read_loop_csv(&buf[..]).unwrap(), pts);
        assert!(read_loop_csv("t,x,y\n0,1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn flux_table_contains_roots() {
        let rows = flux_table(0.0, 0.05, 2.0, 0.1, &Params::new(5.3, 2.0)).unwrap();
        let zeros: Vec<f64> = rows.iter().filter(|r| r[1].abs() < 1e-12).map(|r| r[0]).collect();
        assert_eq!(zeros.len(), 2);
        assert_eq!(zeros[0], 0.0);
        assert!((zeros[1] - 1.1547).abs() < 1e-4);
        for r in &rows {
            assert!((r[1] - r[2]).abs() < 1e-8, "{r:?}");
        }
    }
}
