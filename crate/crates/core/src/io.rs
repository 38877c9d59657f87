//! Text formats: body files, node-value files, trace CSV, plot series,
//! curvature tables and run summaries.
//!
//! Body file:
//!
//! ```text
//! n=2 resolution=256
//! <theta> <h>
//! ...
//! ```
//!
//! with `<theta> <phi> <h>` rows on S². Values are written with 17
//! significant digits, so a written body reloads bit-identically.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use crate::curvature::{curvature_report, integral_curvature_density};
use crate::error::{Error, Result};
use crate::flow::{FlowTrace, StepRecord};
use crate::geometry::ConvexBody;
use crate::grid::{ScalarField, SphereGrid};

pub const TRACE_COLUMNS: [&str; 13] = [
    "step",
    "t",
    "dt",
    "F",
    "dissipation",
    "residual_max",
    "min_h",
    "max_h",
    "max_grad_h",
    "min_K",
    "max_K",
    "min_principal_curv",
    "max_principal_curv",
];

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            out.push((i + 1, body.to_string()));
        }
    }
    Ok(out)
}

fn numbers(path: &Path, line: usize, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|w| {
            w.parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("`{w}` is not a number")))
        })
        .collect()
}

/// Writes the support function of `body`.
pub fn write_body(path: &Path, body: &ConvexBody) -> Result<()> {
    write_support(path, body.support())
}

pub fn write_support(path: &Path, h: &ScalarField) -> Result<()> {
    let grid = h.grid();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "n={} resolution={}", grid.dim(), grid.resolution()).map_err(io)?;
    for (k, v) in h.values().iter().enumerate() {
        let (theta, phi) = grid.angles(k);
        if grid.dim() == 2 {
            writeln!(w, "{theta:.16e} {v:.16e}").map_err(io)?;
        } else {
            writeln!(w, "{theta:.16e} {phi:.16e} {v:.16e}").map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Reads a body file into a support field, checking that the angle columns
/// match the grid named in the header.
pub fn read_support(path: &Path) -> Result<ScalarField> {
    let lines = data_lines(path)?;
    let Some((hline, header)) = lines.first() else {
        return Err(Error::parse(path, 1, "empty body file"));
    };
    let mut dim = None;
    let mut res = None;
    for field in header.split_whitespace() {
        let bad = || Error::parse(path, *hline, format!("bad header field `{field}`"));
        match field.split_once('=') {
            Some(("n", v)) => dim = Some(v.parse::<usize>().map_err(|_| bad())?),
            Some(("resolution", v)) => res = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    let (Some(dim), Some(res)) = (dim, res) else {
        return Err(Error::parse(path, *hline, "header must read `n=<2|3> resolution=<N>`"));
    };
    let grid = SphereGrid::shared(dim, res)?;
    let rows = &lines[1..];
    if rows.len() != grid.len() {
        return Err(Error::parse(
            path,
            rows.last().map_or(*hline, |r| r.0),
            format!("expected {} rows, found {}", grid.len(), rows.len()),
        ));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (k, (line, text)) in rows.iter().enumerate() {
        let cols = numbers(path, *line, text)?;
        if cols.len() != dim {
            return Err(Error::parse(path, *line, format!("expected {dim} columns, found {}", cols.len())));
        }
        let (theta, phi) = grid.angles(k);
        let angles_ok = (cols[0] - theta).abs() <= 1e-9 && (dim == 2 || (cols[1] - phi).abs() <= 1e-9);
        if !angles_ok {
            return Err(Error::parse(path, *line, format!("row {k} does not match the grid angles")));
        }
        values.push(cols[dim - 1]);
    }
    ScalarField::new(grid, values)
}

/// Reads and validates a body file.
pub fn read_body(path: &Path) -> Result<ConvexBody> {
    ConvexBody::new(read_support(path)?)
}

/// Reads nodal values onto `grid`: one value per row in node order, optionally
/// preceded by the node angles (only the last column is used).
pub fn read_node_values(path: &Path, grid: &Arc<SphereGrid>) -> Result<ScalarField> {
    let lines = data_lines(path)?;
    if lines.len() != grid.len() {
        return Err(Error::parse(
            path,
            lines.last().map_or(1, |l| l.0),
            format!("expected {} values, found {}", grid.len(), lines.len()),
        ));
    }
    let mut values = Vec::with_capacity(lines.len());
    for (line, text) in &lines {
        let cols = numbers(path, *line, text)?;
        match cols.last() {
            Some(v) => values.push(*v),
            None => return Err(Error::parse(path, *line, "empty row")),
        }
    }
    ScalarField::new(grid.clone(), values)
}

fn trace_row(r: &StepRecord) -> String {
    let b = &r.bounds;
    format!(
        "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.step,
        r.t,
        r.dt,
        r.functional,
        r.dissipation,
        r.residual_max,
        b.min_h,
        b.max_h,
        b.max_grad_h,
        b.min_gauss,
        b.max_gauss,
        b.min_principal_curvature,
        b.max_principal_curvature
    )
}

/// One row per accepted step, or per `stride`-th step when `stride > 1`
/// (the final step is always written).
pub fn write_trace_csv(path: &Path, trace: &FlowTrace, stride: usize) -> Result<()> {
    let stride = stride.max(1);
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", TRACE_COLUMNS.join(",")).map_err(io)?;
    let last = trace.records.len().saturating_sub(1);
    for (i, r) in trace.records.iter().enumerate() {
        if i % stride == 0 || i == last {
            writeln!(w, "{}", trace_row(r)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Two-column whitespace-separated series.
pub fn write_series(path: &Path, points: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for (x, y) in points {
        writeln!(w, "{x:.16e} {y:.16e}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a two-column series back.
pub fn read_series(path: &Path) -> Result<Vec<(f64, f64)>> {
    data_lines(path)?
        .iter()
        .map(|(line, text)| match numbers(path, *line, text)?.as_slice() {
            [x, y] => Ok((*x, *y)),
            _ => Err(Error::parse(path, *line, "expected two columns")),
        })
        .collect()
}

/// Per-node curvature table:
/// `node_index, theta, [phi,] h, K, radius_1, [radius_2,] density`.
pub fn write_curvature_csv(path: &Path, body: &ConvexBody) -> Result<()> {
    let report = curvature_report(body)?;
    let density = integral_curvature_density(body);
    let grid = body.grid();
    let three = grid.dim() == 3;
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let header = if three {
        "node_index,theta,phi,h,K,radius_1,radius_2,density"
    } else {
        "node_index,theta,h,K,radius_1,density"
    };
    writeln!(w, "{header}").map_err(io)?;
    for k in 0..grid.len() {
        let (theta, phi) = grid.angles(k);
        let mut row = format!("{k},{theta:.16e}");
        if three {
            row.push_str(&format!(",{phi:.16e}"));
        }
        row.push_str(&format!(",{:.16e},{:.16e}", body.values()[k], report.gauss.values()[k]));
        for radius in report.principal_radii.at(k) {
            row.push_str(&format!(",{radius:.16e}"));
        }
        row.push_str(&format!(",{:.16e}", density.values()[k]));
        writeln!(w, "{row}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `key=value` lines.
pub fn write_summary(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for (k, v) in entries {
        writeln!(w, "{k}={v}").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn body_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (n, res) in [(2, 64), (3, 16)] {
            let g = build_grid(n, res).unwrap();
            let body = ConvexBody::offset_ball(g, 1.0 / 3.0, [0.1, 0.05, 0.0]).unwrap();
            let path = dir.path().join(format!("body{n}.txt"));
            write_body(&path, &body).unwrap();
            let back = read_body(&path).unwrap();
            assert_eq!(back.values(), body.values());
            assert!(back.grid().same_as(body.grid()));
        }
    }

    #[test]
    fn malformed_body_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "n=2 resolution=16\n0 1\n").unwrap();
        assert!(matches!(read_body(&path), Err(Error::Parse { .. })));
        std::fs::write(&path, "n=2 res=4\n").unwrap();
        assert!(matches!(read_body(&path), Err(Error::Parse { .. })));
        assert!(matches!(read_body(&dir.path().join("missing")), Err(Error::Io { .. })));
    }

    #[test]
    fn node_values_accept_optional_angles() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_grid(2, 16).unwrap();
        let path = dir.path().join("g.txt");
        let mut text = "# g\n0 1.0\n".to_string();
        for k in 2..=16 {
            text.push_str(&format!("{k}\n"));
        }
        std::fs::write(&path, text).unwrap();
        let expected: Vec<f64> = (1..=16).map(f64::from).collect();
        assert_eq!(read_node_values(&path, &g).unwrap().values(), expected.as_slice());
    }

    #[test]
    fn series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("F.dat");
        let pts = vec![(0.0, 1.5), (0.1, -2.0 / 3.0)];
        write_series(&path, pts.clone()).unwrap();
        assert_eq!(read_series(&path).unwrap(), pts);
    }
}
