//! CSV readers and writers for polygons, traces, sweeps and panel data.
//!
//! Polygon files hold one `x,y` pair per line in counter-clockwise order;
//! lines starting with `#` are comments. Coordinates are written with 17
//! significant digits so a round trip is exact.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::capillarity::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::geometry::{HalfPlanePolygon, Point};
use crate::optimizer::{OptimTrace, SweepRow};
use crate::potential::{EquilibriumSolution, PanelMesh};

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Parses polygon CSV text. Errors carry the 1-based line number.
pub fn parse_polygon(text: &str) -> Result<HalfPlanePolygon> {
    let mut pts = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        let coord = |s: &str| -> Result<f64> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    line,
                    message: format!("not a finite number: {s:?}"),
                }),
            }
        };
        pts.push(Point::new(coord(fields[0])?, coord(fields[1])?));
    }
    if pts.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no vertices".into(),
        });
    }
    HalfPlanePolygon::new(pts)
}

pub fn read_polygon(path: &Path) -> Result<HalfPlanePolygon> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_polygon(&text)
}

pub fn format_polygon(p: &HalfPlanePolygon) -> String {
    let mut s = String::with_capacity(48 * p.len());
    for v in p.vertices() {
        s.push_str(&format!("{:.16e},{:.16e}\n", v.x, v.y));
    }
    s
}

pub fn write_polygon(path: &Path, p: &HalfPlanePolygon) -> Result<()> {
    File::create(path)?.write_all(format_polygon(p).as_bytes())?;
    Ok(())
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub const TRACE_HEADER: [&str; 13] = [
    "iteration",
    "total",
    "free_perimeter",
    "wetted_length",
    "p_beta",
    "i2",
    "volume_penalty",
    "area_error",
    "gamma1",
    "gamma2",
    "max_displacement",
    "step_size",
    "remeshed",
];

pub fn write_trace<W: Write>(out: W, trace: &OptimTrace) -> Result<()> {
    write_rows(
        out,
        &TRACE_HEADER,
        trace.records.iter().map(|r| {
            let b = &r.breakdown;
            vec![
                r.iteration.to_string(),
                num(r.total),
                num(b.free_perimeter),
                num(b.wetted_length),
                num(b.p_beta),
                opt(b.i2),
                num(b.volume_penalty),
                num(r.area_error),
                opt(r.gamma1),
                opt(r.gamma2),
                num(r.max_displacement),
                num(r.step_size),
                r.remeshed.to_string(),
            ]
        }),
    )
}

pub const SWEEP_HEADER: [&str; 13] = [
    "beta",
    "q",
    "iters",
    "total",
    "p_beta",
    "i2",
    "area_err",
    "gamma1",
    "gamma2",
    "cos_gamma_minus_beta",
    "hausdorff_to_bbeta",
    "symdiff_to_bbeta",
    "errors",
];

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    write_rows(
        out,
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                num(r.beta),
                num(r.q),
                r.iters.to_string(),
                num(r.total),
                num(r.p_beta),
                opt(r.i2),
                num(r.area_err),
                opt(r.gamma1),
                opt(r.gamma2),
                opt(r.cos_gamma_minus_beta),
                num(r.hausdorff_to_bbeta),
                num(r.symdiff_to_bbeta),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_slab<W: Write>(out: W, rows: &[(f64, EnergyBreakdown)]) -> Result<()> {
    write_rows(
        out,
        &["R", "p_beta", "i2", "total"],
        rows.iter()
            .map(|(r, e)| vec![num(*r), num(e.p_beta), opt(e.i2), num(e.total)]),
    )
}

/// Panel midpoints with length, density and `|grad u| = 2 pi f`.
pub fn write_panels<W: Write>(out: W, mesh: &PanelMesh, sol: &EquilibriumSolution) -> Result<()> {
    write_rows(
        out,
        &["x", "y", "length", "density", "grad_norm"],
        mesh.panels.iter().zip(&sol.densities).map(|(p, &f)| {
            vec![
                num(p.mid.x),
                num(p.mid.y),
                num(p.length),
                num(f),
                num(2.0 * std::f64::consts::PI * f),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn polygon_round_trip_is_exact() {
        let p = fixtures::disk_on_floor(12, 0.7);
        let q = parse_polygon(&format_polygon(&p)).unwrap();
        assert_eq!(p.vertices(), q.vertices());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# unit square\n0,0\n1, 0\n\n# top\n1,1\n0,1\n";
        assert_eq!(parse_polygon(text).unwrap().area(), 1.0);
    }

    #[test]
    fn parse_errors_report_the_line() {
        match parse_polygon("0,0\n1,0\n1,x\n0,1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_polygon("# c\n0,0,3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_polygon("# empty\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_polygon("0,0\n1,0\n1,nan\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn sweep_header_and_empty_options() {
        let row = SweepRow {
            beta: 0.5,
            q: 0.1,
            iters: 3,
            total: 1.0,
            p_beta: 1.0,
            i2: None,
            area_err: 0.0,
            gamma1: None,
            gamma2: None,
            cos_gamma_minus_beta: None,
            hausdorff_to_bbeta: 0.0,
            symdiff_to_bbeta: 0.0,
            error: Some("x".into()),
        };
        let mut buf = Vec::new();
        write_sweep(&mut buf, &[row]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER.join(","));
        assert_eq!(lines[1], "0.5,0.1,3,1,1,,0,,,,0,0,x");
    }
}
