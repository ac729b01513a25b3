//! File formats: heat maps as CSV (`x,y,value`) or binary PGM, MSR matrices
//! as CSV (`p,q,re,im`, 1-based indices).
//!
//! Floats are written with 17 significant digits so every value round-trips
//! exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{MsrMatrix, Provenance};
use crate::migration::{HeatMap, MapLabel};
use crate::scene::SearchGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Pgm,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Pgm => "pgm",
        }
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub fn heatmap_csv(map: &HeatMap) -> String {
    let g = &map.grid;
    let mut s = String::with_capacity(64 * g.len() + 16);
    s.push_str("x,y,value\n");
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", g.x(ix), g.y(iy), map.value(ix, iy));
        }
    }
    s
}

/// Binary graymap (P5), values mapped affinely from `[0, max]` to `[0, 255]`,
/// top row at the largest `y`.
pub fn heatmap_pgm(map: &HeatMap) -> Vec<u8> {
    let g = &map.grid;
    let max = map.values.iter().copied().fold(0.0f64, f64::max);
    let mut out = format!("P5\n# max={max:.16e}\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    out.reserve(g.len());
    for iy in (0..g.ny).rev() {
        for ix in 0..g.nx {
            let v = map.value(ix, iy);
            let b = if max > 0.0 { (v / max * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 };
            out.push(b);
        }
    }
    out
}

pub fn export_heatmap(map: &HeatMap, format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Csv => write_bytes(path, heatmap_csv(map).as_bytes()),
        Format::Pgm => write_bytes(path, &heatmap_pgm(map)),
    }
}

fn parse_row<const K: usize>(line: &str, lineno: usize) -> Result<[f64; K]> {
    let mut out = [0.0; K];
    let mut fields = line.split(',');
    let mut col = 1;
    for slot in out.iter_mut() {
        let field = fields
            .next()
            .ok_or_else(|| parse_err(lineno, line.len() + 1, format!("expected {K} fields")))?;
        *slot = field
            .trim()
            .parse()
            .map_err(|e| parse_err(lineno, col, format!("invalid number `{field}`: {e}")))?;
        col += field.len() + 1;
    }
    if fields.next().is_some() {
        return Err(parse_err(lineno, col, format!("expected {K} fields")));
    }
    Ok(out)
}

/// Parses heat-map CSV text; the grid is inferred from the coordinates.
pub fn parse_heatmap_csv(text: &str) -> Result<HeatMap> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "x,y,value" => {}
        _ => return Err(parse_err(1, 1, "expected header `x,y,value`")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_row::<3>(line, i + 1)?);
    }
    if rows.is_empty() {
        return Err(parse_err(2, 1, "no data rows"));
    }
    let y0 = rows[0][1];
    let nx = rows.iter().take_while(|r| r[1] == y0).count();
    if rows.len() % nx != 0 {
        return Err(parse_err(rows.len() + 1, 1, "rows do not form a rectangular grid"));
    }
    let ny = rows.len() / nx;
    let x_min = rows[0][0];
    let x_max = rows[nx - 1][0];
    let y_max = rows[rows.len() - 1][1];
    let step = if nx > 1 {
        rows[1][0] - x_min
    } else if ny > 1 {
        rows[nx][1] - y0
    } else {
        1.0
    };
    if !(step > 0.0) {
        return Err(parse_err(3, 1, "coordinates are not increasing"));
    }
    let grid = SearchGrid {
        x_min,
        x_max,
        y_min: y0,
        y_max,
        step,
        nx,
        ny,
    };
    let tol = 1e-9 * step;
    for (i, r) in rows.iter().enumerate() {
        let p = grid.point_at(i);
        if (p.x - r[0]).abs() > tol || (p.y - r[1]).abs() > tol {
            return Err(parse_err(i + 2, 1, "point does not lie on a regular row-major grid"));
        }
    }
    HeatMap::new(grid, rows.iter().map(|r| r[2]).collect(), MapLabel::Imported)
}

pub fn read_heatmap_csv(path: &Path) -> Result<HeatMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_heatmap_csv(&text)
}

pub fn msr_csv(msr: &MsrMatrix) -> String {
    let n = msr.dim();
    let mut s = String::with_capacity(64 * n * n + 16);
    s.push_str("p,q,re,im\n");
    for p in 0..n {
        for q in 0..n {
            let z = msr.entries[(p, q)];
            let _ = writeln!(s, "{},{},{:.16e},{:.16e}", p + 1, q + 1, z.re, z.im);
        }
    }
    s
}

pub fn write_msr_csv(msr: &MsrMatrix, path: &Path) -> Result<()> {
    write_bytes(path, msr_csv(msr).as_bytes())
}

/// Parses MSR CSV text. Frequency and provenance are not stored in the file
/// and must be supplied.
pub fn parse_msr_csv(text: &str, frequency: f64, provenance: Provenance) -> Result<MsrMatrix> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "p,q,re,im" => {}
        _ => return Err(parse_err(1, 1, "expected header `p,q,re,im`")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows.push((i + 1, parse_row::<4>(line, i + 1)?));
    }
    let n = (rows.len() as f64).sqrt().round() as usize;
    if n * n != rows.len() || n == 0 {
        return Err(parse_err(1, 1, format!("{} entries do not form a square matrix", rows.len())));
    }
    let mut m = DMatrix::from_element(n, n, Complex64::new(f64::NAN, f64::NAN));
    for (lineno, [p, q, re, im]) in rows {
        let ok = |v: f64| v.fract() == 0.0 && v >= 1.0 && v <= n as f64;
        if !ok(p) || !ok(q) {
            return Err(parse_err(lineno, 1, format!("index ({p}, {q}) outside 1..={n}")));
        }
        m[(p as usize - 1, q as usize - 1)] = Complex64::new(re, im);
    }
    if m.iter().any(|z| z.re.is_nan()) {
        return Err(parse_err(1, 1, "missing or non-numeric entries"));
    }
    MsrMatrix::new(m, frequency, provenance)
}

pub fn read_msr_csv(path: &Path, frequency: f64, provenance: Provenance) -> Result<MsrMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_msr_csv(&text, frequency, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::make_grid;

    fn map2x2() -> HeatMap {
        let g = make_grid([-1.0, 1.0], [-1.0, 1.0], 2.0).unwrap();
        HeatMap::new(g, vec![0.1, 0.2, 0.3, 0.5], MapLabel::Imported).unwrap()
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let m = map2x2();
        let s = heatmap_csv(&m);
        assert_eq!(s.lines().count(), 5);
        assert!(s.lines().nth(2).unwrap().starts_with("1.0000000000000000e0,-1.0000000000000000e0,"));
        let back = parse_heatmap_csv(&s).unwrap();
        assert_eq!(back.values, m.values);
        assert!(back.grid.same_geometry(&m.grid));
    }

    #[test]
    fn pgm_of_zero_map() {
        let g = make_grid([0.0, 1.0], [0.0, 2.0], 1.0).unwrap();
        let m = HeatMap::new(g, vec![0.0; g.len()], MapLabel::Imported).unwrap();
        let b = heatmap_pgm(&m);
        let header = "P5\n# max=0.0000000000000000e0\n2 3\n255\n";
        assert!(b.starts_with(header.as_bytes()));
        assert_eq!(&b[header.len()..], &[0u8; 6]);
    }

    #[test]
    fn pgm_top_row_is_max_y() {
        let m = map2x2();
        let b = heatmap_pgm(&m);
        let px = &b[b.len() - 4..];
        assert_eq!(px, &[153, 255, 51, 102]);
    }

    #[test]
    fn msr_round_trip() {
        let m = DMatrix::from_fn(3, 3, |p, q| Complex64::new(0.1 * p as f64 + 1e-17, -(q as f64) / 3.0));
        let msr = MsrMatrix::new(m, 2.0, Provenance::Born).unwrap();
        let s = msr_csv(&msr);
        assert!(s.starts_with("p,q,re,im\n1,1,"));
        let back = parse_msr_csv(&s, 2.0, Provenance::Born).unwrap();
        assert_eq!(back, msr);
    }

    #[test]
    fn parse_errors_have_positions() {
        let e = parse_heatmap_csv("x,y,value\n0,0,1\n0.5,0,abc\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, column: 7, .. }), "{e:?}");
        assert!(parse_heatmap_csv("a,b\n").is_err());
        assert!(parse_msr_csv("p,q,re,im\n1,1,0,0\n1,2,0,0\n", 1.0, Provenance::Born).is_err());
    }
}
