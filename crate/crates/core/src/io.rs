//! Plain-text field and profile files.
//!
//! Fields are CSV with header `x,y,u,v`, one node per line in storage order
//! (y outer), every number printed with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ComplexField2D, Grid2D, ScalarField2D};

/// 17 significant digits, scientific notation.
#[inline]
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders a table with the given header and one row per node.
pub fn render_node_table(grid: &Grid2D, header: &[&str], columns: &[&[f64]]) -> String {
    let mut out = String::with_capacity(grid.len() * 24 * (2 + columns.len()));
    out.push_str("x,y");
    for h in header {
        out.push(',');
        out.push_str(h);
    }
    out.push('\n');
    for idx in 0..grid.len() {
        let (x, y) = grid.position(idx);
        let _ = write!(out, "{},{}", fmt17(x), fmt17(y));
        for col in columns {
            out.push(',');
            out.push_str(&fmt17(col[idx]));
        }
        out.push('\n');
    }
    out
}

pub fn field_to_csv(w: &ComplexField2D) -> String {
    render_node_table(&w.grid(), &["u", "v"], &[&w.u.values, &w.v.values])
}

pub fn write_field_csv(path: &Path, w: &ComplexField2D) -> Result<()> {
    fs::write(path, field_to_csv(w))?;
    Ok(())
}

pub fn read_field_csv(path: &Path) -> Result<ComplexField2D> {
    let text = fs::read_to_string(path)?;
    parse_field_csv(&text)
}

pub fn parse_field_csv(text: &str) -> Result<ComplexField2D> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["x", "y", "u", "v"] {
        return Err(Error::Parse(format!("expected header `x,y,u,v`, found `{header}`")));
    }
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for (k, line) in lines.enumerate() {
        let mut row = [0.0; 4];
        let mut n = 0;
        for (slot, tok) in row.iter_mut().zip(line.split(',')) {
            *slot = tok
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?;
            n += 1;
        }
        if n != 4 || line.split(',').count() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 columns", k + 2)));
        }
        rows.push(row);
    }
    if rows.len() < 9 {
        return Err(Error::Parse(format!("need at least 3x3 nodes, found {} rows", rows.len())));
    }
    let y0 = rows[0][1];
    let nx = rows.iter().take_while(|r| r[1] == y0).count();
    if nx < 3 || !rows.len().is_multiple_of(nx) {
        return Err(Error::Parse(format!(
            "rows do not form a rectangular y-outer grid ({} rows, {} per line of constant y)",
            rows.len(),
            nx
        )));
    }
    let ny = rows.len() / nx;
    let x0 = rows[0][0];
    let hx = (rows[nx - 1][0] - x0) / (nx - 1) as f64;
    let hy = (rows[rows.len() - 1][1] - y0) / (ny - 1) as f64;
    let grid = Grid2D::new(nx, ny, hx, hy, x0, y0)
        .map_err(|e| Error::Parse(format!("spacing inferred from file is invalid: {e}")))?;
    for (idx, row) in rows.iter().enumerate() {
        let (x, y) = grid.position(idx);
        let tol_x = 1e-9 * hx + 1e-12 * x.abs();
        let tol_y = 1e-9 * hy + 1e-12 * y.abs();
        if (row[0] - x).abs() > tol_x || (row[1] - y).abs() > tol_y {
            return Err(Error::Parse(format!(
                "non-uniform spacing: line {} has (x, y) = ({}, {}), expected ({x}, {y}) for hx = {hx}, hy = {hy}",
                idx + 2,
                row[0],
                row[1]
            )));
        }
    }
    let u = ScalarField2D::new(grid, rows.iter().map(|r| r[2]).collect())?;
    let v = ScalarField2D::new(grid, rows.iter().map(|r| r[3]).collect())?;
    ComplexField2D::new(u, v)
}

/// Two-column radial profile `r,f`.
pub fn profile_to_csv(r: &[f64], f: &[f64]) -> String {
    let mut out = String::from("r,f\n");
    for (a, b) in r.iter().zip(f) {
        let _ = writeln!(out, "{},{}", fmt17(*a), fmt17(*b));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid2D::spanning(5, 4, -1.0, 1.0, -0.5, 0.75).unwrap();
        let w = ComplexField2D::from_fn(g, |x, y| Complex64::new((x * 3.1).sin(), y.exp() / 7.0));
        let back = parse_field_csv(&field_to_csv(&w)).unwrap();
        assert_eq!(back.u.values, w.u.values);
        assert_eq!(back.v.values, w.v.values);
        assert!(back.grid().same_as(&g));
    }

    #[test]
    fn rejects_non_uniform_spacing() {
        let g = Grid2D::spanning(4, 4, 0.0, 3.0, 0.0, 3.0).unwrap();
        let w = ComplexField2D::constant(g, Complex64::new(0.0, 0.0));
        let text = field_to_csv(&w).replacen("1.0000000000000000e0,0.0000000000000000e0", "1.2500000000000000e0,0.0000000000000000e0", 1);
        let err = parse_field_csv(&text).unwrap_err();
        assert!(err.to_string().contains("non-uniform spacing"), "{err}");
    }

    #[test]
    fn rejects_bad_header() {
        let err = parse_field_csv("a,b,c,d\n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }
}
