//! CSV and SVG output. Numbers are written as `{:.16e}` (17 significant
//! digits) so every value parses back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::linalg::{dot, norm2, DenseMatrix};
use crate::{Error, Result};

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// `index,singular_value`, one row per value, 1-based index.
pub fn emit_singular_values(path: impl AsRef<Path>, s: &[f64]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["index", "singular_value"])?;
    for (i, v) in s.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format_real(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// `x,mode_1,…,mode_K`, one row per grid point.
pub fn emit_modes(path: impl AsRef<Path>, grid: &[f64], u: &DenseMatrix) -> Result<()> {
    if grid.len() != u.rows() {
        return Err(Error::invalid(format!(
            "grid has {} points, modes have {} rows",
            grid.len(),
            u.rows()
        )));
    }
    let mut w = writer(path.as_ref())?;
    let mut header = vec!["x".to_string()];
    header.extend((1..=u.cols()).map(|j| format!("mode_{j}")));
    w.write_record(&header)?;
    for (i, &x) in grid.iter().enumerate() {
        let mut rec = vec![format_real(x)];
        rec.extend((0..u.cols()).map(|j| format_real(u.get(i, j))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`emit_modes`] back into `(grid, u)`.
pub fn read_modes(path: impl AsRef<Path>) -> Result<(Vec<f64>, DenseMatrix)> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let k = r
        .headers()?
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::invalid(format!("{}: empty header", path.display())))?;
    let mut grid = Vec::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| {
                    Error::invalid(format!("{}: bad number {f:?}: {e}", path.display()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        grid.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    let u = DenseMatrix::from_fn(rows.len(), k, |i, j| rows[i][j])?;
    Ok((grid, u))
}

/// `iteration,sigma_1,…,sigma_K`; row `i` holds the values after batch `i`
/// (row 0 is the initialization).
pub fn emit_iteration_history(path: impl AsRef<Path>, history: &[Vec<f64>]) -> Result<()> {
    let k = history.iter().map(Vec::len).max().unwrap_or(0);
    let mut w = writer(path.as_ref())?;
    let mut header = vec!["iteration".to_string()];
    header.extend((1..=k).map(|j| format!("sigma_{j}")));
    w.write_record(&header)?;
    for (i, s) in history.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(s.iter().map(|v| format_real(*v)));
        rec.resize(k + 1, String::new());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Polyline of column `column` of `u` over `grid`, with axes and the zero
/// line.
pub fn emit_mode_plot(
    path: impl AsRef<Path>,
    grid: &[f64],
    u: &DenseMatrix,
    column: usize,
) -> Result<()> {
    if grid.len() != u.rows() {
        return Err(Error::invalid(format!(
            "grid has {} points, modes have {} rows",
            grid.len(),
            u.rows()
        )));
    }
    if column >= u.cols() {
        return Err(Error::invalid(format!(
            "column {column} outside {} modes",
            u.cols()
        )));
    }
    fs::write(path, mode_svg(grid, u.col(column), column + 1))?;
    Ok(())
}

fn mode_svg(grid: &[f64], y: &[f64], label: usize) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 48.0;
    let (x0, x1) = bounds(grid);
    let (y0, y1) = bounds(y);
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
        b = H - PAD
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            s,
            r##"<line x1="{PAD}" y1="{z:.3}" x2="{r}" y2="{z:.3}" stroke="#999" stroke-dasharray="4 4"/>"##,
            z = py(0.0),
            r = W - PAD
        );
    }
    let text = |s: &mut String, x: f64, y: f64, anchor: &str, body: String| {
        let _ = writeln!(
            s,
            r#"<text x="{x:.3}" y="{y:.3}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{body}</text>"#
        );
    };
    text(&mut s, PAD, H - PAD + 16.0, "middle", format!("{x0:.3}"));
    text(
        &mut s,
        W - PAD,
        H - PAD + 16.0,
        "middle",
        format!("{x1:.3}"),
    );
    text(&mut s, PAD - 6.0, H - PAD, "end", format!("{y0:.3e}"));
    text(&mut s, PAD - 6.0, PAD + 4.0, "end", format!("{y1:.3e}"));
    text(&mut s, W / 2.0, H - 12.0, "middle", "x".into());
    text(
        &mut s,
        W / 2.0,
        PAD - 16.0,
        "middle",
        format!("mode {label}"),
    );

    let points: Vec<String> = grid
        .iter()
        .zip(y)
        .map(|(&x, &v)| format!("{:.3},{:.3}", px(x), py(v)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        points.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

/// Data range widened to a non-degenerate interval.
fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeComparison {
    /// 1-based mode index.
    pub mode: usize,
    pub max_abs_error: f64,
    /// Angle in radians between the two column spans.
    pub subspace_angle: f64,
}

/// Flips each column of `other` whose inner product with the matching
/// column of `reference` is negative.
pub fn align_signs(reference: &DenseMatrix, other: &DenseMatrix) -> Result<DenseMatrix> {
    if reference.shape() != other.shape() {
        return Err(Error::invalid(format!(
            "shape mismatch: {:?} vs {:?}",
            reference.shape(),
            other.shape()
        )));
    }
    let mut out = other.clone();
    for j in 0..other.cols() {
        if dot(reference.col(j), other.col(j)) < 0.0 {
            out.negate_col(j);
        }
    }
    Ok(out)
}

/// Per-column comparison after [`align_signs`].
pub fn compare_modes(
    u_serial: &DenseMatrix,
    u_parallel: &DenseMatrix,
) -> Result<Vec<ModeComparison>> {
    let aligned = align_signs(u_serial, u_parallel)?;
    Ok((0..u_serial.cols())
        .map(|j| {
            let a = u_serial.col(j);
            let b = aligned.col(j);
            let max_abs_error = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            ModeComparison {
                mode: j + 1,
                max_abs_error,
                subspace_angle: line_angle(a, b),
            }
        })
        .collect())
}

/// Angle between `span(a)` and `span(b)` as `2·atan2(‖â−b̂‖, ‖â+b̂‖)` on
/// unit vectors with `â·b̂ ≥ 0`; exact zero for identical directions.
fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm2(a), norm2(b));
    if na == 0.0 || nb == 0.0 {
        return if na == nb {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2
        };
    }
    let sign = if dot(a, b) < 0.0 { -1.0 } else { 1.0 };
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (p, q) = (x / na, sign * y / nb);
        diff += (p - q) * (p - q);
        sum += (p + q) * (p + q);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Writes `mode,max_abs_error,subspace_angle` and returns the rows.
pub fn emit_comparison(
    path: impl AsRef<Path>,
    u_serial: &DenseMatrix,
    u_parallel: &DenseMatrix,
) -> Result<Vec<ModeComparison>> {
    let rows = compare_modes(u_serial, u_parallel)?;
    let mut w = writer(path.as_ref())?;
    w.write_record(["mode", "max_abs_error", "subspace_angle"])?;
    for r in &rows {
        w.write_record([
            r.mode.to_string(),
            format_real(r.max_abs_error),
            format_real(r.subspace_angle),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng::gaussian_matrix;

    #[test]
    fn real_formatting_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, f64::MAX, 0.0, 2f64.powi(-1074)] {
            assert_eq!(
                format_real(v).parse::<f64>().unwrap().to_bits(),
                v.to_bits()
            );
        }
    }

    #[test]
    fn self_and_flipped_comparisons_are_zero() {
        let u = gaussian_matrix(9, 3, 4);
        for r in compare_modes(&u, &u).unwrap() {
            assert_eq!((r.max_abs_error, r.subspace_angle), (0.0, 0.0));
        }
        for r in compare_modes(&u, &u.scaled(-1.0)).unwrap() {
            assert_eq!((r.max_abs_error, r.subspace_angle), (0.0, 0.0));
        }
        assert!(compare_modes(&u, &u.columns(0..2)).is_err());
    }

    #[test]
    fn orthogonal_columns_are_a_right_angle() {
        let a = DenseMatrix::identity(2);
        let b = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let r = compare_modes(&a, &b).unwrap();
        assert!((r[0].subspace_angle - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn modes_round_trip_and_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let u = gaussian_matrix(6, 2, 8);
        let grid: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        let (p, q) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        emit_modes(&p, &grid, &u).unwrap();
        emit_modes(&q, &grid, &u).unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(&q).unwrap());
        let (g, back) = read_modes(&p).unwrap();
        assert_eq!(g, grid);
        assert_eq!(back, u);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("x,mode_1,mode_2\n"));
    }

    #[test]
    fn singular_value_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        emit_singular_values(&p, &[2.0, 0.5]).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "index,singular_value\n1,2.0000000000000000e0\n2,5.0000000000000000e-1\n"
        );
    }

    #[test]
    fn plot_has_one_polyline_and_axes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.svg");
        let grid = [0.0, 0.5, 1.0];
        let u = DenseMatrix::from_rows(&[&[0.0], &[1.0], &[-1.0]]).unwrap();
        emit_mode_plot(&p, &grid, &u, 0).unwrap();
        let svg = fs::read_to_string(&p).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.matches("<line").count() >= 2);
        assert!(emit_mode_plot(&p, &grid, &u, 1).is_err());
    }
}
