//! Text formats for measures and transports, and conversion between
//! measures and grayscale grids.
//!
//! Measure files start with `d <dim>`, followed by one `<mass> <x_1> .. <x_d>`
//! line per atom. Transport files start with `N <n>`, followed by one
//! `<i> <j> <k> <mass>` line per flow (0-based indices). Numbers are decimals
//! or `p/q` fractions; `#` starts a comment.

pub mod pgm;

use log::warn;

pub use pgm::{parse_pgm, write_pgm_ascii, write_pgm_binary, GridImage};

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, Point};
use crate::scalar::Scalar;
use crate::transport::{Flow, TransportPlan};

/// Non-empty lines with comments removed, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, line)| {
        let body = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some((n + 1, fields))
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_scalar<S: Scalar>(token: &str, line: usize) -> Result<S> {
    S::parse_str(token).map_err(|e| parse_err(line, e.to_string()))
}

/// Parses a measure file. Masses summing to 1 within `1e-6` are rescaled.
pub fn parse_measure<S: Scalar>(text: &str, tol: f64) -> Result<DiscreteMeasure<S>> {
    let mut lines = content_lines(text);
    let (first, header) = lines.next().ok_or_else(|| parse_err(1, "empty measure file"))?;
    let dim = match header.as_slice() {
        ["d", d] => d
            .parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| parse_err(first, format!("invalid dimension {d:?}")))?,
        _ => return Err(parse_err(first, "expected header `d <dim>`")),
    };
    let mut atoms = Vec::new();
    for (n, fields) in lines {
        if fields.len() != dim + 1 {
            return Err(parse_err(
                n,
                format!("expected a mass and {dim} coordinates, found {} fields", fields.len()),
            ));
        }
        let mass: S = parse_scalar(fields[0], n)?;
        if !mass.is_positive(tol) {
            return Err(parse_err(n, format!("mass {mass} is not positive")));
        }
        let coords = fields[1..]
            .iter()
            .map(|t| parse_scalar(t, n))
            .collect::<Result<Vec<S>>>()?;
        atoms.push((Point::new(coords), mass));
    }
    if atoms.is_empty() {
        return Err(parse_err(first, "measure has no atoms"));
    }
    DiscreteMeasure::normalized(atoms, tol)
}

pub fn format_measure<S: Scalar>(measure: &DiscreteMeasure<S>) -> String {
    let mut out = format!("d {}\n", measure.dim());
    for a in measure.atoms() {
        out.push_str(&a.mass.to_string());
        for c in a.point.coords() {
            out.push(' ');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

/// Parses a transport file against its source and target measures.
pub fn parse_transport<S: Scalar>(
    text: &str,
    source: &DiscreteMeasure<S>,
    targets: &[DiscreteMeasure<S>],
    tol: f64,
) -> Result<TransportPlan<S>> {
    let mut lines = content_lines(text);
    let (first, header) = lines.next().ok_or_else(|| parse_err(1, "empty transport file"))?;
    let n = match header.as_slice() {
        ["N", n] => n
            .parse::<usize>()
            .map_err(|_| parse_err(first, format!("invalid measure count {n:?}")))?,
        _ => return Err(parse_err(first, "expected header `N <n>`")),
    };
    if n != targets.len() {
        return Err(parse_err(
            first,
            format!("file describes {n} measures, {} given", targets.len()),
        ));
    }
    let mut flows = Vec::new();
    for (line, fields) in lines {
        let [i, j, k, mass] = fields.as_slice() else {
            return Err(parse_err(line, "expected `i j k mass`"));
        };
        let index = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| parse_err(line, format!("invalid index {t:?}")))
        };
        flows.push(Flow {
            measure: index(i)?,
            source: index(j)?,
            target: index(k)?,
            mass: parse_scalar(mass, line)?,
        });
    }
    TransportPlan::new(source.clone(), targets.to_vec(), flows, tol)
}

pub fn format_transport<S: Scalar>(plan: &TransportPlan<S>) -> String {
    let mut out = format!("N {}\n", plan.targets().len());
    for f in plan.flows() {
        out.push_str(&format!("{} {} {} {}\n", f.measure, f.source, f.target, f.mass));
    }
    out
}

/// Pixel `(row r, column c)` with intensity `v > 0` becomes the atom `(c, r)`
/// of mass `v / sum of intensities`.
pub fn grid_to_measure<S: Scalar>(img: &GridImage, tol: f64) -> Result<DiscreteMeasure<S>> {
    let total: i64 = img.pixels.iter().map(|&v| i64::from(v)).sum();
    if total == 0 {
        return Err(Error::Image("image has no positive pixel".into()));
    }
    let mut atoms = Vec::new();
    for r in 0..img.height {
        for c in 0..img.width {
            let v = img.get(r, c);
            if v > 0 {
                let point = Point::new(vec![S::from_i64(c as i64), S::from_i64(r as i64)]);
                atoms.push((point, S::from_ratio(i64::from(v), total)));
            }
        }
    }
    DiscreteMeasure::normalized(atoms, tol)
}

/// Draws a two-dimensional measure on a canvas of `width x height` unit
/// cells refined `refine` times: the output has `refine * n - (refine - 1)`
/// pixels per side of length `n`, and atom `(x, y)` lands on pixel
/// `(round(y * refine), round(x * refine))`. Atoms off the refined lattice
/// are snapped with a warning. The heaviest pixel gets `max_value`.
pub fn render_measure<S: Scalar>(
    measure: &DiscreteMeasure<S>,
    refine: usize,
    width: usize,
    height: usize,
    max_value: u16,
) -> Result<GridImage> {
    if refine == 0 || width == 0 || height == 0 {
        return Err(Error::Image("refinement and canvas sides must be positive".into()));
    }
    if measure.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: measure.dim(),
        });
    }
    let out_w = refine * width - (refine - 1);
    let out_h = refine * height - (refine - 1);
    let mut mass = vec![0f64; out_w * out_h];
    let q = refine as f64;
    for a in measure.atoms() {
        let scaled: Vec<f64> = a.point.coords().iter().map(|c| c.to_f64() * q).collect();
        let snapped: Vec<f64> = scaled.iter().map(|v| v.round()).collect();
        if scaled.iter().zip(&snapped).any(|(v, s)| (v - s).abs() > 1e-9) {
            warn!("atom {} is off the refined lattice, snapping", a.point);
        }
        let (col, row) = (snapped[0], snapped[1]);
        if col < 0.0 || row < 0.0 || col >= out_w as f64 || row >= out_h as f64 {
            return Err(Error::Image(format!("atom {} lies outside the canvas", a.point)));
        }
        mass[row as usize * out_w + col as usize] += a.mass.to_f64();
    }
    let peak = mass.iter().cloned().fold(0f64, f64::max);
    let pixels = mass
        .iter()
        .map(|m| (m / peak * f64::from(max_value)).round() as u16)
        .collect();
    GridImage::new(out_w, out_h, max_value, pixels)
}
