//! CSV exchange for orbits, hairs and point clouds.
//!
//! Files start with `# dim=<d> lambda=<lambda> depth=<k>` and a second
//! comment line carrying the seed and tool version. Floats use Rust's
//! shortest round-trip formatting.

use std::io::{BufRead, Write};

use crate::dynamics::{HairTrace, OrbitRecord};
use crate::error::{Error, Result};
use crate::types::{MapParams, Point};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn header<W: Write>(out: &mut W, params: &MapParams, depth: usize, seed: u64) -> std::io::Result<()> {
    writeln!(out, "# dim={} lambda={} depth={}", params.dim(), params.lambda(), depth)?;
    writeln!(out, "# seed={seed} version={VERSION}")
}

fn row<W: Write>(out: &mut W, first: impl std::fmt::Display, p: &Point) -> std::io::Result<()> {
    write!(out, "{first}")?;
    for c in p.coords() {
        write!(out, ",{c}")?;
    }
    writeln!(out)
}

/// `step,x_1,...,x_d` per orbit point; `depth` in the header is the number
/// of steps taken.
pub fn write_orbit_csv<W: Write>(out: &mut W, orbit: &OrbitRecord, params: &MapParams, seed: u64) -> std::io::Result<()> {
    header(out, params, orbit.len().saturating_sub(1), seed)?;
    for (k, p) in orbit.points.iter().enumerate() {
        row(out, k, p)?;
    }
    Ok(())
}

/// `t,x_1,...,x_d` per hair sample, in `t` order.
pub fn write_hair_csv<W: Write>(out: &mut W, hair: &HairTrace, params: &MapParams, seed: u64) -> std::io::Result<()> {
    header(out, params, hair.depth, seed)?;
    for s in &hair.samples {
        row(out, s.t, &s.point)?;
    }
    Ok(())
}

/// Reads points from CSV. Lines starting with `#` and blank lines are
/// skipped. With `skip_first_column`, the leading `t`/step column of the
/// hair and orbit formats is dropped.
pub fn read_points_csv<R: BufRead>(input: R, skip_first_column: bool) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    let mut dim = None;
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<points>", e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = line.split(',').skip(usize::from(skip_first_column));
        let coords = fields
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {v:?}: {e}", n + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(Error::Parse(format!(
                    "line {}: expected {d} coordinates, got {}",
                    n + 1,
                    coords.len()
                )))
            }
            _ => {}
        }
        points.push(Point::new(coords)?);
    }
    Ok(points)
}

/// Whether a CSV body uses the hair/orbit layout (it carries our header).
pub fn has_parameter_column(text: &str) -> bool {
    text.lines().next().is_some_and(|l| l.starts_with("# dim="))
}
