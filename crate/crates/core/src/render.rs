//! Escape-time images of 2-dimensional coordinate slices.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basemap::tray_of;
use crate::dynamics::{iterate, OrbitStatus};
use crate::error::{Error, Result};
use crate::types::{MapParams, Point, TrayIndex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub dim: usize,
    pub axis_u: usize,
    pub axis_v: usize,
    /// Values of the remaining `dim - 2` coordinates, in index order.
    pub fixed: Vec<f64>,
    /// `(u_min, u_max, v_min, v_max)`.
    pub window: (f64, f64, f64, f64),
    /// `(width, height)` in pixels.
    pub resolution: (usize, usize),
}

impl SliceSpec {
    pub fn new(
        dim: usize,
        axis_u: usize,
        axis_v: usize,
        fixed: Vec<f64>,
        window: (f64, f64, f64, f64),
        resolution: (usize, usize),
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if axis_u >= dim || axis_v >= dim || axis_u == axis_v {
            return Err(Error::InvalidParameter(format!(
                "slice axes ({axis_u}, {axis_v}) must be distinct and below {dim}"
            )));
        }
        if fixed.len() != dim - 2 {
            return Err(Error::DimensionMismatch {
                expected: dim - 2,
                got: fixed.len(),
            });
        }
        if let Some(index) = fixed.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let (a, b, c, d) = window;
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite() && a < b && c < d) {
            return Err(Error::InvalidParameter(format!("degenerate window {window:?}")));
        }
        if resolution.0 == 0 || resolution.1 == 0 {
            return Err(Error::InvalidParameter(format!("empty resolution {resolution:?}")));
        }
        Ok(SliceSpec {
            dim,
            axis_u,
            axis_v,
            fixed,
            window,
            resolution,
        })
    }

    /// The `(x_1, x_d)` slice (0-based axes `0` and `dim - 1`), other coordinates 0.
    pub fn height_slice(dim: usize, window: (f64, f64, f64, f64), resolution: (usize, usize)) -> Result<Self> {
        SliceSpec::new(dim, 0, dim - 1, vec![0.0; dim.saturating_sub(2)], window, resolution)
    }

    /// Slice coordinates of the center of pixel `(col, row)`, row 0 on top.
    ///
    /// Offsets are taken from the window midpoint so that mirrored pixels
    /// get exactly negated offsets.
    pub fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        let (a, b, c, d) = self.window;
        let (w, h) = self.resolution;
        let du = (b - a) / w as f64;
        let dv = (d - c) / h as f64;
        let u = 0.5 * (a + b) + (col as f64 + 0.5 - 0.5 * w as f64) * du;
        let v = 0.5 * (c + d) - (row as f64 + 0.5 - 0.5 * h as f64) * dv;
        (u, v)
    }

    pub fn point_at(&self, u: f64, v: f64) -> Point {
        let mut fixed = self.fixed.iter();
        let coords = (0..self.dim)
            .map(|j| {
                if j == self.axis_u {
                    u
                } else if j == self.axis_v {
                    v
                } else {
                    *fixed.next().expect("length checked")
                }
            })
            .collect();
        Point::new(coords).expect("finite window and fixed values")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pixel {
    pub escape_step: Option<usize>,
    pub first_tray: TrayIndex,
    pub final_height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<Pixel>,
}

impl ImageGrid {
    pub fn at(&self, col: usize, row: usize) -> &Pixel {
        &self.pixels[row * self.width + col]
    }
}

fn classify(x: &Point, params: &MapParams, max_iter: usize, height_cap: f64) -> Result<Pixel> {
    let orbit = iterate(x, max_iter, params, height_cap)?;
    let last = orbit.len() - 1;
    let escape_step = match orbit.status {
        OrbitStatus::Escaped(k) => Some(k),
        // stopped early: lateral coordinates beyond float resolution
        _ if last < max_iter => Some(last),
        _ => None,
    };
    Ok(Pixel {
        escape_step,
        first_tray: tray_of(x),
        final_height: orbit.heights[last],
    })
}

pub fn render_slice(spec: &SliceSpec, params: &MapParams, max_iter: usize, height_cap: f64) -> Result<ImageGrid> {
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    if spec.dim != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: spec.dim,
        });
    }
    let (width, height) = spec.resolution;
    let rows = (0..height)
        .into_par_iter()
        .map(|row| {
            (0..width)
                .map(|col| {
                    let (u, v) = spec.pixel_center(col, row);
                    classify(&spec.point_at(u, v), params, max_iter, height_cap)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageGrid {
        width,
        height,
        pixels: rows.into_iter().flatten().collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Palette {
    /// Hue cycling with period 24 escape steps.
    #[default]
    Hue,
    /// Gray ramp cycling with period 16.
    Gray,
}

impl std::str::FromStr for Palette {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hue" => Ok(Palette::Hue),
            "gray" | "grey" => Ok(Palette::Gray),
            other => Err(Error::Parse(format!("unknown palette {other:?} (hue, gray)"))),
        }
    }
}

impl Palette {
    pub fn color(self, escape_step: Option<usize>) -> [u8; 3] {
        let Some(k) = escape_step else {
            return [0, 0, 0];
        };
        match self {
            Palette::Hue => hue_rgb((k % 24) * 15),
            Palette::Gray => {
                let g = (64 + (k % 16) * 12) as u8;
                [g, g, g]
            }
        }
    }
}

/// Full-saturation color at `hue` degrees, integer arithmetic only.
fn hue_rgb(hue: usize) -> [u8; 3] {
    let sector = hue / 60;
    let frac = ((hue % 60) * 255 / 60) as u8;
    let (up, down) = (frac, 255 - frac);
    match sector {
        0 => [255, up, 0],
        1 => [down, 255, 0],
        2 => [0, 255, up],
        3 => [0, down, 255],
        4 => [up, 0, 255],
        _ => [255, 0, down],
    }
}

pub fn ppm_bytes(grid: &ImageGrid, palette: Palette) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", grid.width, grid.height);
    let mut out = Vec::with_capacity(header.len() + 3 * grid.pixels.len());
    out.extend_from_slice(header.as_bytes());
    for p in &grid.pixels {
        out.extend_from_slice(&palette.color(p.escape_step));
    }
    out
}

pub fn write_ppm(grid: &ImageGrid, palette: Palette, path: &Path) -> Result<()> {
    std::fs::write(path, ppm_bytes(grid, palette)).map_err(|e| Error::io(path, e))
}

/// One line per pixel: `u,v,escape_step,parity`, with `escape_step = -1`
/// for non-escaping pixels and `parity` the parity `0|1` of the first tray.
pub fn write_grid_csv<W: Write>(grid: &ImageGrid, spec: &SliceSpec, out: &mut W) -> std::io::Result<()> {
    for row in 0..grid.height {
        for col in 0..grid.width {
            let (u, v) = spec.pixel_center(col, row);
            let p = grid.at(col, row);
            let step = p.escape_step.map_or(-1, |k| k as i64);
            let parity = p.first_tray.sigma().rem_euclid(2);
            writeln!(out, "{u},{v},{step},{parity}")?;
        }
    }
    Ok(())
}
