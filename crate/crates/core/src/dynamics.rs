//! Orbits, symbolic itineraries, pullbacks along inverse branches, hairs and
//! their endpoints, the height ordering and the absorbing region `Omega`.

use rayon::prelude::*;
use serde::Serialize;

use crate::basemap::{f, lambda_branch, tray_of};
use crate::error::{Error, Result};
use crate::types::{Itinerary, MapParams, Point, TrayIndex};

pub const DEFAULT_HEIGHT_CAP: f64 = 300.0;

/// Largest admissible height cap: one more evaluation of
/// `lambda exp(|x_d| - 1)` must stay finite.
pub const MAX_HEIGHT_CAP: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OrbitStatus {
    /// `|x_d^k| >= cap` at step `k`.
    Escaped(usize),
    /// Back inside `|x| <= lambda` at the last step.
    Bounded,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitRecord {
    pub points: Vec<Point>,
    pub trays: Vec<TrayIndex>,
    pub heights: Vec<f64>,
    pub status: OrbitStatus,
}

impl OrbitRecord {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_cap(params: &MapParams, height_cap: f64) -> Result<()> {
    let min = params.lambda() * std::f64::consts::E;
    if !(height_cap >= min && height_cap <= MAX_HEIGHT_CAP) {
        return Err(Error::InvalidParameter(format!(
            "height cap {height_cap} outside [{min}, {MAX_HEIGHT_CAP}]"
        )));
    }
    Ok(())
}

/// Applies `f` up to `n` times, stopping once the height reaches the cap.
///
/// Past the cap, `|f(x)| = lambda exp(|x_d| - 1)` certifies escape.
pub fn iterate(x: &Point, n: usize, params: &MapParams, height_cap: f64) -> Result<OrbitRecord> {
    x.check_dim(params.dim())?;
    check_cap(params, height_cap)?;
    let mut points = vec![x.clone()];
    let mut status = OrbitStatus::Undecided;
    for k in 0..n {
        let cur = &points[k];
        if cur.height().abs() >= height_cap {
            status = OrbitStatus::Escaped(k);
            break;
        }
        match f(cur, params) {
            Ok(next) => points.push(next),
            // lateral coordinates too large to resolve a tray
            Err(Error::Overflow { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    let last = points.len() - 1;
    if status == OrbitStatus::Undecided && last == n {
        if points[last].height().abs() >= height_cap {
            status = OrbitStatus::Escaped(last);
        } else if n > 0 && points[last].norm() <= params.lambda() {
            status = OrbitStatus::Bounded;
        }
    }
    let trays = points.iter().map(tray_of).collect();
    let heights = points.iter().map(|p| p.height().abs()).collect();
    Ok(OrbitRecord {
        points,
        trays,
        heights,
        status,
    })
}

/// Symbols `tray_of(f^j(x))`, `j < k`. `truncated_at` marks the first step
/// that could not be computed.
#[derive(Clone, Debug, Serialize)]
pub struct SymbolTrace {
    pub symbols: Vec<TrayIndex>,
    pub truncated_at: Option<usize>,
}

pub fn itinerary_of(x: &Point, k: usize, params: &MapParams, height_cap: f64) -> Result<SymbolTrace> {
    x.check_dim(params.dim())?;
    check_cap(params, height_cap)?;
    let mut symbols = Vec::with_capacity(k);
    let mut cur = x.clone();
    for j in 0..k {
        symbols.push(tray_of(&cur));
        if j + 1 == k {
            break;
        }
        if cur.height().abs() >= height_cap {
            return Ok(SymbolTrace {
                symbols,
                truncated_at: Some(j + 1),
            });
        }
        cur = match f(&cur, params) {
            Ok(next) => next,
            Err(Error::Overflow { .. }) => {
                return Ok(SymbolTrace {
                    symbols,
                    truncated_at: Some(j + 1),
                })
            }
            Err(e) => return Err(e),
        };
    }
    Ok(SymbolTrace {
        symbols,
        truncated_at: None,
    })
}

/// `Lambda^{s_0} . ... . Lambda^{s_{k-1}}(target)` with every intermediate:
/// element `j` of the result lies in `T(s_j)`, the last element is `target`.
pub fn pullback_chain(
    itinerary: &Itinerary,
    depth: usize,
    target: &Point,
    params: &MapParams,
) -> Result<Vec<Point>> {
    if depth == 0 {
        return Err(Error::InvalidParameter("pullback depth must be >= 1".into()));
    }
    if itinerary.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: itinerary.dim(),
        });
    }
    let mut chain = vec![target.clone(); depth + 1];
    for j in (0..depth).rev() {
        let tray = itinerary.symbol(j);
        chain[j] = lambda_branch(tray, &chain[j + 1], params).map_err(|e| match e {
            Error::WrongHalfSpace { sigma, .. } => Error::WrongHalfSpace {
                sigma,
                step: Some(j),
            },
            other => other,
        })?;
    }
    Ok(chain)
}

pub fn pullback(itinerary: &Itinerary, depth: usize, target: &Point, params: &MapParams) -> Result<Point> {
    Ok(pullback_chain(itinerary, depth, target, params)?.swap_remove(0))
}

/// Anchor at depth `k`: the center of `T(s_k)` lifted to height `t` on the
/// side of `T(s_k)`. At `t = 0` it lies on both sides.
pub fn anchor(itinerary: &Itinerary, k: usize, t: f64) -> Point {
    let tray = itinerary.symbol(k);
    let mut c = tray.center().into_vec();
    let d = c.len();
    c[d - 1] = f64::from(tray.sign()) * t;
    Point::from_vec(c)
}

/// Successive increments `|p_k - p_{k-1}|`, `k = 1..=max_depth`, of the
/// height-0 anchor pullbacks `p_k = pullback(s, k, z_k)`, `p_0 = z_0`.
pub fn pullback_increments(itinerary: &Itinerary, max_depth: usize, params: &MapParams) -> Result<Vec<(Point, f64)>> {
    let mut prev = anchor(itinerary, 0, 0.0);
    let mut out = Vec::with_capacity(max_depth);
    for k in 1..=max_depth {
        let p = pullback(itinerary, k, &anchor(itinerary, k, 0.0), params)?;
        let inc = p.distance(&prev);
        out.push((p.clone(), inc));
        prev = p;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct EndpointEstimate {
    pub point: Point,
    pub residual: f64,
    pub depth: usize,
    pub increments: Vec<f64>,
}

/// Estimates the endpoint `E(s)` as the limit of height-0 anchor pullbacks;
/// stops at the first depth whose increment is at most `tol`.
pub fn endpoint(itinerary: &Itinerary, tol: f64, max_depth: usize, params: &MapParams) -> Result<EndpointEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let mut prev = anchor(itinerary, 0, 0.0);
    let mut increments = Vec::new();
    for k in 1..=max_depth {
        let p = pullback(itinerary, k, &anchor(itinerary, k, 0.0), params)?;
        let inc = p.distance(&prev);
        increments.push(inc);
        if inc <= tol {
            return Ok(EndpointEstimate {
                point: p,
                residual: inc,
                depth: k,
                increments,
            });
        }
        prev = p;
    }
    Err(Error::NoConvergence {
        depth: max_depth,
        residual: increments.last().copied().unwrap_or(f64::INFINITY),
        tol,
    })
}

/// Geometric decay rate of a positive increment sequence from index `from`
/// on, ignoring values at or below `floor` (rounding noise). `None` when
/// fewer than two usable values remain.
pub fn measured_rate(increments: &[f64], from: usize, floor: f64) -> Option<f64> {
    let usable: Vec<(usize, f64)> = increments
        .iter()
        .copied()
        .enumerate()
        .skip(from)
        .take_while(|&(_, v)| v > floor)
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let (i0, v0) = usable[0];
    let (i1, v1) = usable[usable.len() - 1];
    Some((v1 / v0).powf(1.0 / (i1 - i0) as f64))
}

#[derive(Clone, Debug, Serialize)]
pub struct HairSample {
    pub t: f64,
    pub point: Point,
}

#[derive(Clone, Debug, Serialize)]
pub struct HairTrace {
    pub itinerary: Itinerary,
    pub depth: usize,
    pub samples: Vec<HairSample>,
    pub endpoint_estimate: Point,
    /// `|p_depth - p_{depth-1}|` for the height-0 anchors.
    pub residual: f64,
    /// Measured `C` with every increment `<= C alpha^{-k}`.
    pub contraction_constant: f64,
}

impl HairTrace {
    /// True when no two samples with distinct `t` are closer than `tol`.
    pub fn is_injective(&self, tol: f64) -> bool {
        let mut order: Vec<usize> = (0..self.samples.len()).collect();
        order.sort_by(|&a, &b| self.samples[a].point[0].total_cmp(&self.samples[b].point[0]));
        for (i, &a) in order.iter().enumerate() {
            let pa = &self.samples[a].point;
            for &b in &order[i + 1..] {
                let pb = &self.samples[b].point;
                if pb[0] - pa[0] >= tol {
                    break;
                }
                if self.samples[a].t != self.samples[b].t && pa.distance(pb) < tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Samples the hair `H(s)` by pulling back anchors `z_depth(t)` on a uniform
/// grid `t in [0, t_max]`.
pub fn hair_trace(
    itinerary: &Itinerary,
    depth: usize,
    t_max: f64,
    n_samples: usize,
    params: &MapParams,
) -> Result<HairTrace> {
    if !(t_max > 0.0) || n_samples < 2 || depth == 0 {
        return Err(Error::InvalidParameter(format!(
            "hair_trace needs t_max > 0, n_samples >= 2, depth >= 1 (got {t_max}, {n_samples}, {depth})"
        )));
    }
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let t = t_max * i as f64 / (n_samples - 1) as f64;
            pullback(itinerary, depth, &anchor(itinerary, depth, t), params)
                .map(|point| HairSample { t, point })
        })
        .collect::<Result<Vec<_>>>()?;
    let incs = pullback_increments(itinerary, depth, params)?;
    let alpha = params.alpha_hat();
    let contraction_constant = incs
        .iter()
        .enumerate()
        .map(|(k, (_, inc))| inc * alpha.powi(k as i32 + 1))
        .fold(0.0, f64::max);
    let (endpoint_estimate, residual) = incs.last().cloned().expect("depth >= 1");
    Ok(HairTrace {
        itinerary: itinerary.clone(),
        depth,
        samples,
        endpoint_estimate,
        residual,
        contraction_constant,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Order {
    Less,
    Greater,
    Incomparable(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderOutcome {
    pub order: Order,
    /// Step at which the height gap first exceeded `M`.
    pub trigger_step: Option<usize>,
    /// The gap did not persist over the following three steps.
    pub persistence_violation: bool,
}

/// Height sequence `|x_d^k|`, `k = 0..=steps`, with `+inf` after escape past
/// the cap (and `None` when the orbit became unresolvable).
fn heights_with_escape(x: &Point, steps: usize, params: &MapParams, cap: f64) -> Result<Vec<Option<f64>>> {
    let orbit = iterate(x, steps, params, cap)?;
    let mut h: Vec<Option<f64>> = orbit.heights.iter().map(|&v| Some(v)).collect();
    let fill = match orbit.status {
        OrbitStatus::Escaped(_) => Some(f64::INFINITY),
        _ => None,
    };
    h.resize(steps + 1, fill);
    Ok(h)
}

/// Compares `x` and `y` in the order `x < y` iff `|y_d^k| > |x_d^k| + M` for
/// some `k`.
pub fn order_compare(x: &Point, y: &Point, params: &MapParams, k_max: usize) -> Result<OrderOutcome> {
    let m = params.m_hat();
    let steps = k_max + 3;
    let hx = heights_with_escape(x, steps, params, DEFAULT_HEIGHT_CAP)?;
    let hy = heights_with_escape(y, steps, params, DEFAULT_HEIGHT_CAP)?;
    let gap = |k: usize| -> Option<Order> {
        match (hx[k], hy[k]) {
            (Some(a), Some(b)) if a.is_infinite() && b.is_infinite() => None,
            (Some(a), Some(b)) if b > a + m => Some(Order::Less),
            (Some(a), Some(b)) if a > b + m => Some(Order::Greater),
            _ => None,
        }
    };
    for k in 0..=k_max {
        if let Some(order) = gap(k) {
            let mut violation = false;
            for j in k + 1..=k + 3 {
                let both_gone = matches!((hx[j], hy[j]), (Some(a), Some(b)) if a.is_infinite() && b.is_infinite());
                if both_gone || hx[j].is_none() || hy[j].is_none() {
                    break;
                }
                if gap(j) != Some(order) {
                    violation = true;
                    break;
                }
            }
            return Ok(OrderOutcome {
                order,
                trigger_step: Some(k),
                persistence_violation: violation,
            });
        }
    }
    Ok(OrderOutcome {
        order: Order::Incomparable(k_max),
        trigger_step: None,
        persistence_violation: false,
    })
}

/// `psi(t) = exp(sqrt(ln t))`.
pub fn psi(t: f64) -> f64 {
    t.ln().sqrt().exp()
}

/// Membership in `Omega = { |x_d| >= M, |p(x)| <= psi(|x_d|) }`.
pub fn in_omega(x: &Point, params: &MapParams) -> bool {
    let h = x.height().abs();
    h >= params.m_hat() && x.lateral_norm() <= psi(h)
}
