//! Numerical constants of `F` and `f`, and box-counting dimension.
//!
//! Essential infima and suprema are realized as sample minima and maxima
//! over points whose finite-difference stencil stays inside one smooth
//! piece of `F` (see [`smooth_margin`]). Per-sample work runs in parallel;
//! every reduction is a min/max or an ordered collect, so results depend on
//! the seed only.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::basemap::{boundary_distance, f, full_f, lambda_branch, smooth_margin, unfold};
use crate::dynamics::{anchor, pullback_chain};
use crate::error::{Error, Result};
use crate::sampling::SeededSampler;
use crate::types::{omega_floor, Itinerary, MapParams, Point, TrayIndex};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct JacobianEstimate {
    pub at: Point,
    pub matrix: DMatrix<f64>,
    pub step: f64,
    pub boundary_distance: f64,
    /// Largest entry change when the step is halved, relative to the largest entry.
    pub richardson_gap: f64,
}

/// Central differences of `g` at `x`, column by column.
pub fn central_differences<G>(g: G, x: &Point, h: f64) -> Result<DMatrix<f64>>
where
    G: Fn(&Point) -> Result<Point>,
{
    let d = x.dim();
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut plus = x.coords().to_vec();
        plus[j] += h;
        let mut minus = x.coords().to_vec();
        minus[j] -= h;
        let gp = g(&Point::new(plus)?)?;
        let gm = g(&Point::new(minus)?)?;
        for i in 0..d {
            m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    Ok(m)
}

/// Jacobian of `F` (not `f`; scale by `lambda` for `f`).
pub fn jacobian_fd(x: &Point, h: f64) -> Result<JacobianEstimate> {
    if !(1e-8..=1e-3).contains(&h) {
        return Err(Error::InvalidParameter(format!("step {h} outside [1e-8, 1e-3]")));
    }
    let dist = boundary_distance(x);
    if dist < 4.0 * h {
        return Err(Error::TooCloseToFold {
            distance: dist,
            required: 4.0 * h,
        });
    }
    let matrix = central_differences(full_f, x, h)?;
    let half = central_differences(full_f, x, h / 2.0)?;
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    Ok(JacobianEstimate {
        at: x.clone(),
        richardson_gap: (&matrix - &half).amax() / scale,
        matrix,
        step: h,
        boundary_distance: dist,
    })
}

/// `(smallest, largest)` singular value.
pub fn singular_range(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().singular_values();
    (sv.min(), sv.max())
}

fn slab_bounds(dim: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(-1.0, 1.0); dim - 1];
    b.push((0.0, 2.0));
    b
}

#[derive(Clone, Copy, Debug)]
struct JacobianSample {
    smin: f64,
    smax: f64,
    det: f64,
}

/// Draws `n` points in `[-1,1]^{d-1} x [0,2]`, keeps those with a smooth
/// stencil, and returns singular values and determinants of `DF`.
fn sample_jacobians(dim: usize, n: usize, seed: u64, h: f64) -> Result<(Vec<JacobianSample>, Vec<Point>)> {
    let mut sampler = SeededSampler::new(seed);
    let bounds = slab_bounds(dim);
    let points: Vec<Point> = (0..n)
        .map(|_| sampler.point_in_box(&bounds))
        .filter(|x| smooth_margin(x) >= 4.0 * h)
        .collect();
    let samples = points
        .par_iter()
        .map(|x| {
            let j = jacobian_fd(x, h)?;
            let (smin, smax) = singular_range(&j.matrix);
            Ok(JacobianSample {
                smin,
                smax,
                det: j.matrix.determinant(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((samples, points))
}

fn check_samples(n: usize) -> Result<()> {
    if n < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 samples, got {n}")));
    }
    Ok(())
}

/// `beta = ess inf l(DF)` as a sample minimum over the slab `[-1,1]^{d-1} x [0,2]`.
pub fn estimate_beta(dim: usize, n_samples: usize, seed: u64) -> Result<f64> {
    check_samples(n_samples)?;
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let (samples, _) = sample_jacobians(dim, n_samples, seed, DEFAULT_FD_STEP)?;
    Ok(samples.iter().map(|s| s.smin).fold(f64::INFINITY, f64::min))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Dilatation {
    /// `max |DF| / l(DF)`.
    pub k: f64,
    /// `max |DF|^d / J_F`.
    pub k_outer: f64,
    /// `max J_F / l(DF)^d`.
    pub k_inner: f64,
}

impl Dilatation {
    /// `K <= (K_O K_I)^{1/d}`, with 5% slack for sampling.
    pub fn is_consistent(&self, dim: usize) -> bool {
        self.k <= (self.k_outer * self.k_inner).powf(1.0 / dim as f64) * 1.05
    }
}

pub fn estimate_dilatation(dim: usize, n_samples: usize, seed: u64) -> Result<Dilatation> {
    check_samples(n_samples)?;
    let (samples, points) = sample_jacobians(dim, n_samples, seed, DEFAULT_FD_STEP)?;
    if let Some(i) = samples.iter().position(|s| s.det <= 0.0) {
        return Err(Error::NonPositiveJacobian {
            det: samples[i].det,
            at: points[i].coords().to_vec(),
        });
    }
    let d = dim as i32;
    let fold_max = |g: &dyn Fn(&JacobianSample) -> f64| samples.iter().map(g).fold(1.0_f64, f64::max);
    Ok(Dilatation {
        k: fold_max(&|s| s.smax / s.smin),
        k_outer: fold_max(&|s| s.smax.powi(d) / s.det),
        k_inner: fold_max(&|s| s.det / s.smin.powi(d)),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BranchEstimate {
    /// `min |y| l(D Lambda(y))`.
    pub delta: f64,
    /// `max |y| |D Lambda(y)|`; bounded by `1/beta`.
    pub max_scaled_norm: f64,
    /// `max |D Lambda(y)|`; bounded by `1/alpha`.
    pub max_norm: f64,
    pub samples: usize,
}

/// Draws `y = f(x)` with `x` in a random tray at `|x_d| in [1, 3]`, so that
/// `|y| >= lambda`, and measures the branch Jacobian at `y`.
pub fn estimate_delta(params: &MapParams, n_samples: usize, seed: u64) -> Result<BranchEstimate> {
    check_samples(n_samples)?;
    let dim = params.dim();
    let h = DEFAULT_FD_STEP;
    let mut sampler = SeededSampler::with_stream(seed, 1);
    let mut draws = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let lateral: Vec<i64> = (0..dim - 1).map(|_| sampler.integer(-2, 2)).collect();
        let sign = if sampler.coin() { 1 } else { -1 };
        let tray = TrayIndex::new(lateral, sign)?;
        let mut bounds = vec![(-1.0, 1.0); dim - 1];
        bounds.push((1.0, 3.0));
        let u = sampler.point_in_box(&bounds);
        let x = unfold(&u, &tray);
        if smooth_margin(&x) >= 4.0 * h {
            draws.push((tray, x));
        }
    }
    let per = draws
        .par_iter()
        .map(|(tray, x)| {
            let y = f(x, params)?;
            let m = central_differences(|v| lambda_branch(tray, v, params), &y, h)?;
            let (smin, smax) = singular_range(&m);
            let n = y.norm();
            Ok((n * smin, n * smax, smax))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchEstimate {
        delta: per.iter().map(|v| v.0).fold(f64::INFINITY, f64::min),
        max_scaled_norm: per.iter().map(|v| v.1).fold(0.0, f64::max),
        max_norm: per.iter().map(|v| v.2).fold(0.0, f64::max),
        samples: per.len(),
    })
}

/// Random parity-admissible itinerary with lateral entries in
/// `[-spread, spread]`; prefix and cycle lengths in `0..=2` and `1..=3`.
pub fn random_itinerary(dim: usize, spread: i64, sampler: &mut SeededSampler) -> Itinerary {
    loop {
        let prefix_len = sampler.integer(0, 2) as usize;
        let cycle_len = sampler.integer(1, 3) as usize;
        let total = prefix_len + cycle_len;
        let mut seq: Vec<TrayIndex> = Vec::with_capacity(total);
        let mut sign: i8 = if sampler.coin() { 1 } else { -1 };
        for _ in 0..total {
            let lateral: Vec<i64> = (0..dim - 1).map(|_| sampler.integer(-spread, spread)).collect();
            let t = TrayIndex::new(lateral, sign).expect("sign is +-1");
            sign = t.image_sign();
            seq.push(t);
        }
        let cycle = seq.split_off(prefix_len);
        // the wrap pair may still fail; redraw until it does not
        if let Ok(it) = Itinerary::new(dim, seq, cycle) {
            return it;
        }
    }
}

/// Heights `|x_d^k|` of two points on one hair, `k = 0..=depth + 1`.
#[derive(Clone, Debug)]
pub struct OrbitPair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Orbit pairs on common hairs: pull back two anchors along one itinerary
/// and read the forward orbit off the pullback chain, plus one image step.
pub fn sample_orbit_pairs(params: &MapParams, n_pairs: usize, depth: usize, seed: u64) -> Result<Vec<OrbitPair>> {
    let mut sampler = SeededSampler::with_stream(seed, 2);
    let jobs: Vec<(Itinerary, f64, f64)> = (0..n_pairs)
        .map(|_| {
            let it = random_itinerary(params.dim(), 3, &mut sampler);
            let t1 = sampler.uniform_in(0.0, 40.0);
            let t2 = sampler.uniform_in(0.0, 40.0);
            (it, t1, t2)
        })
        .collect();
    jobs.par_iter()
        .map(|(it, t1, t2)| {
            let heights = |t: f64| -> Result<Vec<f64>> {
                let chain = pullback_chain(it, depth, &anchor(it, depth, t), params)?;
                let last = f(&chain[depth], params)?;
                Ok(chain.iter().chain(std::iter::once(&last)).map(|p| p.height().abs()).collect())
            };
            Ok(OrbitPair {
                x: heights(*t1)?,
                y: heights(*t2)?,
            })
        })
        .collect()
}

/// Instances where the height gap exceeds `m` at step `k` but the growth
/// bound `|y_d^{k+1}| > (lambda/3) exp|y_d^k| + m` fails at `k + 1`.
/// Returns `(instances, violations)`.
pub fn growth_violations(pairs: &[OrbitPair], lambda: f64, m: f64) -> (usize, usize) {
    let mut instances = 0;
    let mut violations = 0;
    for pair in pairs {
        for (a, b) in [(&pair.x, &pair.y), (&pair.y, &pair.x)] {
            for k in 0..a.len() - 1 {
                if b[k] > a[k] + m {
                    instances += 1;
                    if b[k + 1] <= lambda / 3.0 * b[k].exp() + m {
                        violations += 1;
                    }
                }
            }
        }
    }
    (instances, violations)
}

#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    pub m_hat: f64,
    /// Smallest violation-free `M` found by the search (may be below the floor).
    pub m_search: f64,
    pub m_floor: f64,
    pub instances: usize,
}

/// Smallest `M` (resolution 0.1) with no growth-bound violations over the
/// sampled pairs, floored at `max{e, 4 lambda}`.
pub fn calibrate_m(params: &MapParams, n_pairs: usize, k_steps: usize, seed: u64) -> Result<Calibration> {
    if n_pairs < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 pairs, got {n_pairs}")));
    }
    let lambda = params.lambda();
    let floor = omega_floor(lambda);
    let pairs = sample_orbit_pairs(params, n_pairs, k_steps, seed)?;
    let clean = |m: f64| growth_violations(&pairs, lambda, m).1 == 0;
    let mut hi = floor;
    while !clean(hi) {
        hi *= 2.0;
        if hi > crate::dynamics::MAX_HEIGHT_CAP {
            return Err(Error::DegenerateFit(format!("no violation-free M below {hi}")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 0.1 {
        let mid = 0.5 * (lo + hi);
        if clean(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let m_hat = floor.max(hi);
    Ok(Calibration {
        m_hat,
        m_search: hi,
        m_floor: floor,
        instances: growth_violations(&pairs, lambda, m_hat).0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionEstimate {
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    pub slope: f64,
    pub r2: f64,
}

/// Occupied boxes of side `eps` in the grid anchored at the origin.
pub fn occupied_boxes(points: &[Point], eps: f64) -> usize {
    let mut seen: HashSet<Vec<i64>> = HashSet::with_capacity(points.len());
    for p in points {
        seen.insert(p.coords().iter().map(|c| (c / eps).floor() as i64).collect());
    }
    seen.len()
}

/// Least-squares slope of `ln N(eps)` against `ln(1/eps)`.
pub fn box_count(points: &[Point], scales: &[f64]) -> Result<DimensionEstimate> {
    if points.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "box counting needs at least 100 points, got {}",
            points.len()
        )));
    }
    if scales.len() < 4 || scales.windows(2).any(|w| !(w[1] < w[0])) || scales.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidParameter(
            "need at least 4 positive, strictly decreasing scales".into(),
        ));
    }
    let counts: Vec<usize> = scales.par_iter().map(|&e| occupied_boxes(points, e)).collect();
    if counts.iter().all(|&c| c == counts[0]) {
        return Err(Error::DegenerateFit(format!("all counts equal {}", counts[0])));
    }
    let xs: Vec<f64> = scales.iter().map(|s| -s.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, r2) = least_squares(&xs, &ys);
    Ok(DimensionEstimate {
        scales: scales.to_vec(),
        counts,
        slope,
        r2,
    })
}

/// `(slope, r^2)` of the ordinary least-squares line.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, r2)
}

/// `n` scales `coarsest, coarsest/2, coarsest/4, ...`; nested grids keep
/// `N(eps) <= N(eps/2) <= 2^d N(eps)`.
pub fn dyadic_scales(coarsest: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| coarsest / f64::powi(2.0, k as i32)).collect()
}

/// The `constants` report.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantsReport {
    pub dim: usize,
    pub lambda: f64,
    pub beta_hat: f64,
    pub alpha_hat: f64,
    pub delta_hat: f64,
    #[serde(rename = "K_hat")]
    pub k_hat: f64,
    #[serde(rename = "K_O_hat")]
    pub k_o_hat: f64,
    #[serde(rename = "K_I_hat")]
    pub k_i_hat: f64,
    #[serde(rename = "M_hat")]
    pub m_hat: f64,
    pub seed: u64,
    pub samples: usize,
    pub version: &'static str,
}

/// Estimates every constant. `lambda = None` resolves to `1.1 / beta_hat`.
pub fn estimate_constants(dim: usize, lambda: Option<f64>, samples: usize, seed: u64) -> Result<(ConstantsReport, MapParams)> {
    let beta = estimate_beta(dim, samples, seed)?;
    let lambda = lambda.unwrap_or(1.1 / beta);
    let params = crate::types::validate_params(dim, lambda, beta)?;
    let dil = estimate_dilatation(dim, samples, seed)?;
    let branch = estimate_delta(&params, samples, seed)?;
    let cal = calibrate_m(&params, 1000.max(samples / 100), 8, seed)?;
    let params = params
        .with_delta_hat(branch.delta)?
        .with_k_hat(dil.k)?
        .with_m_hat(cal.m_hat)?;
    let report = ConstantsReport {
        dim,
        lambda,
        beta_hat: beta,
        alpha_hat: params.alpha_hat(),
        delta_hat: branch.delta,
        k_hat: dil.k,
        k_o_hat: dil.k_outer,
        k_i_hat: dil.k_inner,
        m_hat: params.m_hat(),
        seed,
        samples,
        version: env!("CARGO_PKG_VERSION"),
    };
    Ok((report, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::validate_params;

    #[test]
    fn singular_range_examples() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(singular_range(&id), (1.0, 1.0));
        let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let (lo, hi) = singular_range(&d);
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let rot = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, -1.0]);
        let (lo, hi) = singular_range(&rot);
        assert!((lo - 1.0).abs() < 1e-10 && (hi - 1.0).abs() < 1e-10);
    }

    #[test]
    fn radial_column_in_exponential_zone() {
        // d/dx_d of exp(x_d - 1) G(x_lat) is F itself
        let x = Point::on_axis(2, 1.5);
        let j = jacobian_fd(&x, 1e-5).unwrap();
        let fx = full_f(&x).unwrap();
        for i in 0..2 {
            let want = fx[i];
            assert!((j.matrix[(i, 1)] - want).abs() <= 1e-5 * want.abs().max(1e-12) + 1e-12);
        }
    }

    #[test]
    fn central_differences_second_order() {
        let x = Point::new(vec![0.3, 0.4]).unwrap();
        let j = |h| jacobian_fd(&x, h).unwrap().matrix;
        let (a, b, c) = (j(1e-3), j(5e-4), j(2.5e-4));
        let ratio = (&a - &b).norm() / (&b - &c).norm();
        assert!((ratio - 4.0).abs() <= 1.0, "ratio {ratio}");
        assert!(jacobian_fd(&x, 1e-5).unwrap().richardson_gap < 1e-8);
    }

    #[test]
    fn derivative_scaling_between_heights() {
        let e = std::f64::consts::E;
        for lat in [[0.0, 0.0], [0.3, -0.2]] {
            let lo = Point::new(vec![lat[0], lat[1], 1.5]).unwrap();
            let hi = Point::new(vec![lat[0], lat[1], 2.5]).unwrap();
            let a = jacobian_fd(&lo, 1e-5).unwrap().matrix;
            let b = jacobian_fd(&hi, 1e-5).unwrap().matrix;
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((y - e * x).abs() <= 1e-5 * (e * x).abs().max(1e-9));
            }
        }
    }

    #[test]
    fn jacobian_refuses_fold_neighborhood() {
        let x = Point::new(vec![1.0 - 1e-6, 0.5]).unwrap();
        assert!(matches!(jacobian_fd(&x, 1e-5), Err(Error::TooCloseToFold { .. })));
        assert!(jacobian_fd(&Point::new(vec![0.2, 0.5]).unwrap(), 1e-2).is_err());
    }

    #[test]
    fn beta_is_positive_and_a_lower_envelope() {
        let beta = estimate_beta(2, 5000, 3).unwrap();
        assert!(beta > 0.0);
        for x in [[0.2, 0.5], [-0.7, 0.3], [0.1, 1.7]] {
            let j = jacobian_fd(&Point::new(x.to_vec()).unwrap(), 1e-5).unwrap();
            assert!(beta <= singular_range(&j.matrix).0);
        }
    }

    #[test]
    fn dilatation_is_at_least_one() {
        let dil = estimate_dilatation(2, 5000, 4).unwrap();
        assert!(dil.k >= 1.0 && dil.k_outer >= 1.0 && dil.k_inner >= 1.0);
        assert!(dil.is_consistent(2));
    }

    #[test]
    fn dilatation_ratio_height_invariant() {
        let at = |h| {
            let j = jacobian_fd(&Point::new(vec![0.35, -0.6, h]).unwrap(), 1e-5).unwrap();
            let (lo, hi) = singular_range(&j.matrix);
            hi / lo
        };
        assert!((at(1.5) - at(2.5)).abs() < 1e-6);
    }

    #[test]
    fn delta_and_branch_bounds() {
        let beta = estimate_beta(2, 5000, 5).unwrap();
        let prm = validate_params(2, 1.1 / beta, beta).unwrap();
        let b = estimate_delta(&prm, 2000, 5).unwrap();
        assert!(b.delta > 0.0);
        assert!(b.max_scaled_norm <= 1.05 / beta);
        assert!(b.max_norm <= 1.0 / prm.alpha_hat() * (1.0 + 1e-3));
    }

    #[test]
    fn random_itineraries_are_admissible() {
        let mut s = SeededSampler::new(9);
        for _ in 0..200 {
            let it = random_itinerary(3, 3, &mut s);
            assert!(!it.cycle().is_empty());
        }
    }

    #[test]
    fn box_count_segment_and_square() {
        let seg: Vec<Point> = (0..10_000)
            .map(|i| Point::new(vec![i as f64 / 9999.0 * 0.9 + 0.05, 0.3]).unwrap())
            .collect();
        let est = box_count(&seg, &dyadic_scales(0.125, 6)).unwrap();
        assert!((est.slope - 1.0).abs() <= 0.05, "{est:?}");
        let sq: Vec<Point> = (0..10_000)
            .map(|i| Point::new(vec![(i % 100) as f64 / 100.0, (i / 100) as f64 / 100.0]).unwrap())
            .collect();
        let est = box_count(&sq, &dyadic_scales(0.25, 4)).unwrap();
        assert!((est.slope - 2.0).abs() <= 0.1, "{est:?}");
        assert!(est.counts.windows(2).all(|w| w[0] <= w[1] && w[1] <= 4 * w[0]));
    }

    #[test]
    fn box_count_errors() {
        let pts: Vec<Point> = (0..200).map(|_| Point::origin(2)).collect();
        assert!(matches!(
            box_count(&pts, &dyadic_scales(1.0, 5)),
            Err(Error::DegenerateFit(_))
        ));
        assert!(box_count(&pts[..50], &dyadic_scales(1.0, 5)).is_err());
        assert!(box_count(&pts, &[1.0, 0.5, 0.5, 0.25]).is_err());
    }
}
