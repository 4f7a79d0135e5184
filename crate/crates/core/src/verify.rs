//! Self-check suites behind `quasitrig verify`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    box_count, calibrate_m, dyadic_scales, estimate_beta, estimate_delta, estimate_dilatation, jacobian_fd,
    growth_violations, random_itinerary, sample_orbit_pairs, singular_range,
};
use crate::basemap::{f, fold, lambda_branch, tray_of, unfold};
use crate::dynamics::{
    anchor, endpoint, hair_trace, iterate, measured_rate, order_compare, pullback, pullback_increments, Order,
    OrbitStatus, DEFAULT_HEIGHT_CAP,
};
use crate::error::{Error, Result};
use crate::sampling::SeededSampler;
use crate::types::{omega_floor, validate_params, Itinerary, MapParams, Point, TrayIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Basemap,
    Dynamics,
    Analysis,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basemap" => Ok(Suite::Basemap),
            "dynamics" => Ok(Suite::Dynamics),
            "analysis" => Ok(Suite::Analysis),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!(
                "unknown suite {other:?} (all, basemap, dynamics, analysis)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark}  {:<9} {:<28} {}", self.suite, self.name, self.detail)
    }
}

/// Shared configuration; `params` uses `lambda = 1.1 / beta_hat`.
pub struct Context {
    pub dim: usize,
    pub seed: u64,
    pub params: MapParams,
}

impl Context {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        let beta = estimate_beta(dim, 100_000, seed)?;
        let params = validate_params(dim, 1.1 / beta, beta)?;
        Ok(Context { dim, seed, params })
    }

    fn sampler(&self, stream: u64) -> SeededSampler {
        SeededSampler::with_stream(self.seed, 100 + stream)
    }
}

pub fn run(suite: Suite, ctx: &Context) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Basemap | Suite::All) {
        out.extend(basemap_checks(ctx)?);
    }
    if matches!(suite, Suite::Dynamics | Suite::All) {
        out.extend(dynamics_checks(ctx)?);
    }
    if matches!(suite, Suite::Analysis | Suite::All) {
        out.extend(analysis_checks(ctx)?);
    }
    Ok(out)
}

fn check(suite: &'static str, name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        suite,
        name,
        passed,
        detail,
    }
}

/// Point in a random tray with lateral index in `[-spread, spread]`, folded
/// coordinates at least `margin` from every tray wall and height in
/// `[h_lo, h_hi]`.
pub fn random_tray_point(
    s: &mut SeededSampler,
    dim: usize,
    spread: i64,
    (h_lo, h_hi): (f64, f64),
    margin: f64,
) -> (TrayIndex, Point) {
    let lateral: Vec<i64> = (0..dim - 1).map(|_| s.integer(-spread, spread)).collect();
    let tray = TrayIndex::new(lateral, if s.coin() { 1 } else { -1 }).expect("sign is +-1");
    let mut bounds = vec![(-1.0 + margin, 1.0 - margin); dim - 1];
    bounds.push((h_lo.max(margin), h_hi));
    let folded = s.point_in_box(&bounds);
    (tray.clone(), unfold(&folded, &tray))
}

fn basemap_checks(ctx: &Context) -> Result<Vec<CheckResult>> {
    const S: &str = "basemap";
    let (d, prm) = (ctx.dim, &ctx.params);
    let mut out = Vec::new();

    let mut s = ctx.sampler(1);
    let pts: Vec<Point> = (0..10_000).map(|_| random_tray_point(&mut s, d, 5, (1.0, 100.0), 0.0).1).collect();
    let worst = pts
        .par_iter()
        .map(|x| {
            let want = prm.lambda() * (x.height().abs() - 1.0).exp();
            f(x, prm).map(|y| (y.norm() - want).abs() / want)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(check(S, "norm identity", worst <= 1e-9, format!("max rel err {worst:.3e}")));

    let mut s = ctx.sampler(2);
    let pts: Vec<Point> = (0..10_000).map(|_| random_tray_point(&mut s, d, 5, (0.0, 3.0), 1e-6).1).collect();
    let worst = pts
        .par_iter()
        .map(|x| {
            let y = f(x, prm)?;
            lambda_branch(&tray_of(x), &y, prm).map(|back| back.distance(x))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(check(S, "branch round-trip", worst <= 1e-8, format!("max error {worst:.3e}")));

    let mut s = ctx.sampler(3);
    let mut bounds = vec![(-9.0, 9.0); d - 1];
    bounds.push((-3.0, 3.0));
    let pts: Vec<Point> = (0..100_000).map(|_| s.point_in_box(&bounds)).collect();
    let violations: usize = pts
        .par_iter()
        .map(|x| {
            let y = f(x, prm)?;
            let want = if tray_of(x).is_even() { 1.0 } else { -1.0 };
            Ok(usize::from(y.height().abs() >= 1e-12 && y.height().signum() != want))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    out.push(check(S, "parity mapping", violations == 0, format!("{violations} violations")));

    let mut s = ctx.sampler(4);
    let mut bounds = vec![(-50.0, 50.0); d - 1];
    bounds.push((-50.0, 50.0));
    let bad = (0..10_000)
        .filter(|_| {
            let x = s.point_in_box(&bounds);
            let fr = fold(&x);
            unfold(&fr.folded, &fr.tray) != x
        })
        .count();
    out.push(check(S, "fold/unfold exact", bad == 0, format!("{bad} mismatches")));

    let mut s = ctx.sampler(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut c: Vec<f64> = (0..d - 1).map(|_| s.uniform_in(-9.0, 9.0)).collect();
        c.push(0.0);
        worst = worst.max(f(&Point::new(c)?, prm)?.height().abs());
    }
    out.push(check(S, "plane invariance", worst == 0.0, format!("max |f(x)_d| {worst:e}")));
    Ok(out)
}

fn dynamics_checks(ctx: &Context) -> Result<Vec<CheckResult>> {
    const S: &str = "dynamics";
    let (d, prm) = (ctx.dim, &ctx.params);
    let mut out = Vec::new();

    let o = iterate(&Point::origin(d), 10, prm, DEFAULT_HEIGHT_CAP)?;
    let fixed = o.status == OrbitStatus::Bounded && o.points.iter().all(|p| p.norm() == 0.0);
    out.push(check(S, "origin fixed", fixed, format!("status {:?}", o.status)));

    let o = iterate(&Point::on_axis(d, 3.0), 5, prm, DEFAULT_HEIGHT_CAP)?;
    let fast = matches!(o.status, OrbitStatus::Escaped(k) if k <= 5);
    out.push(check(S, "axis escape", fast, format!("status {:?}", o.status)));

    let central = Itinerary::constant(TrayIndex::central(d))?;
    let e = endpoint(&central, 1e-12, 64, prm)?;
    out.push(check(
        S,
        "constant endpoint",
        e.point.norm() <= 1e-8,
        format!("|E| = {:.3e} at depth {}", e.point.norm(), e.depth),
    ));

    let mut s = ctx.sampler(6);
    let bound = 1.0 / prm.alpha_hat() + 0.1;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let it = if i == 0 { central.clone() } else { random_itinerary(d, 3, &mut s) };
        let incs: Vec<f64> = pullback_increments(&it, 24, prm)?.into_iter().map(|(_, v)| v).collect();
        if let Some(r) = measured_rate(&incs, 4, 1e-13) {
            worst = worst.max(r);
        }
    }
    out.push(check(
        S,
        "pullback contraction",
        worst <= bound,
        format!("max rate {worst:.4} (bound {bound:.4})"),
    ));

    let hair = hair_trace(&central, 10, 20.0, 50, prm)?;
    let off = hair.samples.iter().map(|s| s.point.lateral_norm()).fold(0.0, f64::max);
    let ordered = hair.samples.windows(2).all(|w| w[0].t < w[1].t);
    out.push(check(
        S,
        "axis hair",
        off <= 1e-8 && ordered && hair.is_injective(1e-12),
        format!("max lateral {off:.3e}"),
    ));

    let (x, y) = (Point::on_axis(d, 1.0), Point::on_axis(d, 3.0));
    let a = order_compare(&x, &y, prm, 10)?.order;
    let b = order_compare(&y, &x, prm, 10)?.order;
    let c = order_compare(&x, &x, prm, 10)?.order;
    out.push(check(
        S,
        "height order",
        a == Order::Less && b == Order::Greater && c == Order::Incomparable(10),
        format!("{a:?} / {b:?} / {c:?}"),
    ));

    // points pulled back from the plane x_d = 0 stay on it after m steps
    let mut s = ctx.sampler(7);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let it = random_itinerary(d, 2, &mut s);
        let m = s.integer(1, 3) as usize;
        let x = pullback(&it, m, &anchor(&it, m, 0.0), prm)?;
        let o = iterate(&x, m + 4, prm, DEFAULT_HEIGHT_CAP)?;
        for p in &o.points[m..] {
            worst = worst.max(p.height().abs());
        }
    }
    out.push(check(S, "boundary seeds", worst <= 1e-9, format!("max |x_d| {worst:.3e}")));
    Ok(out)
}

fn analysis_checks(ctx: &Context) -> Result<Vec<CheckResult>> {
    const S: &str = "analysis";
    let (d, prm) = (ctx.dim, &ctx.params);
    let mut out = Vec::new();
    let beta = prm.beta_hat();

    let probe = Point::new({
        let mut c = vec![0.3; d - 1];
        c.push(0.5);
        c
    })?;
    let local = singular_range(&jacobian_fd(&probe, 1e-5)?.matrix).0;
    out.push(check(
        S,
        "beta lower envelope",
        beta > 0.0 && beta <= local,
        format!("beta_hat {beta:.6}"),
    ));

    let dil = estimate_dilatation(d, 20_000, ctx.seed)?;
    out.push(check(
        S,
        "dilatation",
        dil.k >= 1.0 && dil.is_consistent(d),
        format!("K {:.4} K_O {:.4} K_I {:.4}", dil.k, dil.k_outer, dil.k_inner),
    ));

    let br = estimate_delta(prm, 10_000, ctx.seed)?;
    let n1 = 1.0 / prm.alpha_hat() * (1.0 + 1e-3);
    out.push(check(
        S,
        "branch derivative",
        br.delta > 0.0 && br.max_scaled_norm <= 1.05 / beta && br.max_norm <= n1,
        format!(
            "delta {:.4} max|y||DL| {:.4} max|DL| {:.4}",
            br.delta, br.max_scaled_norm, br.max_norm
        ),
    ));

    let mut s = ctx.sampler(8);
    let ratio = (0..10_000)
        .map(|_| {
            let (tray, a) = random_tray_point(&mut s, d, 3, (0.0, 2.0), 0.0);
            let mut bounds = vec![(-1.0, 1.0); d - 1];
            bounds.push((0.0, 2.0));
            let b = unfold(&s.point_in_box(&bounds), &tray);
            (a, b)
        })
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(a, b)| Ok(f(a, prm)?.distance(&f(b, prm)?) / a.distance(b)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let floor = prm.alpha_hat() * (1.0 - 1e-3);
    out.push(check(
        S,
        "expansion",
        ratio >= floor,
        format!("min ratio {ratio:.5} (floor {floor:.5})"),
    ));

    let cal = calibrate_m(prm, 1000, 8, ctx.seed)?;
    let fresh = sample_orbit_pairs(prm, 1000, 8, ctx.seed.wrapping_add(1))?;
    let (_, at_m) = growth_violations(&fresh, prm.lambda(), cal.m_hat);
    let (_, at_zero) = growth_violations(&fresh, prm.lambda(), 0.0);
    out.push(check(
        S,
        "growth calibration",
        cal.m_hat >= omega_floor(prm.lambda()) && at_m == 0 && at_zero > 0,
        format!("M_hat {:.3}, {at_m} violations at M_hat, {at_zero} at 0", cal.m_hat),
    ));

    let seg: Vec<Point> = (0..10_000)
        .map(|i| {
            let mut c = vec![0.3; d];
            c[0] = 0.05 + 0.9 * i as f64 / 9999.0;
            Point::new(c)
        })
        .collect::<Result<_>>()?;
    let slope = box_count(&seg, &dyadic_scales(0.125, 6))?.slope;
    out.push(check(S, "box count control", (slope - 1.0).abs() <= 0.05, format!("segment slope {slope:.4}")));
    Ok(out)
}
