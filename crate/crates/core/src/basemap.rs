//! The map `F` and its reflected extension.
//!
//! On the half-cube `[-1,1]^{d-1} x [0,1]` the base map is the chain
//! `h3 . h2 . h1`, a bi-Lipschitz homeomorphism onto the upper half-ball that
//! sends the top face onto the hemisphere. Above the top face it continues
//! exponentially, `F(x) = exp(x_d - 1) F(x_1, ..., x_{d-1}, 1)`, which fills
//! the upper half-space. Every other point is reduced to this half-beam by
//! reflections in the hyperplanes `x_j = 2k + 1` and `x_d = 0`; each domain
//! reflection corresponds to a reflection of the image in `x_d = 0`, so the
//! sign of the image height is `(-1)^sigma(r)`.
//!
//! The Moebius map `T(z) = (z + i)/(iz + 1)` enters `h3` only through its
//! real and imaginary parts, written without `1/|p(x)|` so the lateral
//! direction needs no special case on the axis.

use crate::error::{Error, Result};
use crate::types::{norm2, norm_inf, MapParams, Point, TrayIndex};

/// Slack on every domain precondition.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Lateral magnitude beyond which a tray can no longer be resolved in f64.
pub const LATERAL_LIMIT: f64 = 4_503_599_627_370_496.0; // 2^52

/// Half-cube `B+ -> B-`: shift down by one unit.
pub fn h1(x: &Point) -> Result<Point> {
    let lat_ok = x.lateral().iter().all(|c| c.abs() <= 1.0 + DOMAIN_TOL);
    let h = x.height();
    if !lat_ok || !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&h) {
        return Err(Error::domain("h1", format!("{x} not in [-1,1]^(d-1) x [0,1]")));
    }
    let mut c = x.coords().to_vec();
    *c.last_mut().unwrap() -= 1.0;
    Ok(Point::from_vec(c))
}

pub fn h1_inv(x: &Point) -> Point {
    let mut c = x.coords().to_vec();
    *c.last_mut().unwrap() += 1.0;
    Point::from_vec(c)
}

fn radial_rescale(v: &[f64], num: f64, den: f64) -> Vec<f64> {
    if den < 1e-300 {
        return vec![0.0; v.len()];
    }
    let s = num / den;
    v.iter().map(|c| s * c).collect()
}

fn h2_raw(v: &[f64]) -> Vec<f64> {
    radial_rescale(v, norm_inf(v), norm2(v))
}

fn h2_inv_raw(v: &[f64]) -> Vec<f64> {
    radial_rescale(v, norm2(v), norm_inf(v))
}

/// Lower half-cube `B-` onto lower half-ball `U-`: `x -> (|x|_inf / |x|_2) x`.
pub fn h2(x: &Point) -> Result<Point> {
    if norm_inf(x.coords()) > 1.0 + DOMAIN_TOL || x.height() > DOMAIN_TOL {
        return Err(Error::domain("h2", format!("{x} not in the lower half-cube")));
    }
    Ok(Point::from_vec(h2_raw(x.coords())))
}

/// Inverse of [`h2`]: `y -> (|y|_2 / |y|_inf) y`.
pub fn h2_inv(y: &Point) -> Result<Point> {
    if y.norm() > 1.0 + DOMAIN_TOL || y.height() > DOMAIN_TOL {
        return Err(Error::domain("h2_inv", format!("{y} not in the lower half-ball")));
    }
    Ok(Point::from_vec(h2_inv_raw(y.coords())))
}

/// `h3` with `1 - |x|^2` supplied as `(1 - rho)(1 + rho)`; `rho` is known
/// exactly when `x` comes out of `h2`.
fn h3_raw(x: &[f64], rho: f64) -> Vec<f64> {
    let (lat, b) = x.split_at(x.len() - 1);
    let b = b[0];
    let a2 = lat.iter().map(|c| c * c).sum::<f64>();
    let den = (1.0 - b) * (1.0 - b) + a2;
    let mut out: Vec<f64> = lat.iter().map(|c| 2.0 * c / den).collect();
    out.push((1.0 - rho) * (1.0 + rho) / den);
    out
}

/// `T^{-1}(w) = (w - i)/(1 - i w)` lifted the same way.
fn h3_inv_raw(y: &[f64], rho: f64) -> Vec<f64> {
    let (lat, e) = y.split_at(y.len() - 1);
    let e = e[0];
    let c2 = lat.iter().map(|c| c * c).sum::<f64>();
    let den = (1.0 + e) * (1.0 + e) + c2;
    let mut out: Vec<f64> = lat.iter().map(|c| 2.0 * c / den).collect();
    out.push(-(1.0 - rho) * (1.0 + rho) / den);
    out
}

/// Lower half-ball onto upper half-ball; the flat disk goes to the hemisphere.
pub fn h3(x: &Point) -> Result<Point> {
    let rho = x.norm();
    if rho > 1.0 + DOMAIN_TOL || x.height() > DOMAIN_TOL {
        return Err(Error::domain("h3", format!("{x} not in the lower half-ball")));
    }
    Ok(Point::from_vec(h3_raw(x.coords(), rho)))
}

pub fn h3_inv(y: &Point) -> Result<Point> {
    let rho = y.norm();
    if rho > 1.0 + DOMAIN_TOL || y.height() < -DOMAIN_TOL {
        return Err(Error::domain("h3_inv", format!("{y} not in the upper half-ball")));
    }
    Ok(Point::from_vec(h3_inv_raw(y.coords(), rho)))
}

/// `h = h3 . h2 . h1` on the closed half-cube, unchecked.
fn cube_chain(u: &[f64]) -> Vec<f64> {
    let mut v = u.to_vec();
    *v.last_mut().unwrap() -= 1.0;
    let rho = norm_inf(&v);
    let w = h2_raw(&v);
    h3_raw(&w, rho)
}

fn check_half_beam(op: &'static str, x: &Point) -> Result<()> {
    let lat_ok = x.lateral().iter().all(|c| c.abs() <= 1.0 + DOMAIN_TOL);
    if !lat_ok || x.height() < -DOMAIN_TOL {
        return Err(Error::domain(op, format!("{x} not in [-1,1]^(d-1) x [0,inf)")));
    }
    Ok(())
}

/// `F` on the fundamental half-beam `[-1,1]^{d-1} x [0, inf)`; image in `H+`.
pub fn base_f(x: &Point) -> Result<Point> {
    check_half_beam("base_F", x)?;
    base_f_unchecked(x.coords())
}

fn base_f_unchecked(u: &[f64]) -> Result<Point> {
    let h = u[u.len() - 1];
    if h <= 1.0 {
        return Ok(Point::from_vec(cube_chain(u)));
    }
    let scale = (h - 1.0).exp();
    if !scale.is_finite() {
        return Err(Error::Overflow {
            height: h,
            limit: 1.0 + f64::MAX.ln(),
        });
    }
    let mut top = u.to_vec();
    *top.last_mut().unwrap() = 1.0;
    let out: Vec<f64> = cube_chain(&top).into_iter().map(|c| scale * c).collect();
    Ok(Point::from_vec(out))
}

/// Inverse of [`base_f`] on the closed upper half-space.
pub fn base_f_inv(w: &Point) -> Result<Point> {
    if w.height() < -DOMAIN_TOL {
        return Err(Error::domain("base_F_inv", format!("{w} has negative height")));
    }
    Ok(base_f_inv_unchecked(w.coords()))
}

fn base_f_inv_unchecked(w: &[f64]) -> Point {
    let mut w = w.to_vec();
    let d = w.len();
    if w[d - 1] < 0.0 {
        w[d - 1] = 0.0;
    }
    let n = norm2(&w);
    let mut x = if n <= 1.0 {
        let z = h3_inv_raw(&w, n);
        let mut x = h2_inv_raw(&z);
        x[d - 1] += 1.0;
        x
    } else {
        let unit: Vec<f64> = w.iter().map(|c| c / n).collect();
        let z = h3_inv_raw(&unit, 1.0);
        let mut x = h2_inv_raw(&z);
        x[d - 1] = 1.0 + n.ln();
        x
    };
    for c in &mut x[..d - 1] {
        *c = c.clamp(-1.0, 1.0);
    }
    x[d - 1] = x[d - 1].max(0.0);
    Point::from_vec(x)
}

/// A point reduced to the fundamental half-beam, with the tray it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub folded: Point,
    pub tray: TrayIndex,
}

/// `r` with `x` in `[2r - 1, 2r + 1)`, exact for `|x| < 2^52`.
fn lateral_index(x: f64) -> i64 {
    let mut r = ((x + 1.0) / 2.0).floor();
    // (x + 1) may round up across an odd integer
    if x < 2.0 * r - 1.0 {
        r -= 1.0;
    } else if x >= 2.0 * r + 1.0 {
        r += 1.0;
    }
    r as i64
}

fn reflect_sign(r: i64) -> f64 {
    if r.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Reduces `x` to the half-beam. The tie-break puts `x_j = 2r + 1` in tray
/// `r + 1` and `x_d = 0` in the upper tray; the folded point is the same
/// under either adjacent label.
pub fn fold(x: &Point) -> FoldResult {
    let d = x.dim();
    let mut lateral = Vec::with_capacity(d - 1);
    let mut folded = Vec::with_capacity(d);
    for &c in x.lateral() {
        let r = lateral_index(c);
        lateral.push(r);
        folded.push(reflect_sign(r) * (c - 2.0 * r as f64));
    }
    let h = x.height();
    let sign: i8 = if h >= 0.0 { 1 } else { -1 };
    folded.push(h.abs());
    FoldResult {
        folded: Point::from_vec(folded),
        tray: TrayIndex::new(lateral, sign).expect("sign is +-1"),
    }
}

/// Inverse of [`fold`] for a given tray.
pub fn unfold(folded: &Point, tray: &TrayIndex) -> Point {
    let mut c: Vec<f64> = folded
        .lateral()
        .iter()
        .zip(tray.lateral())
        .map(|(&u, &r)| 2.0 * r as f64 + reflect_sign(r) * u)
        .collect();
    c.push(f64::from(tray.sign()) * folded.height());
    Point::from_vec(c)
}

pub fn tray_of(x: &Point) -> TrayIndex {
    fold(x).tray
}

/// Distance from `x` to the fold hyperplanes (`x_j` odd, `x_d = 0`) and to
/// the seams `|x_d| = 1` where the exponential extension starts.
pub fn boundary_distance(x: &Point) -> f64 {
    let lat = x.lateral().iter().map(|&c| {
        let r = lateral_index(c);
        1.0 - (c - 2.0 * r as f64).abs()
    });
    let h = x.height().abs();
    lat.fold(h.min((h - 1.0).abs()), f64::min)
}

/// [`boundary_distance`] further limited by the distance to the set where
/// `h2` is not differentiable (two coordinates tie for the sup-norm).
pub fn smooth_margin(x: &Point) -> f64 {
    let FoldResult { folded, .. } = fold(x);
    let u = folded.coords();
    let d = u.len();
    let mut abs: Vec<f64> = if u[d - 1] <= 1.0 {
        let mut v: Vec<f64> = u.iter().map(|c| c.abs()).collect();
        v[d - 1] = (u[d - 1] - 1.0).abs();
        v
    } else {
        u[..d - 1].iter().map(|c| c.abs()).collect()
    };
    let kink = if abs.len() < 2 {
        f64::INFINITY
    } else {
        abs.sort_by(|a, b| b.total_cmp(a));
        (abs[0] - abs[1]) / std::f64::consts::SQRT_2
    };
    boundary_distance(x).min(kink)
}

fn check_evaluable(x: &Point) -> Result<()> {
    if let Some(c) = x.lateral().iter().find(|c| c.abs() >= LATERAL_LIMIT) {
        return Err(Error::Overflow {
            height: *c,
            limit: LATERAL_LIMIT,
        });
    }
    Ok(())
}

/// `F` on all of `R^d`.
pub fn full_f(x: &Point) -> Result<Point> {
    check_evaluable(x)?;
    let FoldResult { folded, tray } = fold(x);
    let y = base_f_unchecked(folded.coords())?;
    let mut c = y.into_vec();
    let d = c.len();
    c[d - 1] *= f64::from(tray.image_sign());
    Ok(Point::from_vec(c))
}

/// `f = lambda F`.
pub fn f(x: &Point, params: &MapParams) -> Result<Point> {
    x.check_dim(params.dim())?;
    let y = full_f(x)?;
    let lambda = params.lambda();
    let out: Vec<f64> = y.into_vec().into_iter().map(|c| lambda * c).collect();
    if out.iter().any(|c| !c.is_finite()) {
        return Err(Error::Overflow {
            height: x.height(),
            limit: 1.0 + (f64::MAX / lambda).ln(),
        });
    }
    Ok(Point::from_vec(out))
}

/// The inverse branch `Lambda^r` of `f` restricted to `T(r)`.
pub fn lambda_branch(tray: &TrayIndex, y: &Point, params: &MapParams) -> Result<Point> {
    y.check_dim(params.dim())?;
    if tray.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: tray.dim(),
        });
    }
    let s = f64::from(tray.image_sign());
    if s * y.height() < -DOMAIN_TOL {
        return Err(Error::WrongHalfSpace {
            sigma: tray.sigma(),
            step: None,
        });
    }
    let lambda = params.lambda();
    let mut w: Vec<f64> = y.coords().iter().map(|c| c / lambda).collect();
    let d = w.len();
    w[d - 1] *= s;
    let u = base_f_inv_unchecked(&w);
    Ok(unfold(&u, tray))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SeededSampler;
    use crate::types::validate_params;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn close(a: &Point, b: &Point, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    fn params(d: usize) -> MapParams {
        validate_params(d, 3.0, 0.5).unwrap()
    }

    #[test]
    fn h1_examples() {
        assert_eq!(h1(&p(&[0.0, 0.0, 1.0])).unwrap(), p(&[0.0, 0.0, 0.0]));
        assert_eq!(h1(&p(&[0.5, 0.0])).unwrap(), p(&[0.5, -1.0]));
        assert!(h1(&p(&[1.5, 0.5])).is_err());
        assert!(h1(&p(&[0.5, -0.1])).is_err());
        let mut s = SeededSampler::new(11);
        for _ in 0..1000 {
            let x = s.point_in_box(&[(-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0)]);
            assert_eq!(h1_inv(&h1(&x).unwrap()), x);
        }
    }

    #[test]
    fn h2_examples() {
        assert_eq!(h2(&p(&[0.0, 0.0, -1.0])).unwrap(), p(&[0.0, 0.0, -1.0]));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(&h2(&p(&[1.0, -1.0])).unwrap(), &p(&[r, -r]), 1e-15));
        assert_eq!(h2(&p(&[0.0, 0.0])).unwrap(), p(&[0.0, 0.0]));
        assert!(h2(&p(&[0.5, 0.5])).is_err());
        let mut s = SeededSampler::new(12);
        for _ in 0..1000 {
            let x = s.point_in_box(&[(-1.0, 1.0), (-1.0, 1.0), (-1.0, 0.0)]);
            let y = h2(&x).unwrap();
            assert!((y.norm() - norm_inf(x.coords())).abs() < 1e-15);
            assert!(close(&h2_inv(&y).unwrap(), &x, 1e-12));
        }
    }

    #[test]
    fn h3_examples() {
        assert!(close(&h3(&p(&[0.0, 0.0, 0.0])).unwrap(), &p(&[0.0, 0.0, 1.0]), 1e-15));
        assert!(close(&h3(&p(&[0.0, 0.0, -1.0])).unwrap(), &p(&[0.0, 0.0, 0.0]), 1e-15));
        assert!(close(&h3(&p(&[1.0, 0.0])).unwrap(), &p(&[1.0, 0.0]), 1e-15));
        assert!(h3(&p(&[0.9, -0.9])).is_err());
    }

    #[test]
    fn h3_flat_disk_to_hemisphere_and_round_trip() {
        let mut s = SeededSampler::new(13);
        for _ in 0..1000 {
            let dir = s.unit_vector(3);
            let r = s.uniform().sqrt();
            let mut x: Vec<f64> = dir.iter().map(|c| c * r).collect();
            x[2] = -x[2].abs();
            let x = Point::from_vec(x);
            let y = h3(&x).unwrap();
            assert!(y.height() >= -1e-15 && y.norm() <= 1.0 + 1e-12);
            assert!(close(&h3_inv(&y).unwrap(), &x, 1e-10));
            let flat = Point::from_vec(vec![x[0], x[1], 0.0]);
            assert!((h3(&flat).unwrap().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn h3_agrees_with_complex_mobius() {
        // T(z) = (z + i)/(iz + 1) computed with explicit complex arithmetic
        let mobius = |a: f64, b: f64| {
            let (nr, ni) = (a, b + 1.0);
            let (dr, di) = (1.0 - b, a);
            let den = dr * dr + di * di;
            ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
        };
        let mut s = SeededSampler::new(14);
        for _ in 0..500 {
            let a = s.uniform();
            let b = -s.uniform() * (1.0 - a * a).sqrt();
            let (re, im) = mobius(a, b);
            let y = h3(&p(&[a, b])).unwrap();
            assert!((y[0] - re).abs() < 1e-14 && (y[1] - im).abs() < 1e-14);
            // negative lateral direction mirrors the real part
            let y = h3(&p(&[-a, b])).unwrap();
            assert!((y[0] + re).abs() < 1e-14 && (y[1] - im).abs() < 1e-14);
        }
    }

    #[test]
    fn base_f_examples() {
        assert!(close(&base_f(&p(&[0.0, 0.0, 1.0])).unwrap(), &p(&[0.0, 0.0, 1.0]), 1e-15));
        let e = std::f64::consts::E;
        assert!(close(&base_f(&p(&[0.0, 0.0, 2.0])).unwrap(), &p(&[0.0, 0.0, e]), 1e-14));
        // composing the standalone maps: h1 -> (0,0,-1), h2 fixes it, h3 -> 0
        let chained = h3(&h2(&h1(&p(&[0.0, 0.0, 0.0])).unwrap()).unwrap()).unwrap();
        assert!(close(&chained, &Point::origin(3), 1e-15));
        assert_eq!(base_f(&p(&[0.0, 0.0, 0.0])).unwrap(), Point::origin(3));
        assert!(base_f(&p(&[1.2, 0.0, 0.5])).is_err());
    }

    #[test]
    fn base_f_matches_standalone_chain() {
        let mut s = SeededSampler::new(15);
        for _ in 0..1000 {
            let x = s.point_in_box(&[(-1.0, 1.0), (-1.0, 1.0), (0.0, 1.0)]);
            let chained = h3(&h2(&h1(&x).unwrap()).unwrap()).unwrap();
            assert!(close(&base_f(&x).unwrap(), &chained, 1e-14));
        }
    }

    #[test]
    fn base_f_continuous_at_seam_and_norm() {
        let mut s = SeededSampler::new(16);
        for _ in 0..1000 {
            let lat = s.point_in_box(&[(-1.0, 1.0), (-1.0, 1.0)]);
            let below = p(&[lat[0], lat[1], 1.0 - 1e-12]);
            let above = p(&[lat[0], lat[1], 1.0 + 1e-12]);
            assert!(close(&base_f(&below).unwrap(), &base_f(&above).unwrap(), 1e-10));
            let t = s.uniform_in(1.0, 50.0);
            let x = p(&[lat[0], lat[1], t]);
            let n = base_f(&x).unwrap().norm();
            assert!((n / (t - 1.0).exp() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn base_f_inverse_round_trip() {
        let mut s = SeededSampler::new(17);
        for _ in 0..2000 {
            let x = s.point_in_box(&[(-1.0, 1.0), (-1.0, 1.0), (0.0, 6.0)]);
            let back = base_f_inv(&base_f(&x).unwrap()).unwrap();
            assert!(close(&back, &x, 1e-9), "{x} -> {back}");
        }
        assert!(base_f_inv(&p(&[0.0, -1e-6])).is_err());
    }

    #[test]
    fn fold_examples() {
        let r = fold(&p(&[2.5, -0.3]));
        assert_eq!(r.tray, TrayIndex::new(vec![1], -1).unwrap());
        assert!(close(&r.folded, &p(&[-0.5, 0.3]), 1e-15));
        let r = fold(&Point::origin(3));
        assert_eq!(r.tray, TrayIndex::central(3));
        assert_eq!(r.folded, Point::origin(3));
    }

    #[test]
    fn unfold_is_exact() {
        let mut s = SeededSampler::new(18);
        for _ in 0..10_000 {
            let x = s.point_in_box(&[(-50.0, 50.0), (-50.0, 50.0), (-10.0, 10.0)]);
            let FoldResult { folded, tray } = fold(&x);
            assert_eq!(unfold(&folded, &tray), x);
            assert!(folded.lateral().iter().all(|c| c.abs() <= 1.0));
            assert!(folded.height() >= 0.0);
        }
        // (x + 1) rounds up to 2 here; the index must still bracket x
        let x = p(&[1.0 - f64::EPSILON / 2.0, 0.5]);
        assert!(x[0] < 1.0);
        let FoldResult { folded, tray } = fold(&x);
        assert_eq!(tray.lateral(), &[0]);
        assert_eq!(unfold(&folded, &tray), x);
    }

    #[test]
    fn shared_walls_fold_identically() {
        let x = p(&[1.0, 0.4]);
        let FoldResult { folded, tray } = fold(&x);
        assert_eq!(tray.lateral(), &[1]);
        // the same point viewed from tray 0 folds to the same place
        assert_eq!(folded, p(&[1.0, 0.4]));
        assert_eq!(unfold(&folded, &TrayIndex::new(vec![0], 1).unwrap()), x);
    }

    #[test]
    fn tray_of_examples() {
        assert_eq!(tray_of(&p(&[0.5, 0.2])), TrayIndex::new(vec![0], 1).unwrap());
        assert_eq!(tray_of(&p(&[1.0, 0.0])), TrayIndex::new(vec![1], 1).unwrap());
        assert_eq!(
            tray_of(&p(&[-2.2, 3.9, -5.0])),
            TrayIndex::new(vec![-1, 2], -1).unwrap()
        );
    }

    #[test]
    fn f_examples() {
        let prm = params(3);
        let lam = prm.lambda();
        let e = std::f64::consts::E;
        assert_eq!(f(&Point::origin(3), &prm).unwrap(), Point::origin(3));
        let up = f(&p(&[0.0, 0.0, 2.0]), &prm).unwrap();
        assert!(close(&up, &p(&[0.0, 0.0, lam * e]), 1e-13));
        let down = f(&p(&[0.0, 0.0, -2.0]), &prm).unwrap();
        assert!(close(&down, &p(&[0.0, 0.0, -lam * e]), 1e-13));
        assert!(matches!(
            f(&p(&[0.0, 0.0, 800.0]), &prm),
            Err(Error::Overflow { .. })
        ));
        assert!(f(&p(&[0.0, 1.0]), &prm).is_err());
    }

    #[test]
    fn f_continuous_across_walls() {
        let prm = params(2);
        let mut s = SeededSampler::new(19);
        let eps = 1e-8;
        for _ in 0..500 {
            let k = s.integer(-3, 3) as f64;
            let wall = 2.0 * k + 1.0;
            let h = s.uniform_in(-3.0, 3.0);
            let a = f(&p(&[wall - eps, h]), &prm).unwrap();
            let b = f(&p(&[wall + eps, h]), &prm).unwrap();
            assert!(a.distance(&b) <= 1e-6, "wall {wall} h {h}: {a} vs {b}");
            let x1 = s.uniform_in(-5.0, 5.0);
            let a = f(&p(&[x1, -eps]), &prm).unwrap();
            let b = f(&p(&[x1, eps]), &prm).unwrap();
            assert!(a.distance(&b) <= 1e-6);
        }
    }

    #[test]
    fn lambda_branch_examples() {
        let prm = params(2);
        let lam = prm.lambda();
        let e = std::f64::consts::E;
        let r0 = TrayIndex::central(2);
        let x = lambda_branch(&r0, &p(&[0.0, lam * e]), &prm).unwrap();
        assert!(close(&x, &p(&[0.0, 2.0]), 1e-12));
        let x = lambda_branch(&r0, &p(&[0.0, lam]), &prm).unwrap();
        assert!(close(&x, &p(&[0.0, 1.0]), 1e-12));
        let odd = TrayIndex::new(vec![1], 1).unwrap();
        assert!(matches!(
            lambda_branch(&odd, &p(&[0.0, 1.0]), &prm),
            Err(Error::WrongHalfSpace { sigma: 1, .. })
        ));
    }

    #[test]
    fn lambda_branch_inverts_f() {
        let prm = params(3);
        let mut s = SeededSampler::new(20);
        let mut tested = 0;
        while tested < 2000 {
            let x = s.point_in_box(&[(-7.0, 7.0), (-7.0, 7.0), (-6.0, 6.0)]);
            if boundary_distance(&x) < 1e-6 {
                continue;
            }
            let y = f(&x, &prm).unwrap();
            let back = lambda_branch(&tray_of(&x), &y, &prm).unwrap();
            assert!(close(&back, &x, 1e-8), "{x} -> {back}");
            tested += 1;
        }
    }

    #[test]
    fn margins() {
        assert!((boundary_distance(&p(&[0.0, 0.5])) - 0.5).abs() < 1e-15);
        assert!((boundary_distance(&p(&[0.75, 3.0])) - 0.25).abs() < 1e-15);
        assert!((boundary_distance(&p(&[0.0, 1.2])) - 0.2).abs() < 1e-15);
        // diagonal of the lower half-cube image: |u_1| = 1 - u_2
        assert!(smooth_margin(&p(&[0.5, 0.5])) < 1e-15);
        // d = 2 has no lateral kink above the seam
        assert!((smooth_margin(&p(&[0.0, 1.5])) - 0.5).abs() < 1e-15);
        // d = 3 axis above the seam is a cone point of h2
        assert_eq!(smooth_margin(&p(&[0.0, 0.0, 1.5])), 0.0);
    }
}
