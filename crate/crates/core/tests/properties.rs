use std::sync::OnceLock;

use proptest::prelude::*;

use quasitrig::analysis::{central_differences, dyadic_scales, estimate_beta, jacobian_fd, occupied_boxes, singular_range};
use quasitrig::basemap::{boundary_distance, f, fold, lambda_branch, smooth_margin, tray_of, unfold};
use quasitrig::dynamics::{anchor, hair_trace, iterate, pullback_chain};
use quasitrig::{validate_params, Itinerary, MapParams, Point, TrayIndex};

fn params(dim: usize) -> &'static MapParams {
    static P: [OnceLock<MapParams>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    P[dim - 2].get_or_init(|| {
        let beta = estimate_beta(dim, 100_000, 1).unwrap();
        validate_params(dim, 1.1 / beta, beta).unwrap()
    })
}

fn point(dim: usize, lat: f64, h: std::ops::Range<f64>) -> impl Strategy<Value = Point> {
    (prop::collection::vec(-lat..lat, dim - 1), h).prop_map(|(mut c, h)| {
        c.push(h);
        Point::new(c).unwrap()
    })
}

fn any_point() -> impl Strategy<Value = Point> {
    (2usize..=4).prop_flat_map(|d| point(d, 20.0, -5.0..5.0))
}

/// Tray label plus a folded point in `[-1,1]^{d-1} x [0, h_max]`.
fn tray_and_folded(dim: usize, h_max: f64) -> impl Strategy<Value = (TrayIndex, Vec<f64>)> {
    (
        prop::collection::vec(-4i64..=4, dim - 1),
        prop::bool::ANY,
        prop::collection::vec(-1.0f64..=1.0, dim - 1),
        0.0..h_max,
    )
        .prop_map(|(lat, up, mut c, h)| {
            c.push(h);
            (TrayIndex::new(lat, if up { 1 } else { -1 }).unwrap(), c)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn fold_unfold_is_exact(x in (2usize..=4).prop_flat_map(|d| point(d, 1e6, -1e6..1e6))) {
        let fr = fold(&x);
        prop_assert_eq!(unfold(&fr.folded, &fr.tray), x.clone());
        let c = fr.folded.coords();
        let d = c.len();
        prop_assert!(c[..d - 1].iter().all(|v| v.abs() <= 1.0));
        prop_assert!(c[d - 1] >= 0.0);
        prop_assert_eq!(fr.tray, tray_of(&x));
    }

    #[test]
    fn branch_inverts_f(x in any_point()) {
        prop_assume!(boundary_distance(&x) >= 1e-6);
        let prm = params(x.dim());
        let back = lambda_branch(&tray_of(&x), &f(&x, prm).unwrap(), prm).unwrap();
        prop_assert!(back.distance(&x) <= 1e-8, "{} vs {}", back, x);
    }

    #[test]
    fn half_space_parity(x in any_point()) {
        let y = f(&x, params(x.dim())).unwrap();
        prop_assume!(y.height().abs() >= 1e-12);
        prop_assert_eq!(y.height() > 0.0, tray_of(&x).is_even());
    }

    #[test]
    fn norm_identity(x in (2usize..=4).prop_flat_map(|d| point(d, 20.0, 1.0..60.0)), flip in prop::bool::ANY) {
        let mut c = x.into_vec();
        if flip {
            let d = c.len();
            c[d - 1] = -c[d - 1];
        }
        let x = Point::new(c).unwrap();
        let prm = params(x.dim());
        let want = prm.lambda() * (x.height().abs() - 1.0).exp();
        prop_assert!((f(&x, prm).unwrap().norm() - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn continuous_across_walls(
        d in 2usize..=4,
        axis_pick in 0usize..4,
        wall in -3i64..=3,
        rest in prop::collection::vec(-0.9f64..0.9, 4),
        h in 0.05f64..2.5,
    ) {
        let j = axis_pick % d;
        let mut c: Vec<f64> = rest[..d - 1].to_vec();
        c.push(h);
        // lateral wall at 2 wall + 1, or the plane x_d = 0
        if j < d - 1 { c[j] = 2.0 * wall as f64 + 1.0 } else { c[d - 1] = 0.0 }
        let prm = params(d);
        let mut lo = c.clone();
        let mut hi = c.clone();
        lo[j] -= 1e-8;
        hi[j] += 1e-8;
        let a = f(&Point::new(lo).unwrap(), prm).unwrap();
        let b = f(&Point::new(hi).unwrap(), prm).unwrap();
        prop_assert!(a.distance(&b) <= 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn same_tray_expansion((tray, u) in (2usize..=3).prop_flat_map(|d| tray_and_folded(d, 3.0)),
                           v in prop::collection::vec(-1.0f64..=1.0, 3), vh in 0.0f64..3.0) {
        let d = tray.dim();
        let mut v: Vec<f64> = v[..d - 1].to_vec();
        v.push(vh);
        let a = unfold(&Point::new(u).unwrap(), &tray);
        let b = unfold(&Point::new(v).unwrap(), &tray);
        prop_assume!(a != b);
        let prm = params(d);
        let ratio = f(&a, prm).unwrap().distance(&f(&b, prm).unwrap()) / a.distance(&b);
        prop_assert!(ratio >= prm.alpha_hat() * (1.0 - 1e-9), "ratio {ratio}");
    }

    #[test]
    fn branch_contraction((tray, u) in (2usize..=3).prop_flat_map(|d| tray_and_folded(d, 4.0))) {
        let d = tray.dim();
        let prm = params(d);
        let mut u = u;
        u[d - 1] += 1.0;
        let x = unfold(&Point::new(u).unwrap(), &tray);
        prop_assume!(smooth_margin(&x) >= 4e-5);
        let y = f(&x, prm).unwrap();
        prop_assert!(y.norm() >= prm.lambda() * (1.0 - 1e-12));
        let m = central_differences(|v| lambda_branch(&tray, v, prm), &y, 1e-5).unwrap();
        let (_, largest) = singular_range(&m);
        prop_assert!(largest <= 1.0 / prm.alpha_hat() * (1.0 + 1e-3), "{largest}");
    }

    #[test]
    fn jacobian_determinant_positive(x in (2usize..=4).prop_flat_map(|d| point(d, 5.0, -3.0..3.0))) {
        prop_assume!(smooth_margin(&x) >= 4e-5 && boundary_distance(&x) >= 4e-5);
        let j = jacobian_fd(&x, 1e-5).unwrap();
        prop_assert!(j.matrix.determinant() > 0.0);
    }

    #[test]
    fn box_counts_nest(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 100..400)) {
        let cloud: Vec<Point> = pts.into_iter().map(|(a, b)| Point::new(vec![a, b]).unwrap()).collect();
        let counts: Vec<usize> = dyadic_scales(0.5, 6).iter().map(|&e| occupied_boxes(&cloud, e)).collect();
        for w in counts.windows(2) {
            prop_assert!(w[0] <= w[1] && w[1] <= 4 * w[0], "{counts:?}");
        }
    }

    #[test]
    fn itinerary_json_round_trip(lat in prop::collection::vec(-5i64..=5, 1..6)) {
        // admissible word of 1-d symbols closed by a self-successor tray
        let mut sign: i8 = 1;
        let mut prefix = Vec::new();
        for r in lat {
            let t = TrayIndex::new(vec![r], sign).unwrap();
            sign = t.image_sign();
            prefix.push(t);
        }
        let last = if sign == 1 { TrayIndex::new(vec![0], 1) } else { TrayIndex::new(vec![0], -1) }.unwrap();
        let it = Itinerary::new(2, prefix, vec![last]).unwrap();
        prop_assert_eq!(Itinerary::from_json(&it.to_json()).unwrap(), it);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pullback_nesting(lat in prop::collection::vec(-3i64..=3, 1..5), depth in 1usize..10, t in 0.0f64..30.0) {
        let prm = params(2);
        let mut sign: i8 = 1;
        let mut prefix = Vec::new();
        for r in lat {
            let s = TrayIndex::new(vec![r], sign).unwrap();
            sign = s.image_sign();
            prefix.push(s);
        }
        let cycle = if sign == 1 { TrayIndex::central(2) } else { TrayIndex::new(vec![0], -1).unwrap() };
        let it = Itinerary::new(2, prefix, vec![cycle]).unwrap();
        let chain = pullback_chain(&it, depth, &anchor(&it, depth, t), prm).unwrap();
        for (j, p) in chain.iter().enumerate().take(depth) {
            // tray membership up to boundary ties
            let fr = fold(p);
            let ok = fr.tray == *it.symbol(j) || boundary_distance(p) <= 1e-9;
            prop_assert!(ok, "step {} at {} not in {}", j, p, it.symbol(j));
        }
        let hair = hair_trace(&it, depth, t.max(1.0), 5, prm).unwrap();
        prop_assert!(hair.samples.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn iterate_is_deterministic(x in point(2, 5.0, -3.0..3.0), n in 0usize..20) {
        let prm = params(2);
        let a = iterate(&x, n, prm, 300.0).unwrap();
        let b = iterate(&x, n, prm, 300.0).unwrap();
        prop_assert_eq!(a.points, b.points);
        prop_assert_eq!(a.status, b.status);
    }
}
