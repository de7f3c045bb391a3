use hypersmml_core::{
    affine_to_hyperbolic_plane, default_curvature_radius, exp_map, geodesic_point, horomap_uh,
    horomap_uh_inverse, horomap_xi, hyperbolic_distance, sectional_curvature_estimate, u_from_xi,
    AffineFunctional, ExpectationParam, HoromapDirection, UpperHalfParam,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn point(dim: usize) -> impl Strategy<Value = DVector<f64>> {
    (
        proptest::collection::vec(-3.0f64..3.0, dim - 1),
        0.1f64..5.0,
    )
        .prop_map(|(mut v, h)| {
            v.push(h);
            DVector::from_vec(v)
        })
}

fn pair() -> impl Strategy<Value = (UpperHalfParam, UpperHalfParam)> {
    (2usize..5)
        .prop_flat_map(|d| (point(d), point(d)))
        .prop_map(|(a, b)| {
            (
                UpperHalfParam::new(a).unwrap(),
                UpperHalfParam::new(b).unwrap(),
            )
        })
}

fn uh(v: DVector<f64>) -> UpperHalfParam {
    UpperHalfParam::new(v).unwrap()
}

/// √(2n) arcosh(1 + ‖u - w‖² / (2 h_u h_w)).
fn arcosh_distance(u: &UpperHalfParam, w: &UpperHalfParam, n: usize) -> f64 {
    let d2 = (u.as_vector() - w.as_vector()).norm_squared();
    (2.0 * n as f64).sqrt() * (1.0 + d2 / (2.0 * u.height() * w.height())).acosh()
}

fn xi_point(dim: usize) -> impl Strategy<Value = DVector<f64>> {
    (
        proptest::collection::vec(-2.0f64..2.0, dim - 1),
        0.05f64..4.0,
    )
        .prop_map(|(head, v)| {
            let top = head.iter().map(|a| a * a).sum::<f64>() + v;
            let mut x = head;
            x.push(top);
            DVector::from_vec(x)
        })
}

fn horo_u(x: &DVector<f64>) -> UpperHalfParam {
    u_from_xi(&horomap_xi(
        &ExpectationParam::new(x.clone()).unwrap(),
        HoromapDirection::Forward,
    ))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_matches_arcosh_form((u, w) in pair(), n in 1usize..20) {
        let d = hyperbolic_distance(&u, &w, n);
        let oracle = arcosh_distance(&u, &w, n);
        prop_assert!((d - oracle).abs() < 1e-9 * (1.0 + oracle));
        prop_assert!((d - hyperbolic_distance(&w, &u, n)).abs() < 1e-14 * (1.0 + d));
    }

    #[test]
    fn distance_isometries((u, w) in pair(), shift in -5.0f64..5.0, scale in 0.1f64..10.0, n in 1usize..10) {
        let d = hyperbolic_distance(&u, &w, n);
        let p = u.p();
        let moved = |v: &UpperHalfParam| {
            let mut out = v.as_vector() * scale;
            for k in 0..p {
                out[k] += shift;
            }
            uh(out)
        };
        let reflect = |v: &UpperHalfParam| {
            let mut out = v.as_vector().clone();
            out[0] = -out[0];
            uh(out)
        };
        prop_assert!((hyperbolic_distance(&moved(&u), &moved(&w), n) - d).abs() < 1e-9 * (1.0 + d));
        prop_assert!((hyperbolic_distance(&reflect(&u), &reflect(&w), n) - d).abs() < 1e-12 * (1.0 + d));
    }

    #[test]
    fn triangle_inequality((u, w) in pair(), z in point(4), n in 1usize..6) {
        let z = uh(z.rows(0, u.p() + 1).into_owned().map(|v| v.abs().max(0.1)));
        let lhs = hyperbolic_distance(&u, &w, n);
        prop_assert!(lhs <= hyperbolic_distance(&u, &z, n) + hyperbolic_distance(&z, &w, n) + 1e-9);
    }

    #[test]
    fn geodesic_points_split_distance((u, w) in pair(), t in 0.0f64..1.0) {
        prop_assume!((u.as_vector() - w.as_vector()).norm() > 1e-6);
        let g = geodesic_point(&u, &w, t).unwrap();
        let total = hyperbolic_distance(&u, &w, 1);
        prop_assert!((hyperbolic_distance(&u, &g, 1) - t * total).abs() < 1e-8 * (1.0 + total));
        prop_assert!((hyperbolic_distance(&g, &w, 1) - (1.0 - t) * total).abs() < 1e-8 * (1.0 + total));
    }

    #[test]
    fn shooting_agrees_with_closed_form_geodesic(u in point(3), v in proptest::collection::vec(-0.5f64..0.5, 3)) {
        let u = uh(u);
        let v = DVector::from_vec(v) * u.height();
        prop_assume!(v.norm() > 1e-3);
        let end = exp_map(&u, &v).unwrap();
        let half = exp_map(&u, &(&v * 0.5)).unwrap();
        let mid = geodesic_point(&u, &end, 0.5).unwrap();
        prop_assert!((half.as_vector() - mid.as_vector()).amax() < 1e-7 * u.height());
    }

    #[test]
    fn horomap_round_trips(u in point(3), x in xi_point(3)) {
        let u = uh(u);
        prop_assert!((horomap_uh_inverse(&horomap_uh(&u)).as_vector() - u.as_vector()).amax() < 1e-12 * u.as_vector().amax());
        let xi = ExpectationParam::new(x).unwrap();
        let back = horomap_xi(&horomap_xi(&xi, HoromapDirection::Forward), HoromapDirection::Inverse);
        prop_assert!((back.as_vector() - xi.as_vector()).amax() < 1e-12 * (1.0 + xi.as_vector().amax()));
        let via_u = hypersmml_core::xi_from_u(&horomap_uh(&u_from_xi(&xi)));
        let direct = horomap_xi(&xi, HoromapDirection::Forward);
        prop_assert!((via_u.as_vector() - direct.as_vector()).amax() < 1e-12 * (1.0 + xi.as_vector().amax()));
    }

    #[test]
    fn affine_segments_map_to_geodesics(a in xi_point(3), b in xi_point(3), n in 1usize..8) {
        let mid = (&a + &b) * 0.5;
        let (ua, ub, um) = (horo_u(&a), horo_u(&b), horo_u(&mid));
        let whole = hyperbolic_distance(&ua, &ub, n);
        let split = hyperbolic_distance(&ua, &um, n) + hyperbolic_distance(&um, &ub, n);
        prop_assert!((whole - split).abs() < 1e-8 * (1.0 + whole));
    }

    #[test]
    fn facet_points_land_on_their_plane(
        x in xi_point(3), dir in proptest::collection::vec(-1.0f64..1.0, 3), s in -1.0f64..1.0,
    ) {
        // the affine plane through x with normal `dir`, sampled at a second
        // point x + s·w with w ⟂ dir
        let a = DVector::from_vec(dir);
        prop_assume!(a.norm() > 0.1);
        let l = AffineFunctional::new(a.clone(), -a.dot(&x)).unwrap();
        let plane = affine_to_hyperbolic_plane(&l).unwrap();
        let helper = if a[0].abs() < 0.9 * a.norm() { DVector::from_vec(vec![1.0, 0.0, 0.0]) } else { DVector::from_vec(vec![0.0, 1.0, 0.0]) };
        let w = &helper - &a * (a.dot(&helper) / a.norm_squared());
        let y = &x + w * (0.1 * s);
        let gap = y[2] - y[0] * y[0] - y[1] * y[1];
        for pt in [x.clone(), y] {
            if pt == x || gap > 1e-6 {
                let u = horo_u(&pt);
                let scale = 1.0 + u.as_vector().amax();
                prop_assert!(plane.residual(u.as_vector()).abs() < 1e-8 * scale);
            }
        }
    }
}

#[test]
fn curvature_is_minus_one_over_two_n() {
    let base = uh(DVector::from_vec(vec![0.3, -0.2, 1.4]));
    let e = |i: usize| DVector::from_fn(3, |k, _| if k == i { 1.0 } else { 0.0 });
    for n in [1usize, 3] {
        let k = sectional_curvature_estimate(&base, &e(0), &e(2), default_curvature_radius(n), n)
            .unwrap();
        let expected = -1.0 / (2.0 * n as f64);
        assert!(((k - expected) / expected).abs() < 0.05, "n = {n}: {k}");
        let k = sectional_curvature_estimate(&base, &e(0), &e(1), default_curvature_radius(n), n)
            .unwrap();
        assert!(((k - expected) / expected).abs() < 0.05, "n = {n}: {k}");
    }
}
