use hypersmml_core::{
    adjacent_cells, assign_cell, cell_polytope, fit_smml, grid_partition, lambda_score,
    log_partition, log_pdf_suffstat, message_length, tessellation_hyperbolic, u_from_xi,
    update_weights_and_assertions, DataGrid, ExpectationParam, FitOptions, HalfStepKind,
    HyperbolicPlane, NaturalParam, SmmlCode, SuffStat, TruncatedDomain,
};
use nalgebra::DVector;
use proptest::prelude::*;

const N: usize = 4;

fn theta(v: &[f64]) -> NaturalParam {
    NaturalParam::from_slice(v).unwrap()
}

fn domain(res: usize) -> TruncatedDomain {
    TruncatedDomain::default_for(1, res).unwrap()
}

/// θ(ξ) = (n / V)(ξ_{1:p}, -1/2), written out independently of the library.
fn theta_of_centroid(c: &[f64], n: usize) -> Vec<f64> {
    let p = c.len() - 1;
    let v = c[p] - c[..p].iter().map(|a| a * a).sum::<f64>();
    let mut t: Vec<f64> = c[..p].iter().map(|a| n as f64 * a / v).collect();
    t.push(-(n as f64) / (2.0 * v));
    t
}

/// Brute-force Wallace conditions on the grid: returns
/// (points that would move, |Σq - 1|, max |θ_i - θ(centroid_i)|).
fn wallace_residuals(code: &SmmlCode, n: usize) -> (usize, f64, f64) {
    let grid = DataGrid::new(code.domain(), n).unwrap();
    let m = code.m();
    let mut moved = 0;
    let (_, labels) = grid_partition(code, n).unwrap();
    let mut mass = vec![0.0; m];
    let mut moment = vec![vec![0.0; grid.dim()]; m];
    for k in 0..grid.len() {
        let x = SuffStat::from_slice(grid.point(k)).unwrap();
        let scores: Vec<f64> = (0..m)
            .map(|i| lambda_score(&x, &code.assertions()[i], code.coding_probs()[i], n))
            .collect();
        let best = (0..m).fold(0, |b, i| if scores[i] < scores[b] { i } else { b });
        if best != labels[k] {
            moved += 1;
        }
        mass[best] += grid.weight(k);
        for (acc, v) in moment[best].iter_mut().zip(grid.point(k)) {
            *acc += grid.weight(k) * v;
        }
    }
    let sum_err = (code.coding_probs().iter().sum::<f64>() - 1.0).abs();
    let mut theta_err: f64 = 0.0;
    for i in 0..m {
        let c: Vec<f64> = moment[i].iter().map(|v| v / mass[i]).collect();
        let expected = theta_of_centroid(&c, n);
        for (a, b) in code.assertions()[i].as_vector().iter().zip(&expected) {
            theta_err = theta_err.max((a - b).abs() / b.abs().max(1.0));
        }
        let q_expected = mass[i] / grid.mass();
        theta_err = theta_err.max((code.coding_probs()[i] - q_expected).abs());
    }
    (moved, sum_err, theta_err)
}

#[test]
fn fitted_codes_are_fixed_points_and_nest() {
    let mut previous = f64::INFINITY;
    for m in 1..=3 {
        let report = fit_smml(&FitOptions::new(m, domain(64)), N).unwrap();
        let (moved, sum_err, theta_err) = wallace_residuals(&report.code, N);
        assert_eq!(moved, 0, "m = {m}");
        assert!(sum_err < 1e-9);
        assert!(theta_err < 1e-9, "m = {m}: {theta_err}");
        for trace in &report.restarts {
            if !trace.history.is_empty() {
                assert!(
                    trace.worst_increase() <= 1e-12,
                    "m = {m}: {}",
                    trace.worst_increase()
                );
            }
        }
        let value = report.code.message_length().unwrap();
        assert!(value <= previous + 1e-9, "m = {m}: {value} > {previous}");
        previous = value;
    }
}

#[test]
fn single_cell_assertion_is_domain_centroid() {
    let report = fit_smml(&FitOptions::new(1, domain(48)), N).unwrap();
    let grid = DataGrid::new(&domain(48), N).unwrap();
    let mut c = [0.0; 2];
    for k in 0..grid.len() {
        c[0] += grid.weight(k) * grid.point(k)[0];
        c[1] += grid.weight(k) * grid.point(k)[1];
    }
    let c: Vec<f64> = c.iter().map(|v| v / grid.mass()).collect();
    let expected = theta_of_centroid(&c, N);
    let got = report.code.assertions()[0].as_vector();
    assert!((got[0] - expected[0]).abs() < 1e-12);
    assert!((got[1] - expected[1]).abs() < 1e-12 * expected[1].abs());
    // symmetric box: the centroid sits on x₁ = 0
    assert!(got[0].abs() < 1e-12);

    // m = 1: I₁ is the expected negative log-likelihood
    let mut nll = 0.0;
    for k in 0..grid.len() {
        let x = SuffStat::from_slice(grid.point(k)).unwrap();
        nll -= grid.weight(k) * log_pdf_suffstat(&x, &report.code.assertions()[0], N).unwrap();
    }
    nll /= grid.mass();
    assert!((nll - report.code.message_length().unwrap()).abs() < 1e-10);
}

#[test]
fn centroid_update_never_increases_message_length() {
    for t in [[0.5, -1.0], [-1.0, -3.0], [0.0, -0.2]] {
        let code = SmmlCode::new(vec![theta(&t)], vec![1.0], domain(32)).unwrap();
        let before = message_length(&code, N).unwrap();
        let after = update_weights_and_assertions(&code, N)
            .unwrap()
            .message_length()
            .unwrap();
        assert!(after <= before + 1e-12);
    }
}

#[test]
fn grid_refinement_self_convergence() {
    let coarse = fit_smml(&FitOptions::new(2, domain(64)), N).unwrap().code;
    let i64 = coarse.message_length().unwrap();
    let fine = SmmlCode::new(
        coarse.assertions().to_vec(),
        coarse.coding_probs().to_vec(),
        domain(128),
    )
    .unwrap();
    let i128 = message_length(&fine, N).unwrap();
    assert!(((i64 - i128) / i128).abs() < 5e-3, "{i64} vs {i128}");
}

#[test]
fn symmetric_start_stays_symmetric() {
    let mut code = SmmlCode::new(
        vec![theta(&[-0.7, -1.2]), theta(&[0.7, -1.2])],
        vec![0.5, 0.5],
        domain(40),
    )
    .unwrap();
    for _ in 0..5 {
        code = update_weights_and_assertions(&code, N).unwrap();
        let (a, b) = (
            code.assertions()[0].as_vector(),
            code.assertions()[1].as_vector(),
        );
        assert!((a[0] + b[0]).abs() < 1e-10);
        assert!((a[1] - b[1]).abs() < 1e-10 * a[1].abs());
        assert!((code.coding_probs()[0] - code.coding_probs()[1]).abs() < 1e-10);
    }
    // the only boundary is x₁ = 0, which becomes the vertical plane u₁ = 0
    let facet = &cell_polytope(&code, 0, N).facets[0];
    assert!(facet.a[1].abs() < 1e-9 * facet.a[0].abs() && facet.b.abs() < 1e-9);
    let tess = tessellation_hyperbolic(&code, N);
    match &tess.cells[0].planes[0].1 {
        HyperbolicPlane::Vertical { normal, offset } => {
            assert!(normal[1] == 0.0 && offset.abs() < 1e-9 * normal[0].abs());
        }
        other => panic!("expected a vertical plane, got {other:?}"),
    }
}

#[test]
fn sphere_facet_coefficients() {
    let code = SmmlCode::new(
        vec![theta(&[0.0, -0.5]), theta(&[0.0, -2.0])],
        vec![0.5, 0.5],
        domain(16),
    )
    .unwrap();
    let facet = &cell_polytope(&code, 0, N).facets[0];
    let tess = tessellation_hyperbolic(&code, N);
    let (a1, a2, b) = (facet.a[0], facet.a[1], facet.b);
    let c1 = -a1 / (2.0 * a2);
    let r2 = -b / a2 + c1 * c1;
    match &tess.cells[0].planes[0].1 {
        HyperbolicPlane::Sphere { center, radius } => {
            assert!((center[0] - c1).abs() < 1e-14 && center[1] == 0.0);
            assert!((radius * radius - r2).abs() < 1e-12 * r2);
        }
        other => panic!("expected a sphere, got {other:?}"),
    }
}

fn three_cell_code() -> SmmlCode {
    SmmlCode::new(
        vec![
            theta(&[-1.0, -1.5]),
            theta(&[0.8, -0.8]),
            theta(&[0.1, -3.0]),
        ],
        vec![0.3, 0.5, 0.2],
        domain(48),
    )
    .unwrap()
}

#[test]
fn grid_cells_match_polytope_membership() {
    let code = three_cell_code();
    let (grid, labels) = grid_partition(&code, N).unwrap();
    let polys: Vec<_> = (0..3).map(|i| cell_polytope(&code, i, N)).collect();
    for k in 0..grid.len() {
        let x = grid.point(k);
        assert!(polys[labels[k]].contains(x, 1e-9));
        // strictly inside a lower-indexed polytope would contradict the tie-break
        for i in 0..labels[k] {
            assert!(!polys[i].contains(x, -1e-9));
        }
    }
}

#[test]
fn affine_cells_are_convex() {
    let code = three_cell_code();
    let (grid, labels) = grid_partition(&code, N).unwrap();
    let mut state = 12345u64;
    let mut next = |bound: usize| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((state >> 33) as usize) % bound
    };
    let mut checked = 0;
    while checked < 2000 {
        let (k1, k2) = (next(grid.len()), next(grid.len()));
        if labels[k1] != labels[k2] {
            continue;
        }
        let mid: Vec<f64> = grid
            .point(k1)
            .iter()
            .zip(grid.point(k2))
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let x = SuffStat::from_slice(&mid).unwrap();
        assert_eq!(assign_cell(&x, &code, N), labels[k1]);
        checked += 1;
    }
}

#[test]
fn hyperbolic_planes_separate_cell_images() {
    let code = three_cell_code();
    let (grid, labels) = grid_partition(&code, N).unwrap();
    let tess = tessellation_hyperbolic(&code, N);
    let polys: Vec<_> = (0..3).map(|i| cell_polytope(&code, i, N)).collect();
    for k in (0..grid.len()).step_by(7) {
        let i = labels[k];
        let xi = ExpectationParam::from_slice(grid.point(k)).unwrap();
        let image = hypersmml_core::horomap_xi(&xi, hypersmml_core::HoromapDirection::Forward);
        let u = u_from_xi(&image);
        for (j, plane) in &tess.cells[i].planes {
            let facet = polys[i].facets.iter().find(|f| f.neighbor == *j).unwrap();
            let affine = facet.a.dot(&DVector::from_column_slice(grid.point(k))) + facet.b;
            if affine.abs() < 1e-9 {
                continue;
            }
            let side = plane.residual(u.as_vector());
            // the sign convention of the plane depends on its variant; what
            // matters is that it agrees with the affine side everywhere
            let reference = match plane {
                HyperbolicPlane::Sphere { .. } => facet.a[1].signum(),
                HyperbolicPlane::Vertical { .. } => 1.0,
            };
            assert!(side * reference <= 1e-12, "cell {i}, facet {j}: {side}");
        }
    }
}

#[test]
fn adjacency_is_symmetric_and_nonempty() {
    let code = three_cell_code();
    let pairs = adjacent_cells(&code, N).unwrap();
    assert!(!pairs.is_empty());
    assert!(pairs.iter().all(|(i, j)| i < j));
}

#[test]
fn fit_is_deterministic_and_respects_options() {
    let mut opts = FitOptions::new(2, domain(32));
    opts.seed = 7;
    opts.restarts = 3;
    let a = fit_smml(&opts, N).unwrap();
    let b = fit_smml(&opts, N).unwrap();
    assert_eq!(a.code, b.code);
    assert_eq!(a.restarts.len(), 3);
    for t in &a.restarts {
        let reseeds = t
            .history
            .iter()
            .filter(|s| s.kind == HalfStepKind::Reseed)
            .count();
        assert_eq!(reseeds, t.reseeds);
    }
    assert!(fit_smml(
        &FitOptions {
            m: 0,
            ..opts.clone()
        },
        N
    )
    .is_err());
    assert!(fit_smml(
        &FitOptions {
            restarts: 0,
            ..opts
        },
        N
    )
    .is_err());
}

#[test]
fn message_length_requires_positive_mass() {
    let code = SmmlCode::new(vec![theta(&[0.0, -1.0])], vec![1.0], domain(8)).unwrap();
    assert!(message_length(&code, N).is_ok());
    assert!(fit_smml(&FitOptions::new(1, domain(8)), 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn argmin_lambda_is_argmax_posterior_weight(
        x1 in -2.0f64..2.0, v in 0.05f64..5.0,
        t in proptest::collection::vec((-2.0f64..2.0, -3.0f64..-0.05, 0.05f64..1.0), 2..5),
        n in 2usize..9,
    ) {
        let x = SuffStat::from_slice(&[x1, x1 * x1 + v]).unwrap();
        let thetas: Vec<_> = t.iter().map(|(a, b, _)| theta(&[*a, *b])).collect();
        let total: f64 = t.iter().map(|(_, _, q)| q).sum();
        let qs: Vec<f64> = t.iter().map(|(_, _, q)| q / total).collect();
        let lambdas: Vec<f64> = (0..t.len()).map(|i| lambda_score(&x, &thetas[i], qs[i], n)).collect();
        let posts: Vec<f64> = (0..t.len())
            .map(|i| qs[i].ln() + log_pdf_suffstat(&x, &thetas[i], n).unwrap())
            .collect();
        // λ_i + log q_i + log p(x|θ_i) is the same log h(x) for every i
        for i in 1..t.len() {
            let d0 = lambdas[0] + posts[0];
            let di = lambdas[i] + posts[i];
            prop_assert!((d0 - di).abs() < 1e-9 * (1.0 + d0.abs()));
        }
        let code = SmmlCode::new(thetas.clone(), qs.clone(), domain(4)).unwrap();
        let cell = assign_cell(&x, &code, n);
        prop_assert!(lambdas.iter().all(|l| lambdas[cell] <= *l));
        prop_assert!((0..cell).all(|i| lambdas[i] > lambdas[cell]));
    }

    #[test]
    fn raising_a_weight_only_grows_its_cell(boost in 1.01f64..3.0, which in 0usize..3) {
        let base = three_cell_code();
        let mut qs = base.coding_probs().to_vec();
        qs[which] *= boost;
        let total: f64 = qs.iter().sum();
        qs.iter_mut().for_each(|q| *q /= total);
        let raised = SmmlCode::new(base.assertions().to_vec(), qs, TruncatedDomain::default_for(1, 24).unwrap()).unwrap();
        let base = SmmlCode::new(base.assertions().to_vec(), base.coding_probs().to_vec(), TruncatedDomain::default_for(1, 24).unwrap()).unwrap();
        let (_, before) = grid_partition(&base, N).unwrap();
        let (_, after) = grid_partition(&raised, N).unwrap();
        for (b, a) in before.iter().zip(&after) {
            if *b == which {
                prop_assert_eq!(*a, which);
            }
        }
    }

    #[test]
    fn lambda_shifts_by_log_two_when_q_halves(x1 in -3.0f64..3.0, v in 0.1f64..4.0, t1 in -2.0f64..2.0, t2 in -4.0f64..-0.1, q in 0.01f64..1.0) {
        let x = SuffStat::from_slice(&[x1, x1 * x1 + v]).unwrap();
        let th = theta(&[t1, t2]);
        let diff = lambda_score(&x, &th, q / 2.0, N) - lambda_score(&x, &th, q, N);
        prop_assert!((diff - std::f64::consts::LN_2).abs() < 1e-12);
        let manual = -q.ln() - (x1 * t1 + (x1 * x1 + v) * t2) + log_partition(&th, N);
        prop_assert!((lambda_score(&x, &th, q, N) - manual).abs() < 1e-12 * (1.0 + manual.abs()));
    }
}
