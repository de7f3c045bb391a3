use hypersmml_core::{
    classify_data_point, lift_to_data, log_pdf_suffstat, log_pdf_y, sample_suffstat, suff_stat,
    xi_from_theta, DataRegion, DesignBasis, NaturalParam, SuffStat,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// ∫∫ p_X over 𝒳 for p = 1 in coordinates (x₁, s) with V = s².
fn total_probability(theta: &NaturalParam, n: usize) -> f64 {
    let sigma2 = theta.variance();
    let sigma = sigma2.sqrt();
    let mean = sigma2 * theta.as_vector()[0];
    let dof = (n - 1) as f64;
    let s_max = sigma * (dof + 20.0 * (2.0 * dof).sqrt() + 40.0).sqrt();
    let (nx, ns) = (600, 1200);
    let (x_lo, x_hi) = (mean - 12.0 * sigma, mean + 12.0 * sigma);
    let (dx, ds) = ((x_hi - x_lo) / nx as f64, s_max / ns as f64);
    let mut total = 0.0;
    for i in 0..nx {
        let x1 = x_lo + (i as f64 + 0.5) * dx;
        for j in 0..ns {
            let s = (j as f64 + 0.5) * ds;
            let x = SuffStat::from_slice(&[x1, x1 * x1 + s * s]).unwrap();
            total += log_pdf_suffstat(&x, theta, n).unwrap().exp() * 2.0 * s;
        }
    }
    total * dx * ds
}

#[test]
fn density_integrates_to_one() {
    for (n, t) in [(3, [0.4, -0.7]), (4, [-1.0, -2.0]), (8, [0.0, -0.3])] {
        let theta = NaturalParam::from_slice(&t).unwrap();
        let total = total_probability(&theta, n);
        assert!((total - 1.0).abs() < 1e-3, "n = {n}: {total}");
    }
}

#[test]
fn sampled_gap_is_scaled_chi_squared() {
    for (n, t) in [(3usize, [0.4, -0.7]), (6, [2.0, -0.2])] {
        let theta = NaturalParam::from_slice(&t).unwrap();
        let draws = sample_suffstat(&theta, n, 10_000, 5).unwrap();
        let chi = ChiSquared::new((n - 1) as f64).unwrap();
        let mut scaled: Vec<f64> = draws.iter().map(|x| x.gap() / theta.variance()).collect();
        scaled.sort_by(f64::total_cmp);
        let count = scaled.len() as f64;
        let ks = scaled
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let f = chi.cdf(*v);
                (f - i as f64 / count)
                    .abs()
                    .max(((i + 1) as f64 / count - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic
        assert!(ks < 1.6276 / count.sqrt(), "n = {n}: D = {ks}");
    }
}

#[test]
fn sample_mean_is_expectation_parameter() {
    let (n, theta) = (5, NaturalParam::from_slice(&[0.5, -1.0, -0.8]).unwrap());
    let draws = sample_suffstat(&theta, n, 40_000, 11).unwrap();
    let xi = xi_from_theta(&theta, n);
    let count = draws.len() as f64;
    for k in 0..3 {
        let values: Vec<f64> = draws.iter().map(|x| x.as_vector()[k]).collect();
        let mean = values.iter().sum::<f64>() / count;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        assert!(
            (mean - xi.as_vector()[k]).abs() < 4.0 * (var / count).sqrt(),
            "coordinate {k}"
        );
    }
}

#[test]
fn sampling_is_seeded() {
    let theta = NaturalParam::from_slice(&[0.1, -1.0]).unwrap();
    let a = sample_suffstat(&theta, 4, 50, 3).unwrap();
    assert_eq!(a, sample_suffstat(&theta, 4, 50, 3).unwrap());
    assert_ne!(a, sample_suffstat(&theta, 4, 50, 4).unwrap());
    assert!(a
        .iter()
        .all(|x| classify_data_point(x.as_vector()) == DataRegion::Interior));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifted_data_reproduces_statistic(
        y in proptest::collection::vec(-3.0f64..3.0, 5),
        slope in -2.0f64..2.0,
    ) {
        let design = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 * slope.abs().max(0.1) });
        let basis = DesignBasis::new(design).unwrap();
        let y = DVector::from_vec(y);
        let x = suff_stat(&basis, &y).unwrap();
        let lifted = lift_to_data(&basis, &x).unwrap();
        let again = suff_stat(&basis, &lifted).unwrap();
        prop_assert!((again.as_vector() - x.as_vector()).amax() < 1e-9 * (1.0 + x.as_vector().amax()));
    }

    #[test]
    fn likelihood_ratios_agree_between_data_and_statistic(
        y in proptest::collection::vec(-3.0f64..3.0, 4),
        b1 in -2.0f64..2.0, b2 in -2.0f64..2.0, s1 in 0.3f64..3.0, s2 in 0.3f64..3.0,
    ) {
        // p(y | β, σ) and p_X(T(y) | θ) differ by a factor free of the parameters
        let basis = DesignBasis::new(DMatrix::from_element(4, 1, 1.0)).unwrap();
        let y = DVector::from_vec(y);
        let x = suff_stat(&basis, &y).unwrap();
        let theta_of = |b: f64, s: f64| {
            // θ = σ⁻²(Bᵀ A β, -1/2) with Bᵀ A = √n for a column of ones
            NaturalParam::from_slice(&[2.0 * b / (s * s), -0.5 / (s * s)]).unwrap()
        };
        let dy = log_pdf_y(&basis, &DVector::from_vec(vec![b1]), s1, &y).unwrap()
            - log_pdf_y(&basis, &DVector::from_vec(vec![b2]), s2, &y).unwrap();
        let dx = log_pdf_suffstat(&x, &theta_of(b1, s1), 4).unwrap()
            - log_pdf_suffstat(&x, &theta_of(b2, s2), 4).unwrap();
        prop_assert!((dy - dx).abs() < 1e-9 * (1.0 + dy.abs()));
    }
}
