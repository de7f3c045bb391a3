use hypersmml_core::{
    reparameterize, theta_from_u, theta_from_xi, u_from_theta, u_from_xi, xi_from_theta, xi_from_u,
    Chart, ExpectationParam, ModelPoint, NaturalParam, UpperHalfParam,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn natural() -> impl Strategy<Value = (NaturalParam, usize)> {
    (1usize..5, 1usize..12).prop_flat_map(|(p, n)| {
        (proptest::collection::vec(-3.0f64..3.0, p), -5.0f64..-0.05).prop_map(move |(lin, last)| {
            let mut v = lin;
            v.push(last);
            (NaturalParam::from_slice(&v).unwrap(), n)
        })
    })
}

fn close(a: &DVector<f64>, b: &DVector<f64>, rel: f64) -> bool {
    (a - b).amax() <= rel * (1.0 + b.amax())
}

/// log Z = -(n/2) log(-2t) - ‖θ_{1:p}‖² / (4t).
fn log_z(theta: &[f64], n: usize) -> f64 {
    let p = theta.len() - 1;
    let t = theta[p];
    let s: f64 = theta[..p].iter().map(|a| a * a).sum();
    -(n as f64) / 2.0 * (-2.0 * t).ln() - s / (4.0 * t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn round_trips((theta, n) in natural()) {
        let xi = xi_from_theta(&theta, n);
        prop_assert!(close(theta_from_xi(&xi, n).as_vector(), theta.as_vector(), 1e-12));
        let u = u_from_theta(&theta, n);
        prop_assert!(close(theta_from_u(&u, n).as_vector(), theta.as_vector(), 1e-12));
        prop_assert!(close(u_from_xi(&xi).as_vector(), u.as_vector(), 1e-12));
        prop_assert!(close(xi_from_u(&u).as_vector(), xi.as_vector(), 1e-12));
    }

    #[test]
    fn reparameterize_commutes((theta, n) in natural()) {
        let start = ModelPoint::Natural(theta.clone());
        for (a, b) in [(Chart::Expectation, Chart::UpperHalf), (Chart::UpperHalf, Chart::Expectation)] {
            let via = reparameterize(&reparameterize(&start, a, n), b, n);
            let direct = reparameterize(&start, b, n);
            prop_assert_eq!(via.chart(), b);
            prop_assert!(close(via.as_vector(), direct.as_vector(), 1e-12));
        }
        let back = reparameterize(&reparameterize(&start, Chart::UpperHalf, n), Chart::Natural, n);
        prop_assert!(close(back.as_vector(), theta.as_vector(), 1e-12));
    }

    #[test]
    fn expectation_is_gradient_of_log_partition((theta, n) in natural()) {
        let xi = xi_from_theta(&theta, n);
        let t = theta.as_vector().as_slice().to_vec();
        for k in 0..t.len() {
            let h = 1e-5 * t[k].abs().max(1e-2);
            let (mut plus, mut minus) = (t.clone(), t.clone());
            plus[k] += h;
            minus[k] -= h;
            let grad = (log_z(&plus, n) - log_z(&minus, n)) / (2.0 * h);
            prop_assert!((grad - xi.as_vector()[k]).abs() <= 1e-6 * (1.0 + grad.abs()));
        }
    }

    #[test]
    fn expectation_lies_above_parabola((theta, n) in natural()) {
        let xi = xi_from_theta(&theta, n);
        // V(ξ(θ)) = n / (-2t)
        prop_assert!((xi.gap() - n as f64 / (-2.0 * theta.last())).abs() <= 1e-12 * xi.gap().max(1.0) * 10.0);
    }
}

#[test]
fn chart_examples() {
    let u = u_from_theta(&NaturalParam::from_slice(&[0.0, -0.5]).unwrap(), 2);
    assert!((u.as_vector() - DVector::from_vec(vec![0.0, 2.0])).amax() < 1e-15);
    let xi = xi_from_u(&UpperHalfParam::from_slice(&[1.0, 2.0]).unwrap());
    assert_eq!(xi.as_vector(), &DVector::from_vec(vec![1.0, 3.0]));
    assert!(ExpectationParam::from_slice(&[1.0, 1.0]).is_err());
    assert!(UpperHalfParam::from_slice(&[1.0, 0.0]).is_err());
    assert!(NaturalParam::from_slice(&[1.0, 0.0]).is_err());
}
