//! The scaled hyperbolic space `2n·H^{p+1}` in upper half-space
//! coordinates.
//!
//! The Fisher metric is `2n/u_{p+1}² · I`, i.e. the unit-curvature
//! half-space metric multiplied by `2n`. Geodesics are therefore the usual
//! vertical lines and boundary-orthogonal semicircles, distances pick up a
//! factor `√(2n)` and sectional curvatures are `-1/(2n)`.
//!
//! The horomap `η` pushes every point away from the boundary point `∞` along
//! its vertical geodesic by `log √2` (unit-curvature units), i.e. by
//! `√(2n) log √2` in the Fisher metric. In the expectation chart it carries
//! affine hyperplanes to hyperbolic hyperplanes.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::DVector;

use crate::error::{check_len, Error, Result};
use crate::params::{u_from_xi, xi_from_u, ExpectationParam, UpperHalfParam};

/// Points sampled on a geodesic circle.
const CIRCLE_POINTS: usize = 720;
/// RK4 steps used by [`exp_map`].
const SHOOTING_STEPS: usize = 128;

/// Geodesic distance in the Fisher metric,
/// `√(2n) arcosh(1 + ‖u-w‖² / (2 u_{p+1} w_{p+1}))`.
///
/// Evaluated as `2 asinh(‖u-w‖ / (2√(u_{p+1} w_{p+1})))`, which is the same
/// function without the cancellation of `arcosh` near `1`.
pub fn hyperbolic_distance(u: &UpperHalfParam, w: &UpperHalfParam, n: usize) -> f64 {
    assert_eq!(u.p(), w.p(), "points live in different dimensions");
    let chord = (u.as_vector() - w.as_vector()).norm();
    let s = chord / (2.0 * (u.height() * w.height()).sqrt());
    (2.0 * n as f64).sqrt() * 2.0 * s.asinh()
}

/// The point at arclength fraction `t` along the geodesic from `u` to `w`.
pub fn geodesic_point(u: &UpperHalfParam, w: &UpperHalfParam, t: f64) -> Result<UpperHalfParam> {
    check_len(u.p(), w.p())?;
    if u == w {
        return Err(Error::DegenerateGeodesic);
    }
    let p = u.p();
    let (a, b) = (u.height(), w.height());
    let shift = w.as_vector().rows(0, p) - u.as_vector().rows(0, p);
    let span = shift.norm();
    let mut out = u.as_vector().clone();
    if span == 0.0 {
        out[p] = a * (t * (b / a).ln()).exp();
        return UpperHalfParam::new(out);
    }
    // Work in the vertical plane through u and w: horizontal coordinate s
    // along `shift`, semicircle centred at s = c with radius R.
    let c = (span * span + b * b - a * a) / (2.0 * span);
    let radius = (c * c + a * a).sqrt();
    // On the circle (s - c)/y = sinh τ with τ the unit-curvature arclength.
    let tau_u = ((0.0 - c) / a).asinh();
    let tau_w = ((span - c) / b).asinh();
    let tau = tau_u + t * (tau_w - tau_u);
    let s = c + radius * tau.tanh();
    let y = radius / tau.cosh();
    out.rows_mut(0, p).axpy(s / span, &shift, 1.0);
    out[p] = y;
    UpperHalfParam::new(out)
}

/// `η(u) = (u_{1:p}, u_{p+1}/√2)`.
pub fn horomap_uh(u: &UpperHalfParam) -> UpperHalfParam {
    let mut v = u.as_vector().clone();
    v[u.p()] *= FRAC_1_SQRT_2;
    UpperHalfParam::new(v).expect("height stays positive")
}

/// `η⁻¹(u) = (u_{1:p}, √2 u_{p+1})`.
pub fn horomap_uh_inverse(u: &UpperHalfParam) -> UpperHalfParam {
    let mut v = u.as_vector().clone();
    v[u.p()] *= SQRT_2;
    UpperHalfParam::new(v).expect("height stays positive")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoromapDirection {
    Forward,
    Inverse,
}

/// The horomap in the expectation chart: forward
/// `(ξ_{1:p}, ξ_{p+1} - V(ξ)/2)`, inverse `(ξ_{1:p}, ξ_{p+1} + V(ξ))`.
pub fn horomap_xi(xi: &ExpectationParam, direction: HoromapDirection) -> ExpectationParam {
    let p = xi.p();
    let v = xi.gap();
    let mut out = xi.as_vector().clone();
    out[p] += match direction {
        HoromapDirection::Forward => -v / 2.0,
        HoromapDirection::Inverse => v,
    };
    ExpectationParam::new(out).expect("horomap preserves the interior")
}

/// The affine function `ξ ↦ a·ξ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFunctional {
    pub a: DVector<f64>,
    pub b: f64,
}

impl AffineFunctional {
    pub fn new(a: DVector<f64>, b: f64) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidArgument(
                "affine functional needs p ≥ 1".into(),
            ));
        }
        if a.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument(
                "affine functional has zero linear part".into(),
            ));
        }
        Ok(Self { a, b })
    }

    pub fn eval(&self, xi: &DVector<f64>) -> f64 {
        self.a.dot(xi) + self.b
    }
}

/// A hyperbolic hyperplane of the upper half-space model.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperbolicPlane {
    /// `{‖u - c‖ = R}` with `c_{p+1} = 0`.
    Sphere { center: DVector<f64>, radius: f64 },
    /// `{c·u = d}` with `c_{p+1} = 0`.
    Vertical { normal: DVector<f64>, offset: f64 },
}

impl HyperbolicPlane {
    /// `‖u - c‖ - R` or `c·u - d`; zero exactly on the plane.
    pub fn residual(&self, u: &DVector<f64>) -> f64 {
        match self {
            HyperbolicPlane::Sphere { center, radius } => (u - center).norm() - radius,
            HyperbolicPlane::Vertical { normal, offset } => normal.dot(u) - offset,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            HyperbolicPlane::Sphere { .. } => "sphere",
            HyperbolicPlane::Vertical { .. } => "vertical",
        }
    }
}

/// Converts the zero set of an affine functional on `Ξ` into the hyperbolic
/// plane `{u : L(ξ(η⁻¹(u))) = 0}`, i.e. the image of that zero set under the
/// horomap written in upper half-space coordinates.
///
/// `a_{p+1}` counts as zero when it is below `1e-12 ‖a‖`; the resulting
/// vertical plane is then off by at most that relative amount.
pub fn affine_to_hyperbolic_plane(functional: &AffineFunctional) -> Result<HyperbolicPlane> {
    let a = &functional.a;
    let p = a.len() - 1;
    let last = a[p];
    let head = a.rows(0, p);
    if last.abs() <= 1e-12 * a.norm() {
        let mut normal = DVector::zeros(p + 1);
        normal.rows_mut(0, p).copy_from(&head);
        return Ok(HyperbolicPlane::Vertical {
            normal,
            offset: -functional.b,
        });
    }
    let mut center = DVector::zeros(p + 1);
    center.rows_mut(0, p).copy_from(&(head / (-2.0 * last)));
    let r_squared = -functional.b / last + center.norm_squared();
    if !(r_squared > 0.0) {
        return Err(Error::EmptyPlane { r_squared });
    }
    Ok(HyperbolicPlane::Sphere {
        center,
        radius: r_squared.sqrt(),
    })
}

/// `exp_u(v)`: follows the geodesic with initial coordinate velocity `v` for
/// unit time (RK4 on the geodesic equation). The Fisher length of the
/// resulting segment is `√(2n) ‖v‖ / u_{p+1}`.
pub fn exp_map(u: &UpperHalfParam, v: &DVector<f64>) -> Result<UpperHalfParam> {
    check_len(u.p() + 1, v.len())?;
    let d = v.len();
    let last = d - 1;
    // Christoffel symbols of a conformal metric y⁻²δ (any constant factor).
    let accel = |x: &DVector<f64>, w: &DVector<f64>| -> DVector<f64> {
        let y = x[last];
        let mut a = w * (2.0 * w[last] / y);
        a[last] -= w.norm_squared() / y;
        a
    };
    let h = 1.0 / SHOOTING_STEPS as f64;
    let mut x = u.as_vector().clone();
    let mut w = v.clone();
    for _ in 0..SHOOTING_STEPS {
        let k1x = w.clone();
        let k1w = accel(&x, &w);
        let x2 = &x + &k1x * (h / 2.0);
        let w2 = &w + &k1w * (h / 2.0);
        let k2w = accel(&x2, &w2);
        let x3 = &x + &w2 * (h / 2.0);
        let w3 = &w + &k2w * (h / 2.0);
        let k3w = accel(&x3, &w3);
        let x4 = &x + &w3 * h;
        let w4 = &w + &k3w * h;
        let k4w = accel(&x4, &w4);
        x += (k1x + &w2 * 2.0 + &w3 * 2.0 + &w4) * (h / 6.0);
        w += (k1w + k2w * 2.0 + k3w * 2.0 + k4w) * (h / 6.0);
    }
    UpperHalfParam::new(x)
}

/// Radius used when no other is given: `√(2n)·r = 0.05`.
pub fn default_curvature_radius(n: usize) -> f64 {
    0.05 / (2.0 * n as f64).sqrt()
}

/// Estimates the sectional curvature of the plane `span(e1, e2)` at `u`
/// from the circumference of a geodesic circle of Fisher radius `r`:
/// `C(r) = 2πr (1 - K r²/6 + O(r⁴))`.
///
/// The circle is sampled at 720 points by geodesic shooting and its
/// circumference taken as the sum of geodesic chords, rescaled by the
/// inscribed-polygon factor `(π/N)/sin(π/N)`.
pub fn sectional_curvature_estimate(
    u: &UpperHalfParam,
    e1: &DVector<f64>,
    e2: &DVector<f64>,
    r: f64,
    n: usize,
) -> Result<f64> {
    let d = u.p() + 1;
    check_len(d, e1.len())?;
    check_len(d, e2.len())?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius {r} must be positive"
        )));
    }
    // g ∝ I at u, so Euclidean Gram–Schmidt gives a g-orthogonal frame.
    let metric_scale = (2.0 * n as f64).sqrt() / u.height();
    let norm1 = e1.norm();
    if norm1 == 0.0 {
        return Err(Error::InvalidArgument(
            "tangent directions are linearly dependent".into(),
        ));
    }
    let f1 = e1 / norm1;
    let rest = e2 - &f1 * f1.dot(e2);
    if rest.norm() <= 1e-12 * e2.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(
            "tangent directions are linearly dependent".into(),
        ));
    }
    let f2 = &rest / rest.norm();
    let step = r / metric_scale;

    let points = (0..CIRCLE_POINTS)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / CIRCLE_POINTS as f64;
            let v = (&f1 * phi.cos() + &f2 * phi.sin()) * step;
            exp_map(u, &v)
        })
        .collect::<Result<Vec<_>>>()?;
    let chord_sum: f64 = (0..CIRCLE_POINTS)
        .map(|k| hyperbolic_distance(&points[k], &points[(k + 1) % CIRCLE_POINTS], n))
        .sum();
    let half_angle = PI / CIRCLE_POINTS as f64;
    let circumference = chord_sum * half_angle / half_angle.sin();
    let curvature = 6.0 * (1.0 - circumference / (2.0 * PI * r)) / (r * r);
    // For constant curvature the next term is K²r⁴/120 against Kr²/6.
    let ratio = curvature.abs() * r * r / 20.0;
    if ratio > 0.1 {
        return Err(Error::RadiusTooLarge { ratio });
    }
    Ok(curvature)
}

/// `√det g_Ξ(ξ) = n^{(p+1)/2} 2^{-1/2} V(ξ)^{-(p+2)/2}`: the Riemannian
/// volume density (improper Jeffreys prior) of the expectation chart.
pub fn hyperbolic_volume_density(xi: &ExpectationParam, n: usize) -> f64 {
    let p = xi.p() as f64;
    let log = 0.5 * (p + 1.0) * (n as f64).ln()
        - 0.5 * std::f64::consts::LN_2
        - 0.5 * (p + 2.0) * xi.gap().ln();
    log.exp()
}

/// Horomap in the upper half-space written through the expectation chart;
/// `η_Ξ = ξ ∘ η_U ∘ u`.
pub fn horomap_xi_via_u(xi: &ExpectationParam) -> ExpectationParam {
    xi_from_u(&horomap_uh(&u_from_xi(xi)))
}
