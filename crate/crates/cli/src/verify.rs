//! The invariant suite behind `hypersmml verify`.
//!
//! Every check compares a library result against an independent numerical
//! reference (finite differences, quadrature, Monte Carlo or a closed form
//! written out separately) and records the worst case over a set of random
//! model points.

use hypersmml_core::{
    affine_to_hyperbolic_plane, default_curvature_radius, density_ratio_constant,
    fisher_expectation, fisher_natural, fisher_upper_half, horomap_uh, horomap_uh_inverse,
    horomap_xi, hyperbolic_distance, hyperbolic_volume_density, jeffreys_prior_natural,
    log_partition, log_pdf_suffstat, marginal_density, pullback_metric, sample_suffstat,
    sectional_curvature_estimate, theta_from_u, theta_from_xi, u_from_theta, u_from_xi,
    xi_from_theta, xi_from_u, AffineFunctional, ExpectationParam, HoromapDirection, NaturalParam,
    SuffStat, UpperHalfParam,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_random_points")]
    pub random_points: usize,
    /// Replaces every per-check tolerance when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn default_mc_samples() -> usize {
    20_000
}

fn default_random_points() -> usize {
    5
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n: 4,
            p: 1,
            seed: 0,
            mc_samples: default_mc_samples(),
            random_points: default_random_points(),
            tolerance: None,
        }
    }
}

impl VerifyConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: VerifyConfig =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("bad verify config: {e}")))?;
        if cfg.n == 0 || cfg.p == 0 {
            return Err(CliError::Usage(
                "verify config needs n ≥ 1 and p ≥ 1".into(),
            ));
        }
        if cfg.random_points == 0 || cfg.mc_samples < 2 {
            return Err(CliError::Usage(
                "verify config needs random_points ≥ 1 and mc_samples ≥ 2".into(),
            ));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    /// Reference value at the worst case.
    pub expected: Option<f64>,
    /// Library value at the worst case.
    pub observed: Option<f64>,
    /// The error measure compared with `tolerance`.
    pub error: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: VerifyConfig,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Worst case seen so far: error measure with the values behind it.
#[derive(Debug, Clone, Copy)]
struct Worst {
    error: f64,
    expected: f64,
    observed: f64,
}

impl Worst {
    fn new() -> Self {
        Worst {
            error: f64::NEG_INFINITY,
            expected: f64::NAN,
            observed: f64::NAN,
        }
    }

    fn update(&mut self, expected: f64, observed: f64, error: f64) {
        // NaN errors must surface as failures
        if error.is_nan() || error > self.error {
            self.error = if error.is_nan() { f64::INFINITY } else { error };
            self.expected = expected;
            self.observed = observed;
        }
    }

    fn relative(&mut self, expected: f64, observed: f64, scale: f64) {
        self.update(expected, observed, (observed - expected).abs() / scale);
    }
}

struct Suite {
    cfg: VerifyConfig,
    rng: ChaCha8Rng,
    checks: Vec<CheckRecord>,
}

impl Suite {
    fn record(
        &mut self,
        name: &str,
        tolerance: f64,
        detail: String,
        outcome: Result<Worst, String>,
    ) {
        let tolerance = self.cfg.tolerance.unwrap_or(tolerance);
        let record = match outcome {
            Ok(w) => {
                let pass = w.error <= tolerance;
                CheckRecord {
                    name: name.into(),
                    status: if pass { Status::Pass } else { Status::Fail },
                    expected: Some(w.expected),
                    observed: Some(w.observed),
                    error: Some(w.error),
                    tolerance: Some(tolerance),
                    pass: Some(pass),
                    detail,
                }
            }
            Err(msg) => CheckRecord {
                name: name.into(),
                status: Status::Fail,
                expected: None,
                observed: None,
                error: None,
                tolerance: Some(tolerance),
                pass: Some(false),
                detail: format!("{detail}; error: {msg}"),
            },
        };
        self.checks.push(record);
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.checks.push(CheckRecord {
            name: name.into(),
            status: Status::Skipped,
            expected: None,
            observed: None,
            error: None,
            tolerance: None,
            pass: None,
            detail: why.into(),
        });
    }

    fn natural(&mut self) -> NaturalParam {
        let p = self.cfg.p;
        let mut v: Vec<f64> = (0..p).map(|_| self.rng.random_range(-2.0..2.0)).collect();
        v.push(-self.rng.random_range(0.2..3.0));
        NaturalParam::from_slice(&v).expect("negative last coordinate")
    }

    fn upper_half(&mut self) -> UpperHalfParam {
        let p = self.cfg.p;
        let mut v: Vec<f64> = (0..p).map(|_| self.rng.random_range(-2.0..2.0)).collect();
        v.push(self.rng.random_range(0.3..4.0));
        UpperHalfParam::from_slice(&v).expect("positive height")
    }

    fn expectation(&mut self) -> ExpectationParam {
        let p = self.cfg.p;
        let head: Vec<f64> = (0..p).map(|_| self.rng.random_range(-2.0..2.0)).collect();
        let gap = self.rng.random_range(0.05..4.0);
        let mut v = head.clone();
        v.push(head.iter().map(|a| a * a).sum::<f64>() + gap);
        ExpectationParam::from_slice(&v).expect("above the parabola")
    }
}

fn fd_hessian(
    f: &dyn Fn(&DVector<f64>) -> f64,
    x: &DVector<f64>,
    h: &DVector<f64>,
) -> DMatrix<f64> {
    let d = x.len();
    let mut out = DMatrix::zeros(d, d);
    let at = |i: usize, si: f64, j: usize, sj: f64| {
        let mut y = x.clone();
        y[i] += si * h[i];
        y[j] += sj * h[j];
        f(&y)
    };
    let f0 = f(x);
    for i in 0..d {
        for j in i..d {
            let v = if i == j {
                (at(i, 1.0, i, 0.0) - 2.0 * f0 + at(i, -1.0, i, 0.0)) / (h[i] * h[i])
            } else {
                (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0)
                    + at(i, -1.0, j, -1.0))
                    / (4.0 * h[i] * h[j])
            };
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Central differences at steps `h` and `h/2` combined by Richardson
/// extrapolation; a plain step small enough for 1e-6 would drown in
/// roundoff.
fn richardson_hessian(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DMatrix<f64> {
    let h = x.map(|v| 1e-3 * v.abs().max(0.1));
    let coarse = fd_hessian(f, x, &h);
    let fine = fd_hessian(f, x, &(&h * 0.5));
    (fine * 4.0 - coarse) / 3.0
}

fn jacobian(f: &dyn Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>) -> DMatrix<f64> {
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, x.len());
    for k in 0..x.len() {
        let h = 1e-5 * x[k].abs().max(1.0);
        let (mut a, mut b) = (x.clone(), x.clone());
        a[k] += h;
        b[k] -= h;
        j.set_column(k, &((f(&a) - f(&b)) / (2.0 * h)));
    }
    j
}

fn compare_matrices(worst: &mut Worst, reference: &DMatrix<f64>, observed: &DMatrix<f64>) {
    let scale = reference.amax();
    for (r, o) in reference.iter().zip(observed.iter()) {
        worst.relative(*r, *o, scale);
    }
}

fn check_fisher(s: &mut Suite) {
    let n = s.cfg.n;
    let mut hess = Worst::new();
    let mut via_theta = Worst::new();
    let mut via_xi = Worst::new();
    for _ in 0..s.cfg.random_points {
        let theta = s.natural();
        let fd = richardson_hessian(
            &|v| log_partition(&NaturalParam::new(v.clone()).expect("stays in Θ"), n),
            theta.as_vector(),
        );
        compare_matrices(&mut hess, &fd, fisher_natural(&theta, n).matrix());

        let u = s.upper_half();
        let g_u = fisher_upper_half(&u, n);
        let j = jacobian(
            &|v| theta_from_u(&UpperHalfParam::new(v.clone()).expect("h > 0"), n).into_vector(),
            u.as_vector(),
        );
        let pulled = pullback_metric(&j, fisher_natural(&theta_from_u(&u, n), n).matrix())
            .expect("shapes agree");
        compare_matrices(&mut via_theta, g_u.matrix(), &pulled);
        let j = jacobian(
            &|v| xi_from_u(&UpperHalfParam::new(v.clone()).expect("h > 0")).into_vector(),
            u.as_vector(),
        );
        let pulled = pullback_metric(&j, fisher_expectation(&xi_from_u(&u), n).matrix())
            .expect("shapes agree");
        compare_matrices(&mut via_xi, g_u.matrix(), &pulled);
    }
    s.record(
        "fisher_natural_hessian",
        1e-6,
        "Richardson finite-difference Hessian of log Z against the block formula".into(),
        Ok(hess),
    );
    s.record(
        "fisher_pullback_natural",
        1e-6,
        "Jᵀ g_Θ J through θ(u) against 2n/h² I".into(),
        Ok(via_theta),
    );
    s.record(
        "fisher_pullback_expectation",
        1e-6,
        "Jᵀ g_Ξ J through ξ(u) against 2n/h² I".into(),
        Ok(via_xi),
    );
}

fn check_round_trips(s: &mut Suite) {
    let n = s.cfg.n;
    let mut worst = Worst::new();
    for _ in 0..s.cfg.random_points {
        let theta = s.natural();
        let t = theta.as_vector();
        let scale = 1.0 + t.amax();
        let back = theta_from_xi(&xi_from_theta(&theta, n), n);
        let again = theta_from_u(&u_from_theta(&theta, n), n);
        let across = theta_from_xi(&xi_from_u(&u_from_theta(&theta, n)), n);
        for other in [back, again, across] {
            for (a, b) in t.iter().zip(other.as_vector().iter()) {
                worst.relative(*a, *b, scale);
            }
        }
    }
    s.record(
        "chart_round_trip",
        1e-10,
        "θ → ξ → θ, θ → u → θ and θ → u → ξ → θ".into(),
        Ok(worst),
    );
}

fn check_monte_carlo_fisher(s: &mut Suite) {
    let n = s.cfg.n;
    let count = s.cfg.mc_samples;
    let mut worst = Worst::new();
    for _ in 0..s.cfg.random_points {
        let u = s.upper_half();
        let theta = theta_from_u(&u, n);
        let seed = s.rng.random::<u64>();
        let draws = match sample_suffstat(&theta, n, count, seed) {
            Ok(d) => d,
            Err(e) => {
                return s.record("fisher_monte_carlo", 1.0, String::new(), Err(e.to_string()))
            }
        };
        let d = u.p() + 1;
        let mut sum = DMatrix::zeros(d, d);
        let mut sq = DMatrix::zeros(d, d);
        let step = DVector::from_element(d, 1e-3 * u.height());
        for x in &draws {
            let loglik = |v: &DVector<f64>| {
                let t = theta_from_u(&UpperHalfParam::new(v.clone()).expect("h > 0"), n);
                log_pdf_suffstat(x, &t, n).expect("interior sample")
            };
            let h = -fd_hessian(&loglik, u.as_vector(), &step);
            sq += h.component_mul(&h);
            sum += h;
        }
        let mean = &sum / count as f64;
        let target = fisher_upper_half(&u, n);
        let scale = target.matrix().amax();
        for i in 0..d {
            for j in i..d {
                let var = (sq[(i, j)] / count as f64 - mean[(i, j)].powi(2)).max(0.0);
                let se = (var / count as f64).sqrt();
                let diff = (mean[(i, j)] - target.matrix()[(i, j)]).abs();
                worst.update(
                    target.matrix()[(i, j)],
                    mean[(i, j)],
                    diff / (3.0 * se + 1e-6 * scale),
                );
            }
        }
    }
    s.record(
        "fisher_monte_carlo",
        1.0,
        format!("-E[Hess ℓ] over {count} draws per point; error is |Δ| / (3 SE + 1e-6 max g)"),
        Ok(worst),
    );
}

/// ∫∫ p_X over 𝒳 for p = 1, in coordinates (x₁, s) with V = s².
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
            let x = SuffStat::from_slice(&[x1, x1 * x1 + s * s]).expect("finite");
            total += log_pdf_suffstat(&x, theta, n)
                .map(f64::exp)
                .unwrap_or(f64::NAN)
                * 2.0
                * s;
        }
    }
    total * dx * ds
}

fn check_density(s: &mut Suite) {
    let n = s.cfg.n;
    if s.cfg.p == 1 {
        let mut worst = Worst::new();
        for _ in 0..s.cfg.random_points.min(3) {
            let theta = s.natural();
            worst.relative(1.0, total_probability(&theta, n), 1.0);
        }
        s.record(
            "density_normalization",
            1e-3,
            "midpoint quadrature of p_X over 𝒳".into(),
            Ok(worst),
        );
    } else {
        s.skip(
            "density_normalization",
            "quadrature checks run for p = 1 only",
        );
    }

    let theta = s.natural();
    let count = s.cfg.mc_samples;
    let seed = s.rng.random::<u64>();
    let outcome = sample_suffstat(&theta, n, count, seed)
        .map_err(|e| e.to_string())
        .map(|draws| {
            let chi = ChiSquared::new((n - s.cfg.p) as f64).expect("positive degrees of freedom");
            let mut scaled: Vec<f64> = draws.iter().map(|x| x.gap() / theta.variance()).collect();
            scaled.sort_by(f64::total_cmp);
            let total = scaled.len() as f64;
            let d = scaled
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let f = chi.cdf(*v);
                    (f - i as f64 / total)
                        .abs()
                        .max(((i + 1) as f64 / total - f).abs())
                })
                .fold(0.0, f64::max);
            let critical = 1.6276 / total.sqrt();
            Worst {
                error: d / critical,
                expected: critical,
                observed: d,
            }
        });
    s.record(
        "sampler_ks",
        1.0,
        format!("KS statistic of V/σ² against χ²({}) over {count} draws, relative to the 1% critical value", n - s.cfg.p),
        outcome,
    );
}

fn check_curvature(s: &mut Suite) {
    let n = s.cfg.n;
    let d = s.cfg.p + 1;
    let e = |i: usize| DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 });
    let mut planes = vec![(0, d - 1)];
    if d > 2 {
        planes.push((0, 1));
    }
    let expected = -1.0 / (2.0 * n as f64);
    let mut worst = Worst::new();
    let mut failure = None;
    for _ in 0..s.cfg.random_points.min(3) {
        let u = s.upper_half();
        for &(a, b) in &planes {
            match sectional_curvature_estimate(&u, &e(a), &e(b), default_curvature_radius(n), n) {
                Ok(k) => worst.relative(expected, k, expected.abs()),
                Err(err) => failure = Some(err.to_string()),
            }
        }
    }
    let outcome = match failure {
        Some(msg) => Err(msg),
        None => Ok(worst),
    };
    s.record(
        "sectional_curvature",
        0.05,
        "geodesic-circle estimate against -1/(2n)".into(),
        outcome,
    );
}

/// ∫ π_Θ p_X(x|θ) dθ for p = 1 with t = -eˢ and θ₁ = -2t x₁ + √(-2t) z.
fn marginal_by_quadrature(x: &SuffStat, n: usize) -> f64 {
    let v = x.gap();
    let (s_lo, s_hi) = (-30.0, (80.0 / v).ln());
    let (ns, nz) = (3000, 400);
    let (ds, dz) = ((s_hi - s_lo) / ns as f64, 20.0 / nz as f64);
    let mut total = 0.0;
    for i in 0..ns {
        let s = s_lo + (i as f64 + 0.5) * ds;
        let t = -s.exp();
        let width = (-2.0 * t).sqrt();
        for j in 0..nz {
            let z = -10.0 + (j as f64 + 0.5) * dz;
            let theta = NaturalParam::from_slice(&[-2.0 * t * x.as_vector()[0] + width * z, t])
                .expect("t < 0");
            let density = log_pdf_suffstat(x, &theta, n)
                .map(f64::exp)
                .unwrap_or(f64::NAN);
            total += jeffreys_prior_natural(&theta, n) * density * width * (-t);
        }
    }
    total * ds * dz
}

fn check_marginal(s: &mut Suite) {
    let n = s.cfg.n;
    if s.cfg.p == 1 {
        let mut worst = Worst::new();
        for _ in 0..s.cfg.random_points.min(3) {
            let xi = s.expectation();
            let x = SuffStat::new(xi.into_vector()).expect("finite");
            let closed = marginal_density(&x, n).expect("p < n");
            worst.relative(marginal_by_quadrature(&x, n), closed, closed);
        }
        s.record(
            "marginal_quadrature",
            1e-3,
            "closed-form r(x) against quadrature of π_Θ p_X over Θ".into(),
            Ok(worst),
        );
    } else {
        s.skip(
            "marginal_quadrature",
            "quadrature checks run for p = 1 only",
        );
    }

    let constant = density_ratio_constant(n, s.cfg.p).expect("p < n");
    let mut worst = Worst::new();
    for _ in 0..s.cfg.random_points.max(100) {
        let xi = s.expectation();
        let ratio = hyperbolic_volume_density(&xi, n)
            / marginal_density(&SuffStat::new(xi.into_vector()).expect("finite"), n)
                .expect("p < n");
        worst.relative(constant, ratio, constant);
    }
    s.record(
        "volume_marginal_ratio",
        1e-10,
        "π_Ξ / r against its closed-form constant".into(),
        Ok(worst),
    );
}

fn horo_u(x: &DVector<f64>) -> UpperHalfParam {
    u_from_xi(&horomap_xi(
        &ExpectationParam::new(x.clone()).expect("interior"),
        HoromapDirection::Forward,
    ))
}

fn check_horomap(s: &mut Suite) {
    let n = s.cfg.n;
    let segments = s.cfg.random_points.max(1000);

    let mut additivity = Worst::new();
    for _ in 0..segments {
        let (a, b) = (s.expectation().into_vector(), s.expectation().into_vector());
        let mid = (&a + &b) * 0.5;
        let (ua, ub, um) = (horo_u(&a), horo_u(&b), horo_u(&mid));
        let whole = hyperbolic_distance(&ua, &ub, n);
        let split = hyperbolic_distance(&ua, &um, n) + hyperbolic_distance(&um, &ub, n);
        additivity.relative(whole, split, 1.0 + whole);
    }
    s.record(
        "horomap_geodesic_additivity",
        1e-8,
        format!("affine midpoints of {segments} segments map onto geodesics"),
        Ok(additivity),
    );

    let mut membership = Worst::new();
    let mut failure = None;
    for _ in 0..segments {
        let x = s.expectation().into_vector();
        let d = x.len();
        let a = DVector::from_fn(d, |_, _| s.rng.random_range(-1.0..1.0));
        if a.norm() < 0.1 {
            continue;
        }
        let plane = match AffineFunctional::new(a.clone(), -a.dot(&x))
            .and_then(|l| affine_to_hyperbolic_plane(&l))
        {
            Ok(p) => p,
            Err(e) => {
                failure = Some(e.to_string());
                continue;
            }
        };
        let u = horo_u(&x);
        let residual = plane.residual(u.as_vector());
        membership.update(0.0, residual, residual.abs() / (1.0 + u.as_vector().amax()));
    }
    let outcome = match failure {
        Some(msg) => Err(msg),
        None => Ok(membership),
    };
    s.record(
        "horomap_plane_membership",
        1e-8,
        "η-images of points on affine facets lie on the converted plane".into(),
        outcome,
    );

    let mut identity = Worst::new();
    for _ in 0..s.cfg.random_points.max(100) {
        let u = s.upper_half();
        let back = horomap_uh(&horomap_uh_inverse(&u));
        let scale = 1.0 + u.as_vector().amax();
        for (a, b) in u.as_vector().iter().zip(back.as_vector().iter()) {
            identity.relative(*a, *b, scale);
        }
        let xi = s.expectation();
        let back = horomap_xi(
            &horomap_xi(&xi, HoromapDirection::Inverse),
            HoromapDirection::Forward,
        );
        let scale = 1.0 + xi.as_vector().amax();
        for (a, b) in xi.as_vector().iter().zip(back.as_vector().iter()) {
            identity.relative(*a, *b, scale);
        }
    }
    s.record(
        "horomap_inverse",
        1e-12,
        "η ∘ η⁻¹ in both charts".into(),
        Ok(identity),
    );
}

/// Runs every check allowed by the configuration.
pub fn run(cfg: &VerifyConfig) -> Report {
    let mut s = Suite {
        cfg: cfg.clone(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        checks: Vec::new(),
    };
    check_fisher(&mut s);
    check_round_trips(&mut s);
    check_curvature(&mut s);
    check_horomap(&mut s);
    if cfg.p < cfg.n {
        check_monte_carlo_fisher(&mut s);
        check_density(&mut s);
        check_marginal(&mut s);
    } else {
        let why = format!("requires p < n (p = {}, n = {})", cfg.p, cfg.n);
        for name in [
            "fisher_monte_carlo",
            "density_normalization",
            "sampler_ks",
            "marginal_quadrature",
            "volume_marginal_ratio",
        ] {
            s.skip(name, &why);
        }
    }
    let count = |st: Status| s.checks.iter().filter(|c| c.status == st).count();
    let summary = Summary {
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        skipped: count(Status::Skipped),
    };
    Report {
        config: cfg.clone(),
        checks: s.checks,
        summary,
    }
}
