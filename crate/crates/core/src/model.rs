//! The linear regression model in canonical exponential-family form.
//!
//! With `B` an orthonormal basis of `col A`, the sufficient statistic is
//! `T(y) = (Bᵀy, ‖y‖²)` and the natural parameter is
//! `θ = σ⁻² (BᵀAβ, -1/2)`. The data space is the solid paraboloid
//! `{x : x_{p+1} ≥ x_1² + … + x_p²}`; the residual gap
//! `V(x) = x_{p+1} - ‖x_{1:p}‖²` is the squared norm of the component of
//! `y` orthogonal to `col A`.
//!
//! `T` depends on the choice of `B` only through an orthogonal change of the
//! first `p` coordinates of `x`. [`orthonormal_basis`] fixes
//! `B = A (AᵀA)^{-1/2}` so that results are reproducible.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, DVectorView, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{check_len, domain, Error, Result};
use crate::special::ln_gamma_half;

/// Smallest admissible eigenvalue of `AᵀA` relative to the largest.
const RANK_TOLERANCE: f64 = 1e-10;

/// A design matrix together with its orthonormal column basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBasis {
    design: DMatrix<f64>,
    basis: DMatrix<f64>,
}

impl DesignBasis {
    pub fn new(design: DMatrix<f64>) -> Result<Self> {
        let basis = orthonormal_basis(&design)?;
        Ok(Self { design, basis })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Sample size.
    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    /// Number of covariates.
    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    /// A unit vector orthogonal to `col A`, or `None` when `p = n`.
    ///
    /// Completes `B` by Gram–Schmidt against the standard basis, taking the
    /// coordinate axis with the largest residual (lowest index on ties).
    pub fn complement_vector(&self) -> Option<DVector<f64>> {
        let (n, p) = (self.n(), self.p());
        if p >= n {
            return None;
        }
        let b = &self.basis;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n {
            // ‖e_k - BBᵀe_k‖² = 1 - ‖row k of B‖²
            let residual = 1.0 - b.row(k).norm_squared();
            if best.is_none_or(|(_, r)| residual > r + 1e-14) {
                best = Some((k, residual));
            }
        }
        let (k, _) = best?;
        let mut v = -(b * b.row(k).transpose());
        v[k] += 1.0;
        let norm = v.norm();
        Some(v / norm)
    }
}

/// `B = A (AᵀA)^{-1/2}`, with the inverse square root taken through the
/// symmetric eigendecomposition of `AᵀA`.
pub fn orthonormal_basis(design: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = design.shape();
    if p == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "design matrix must be non-empty".into(),
        ));
    }
    if p > n {
        return Err(Error::InvalidArgument(format!(
            "design has more columns ({p}) than rows ({n})"
        )));
    }
    if design.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "design matrix has non-finite entries".into(),
        ));
    }
    let gram = design.transpose() * design;
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= RANK_TOLERANCE * max {
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(Error::RankDeficient { condition });
    }
    let inv_sqrt = DVector::from_iterator(p, eig.eigenvalues.iter().map(|l| l.sqrt().recip()));
    let v = &eig.eigenvectors;
    let root = v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose();
    Ok(design * root)
}

/// A point of the data space `𝒳 ⊂ ℝ^{p+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStat(DVector<f64>);

impl SuffStat {
    pub fn new(x: DVector<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InvalidArgument(
                "sufficient statistic needs p ≥ 1".into(),
            ));
        }
        Ok(Self(x))
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(x))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn p(&self) -> usize {
        self.0.len() - 1
    }

    /// The residual gap `V(x)`.
    pub fn gap(&self) -> f64 {
        gap(&self.0)
    }
}

/// `x_{p+1} - x_1² - … - x_p²` for any `(p+1)`-vector.
pub fn gap(x: &DVector<f64>) -> f64 {
    let p = x.len() - 1;
    x[p] - x.rows(0, p).norm_squared()
}

/// The natural parameter `θ`, with `θ_{p+1} < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParam(DVector<f64>);

impl NaturalParam {
    pub fn new(theta: DVector<f64>) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::InvalidArgument(
                "natural parameter needs p ≥ 1".into(),
            ));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(domain("natural parameter has non-finite entries"));
        }
        let last = theta[theta.len() - 1];
        if last >= 0.0 {
            return Err(domain(format!("θ_(p+1) = {last} must be negative")));
        }
        Ok(Self(theta))
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(theta))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn p(&self) -> usize {
        self.0.len() - 1
    }

    /// `θ_{1:p}`.
    pub fn linear(&self) -> DVectorView<'_, f64> {
        self.0.rows(0, self.p())
    }

    /// `θ_{p+1}`.
    pub fn last(&self) -> f64 {
        self.0[self.p()]
    }

    /// The error variance `σ² = -1/(2θ_{p+1})`.
    pub fn variance(&self) -> f64 {
        -0.5 / self.last()
    }

    /// The mean of `Bᵀy`, i.e. `BᵀAβ = σ² θ_{1:p}`.
    pub fn projected_mean(&self) -> DVector<f64> {
        self.linear() * self.variance()
    }
}

/// Where a point sits relative to the paraboloid boundary of `𝒳`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataRegion {
    Interior,
    Boundary,
    Outside,
}

/// Classifies `x` with the relative tolerance `τ = 1e-10 (1 + |x_{p+1}|)`.
pub fn classify_data_point(x: &DVector<f64>) -> DataRegion {
    let p = x.len() - 1;
    let v = gap(x);
    let tau = 1e-10 * (1.0 + x[p].abs());
    if v > tau {
        DataRegion::Interior
    } else if v >= -tau {
        DataRegion::Boundary
    } else {
        DataRegion::Outside
    }
}

/// `T(y) = (Bᵀy, ‖y‖²)`.
pub fn suff_stat(basis: &DesignBasis, y: &DVector<f64>) -> Result<SuffStat> {
    check_len(basis.n(), y.len())?;
    let p = basis.p();
    let head = basis.basis().transpose() * y;
    let mut x = DVector::zeros(p + 1);
    x.rows_mut(0, p).copy_from(&head);
    // ‖y‖² ≥ ‖Bᵀy‖² exactly; only roundoff can make the gap negative.
    x[p] = y.norm_squared().max(head.norm_squared());
    Ok(SuffStat(x))
}

/// `log Z(θ) = -(n/2) log(-2θ_{p+1}) - ‖θ_{1:p}‖²/(4θ_{p+1})`.
pub fn log_partition(theta: &NaturalParam, n: usize) -> f64 {
    let t = theta.last();
    -(n as f64 / 2.0) * (-2.0 * t).ln() - theta.linear().norm_squared() / (4.0 * t)
}

/// Log density of `Y ~ N_n(Aβ, σ²I)` at `y`.
pub fn log_pdf_y(
    basis: &DesignBasis,
    beta: &DVector<f64>,
    sigma: f64,
    y: &DVector<f64>,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain(format!("σ = {sigma} must be positive")));
    }
    check_len(basis.p(), beta.len())?;
    check_len(basis.n(), y.len())?;
    let n = basis.n() as f64;
    let resid = y - basis.design() * beta;
    let var = sigma * sigma;
    Ok(-(n / 2.0) * (2.0 * PI * var).ln() - resid.norm_squared() / (2.0 * var))
}

/// `log c_h = -( (n/2) log 2 + (p/2) log π + log Γ((n-p)/2) )`.
pub(crate) fn log_base_constant(n: usize, p: usize) -> f64 {
    -((n as f64 / 2.0) * std::f64::consts::LN_2 + (p as f64 / 2.0) * PI.ln() + ln_gamma_half(n - p))
}

/// `log h_X` as a function of the residual gap. Requires `p < n`.
pub(crate) fn log_base_measure(gap: f64, n: usize, p: usize) -> f64 {
    let exponent = (n as f64 - p as f64 - 2.0) / 2.0;
    let c = log_base_constant(n, p);
    if exponent == 0.0 {
        c
    } else {
        c + exponent * gap.ln()
    }
}

/// Log density of the sufficient statistic `X = T(Y)` given `θ`.
pub fn log_pdf_suffstat(x: &SuffStat, theta: &NaturalParam, n: usize) -> Result<f64> {
    let p = theta.p();
    check_len(p + 1, x.as_vector().len())?;
    if p >= n {
        return Err(Error::Unsupported(format!(
            "p = {p} ≥ n = {n}: X has no density on ℝ^(p+1)"
        )));
    }
    let v = x.gap();
    let constant_base = n - p == 2;
    if v < 0.0 || (v == 0.0 && !constant_base) {
        return Err(domain(format!("residual gap V(x) = {v} must be positive")));
    }
    let dot = theta.as_vector().dot(x.as_vector());
    Ok(dot + log_base_measure(v, n, p) - log_partition(theta, n))
}

/// Draws `count` sufficient statistics under `θ`.
///
/// `x_{1:p} ~ N_p(σ²θ_{1:p}, σ²I)` and `x_{p+1} = ‖x_{1:p}‖² + σ²Q` with
/// `Q ~ χ²(n-p)` independent. Deterministic given `seed`.
pub fn sample_suffstat(
    theta: &NaturalParam,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<SuffStat>> {
    let p = theta.p();
    if p >= n {
        return Err(Error::Unsupported(format!(
            "sampling X requires p < n (p = {p}, n = {n})"
        )));
    }
    let var = theta.variance();
    let sd = var.sqrt();
    let mean = theta.projected_mean();
    let chi = ChiSquared::new((n - p) as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = (0..count)
        .map(|_| {
            let mut x = DVector::zeros(p + 1);
            for i in 0..p {
                let z: f64 = StandardNormal.sample(&mut rng);
                x[i] = mean[i] + sd * z;
            }
            let q = chi.sample(&mut rng);
            x[p] = x.rows(0, p).norm_squared() + var * q;
            SuffStat(x)
        })
        .collect();
    Ok(out)
}

/// A data vector `y` with `T(y) = x`: `y = B x_{1:p} + √V(x) v` where `v` is
/// [`DesignBasis::complement_vector`].
pub fn lift_to_data(basis: &DesignBasis, x: &SuffStat) -> Result<DVector<f64>> {
    let p = basis.p();
    check_len(p + 1, x.as_vector().len())?;
    let mut v = x.gap();
    match classify_data_point(x.as_vector()) {
        DataRegion::Outside => {
            return Err(domain(format!("x lies outside the data space (V = {v})")));
        }
        DataRegion::Boundary => v = 0.0,
        DataRegion::Interior => {}
    }
    let head = basis.basis() * x.as_vector().rows(0, p);
    if v == 0.0 {
        return Ok(head);
    }
    let normal = basis.complement_vector().ok_or_else(|| {
        Error::Unsupported("p = n: only boundary points of 𝒳 can be lifted".into())
    })?;
    Ok(head + normal * v.sqrt())
}
