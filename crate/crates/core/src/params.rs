//! The natural, expectation and upper half-space charts of the model,
//! the maps between them and their Fisher information matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, domain, Error, Result};
use crate::model::{gap, DesignBasis, NaturalParam};

/// Expectation parameter `ξ = E[X | θ]`, a point of the interior of `𝒳`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationParam(DVector<f64>);

impl ExpectationParam {
    pub fn new(xi: DVector<f64>) -> Result<Self> {
        if xi.len() < 2 {
            return Err(Error::InvalidArgument(
                "expectation parameter needs p ≥ 1".into(),
            ));
        }
        let v = gap(&xi);
        if !(v > 0.0) || !v.is_finite() {
            return Err(domain(format!("V(ξ) = {v} must be positive")));
        }
        Ok(Self(xi))
    }

    pub fn from_slice(xi: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(xi))
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

    pub fn gap(&self) -> f64 {
        gap(&self.0)
    }
}

/// Upper half-space parameter `u = (BᵀAβ, σ√(2n))`, `u_{p+1} > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperHalfParam(DVector<f64>);

impl UpperHalfParam {
    pub fn new(u: DVector<f64>) -> Result<Self> {
        if u.len() < 2 {
            return Err(Error::InvalidArgument(
                "upper half-space point needs p ≥ 1".into(),
            ));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(domain("upper half-space point has non-finite entries"));
        }
        let h = u[u.len() - 1];
        if !(h > 0.0) {
            return Err(domain(format!("u_(p+1) = {h} must be positive")));
        }
        Ok(Self(u))
    }

    pub fn from_slice(u: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(u))
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

    /// `u_{p+1}`.
    pub fn height(&self) -> f64 {
        self.0[self.p()]
    }
}

/// Coordinate system tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    Natural,
    Expectation,
    UpperHalf,
}

/// A model point tagged with the chart it is expressed in. All three charts
/// live in `ℝ^{p+1}`, so the tag is what keeps them apart.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelPoint {
    Natural(NaturalParam),
    Expectation(ExpectationParam),
    UpperHalf(UpperHalfParam),
}

impl ModelPoint {
    pub fn chart(&self) -> Chart {
        match self {
            ModelPoint::Natural(_) => Chart::Natural,
            ModelPoint::Expectation(_) => Chart::Expectation,
            ModelPoint::UpperHalf(_) => Chart::UpperHalf,
        }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        match self {
            ModelPoint::Natural(t) => t.as_vector(),
            ModelPoint::Expectation(x) => x.as_vector(),
            ModelPoint::UpperHalf(u) => u.as_vector(),
        }
    }

    pub fn to_natural(&self, n: usize) -> NaturalParam {
        match self {
            ModelPoint::Natural(t) => t.clone(),
            ModelPoint::Expectation(x) => theta_from_xi(x, n),
            ModelPoint::UpperHalf(u) => theta_from_u(u, n),
        }
    }

    pub fn to_expectation(&self, n: usize) -> ExpectationParam {
        match self {
            ModelPoint::Natural(t) => xi_from_theta(t, n),
            ModelPoint::Expectation(x) => x.clone(),
            ModelPoint::UpperHalf(u) => xi_from_u(u),
        }
    }

    pub fn to_upper_half(&self, n: usize) -> UpperHalfParam {
        match self {
            ModelPoint::Natural(t) => u_from_theta(t, n),
            ModelPoint::Expectation(x) => u_from_xi(x),
            ModelPoint::UpperHalf(u) => u.clone(),
        }
    }
}

/// Re-expresses `point` in the chart `to`.
pub fn reparameterize(point: &ModelPoint, to: Chart, n: usize) -> ModelPoint {
    match to {
        Chart::Natural => ModelPoint::Natural(point.to_natural(n)),
        Chart::Expectation => ModelPoint::Expectation(point.to_expectation(n)),
        Chart::UpperHalf => ModelPoint::UpperHalf(point.to_upper_half(n)),
    }
}

pub fn xi_from_theta(theta: &NaturalParam, n: usize) -> ExpectationParam {
    let p = theta.p();
    let s = -2.0 * theta.last();
    let mut xi = DVector::zeros(p + 1);
    xi.rows_mut(0, p).copy_from(&(theta.linear() / s));
    xi[p] = (n as f64 + theta.linear().norm_squared() / s) / s;
    ExpectationParam(xi)
}

pub fn theta_from_xi(xi: &ExpectationParam, n: usize) -> NaturalParam {
    let p = xi.p();
    let scale = n as f64 / xi.gap();
    let mut theta = xi.as_vector() * scale;
    theta[p] = -0.5 * scale;
    NaturalParam::new(theta).expect("θ(ξ) has negative last coordinate")
}

pub fn xi_from_u(u: &UpperHalfParam) -> ExpectationParam {
    let p = u.p();
    let h = u.height();
    let mut xi = u.as_vector().clone();
    xi[p] = u.as_vector().rows(0, p).norm_squared() + h * h / 2.0;
    ExpectationParam(xi)
}

pub fn u_from_xi(xi: &ExpectationParam) -> UpperHalfParam {
    let p = xi.p();
    let mut u = xi.as_vector().clone();
    u[p] = (2.0 * xi.gap()).sqrt();
    UpperHalfParam(u)
}

pub fn u_from_theta(theta: &NaturalParam, n: usize) -> UpperHalfParam {
    let p = theta.p();
    let t = theta.last();
    let mut u = theta.as_vector() / (-2.0 * t);
    u[p] = (n as f64 / -t).sqrt();
    UpperHalfParam(u)
}

pub fn theta_from_u(u: &UpperHalfParam, n: usize) -> NaturalParam {
    let p = u.p();
    let h = u.height();
    let scale = 2.0 * n as f64 / (h * h);
    let mut theta = u.as_vector() * scale;
    theta[p] = -0.5 * scale;
    NaturalParam::new(theta).expect("θ(u) has negative last coordinate")
}

/// `u = (BᵀAβ, σ√(2n))`.
pub fn from_beta_sigma(
    basis: &DesignBasis,
    beta: &DVector<f64>,
    sigma: f64,
) -> Result<UpperHalfParam> {
    check_len(basis.p(), beta.len())?;
    if !(sigma > 0.0) {
        return Err(domain(format!("σ = {sigma} must be positive")));
    }
    let p = basis.p();
    let head = basis.basis().transpose() * (basis.design() * beta);
    let mut u = DVector::zeros(p + 1);
    u.rows_mut(0, p).copy_from(&head);
    u[p] = sigma * (2.0 * basis.n() as f64).sqrt();
    UpperHalfParam::new(u)
}

/// A Fisher information matrix in a known chart.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    matrix: DMatrix<f64>,
    chart: Chart,
}

impl FisherMatrix {
    /// Checks symmetry (to `1e-12` relative to the largest entry) and positive
    /// definiteness.
    pub fn new(matrix: DMatrix<f64>, chart: Chart) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument(
                "Fisher matrix must be square".into(),
            ));
        }
        let scale = matrix.abs().max().max(f64::MIN_POSITIVE);
        if (&matrix - matrix.transpose()).abs().max() > 1e-12 * scale {
            return Err(domain("Fisher matrix is not symmetric"));
        }
        if matrix.clone().cholesky().is_none() {
            return Err(domain("Fisher matrix is not positive definite"));
        }
        Ok(Self { matrix, chart })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.matrix
            .clone()
            .cholesky()
            .expect("positive definite by construction")
            .inverse()
    }
}

/// `g_U = 2n u_{p+1}⁻² I_{p+1}`.
pub fn fisher_upper_half(u: &UpperHalfParam, n: usize) -> FisherMatrix {
    let d = u.p() + 1;
    let h = u.height();
    let g = DMatrix::identity(d, d) * (2.0 * n as f64 / (h * h));
    FisherMatrix {
        matrix: g,
        chart: Chart::UpperHalf,
    }
}

/// The Hessian of `log Z` in block form.
pub fn fisher_natural(theta: &NaturalParam, n: usize) -> FisherMatrix {
    let p = theta.p();
    let t = theta.last();
    let lin = theta.linear();
    let mut g = DMatrix::zeros(p + 1, p + 1);
    for i in 0..p {
        g[(i, i)] = 1.0;
        g[(i, p)] = -lin[i] / t;
        g[(p, i)] = -lin[i] / t;
    }
    g[(p, p)] = -(n as f64) / t + lin.norm_squared() / (t * t);
    g /= -2.0 * t;
    FisherMatrix {
        matrix: g,
        chart: Chart::Natural,
    }
}

/// `g_Ξ(ξ) = g_Θ(θ(ξ))⁻¹`.
pub fn fisher_expectation(xi: &ExpectationParam, n: usize) -> FisherMatrix {
    let g = fisher_natural(&theta_from_xi(xi, n), n).inverse();
    // symmetrize away roundoff from the inverse
    let g = (&g + g.transpose()) * 0.5;
    FisherMatrix {
        matrix: g,
        chart: Chart::Expectation,
    }
}

/// `Jᵀ g J` for a map with Jacobian `J` into the chart of `g`.
pub fn pullback_metric(jacobian: &DMatrix<f64>, metric: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !metric.is_square() {
        return Err(Error::InvalidArgument("metric must be square".into()));
    }
    check_len(metric.nrows(), jacobian.nrows())?;
    let out = jacobian.transpose() * metric * jacobian;
    Ok((&out + out.transpose()) * 0.5)
}
