//! Truncated domains in upper half-space coordinates and the midpoint
//! quadrature grid used for every integral against the marginal density.
//!
//! The marginal `r(x)` is improper on `𝒳`, so all integrals are taken over
//! the image `ξ(box)` of a compact box of `u`-coordinates. The substitution
//! `x = ξ(u)` has Jacobian determinant `u_{p+1}` and on the image
//! `V(x) = u_{p+1}²/2`, so the integrand is smooth and bounded in `u`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::prior::log_marginal_from_gap;

/// A box `lower ≤ u ≤ upper` of upper half-space coordinates with the number
/// of midpoint cells per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDomain {
    lower: DVector<f64>,
    upper: DVector<f64>,
    resolution: usize,
}

impl TruncatedDomain {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>, resolution: usize) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.len() < 2 {
            return Err(Error::InvalidArgument("domain needs p ≥ 1".into()));
        }
        if resolution < 2 {
            return Err(Error::InvalidArgument(format!(
                "resolution {resolution} must be at least 2"
            )));
        }
        if lower.iter().chain(upper.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "domain bounds must be finite".into(),
            ));
        }
        if lower.iter().zip(upper.iter()).any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument(
                "domain needs lower < upper in every coordinate".into(),
            ));
        }
        let p = lower.len() - 1;
        if !(lower[p] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "domain lower height {} must be positive",
                lower[p]
            )));
        }
        Ok(Self {
            lower,
            upper,
            resolution,
        })
    }

    pub fn from_slices(lower: &[f64], upper: &[f64], resolution: usize) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(lower),
            DVector::from_column_slice(upper),
            resolution,
        )
    }

    /// `u_{1:p} ∈ [-2, 2]^p`, `u_{p+1} ∈ [0.5, 4]`.
    pub fn default_for(p: usize, resolution: usize) -> Result<Self> {
        let mut lower = DVector::from_element(p + 1, -2.0);
        let mut upper = DVector::from_element(p + 1, 2.0);
        lower[p] = 0.5;
        upper[p] = 4.0;
        Self::new(lower, upper, resolution)
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn p(&self) -> usize {
        self.lower.len() - 1
    }

    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Self::new(self.lower.clone(), self.upper.clone(), resolution)
    }

    pub fn contains(&self, u: &DVector<f64>) -> bool {
        u.len() == self.lower.len()
            && u.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// Midpoint-rule nodes of a [`TruncatedDomain`], mapped into `𝒳` and
/// weighted by the marginal density.
#[derive(Debug, Clone)]
pub struct DataGrid {
    dim: usize,
    resolution: usize,
    points: Vec<f64>,
    gaps: Vec<f64>,
    weights: Vec<f64>,
    mass: f64,
}

impl DataGrid {
    /// Requires `p < n` (the marginal density needs it).
    pub fn new(domain: &TruncatedDomain, n: usize) -> Result<Self> {
        let p = domain.p();
        if p >= n {
            return Err(Error::Unsupported(format!(
                "the marginal of X requires p < n (p = {p}, n = {n})"
            )));
        }
        let dim = p + 1;
        let res = domain.resolution();
        let total = res
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
        let widths: Vec<f64> = (0..dim)
            .map(|j| (domain.upper()[j] - domain.lower()[j]) / res as f64)
            .collect();
        let cell_volume: f64 = widths.iter().product();

        let mut points = Vec::with_capacity(total * dim);
        let mut gaps = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut u = vec![0.0; dim];
        for k in 0..total {
            let mut rem = k;
            for j in (0..dim).rev() {
                let i = rem % res;
                rem /= res;
                u[j] = domain.lower()[j] + (i as f64 + 0.5) * widths[j];
            }
            let h = u[p];
            let head_sq: f64 = u[..p].iter().map(|v| v * v).sum();
            let gap = h * h / 2.0;
            points.extend_from_slice(&u[..p]);
            points.push(head_sq + gap);
            gaps.push(gap);
            weights.push(log_marginal_from_gap(gap, n, p).exp() * h * cell_volume);
        }
        let mass = weights.iter().sum();
        Ok(Self {
            dim,
            resolution: res,
            points,
            gaps,
            weights,
            mass,
        })
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// The data point `x_k = ξ(u_k)`.
    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    /// `V(x_k)`, computed from `u_k` rather than by cancellation.
    pub fn gap(&self, k: usize) -> f64 {
        self.gaps[k]
    }

    /// Unnormalised quadrature weight `r(x_k) · u_{p+1} · cell volume`.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total marginal mass of the domain.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Grid indices adjacent to `k` in the positive direction of each axis.
    pub fn forward_neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let res = self.resolution;
        (0..self.dim).filter_map(move |j| {
            let stride = res.pow((self.dim - 1 - j) as u32);
            let i = (k / stride) % res;
            (i + 1 < res).then_some(k + stride)
        })
    }
}
