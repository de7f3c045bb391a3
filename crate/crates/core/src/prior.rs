//! Jeffreys prior on the natural parameters and the resulting marginal
//! density of the sufficient statistic.

use std::f64::consts::LN_2;

use crate::error::{check_len, domain, Error, Result};
use crate::grid::{DataGrid, TruncatedDomain};
use crate::model::{NaturalParam, SuffStat};
use crate::special::ln_gamma_ratio;

/// `π_Θ(θ) = √n 2^{-(p+1)/2} (-θ_{p+1})^{-(p+2)/2}`, i.e. `√det g_Θ`.
pub fn jeffreys_prior_natural(theta: &NaturalParam, n: usize) -> f64 {
    let p = theta.p() as f64;
    let log =
        0.5 * (n as f64).ln() - 0.5 * (p + 1.0) * LN_2 - 0.5 * (p + 2.0) * (-theta.last()).ln();
    log.exp()
}

fn require_p_below_n(n: usize, p: usize) -> Result<()> {
    if p >= n {
        Err(Error::Unsupported(format!(
            "the marginal of X requires p < n (p = {p}, n = {n})"
        )))
    } else {
        Ok(())
    }
}

fn log_marginal_constant(n: usize, p: usize) -> f64 {
    0.5 * (n as f64).ln()
        + 0.5 * (p as f64 - 1.0) * LN_2
        + ln_gamma_ratio(n as f64 / 2.0, (n - p) as f64 / 2.0)
}

/// `c_r = √n 2^{(p-1)/2} Γ(n/2) / Γ((n-p)/2)`.
pub fn marginal_constant(n: usize, p: usize) -> Result<f64> {
    require_p_below_n(n, p)?;
    Ok(log_marginal_constant(n, p).exp())
}

pub(crate) fn log_marginal_from_gap(gap: f64, n: usize, p: usize) -> f64 {
    log_marginal_constant(n, p) - 0.5 * (p as f64 + 2.0) * gap.ln()
}

/// `r(x) = c_r V(x)^{-(p+2)/2}`.
pub fn marginal_density(x: &SuffStat, n: usize) -> Result<f64> {
    let p = x.p();
    require_p_below_n(n, p)?;
    let v = x.gap();
    if !(v > 0.0) {
        return Err(domain(format!("V(x) = {v} must be positive")));
    }
    Ok(log_marginal_from_gap(v, n, p).exp())
}

/// `Γ((n-p)/2)/Γ(n/2) · (n/2)^{p/2}`, the constant ratio between the
/// hyperbolic volume density of `Ξ` and the marginal `r`.
pub fn density_ratio_constant(n: usize, p: usize) -> Result<f64> {
    require_p_below_n(n, p)?;
    let log = ln_gamma_ratio((n - p) as f64 / 2.0, n as f64 / 2.0)
        + 0.5 * p as f64 * (n as f64 / 2.0).ln();
    Ok(log.exp())
}

/// Marginal mass of the image of a truncated `u`-box, by the midpoint rule
/// with the domain's resolution.
pub fn truncated_mass(domain: &TruncatedDomain, n: usize) -> Result<f64> {
    check_len(domain.p() + 1, domain.upper().len())?;
    Ok(DataGrid::new(domain, n)?.mass())
}
