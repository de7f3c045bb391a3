use statrs::function::gamma::ln_gamma;

/// `ln Γ(a) - ln Γ(b)` without forming either gamma value.
pub(crate) fn ln_gamma_ratio(a: f64, b: f64) -> f64 {
    ln_gamma(a) - ln_gamma(b)
}

pub(crate) fn ln_gamma_half(k: usize) -> f64 {
    ln_gamma(k as f64 / 2.0)
}
