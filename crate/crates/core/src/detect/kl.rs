use super::DetectError;

/// KL divergence between `Bernoulli(x)` and `Bernoulli(y)`, in nats.
///
/// Uses `0 * ln 0 = 0`. Infinite divergences (`y` on the boundary with
/// `x != y`) are reported as domain errors.
pub fn kl_bernoulli(x: f64, y: f64) -> Result<f64, DetectError> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(DetectError::Domain(format!(
            "bernoulli kl needs arguments in [0, 1], got ({x}, {y})"
        )));
    }
    if x == y {
        return Ok(0.0);
    }
    if y == 0.0 || y == 1.0 {
        return Err(DetectError::Domain(format!(
            "bernoulli kl({x}, {y}) is infinite"
        )));
    }
    Ok(kl_bernoulli_interior(x, y))
}

/// Unchecked variant for `x` in `[0, 1]` and `y` in `(0, 1)`.
#[inline]
pub(crate) fn kl_bernoulli_interior(x: f64, y: f64) -> f64 {
    let mut kl = 0.0;
    if x > 0.0 {
        kl += x * (x / y).ln();
    }
    if x < 1.0 {
        kl += (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln();
    }
    // rounding can push the sum a hair below zero when x is close to y
    kl.max(0.0)
}

/// KL divergence between `N(x, sigma2)` and `N(y, sigma2)`.
pub fn kl_gaussian(x: f64, y: f64, sigma2: f64) -> Result<f64, DetectError> {
    if !(sigma2 > 0.0) {
        return Err(DetectError::Domain(format!(
            "gaussian kl needs sigma2 > 0, got {sigma2}"
        )));
    }
    let diff = x - y;
    Ok(diff * diff / (2.0 * sigma2))
}
