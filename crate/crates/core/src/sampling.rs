//! Thin wrappers over `rand_distr` that accept degenerate parameters.
//!
//! Reserving models routinely ask for `Poisson(0)` or a gamma draw with zero
//! mean (an empty cell); those are point masses at zero rather than errors.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson, StandardNormal};

/// Poisson draw with real-valued rate. `rate <= 0` yields 0.
///
/// Large rates use the exact Ahrens–Dieter rejection sampler from
/// `rand_distr`, never a normal approximation. Rates above that sampler's
/// limit (about `1.8e19`) return the rounded rate.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    if !(rate > 0.0) {
        return 0.0;
    }
    match Poisson::new(rate) {
        Ok(d) => d.sample(rng),
        // Beyond the sampler's range the relative spread is below 1e-9.
        Err(_) if rate.is_finite() => rate.round(),
        Err(e) => panic!("invalid Poisson rate {rate}: {e}"),
    }
}

/// Gamma draw with the given shape and mean (rate = shape / mean).
/// A non-positive mean yields 0.
pub fn gamma_with_mean<R: Rng + ?Sized>(rng: &mut R, shape: f64, mean: f64) -> f64 {
    if !(mean > 0.0) {
        return 0.0;
    }
    Gamma::new(shape, mean / shape).expect("positive gamma shape and scale").sample(rng)
}

/// Gamma draw with shape and scale; shape 0 is the point mass at 0.
pub fn gamma_shape_scale<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    if !(shape > 0.0) || !(scale > 0.0) {
        return 0.0;
    }
    Gamma::new(shape, scale).expect("positive gamma shape and scale").sample(rng)
}

/// Negative binomial NB(r, p) with `P(k) = C(r+k-1, k) p^r (1-p)^k`, drawn as
/// the gamma–Poisson mixture `Poisson(Θ (1-p)/p)` with `Θ ~ Γ(r, 1)`.
/// Real-valued `r` is allowed.
pub fn negative_binomial<R: Rng + ?Sized>(rng: &mut R, r: f64, p: f64) -> f64 {
    if !(r > 0.0) || p >= 1.0 {
        return 0.0;
    }
    let theta = gamma_shape_scale(rng, r, 1.0);
    poisson(rng, theta * (1.0 - p) / p)
}

/// Normal draw; `sd == 0` returns the mean exactly.
pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("finite normal parameters").sample(rng)
}

/// Log-normal draw from log-scale `mu` and shape (log-variance) `sigma2`.
pub fn lognormal<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma2: f64) -> f64 {
    if sigma2 <= 0.0 {
        return mu.exp();
    }
    let z: f64 = StandardNormal.sample(rng);
    (mu + sigma2.sqrt() * z).exp()
}
