//! Standard normal CDF, quantile, log-CDF and one-sided truncated sampling.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Φ⁻¹(p) for p in (0, 1); returns ±∞ at the endpoints.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        let x = -SQRT_2 * erfc_inv(2.0 * p);
        // One Halley step against the accurate CDF.
        let e = cdf(x) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x - u / (1.0 + 0.5 * x * u)
    }
}

pub fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// ln Φ(x), accurate in the far left tail where Φ underflows.
pub fn log_cdf(x: f64) -> f64 {
    if x > -35.0 {
        cdf(x).ln()
    } else {
        // Mills-ratio asymptotic series.
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        log_pdf(x) - (-x).ln() + series.ln()
    }
}

/// Draw from N(0, 1) conditioned on exceeding `lower`.
///
/// Below the switch point plain rejection from the untruncated normal
/// accepts at least 30% of proposals; beyond it the translated-exponential
/// proposal with the optimal rate is used, whose acceptance rate tends to
/// one as `lower` grows.
pub fn sample_above<R: Rng + ?Sized>(lower: f64, rng: &mut R) -> f64 {
    const SWITCH: f64 = 0.5;
    if lower < SWITCH {
        loop {
            let x: f64 = StandardNormal.sample(rng);
            if x > lower {
                return x;
            }
        }
    }
    let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
    let exp = Exp::new(rate).expect("positive rate");
    loop {
        let x = lower + exp.sample(rng);
        let u: f64 = rng.random();
        let d = x - rate;
        if u.ln() <= -0.5 * d * d {
            return x;
        }
    }
}

/// Latent probit draw: z ~ N(mean, 1) truncated to z > 0 when `positive`,
/// z ≤ 0 otherwise.
pub fn sample_latent<R: Rng + ?Sized>(mean: f64, positive: bool, rng: &mut R) -> f64 {
    if positive {
        mean + sample_above(-mean, rng)
    } else {
        mean - sample_above(mean, rng)
    }
}
