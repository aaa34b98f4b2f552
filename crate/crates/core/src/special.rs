//! Scalar special functions shared by the models and estimators.

use std::f64::consts::SQRT_2;

use statrs::function::erf::{erfc, erfc_inv};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile function.
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // Halley refinement; erfc_inv alone is good to roughly 1e-9.
    for _ in 0..2 {
        let e = norm_cdf(x) - p;
        let u = e * (LN_2PI * 0.5 + 0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

#[inline]
pub fn norm_log_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * LN_2PI - sigma.ln() - 0.5 * z * z
}

#[inline]
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable `ln Σ exp(x_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Streaming log-sum-exp accumulator with a running maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, scaled_sum: 0.0 }
    }
}

impl LogSumExp {
    #[inline]
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled_sum += (x - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if self.max == f64::NEG_INFINITY {
            *self = *other;
            return;
        }
        if other.max <= self.max {
            self.scaled_sum += other.scaled_sum * (other.max - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - other.max).exp() + other.scaled_sum;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}

/// `ln C(n, k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-10, 0.01, 0.05, 0.1, 0.5, 0.9, 0.999] {
            assert!((norm_cdf(norm_ppf(p)) - p).abs() < 1e-12 * p.max(1e-3));
        }
    }

    #[test]
    fn streaming_lse_matches_batch() {
        let xs = [-1000.0, -1001.5, -999.25, f64::NEG_INFINITY, -1003.0];
        let mut acc = LogSumExp::default();
        xs.iter().for_each(|&x| acc.push(x));
        assert!((acc.value() - log_sum_exp(&xs)).abs() < 1e-12);

        let mut a = LogSumExp::default();
        let mut b = LogSumExp::default();
        xs[..2].iter().for_each(|&x| a.push(x));
        xs[2..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.value() - log_sum_exp(&xs)).abs() < 1e-12);
    }

    #[test]
    fn expit_is_symmetric_and_stable() {
        assert_eq!(expit(0.0), 0.5);
        assert!((expit(-800.0)).abs() < 1e-300);
        assert!((expit(3.0) + expit(-3.0) - 1.0).abs() < 1e-15);
        assert!((softplus(-3.0) - (1.0 + (-3.0f64).exp()).ln()).abs() < 1e-15);
    }
}
