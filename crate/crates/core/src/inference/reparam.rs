//! Bijection between the prior's sampled scale and an unconstrained space.
//!
//! The sampler and the bridge warp work on the unconstrained coordinates;
//! prior supports with a hard edge (uniform bounds, gamma and beta
//! marginals) are opened up with a log or scaled-logit map.

use crate::priors::PriorSpec;
use crate::special::{expit, softplus};

/// Unconstrained values are clamped to this magnitude when mapping boundary points.
const FREE_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    Free,
    Lower(f64),
    Upper(f64),
    Interval(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reparam {
    bounds: Vec<Bound>,
}

impl Reparam {
    pub fn for_prior(prior: &PriorSpec) -> Self {
        let bounds = prior
            .marginals
            .iter()
            .map(|m| match m.support() {
                (lo, hi) if lo.is_finite() && hi.is_finite() => Bound::Interval(lo, hi),
                (lo, _) if lo.is_finite() => Bound::Lower(lo),
                (_, hi) if hi.is_finite() => Bound::Upper(hi),
                _ => Bound::Free,
            })
            .collect();
        Self { bounds }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Map `u` to the sampled scale; returns `ln |dx/du|`.
    #[inline]
    pub fn to_sampled(&self, u: &[f64], x: &mut [f64]) -> f64 {
        let mut log_jac = 0.0;
        for ((b, &v), o) in self.bounds.iter().zip(u).zip(x.iter_mut()) {
            match *b {
                Bound::Free => *o = v,
                Bound::Lower(a) => {
                    *o = a + v.exp();
                    log_jac += v;
                }
                Bound::Upper(c) => {
                    *o = c - v.exp();
                    log_jac += v;
                }
                Bound::Interval(a, c) => {
                    let w = c - a;
                    *o = if v >= 0.0 { c - w * expit(-v) } else { a + w * expit(v) };
                    log_jac += w.ln() - softplus(v) - softplus(-v);
                }
            }
        }
        log_jac
    }

    pub fn to_free(&self, x: &[f64], u: &mut [f64]) {
        for ((b, &v), o) in self.bounds.iter().zip(x).zip(u.iter_mut()) {
            let raw = match *b {
                Bound::Free => v,
                Bound::Lower(a) => (v - a).ln(),
                Bound::Upper(c) => (c - v).ln(),
                Bound::Interval(a, c) => ((v - a) / (c - v)).ln(),
            };
            *o = if raw.is_nan() { 0.0 } else { raw.clamp(-FREE_LIMIT, FREE_LIMIT) };
        }
    }
}
