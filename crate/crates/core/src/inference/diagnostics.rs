//! Convergence diagnostics over multiple chains of a scalar quantity.

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Split each chain in half, dropping the middle draw of odd-length chains.
fn split<'a>(chains: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let h = c.len() / 2;
        out.push(&c[..h]);
        out.push(&c[c.len() - h..]);
    }
    out
}

/// Between/within variance components `(W, var+)` of equal-length chains.
fn variance_components(chains: &[&[f64]]) -> (f64, f64) {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    let w = chains.iter().map(|c| sample_var(c)).sum::<f64>() / m;
    (w, (n - 1.0) / n * w + b / n)
}

/// Split R-hat. Returns 1 for a constant quantity and `NaN` when there are
/// fewer than four draws per chain.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    if chains.is_empty() || chains.iter().any(|c| c.len() < 4) {
        return f64::NAN;
    }
    let n = chains.iter().map(|c| c.len()).min().unwrap();
    let trimmed: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let halves = split(&trimmed);
    let (w, var_plus) = variance_components(&halves);
    if w <= 0.0 {
        return if var_plus <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    (var_plus / w).sqrt()
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n - lag {
        s += (x[i] - m) * (x[i + lag] - m);
    }
    s / n as f64
}

/// Bulk effective sample size from split chains, truncating the
/// autocorrelation sum with Geyer's initial monotone sequence.
pub fn effective_sample_size(chains: &[&[f64]]) -> f64 {
    if chains.is_empty() || chains.iter().any(|c| c.len() < 4) {
        return f64::NAN;
    }
    let n = chains.iter().map(|c| c.len()).min().unwrap();
    let trimmed: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let halves = split(&trimmed);
    let m = halves.len() as f64;
    let len = halves[0].len();
    let total = m * len as f64;
    let (_, var_plus) = variance_components(&halves);
    if !(var_plus > 0.0) {
        return total;
    }
    let w_term = |lag: usize| -> f64 {
        let acov = halves.iter().map(|c| autocovariance(c, lag)).sum::<f64>() / m;
        acov
    };
    let acov0 = w_term(0);
    let rho = |lag: usize| -> f64 { 1.0 - (acov0 - w_term(lag)) / var_plus };

    // Pairs Γ_k = ρ_{2k} + ρ_{2k+1}; stop at the first non-positive pair and
    // enforce monotonicity.
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < len {
        let mut pair = if k == 0 { 1.0 + rho(1) } else { rho(2 * k) + rho(2 * k + 1) };
        if pair <= 0.0 {
            break;
        }
        if pair > prev_pair {
            pair = prev_pair;
        }
        tau += 2.0 * pair;
        prev_pair = pair;
        k += 1;
    }
    let tau = tau.max(1.0 / total.log10().max(1.0));
    total / tau
}

/// Batch-means estimate of the spectral density at zero divided by the
/// variance (the integrated autocorrelation time) of a single series.
pub fn batch_means_ratio(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 16 {
        return 1.0;
    }
    let b = (n as f64).sqrt().floor() as usize;
    let k = n / b;
    let var = sample_var(&x[..k * b]);
    if !(var > 0.0) {
        return 1.0;
    }
    let batch_means: Vec<f64> = (0..k).map(|i| mean(&x[i * b..(i + 1) * b])).collect();
    (b as f64 * sample_var(&batch_means) / var).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn iid(seed: u64, n: usize) -> Vec<f64> {
        let mut r = rng_from_seed(seed);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
        let e = iid(seed, n);
        let mut x = vec![0.0; n];
        for i in 1..n {
            x[i] = phi * x[i - 1] + e[i];
        }
        x
    }

    #[test]
    fn rhat_near_one_for_iid_chains() {
        let c: Vec<Vec<f64>> = (0..4).map(|s| iid(s, 2000)).collect();
        let r: Vec<&[f64]> = c.iter().map(|v| v.as_slice()).collect();
        assert!((split_rhat(&r) - 1.0).abs() < 0.01);
    }

    #[test]
    fn rhat_flags_shifted_chain() {
        let mut c: Vec<Vec<f64>> = (0..3).map(|s| iid(s, 1000)).collect();
        c[2].iter_mut().for_each(|v| *v += 3.0);
        let r: Vec<&[f64]> = c.iter().map(|v| v.as_slice()).collect();
        assert!(split_rhat(&r) > 1.5);
    }

    #[test]
    fn rhat_flags_trending_chain() {
        let c: Vec<Vec<f64>> = (0..3).map(|s| (0..1000).map(|i| i as f64 * 0.01 + s as f64 * 1e-3).collect()).collect();
        let r: Vec<&[f64]> = c.iter().map(|v| v.as_slice()).collect();
        assert!(split_rhat(&r) > 1.5);
    }

    #[test]
    fn ess_of_iid_is_close_to_total() {
        let c: Vec<Vec<f64>> = (0..4).map(|s| iid(10 + s, 2500)).collect();
        let r: Vec<&[f64]> = c.iter().map(|v| v.as_slice()).collect();
        let ess = effective_sample_size(&r);
        assert!(ess > 8000.0 && ess < 12000.0, "{ess}");
    }

    #[test]
    fn ess_of_ar1_matches_theory() {
        // Integrated autocorrelation time of AR(1) is (1+φ)/(1-φ) = 9 at φ = 0.8.
        let c: Vec<Vec<f64>> = (0..4).map(|s| ar1(20 + s, 20_000, 0.8)).collect();
        let r: Vec<&[f64]> = c.iter().map(|v| v.as_slice()).collect();
        let ess = effective_sample_size(&r);
        let expect = 80_000.0 / 9.0;
        assert!((ess / expect - 1.0).abs() < 0.15, "{ess} vs {expect}");
    }

    #[test]
    fn batch_means_ratio_matches_ar1_time() {
        let x = ar1(5, 200_000, 0.5);
        let t = batch_means_ratio(&x);
        assert!((t - 3.0).abs() < 0.5, "{t}");
        let y = iid(6, 100_000);
        assert!((batch_means_ratio(&y) - 1.0).abs() < 0.2);
    }
}
