//! Gaussian kernel density estimation with a full bandwidth matrix.

use nalgebra::{DMatrix, DVector};

use crate::special::{log_sum_exp, LN_2PI};

#[derive(Debug, Clone)]
pub struct GaussianKde {
    points: Vec<f64>,
    dim: usize,
    /// Inverse Cholesky factor of the bandwidth matrix.
    l_inv: DMatrix<f64>,
    log_norm: f64,
    pub bandwidth: DMatrix<f64>,
}

/// Normal-scale plug-in bandwidth `(4/(d+2))^(2/(d+4)) n^(-2/(d+4)) Σ`.
pub fn normal_scale_bandwidth(cov: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let d = cov.nrows() as f64;
    let factor = (4.0 / (d + 2.0)).powf(2.0 / (d + 4.0)) * (n as f64).powf(-2.0 / (d + 4.0));
    cov * factor
}

impl GaussianKde {
    /// Fit to row-major `points` of dimension `dim` using the normal-scale bandwidth.
    pub fn fit(points: &[f64], dim: usize) -> Option<Self> {
        let n = points.len() / dim;
        if n < 2 {
            return None;
        }
        let mut mean = DVector::<f64>::zeros(dim);
        for x in points.chunks_exact(dim) {
            mean += DVector::from_column_slice(x);
        }
        mean /= n as f64;
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for x in points.chunks_exact(dim) {
            let c = DVector::from_column_slice(x) - &mean;
            cov += &c * c.transpose();
        }
        cov /= n as f64 - 1.0;
        Self::with_bandwidth(points, dim, normal_scale_bandwidth(&cov, n))
    }

    pub fn with_bandwidth(points: &[f64], dim: usize, bandwidth: DMatrix<f64>) -> Option<Self> {
        let chol = bandwidth.clone().cholesky()?;
        let l = chol.l();
        let l_inv = l.clone().try_inverse()?;
        let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let n = points.len() / dim;
        let log_norm = -0.5 * dim as f64 * LN_2PI - 0.5 * log_det - (n as f64).ln();
        Some(Self { points: points.to_vec(), dim, l_inv, log_norm, bandwidth })
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut terms = Vec::with_capacity(self.points.len() / self.dim);
        let mut z = vec![0.0; self.dim];
        for p in self.points.chunks_exact(self.dim) {
            for i in 0..self.dim {
                let mut acc = 0.0;
                for k in 0..=i {
                    acc += self.l_inv[(i, k)] * (x[k] - p[k]);
                }
                z[i] = acc;
            }
            terms.push(-0.5 * z.iter().map(|v| v * v).sum::<f64>());
        }
        self.log_norm + log_sum_exp(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn single_point_kernel_is_gaussian() {
        let kde = GaussianKde::with_bandwidth(&[1.0, 2.0], 2, DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]))).unwrap();
        let expect = -LN_2PI - 0.5 * 4f64.ln() - 0.5 * (0.25 + 1.0);
        assert!((kde.log_density(&[2.0, 3.0]) - expect).abs() < 1e-12);
    }

    #[test]
    fn bandwidth_factor_in_one_dimension() {
        let h = normal_scale_bandwidth(&DMatrix::from_element(1, 1, 1.0), 1000);
        // (4/3)^(2/5) n^(-2/5): the square of Silverman's 1.06 σ n^(-1/5) rule.
        let expect = (4.0f64 / 3.0).powf(0.4) * 1000f64.powf(-0.4);
        assert!((h[(0, 0)] - expect).abs() < 1e-15);
        assert!((expect.sqrt() / 1000f64.powf(-0.2) - 1.0592).abs() < 1e-3);
    }

    #[test]
    fn recovers_standard_normal_density() {
        let mut r = rng_from_seed(1);
        let pts: Vec<f64> = (0..20_000).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let kde = GaussianKde::fit(&pts, 1).unwrap();
        let v = kde.log_density(&[0.0]).exp();
        assert!((v - 0.398_942).abs() < 0.01, "{v}");
    }
}
