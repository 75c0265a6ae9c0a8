use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::{gaussian_factor, Points};
use super::stats::{design, f_two_sided, mean_sd, ols, standardize, t_two_sided};
use super::{EnvSample, InvarianceError, InvarianceQuery, InvarianceTest, StackedPair, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    /// Gaussian-kernel ridge regression on low-rank kernel features.
    #[default]
    KernelRidge,
    Linear,
}

/// Regress the target on Z using the pooled pair, then compare residual
/// means (Welch t) and variances (F) between environments. The two p-values
/// are Bonferroni-combined.
#[derive(Debug, Clone, Copy)]
pub struct RegressionResidualInvariance {
    pub regressor: Regressor,
    /// Ridge penalty per sample for the kernel regressor.
    pub ridge: f64,
    pub max_rank: usize,
}

impl Default for RegressionResidualInvariance {
    fn default() -> Self {
        RegressionResidualInvariance { regressor: Regressor::KernelRidge, ridge: 1e-3, max_rank: 200 }
    }
}

impl RegressionResidualInvariance {
    pub fn new(regressor: Regressor) -> Self {
        RegressionResidualInvariance { regressor, ..Default::default() }
    }

    fn residuals(&self, pair: &StackedPair) -> Result<Vec<f64>, InvarianceError> {
        let n = pair.n();
        let y = DVector::from_column_slice(&pair.target);
        if pair.cond.is_empty() {
            let (m, _) = mean_sd(&pair.target);
            return Ok(pair.target.iter().map(|v| v - m).collect());
        }
        match self.regressor {
            Regressor::Linear => {
                let cond = pair
                    .cond
                    .iter()
                    .map(|c| standardize(c, "conditioning column"))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ols(&design(&cond, n), &y)?.residuals.data.into())
            }
            Regressor::KernelRidge => {
                let cols: Vec<(&[f64], f64)> = pair.cond.iter().map(|c| (c.as_slice(), 1.0)).collect();
                let pts = Points::from_columns(&cols, "conditioning")?;
                let g = gaussian_factor(&pts, pts.median_distance(1000), 1e-8, self.max_rank);
                let (m, _) = mean_sd(&pair.target);
                let yc = y.add_scalar(-m);
                // Intercept handled by centering; features used uncentered.
                let r = g.ncols();
                let mut a = g.tr_mul(&g);
                let lambda = self.ridge * n as f64;
                for i in 0..r {
                    a[(i, i)] += lambda;
                }
                let chol = a
                    .cholesky()
                    .ok_or_else(|| InvarianceError::Degenerate("kernel ridge system is not positive definite".into()))?;
                let w: DMatrix<f64> = chol.solve(&g.tr_mul(&DMatrix::from_column_slice(n, 1, yc.as_slice())));
                let fit = &g * w;
                Ok((0..n).map(|i| yc[i] - fit[(i, 0)]).collect())
            }
        }
    }
}

impl InvarianceTest for RegressionResidualInvariance {
    fn name(&self) -> &'static str {
        "regression_residual"
    }

    fn test(&self, a: &EnvSample, b: &EnvSample, q: &InvarianceQuery) -> Result<TestResult, InvarianceError> {
        let pair = StackedPair::new(a, b, q)?;
        let k = q.cond.len();
        if pair.n_a <= k + 2 || pair.n_b <= k + 2 {
            return Err(InvarianceError::InsufficientSamples { needed: k + 3, got: pair.n_a.min(pair.n_b) });
        }
        let res = self.residuals(&pair)?;
        let (ra, rb) = res.split_at(pair.n_a);
        let (na, nb) = (ra.len() as f64, rb.len() as f64);
        let (ma, sa) = mean_sd(ra);
        let (mb, sb) = mean_sd(rb);
        let (va, vb) = (sa * sa * na / (na - 1.0), sb * sb * nb / (nb - 1.0));
        if va <= 0.0 || vb <= 0.0 {
            return Err(InvarianceError::Degenerate("zero residual variance in one environment".into()));
        }
        let se2 = va / na + vb / nb;
        let t = (ma - mb) / se2.sqrt();
        let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
        let p_mean = t_two_sided(t, df);
        let p_var = f_two_sided(va / vb, na - 1.0, nb - 1.0);
        let p = (2.0 * p_mean.min(p_var)).min(1.0);
        Ok(TestResult::new(p, t, self.name()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn env(rng: &mut ChaCha8Rng, n: usize, parent_shift: f64, intercept: f64) -> EnvSample {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let x: f64 = rng.sample::<f64, _>(StandardNormal) + parent_shift;
                let e: f64 = rng.sample(StandardNormal);
                vec![x, (2.0 * x).sin() + intercept + 0.5 * e]
            })
            .collect();
        EnvSample::from_rows("e", &rows).unwrap()
    }

    #[test]
    fn intercept_shift_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = env(&mut rng, 500, 0.0, 0.0);
        let b = env(&mut rng, 500, 0.0, 1.0);
        let q = InvarianceQuery::new(1, [0], 0, 1).unwrap();
        assert!(RegressionResidualInvariance::default().test(&a, &b, &q).unwrap().p_value < 1e-4);
    }

    #[test]
    fn invariant_nonlinear_mechanism_is_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let q = InvarianceQuery::new(1, [0], 0, 1).unwrap();
        let t = RegressionResidualInvariance::default();
        let reps = 100;
        let rejections = (0..reps)
            .filter(|_| {
                let a = env(&mut rng, 300, 0.0, 0.0);
                let b = env(&mut rng, 300, 0.7, 0.0);
                t.test(&a, &b, &q).unwrap().p_value < 0.05
            })
            .count();
        assert!(rejections <= 10, "{rejections} / {reps}");
    }

    #[test]
    fn regressors_agree_without_conditioning() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let a = env(&mut rng, 100, 0.0, 0.0);
        let b = env(&mut rng, 100, 0.0, 0.3);
        let q = InvarianceQuery::new(1, [], 0, 1).unwrap();
        let p1 = RegressionResidualInvariance::new(Regressor::Linear).test(&a, &b, &q).unwrap();
        let p2 = RegressionResidualInvariance::new(Regressor::KernelRidge).test(&a, &b, &q).unwrap();
        assert_eq!(p1, p2);
        let p3 = RegressionResidualInvariance::default().test(&b, &a, &q).unwrap();
        assert!((p1.p_value - p3.p_value).abs() < 1e-12);
    }
}
