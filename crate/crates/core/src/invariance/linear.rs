use nalgebra::DVector;

use super::stats::{design, f_sf, f_two_sided, fisher_combine, ols, standardize};
use super::{EnvSample, InvarianceError, InvarianceQuery, InvarianceTest, StackedPair, TestResult};

/// Equality of linear-model parameters between two environments: a Chow
/// F-test on coefficients and intercept, combined by Fisher's method with a
/// two-sided F-test on the residual variances.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearParamInvariance;

impl InvarianceTest for LinearParamInvariance {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn test(&self, a: &EnvSample, b: &EnvSample, q: &InvarianceQuery) -> Result<TestResult, InvarianceError> {
        let pair = StackedPair::new(a, b, q)?;
        let k = q.cond.len() + 1;
        let (n_a, n_b) = (pair.n_a, pair.n_b);
        if n_a <= k + 1 || n_b <= k + 1 {
            return Err(InvarianceError::InsufficientSamples { needed: k + 2, got: n_a.min(n_b) });
        }
        let n = pair.n();
        // Shared affine rescaling keeps coefficients comparable across the two fits.
        let cond = pair
            .cond
            .iter()
            .enumerate()
            .map(|(i, c)| standardize(c, &format!("conditioning column {}", q.cond[i])))
            .collect::<Result<Vec<_>, _>>()?;
        let y = DVector::from_vec(pair.target);
        let x = design(&cond, n);
        let pooled = ols(&x, &y)?;
        let fit_a = ols(&x.rows(0, n_a).into_owned(), &y.rows(0, n_a).into_owned())?;
        let fit_b = ols(&x.rows(n_a, n_b).into_owned(), &y.rows(n_a, n_b).into_owned())?;

        let within = fit_a.rss + fit_b.rss;
        let ybar = y.mean();
        let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
        if !(within > 1e-12 * tss) {
            return Err(InvarianceError::Degenerate("target is an exact linear function of the conditioning set".into()));
        }
        let df_within = (n - 2 * k) as f64;
        let chow = ((pooled.rss - within).max(0.0) / k as f64) / (within / df_within);
        let p_coef = f_sf(chow, k as f64, df_within);

        let (df_a, df_b) = ((n_a - k) as f64, (n_b - k) as f64);
        let (var_a, var_b) = (fit_a.rss / df_a, fit_b.rss / df_b);
        if var_b == 0.0 || var_a == 0.0 {
            return Err(InvarianceError::Degenerate("zero residual variance in one environment".into()));
        }
        let p_var = f_two_sided(var_a / var_b, df_a, df_b);
        let p = fisher_combine(&[p_coef, p_var]);
        Ok(TestResult::new(p, chow, self.name()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn linear_env(rng: &mut ChaCha8Rng, n: usize, coef: f64, sigma: f64, parent_shift: f64) -> EnvSample {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(rng);
                let x = x + parent_shift;
                let e: f64 = StandardNormal.sample(rng);
                vec![x, coef * x + sigma * e]
            })
            .collect();
        EnvSample::from_rows("e", &rows).unwrap()
    }

    #[test]
    fn coefficient_change_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = linear_env(&mut rng, 500, 1.0, 1.0, 0.0);
        let b = linear_env(&mut rng, 500, 2.0, 1.0, 0.0);
        let q = InvarianceQuery::new(1, [0], 0, 1).unwrap();
        assert!(LinearParamInvariance.test(&a, &b, &q).unwrap().p_value < 1e-6);
    }

    #[test]
    fn pure_variance_shift_without_conditioning() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = linear_env(&mut rng, 500, 0.0, 1.0, 0.0);
        let b = linear_env(&mut rng, 500, 0.0, 2.0, 0.0);
        let q = InvarianceQuery::new(1, [], 0, 1).unwrap();
        assert!(LinearParamInvariance.test(&a, &b, &q).unwrap().p_value < 1e-6);
    }

    #[test]
    fn invariant_mechanism_with_shifted_parent_is_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let q = InvarianceQuery::new(1, [0], 0, 1).unwrap();
        let reps = 400;
        let rejections = (0..reps)
            .filter(|_| {
                let a = linear_env(&mut rng, 200, 1.0, 1.0, 0.0);
                let b = linear_env(&mut rng, 200, 1.0, 1.0, 1.5);
                LinearParamInvariance.test(&a, &b, &q).unwrap().p_value < 0.05
            })
            .count();
        let rate = rejections as f64 / reps as f64;
        // 0.05 +- 3 binomial standard errors.
        assert!(rate < 0.05 + 3.0 * (0.05f64 * 0.95 / reps as f64).sqrt(), "rate {rate}");
    }

    #[test]
    fn symmetric_in_environments() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = linear_env(&mut rng, 80, 1.0, 1.0, 0.0);
        let b = linear_env(&mut rng, 90, 1.2, 1.1, 0.0);
        let q = InvarianceQuery::new(1, [0], 0, 1).unwrap();
        let p1 = LinearParamInvariance.test(&a, &b, &q).unwrap().p_value;
        let p2 = LinearParamInvariance.test(&b, &a, &q).unwrap().p_value;
        assert!((p1 - p2).abs() < 1e-10);
    }

    #[test]
    fn exact_linear_target_is_degenerate() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64 + 1.0]).collect();
        let a = EnvSample::from_rows("a", &rows).unwrap();
        let q = InvarianceQuery::new(1, [0], 0, 1).unwrap();
        assert!(matches!(LinearParamInvariance.test(&a, &a, &q), Err(InvarianceError::Degenerate(_))));
    }
}
