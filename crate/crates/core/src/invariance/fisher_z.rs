use nalgebra::DVector;

use super::stats::{design, normal_two_sided, ols, standardize};
use super::{EnvSample, InvarianceError, InvarianceQuery, InvarianceTest, StackedPair, TestResult};

/// Partial correlation of the target with the environment indicator given Z,
/// Fisher z-transformed.
#[derive(Debug, Clone, Copy, Default)]
pub struct FisherZInvariance;

impl InvarianceTest for FisherZInvariance {
    fn name(&self) -> &'static str {
        "fisher_z"
    }

    fn test(&self, a: &EnvSample, b: &EnvSample, q: &InvarianceQuery) -> Result<TestResult, InvarianceError> {
        let pair = StackedPair::new(a, b, q)?;
        let n = pair.n();
        let k = q.cond.len();
        if n <= k + 3 {
            return Err(InvarianceError::InsufficientSamples { needed: k + 4, got: n });
        }
        let mut columns = vec![pair.target, pair.indicator];
        columns.extend(pair.cond);
        let r = partial_correlation(&columns, 0, 1, &(2..2 + k).collect::<Vec<_>>())?;
        let z = ((n - k - 3) as f64).sqrt() * r.atanh();
        Ok(TestResult::new(normal_two_sided(z), z, self.name()))
    }
}

/// Partial correlation of columns `x` and `y` given columns `z`, via residuals
/// of least-squares fits on standardized data.
pub(crate) fn partial_correlation(columns: &[Vec<f64>], x: usize, y: usize, z: &[usize]) -> Result<f64, InvarianceError> {
    let n = columns[x].len();
    let sx = standardize(&columns[x], "target column")?;
    let sy = standardize(&columns[y], "second column")?;
    let (rx, ry) = if z.is_empty() {
        (DVector::from_vec(sx), DVector::from_vec(sy))
    } else {
        let zs = z
            .iter()
            .map(|&c| standardize(&columns[c], &format!("conditioning column {c}")))
            .collect::<Result<Vec<_>, _>>()?;
        let xd = design(&zs, n);
        (ols(&xd, &DVector::from_vec(sx))?.residuals, ols(&xd, &DVector::from_vec(sy))?.residuals)
    };
    let (nx, ny) = (rx.norm(), ry.norm());
    let floor = 1e-10 * (n as f64).sqrt();
    if nx <= floor || ny <= floor {
        return Err(InvarianceError::Degenerate("residual variance vanishes given the conditioning set".into()));
    }
    Ok((rx.dot(&ry) / (nx * ny)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_sample(rng: &mut ChaCha8Rng, n: usize, cols: usize, shift: f64) -> EnvSample {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..cols).map(|_| Distribution::<f64>::sample(&StandardNormal, rng) + shift).collect::<Vec<f64>>())
            .collect();
        EnvSample::from_rows("e", &rows).unwrap()
    }

    #[test]
    fn identical_halves_give_zero_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = normal_sample(&mut rng, 200, 3, 0.0);
        let q = InvarianceQuery::new(0, [1, 2], 0, 1).unwrap();
        let res = FisherZInvariance.test(&a, &a, &q).unwrap();
        assert!(res.statistic.abs() < 1e-10, "{}", res.statistic);
        assert!(res.p_value > 1.0 - 1e-9);
    }

    #[test]
    fn mean_shift_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = normal_sample(&mut rng, 500, 1, 0.0);
        let b = normal_sample(&mut rng, 500, 1, 2.0);
        let q = InvarianceQuery::new(0, [], 0, 1).unwrap();
        assert!(FisherZInvariance.test(&a, &b, &q).unwrap().p_value < 1e-6);
    }

    #[test]
    fn swapping_environments_keeps_p_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = normal_sample(&mut rng, 100, 2, 0.0);
        let b = normal_sample(&mut rng, 120, 2, 0.3);
        let q = InvarianceQuery::new(0, [1], 0, 1).unwrap();
        let p1 = FisherZInvariance.test(&a, &b, &q).unwrap().p_value;
        let p2 = FisherZInvariance.test(&b, &a, &q).unwrap().p_value;
        assert!((p1 - p2).abs() < 1e-10);
    }

    #[test]
    fn constant_conditioning_column_is_an_error() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let a = EnvSample::from_rows("a", &rows).unwrap();
        let q = InvarianceQuery::new(0, [1], 0, 1).unwrap();
        assert!(matches!(FisherZInvariance.test(&a, &a, &q), Err(InvarianceError::Degenerate(_))));
        let tiny = EnvSample::from_rows("t", &[vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            FisherZInvariance.test(&tiny, &tiny, &q),
            Err(InvarianceError::InsufficientSamples { .. })
        ));
    }
}
