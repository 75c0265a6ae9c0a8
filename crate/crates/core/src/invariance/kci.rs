use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{
    center_columns, gaussian_factor, hsic, indicator_factor, kci_conditional, permutation_p_value, spectral_p_value,
    KernelStatistic, Points,
};
use super::stats::gamma_sf_moments;
use super::{EnvSample, InvarianceError, InvarianceQuery, InvarianceTest, StackedPair, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NullMethod {
    /// Moment-matched gamma distribution.
    Gamma,
    /// Label permutations when Z is empty, otherwise draws from the
    /// chi-square mixture given by the residual-kernel spectrum.
    Simulated { draws: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// Ridge used when regressing kernel features on Z.
    pub ridge: f64,
    /// Largest pooled sample size accepted.
    pub max_samples: usize,
    pub null: NullMethod,
    pub seed: u64,
    /// Residual-diagonal tolerance of the incomplete Cholesky factors.
    pub low_rank_tol: f64,
    pub max_rank: usize,
    /// Scale applied to standardized Z columns inside the target kernel.
    pub cond_weight: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            ridge: 1e-3,
            max_samples: 2000,
            null: NullMethod::Gamma,
            seed: 0,
            low_rank_tol: 1e-8,
            max_rank: 400,
            cond_weight: 0.5,
        }
    }
}

/// Kernel conditional independence of the target and the environment
/// indicator given Z.
#[derive(Debug, Clone, Default)]
pub struct KciInvariance {
    pub config: KernelConfig,
}

impl KciInvariance {
    pub fn new(config: KernelConfig) -> Self {
        KciInvariance { config }
    }
}

impl InvarianceTest for KciInvariance {
    fn name(&self) -> &'static str {
        "kci"
    }

    fn test(&self, a: &EnvSample, b: &EnvSample, q: &InvarianceQuery) -> Result<TestResult, InvarianceError> {
        let pair = StackedPair::new(a, b, q)?;
        let fy = indicator_factor(&pair.indicator);
        let cond: Vec<&[f64]> = pair.cond.iter().map(Vec::as_slice).collect();
        let (stat, p) = kci_p_value(&pair.target, Some(fy), None, &cond, &self.config)?;
        Ok(TestResult::new(p, stat, self.name()))
    }
}

/// KCI p-value for `x _||_ y | z`. The `y` side is either a precomputed
/// centered factor or a continuous column.
pub(crate) fn kci_p_value(
    x: &[f64],
    y_factor: Option<DMatrix<f64>>,
    y_column: Option<&[f64]>,
    z: &[&[f64]],
    cfg: &KernelConfig,
) -> Result<(f64, f64), InvarianceError> {
    let n = x.len();
    if n > cfg.max_samples {
        return Err(InvarianceError::TooManySamples { max: cfg.max_samples, got: n });
    }
    if n < 4 {
        return Err(InvarianceError::InsufficientSamples { needed: 4, got: n });
    }
    let factor = |pts: &Points| center_columns(gaussian_factor(pts, pts.median_distance(1000), cfg.low_rank_tol, cfg.max_rank));

    let mut xcols: Vec<(&[f64], f64)> = vec![(x, 1.0)];
    xcols.extend(z.iter().map(|c| (*c, cfg.cond_weight)));
    let fx = factor(&Points::from_columns(&xcols, "target")?);
    let fy = match (y_factor, y_column) {
        (Some(f), _) => f,
        (None, Some(col)) => factor(&Points::from_columns(&[(col, 1.0)], "second variable")?),
        (None, None) => return Err(InvarianceError::InvalidQuery("no second variable".into())),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    if z.is_empty() {
        let fx0 = factor(&Points::from_columns(&[(x, 1.0)], "target")?);
        let s = hsic(&fx0, &fy);
        let p = match cfg.null {
            NullMethod::Gamma => gamma_p(&s)?,
            NullMethod::Simulated { draws } => permutation_p_value(&fx0, &fy, s.statistic, draws, &mut rng),
        };
        return Ok((s.statistic, p));
    }

    let zcols: Vec<(&[f64], f64)> = z.iter().map(|c| (*c, 1.0)).collect();
    let gz = factor(&Points::from_columns(&zcols, "conditioning")?);
    let simulated = matches!(cfg.null, NullMethod::Simulated { .. });
    let s = kci_conditional(&fx, &fy, &gz, cfg.ridge, simulated)?;
    let p = match cfg.null {
        NullMethod::Gamma => gamma_p(&s)?,
        NullMethod::Simulated { draws } => {
            spectral_p_value(s.statistic, s.spectrum.as_deref().unwrap_or(&[]), draws, &mut rng)
        }
    };
    Ok((s.statistic, p))
}

fn gamma_p(s: &KernelStatistic) -> Result<f64, InvarianceError> {
    if s.null_mean <= 0.0 {
        return Err(InvarianceError::Degenerate("kernel matrices vanish after centering".into()));
    }
    gamma_sf_moments(s.statistic, s.null_mean, s.null_var)
}
