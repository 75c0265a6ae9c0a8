//! Conditional-independence tests on pooled data, for the pooled PC
//! baseline. Variable `d` is the environment index.

use nalgebra::DMatrix;

use super::fisher_z::partial_correlation;
use super::kci::{kci_p_value, KernelConfig};
use super::kernel::center_columns;
use super::stats::normal_two_sided;
use crate::graph::Cpdag;
use crate::io::MultiEnvDataset;
use crate::pc::{pooled_pc_with, CiQuery, CiTest, PcError};

/// Pooled columns: the data variables followed by the environment index.
struct Pooled {
    columns: Vec<Vec<f64>>,
    env: Vec<usize>,
    n_env: usize,
}

impl Pooled {
    fn new(data: &MultiEnvDataset, rows_per_env: Option<usize>) -> Self {
        let data = match rows_per_env {
            Some(r) => data.truncated(r),
            None => data.clone(),
        };
        let m = data.pooled_with_env_column();
        let columns = (0..m.ncols()).map(|c| m.column(c).iter().copied().collect()).collect();
        let env = m.column(m.ncols() - 1).iter().map(|&v| v as usize).collect();
        Pooled { columns, env, n_env: data.num_envs() }
    }

    fn n(&self) -> usize {
        self.env.len()
    }

    fn d(&self) -> usize {
        self.columns.len() - 1
    }
}

/// Fisher-Z partial-correlation test; independence accepted when `p >= level`.
pub struct FisherZCi {
    pooled: Pooled,
    level: f64,
}

impl FisherZCi {
    pub fn new(data: &MultiEnvDataset, level: f64) -> Self {
        FisherZCi { pooled: Pooled::new(data, None), level }
    }

    pub fn p_value(&self, q: &CiQuery) -> Result<f64, String> {
        let n = self.pooled.n();
        let k = q.z.len();
        if n <= k + 3 {
            return Err(format!("need more than {} samples, got {n}", k + 3));
        }
        let r = partial_correlation(&self.pooled.columns, q.a, q.b, &q.z).map_err(|e| e.to_string())?;
        Ok(normal_two_sided(((n - k - 3) as f64).sqrt() * r.atanh()))
    }
}

impl CiTest for FisherZCi {
    fn num_vars(&self) -> usize {
        self.pooled.d() + 1
    }

    fn independent(&self, q: &CiQuery) -> Result<bool, String> {
        Ok(self.p_value(q)? >= self.level)
    }
}

/// KCI on pooled data. The environment index gets a delta kernel when it is
/// one of the two tested variables; rows are capped per environment so the
/// pooled size stays within `max_samples`.
pub struct KciCi {
    pooled: Pooled,
    level: f64,
    config: KernelConfig,
}

impl KciCi {
    pub fn new(data: &MultiEnvDataset, level: f64, config: KernelConfig) -> Self {
        let cap = config.max_samples / data.num_envs();
        let rows = (data.total_rows() > config.max_samples).then_some(cap);
        KciCi { pooled: Pooled::new(data, rows), level, config }
    }

    pub fn p_value(&self, q: &CiQuery) -> Result<f64, String> {
        let e = self.pooled.d();
        let (x, y) = if q.a == e { (q.b, q.a) } else { (q.a, q.b) };
        let z: Vec<&[f64]> = q.z.iter().map(|&v| self.pooled.columns[v].as_slice()).collect();
        let result = if y == e {
            kci_p_value(&self.pooled.columns[x], Some(self.env_factor()), None, &z, &self.config)
        } else {
            kci_p_value(&self.pooled.columns[x], None, Some(&self.pooled.columns[y]), &z, &self.config)
        };
        result.map(|(_, p)| p).map_err(|err| err.to_string())
    }

    /// Centered one-hot factor of the delta kernel on the environment index.
    fn env_factor(&self) -> DMatrix<f64> {
        let n = self.pooled.n();
        center_columns(DMatrix::from_fn(n, self.pooled.n_env, |r, c| f64::from(u8::from(self.pooled.env[r] == c))))
    }
}

impl CiTest for KciCi {
    fn num_vars(&self) -> usize {
        self.pooled.d() + 1
    }

    fn independent(&self, q: &CiQuery) -> Result<bool, String> {
        Ok(self.p_value(q)? >= self.level)
    }
}

/// PC on the pooled data plus the environment index, which is exogenous.
/// `family` is `fisher_z` or `kci`.
pub fn pooled_pc(data: &MultiEnvDataset, family: &str, level: f64) -> Result<Cpdag, PcError> {
    pooled_pc_configured(data, family, level, &KernelConfig::default())
}

pub fn pooled_pc_configured(
    data: &MultiEnvDataset,
    family: &str,
    level: f64,
    kernel: &KernelConfig,
) -> Result<Cpdag, PcError> {
    let d = data.num_vars();
    let n_env = data.num_envs();
    let out = match family {
        "fisher_z" => pooled_pc_with(d, n_env, &FisherZCi::new(data, level), None)?,
        "kci" => pooled_pc_with(d, n_env, &KciCi::new(data, level, kernel.clone()), None)?,
        other => return Err(PcError::UnknownFamily(other.to_string())),
    };
    Ok(out.with_names(data.schema().to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariance::EnvSample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn collider_env(rng: &mut ChaCha8Rng, id: &str, n: usize, shift0: f64) -> EnvSample {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let x0: f64 = rng.sample::<f64, _>(StandardNormal) + shift0;
                let x2: f64 = rng.sample(StandardNormal);
                let e: f64 = rng.sample(StandardNormal);
                vec![x0, x0 + x2 + 0.5 * e, x2]
            })
            .collect();
        EnvSample::from_rows(id, &rows).unwrap()
    }

    #[test]
    fn single_environment_recovers_collider() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ds = MultiEnvDataset::unnamed(vec![collider_env(&mut rng, "a", 2000, 0.0)]).unwrap();
        let out = pooled_pc(&ds, "fisher_z", 0.01).unwrap();
        assert_eq!(out.directed().iter().copied().collect::<Vec<_>>(), vec![(0, 1), (2, 1)]);
        assert!(out.undirected().is_empty());
    }

    #[test]
    fn environment_shift_orients_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let chain = |rng: &mut ChaCha8Rng, id: &str, shift: f64| {
            let rows: Vec<Vec<f64>> = (0..1000)
                .map(|_| {
                    let x0: f64 = rng.sample::<f64, _>(StandardNormal) + shift;
                    let x1 = x0 + rng.sample::<f64, _>(StandardNormal);
                    vec![x0, x1]
                })
                .collect();
            EnvSample::from_rows(id, &rows).unwrap()
        };
        let ds = MultiEnvDataset::unnamed(vec![chain(&mut rng, "a", 0.0), chain(&mut rng, "b", 2.0)]).unwrap();
        let out = pooled_pc(&ds, "fisher_z", 0.01).unwrap();
        assert_eq!(out.directed().iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
        let kci = pooled_pc(&ds.truncated(300), "kci", 0.01).unwrap();
        assert_eq!(kci.directed().iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn unknown_family_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let ds = MultiEnvDataset::unnamed(vec![collider_env(&mut rng, "a", 50, 0.0)]).unwrap();
        assert_eq!(pooled_pc(&ds, "gam", 0.05).unwrap_err(), PcError::UnknownFamily("gam".into()));
    }
}
