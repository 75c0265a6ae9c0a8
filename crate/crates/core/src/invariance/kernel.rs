//! Gaussian kernel factors and the KCI / HSIC statistics with their gamma
//! null approximations.
//!
//! Kernel matrices are never formed in full. Each one is replaced by a
//! pivoted incomplete Cholesky factor `G` with `K ~ G G^T`, so the cost per
//! test is linear in the sample size for a fixed numerical rank.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution};

use super::stats::standardize;
use super::InvarianceError;

/// Row-major point cloud.
#[derive(Debug, Clone)]
pub struct Points {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl Points {
    /// Standardizes each column and scales it by the given weight.
    pub fn from_columns(columns: &[(&[f64], f64)], what: &str) -> Result<Self, InvarianceError> {
        let n = columns.first().map_or(0, |c| c.0.len());
        let dim = columns.len();
        let mut data = vec![0.0; n * dim];
        for (c, (col, weight)) in columns.iter().enumerate() {
            let z = standardize(col, &format!("{what} column {c}"))?;
            for (r, v) in z.into_iter().enumerate() {
                data[r * dim + c] = v * weight;
            }
        }
        Ok(Points { data, n, dim })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn sq_dist(&self, i: usize, j: usize) -> f64 {
        self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Median pairwise distance over at most `cap` evenly strided points.
    pub fn median_distance(&self, cap: usize) -> f64 {
        let stride = self.n.div_ceil(cap.max(2)).max(1);
        let idx: Vec<usize> = (0..self.n).step_by(stride).collect();
        let mut d: Vec<f64> = Vec::with_capacity(idx.len() * idx.len() / 2);
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                let v = self.sq_dist(i, j);
                if v > 0.0 {
                    d.push(v);
                }
            }
        }
        if d.is_empty() {
            return 1.0;
        }
        let mid = d.len() / 2;
        let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
        m.sqrt()
    }

    fn gaussian(&self, i: usize, j: usize, gamma: f64) -> f64 {
        (-gamma * self.sq_dist(i, j)).exp()
    }
}

/// Pivoted incomplete Cholesky of the Gaussian kernel matrix with bandwidth
/// `sigma`; stops once every residual diagonal entry is below `tol`.
pub fn gaussian_factor(points: &Points, sigma: f64, tol: f64, max_rank: usize) -> DMatrix<f64> {
    let n = points.n();
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let mut diag = vec![1.0f64; n];
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < max_rank.min(n) {
        let (p, &dmax) = diag.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("n > 0");
        if dmax <= tol {
            break;
        }
        let piv = dmax.sqrt();
        let mut g = vec![0.0; n];
        for i in 0..n {
            if diag[i] <= 0.0 {
                continue;
            }
            let mut v = points.gaussian(i, p, gamma);
            for c in &cols {
                v -= c[i] * c[p];
            }
            g[i] = v / piv;
        }
        g[p] = piv;
        for i in 0..n {
            diag[i] = (diag[i] - g[i] * g[i]).max(0.0);
        }
        diag[p] = 0.0;
        cols.push(g);
    }
    let r = cols.len();
    DMatrix::from_fn(n, r, |i, k| cols[k][i])
}

/// Subtracts column means, so that `H K H ~ (H G)(H G)^T`.
pub fn center_columns(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in m.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    m
}

/// Exact centered factor of the delta kernel on a 0/1 indicator.
pub fn indicator_factor(indicator: &[f64]) -> DMatrix<f64> {
    let n = indicator.len() as f64;
    let mean = indicator.iter().sum::<f64>() / n;
    // The centered delta kernel on two groups is 2 (a - mean)(a - mean)^T.
    DMatrix::from_iterator(indicator.len(), 1, indicator.iter().map(|&v| std::f64::consts::SQRT_2 * (v - mean)))
}

/// Applies `eps (K_z + eps I)^{-1}` with `K_z = g g^T` to `m` via Woodbury.
fn residualize(g: &DMatrix<f64>, ridge: f64, m: &DMatrix<f64>) -> Result<DMatrix<f64>, InvarianceError> {
    if g.ncols() == 0 {
        return Ok(m.clone());
    }
    let mut a = g.tr_mul(g);
    for i in 0..a.nrows() {
        a[(i, i)] += ridge;
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| InvarianceError::Degenerate("conditioning kernel system is not positive definite".into()))?;
    let c = chol.solve(&g.tr_mul(m));
    Ok(m - g * c)
}

/// Statistic with the first two moments of its null distribution.
#[derive(Debug, Clone)]
pub struct KernelStatistic {
    pub statistic: f64,
    pub null_mean: f64,
    pub null_var: f64,
    /// Weights of the chi-square mixture approximating the null, if requested.
    pub spectrum: Option<Vec<f64>>,
}

/// Unconditional HSIC with centered factors.
pub fn hsic(fx: &DMatrix<f64>, fy: &DMatrix<f64>) -> KernelStatistic {
    let n = fx.nrows() as f64;
    let cross = fx.tr_mul(fy);
    let statistic = cross.norm_squared();
    let kx_fro = fx.tr_mul(fx).norm_squared();
    let ky_fro = fy.tr_mul(fy).norm_squared();
    let null_mean = fx.norm_squared() * fy.norm_squared() / n;
    let null_var = 2.0 * kx_fro * ky_fro / (n * n);
    KernelStatistic { statistic, null_mean, null_var, spectrum: None }
}

/// Conditional KCI statistic: both factors residualized on the conditioning
/// kernel, then the trace of the product of residual kernels.
pub fn kci_conditional(
    fx: &DMatrix<f64>,
    fy: &DMatrix<f64>,
    gz: &DMatrix<f64>,
    ridge: f64,
    want_spectrum: bool,
) -> Result<KernelStatistic, InvarianceError> {
    let n = fx.nrows();
    let px = residualize(gz, ridge, fx)?;
    let py = residualize(gz, ridge, fy)?;
    let statistic = px.tr_mul(&py).norm_squared();
    let (rx, ry) = (px.ncols(), py.ncols());
    let prod = if rx * ry <= n {
        let w = DMatrix::from_fn(n, rx * ry, |t, c| px[(t, c / ry)] * py[(t, c % ry)]);
        w.tr_mul(&w)
    } else {
        let kx = &px * px.transpose();
        let ky = &py * py.transpose();
        kx.component_mul(&ky)
    };
    let null_mean = prod.trace();
    let null_var = 2.0 * prod.norm_squared();
    let spectrum = want_spectrum.then(|| {
        let eig = prod.symmetric_eigenvalues();
        let max = eig.iter().copied().fold(0.0, f64::max);
        eig.iter().copied().filter(|&l| l > max * 1e-5).collect()
    });
    Ok(KernelStatistic { statistic, null_mean, null_var, spectrum })
}

/// Monte-Carlo p-value from a chi-square mixture with the given weights.
pub fn spectral_p_value(stat: f64, weights: &[f64], draws: usize, rng: &mut impl Rng) -> f64 {
    let chi = ChiSquared::new(1.0).expect("one degree of freedom");
    let exceed = (0..draws)
        .filter(|_| weights.iter().map(|w| w * chi.sample(rng)).sum::<f64>() >= stat)
        .count();
    (1 + exceed) as f64 / (1 + draws) as f64
}

/// Permutation p-value for HSIC, shuffling the rows of `fy`.
pub fn permutation_p_value(fx: &DMatrix<f64>, fy: &DMatrix<f64>, stat: f64, draws: usize, rng: &mut impl Rng) -> f64 {
    let n = fx.nrows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut exceed = 0;
    for _ in 0..draws {
        perm.shuffle(rng);
        let shuffled = DMatrix::from_fn(n, fy.ncols(), |r, c| fy[(perm[r], c)]);
        if fx.tr_mul(&shuffled).norm_squared() >= stat {
            exceed += 1;
        }
    }
    (1 + exceed) as f64 / (1 + draws) as f64
}

#[cfg(test)]
pub(crate) fn dense_gaussian(points: &Points, sigma: f64) -> DMatrix<f64> {
    let gamma = 1.0 / (2.0 * sigma * sigma);
    DMatrix::from_fn(points.n(), points.n(), |i, j| points.gaussian(i, j, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_points(seed: u64, n: usize, dim: usize) -> Points {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..dim).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let refs: Vec<(&[f64], f64)> = cols.iter().map(|c| (c.as_slice(), 1.0)).collect();
        Points::from_columns(&refs, "x").unwrap()
    }

    #[test]
    fn incomplete_cholesky_reconstructs_kernel() {
        let p = random_points(1, 150, 2);
        let sigma = p.median_distance(1000);
        let g = gaussian_factor(&p, sigma, 1e-10, 150);
        let dense = dense_gaussian(&p, sigma);
        let err = (&g * g.transpose() - &dense).abs().max();
        assert!(err < 1e-6, "max abs error {err}");
    }

    #[test]
    fn woodbury_matches_dense_regularized_inverse() {
        let p = random_points(2, 80, 1);
        let sigma = p.median_distance(1000);
        let g = center_columns(gaussian_factor(&p, sigma, 1e-12, 80));
        let kz = &g * g.transpose();
        let ridge = 1e-1;
        let m = DMatrix::from_fn(80, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let dense = (kz + DMatrix::identity(80, 80) * ridge).try_inverse().unwrap() * &m * ridge;
        let fast = residualize(&g, ridge, &m).unwrap();
        assert!((dense - fast).abs().max() < 1e-8);
    }

    #[test]
    fn indicator_factor_matches_centered_delta_kernel() {
        let ind = [0.0, 0.0, 1.0, 1.0, 1.0];
        let f = indicator_factor(&ind);
        let n = ind.len();
        let k = DMatrix::from_fn(n, n, |i, j| if ind[i] == ind[j] { 1.0 } else { 0.0 });
        let h = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
        let centered = &h * k * &h;
        assert!((centered - &f * f.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn conditional_moments_match_dense_formulas() {
        let p = random_points(3, 60, 1);
        let z = random_points(4, 60, 1);
        let fx = center_columns(gaussian_factor(&p, p.median_distance(100), 1e-12, 60));
        let fy = center_columns(gaussian_factor(&z, 1.0, 1e-12, 60));
        let gz = center_columns(gaussian_factor(&z, z.median_distance(100), 1e-12, 60));
        let s = kci_conditional(&fx, &fy, &gz, 1e-3, false).unwrap();
        let kz = &gz * gz.transpose();
        let rz = (kz + DMatrix::identity(60, 60) * 1e-3).try_inverse().unwrap() * 1e-3;
        let kxr = &rz * (&fx * fx.transpose()) * &rz;
        let kyr = &rz * (&fy * fy.transpose()) * &rz;
        let stat = kxr.component_mul(&kyr).sum();
        let mean: f64 = (0..60).map(|t| kxr[(t, t)] * kyr[(t, t)]).sum();
        let var = 2.0 * kxr.component_mul(&kyr).norm_squared();
        assert!((s.statistic - stat).abs() < 1e-6 * stat.abs().max(1.0));
        assert!((s.null_mean - mean).abs() < 1e-6 * mean.abs().max(1.0));
        assert!((s.null_var - var).abs() < 1e-6 * var.abs().max(1.0));
    }
}
