//! Distribution tails, column standardization and least squares.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Gamma, Normal, StudentsT};

use super::InvarianceError;

pub fn normal_two_sided(z: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    let n = Normal::standard();
    (2.0 * n.sf(z.abs())).clamp(0.0, 1.0)
}

pub fn f_sf(x: f64, df1: f64, df2: f64) -> f64 {
    FisherSnedecor::new(df1, df2).map(|f| f.sf(x.max(0.0))).unwrap_or(1.0).clamp(0.0, 1.0)
}

/// Two-sided variance-ratio p-value.
pub fn f_two_sided(x: f64, df1: f64, df2: f64) -> f64 {
    let Ok(f) = FisherSnedecor::new(df1, df2) else {
        return 1.0;
    };
    let x = x.max(0.0);
    (2.0 * f.cdf(x).min(f.sf(x))).clamp(0.0, 1.0)
}

pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    StudentsT::new(0.0, 1.0, df).map(|d| 2.0 * d.sf(t.abs())).unwrap_or(1.0).clamp(0.0, 1.0)
}

pub fn chi2_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).map(|c| c.sf(x.max(0.0))).unwrap_or(1.0).clamp(0.0, 1.0)
}

/// Upper tail of a gamma distribution with the given mean and variance.
pub fn gamma_sf_moments(x: f64, mean: f64, var: f64) -> Result<f64, InvarianceError> {
    if !(mean > 0.0 && var > 0.0 && mean.is_finite() && var.is_finite()) {
        return Err(InvarianceError::Degenerate(format!("gamma null moments mean={mean}, var={var}")));
    }
    let shape = mean * mean / var;
    let rate = mean / var;
    let g = Gamma::new(shape, rate).map_err(|e| InvarianceError::Degenerate(e.to_string()))?;
    Ok(g.sf(x.max(0.0)).clamp(0.0, 1.0))
}

/// Fisher's method for independent p-values.
pub fn fisher_combine(ps: &[f64]) -> f64 {
    let stat: f64 = ps.iter().map(|&p| -2.0 * p.max(f64::MIN_POSITIVE).ln()).sum();
    chi2_sf(stat, 2.0 * ps.len() as f64)
}

/// Mean and standard deviation, scaled to avoid overflow on heavy-tailed data.
pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    for (k, &v) in x.iter().enumerate() {
        mean += (v - mean) / (k + 1) as f64;
    }
    let scale = x.iter().fold(0.0f64, |m, &v| m.max((v - mean).abs()));
    if scale == 0.0 || !scale.is_finite() {
        return (mean, 0.0);
    }
    let ss: f64 = x.iter().map(|&v| ((v - mean) / scale).powi(2)).sum();
    (mean, scale * (ss / x.len() as f64).sqrt())
}

/// Z-scores a column; constant or non-finite columns are an error.
pub fn standardize(x: &[f64], what: &str) -> Result<Vec<f64>, InvarianceError> {
    let (mean, sd) = mean_sd(x);
    if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
        return Err(InvarianceError::Degenerate(format!("{what} is constant or non-finite")));
    }
    let out: Vec<f64> = x.iter().map(|&v| (v - mean) / sd).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(InvarianceError::Degenerate(format!("{what} overflows after standardization")));
    }
    Ok(out)
}

/// Design matrix `[1, columns...]`.
pub fn design(columns: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, columns.len() + 1, |r, c| if c == 0 { 1.0 } else { columns[c - 1][r] })
}

pub struct OlsFit {
    pub residuals: DVector<f64>,
    pub rss: f64,
}

/// Least squares via QR; a near-zero pivot means a rank-deficient design.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit, InvarianceError> {
    let (n, k) = x.shape();
    if n < k {
        return Err(InvarianceError::InsufficientSamples { needed: k, got: n });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-10 * max_diag.max(f64::MIN_POSITIVE)) {
        return Err(InvarianceError::Degenerate("rank-deficient design matrix".into()));
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| InvarianceError::Degenerate("singular triangular factor".into()))?;
    let residuals = y - x * beta;
    let rss = residuals.norm_squared();
    Ok(OlsFit { residuals, rss })
}
