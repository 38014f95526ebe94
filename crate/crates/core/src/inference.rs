//! Apparent-model design construction, rank-revealing OLS and the
//! coverage and deflation helpers built on top of it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{Sociomatrix, TraitVector};
use crate::tdist::student_t_quantile;

/// Relative tolerance for dropping a column that is (numerically) spanned by
/// the columns before it.
pub const RANK_TOL: f64 = 1e-10;

/// Coefficients of the apparent model, in design column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Coef {
    Intercept,
    Autocorr,
    Contagion,
    Outdeg,
}

impl Coef {
    pub const ALL: [Coef; 4] = [Coef::Intercept, Coef::Autocorr, Coef::Contagion, Coef::Outdeg];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Name of the model parameter the coefficient estimates.
    pub fn param_name(self) -> &'static str {
        match self {
            Coef::Intercept => "mu",
            Coef::Autocorr => "gamma",
            Coef::Contagion => "beta",
            Coef::Outdeg => "delta",
        }
    }
}

/// `n x 4` design with columns `[1, y0 - mean(y0), sum_j X_ij (y0_j - mean(y0)), D^X - mean(D^X)]`.
///
/// The contagion column is the apparent-model regressor itself; it is not
/// re-centred, so it need not sum to zero. The autocorrelation and outdegree
/// columns do.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    columns: [Vec<f64>; 4],
}

impl DesignMatrix {
    pub fn from_columns(columns: [Vec<f64>; 4]) -> Result<Self> {
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("design columns differ in length".into()));
        }
        Ok(DesignMatrix { n, columns })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn column(&self, c: Coef) -> &[f64] {
        &self.columns[c.index()]
    }

    /// `X b`, with absent coefficients treated as zero.
    pub fn predict(&self, coefficients: &[Option<f64>; 4]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (col, b) in self.columns.iter().zip(coefficients) {
            if let Some(b) = b {
                for (o, x) in out.iter_mut().zip(col) {
                    *o += b * x;
                }
            }
        }
        out
    }
}

/// Builds the apparent design from the observed network `x`.
pub fn build_design(y0: &TraitVector, x: &Sociomatrix) -> Result<DesignMatrix> {
    if y0.len() != x.n() {
        return Err(Error::InvalidInput(format!(
            "trait vector has {} entries but network has {} nodes",
            y0.len(),
            x.n()
        )));
    }
    let n = y0.len();
    let y_bar = y0.mean();
    let degrees = x.outdegrees();
    let d_bar = degrees.iter().sum::<usize>() as f64 / n as f64;

    let intercept = vec![1.0; n];
    let autocorr = y0.as_slice().iter().map(|y| y - y_bar).collect();
    let contagion = (0..n).map(|i| x.alters(i).map(|j| y0[j] - y_bar).sum()).collect();
    let outdeg = degrees.iter().map(|&d| d as f64 - d_bar).collect();
    DesignMatrix::from_columns([intercept, autocorr, contagion, outdeg])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `None` where the coefficient is not identifiable.
    pub estimates: [Option<f64>; 4],
    pub std_errors: [Option<f64>; 4],
    pub identifiable: [bool; 4],
    pub rank: usize,
    /// `n - rank`.
    pub residual_df: usize,
    pub sigma_hat: f64,
    /// Largest diagonal entry of the hat matrix.
    pub max_leverage: f64,
}

impl FitResult {
    pub fn estimate(&self, c: Coef) -> Option<f64> {
        self.estimates[c.index()]
    }

    pub fn std_error(&self, c: Coef) -> Option<f64> {
        self.std_errors[c.index()]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ordinary least squares with classical homoskedastic standard errors.
///
/// Columns are orthogonalised in the fixed order intercept, autocorrelation,
/// contagion, outdegree (Gram-Schmidt with one re-orthogonalisation pass).
/// A column is dropped and flagged non-identifiable when it is identically
/// zero or when its norm after projection falls below [`RANK_TOL`] times its
/// norm before projection.
pub fn fit_ols(d: &DesignMatrix, y1: &TraitVector) -> Result<FitResult> {
    let n = d.n();
    if y1.len() != n {
        return Err(Error::InvalidInput(format!("response has {} entries, design has {n} rows", y1.len())));
    }
    if d.columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("design contains non-finite values".into()));
    }
    let y = y1.as_slice();

    let mut q: Vec<Vec<f64>> = Vec::with_capacity(4);
    // r[k] holds the R-column of the k-th retained design column.
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(4);
    let mut retained: Vec<Coef> = Vec::with_capacity(4);
    let mut identifiable = [false; 4];

    for c in Coef::ALL {
        let mut v = d.column(c).to_vec();
        let pre = dot(&v, &v).sqrt();
        if pre == 0.0 {
            continue;
        }
        let mut coeffs = vec![0.0; q.len()];
        for _pass in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let proj = dot(qk, &v);
                coeffs[k] += proj;
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= proj * qi;
                }
            }
        }
        let post = dot(&v, &v).sqrt();
        if post <= RANK_TOL * pre {
            continue;
        }
        v.iter_mut().for_each(|vi| *vi /= post);
        coeffs.push(post);
        q.push(v);
        r.push(coeffs);
        retained.push(c);
        identifiable[c.index()] = true;
    }

    let rank = retained.len();
    if n <= rank {
        return Err(Error::DegenerateFit(format!("{n} observations cannot support rank {rank}")));
    }

    // Solve R b = Q^T y by back substitution; R is upper triangular with
    // R[i][k] = r[k][i].
    let qty: Vec<f64> = q.iter().map(|qk| dot(qk, y)).collect();
    let mut b = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = qty[i];
        for k in i + 1..rank {
            s -= r[k][i] * b[k];
        }
        b[i] = s / r[i][i];
    }

    // R^{-1}, column by column.
    let mut rinv = vec![vec![0.0; rank]; rank];
    for col in 0..rank {
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in i + 1..=col {
                s -= r[k][i] * rinv[k][col];
            }
            rinv[i][col] = s / r[i][i];
        }
    }

    let mut estimates = [None; 4];
    for (k, c) in retained.iter().enumerate() {
        estimates[c.index()] = Some(b[k]);
    }
    let fitted = d.predict(&estimates);
    let rss: f64 = y.iter().zip(&fitted).map(|(yi, fi)| (yi - fi).powi(2)).sum();
    let residual_df = n - rank;
    let sigma2 = rss / residual_df as f64;

    let mut std_errors = [None; 4];
    for (k, c) in retained.iter().enumerate() {
        let var = sigma2 * rinv[k].iter().map(|v| v * v).sum::<f64>();
        std_errors[c.index()] = Some(var.sqrt());
    }

    let max_leverage = (0..n)
        .map(|i| q.iter().map(|qk| qk[i] * qk[i]).sum::<f64>())
        .fold(0.0, f64::max);

    Ok(FitResult {
        estimates,
        std_errors,
        identifiable,
        rank,
        residual_df,
        sigma_hat: sigma2.sqrt(),
        max_leverage,
    })
}

pub fn t_statistic(estimate: f64, true_value: f64, std_error: f64) -> Result<f64> {
    if !(std_error > 0.0) {
        return Err(Error::InvalidInput(format!("standard error must be > 0, got {std_error}")));
    }
    Ok((estimate - true_value) / std_error)
}

/// Two-sided critical value `t_{1 - (1 - level)/2, df}`.
pub fn t_critical(level: f64, df: usize) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if df < 1 {
        return Err(Error::InvalidInput("coverage needs at least one residual degree of freedom".into()));
    }
    Ok(student_t_quantile(1.0 - (1.0 - level) / 2.0, df as f64))
}

/// Whether the `level` t-interval around `estimate` contains `true_value`.
pub fn covered(estimate: f64, true_value: f64, std_error: f64, df: usize, level: f64) -> Result<bool> {
    let t = t_statistic(estimate, true_value, std_error)?;
    Ok(t.abs() <= t_critical(level, df)?)
}

/// Rescales an outdegree estimate by the retained-tie fraction.
pub fn deflate_delta(delta_hat: f64, mean_outdeg_censored: f64, mean_outdeg_true: f64) -> Result<f64> {
    if !(mean_outdeg_true > 0.0) {
        return Err(Error::InvalidInput(format!("true mean outdegree must be > 0, got {mean_outdeg_true}")));
    }
    Ok(delta_hat * mean_outdeg_censored / mean_outdeg_true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tv(v: Vec<f64>) -> TraitVector {
        TraitVector::new(v).unwrap()
    }

    #[test]
    fn design_without_censoring_matches_true_model_columns() {
        let y0 = tv(vec![1.0, -2.0, 0.5, 3.0]);
        let w = Sociomatrix::from_arcs(4, [(0, 1), (0, 3), (2, 1), (3, 0)]).unwrap();
        let d = build_design(&y0, &w).unwrap();
        let y_bar = y0.mean();
        assert_eq!(d.column(Coef::Contagion)[0], (-2.0 - y_bar) + (3.0 - y_bar));
        assert_eq!(d.column(Coef::Outdeg), &[1.0, -1.0, 0.0, 0.0]);
        assert!(d.column(Coef::Autocorr).iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn equal_row_sums_zero_the_outdegree_column() {
        let y0 = tv(vec![0.3, -1.2, 2.0]);
        let x = Sociomatrix::from_arcs(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let d = build_design(&y0, &x).unwrap();
        assert!(d.column(Coef::Outdeg).iter().all(|&v| v == 0.0));
        let empty = build_design(&y0, &Sociomatrix::empty(3)).unwrap();
        assert!(empty.column(Coef::Contagion).iter().all(|&v| v == 0.0));
        assert!(empty.column(Coef::Outdeg).iter().all(|&v| v == 0.0));
    }

    fn random_design(rng: &mut ChaCha8Rng, n: usize) -> DesignMatrix {
        let cols: [Vec<f64>; 4] = [
            vec![1.0; n],
            (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
            (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
            (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
        ];
        DesignMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn exact_interpolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = random_design(&mut rng, 30);
        let truth = [Some(0.7), Some(-0.2), Some(1.3), Some(0.05)];
        let y = tv(d.predict(&truth));
        let fit = fit_ols(&d, &y).unwrap();
        for c in Coef::ALL {
            let t = truth[c.index()].unwrap();
            assert!((fit.estimate(c).unwrap() - t).abs() <= 1e-8 * t.abs());
        }
        assert_eq!(fit.rank, 4);
        assert_eq!(fit.residual_df, 26);
    }

    #[test]
    fn zero_outdegree_column_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut d = random_design(&mut rng, 20);
        d.columns[3] = vec![0.0; 20];
        let y = tv((0..20).map(|_| rng.random_range(-1.0..1.0)).collect());
        let fit = fit_ols(&d, &y).unwrap();
        assert_eq!(fit.identifiable, [true, true, true, false]);
        assert_eq!(fit.estimates[3], None);
        assert_eq!(fit.std_errors[3], None);
        assert_eq!(fit.rank, 3);
        assert_eq!(fit.residual_df, 17);
    }

    #[test]
    fn collinear_column_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut d = random_design(&mut rng, 15);
        d.columns[3] = d.columns[1].iter().zip(&d.columns[2]).map(|(a, b)| 2.0 * a - b).collect();
        let y = tv((0..15).map(|_| rng.random_range(-1.0..1.0)).collect());
        let fit = fit_ols(&d, &y).unwrap();
        assert_eq!(fit.identifiable, [true, true, true, false]);
    }

    #[test]
    fn too_few_rows_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = random_design(&mut rng, 4);
        let y = tv(vec![1.0, 2.0, 0.0, 5.0]);
        assert!(matches!(fit_ols(&d, &y), Err(Error::DegenerateFit(_))));
        let d5 = random_design(&mut rng, 5);
        assert!(fit_ols(&d5, &tv(vec![1.0, 2.0, 0.0, 5.0, 1.0])).is_ok());
    }

    #[test]
    fn non_finite_design_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut d = random_design(&mut rng, 8);
        d.columns[2][3] = f64::NAN;
        let y = tv(vec![0.0; 8]);
        assert!(matches!(fit_ols(&d, &y), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn t_statistic_and_coverage() {
        assert_eq!(t_statistic(1.5, 1.5, 0.3).unwrap(), 0.0);
        assert_eq!(t_statistic(2.0, 1.0, 0.5).unwrap(), 2.0);
        assert!(t_statistic(1.0, 0.0, 0.0).is_err());
        assert!(covered(3.0, 3.0, 1.0, 5, 0.95).unwrap());
        assert!(covered(0.0, 0.0, 1.0, 5, 0.5).unwrap());
        assert!(covered(1.959, 0.0, 1.0, 1_000_000, 0.95).unwrap());
        assert!(!covered(1.961, 0.0, 1.0, 1_000_000, 0.95).unwrap());
        assert!(covered(1.0, 0.0, 1.0, 0, 0.95).is_err());
        assert!(covered(1.0, 0.0, 1.0, 3, 1.0).is_err());
    }

    #[test]
    fn deflation() {
        assert_eq!(deflate_delta(10.0, 1.0, 10.0).unwrap(), 1.0);
        assert_eq!(deflate_delta(0.37, 4.0, 4.0).unwrap(), 0.37);
        assert!(deflate_delta(1.0, 1.0, 0.0).is_err());
    }
}
