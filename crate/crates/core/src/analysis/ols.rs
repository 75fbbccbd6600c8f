//! Ordinary least squares with heteroskedasticity- or cluster-robust covariance.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Relative residual norm below which a column counts as collinear.
const COLLINEARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    /// White covariance with the n / (n - k) factor.
    Hc1,
    /// Liang–Zeger sandwich; one cluster id per observation.
    /// Scaled by G/(G-1) * (n-1)/(n-k), inference on G-1 degrees of freedom.
    Cluster(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub terms: Vec<String>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub n: usize,
    pub k: usize,
    /// Number of clusters, if clustered.
    pub clusters: Option<usize>,
    pub df: f64,
    pub r_squared: f64,
}

impl OlsFit {
    pub fn coefficient(&self, term: &str) -> Option<(f64, f64)> {
        let i = self.terms.iter().position(|t| t == term)?;
        Some((self.estimates[i], self.std_errors[i]))
    }
}

/// Names of columns that are (numerically) linear combinations of earlier ones.
pub fn collinear_columns(x: &DMatrix<f64>, terms: &[String]) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for (j, term) in terms.iter().enumerate() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut v = col;
        for q in &basis {
            let d = q.dot(&v);
            v -= q * d;
        }
        // second pass for stability
        for q in &basis {
            let d = q.dot(&v);
            v -= q * d;
        }
        let r = v.norm();
        if norm == 0.0 || r <= COLLINEARITY_TOL * norm {
            bad.push(term.clone());
        } else {
            basis.push(v / r);
        }
    }
    bad
}

pub fn ols(
    y: &[f64],
    x: &DMatrix<f64>,
    terms: &[String],
    covariance: &Covariance,
) -> Result<OlsFit> {
    let (n, k) = x.shape();
    if y.len() != n || terms.len() != k {
        return Err(Error::Dimension(format!(
            "{} outcomes, {n}x{k} design, {} names",
            y.len(),
            terms.len()
        )));
    }
    if n <= k {
        return Err(Error::TooFewObservations {
            needed: k + 1,
            got: n,
        });
    }
    let bad = collinear_columns(x, terms);
    if !bad.is_empty() {
        return Err(Error::SingularDesign(bad));
    }

    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * x;
    let bread = xtx
        .cholesky()
        .ok_or_else(|| Error::SingularDesign(terms.to_vec()))?
        .inverse();
    let beta = &bread * (x.transpose() * &yv);
    let resid = &yv - x * &beta;

    let (meat, scale, groups, df) = match covariance {
        Covariance::Hc1 => {
            let mut meat = DMatrix::zeros(k, k);
            for i in 0..n {
                let xi = x.row(i).transpose();
                meat += &xi * xi.transpose() * resid[i].powi(2);
            }
            (meat, n as f64 / (n - k) as f64, None, (n - k) as f64)
        }
        Covariance::Cluster(ids) => {
            if ids.len() != n {
                return Err(Error::Dimension(format!(
                    "{} cluster ids for {n} observations",
                    ids.len()
                )));
            }
            let g_count = ids.iter().max().map_or(0, |m| m + 1);
            let mut scores = vec![DVector::<f64>::zeros(k); g_count];
            let mut used = vec![false; g_count];
            for i in 0..n {
                scores[ids[i]] += x.row(i).transpose() * resid[i];
                used[ids[i]] = true;
            }
            let g = used.iter().filter(|&&u| u).count();
            if g < 2 {
                return Err(Error::TooFewObservations { needed: 2, got: g });
            }
            let mut meat = DMatrix::zeros(k, k);
            for s in scores.iter().zip(&used).filter(|(_, &u)| u).map(|(s, _)| s) {
                meat += s * s.transpose();
            }
            let (gf, nf, kf) = (g as f64, n as f64, k as f64);
            (
                meat,
                gf / (gf - 1.0) * (nf - 1.0) / (nf - kf),
                Some(g),
                gf - 1.0,
            )
        }
    };
    let cov = &bread * meat * &bread * scale;

    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let estimates: Vec<f64> = beta.iter().copied().collect();
    // rounding can leave a zero variance slightly negative
    let std_errors: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let t_values: Vec<f64> = estimates
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| b / s)
        .collect();
    let p_values = t_values
        .iter()
        .map(|t| {
            if t.is_nan() {
                f64::NAN
            } else {
                2.0 * dist.cdf(-t.abs())
            }
        })
        .collect();

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let ssr: f64 = resid.iter().map(|r| r * r).sum();

    Ok(OlsFit {
        terms: terms.to_vec(),
        estimates,
        std_errors,
        t_values,
        p_values,
        covariance: cov,
        residuals: resid.iter().copied().collect(),
        n,
        k,
        clusters: groups,
        df,
        r_squared: if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    fn design(n: usize, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, Vec<f64>) {
        let x: DMatrix<f64> = DMatrix::from_fn(n, 3, |_, j| {
            if j == 0 {
                1.0
            } else {
                rng.gen_range(-2.0..2.0)
            }
        });
        let y = (0..n)
            .map(|i| {
                0.5 + 1.5 * x[(i, 1)] - 0.7 * x[(i, 2)]
                    + rng.gen_range(-1.0..1.0) * (1.0 + x[(i, 1)].abs())
            })
            .collect();
        (x, y)
    }

    #[test]
    fn exact_fit_recovers_coefficients() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = ols(&y, &x, &names(2), &Covariance::Hc1).unwrap();
        assert!((fit.estimates[0] - 1.0).abs() < 1e-12 && (fit.estimates[1] - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y) = design(200, &mut rng);
        let fit = ols(&y, &x, &names(3), &Covariance::Hc1).unwrap();
        let r = DVector::from_vec(fit.residuals.clone());
        for j in 0..3 {
            let col = x.column(j);
            assert!(col.dot(&r).abs() <= 1e-8 * col.norm() * r.norm());
        }
    }

    #[test]
    fn singleton_clusters_equal_hc1() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y) = design(57, &mut rng);
        let hc1 = ols(&y, &x, &names(3), &Covariance::Hc1).unwrap();
        let cl = ols(&y, &x, &names(3), &Covariance::Cluster((0..57).collect())).unwrap();
        for j in 0..3 {
            assert!((hc1.std_errors[j] - cl.std_errors[j]).abs() <= 1e-12 * hc1.std_errors[j]);
        }
        assert_eq!(cl.df, 56.0);
    }

    #[test]
    fn hc1_matches_elementwise_formula() {
        // simple regression on a centred regressor: closed-form HC1 slope variance
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let y = [0.1, 1.3, 1.9, 3.4, 3.7];
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let fit = ols(&y, &x, &names(2), &Covariance::Hc1).unwrap();
        let sxx: f64 = xs.iter().map(|v| v * v).sum();
        let num: f64 = xs
            .iter()
            .zip(&fit.residuals)
            .map(|(v, e)| v * v * e * e)
            .sum();
        let var = 5.0 / 3.0 * num / (sxx * sxx);
        assert!((fit.std_errors[1] - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn duplicated_data_keeps_estimates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, y) = design(40, &mut rng);
        let ids: Vec<usize> = (0..40).map(|i| i % 7).collect();
        let once = ols(&y, &x, &names(3), &Covariance::Cluster(ids.clone())).unwrap();
        let x2 = DMatrix::from_fn(80, 3, |i, j| x[(i % 40, j)]);
        let y2: Vec<f64> = (0..80).map(|i| y[i % 40]).collect();
        let ids2: Vec<usize> = (0..80).map(|i| ids[i % 40]).collect();
        let twice = ols(&y2, &x2, &names(3), &Covariance::Cluster(ids2)).unwrap();
        for j in 0..3 {
            assert!((once.estimates[j] - twice.estimates[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn collinearity_is_named() {
        let x = DMatrix::from_fn(6, 4, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            2 => 2.0 * i as f64 - 3.0,
            _ => 0.0,
        });
        let terms: Vec<String> = ["const", "season", "shifted", "empty"]
            .map(String::from)
            .to_vec();
        match ols(&[1.0; 6], &x, &terms, &Covariance::Hc1) {
            Err(Error::SingularDesign(cols)) => assert_eq!(cols, vec!["shifted", "empty"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn too_few_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, y) = design(10, &mut rng);
        assert!(ols(&y, &x, &names(3), &Covariance::Cluster(vec![0; 10])).is_err());
        assert!(ols(
            &y[..3],
            &x.rows(0, 3).into_owned(),
            &names(3),
            &Covariance::Hc1
        )
        .is_err());
    }
}
