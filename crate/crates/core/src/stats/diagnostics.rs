//! Collinearity diagnostics for the continuous predictors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::StatsError;

/// Pairs with `|ρ|` above this are flagged.
pub const RHO_THRESHOLD: f64 = 0.7;
/// Predictors with VIF above this are flagged.
pub const VIF_THRESHOLD: f64 = 5.0;

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation; `None` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::DimensionMismatch);
    }
    if x.len() < 2 {
        return Err(StatsError::EmptyInput);
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

/// Variance inflation factor of every column against all others plus an
/// intercept. Perfectly explained columns get `f64::INFINITY`.
pub fn vif(columns: &[Vec<f64>]) -> Result<Vec<f64>, StatsError> {
    let k = columns.len();
    if k < 2 {
        return Err(StatsError::DimensionMismatch);
    }
    let n = columns[0].len();
    if columns.iter().any(|c| c.len() != n) || n < k + 1 {
        return Err(StatsError::DimensionMismatch);
    }
    (0..k)
        .map(|j| {
            let y = DVector::from_column_slice(&columns[j]);
            let mut a = DMatrix::from_element(n, k, 1.0);
            for (c, col) in columns.iter().enumerate().filter(|(c, _)| *c != j) {
                let dst = if c < j { c + 1 } else { c };
                a.set_column(dst, &DVector::from_column_slice(col));
            }
            let coef = a
                .clone()
                .svd(true, true)
                .solve(&y, 1e-12)
                .map_err(|_| StatsError::RankDeficient)?;
            let resid = &y - &a * coef;
            let mean = y.mean();
            let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
            let ssr = resid.norm_squared();
            if sst == 0.0 || ssr <= 1e-12 * sst {
                return Ok(f64::INFINITY);
            }
            Ok(1.0 / (ssr / sst))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub a: String,
    pub b: String,
    pub rho: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifEntry {
    pub name: String,
    pub vif: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub correlations: Vec<Correlation>,
    pub vifs: Vec<VifEntry>,
}

impl Diagnostics {
    /// Pairwise Spearman correlations and VIFs of named predictor columns.
    pub fn compute(names: &[String], columns: &[Vec<f64>]) -> Result<Diagnostics, StatsError> {
        if names.len() != columns.len() {
            return Err(StatsError::DimensionMismatch);
        }
        let mut correlations = Vec::new();
        for i in 0..columns.len() {
            for j in i + 1..columns.len() {
                let rho = spearman(&columns[i], &columns[j])?;
                correlations.push(Correlation {
                    a: names[i].clone(),
                    b: names[j].clone(),
                    rho,
                    flagged: rho.is_some_and(|r| r.abs() > RHO_THRESHOLD),
                });
            }
        }
        let vifs = vif(columns)?
            .into_iter()
            .zip(names)
            .map(|(v, name)| VifEntry {
                name: name.clone(),
                vif: v,
                flagged: v > VIF_THRESHOLD,
            })
            .collect();
        Ok(Diagnostics { correlations, vifs })
    }

    pub fn any_flagged(&self) -> bool {
        self.correlations.iter().any(|c| c.flagged) || self.vifs.iter().any(|v| v.flagged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn monotone_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.powi(3)).collect();
        assert_eq!(spearman(&x, &y).unwrap(), Some(1.0));
        let r: Vec<f64> = y.iter().map(|v| -v).collect();
        assert_eq!(spearman(&x, &r).unwrap(), Some(-1.0));
        assert_eq!(spearman(&x, &[1.0; 5]).unwrap(), None);
    }

    #[test]
    fn orthogonal_and_duplicate_columns() {
        let a = vec![1.0, -1.0, 1.0, -1.0];
        let b = vec![1.0, 1.0, -1.0, -1.0];
        let v = vif(&[a.clone(), b]).unwrap();
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-12));
        let v = vif(&[a.clone(), a]).unwrap();
        assert!(v.iter().all(|x| x.is_infinite()));
    }
}
