//! Per-slot load vectors and their statistics.
//!
//! A [`LoadVector`] holds K non-negative per-slot throughput values
//! (KB/s, or dimensionless after mean normalization). It backs disk
//! profiles, canonical class patterns, and pod temporal state alike.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A length-K vector of non-negative per-slot load values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadVector(Vec<f64>);

impl LoadVector {
    /// Builds a vector, rejecting negative or non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::data("load vector must have at least one slot"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::data(format!("load vector entry {v} is negative or non-finite")));
        }
        Ok(LoadVector(values))
    }

    /// All-zero vector of `k` slots.
    pub fn zeros(k: usize) -> Self {
        LoadVector(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.0[slot]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Population variance via running sum / sum-of-squares.
    pub fn variance(&self) -> f64 {
        variance_of(&self.0)
    }

    /// Elementwise sum; lengths must match.
    pub fn add(&self, other: &LoadVector) -> Result<LoadVector> {
        if self.len() != other.len() {
            return Err(Error::data(format!(
                "slot count mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(LoadVector(
            self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect(),
        ))
    }

    /// In-place elementwise accumulation; lengths must match.
    pub fn accumulate(&mut self, other: &LoadVector) {
        assert_eq!(self.len(), other.len(), "slot count mismatch");
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
    }

    pub fn scale(&self, factor: f64) -> LoadVector {
        LoadVector(self.0.iter().map(|v| v * factor).collect())
    }

    /// Divides by the vector mean so the result has mean 1.
    ///
    /// Errors on zero-mean input, which carries no shape information.
    pub fn mean_normalize(&self) -> Result<LoadVector> {
        let m = self.mean();
        if m <= 0.0 {
            return Err(Error::data("cannot mean-normalize a zero-mean load vector"));
        }
        Ok(LoadVector(self.0.iter().map(|v| v / m).collect()))
    }

    /// Cosine similarity between two vectors; 0 when either has zero norm.
    pub fn cosine(&self, other: &LoadVector) -> f64 {
        let dot: f64 = self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum();
        let na: f64 = self.0.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = other.0.iter().map(|b| b * b).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    /// Max-norm distance to another vector of the same length.
    pub fn max_abs_diff(&self, other: &LoadVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<LoadVector> for Vec<f64> {
    fn from(v: LoadVector) -> Vec<f64> {
        v.0
    }
}

/// Population variance of a slice via sum and sum-of-squares.
pub fn variance_of(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let sum: f64 = values.iter().sum();
    let sumsq: f64 = values.iter().map(|v| v * v).sum();
    sumsq / k - (sum / k) * (sum / k)
}

/// Coefficient of variation (population std / mean); 0 when the mean is 0.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if mean == 0.0 {
        return 0.0;
    }
    variance_of(values).max(0.0).sqrt() / mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_negative_values() {
        assert!(LoadVector::new(vec![1.0, -0.5]).is_err());
        assert!(LoadVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(LoadVector::new(vec![]).is_err());
    }

    #[test]
    fn variance_of_constant_is_zero() {
        let v = LoadVector::new(vec![5.0; 12]).unwrap();
        assert_abs_diff_eq!(v.variance(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn variance_fixture() {
        let v = LoadVector::new(vec![1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(v.variance(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_normalize_constant_is_all_ones() {
        let v = LoadVector::new(vec![5.0; 4]).unwrap().mean_normalize().unwrap();
        for x in v.iter() {
            assert_abs_diff_eq!(*x, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_normalize_fixture() {
        let v = LoadVector::new(vec![2.0, 4.0]).unwrap().mean_normalize().unwrap();
        assert_abs_diff_eq!(v.get(0), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.get(1), 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_normalize_rejects_zero_mean() {
        assert!(LoadVector::zeros(4).mean_normalize().is_err());
    }

    #[test]
    fn cov_zero_mean_is_zero() {
        assert_eq!(coefficient_of_variation(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn cov_fixture() {
        // means {1, 3}: std 1, mean 2
        assert_abs_diff_eq!(coefficient_of_variation(&[1.0, 3.0]), 0.5, epsilon = 1e-12);
    }
}
