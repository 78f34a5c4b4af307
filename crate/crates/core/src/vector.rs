use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Arrival rates in packets per slot, one per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateVector(Vec<f64>);

/// Contention probabilities, one per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlVector(Vec<f64>);

fn check_dimension(len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::DimensionTooSmall(len));
    }
    Ok(())
}

impl RateVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dimension(coords.len())?;
        for (index, &value) in coords.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::OutOfDomain {
                    index,
                    value,
                    domain: "[0, inf)",
                });
            }
        }
        Ok(Self(coords))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    /// Unit vector `eᵢ`.
    pub fn unit(n: usize, i: usize) -> Result<Self> {
        let mut v = vec![0.0; n];
        if i >= n {
            return Err(Error::InvalidArgument(format!("index {i} out of range for n = {n}")));
        }
        v[i] = 1.0;
        Self::new(v)
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// True when `x ≥ 0` and `Σ xᵢ ≤ 1 + slack`.
    pub fn in_simplex(&self, slack: f64) -> bool {
        self.sum() <= 1.0 + slack
    }
}

impl ControlVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dimension(coords.len())?;
        for (index, &value) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfDomain {
                    index,
                    value,
                    domain: "[0, 1]",
                });
            }
        }
        Ok(Self(coords))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn unit(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::InvalidArgument(format!("index {i} out of range for n = {n}")));
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self::new(v)
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `ρ(p) = ∏ (1 − pᵢ)`, the probability that nobody transmits.
    pub fn idle_probability(&self) -> f64 {
        self.0.iter().map(|p| 1.0 - p).product()
    }

    /// `λ p + (1 − λ) q`.
    pub fn convex_combination(&self, other: &ControlVector, lambda: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let coords = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (lambda * a + (1.0 - lambda) * b).clamp(0.0, 1.0))
            .collect();
        Ok(Self(coords))
    }
}

impl Deref for RateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for ControlVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
