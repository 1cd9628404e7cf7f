use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::csum;

const MASS_TOL: f64 = 1e-12;

/// Probability vector over states `0..=N` plus the mass assigned beyond `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector {
    weights: Vec<f64>,
    tail_mass: f64,
}

impl ProbVector {
    /// Builds a vector, checking nonnegativity and `Σ weights + tail = 1`.
    pub fn new(weights: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidProbVector("no states".into()));
        }
        if let Some((j, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::InvalidProbVector(format!("weight {w} at state {j}")));
        }
        if !(tail_mass.is_finite() && tail_mass >= 0.0) {
            return Err(Error::InvalidProbVector(format!("tail mass {tail_mass}")));
        }
        let total = csum(weights.iter().copied()) + tail_mass;
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidProbVector(format!("total mass {total}")));
        }
        Ok(Self { weights, tail_mass })
    }

    /// Weights with tail mass set to `1 − Σ weights` (clamped at 0).
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let tail = (1.0 - csum(weights.iter().copied())).max(0.0);
        Self::new(weights, tail)
    }

    /// Skips validation; callers guarantee the invariants up to rounding.
    pub(crate) fn from_parts(weights: Vec<f64>, tail_mass: f64) -> Self {
        Self { weights, tail_mass }
    }

    /// Point mass at `state` within a support of `len` states.
    pub fn point_mass(state: usize, len: usize) -> Result<Self> {
        if state >= len {
            return Err(Error::InvalidProbVector(format!(
                "state {state} outside support of {len} states"
            )));
        }
        let mut w = vec![0.0; len];
        w[state] = 1.0;
        Ok(Self {
            weights: w,
            tail_mass: 0.0,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Number of explicitly tracked states (`N + 1`).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, state: usize) -> f64 {
        self.weights.get(state).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        csum(self.weights.iter().copied()) + self.tail_mass
    }

    /// Largest state carrying positive weight.
    pub fn max_state(&self) -> Option<usize> {
        self.weights.iter().rposition(|&w| w > 0.0)
    }

    /// Re-truncates to `len` states, moving dropped weight into the tail or
    /// padding with zeros.
    pub fn resized(&self, len: usize) -> Self {
        if len >= self.weights.len() {
            let mut w = self.weights.clone();
            w.resize(len, 0.0);
            Self {
                weights: w,
                tail_mass: self.tail_mass,
            }
        } else {
            let dropped = csum(self.weights[len..].iter().copied());
            Self {
                weights: self.weights[..len].to_vec(),
                tail_mass: self.tail_mass + dropped,
            }
        }
    }
}
