//! Chain models and their exact finite-horizon laws.
//!
//! The countable-state model is the age (backward recurrence time) chain:
//! from age `j` it jumps to `0` with the hazard `q_j` of the return-time law
//! and otherwise moves to `j + 1`. Its return time to `0` has exactly the
//! configured law, its `n`-step return probabilities are the renewal
//! sequence `u_n`, and starting from `0` the time-`n` law is
//! `P(X_n = j) = u_{n−j} · P(T > j)`.
//!
//! Explicit finite chains are handled by vector-matrix products.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dist::ReturnTimeDistribution;
use crate::error::{Error, Result};
use crate::numeric::{csum, CompensatedSum};
use crate::prob::ProbVector;

/// `u_0..=u_N` with `u_0 = 1`, `u_n = Σ_{k=1}^n P(T = k) u_{n−k}`.
///
/// Direct O(N²) recursion with compensated accumulation.
pub fn renewal_sequence(dist: &ReturnTimeDistribution, n_max: usize) -> Vec<f64> {
    let f: Vec<f64> = (1..=n_max as u64).map(|k| dist.pmf_unchecked(k)).collect();
    let mut u = Vec::with_capacity(n_max + 1);
    u.push(1.0);
    for n in 1..=n_max {
        let mut acc = CompensatedSum::new();
        // f[k-1] = P(T = k), paired with u[n-k]
        for (fk, un) in f[..n].iter().zip(u.iter().rev()) {
            acc.add(fk * un);
        }
        u.push(acc.value().clamp(0.0, 1.0));
    }
    u
}

/// State-space truncation: states `0..=max_state` are tracked explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub max_state: usize,
    /// Largest tolerated mass whose location the truncation cannot resolve.
    pub tolerance: f64,
}

impl Truncation {
    pub const DEFAULT_TOLERANCE: f64 = 1e-10;

    pub fn at(max_state: usize) -> Self {
        Self {
            max_state,
            tolerance: Self::DEFAULT_TOLERANCE,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// Age chain driven by a return-time distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgeChain {
    return_time: ReturnTimeDistribution,
}

impl AgeChain {
    /// Validates the law and rejects periodic chains.
    pub fn new(return_time: ReturnTimeDistribution) -> Result<Self> {
        return_time.validate()?;
        let g = return_time.support_gcd();
        if g != 1 {
            return Err(Error::InvalidChain(format!(
                "return-time support has period {g}; chain is periodic"
            )));
        }
        Ok(Self { return_time })
    }

    pub fn return_time(&self) -> &ReturnTimeDistribution {
        &self.return_time
    }

    /// Number of states when the support is bounded.
    pub fn state_count(&self) -> Option<usize> {
        self.return_time.max_support().map(|k| k as usize)
    }

    pub fn hazard(&self, j: usize) -> Result<f64> {
        self.return_time.hazard(j as u64)
    }

    pub fn renewal(&self, n_max: usize) -> Vec<f64> {
        renewal_sequence(&self.return_time, n_max)
    }

    pub fn mean_return_time(&self) -> f64 {
        self.return_time.mean_return_time()
    }

    fn positive_recurrent_mean(&self) -> Result<f64> {
        let m = self.mean_return_time();
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::NullRecurrent)
        }
    }

    /// `π_j = P(T > j) / E[T]`.
    pub fn stationary_prob(&self, j: usize) -> Result<f64> {
        Ok(self.return_time.ccdf(j as u64) / self.positive_recurrent_mean()?)
    }

    pub fn stationary(&self, max_state: usize) -> Result<ProbVector> {
        let mean = self.positive_recurrent_mean()?;
        let weights: Vec<f64> = (0..=max_state as u64)
            .map(|j| self.return_time.ccdf(j) / mean)
            .collect();
        let tail = (self.return_time.ccdf_tail_sum(max_state as u64) / mean).max(0.0);
        Ok(ProbVector::from_parts(weights, tail))
    }

    /// Law at time `n` from the point mass at age 0, truncated at
    /// `max_state`; mass on ages beyond the truncation is the tail.
    pub fn law_from_origin(&self, u: &[f64], n: usize, max_state: usize) -> ProbVector {
        assert!(u.len() > n, "renewal sequence too short");
        let top = n.min(max_state);
        let mut weights = vec![0.0; max_state + 1];
        for (j, w) in weights.iter_mut().enumerate().take(top + 1) {
            *w = u[n - j] * self.return_time.ccdf(j as u64);
        }
        let tail = if n > max_state {
            csum((max_state + 1..=n).map(|j| u[n - j] * self.return_time.ccdf(j as u64)))
        } else {
            0.0
        };
        ProbVector::from_parts(weights, tail)
    }

    /// One transition applied to a truncated law. Mass leaving the last
    /// tracked state joins the tail; tail mass stays unresolved.
    pub fn step(&self, mu: &ProbVector) -> ProbVector {
        let w = mu.weights();
        let n = w.len();
        let mut next = vec![0.0; n];
        let mut to_zero = CompensatedSum::new();
        let mut overflow = 0.0;
        let last = w.iter().rposition(|&x| x > 0.0);
        if let Some(last) = last {
            for (j, &wj) in w.iter().enumerate().take(last + 1) {
                if wj == 0.0 {
                    continue;
                }
                // unreachable ages carry no weight, so hazard is defined
                let q = self.hazard(j).unwrap_or(1.0);
                to_zero.add(wj * q);
                let stay = wj * (1.0 - q);
                if j + 1 < n {
                    next[j + 1] = stay;
                } else {
                    overflow += stay;
                }
            }
        }
        next[0] = to_zero.value();
        ProbVector::from_parts(next, mu.tail_mass() + overflow)
    }

    /// `p^d_{ij}` for `d = 0..=n`.
    ///
    /// Either no renewal happens (only possible when `j = i + d`), or the
    /// first renewal occurs at time `t` and the chain then needs age `j`
    /// at time `d`: `Σ_t P(T = i+t | T > i) · u_{d−t−j} · P(T > j)`.
    pub fn transition_series(&self, i: usize, j: usize, n: usize) -> Result<Vec<f64>> {
        let d = &self.return_time;
        let ci = d.ccdf(i as u64);
        if ci <= 0.0 {
            return Err(Error::ZeroTail { state: i as u64 });
        }
        let u = self.renewal(n);
        let cj = d.ccdf(j as u64);
        if i == 0 && j == 0 {
            return Ok(u);
        }
        let first: Vec<f64> = (1..=n as u64)
            .map(|t| d.pmf_unchecked(i as u64 + t) / ci)
            .collect();
        let out = (0..=n)
            .map(|step| {
                let direct = if j == i + step { cj / ci } else { 0.0 };
                let mut acc = CompensatedSum::new();
                for t in 1..=step.saturating_sub(j) {
                    acc.add(first[t - 1] * u[step - t - j]);
                }
                (direct + cj * acc.value()).max(0.0)
            })
            .collect();
        Ok(out)
    }
}

/// Row-stochastic matrix on a finite state space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteChain {
    matrix: Vec<Vec<f64>>,
}

const ROW_TOL: f64 = 1e-12;

impl FiniteChain {
    /// Validates stochasticity and requires a single aperiodic recurrent
    /// class (some power of the matrix has a strictly positive column).
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let s = matrix.len();
        if s == 0 {
            return Err(Error::InvalidChain("empty matrix".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != s {
                return Err(Error::InvalidChain(format!(
                    "row {i} has {} entries, expected {s}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
                return Err(Error::InvalidChain(format!(
                    "row {i} has entry {v} outside [0, 1]"
                )));
            }
            let total = csum(row.iter().copied());
            if (total - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidChain(format!("row {i} sums to {total}")));
            }
        }
        if !has_positive_column_power(&matrix) {
            return Err(Error::InvalidChain(
                "chain is periodic or has more than one recurrent class".into(),
            ));
        }
        Ok(Self { matrix })
    }

    /// Parses one row per line of whitespace-separated probabilities.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno + 1,
                        msg: format!("{tok:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            line: 0,
            msg: format!("{}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn size(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i]
    }

    /// Solves `πP = π`, `Σπ = 1`.
    pub fn stationary(&self) -> Result<ProbVector> {
        let s = self.size();
        let mut a = DMatrix::<f64>::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                // (Pᵀ − I)
                a[(j, i)] = self.matrix[i][j] - if i == j { 1.0 } else { 0.0 };
            }
        }
        for j in 0..s {
            a[(s - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(s);
        b[s - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::InvalidChain("singular stationary system".into()))?;
        let mut w: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
        let total = csum(w.iter().copied());
        w.iter_mut().for_each(|v| *v /= total);
        Ok(ProbVector::from_parts(w, 0.0))
    }

    pub fn step(&self, mu: &ProbVector) -> ProbVector {
        let s = self.size();
        let mut next = vec![CompensatedSum::new(); s];
        for (i, &wi) in mu.weights().iter().enumerate().take(s) {
            if wi == 0.0 {
                continue;
            }
            for (acc, &p) in next.iter_mut().zip(&self.matrix[i]) {
                acc.add(wi * p);
            }
        }
        ProbVector::from_parts(next.iter().map(|a| a.value()).collect(), 0.0)
    }

    pub fn transition_series(&self, i: usize, j: usize, n: usize) -> Result<Vec<f64>> {
        let s = self.size();
        if i >= s || j >= s {
            return Err(Error::InvalidChain(format!("state outside 0..{s}")));
        }
        let mut mu = ProbVector::point_mass(i, s)?;
        let mut out = Vec::with_capacity(n + 1);
        out.push(mu.get(j));
        for _ in 0..n {
            mu = self.step(&mu);
            out.push(mu.get(j));
        }
        Ok(out)
    }
}

fn has_positive_column_power(m: &[Vec<f64>]) -> bool {
    let s = m.len();
    let adj: Vec<Vec<bool>> = m
        .iter()
        .map(|r| r.iter().map(|&p| p > 0.0).collect())
        .collect();
    let mut reach = adj.clone();
    // exponent of a primitive s×s pattern is at most (s−1)² + 1
    let limit = (s - 1) * (s - 1) + 1;
    for _ in 0..limit.max(1) {
        if (0..s).any(|j| (0..s).all(|i| reach[i][j])) {
            return true;
        }
        let mut next = vec![vec![false; s]; s];
        for i in 0..s {
            for k in 0..s {
                if reach[i][k] {
                    for j in 0..s {
                        next[i][j] |= adj[k][j];
                    }
                }
            }
        }
        reach = next;
    }
    (0..s).any(|j| (0..s).all(|i| reach[i][j]))
}

/// Either chain kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Chain {
    Age(AgeChain),
    Finite(FiniteChain),
}

impl From<AgeChain> for Chain {
    fn from(c: AgeChain) -> Self {
        Chain::Age(c)
    }
}

impl From<FiniteChain> for Chain {
    fn from(c: FiniteChain) -> Self {
        Chain::Finite(c)
    }
}

impl Chain {
    pub fn age(dist: ReturnTimeDistribution) -> Result<Self> {
        Ok(Chain::Age(AgeChain::new(dist)?))
    }

    pub fn finite(matrix: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Chain::Finite(FiniteChain::new(matrix)?))
    }

    /// Number of tracked states for a truncation at `max_state`.
    pub fn support_len(&self, max_state: usize) -> usize {
        match self {
            Chain::Age(_) => max_state + 1,
            Chain::Finite(f) => f.size(),
        }
    }

    /// Stationary law. `max_state` is ignored for finite chains.
    pub fn stationary(&self, max_state: usize) -> Result<ProbVector> {
        match self {
            Chain::Age(a) => a.stationary(max_state),
            Chain::Finite(f) => f.stationary(),
        }
    }

    pub fn stationary_prob(&self, i: usize) -> Result<f64> {
        match self {
            Chain::Age(a) => a.stationary_prob(i),
            Chain::Finite(f) => Ok(f.stationary()?.get(i)),
        }
    }

    pub fn step(&self, mu: &ProbVector) -> ProbVector {
        match self {
            Chain::Age(a) => a.step(mu),
            Chain::Finite(f) => f.step(mu),
        }
    }

    /// Exact law of `X_n` given `X_0 ~ init`.
    ///
    /// Age chains started from the point mass at 0 use the renewal
    /// sequence; every other case propagates one step at a time. Tail mass
    /// produced by propagation is unresolved, and exceeding the tolerance
    /// is an error.
    pub fn n_step_distribution(
        &self,
        init: &ProbVector,
        n: usize,
        trunc: Truncation,
    ) -> Result<ProbVector> {
        let len = self.support_len(trunc.max_state);
        let init = init.resized(len);
        if let Chain::Age(a) = self {
            if init.get(0) == 1.0 && init.tail_mass() == 0.0 {
                let u = a.renewal(n);
                return Ok(a.law_from_origin(&u, n, trunc.max_state));
            }
        }
        let mut mu = init;
        for _ in 0..n {
            mu = self.step(&mu);
        }
        if mu.tail_mass() > trunc.tolerance {
            return Err(Error::TruncationTooSmall {
                states: len,
                lost: mu.tail_mass(),
                tolerance: trunc.tolerance,
            });
        }
        Ok(mu)
    }

    /// `p^d_{ij}` for `d = 0..=n`.
    pub fn transition_series(&self, i: usize, j: usize, n: usize) -> Result<Vec<f64>> {
        match self {
            Chain::Age(a) => a.transition_series(i, j, n),
            Chain::Finite(f) => f.transition_series(i, j, n),
        }
    }

    /// `Q^r_{ij} = Σ_{s=1}^r (p^s_{ij} − π_j)` for `r = 0..=n`.
    pub fn q_sum_series(&self, i: usize, j: usize, n: usize) -> Result<Vec<f64>> {
        let pi_j = self.stationary_prob(j)?;
        let p = self.transition_series(i, j, n)?;
        let mut acc = CompensatedSum::new();
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        for ps in &p[1..] {
            acc.add(ps - pi_j);
            out.push(acc.value());
        }
        Ok(out)
    }

    pub fn q_sum(&self, i: usize, j: usize, n: usize) -> Result<f64> {
        Ok(*self.q_sum_series(i, j, n)?.last().unwrap())
    }

    /// Stationary autocovariance of `1{X_k = i}` at lags `0..=n`:
    /// `γ(d) = π_i (p^d_ii − π_i)`.
    pub fn autocovariance_series(&self, i: usize, n: usize) -> Result<Vec<f64>> {
        let pi = self.stationary_prob(i)?;
        let p = self.transition_series(i, i, n)?;
        Ok(p.iter().map(|pd| pi * (pd - pi)).collect())
    }

    pub fn autocovariance(&self, i: usize, d: usize) -> Result<f64> {
        Ok(self.autocovariance_series(i, d)?[d])
    }
}
