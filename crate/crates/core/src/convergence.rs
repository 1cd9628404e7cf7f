//! Distances to stationarity and rate fitting.
//!
//! Total variation is the sup-over-events form, i.e. half the L1 distance.
//! A truncated tail is treated as one extra super-state, so distances are
//! exact over the tracked states and the tail masses are reported beside
//! them.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{Chain, Truncation};
use crate::dist::ReturnTimeDistribution;
use crate::error::{domain, Error, Result};
use crate::numeric::{csum, ols, Z95};
use crate::prob::ProbVector;

/// `sup_A |μ(A) − ν(A)|` over matched supports.
pub fn tv_distance(mu: &ProbVector, nu: &ProbVector) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::MismatchedSupport {
            left: mu.len(),
            right: nu.len(),
        });
    }
    let l1 = csum(
        mu.weights()
            .iter()
            .zip(nu.weights())
            .map(|(a, b)| (a - b).abs()),
    ) + (mu.tail_mass() - nu.tail_mass()).abs();
    Ok((0.5 * l1).clamp(0.0, 1.0))
}

/// `Σ_j f_j |μ_j − ν_j|`, the f-norm of `μ − ν` (`sup_{|g| ≤ f}`).
///
/// `f` has one weight per tracked state, optionally followed by one weight
/// for the tail super-state (default 1). With `f ≡ 1` this is
/// `2 · tv_distance`.
pub fn f_norm(mu: &ProbVector, nu: &ProbVector, f: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::MismatchedSupport {
            left: mu.len(),
            right: nu.len(),
        });
    }
    if f.len() != mu.len() && f.len() != mu.len() + 1 {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} states",
            f.len(),
            mu.len()
        )));
    }
    if let Some(bad) = f.iter().find(|v| !(**v >= 1.0)) {
        return Err(Error::InvalidWeights(format!("weight {bad} < 1")));
    }
    let f_tail = f.get(mu.len()).copied().unwrap_or(1.0);
    Ok(csum(
        mu.weights()
            .iter()
            .zip(nu.weights())
            .zip(f)
            .map(|((a, b), w)| w * (a - b).abs()),
    ) + f_tail * (mu.tail_mass() - nu.tail_mass()).abs())
}

/// `round(n_min · r^k)` for `points` geometrically spaced values.
pub fn geometric_grid(n_min: u64, n_max: u64, points: usize) -> Vec<u64> {
    if points <= 1 || n_min >= n_max {
        return vec![n_min];
    }
    let ratio = (n_max as f64 / n_min as f64).ln() / (points - 1) as f64;
    let mut g: Vec<u64> = (0..points)
        .map(|k| (n_min as f64 * (ratio * k as f64).exp()).round() as u64)
        .collect();
    g.dedup();
    g
}

pub fn linear_grid(n_min: u64, n_max: u64, points: usize) -> Vec<u64> {
    if points <= 1 || n_min >= n_max {
        return vec![n_min];
    }
    let step = (n_max - n_min) as f64 / (points - 1) as f64;
    let mut g: Vec<u64> = (0..points)
        .map(|k| (n_min as f64 + step * k as f64).round() as u64)
        .collect();
    g.dedup();
    g
}

/// Default fit window: 9 geometric points from 2^10 to 2^14.
pub fn default_grid() -> Vec<u64> {
    geometric_grid(1 << 10, 1 << 14, 9)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvPoint {
    pub n: u64,
    pub tv: f64,
    /// Tail mass of the stationary law beyond the truncation.
    pub stationary_tail: f64,
    /// Tail mass of the time-`n` law beyond the truncation.
    pub law_tail: f64,
}

/// `‖P(X_n ∈ ·) − π‖_TV` at every grid point.
///
/// When `trunc` is `None` the truncation at grid point `n` is `n` itself,
/// which for the age chain started at 0 loses nothing.
pub fn tv_to_stationary(
    chain: &Chain,
    init: &ProbVector,
    grid: &[u64],
    trunc: Option<Truncation>,
) -> Result<Vec<TvPoint>> {
    let n_max = grid.iter().copied().max().unwrap_or(0) as usize;
    let from_origin = init.get(0) == 1.0 && init.tail_mass() == 0.0;
    let shared_u = match chain {
        Chain::Age(a) if from_origin => Some(a.renewal(n_max)),
        _ => None,
    };
    grid.par_iter()
        .map(|&n| {
            let n_us = n as usize;
            let t = trunc.unwrap_or_else(|| Truncation::at(n_us));
            let pi = chain.stationary(t.max_state)?;
            let law = match (chain, &shared_u) {
                (Chain::Age(a), Some(u)) => a.law_from_origin(u, n_us, t.max_state),
                _ => chain.n_step_distribution(init, n_us, t)?,
            };
            Ok(TvPoint {
                n,
                tv: tv_distance(&law, &pi)?,
                stationary_tail: pi.tail_mass(),
                law_tail: law.tail_mass(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateModel {
    /// `value ≈ C · n^slope`.
    PowerLaw,
    /// `value ≈ C · ratio^n`.
    Geometric,
}

/// Least-squares rate fit over a window of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    /// Log-log slope (power law) or log ratio per step (geometric).
    pub exponent_or_log_ratio: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub n_min: u64,
    pub n_max: u64,
    pub r_squared: f64,
}

impl RateFit {
    pub fn slope(&self) -> f64 {
        self.exponent_or_log_ratio
    }

    /// `exp(log ratio)`; meaningful for geometric fits.
    pub fn ratio(&self) -> f64 {
        self.exponent_or_log_ratio.exp()
    }

    /// `exponent_or_ratio` column value: slope for power laws, ratio for
    /// geometric fits.
    pub fn exponent_or_ratio(&self) -> f64 {
        match self.model {
            RateModel::PowerLaw => self.slope(),
            RateModel::Geometric => self.ratio(),
        }
    }

    /// 95% confidence interval of the slope.
    pub fn slope_ci95(&self) -> (f64, f64) {
        let h = Z95 * self.stderr;
        (self.slope() - h, self.slope() + h)
    }
}

const MIN_FIT_POINTS: usize = 4;

fn checked(series: &[(u64, f64)]) -> Result<()> {
    if series.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: series.len(),
        });
    }
    if let Some(&(n, value)) = series.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NonPositive { n, value });
    }
    Ok(())
}

fn window(series: &[(u64, f64)]) -> (u64, u64) {
    let lo = series.iter().map(|p| p.0).min().unwrap();
    let hi = series.iter().map(|p| p.0).max().unwrap();
    (lo, hi)
}

/// OLS of `ln value` on `ln n`.
pub fn fit_power_law(series: &[(u64, f64)]) -> Result<RateFit> {
    checked(series)?;
    let x: Vec<f64> = series.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let fit = ols(&x, &y);
    let (n_min, n_max) = window(series);
    Ok(RateFit {
        model: RateModel::PowerLaw,
        exponent_or_log_ratio: fit.slope,
        intercept: fit.intercept,
        stderr: fit.slope_stderr,
        n_min,
        n_max,
        r_squared: fit.r_squared,
    })
}

/// OLS of `ln value` on `n`.
pub fn fit_geometric(series: &[(u64, f64)]) -> Result<RateFit> {
    checked(series)?;
    let x: Vec<f64> = series.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let fit = ols(&x, &y);
    let (n_min, n_max) = window(series);
    Ok(RateFit {
        model: RateModel::Geometric,
        exponent_or_log_ratio: fit.slope,
        intercept: fit.intercept,
        stderr: fit.slope_stderr,
        n_min,
        n_max,
        r_squared: fit.r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of checking `n^beta · tv(n) → 0` on a finite window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateVerdict {
    pub beta: f64,
    /// Pass iff the scaled series has a fitted slope below 0 at 95%
    /// confidence.
    pub verdict: Verdict,
    pub scaled_fit: RateFit,
    /// Vanishing predicted for `beta < alpha − 1`.
    pub predicted_vanishing: bool,
    /// Slope of `n^(2 − 2 beta) · tv(n)`, the alternative scaling read with
    /// `beta < H`.
    pub alt_scaled_slope: f64,
    /// Whether the alternative reading predicts vanishing (`beta < H`).
    pub alt_predicted_vanishing: Option<bool>,
}

/// Checks the polynomial rate for a power-law return time: for
/// `beta < alpha − 1`, `n^beta · tv(n)` must vanish.
pub fn verify_rate_theorem(
    dist: &ReturnTimeDistribution,
    beta: f64,
    series: &[(u64, f64)],
) -> Result<RateVerdict> {
    let ReturnTimeDistribution::PowerLaw { alpha } = dist else {
        return Err(domain("verify_rate_theorem", "requires a power-law return time"));
    };
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(domain("verify_rate_theorem", format!("beta = {beta}")));
    }
    let base = fit_power_law(series)?;
    // scaling by n^beta shifts the log-log slope by beta exactly
    let mut scaled_fit = base;
    scaled_fit.exponent_or_log_ratio += beta;
    let (_, hi) = scaled_fit.slope_ci95();
    let verdict = if hi < 0.0 { Verdict::Pass } else { Verdict::Fail };
    let hurst = (3.0 - alpha) / 2.0;
    let alt_predicted_vanishing = (*alpha > 1.0 && *alpha < 2.0).then_some(beta < hurst);
    Ok(RateVerdict {
        beta,
        verdict,
        scaled_fit,
        predicted_vanishing: beta < alpha - 1.0,
        alt_scaled_slope: base.slope() + 2.0 - 2.0 * beta,
        alt_predicted_vanishing,
    })
}
