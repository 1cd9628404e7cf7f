//! Return-time distributions.
//!
//! Every chain in this crate is driven by the law of the return time `T`
//! to a reference state. Three families are supported:
//!
//! * `PowerLaw(alpha)`: `P(T > n) = (n + 1)^(−alpha)` for `n ≥ 0`. The tail
//!   is an exact power law with constant 1, so pmf, hazard and stationary
//!   weights all have closed forms.
//! * `Geometric(p)`: `P(T > n) = (1 − p)^n`, memoryless.
//! * `FiniteSupport(pmf)`: `P(T = k) = pmf[k − 1]` for `k = 1..=K`.
//!
//! `1 < alpha < 2` is the long-range-dependent regime: finite mean, infinite
//! variance. Values outside that window are accepted for contrast runs.

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{csum, power_tail_sum, Bounded};

/// Parametric law of the return time `T ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReturnTimeDistribution {
    PowerLaw { alpha: f64 },
    Geometric { p: f64 },
    FiniteSupport { pmf: Vec<f64> },
}

/// Convergence class of the chain driven by a return-time law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ErgodicityClass {
    Geometric,
    /// Total variation decays like `n^(−rate_exponent)`.
    Polynomial { rate_exponent: f64 },
    NullRecurrent,
}

/// Verdict on `Σ_n n^beta P(T > n) < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// `H = (3 − alpha)/2`, valid only in the long-range-dependent window
/// `1 < alpha < 2`.
pub fn hurst_from_moment_index(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(domain(
            "hurst_from_moment_index",
            format!("moment index {alpha} outside (1, 2)"),
        ));
    }
    Ok((3.0 - alpha) / 2.0)
}

impl ReturnTimeDistribution {
    pub fn power_law(alpha: f64) -> Result<Self> {
        let d = Self::PowerLaw { alpha };
        d.validate()?;
        Ok(d)
    }

    pub fn geometric(p: f64) -> Result<Self> {
        let d = Self::Geometric { p };
        d.validate()?;
        Ok(d)
    }

    pub fn finite_support(pmf: Vec<f64>) -> Result<Self> {
        let d = Self::FiniteSupport { pmf };
        d.validate()?;
        Ok(d)
    }

    /// Checks parameter ranges. Deserialized values must pass through this.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PowerLaw { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "power law needs alpha > 0, got {alpha}"
                    )));
                }
            }
            Self::Geometric { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "geometric needs p in (0, 1), got {p}"
                    )));
                }
            }
            Self::FiniteSupport { pmf } => {
                if pmf.is_empty() {
                    return Err(Error::InvalidDistribution("empty pmf".into()));
                }
                if let Some(bad) = pmf.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(Error::InvalidDistribution(format!(
                        "pmf entry {bad} is not a probability"
                    )));
                }
                let total = csum(pmf.iter().copied());
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidDistribution(format!(
                        "pmf sums to {total}, not 1"
                    )));
                }
                if *pmf.last().unwrap() == 0.0 {
                    return Err(Error::InvalidDistribution(
                        "last pmf entry must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Largest value of `T` with positive probability, if bounded.
    pub fn max_support(&self) -> Option<u64> {
        match self {
            Self::FiniteSupport { pmf } => Some(pmf.len() as u64),
            _ => None,
        }
    }

    /// Greatest common divisor of the support (1 for unbounded families).
    pub fn support_gcd(&self) -> u64 {
        match self {
            Self::FiniteSupport { pmf } => pmf
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(i, _)| i as u64 + 1)
                .fold(0, gcd),
            _ => 1,
        }
    }

    /// `P(T = k)`, `k ≥ 1`.
    pub fn pmf(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(domain("pmf", "return times start at 1"));
        }
        Ok(self.pmf_unchecked(k))
    }

    pub(crate) fn pmf_unchecked(&self, k: u64) -> f64 {
        match self {
            Self::PowerLaw { alpha } => {
                // k^(−α) · (1 − (1 + 1/k)^(−α)), cancellation-free
                let kf = k as f64;
                kf.powf(-alpha) * -(-alpha * (1.0 / kf).ln_1p()).exp_m1()
            }
            Self::Geometric { p } => p * (1.0 - p).powf((k - 1) as f64),
            Self::FiniteSupport { pmf } => pmf.get(k as usize - 1).copied().unwrap_or(0.0),
        }
    }

    /// `P(T > n)`.
    pub fn ccdf(&self, n: u64) -> f64 {
        match self {
            Self::PowerLaw { alpha } => ((n + 1) as f64).powf(-alpha),
            Self::Geometric { p } => (1.0 - p).powf(n as f64),
            Self::FiniteSupport { pmf } => {
                if n == 0 {
                    1.0
                } else {
                    csum(pmf.iter().skip(n as usize).copied())
                }
            }
        }
    }

    /// Hazard `q_j = P(T = j + 1) / P(T > j)`.
    pub fn hazard(&self, j: u64) -> Result<f64> {
        match self {
            Self::PowerLaw { alpha } => {
                // 1 − ((j+1)/(j+2))^α
                Ok(-(alpha * (-1.0 / (j as f64 + 2.0)).ln_1p()).exp_m1())
            }
            Self::Geometric { p } => Ok(*p),
            Self::FiniteSupport { pmf } => {
                let tail = self.ccdf(j);
                if tail <= 0.0 || j as usize >= pmf.len() {
                    return Err(Error::ZeroTail { state: j });
                }
                if j as usize + 1 == pmf.len() {
                    return Ok(1.0);
                }
                Ok((pmf[j as usize] / tail).clamp(0.0, 1.0))
            }
        }
    }

    /// `E[T] = Σ_{n ≥ 0} P(T > n)`, `+∞` when divergent.
    pub fn mean_return_time(&self) -> f64 {
        self.mean_return_time_bounded().value
    }

    /// Mean return time with its absolute error bound.
    pub fn mean_return_time_bounded(&self) -> Bounded {
        match self {
            Self::PowerLaw { alpha } if *alpha <= 1.0 => Bounded {
                value: f64::INFINITY,
                bound: 0.0,
            },
            Self::PowerLaw { alpha } => power_tail_sum(*alpha, 1),
            Self::Geometric { p } => Bounded {
                value: 1.0 / p,
                bound: 0.0,
            },
            Self::FiniteSupport { pmf } => Bounded {
                value: csum(pmf.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w)),
                bound: 0.0,
            },
        }
    }

    /// `Σ_{n > N} P(T > n)`: the un-normalized stationary tail beyond `N`.
    pub(crate) fn ccdf_tail_sum(&self, n_max: u64) -> f64 {
        match self {
            Self::PowerLaw { alpha } if *alpha <= 1.0 => f64::INFINITY,
            // Σ_{n > N} (n+1)^(−α) = Σ_{k ≥ N+2} k^(−α)
            Self::PowerLaw { alpha } => power_tail_sum(*alpha, n_max + 2).value,
            Self::Geometric { p } => (1.0 - p).powf((n_max + 1) as f64) / p,
            Self::FiniteSupport { pmf } => {
                csum(((n_max + 1) as usize..pmf.len()).map(|n| self.ccdf(n as u64)))
            }
        }
    }

    /// `sup{δ : E[T^δ] < ∞}`.
    pub fn moment_index(&self) -> f64 {
        match self {
            Self::PowerLaw { alpha } => *alpha,
            _ => f64::INFINITY,
        }
    }

    /// Decides whether `Σ_n n^beta P(T > n)` converges.
    ///
    /// All supported families are decided analytically, so `Inconclusive`
    /// is never returned for them.
    pub fn series_condition(&self, beta: f64, horizon: u64) -> Result<SeriesVerdict> {
        if horizon < 100 {
            return Err(domain("series_condition", "horizon must be at least 100"));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(domain("series_condition", format!("beta = {beta}")));
        }
        Ok(match self {
            Self::PowerLaw { alpha } => {
                if beta - alpha < -1.0 {
                    SeriesVerdict::Convergent
                } else {
                    SeriesVerdict::Divergent
                }
            }
            Self::Geometric { .. } | Self::FiniteSupport { .. } => SeriesVerdict::Convergent,
        })
    }

    pub fn classify_ergodicity(&self) -> ErgodicityClass {
        match self {
            // pgf radius 1/(1−p) > 1, or entire for bounded support
            Self::Geometric { .. } | Self::FiniteSupport { .. } => ErgodicityClass::Geometric,
            Self::PowerLaw { alpha } if *alpha > 1.0 => ErgodicityClass::Polynomial {
                rate_exponent: alpha - 1.0,
            },
            Self::PowerLaw { .. } => ErgodicityClass::NullRecurrent,
        }
    }

    /// Inverse-CDF map from a uniform `u ∈ [0, 1)` to a return time.
    pub fn return_time_from_uniform(&self, u: f64) -> u64 {
        self.residual_from_uniform(0, u)
    }

    /// Inverse-CDF map for the residual time to the next return, given that
    /// `age` steps have already elapsed without one: law of `T − age` given
    /// `T > age`.
    pub fn residual_from_uniform(&self, age: u64, u: f64) -> u64 {
        match self {
            Self::PowerLaw { alpha } => {
                // smallest t with (age+t+1) > (age+1)(1−u)^(−1/α)
                let v = (age + 1) as f64 * (-(-u).ln_1p() / alpha).exp();
                let t = v.floor() - age as f64;
                saturate(t)
            }
            Self::Geometric { p } => {
                let t = ((-u).ln_1p() / (-p).ln_1p()).floor() + 1.0;
                saturate(t)
            }
            Self::FiniteSupport { pmf } => {
                let target = u * self.ccdf(age);
                let mut acc = 0.0;
                let start = age as usize;
                for (i, w) in pmf.iter().enumerate().skip(start) {
                    acc += w;
                    if acc > target {
                        return (i - start + 1) as u64;
                    }
                }
                (pmf.len() - start) as u64
            }
        }
    }

    pub fn sample_return_time<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.return_time_from_uniform(rng.random::<f64>())
    }

    pub fn sample_residual<R: Rng + ?Sized>(&self, age: u64, rng: &mut R) -> u64 {
        self.residual_from_uniform(age, rng.random::<f64>())
    }
}

fn saturate(t: f64) -> u64 {
    if t >= u64::MAX as f64 || t.is_nan() {
        u64::MAX
    } else {
        (t as u64).max(1)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
