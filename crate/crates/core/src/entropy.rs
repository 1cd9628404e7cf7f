//! Entropy rate, conditional entropies and excess-entropy partial sums.
//!
//! For a Markov chain the conditional entropy given the whole past reduces
//! to an expectation of per-state transition entropies `h_j` under the law
//! of the previous state:
//!
//! ```text
//! H[X_n | X_{n−1}, …, X_0] = Σ_j P(X_{n−1} = j) h_j
//! H(𝒳)                    = Σ_j π_j h_j
//! E(n)                     = Σ_{r=1}^{n} (H[X_r | …] − H(𝒳))
//! ```
//!
//! For the age chain `h_j` is the binary entropy of the hazard `q_j`.
//! All values are in nats.

use serde::Serialize;

use crate::chain::{AgeChain, Chain, Truncation};
use crate::dist::ReturnTimeDistribution;
use crate::error::{Error, Result};
use crate::numeric::{binary_entropy, csum, smooth_tail_sum, xlogx_neg, Bounded, CompensatedSum};
use crate::prob::ProbVector;

/// Required accuracy of the certified entropy-rate tail.
pub const RATE_TAIL_TOLERANCE: f64 = 1e-10;

/// States summed directly before the power-law tail is taken analytically.
const RATE_DIRECT_STATES: u64 = 1 << 18;

/// Conditional entropies, entropy rate and excess-entropy partial sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropySeries {
    pub horizon: usize,
    /// `values[r − 1] = H[X_r | X_{r−1}, …, X_0]`, `r = 1..=horizon`.
    pub values: Vec<f64>,
    pub rate: f64,
    /// `excess_partials[r − 1] = E(r)`.
    pub excess_partials: Vec<f64>,
}

impl EntropySeries {
    fn from_values(values: Vec<f64>, rate: f64) -> Self {
        let mut acc = CompensatedSum::new();
        let excess_partials = values
            .iter()
            .map(|v| {
                acc.add(v - rate);
                acc.value()
            })
            .collect();
        Self {
            horizon: values.len(),
            values,
            rate,
            excess_partials,
        }
    }

    pub fn conditional_entropy(&self, r: usize) -> f64 {
        self.values[r - 1]
    }

    pub fn excess(&self, r: usize) -> f64 {
        self.excess_partials[r - 1]
    }
}

/// `−Σ_j p_ij ln p_ij` for row `i`.
pub fn state_entropy(chain: &Chain, i: usize) -> Result<f64> {
    match chain {
        Chain::Age(a) => Ok(binary_entropy(a.hazard(i)?)),
        Chain::Finite(f) => {
            if i >= f.size() {
                return Err(Error::InvalidChain(format!("no state {i}")));
            }
            Ok(csum(f.row(i).iter().map(|&p| xlogx_neg(p))))
        }
    }
}

/// `h_j` for `j` in `0..len`; unreachable age-chain states get 0.
fn state_entropies(chain: &Chain, len: usize) -> Vec<f64> {
    (0..len)
        .map(|j| state_entropy(chain, j).unwrap_or(0.0))
        .collect()
}

/// Largest per-state entropy over all states, tracked or not.
fn entropy_sup(chain: &Chain) -> f64 {
    match chain {
        Chain::Age(_) => std::f64::consts::LN_2,
        Chain::Finite(f) => (f.size() as f64).ln(),
    }
}

/// Entropy rate `Σ_j π_j h_j` with its certified error bound.
pub fn entropy_rate(chain: &Chain) -> Result<Bounded> {
    match chain {
        Chain::Finite(f) => {
            let pi = f.stationary()?;
            let h = state_entropies(chain, f.size());
            Ok(Bounded {
                value: csum(pi.weights().iter().zip(&h).map(|(p, h)| p * h)),
                bound: 0.0,
            })
        }
        Chain::Age(a) => age_entropy_rate(a),
    }
}

fn age_entropy_rate(chain: &AgeChain) -> Result<Bounded> {
    let d = chain.return_time();
    let mean = d.mean_return_time();
    if !mean.is_finite() {
        return Err(Error::NullRecurrent);
    }
    match d {
        ReturnTimeDistribution::Geometric { p } => Ok(Bounded {
            value: binary_entropy(*p),
            bound: 0.0,
        }),
        ReturnTimeDistribution::FiniteSupport { pmf } => {
            let value = csum((0..pmf.len() as u64).map(|j| {
                d.ccdf(j) / mean * binary_entropy(d.hazard(j).unwrap_or(1.0))
            }));
            Ok(Bounded { value, bound: 0.0 })
        }
        ReturnTimeDistribution::PowerLaw { alpha } => {
            let alpha = *alpha;
            let head = csum((0..RATE_DIRECT_STATES).map(|j| {
                d.ccdf(j) / mean * binary_entropy(d.hazard(j).unwrap_or(0.0))
            }));
            // smooth extension of π_j h_j to real j
            let f = |x: f64| {
                let q = -(alpha * (-1.0 / (x + 2.0)).ln_1p()).exp_m1();
                (x + 1.0).powf(-alpha) / mean * binary_entropy(q)
            };
            let tail = smooth_tail_sum(f, RATE_DIRECT_STATES as f64);
            let mean_err = d.mean_return_time_bounded().bound / mean;
            let bound = tail.bound + (head + tail.value) * mean_err;
            if bound >= RATE_TAIL_TOLERANCE {
                return Err(Error::TailNotCertifiable {
                    bound,
                    tolerance: RATE_TAIL_TOLERANCE,
                });
            }
            Ok(Bounded {
                value: head + tail.value,
                bound,
            })
        }
    }
}

/// `H[X_n | X_{n−1}, …, X_0]` given `X_0 ~ init`, `n ≥ 1`.
///
/// The bound covers the contribution of tail mass, whose per-state entropy
/// is only known to be at most the chain's supremum.
pub fn conditional_entropy(
    chain: &Chain,
    init: &ProbVector,
    n: usize,
    trunc: Truncation,
) -> Result<Bounded> {
    if n == 0 {
        return Err(crate::error::domain("conditional_entropy", "n must be at least 1"));
    }
    let mu = chain.n_step_distribution(init, n - 1, trunc)?;
    let h = state_entropies(chain, mu.len());
    Ok(Bounded {
        value: csum(mu.weights().iter().zip(&h).map(|(w, h)| w * h)),
        bound: mu.tail_mass() * entropy_sup(chain),
    })
}

/// Conditional entropies for `r = 1..=n` and the partial sums
/// `E(r) = Σ_{s ≤ r} (H[X_s | …] − H(𝒳))`.
pub fn excess_entropy_partials(
    chain: &Chain,
    init: &ProbVector,
    n: usize,
    trunc: Truncation,
) -> Result<EntropySeries> {
    let rate = entropy_rate(chain)?.value;
    let values = conditional_entropy_series(chain, init, n, trunc)?;
    Ok(EntropySeries::from_values(values, rate))
}

/// `H[X_r | …]` for `r = 1..=n`.
pub fn conditional_entropy_series(
    chain: &Chain,
    init: &ProbVector,
    n: usize,
    trunc: Truncation,
) -> Result<Vec<f64>> {
    let len = chain.support_len(trunc.max_state);
    let init = init.resized(len);
    if let Chain::Age(a) = chain {
        if init.get(0) == 1.0 && init.tail_mass() == 0.0 && trunc.max_state + 1 >= n {
            return Ok(age_origin_series(a, n));
        }
    }
    let h = state_entropies(chain, len);
    let mut mu = init;
    let mut out = Vec::with_capacity(n);
    for r in 1..=n {
        if r > 1 {
            mu = chain.step(&mu);
        }
        if mu.tail_mass() > trunc.tolerance {
            return Err(Error::TruncationTooSmall {
                states: len,
                lost: mu.tail_mass(),
                tolerance: trunc.tolerance,
            });
        }
        out.push(csum(mu.weights().iter().zip(&h).map(|(w, h)| w * h)));
    }
    Ok(out)
}

/// From age 0: `H_r = Σ_{j<r} u_{r−1−j} P(T > j) h_j`, a convolution of the
/// renewal sequence with `g_j = P(T > j) h_j`.
fn age_origin_series(chain: &AgeChain, n: usize) -> Vec<f64> {
    let d = chain.return_time();
    let u = chain.renewal(n.saturating_sub(1));
    let g: Vec<f64> = (0..n as u64)
        .map(|j| {
            let c = d.ccdf(j);
            if c > 0.0 {
                c * binary_entropy(d.hazard(j).unwrap_or(1.0))
            } else {
                0.0
            }
        })
        .collect();
    (1..=n)
        .map(|r| {
            let mut acc = CompensatedSum::new();
            for (gj, uk) in g[..r].iter().zip(u[..r].iter().rev()) {
                acc.add(gj * uk);
            }
            acc.value()
        })
        .collect()
}
