//! Visit counts `N_i(0, n] = Σ_{k=1}^n 1{X_k = i}` and their variance.
//!
//! A chain is long-range dependent when `Var(N_i(0, n]) / n` is unbounded.
//! Under stationarity the variance is exact from the return probabilities:
//!
//! ```text
//! Var N_i(0, n] = n π_i (1 − π_i) + 2 π_i Σ_{d=1}^{n−1} (n − d)(p^d_ii − π_i)
//! ```
//!
//! The Monte Carlo counterpart simulates independent stationary-start
//! trajectories. Replica `r` draws from ChaCha8 stream `r` of the run seed,
//! so each replica is independent of the replica count and of scheduling.

use rand::RngExt;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zeta};
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{AgeChain, Chain};
use crate::convergence::{fit_power_law, RateFit};
use crate::dist::ReturnTimeDistribution;
use crate::error::{Error, Result};
use crate::numeric::{csum, CompensatedSum};

/// Simulated path `X_1..=X_n` from a fixed `X_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub init: usize,
    pub states: Vec<usize>,
    pub seed: u64,
}

impl Trajectory {
    /// `N_i(0, n]`.
    pub fn visits(&self, i: usize) -> usize {
        self.states.iter().filter(|&&s| s == i).count()
    }
}

/// Per-replica random stream.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Inverse-CDF table over a finite law.
#[derive(Debug, Clone)]
struct Table {
    cumulative: Vec<f64>,
}

impl Table {
    fn new(weights: &[f64]) -> Self {
        let mut acc = CompensatedSum::new();
        let cumulative = weights
            .iter()
            .map(|w| {
                acc.add(*w);
                acc.value()
            })
            .collect();
        Self { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let target = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= target)
            .min(self.cumulative.len() - 1)
    }
}

/// Precomputed sampling machinery for one chain.
enum Sampler<'a> {
    Age(&'a AgeChain),
    Finite { rows: Vec<Table> },
}

impl<'a> Sampler<'a> {
    fn new(chain: &'a Chain) -> Self {
        match chain {
            Chain::Age(a) => Sampler::Age(a),
            Chain::Finite(f) => Sampler::Finite {
                rows: f.matrix().iter().map(|r| Table::new(r)).collect(),
            },
        }
    }

    /// Walks `n` steps from `init`, calling `visit` on each new state.
    fn walk<F: FnMut(usize)>(&self, init: usize, n: usize, rng: &mut ChaCha8Rng, mut visit: F) {
        match self {
            Sampler::Age(a) => {
                let d = a.return_time();
                let mut age = init as u64;
                let mut done = 0usize;
                while done < n {
                    // steps until the next return to age 0
                    let t = d.sample_residual(age, rng);
                    let run = t.min((n - done) as u64) as usize;
                    let returns = run as u64 == t;
                    let unrolled = if returns { run - 1 } else { run };
                    for s in 1..=unrolled {
                        visit(age.saturating_add(s as u64).min(usize::MAX as u64) as usize);
                    }
                    done += run;
                    if returns {
                        visit(0);
                        age = 0;
                    }
                }
            }
            Sampler::Finite { rows } => {
                let mut state = init;
                for _ in 0..n {
                    state = rows[state].sample(rng);
                    visit(state);
                }
            }
        }
    }
}

fn check_init(chain: &Chain, init: usize) -> Result<()> {
    match chain {
        Chain::Age(a) => {
            if a.return_time().ccdf(init as u64) <= 0.0 {
                return Err(Error::ZeroTail { state: init as u64 });
            }
        }
        Chain::Finite(f) => {
            if init >= f.size() {
                return Err(Error::InvalidChain(format!("no state {init}")));
            }
        }
    }
    Ok(())
}

/// Exact simulation of `n` steps from state `init`.
///
/// Age chains are simulated by drawing successive return times and
/// unrolling the ages in between.
pub fn simulate_trajectory(chain: &Chain, init: usize, n: usize, seed: u64) -> Result<Trajectory> {
    check_init(chain, init)?;
    let mut rng = replica_rng(seed, 0);
    let sampler = Sampler::new(chain);
    let mut states = Vec::with_capacity(n);
    sampler.walk(init, n, &mut rng, |s| states.push(s));
    Ok(Trajectory { init, states, seed })
}

/// Draws `X_0 ~ π` exactly.
enum StationarySampler {
    /// `π_j ∝ (j + 1)^(−α)`: a zeta law shifted by one.
    Zeta(Zeta<f64>),
    /// `π_j = p (1 − p)^j`.
    Geometric(ReturnTimeDistribution),
    Table(Table),
}

impl StationarySampler {
    fn new(chain: &Chain) -> Result<Self> {
        match chain {
            Chain::Age(a) => match a.return_time() {
                ReturnTimeDistribution::PowerLaw { alpha } => {
                    if *alpha <= 1.0 {
                        return Err(Error::NullRecurrent);
                    }
                    Ok(Self::Zeta(Zeta::new(*alpha).map_err(|e| {
                        Error::InvalidDistribution(format!("zeta sampler: {e}"))
                    })?))
                }
                g @ ReturnTimeDistribution::Geometric { .. } => Ok(Self::Geometric(g.clone())),
                ReturnTimeDistribution::FiniteSupport { pmf } => {
                    let pi = a.stationary(pmf.len() - 1)?;
                    Ok(Self::Table(Table::new(pi.weights())))
                }
            },
            Chain::Finite(f) => Ok(Self::Table(Table::new(f.stationary()?.weights()))),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Self::Zeta(z) => {
                let k: f64 = z.sample(rng);
                if k >= usize::MAX as f64 {
                    usize::MAX
                } else {
                    (k as usize).saturating_sub(1)
                }
            }
            Self::Geometric(d) => (d.sample_return_time(rng) - 1) as usize,
            Self::Table(t) => t.sample(rng),
        }
    }
}

/// One grid point of a variance series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariancePoint {
    pub n: u64,
    pub var_exact: Option<f64>,
    pub var_mc: Option<f64>,
    pub stderr_mc: Option<f64>,
}

impl VariancePoint {
    /// Exact value when available, otherwise the Monte Carlo estimate.
    pub fn variance(&self) -> Option<f64> {
        self.var_exact.or(self.var_mc)
    }

    /// `Var / n`, the quantity whose growth signals long-range dependence.
    pub fn var_over_n(&self) -> Option<f64> {
        self.variance().map(|v| v / self.n as f64)
    }

    /// `Var(N / n) / n = Var / n³`, the same criterion applied to the
    /// 1/n-normalized count.
    pub fn normalized_count_var_over_n(&self) -> Option<f64> {
        self.variance().map(|v| v / (self.n as f64).powi(3))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceSeries {
    pub state: usize,
    pub points: Vec<VariancePoint>,
}

impl VarianceSeries {
    /// `(n, variance)` pairs for fitting.
    pub fn series(&self) -> Vec<(u64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.variance().map(|v| (p.n, v)))
            .collect()
    }

    /// Merges Monte Carlo columns from `other` (same grid) into `self`.
    pub fn with_mc(mut self, other: &VarianceSeries) -> Self {
        for (p, q) in self.points.iter_mut().zip(&other.points) {
            debug_assert_eq!(p.n, q.n);
            p.var_mc = q.var_mc;
            p.stderr_mc = q.stderr_mc;
        }
        self
    }
}

fn check_grid(grid: &[u64]) -> Result<()> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(crate::error::domain(
            "counting",
            "grid must be nonempty, positive and strictly increasing",
        ));
    }
    Ok(())
}

/// Exact stationary-start `Var N_i(0, n]` on the grid.
pub fn counting_variance_exact(chain: &Chain, i: usize, grid: &[u64]) -> Result<VarianceSeries> {
    check_grid(grid)?;
    let pi = chain.stationary_prob(i)?;
    let n_max = *grid.last().unwrap() as usize;
    let p = chain.transition_series(i, i, n_max)?;
    // prefix sums A(m) = Σ_{d≤m} c_d and B(m) = Σ_{d≤m} d c_d
    let mut a = vec![0.0; n_max];
    let mut b = vec![0.0; n_max];
    let mut acc_a = CompensatedSum::new();
    let mut acc_b = CompensatedSum::new();
    for d in 1..n_max {
        let c = p[d] - pi;
        acc_a.add(c);
        acc_b.add(d as f64 * c);
        a[d] = acc_a.value();
        b[d] = acc_b.value();
    }
    let points = grid
        .iter()
        .map(|&n| {
            let nf = n as f64;
            let m = n as usize - 1;
            let cross = nf * a[m] - b[m];
            let var = nf * pi * (1.0 - pi) + 2.0 * pi * cross;
            VariancePoint {
                n,
                var_exact: Some(var.max(0.0)),
                var_mc: None,
                stderr_mc: None,
            }
        })
        .collect();
    Ok(VarianceSeries { state: i, points })
}

/// Sample variance and its delete-1 jackknife standard error.
pub fn variance_with_jackknife(x: &[f64]) -> (f64, f64) {
    let r = x.len();
    let rf = r as f64;
    let mean = csum(x.iter().copied()) / rf;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ss = csum(dev.iter().map(|d| d * d));
    let var = ss / (rf - 1.0);
    if r < 3 {
        return (var, var * (2.0 / (rf - 1.0)).sqrt());
    }
    let loo: Vec<f64> = dev
        .iter()
        .map(|d| (ss - d * d - d * d / (rf - 1.0)) / (rf - 2.0))
        .collect();
    let loo_mean = csum(loo.iter().copied()) / rf;
    let spread = csum(loo.iter().map(|v| (v - loo_mean) * (v - loo_mean)));
    (var, ((rf - 1.0) / rf * spread).sqrt())
}

/// Monte Carlo `Var N_i(0, n]` from `reps` stationary-start replicas.
pub fn counting_variance_mc(
    chain: &Chain,
    i: usize,
    grid: &[u64],
    reps: usize,
    seed: u64,
) -> Result<VarianceSeries> {
    if reps < 2 {
        return Err(Error::TooFewReplicas(reps));
    }
    check_grid(grid)?;
    let start = StationarySampler::new(chain)?;
    let sampler = Sampler::new(chain);
    let n_max = *grid.last().unwrap() as usize;
    let counts: Vec<Vec<u32>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let x0 = start.sample(&mut rng);
            let mut out = Vec::with_capacity(grid.len());
            let mut visits = 0u32;
            let mut k = 0usize;
            let mut next = 0usize;
            sampler.walk(x0, n_max, &mut rng, |s| {
                k += 1;
                if s == i {
                    visits += 1;
                }
                if next < grid.len() && k as u64 == grid[next] {
                    out.push(visits);
                    next += 1;
                }
            });
            out
        })
        .collect();
    let points = grid
        .iter()
        .enumerate()
        .map(|(g, &n)| {
            let col: Vec<f64> = counts.iter().map(|c| c[g] as f64).collect();
            let (var, se) = variance_with_jackknife(&col);
            VariancePoint {
                n,
                var_exact: None,
                var_mc: Some(var),
                stderr_mc: Some(se),
            }
        })
        .collect();
    Ok(VarianceSeries { state: i, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HurstEstimate {
    pub hurst: f64,
    pub stderr: f64,
    /// Log-log fit of the variance against `n`.
    pub fit: RateFit,
}

/// `Ĥ = (1 + slope of Var/n)/2 = (slope of Var)/2`, delta-method stderr.
pub fn hurst_from_variance(series: &VarianceSeries) -> Result<HurstEstimate> {
    let fit = fit_power_law(&series.series())?;
    Ok(HurstEstimate {
        hurst: fit.slope() / 2.0,
        stderr: fit.stderr / 2.0,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn age(d: ReturnTimeDistribution) -> Chain {
        Chain::age(d).unwrap()
    }

    fn pl(a: f64) -> Chain {
        age(ReturnTimeDistribution::power_law(a).unwrap())
    }

    fn geo(p: f64) -> Chain {
        age(ReturnTimeDistribution::geometric(p).unwrap())
    }

    #[test]
    fn trajectories_are_reproducible() {
        let c = pl(1.5);
        let a = simulate_trajectory(&c, 0, 5000, 11).unwrap();
        let b = simulate_trajectory(&c, 0, 5000, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.states.len(), 5000);
        let other = simulate_trajectory(&c, 0, 5000, 12).unwrap();
        assert_ne!(a.states, other.states);
    }

    #[test]
    fn trajectory_moves_are_feasible() {
        let c = pl(1.3);
        let t = simulate_trajectory(&c, 4, 10_000, 3).unwrap();
        let mut prev = t.init;
        for &s in &t.states {
            assert!(s == 0 || s == prev + 1, "{prev} -> {s}");
            prev = s;
        }
        let f = Chain::finite(vec![vec![0.0, 1.0, 0.0], vec![0.3, 0.0, 0.7], vec![0.5, 0.5, 0.0]])
            .unwrap();
        let t = simulate_trajectory(&f, 0, 10_000, 3).unwrap();
        let Chain::Finite(fc) = &f else { unreachable!() };
        let mut prev = 0;
        for &s in &t.states {
            assert!(fc.row(prev)[s] > 0.0);
            prev = s;
        }
    }

    #[test]
    fn forced_returns_stay_at_zero() {
        let c = age(ReturnTimeDistribution::finite_support(vec![1.0]).unwrap());
        let t = simulate_trajectory(&c, 0, 100, 5).unwrap();
        assert!(t.states.iter().all(|&s| s == 0));
    }

    #[test]
    fn first_step_frequency_matches_hazard() {
        let c = pl(1.5);
        let Chain::Age(a) = &c else { unreachable!() };
        let q = a.hazard(0).unwrap();
        let sampler = Sampler::new(&c);
        let mut rng = replica_rng(99, 0);
        let n = 1_000_000;
        let mut back = 0u64;
        for _ in 0..n {
            sampler.walk(0, 1, &mut rng, |s| {
                if s == 0 {
                    back += 1
                }
            });
        }
        let freq = back as f64 / n as f64;
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((freq - q).abs() < 3.0 * se, "{freq} vs {q}");
    }

    #[test]
    fn stationary_sampler_matches_pi() {
        for c in [pl(1.5), geo(0.4)] {
            let s = StationarySampler::new(&c).unwrap();
            let mut rng = replica_rng(5, 1);
            let n = 400_000;
            let mut hist = [0u64; 6];
            for _ in 0..n {
                let j = s.sample(&mut rng);
                if j < 6 {
                    hist[j] += 1;
                }
            }
            for (j, &h) in hist.iter().enumerate() {
                let p = c.stationary_prob(j).unwrap();
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((h as f64 / n as f64 - p).abs() < 4.0 * se, "j={j}");
            }
        }
    }

    /// Σ_{k,l=1}^n Cov(1{X_k=i}, 1{X_l=i}) computed term by term.
    fn brute_variance(chain: &Chain, i: usize, n: usize) -> f64 {
        let gamma = chain.autocovariance_series(i, n).unwrap();
        let mut s = 0.0;
        for k in 1..=n {
            for l in 1..=n {
                s += gamma[k.abs_diff(l)];
            }
        }
        s
    }

    #[test]
    fn exact_variance_matches_double_sum() {
        for (c, i) in [(pl(1.5), 0), (pl(1.5), 2), (geo(0.3), 0), (pl(2.5), 1)] {
            let grid: Vec<u64> = (1..=50).collect();
            let v = counting_variance_exact(&c, i, &grid).unwrap();
            for p in &v.points {
                let want = brute_variance(&c, i, p.n as usize);
                assert!((p.var_exact.unwrap() - want).abs() < 1e-10, "n={}", p.n);
            }
        }
    }

    #[test]
    fn exact_variance_examples() {
        let p = 0.3;
        let v = counting_variance_exact(&geo(p), 0, &[1, 10, 100]).unwrap();
        for pt in &v.points {
            let want = pt.n as f64 * p * (1.0 - p);
            assert!((pt.var_exact.unwrap() - want).abs() < 1e-12 * want);
        }
        let c = pl(1.5);
        let pi = c.stationary_prob(0).unwrap();
        let v = counting_variance_exact(&c, 0, &[1]).unwrap();
        assert!((v.points[0].var_exact.unwrap() - pi * (1.0 - pi)).abs() < 1e-15);
        assert!(matches!(
            counting_variance_exact(&pl(0.9), 0, &[10]),
            Err(Error::NullRecurrent)
        ));
    }

    #[test]
    fn jackknife_matches_explicit_leave_one_out() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let (var, se) = variance_with_jackknife(&x);
        let sample_var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (v.len() - 1) as f64
        };
        assert!((var - sample_var(&x)).abs() < 1e-12);
        let loo: Vec<f64> = (0..x.len())
            .map(|k| {
                let rest: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, v)| *v)
                    .collect();
                sample_var(&rest)
            })
            .collect();
        let m = loo.iter().sum::<f64>() / loo.len() as f64;
        let r = x.len() as f64;
        let want = ((r - 1.0) / r * loo.iter().map(|v| (v - m) * (v - m)).sum::<f64>()).sqrt();
        assert!((se - want).abs() < 1e-12);
    }

    #[test]
    fn mc_variance_examples() {
        let c = geo(0.5);
        let mc = counting_variance_mc(&c, 0, &[100], 10_000, 2024).unwrap();
        let exact = 100.0 * 0.25;
        let p = mc.points[0];
        assert!((p.var_mc.unwrap() - exact).abs() < 3.0 * p.stderr_mc.unwrap());

        let det = age(ReturnTimeDistribution::finite_support(vec![1.0]).unwrap());
        let mc = counting_variance_mc(&det, 0, &[10, 20], 50, 1).unwrap();
        assert!(mc.points.iter().all(|p| p.var_mc == Some(0.0)));

        let a = counting_variance_mc(&pl(1.5), 0, &[16, 64], 200, 77).unwrap();
        let b = counting_variance_mc(&pl(1.5), 0, &[16, 64], 200, 77).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            counting_variance_mc(&c, 0, &[10], 1, 0),
            Err(Error::TooFewReplicas(1))
        ));
    }

    #[test]
    fn hurst_examples() {
        let planted = |f: &dyn Fn(f64) -> f64| VarianceSeries {
            state: 0,
            points: crate::convergence::default_grid()
                .iter()
                .map(|&n| VariancePoint {
                    n,
                    var_exact: Some(f(n as f64)),
                    var_mc: None,
                    stderr_mc: None,
                })
                .collect(),
        };
        let h = hurst_from_variance(&planted(&|n| n.powf(1.5))).unwrap();
        assert!((h.hurst - 0.75).abs() < 1e-12);
        let h = hurst_from_variance(&planted(&|n| 4.2 * n)).unwrap();
        assert!((h.hurst - 0.5).abs() < 1e-12);
    }
}
