use lrd_core::chain::{renewal_sequence, Chain, Truncation};
use lrd_core::convergence::{default_grid, fit_power_law, tv_to_stationary};
use lrd_core::counting::{counting_variance_exact, hurst_from_variance};
use lrd_core::entropy::{conditional_entropy_series, entropy_rate};
use lrd_core::{ProbVector, ReturnTimeDistribution};

fn pl(alpha: f64) -> Chain {
    Chain::age(ReturnTimeDistribution::power_law(alpha).unwrap()).unwrap()
}

fn origin() -> ProbVector {
    ProbVector::point_mass(0, 1).unwrap()
}

fn slope(points: impl IntoIterator<Item = (u64, f64)>) -> f64 {
    let series: Vec<_> = points.into_iter().collect();
    fit_power_law(&series).unwrap().slope()
}

#[test]
fn q_sum_grows_like_n_to_two_minus_alpha() {
    let chain = pl(1.5);
    let q = chain.q_sum_series(0, 0, 1 << 14).unwrap();
    let s = slope(default_grid().into_iter().map(|n| (n, q[n as usize])));
    assert!((s - 0.5).abs() < 0.15, "slope {s}");
}

#[test]
fn autocovariance_partial_sums_diverge_only_for_lrd() {
    let lrd = pl(1.5).autocovariance_series(0, 1 << 14).unwrap();
    let mut acc = 0.0;
    let partial: Vec<f64> = lrd
        .iter()
        .map(|g| {
            acc += g;
            acc
        })
        .collect();
    let s = slope(default_grid().into_iter().map(|n| (n, partial[n as usize])));
    assert!((s - 0.5).abs() < 0.15, "slope {s}");

    // α = 3.5: summable covariances, partial sums settle
    let srd = pl(3.5).autocovariance_series(0, 1 << 14).unwrap();
    let head: f64 = srd[..1 << 13].iter().sum();
    let full: f64 = srd.iter().sum();
    assert!((full - head).abs() < 1e-4, "{head} {full}");
}

#[test]
fn entropy_gap_is_bounded_by_tv() {
    // h_j ∈ [0, ln 2], so |Σ (μ_j − π_j) h_j| ≤ ln 2 · TV(μ, π)
    for alpha in [1.2, 1.5, 2.5] {
        let chain = pl(alpha);
        let n_max = 4096usize;
        let rate = entropy_rate(&chain).unwrap().value;
        let h = conditional_entropy_series(&chain, &origin(), n_max, Truncation::at(n_max)).unwrap();
        let grid: Vec<u64> = (1..=12).map(|k| 1u64 << k).collect();
        let lags: Vec<u64> = grid.iter().map(|n| n - 1).collect();
        let tv = tv_to_stationary(&chain, &origin(), &lags, None).unwrap();
        for (&n, p) in grid.iter().zip(&tv) {
            let gap = (h[n as usize - 1] - rate).abs();
            assert!(
                gap <= std::f64::consts::LN_2 * p.tv + 1e-12,
                "α={alpha} n={n}: gap {gap} tv {}",
                p.tv
            );
        }
    }
}

#[test]
fn variance_scaling_separates_lrd_from_srd() {
    let grid = default_grid();
    let lrd = hurst_from_variance(&counting_variance_exact(&pl(1.5), 0, &grid).unwrap()).unwrap();
    assert!((lrd.hurst - 0.75).abs() < 0.05, "{lrd:?}");
    let srd = hurst_from_variance(&counting_variance_exact(&pl(3.5), 0, &grid).unwrap()).unwrap();
    assert!((srd.hurst - 0.5).abs() < 0.02, "{srd:?}");
}

#[test]
fn geometric_renewal_sequence_is_flat() {
    let d = ReturnTimeDistribution::geometric(0.3).unwrap();
    let u = renewal_sequence(&d, 500);
    assert_eq!(u[0], 1.0);
    assert!(u[1..].iter().all(|x| (x - 0.3).abs() < 1e-14));
}

#[test]
fn finite_support_chain_mixes_geometrically() {
    // T uniform on {1, 2, 3}: geometric mixing, TV falls below 1e-10 quickly
    let chain = Chain::age(ReturnTimeDistribution::finite_support(vec![1.0 / 3.0; 3]).unwrap()).unwrap();
    let tv = tv_to_stationary(&chain, &origin(), &[10, 40, 80], None).unwrap();
    assert!(tv[0].tv > tv[1].tv && tv[1].tv > tv[2].tv);
    assert!(tv[2].tv < 1e-10);
}
