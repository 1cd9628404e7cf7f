//! Acceptance criteria, one check per criterion, each printing a PASS/FAIL
//! line. Runs under `cargo test` as its own target (`--test acceptance`).

use std::time::{Duration, Instant};

use lrd_core::chain::{renewal_sequence, Chain, Truncation};
use lrd_core::convergence::{
    default_grid, fit_geometric, fit_power_law, linear_grid, tv_to_stationary,
    verify_rate_theorem, RateFit,
};
use lrd_core::counting::{counting_variance_exact, counting_variance_mc, hurst_from_variance};
use lrd_core::dist::{hurst_from_moment_index, ReturnTimeDistribution};
use lrd_core::entropy::{conditional_entropy_series, entropy_rate, excess_entropy_partials};
use lrd_core::numeric::{csum, xlogx_neg};
use lrd_core::ProbVector;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn pl(alpha: f64) -> ReturnTimeDistribution {
    ReturnTimeDistribution::power_law(alpha).unwrap()
}

fn geo(p: f64) -> ReturnTimeDistribution {
    ReturnTimeDistribution::geometric(p).unwrap()
}

fn delta0() -> ProbVector {
    ProbVector::point_mass(0, 1).unwrap()
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn tv_fit(alpha: f64) -> (RateFit, Vec<(u64, f64)>, Duration) {
    let start = Instant::now();
    let chain = Chain::age(pl(alpha)).unwrap();
    let tv = tv_to_stationary(&chain, &delta0(), &default_grid(), None).unwrap();
    let series: Vec<(u64, f64)> = tv.iter().map(|p| (p.n, p.tv)).collect();
    let fit = fit_power_law(&series).unwrap();
    (fit, series, start.elapsed())
}

/// TV decays like n^(1 − α).
fn criterion_1() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for alpha in [1.5, 1.2, 1.8] {
        let (fit, _, took) = tv_fit(alpha);
        let target = -(alpha - 1.0);
        let pass = (fit.slope() - target).abs() <= 0.15
            && fit.r_squared > 0.98
            && took < Duration::from_secs(60);
        ok &= pass;
        lines.push(format!(
            "α={alpha}: slope {:.4} (target {target:.2} ± 0.15), r² {:.5}, {:.2?}",
            fit.slope(),
            fit.r_squared,
            took
        ));
    }
    ensure(ok, lines.join("; "))
}

/// H from the TV exponent agrees with H from the variance slope.
fn criterion_2() -> Check {
    let (fit, _, _) = tv_fit(1.5);
    let alpha_hat = 1.0 - fit.slope();
    let h_tv = hurst_from_moment_index(alpha_hat).map_err(|e| e.to_string())?;
    let chain = Chain::age(pl(1.5)).unwrap();
    let var = counting_variance_exact(&chain, 0, &default_grid()).unwrap();
    let h_var = hurst_from_variance(&var).unwrap();
    ensure(
        (h_tv - h_var.hurst).abs() < 0.1,
        format!(
            "α̂={alpha_hat:.4} → H={h_tv:.4}; variance Ĥ={:.4} ± {:.4}; |Δ|={:.4} (< 0.1)",
            h_var.hurst,
            h_var.stderr,
            (h_tv - h_var.hurst).abs()
        ),
    )
}

/// |H[X_n | past] − H(𝒳)| decays at the TV rate.
fn criterion_3() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for alpha in [1.5, 1.2, 1.8] {
        let (tv, _, _) = tv_fit(alpha);
        let chain = Chain::age(pl(alpha)).unwrap();
        let grid = default_grid();
        let n_max = *grid.last().unwrap() as usize;
        let rate = entropy_rate(&chain).unwrap().value;
        let values =
            conditional_entropy_series(&chain, &delta0(), n_max, Truncation::at(n_max)).unwrap();
        let gap: Vec<(u64, f64)> = grid
            .iter()
            .map(|&n| (n, (values[n as usize - 1] - rate).abs()))
            .collect();
        let fit = fit_power_law(&gap).unwrap();
        let diff = (fit.slope() - tv.slope()).abs();
        ok &= diff < 0.1;
        lines.push(format!(
            "α={alpha}: entropy-gap slope {:.4} vs TV slope {:.4}, |Δ|={diff:.4} (< 0.1)",
            fit.slope(),
            tv.slope()
        ));
    }
    ensure(ok, lines.join("; "))
}

/// E(n) diverges iff the chain is LRD.
fn criterion_4() -> Check {
    let grid = default_grid();
    let n_max = *grid.last().unwrap() as usize;
    let trunc = Truncation::at(n_max);

    let lrd = Chain::age(pl(1.5)).unwrap();
    let s = excess_entropy_partials(&lrd, &delta0(), n_max, trunc).unwrap();
    let series: Vec<(u64, f64)> = grid.iter().map(|&n| (n, s.excess(n as usize))).collect();
    let fit = fit_power_law(&series).map_err(|e| e.to_string())?;
    let (lo, hi) = fit.slope_ci95();
    let lrd_ok = (0.35..=0.65).contains(&fit.slope()) && lo > 0.0;

    let g = Chain::age(geo(0.5)).unwrap();
    let sg = excess_entropy_partials(&g, &delta0(), n_max, trunc).unwrap();
    let max_abs = sg.excess_partials.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let geo_ok = max_abs < 1e-10;

    let srd = Chain::age(pl(3.5)).unwrap();
    let ss = excess_entropy_partials(&srd, &delta0(), n_max, trunc).unwrap();
    let cauchy = (ss.excess(1 << 14) - ss.excess(1 << 13)).abs();
    let srd_ok = cauchy < 1e-3;

    ensure(
        lrd_ok && geo_ok && srd_ok,
        format!(
            "PowerLaw(1.5) E(n) slope {:.4} CI95 [{lo:.4}, {hi:.4}] (in [0.35, 0.65], > 0); \
             Geometric(0.5) max|E| {max_abs:.2e} (< 1e-10); \
             PowerLaw(3.5) |E(2^14) − E(2^13)| {cauchy:.2e} (< 1e-3), E(2^14)={:.6}",
            fit.slope(),
            ss.excess(1 << 14)
        ),
    )
}

/// Geometric return times give geometric TV decay.
fn criterion_5() -> Check {
    let start = Instant::now();
    let chain = Chain::age(geo(0.5)).unwrap();
    let grid = linear_grid(1, 32, 32);
    let tv = tv_to_stationary(&chain, &delta0(), &grid, None).unwrap();
    let series: Vec<(u64, f64)> = tv.iter().map(|p| (p.n, p.tv)).collect();
    let fit = fit_geometric(&series).unwrap();
    let took = start.elapsed();
    ensure(
        (fit.ratio() - 0.5).abs() <= 0.02 && fit.r_squared > 0.999 && took < Duration::from_secs(1),
        format!(
            "ratio {:.6} (0.5 ± 0.02), r² {:.8} (> 0.999), {took:.2?} (< 1 s)",
            fit.ratio(),
            fit.r_squared
        ),
    )
}

/// All weighted paths of length n from the initial law.
fn enumerate_paths(p: &[Vec<f64>], init: &[f64], n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut paths: Vec<(Vec<usize>, f64)> = init
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(s, &w)| (vec![s], w))
        .collect();
    for _ in 0..n {
        let mut next = Vec::new();
        for (path, w) in &paths {
            let last = *path.last().unwrap();
            for (s, &q) in p[last].iter().enumerate() {
                if q > 0.0 {
                    let mut np = path.clone();
                    np.push(s);
                    next.push((np, w * q));
                }
            }
        }
        paths = next;
    }
    paths
}

fn joint_entropy(paths: &[(Vec<usize>, f64)]) -> f64 {
    csum(paths.iter().map(|(_, w)| xlogx_neg(*w)))
}

/// Exactness oracles (a) renewal identity, (b) path enumeration, (c) double sum.
fn criterion_6() -> Check {
    // (a)
    let n_max = 1usize << 14;
    let mut worst_a = 0.0f64;
    for d in [pl(1.2), pl(1.5), pl(1.8), pl(3.5), geo(0.5)] {
        let u = renewal_sequence(&d, n_max);
        let ccdf: Vec<f64> = (0..=n_max as u64).map(|j| d.ccdf(j)).collect();
        for n in 1..=n_max {
            let s = csum((0..=n).map(|j| u[n - j] * ccdf[j]));
            worst_a = worst_a.max((s - 1.0).abs());
        }
    }

    // (b)
    let chains: Vec<Vec<Vec<f64>>> = vec![
        vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        vec![vec![0.9, 0.1], vec![0.3, 0.7]],
        vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.0, 0.4], vec![0.1, 0.1, 0.8]],
        vec![
            vec![0.0, 0.5, 0.5, 0.0],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.1, 0.0, 0.0, 0.9],
            vec![0.6, 0.2, 0.0, 0.2],
        ],
    ];
    let mut worst_b = 0.0f64;
    for m in &chains {
        let chain = Chain::finite(m.clone()).unwrap();
        let s = m.len();
        let mut init = vec![0.0; s];
        init[0] = 0.7;
        init[s - 1] += 0.3;
        let init_pv = ProbVector::new(init.clone(), 0.0).unwrap();
        let values = conditional_entropy_series(&chain, &init_pv, 8, Truncation::at(0)).unwrap();
        let mut prev_h = joint_entropy(&enumerate_paths(m, &init, 0));
        for n in 1..=8 {
            let paths = enumerate_paths(m, &init, n);
            let mut law = vec![0.0; s];
            for (path, w) in &paths {
                law[*path.last().unwrap()] += w;
            }
            let exact = chain
                .n_step_distribution(&init_pv, n, Truncation::at(0))
                .unwrap();
            for (j, want) in law.iter().enumerate() {
                worst_b = worst_b.max((exact.get(j) - want).abs());
            }
            let h = joint_entropy(&paths);
            worst_b = worst_b.max((values[n - 1] - (h - prev_h)).abs());
            prev_h = h;
        }
    }

    // (c)
    let mut worst_c = 0.0f64;
    for (d, i) in [(pl(1.5), 0), (pl(1.2), 1), (geo(0.5), 0), (pl(3.5), 2)] {
        let chain = Chain::age(d).unwrap();
        let gamma = chain.autocovariance_series(i, 50).unwrap();
        let grid: Vec<u64> = (1..=50).collect();
        let v = counting_variance_exact(&chain, i, &grid).unwrap();
        for p in &v.points {
            let n = p.n as usize;
            let mut brute = 0.0;
            for k in 1..=n {
                for l in 1..=n {
                    brute += gamma[k.abs_diff(l)];
                }
            }
            worst_c = worst_c.max((p.var_exact.unwrap() - brute).abs());
        }
    }

    ensure(
        worst_a <= 1e-12 && worst_b <= 1e-9 && worst_c <= 1e-10,
        format!(
            "(a) max renewal-identity error {worst_a:.2e} (≤ 1e-12); \
             (b) max enumeration error {worst_b:.2e} (≤ 1e-9); \
             (c) max double-sum error {worst_c:.2e} (≤ 1e-10)"
        ),
    )
}

/// Monte Carlo variance agrees with the exact variance.
fn criterion_7() -> Check {
    let start = Instant::now();
    let grid = lrd_core::convergence::geometric_grid(16, 1 << 10, 7);
    let mut cells = 0usize;
    let mut inside = 0usize;
    let mut worst = 0.0f64;
    for (d, seed) in [(geo(0.5), 20_240_901u64), (pl(1.5), 20_240_902)] {
        let chain = Chain::age(d).unwrap();
        let exact = counting_variance_exact(&chain, 0, &grid).unwrap();
        let mc = counting_variance_mc(&chain, 0, &grid, 10_000, seed).unwrap();
        for (e, m) in exact.points.iter().zip(&mc.points) {
            let z = (m.var_mc.unwrap() - e.var_exact.unwrap()).abs() / m.stderr_mc.unwrap();
            worst = worst.max(z);
            cells += 1;
            if z <= 4.0 {
                inside += 1;
            }
        }
    }
    let took = start.elapsed();
    let frac = inside as f64 / cells as f64;
    ensure(
        frac >= 0.95 && took < Duration::from_secs(120),
        format!(
            "{inside}/{cells} cells within 4 jackknife stderr ({:.1}% ≥ 95%), worst |z| {worst:.2}, {took:.2?} (< 120 s)",
            100.0 * frac
        ),
    )
}

/// Scaling by n^0.7 stops the decay, n^0.3 does not.
fn criterion_8() -> Check {
    let (_, series, _) = tv_fit(1.5);
    let d = pl(1.5);
    let over = verify_rate_theorem(&d, 0.7, &series).unwrap();
    let under = verify_rate_theorem(&d, 0.3, &series).unwrap();
    ensure(
        over.scaled_fit.slope() >= 0.0 && under.scaled_fit.slope() < 0.0,
        format!(
            "n^0.7·tv slope {:.4} (≥ 0, verdict {:?}); n^0.3·tv slope {:.4} (< 0, verdict {:?})",
            over.scaled_fit.slope(),
            over.verdict,
            under.scaled_fit.slope(),
            under.verdict
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 TV rate n^(1−α)", criterion_1),
        ("2 Hurst consistency", criterion_2),
        ("3 entropy-rate convergence", criterion_3),
        ("4 excess-entropy dichotomy", criterion_4),
        ("5 geometric baseline", criterion_5),
        ("6 exactness oracles", criterion_6),
        ("7 Monte Carlo consistency", criterion_7),
        ("8 sharpness probe", criterion_8),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match check() {
            Ok(msg) => println!("PASS criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
