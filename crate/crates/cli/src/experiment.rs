//! Runs one resolved config and returns its artifacts in memory.

use lrd_core::chain::{FiniteChain, Truncation};
use lrd_core::convergence::{fit_geometric, fit_power_law, tv_to_stationary, verify_rate_theorem, RateFit, RateModel};
use lrd_core::counting::{counting_variance_exact, counting_variance_mc, hurst_from_variance, simulate_trajectory};
use lrd_core::entropy::excess_entropy_partials;
use lrd_core::{hurst_from_moment_index, Chain, ErgodicityClass, ProbVector};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;

/// A CSV table with a mandatory header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        Table {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Csv(Table),
    /// Newline-delimited integers.
    Lines { name: &'static str, values: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Human-readable one-line result.
    pub summary: String,
}

/// Plain decimal in the usual range, exponent notation outside it. Both
/// are shortest round-trip representations, so reruns are byte-identical.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn build_chain(cfg: &ExperimentConfig) -> Result<Chain, CliError> {
    match (&cfg.chain.return_time, &cfg.chain.matrix_file) {
        (Some(d), _) => Chain::age(d.clone()).map_err(CliError::numeric("chain")),
        (None, Some(path)) => Ok(FiniteChain::load(path)
            .map_err(|e| CliError::invalid("chain.matrix_file", e))?
            .into()),
        (None, None) => Err(CliError::missing("chain.return_time")),
    }
}

fn class_of(cfg: &ExperimentConfig) -> ErgodicityClass {
    match &cfg.chain.return_time {
        Some(d) => d.classify_ergodicity(),
        // a finite aperiodic unichain mixes geometrically
        None => ErgodicityClass::Geometric,
    }
}

fn class_name(c: &ErgodicityClass) -> &'static str {
    match c {
        ErgodicityClass::Geometric => "Geometric",
        ErgodicityClass::Polynomial { .. } => "Polynomial",
        ErgodicityClass::NullRecurrent => "NullRecurrent",
    }
}

struct Start {
    init: ProbVector,
    /// `None` selects the exact renewal route.
    trunc: Option<Truncation>,
    n_max: usize,
}

fn start(cfg: &ExperimentConfig, chain: &Chain, grid: &[u64]) -> Result<Start, CliError> {
    let i = cfg.run.init_state;
    let n_max = grid.last().copied().unwrap_or(1) as usize;
    if let Chain::Finite(f) = chain {
        if i >= f.size() {
            return Err(CliError::invalid(
                "run.init_state",
                format!("{i} is not a state of a {}-state chain", f.size()),
            ));
        }
    }
    let len = chain.support_len(n_max + i);
    let init = ProbVector::point_mass(i, len).map_err(|e| CliError::invalid("run.init_state", e))?;
    let from_origin = matches!(chain, Chain::Age(_)) && i == 0;
    let trunc = (!from_origin).then(|| Truncation::at(n_max + i).with_tolerance(cfg.run.tolerance));
    Ok(Start { init, trunc, n_max })
}

fn fit_for(cfg: &ExperimentConfig, series: &[(u64, f64)]) -> lrd_core::Result<RateFit> {
    match class_of(cfg) {
        ErgodicityClass::Geometric => fit_geometric(series),
        _ => fit_power_law(series),
    }
}

fn fit_table(fit: Option<&RateFit>) -> Table {
    let mut t = Table::new(
        "fit",
        &["model", "exponent_or_ratio", "stderr", "r_squared", "n_min", "n_max"],
    );
    if let Some(f) = fit {
        let model = match f.model {
            RateModel::PowerLaw => "power_law",
            RateModel::Geometric => "geometric",
        };
        t.rows.push(vec![
            model.into(),
            num(f.exponent_or_ratio()),
            num(f.stderr),
            num(f.r_squared),
            f.n_min.to_string(),
            f.n_max.to_string(),
        ]);
    }
    t
}

fn describe_fit(what: &str, fit: &lrd_core::Result<RateFit>) -> String {
    match fit {
        Ok(f) => match f.model {
            RateModel::PowerLaw => format!(
                "{what} power-law exponent {:.4} ± {:.4} (r² {:.5})",
                f.slope(),
                f.stderr,
                f.r_squared
            ),
            RateModel::Geometric => {
                format!("{what} geometric ratio {:.4} (r² {:.5})", f.ratio(), f.r_squared)
            }
        },
        Err(e) => format!("{what}: no fit ({e})"),
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let chain = build_chain(cfg)?;
    let grid = cfg.grid.values();
    match cfg.experiment {
        ExperimentKind::Rate => rate(cfg, &chain, &grid),
        ExperimentKind::Entropy | ExperimentKind::Excess => entropy(cfg, &chain, &grid),
        ExperimentKind::Variance => variance(cfg, &chain, &grid),
        ExperimentKind::Classify => Ok(classify(cfg)),
        ExperimentKind::Simulate => simulate(cfg, &chain),
    }
}

fn rate(cfg: &ExperimentConfig, chain: &Chain, grid: &[u64]) -> Result<Outcome, CliError> {
    let s = start(cfg, chain, grid)?;
    let tv = tv_to_stationary(chain, &s.init, grid, s.trunc).map_err(CliError::numeric("convergence"))?;
    let mut tv_table = Table::new("tv", &["n", "tv_distance", "stationary_tail", "law_tail"]);
    for p in &tv {
        tv_table.rows.push(vec![
            p.n.to_string(),
            num(p.tv),
            num(p.stationary_tail),
            num(p.law_tail),
        ]);
    }
    let series: Vec<(u64, f64)> = tv.iter().map(|p| (p.n, p.tv)).collect();
    let fit = fit_for(cfg, &series).map_err(CliError::numeric("convergence"))?;
    let mut artifacts = vec![Artifact::Csv(tv_table), Artifact::Csv(fit_table(Some(&fit)))];

    if !cfg.run.betas.is_empty() {
        let Some(d) = &cfg.chain.return_time else {
            return Err(CliError::invalid("run.betas", "requires a power-law return time"));
        };
        let mut t = Table::new(
            "verdict",
            &["beta", "scaled_slope", "ci_low", "ci_high", "verdict", "predicted_vanishing"],
        );
        for &beta in &cfg.run.betas {
            let v = verify_rate_theorem(d, beta, &series).map_err(CliError::numeric("convergence"))?;
            let (lo, hi) = v.scaled_fit.slope_ci95();
            t.rows.push(vec![
                num(beta),
                num(v.scaled_fit.slope()),
                num(lo),
                num(hi),
                format!("{:?}", v.verdict).to_lowercase(),
                v.predicted_vanishing.to_string(),
            ]);
        }
        artifacts.push(Artifact::Csv(t));
    }
    Ok(Outcome {
        artifacts,
        summary: describe_fit("tv", &Ok(fit)),
    })
}

fn entropy(cfg: &ExperimentConfig, chain: &Chain, grid: &[u64]) -> Result<Outcome, CliError> {
    let s = start(cfg, chain, grid)?;
    let trunc = s.trunc.unwrap_or_else(|| Truncation::at(s.n_max));
    let series =
        excess_entropy_partials(chain, &s.init, s.n_max, trunc).map_err(CliError::numeric("entropy"))?;
    let tv = tv_to_stationary(chain, &s.init, grid, s.trunc).map_err(CliError::numeric("convergence"))?;
    let k = cfg.run.log_base.scale();
    let mut table = Table::new(
        "entropy",
        &["n", "conditional_entropy", "entropy_rate", "excess_partial", "tv_distance"],
    );
    for (&n, p) in grid.iter().zip(&tv) {
        let r = n as usize;
        table.rows.push(vec![
            n.to_string(),
            num(k * series.conditional_entropy(r)),
            num(k * series.rate),
            num(k * series.excess(r)),
            num(p.tv),
        ]);
    }
    let (what, values): (&str, Vec<(u64, f64)>) = if cfg.experiment == ExperimentKind::Excess {
        ("excess entropy", grid.iter().map(|&n| (n, k * series.excess(n as usize))).collect())
    } else {
        (
            "entropy gap",
            grid.iter()
                .map(|&n| (n, k * (series.conditional_entropy(n as usize) - series.rate).abs()))
                .collect(),
        )
    };
    let fit = if cfg.experiment == ExperimentKind::Excess {
        fit_power_law(&values)
    } else {
        fit_for(cfg, &values)
    };
    Ok(Outcome {
        artifacts: vec![Artifact::Csv(table), Artifact::Csv(fit_table(fit.as_ref().ok()))],
        summary: describe_fit(what, &fit),
    })
}

fn variance(cfg: &ExperimentConfig, chain: &Chain, grid: &[u64]) -> Result<Outcome, CliError> {
    let i = cfg.run.state;
    let mut series = counting_variance_exact(chain, i, grid).map_err(CliError::numeric("counting"))?;
    if cfg.run.reps > 0 {
        let seed = cfg.run.seed.ok_or_else(|| CliError::missing("run.seed"))?;
        let mc = counting_variance_mc(chain, i, grid, cfg.run.reps, seed)
            .map_err(CliError::numeric("counting"))?;
        series = series.with_mc(&mc);
    }
    let mut table = Table::new(
        "variance",
        &["n", "var_exact", "var_mc", "stderr_mc", "var_over_n", "normalized_var_over_n"],
    );
    for p in &series.points {
        table.rows.push(vec![
            p.n.to_string(),
            opt(p.var_exact),
            opt(p.var_mc),
            opt(p.stderr_mc),
            opt(p.var_over_n()),
            opt(p.normalized_count_var_over_n()),
        ]);
    }
    let mut hurst = Table::new("hurst", &["hurst", "stderr", "r_squared", "n_min", "n_max"]);
    let est = hurst_from_variance(&series);
    let summary = match &est {
        Ok(h) => {
            hurst.rows.push(vec![
                num(h.hurst),
                num(h.stderr),
                num(h.fit.r_squared),
                h.fit.n_min.to_string(),
                h.fit.n_max.to_string(),
            ]);
            format!("variance Hurst estimate {:.4} ± {:.4}", h.hurst, h.stderr)
        }
        Err(e) => format!("variance: no Hurst fit ({e})"),
    };
    Ok(Outcome {
        artifacts: vec![Artifact::Csv(table), Artifact::Csv(hurst)],
        summary,
    })
}

fn classify(cfg: &ExperimentConfig) -> Outcome {
    let class = class_of(cfg);
    let rate_exponent = match class {
        ErgodicityClass::Polynomial { rate_exponent } => Some(rate_exponent),
        _ => None,
    };
    let moment_index = cfg.chain.return_time.as_ref().map(|d| d.moment_index());
    let hurst = moment_index.and_then(|a| hurst_from_moment_index(a).ok());
    let mut t = Table::new("classify", &["class", "rate_exponent", "moment_index", "hurst"]);
    t.rows.push(vec![
        class_name(&class).into(),
        opt(rate_exponent),
        opt(moment_index),
        opt(hurst),
    ]);
    Outcome {
        artifacts: vec![Artifact::Csv(t)],
        summary: class_name(&class).into(),
    }
}

fn simulate(cfg: &ExperimentConfig, chain: &Chain) -> Result<Outcome, CliError> {
    let seed = cfg.run.seed.ok_or_else(|| CliError::missing("run.seed"))?;
    let traj = simulate_trajectory(chain, cfg.run.init_state, cfg.run.length, seed)
        .map_err(CliError::numeric("counting"))?;
    let mut values = Vec::with_capacity(traj.states.len() + 1);
    values.push(traj.init);
    values.extend(&traj.states);
    Ok(Outcome {
        summary: format!("simulated {} steps from state {}", traj.states.len(), traj.init),
        artifacts: vec![Artifact::Lines {
            name: "trajectory",
            values,
        }],
    })
}
