use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{validate, ScenarioConfig};
use super::output::{ArtifactHeader, OutputFormat, TableWriter};
use crate::accounting::{corollary_comparison, DollarRule};
use crate::auction::{expected_revenue, AuctionFormat, AuctionKind};
use crate::error::Error;
use crate::extension::compare_regimes;
use crate::market::MonetaryPolicy;
use crate::numerics::{annuity, RunningStats};
use crate::simulation::{Regime, SimulationTrace, Simulator};
use crate::solver::{solve_backward, SolveMethod};
use crate::valuation::expected_second_highest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Simulate,
    CompareFormats,
    BurnDemo,
    Corollary,
    Extension,
    Validate,
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(String),
    Numeric(String),
    /// A demo's built-in check failed; artifacts were still written.
    Acceptance(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Acceptance(_) => 4,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numeric(m) => write!(f, "numerical failure: {m}"),
            RunError::Acceptance(m) => write!(f, "check failed: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(m) | Error::Unsupported(m) => RunError::Config(m),
            Error::Numerical(m) | Error::Mismatch(m) => RunError::Numeric(m),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub artifacts: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub lines: Vec<String>,
}

type RunResult = std::result::Result<RunReport, RunError>;

/// Runs one subcommand against a scenario file.
pub fn run(command: Command, config_path: &Path, overrides: &Overrides) -> RunResult {
    if command == Command::Validate {
        let violations = validate(config_path).map_err(|e| RunError::Config(format!("cannot read {}: {e}", config_path.display())))?;
        if violations.is_empty() {
            return Ok(RunReport { artifacts: vec![], lines: vec!["config is valid".into()] });
        }
        let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(RunError::Config(text.join("\n")));
    }
    let mut config = ScenarioConfig::load(config_path).map_err(|v| RunError::Config(v.to_string()))?;
    if let Some(seed) = overrides.seed {
        config.mc.seed = seed;
    }
    if let Some(paths) = overrides.paths {
        config.mc.paths = paths;
    }
    if let Some(dir) = &overrides.out {
        config.output.dir = dir.clone();
    }
    run_config(command, &config, overrides.format)
}

/// Runs one subcommand against an already-loaded scenario.
pub fn run_config(command: Command, config: &ScenarioConfig, format: OutputFormat) -> RunResult {
    let violations = config.validate();
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(RunError::Config(text.join("\n")));
    }
    let ctx = Context { config, format, header: ArtifactHeader::new(config.hash(), config.mc.seed) };
    match command {
        Command::Validate => Ok(RunReport { artifacts: vec![], lines: vec!["config is valid".into()] }),
        Command::Solve => ctx.solve(),
        Command::Simulate => ctx.simulate(),
        Command::CompareFormats => ctx.compare_formats(),
        Command::BurnDemo => ctx.burn_demo(),
        Command::Corollary => ctx.corollary(),
        Command::Extension => ctx.extension(),
    }
}

struct Context<'a> {
    config: &'a ScenarioConfig,
    format: OutputFormat,
    header: ArtifactHeader,
}

const CHUNK: u64 = 4096;

impl Context<'_> {
    fn table(&self, stem: &str, columns: &[&str]) -> std::io::Result<TableWriter> {
        TableWriter::create(&self.config.output.dir, stem, self.format, &self.header, columns)
    }

    fn solve(&self) -> RunResult {
        let cfg = self.config;
        let dist = cfg.distribution()?;
        let profile = solve_backward(&dist, cfg.n, cfg.horizon, cfg.beta, &cfg.policy()?, SolveMethod::Quadrature)?;
        let mut table = self.table("solve", &["t", "P_t", "speculation_prob"])?;
        for t in 1..=cfg.horizon {
            table.row(&[t.into(), profile.cap(t).into(), profile.speculation_prob()[t - 1].into()])?;
        }
        let path = table.finish()?;
        Ok(RunReport { artifacts: vec![path], lines: profile.report().lines().map(String::from).collect() })
    }

    fn simulate(&self) -> RunResult {
        let cfg = self.config;
        let dist = cfg.distribution()?;
        let profile = solve_backward(&dist, cfg.n, cfg.horizon, cfg.beta, &cfg.policy()?, SolveMethod::Quadrature)?;
        let k = expected_second_highest(&dist, cfg.n)?;
        let target = annuity(cfg.beta, cfg.horizon) * k;
        let mut report = RunReport::default();
        let mut summary = self.table("simulate_summary", &["regime", "paths", "pdv_mean", "pdv_se", "dollar_pdv", "degenerate_periods"])?;
        for regime in &cfg.regimes {
            let sim = match regime {
                Regime::Dollars => Simulator::dollars(&dist, cfg.n, cfg.horizon)?,
                Regime::Equity => Simulator::equity(&dist, cfg.n, cfg.horizon, cfg.beta)?,
                Regime::Tokens => Simulator::tokens(&profile, &dist, cfg.n, cfg.horizon, cfg.initial_supply)?,
            };
            let columns = ["path_id", "t", "B", "p", "S", "M", "A", "revenue", "bidder_payoff_mean"];
            let mut table = self.table(&format!("trace_{}", regime.as_str()), &columns)?;
            let mut pdv = RunningStats::default();
            let mut degenerate = 0u64;
            for_each_chunk(&sim, cfg.mc.paths, cfg.mc.seed, |trace| {
                pdv.push(trace.pdv_revenue(cfg.beta));
                for p in &trace.periods {
                    degenerate += p.degenerate as u64;
                    table.row(&[
                        trace.path_id.into(),
                        p.t.into(),
                        p.total_payment.into(),
                        p.price.into(),
                        p.speculative_demand.into(),
                        p.supply.into(),
                        p.auctioneer_tokens.into(),
                        p.revenue.into(),
                        p.bidder_payoff_mean().into(),
                    ])?;
                }
                Ok(())
            })?;
            report.artifacts.push(table.finish()?);
            let est = pdv.estimate();
            summary.row(&[
                regime.as_str().into(),
                cfg.mc.paths.into(),
                est.mean.into(),
                est.se.into(),
                target.into(),
                degenerate.into(),
            ])?;
            report.lines.push(format!(
                "{:<8} mean PDV revenue {:.6} (se {:.2e}) vs dollar PDV {:.6}{}",
                regime.as_str(),
                est.mean,
                est.se,
                target,
                if degenerate > 0 { format!(", {degenerate} degenerate periods") } else { String::new() }
            ));
        }
        report.artifacts.push(summary.finish()?);
        Ok(report)
    }

    fn compare_formats(&self) -> RunResult {
        let cfg = self.config;
        if cfg.mc.paths < 10_000 {
            return Err(RunError::Config(format!("mc.paths: compare-formats needs at least 10000 paths (got {})", cfg.mc.paths)));
        }
        let dist = cfg.distribution()?;
        let k = expected_second_highest(&dist, cfg.n)?;
        let spa = AuctionFormat::with_default_reserve(AuctionKind::SecondPrice, &dist);
        let fpa = AuctionFormat::with_default_reserve(AuctionKind::FirstPrice, &dist);
        let seed = cfg.mc.seed;
        let a = expected_revenue(&spa, &dist, cfg.n, cfg.mc.paths, seed)?;
        let b = expected_revenue(&fpa, &dist, cfg.n, cfg.mc.paths, seed.wrapping_add(1))?;
        let mut table = self.table("formats", &["format", "n", "mean", "se", "paths", "expected"])?;
        table.row(&["second-price".into(), cfg.n.into(), a.mean.into(), a.se.into(), a.samples.into(), k.into()])?;
        table.row(&["first-price".into(), cfg.n.into(), b.mean.into(), b.se.into(), b.samples.into(), k.into()])?;
        let pooled = (a.se * a.se + b.se * b.se).sqrt();
        let gap = (a.mean - b.mean).abs();
        let report = RunReport {
            artifacts: vec![table.finish()?],
            lines: vec![
                format!("second-price {:.6} (se {:.2e})", a.mean, a.se),
                format!("first-price  {:.6} (se {:.2e})", b.mean, b.se),
                format!("gap {gap:.2e}, pooled se {pooled:.2e}, expected {k:.6}"),
            ],
        };
        if gap > cfg.mc.tolerance_sigmas * pooled {
            return Err(RunError::Acceptance(format!("formats differ by {gap:.3e} > {} pooled se", cfg.mc.tolerance_sigmas)));
        }
        Ok(report)
    }

    fn burn_demo(&self) -> RunResult {
        let cfg = self.config;
        let dist = cfg.distribution()?;
        let policy = MonetaryPolicy::burn(cfg.horizon)?;
        let profile = solve_backward(&dist, cfg.n, cfg.horizon, cfg.beta, &policy, SolveMethod::Quadrature)?;
        let k = expected_second_highest(&dist, cfg.n)?;
        let pledge = cfg.beta * annuity(cfg.beta, cfg.horizon - 1) * k;
        let sim = Simulator::tokens(&profile, &dist, cfg.n, cfg.horizon, cfg.initial_supply)?;
        let mut table = self.table("burn", &["path_id", "B_1", "r_1", "identity_error", "later_revenue_max_abs"])?;
        let mut r1 = RunningStats::default();
        let mut worst_error = 0.0f64;
        let mut worst_later = 0.0f64;
        for_each_chunk(&sim, cfg.mc.paths, cfg.mc.seed, |trace| {
            let first = &trace.periods[0];
            let error = (first.revenue - (first.total_payment + pledge)).abs();
            let later = trace.periods[1..].iter().fold(0.0f64, |m, p| m.max(p.revenue.abs()));
            worst_error = worst_error.max(error);
            worst_later = worst_later.max(later);
            r1.push(first.revenue);
            table.row(&[trace.path_id.into(), first.total_payment.into(), first.revenue.into(), error.into(), later.into()])?;
            Ok(())
        })?;
        let est = r1.estimate();
        let report = RunReport {
            artifacts: vec![table.finish()?],
            lines: vec![
                format!("mean r_1 {:.6} (se {:.2e}); expected {:.6}", est.mean, est.se, k + pledge),
                format!("max |r_1 - B_1 - pledge| = {worst_error:.2e}; max |r_t| for t >= 2 = {worst_later:.2e}"),
            ],
        };
        if worst_error > 1e-9 || worst_later != 0.0 {
            return Err(RunError::Acceptance("burn identity violated".into()));
        }
        Ok(report)
    }

    fn corollary(&self) -> RunResult {
        let cfg = self.config;
        let dist = cfg.distribution()?;
        let model = cfg.utility_model()?;
        let strict = model.is_strictly_concave() && cfg.horizon > 1;
        let mut table = self.table(
            "corollary",
            &[
                "rule",
                "token_burn",
                "token_burn_se",
                "lemma1_bound",
                "lemma1_bound_se",
                "dollar",
                "dollar_se",
                "advantage",
                "advantage_se",
            ],
        )?;
        let mut report = RunReport::default();
        let mut failures = Vec::new();
        for rule in [DollarRule::ConsumeIncome, DollarRule::SmoothToExpected] {
            let rep = corollary_comparison(&dist, cfg.n, cfg.horizon, &model, rule, cfg.mc.paths, cfg.mc.seed)?;
            let name = match rule {
                DollarRule::ConsumeIncome => "consume-income",
                DollarRule::SmoothToExpected => "smooth-to-expected",
            };
            table.row(&[
                name.into(),
                rep.token_burn.mean.into(),
                rep.token_burn.se.into(),
                rep.lemma1_bound.mean.into(),
                rep.lemma1_bound.se.into(),
                rep.dollar.mean.into(),
                rep.dollar.se.into(),
                rep.advantage.mean.into(),
                rep.advantage.se.into(),
            ])?;
            report.lines.push(format!(
                "{name:<18} burn {:.6}  bound {:.6}  dollars {:.6}  advantage {:.3e} (se {:.2e})",
                rep.token_burn.mean, rep.lemma1_bound.mean, rep.dollar.mean, rep.advantage.mean, rep.advantage.se
            ));
            if !rep.holds(strict, cfg.mc.tolerance_sigmas) {
                failures.push(name);
            }
            if !rep.burn_minus_bound.covers(0.0, cfg.mc.tolerance_sigmas) && rep.burn_minus_bound.mean.abs() > 1e-9 {
                failures.push("burn utility differs from the smoothing bound");
            }
        }
        report.artifacts.push(table.finish()?);
        if !failures.is_empty() {
            return Err(RunError::Acceptance(format!("burn policy did not beat dollars: {}", failures.join(", "))));
        }
        Ok(report)
    }

    fn extension(&self) -> RunResult {
        let cfg = self.config;
        let spec = cfg.extension_spec();
        let model = cfg.two_period()?;
        let cmp = compare_regimes(&model, &spec.c_grid)?;
        let mut table = self.table("extension", &["c", "dollar_utility", "token_utility", "sigma_star", "expected_alpha"])?;
        for r in &cmp.rows {
            table.row(&[r.c.into(), r.dollar_utility.into(), r.token_utility.into(), r.sigma_star.into(), r.expected_alpha.into()])?;
        }
        let mut lines = vec![
            format!(
                "token optimum sigma* = {:.6}, utility {:.6}, E[alpha] = {:.6} (boundary utility {:.6})",
                cmp.sigma.sigma, cmp.sigma.utility, cmp.sigma.expected_alpha, cmp.sigma.boundary_utility
            ),
            match cmp.crossing {
                Some(c) => format!("dollars weakly beat tokens from c* = {c} on this grid"),
                None => "tokens beat dollars on the whole grid".into(),
            },
            "dollar utilities come from one contract family and are a lower bound".into(),
        ];
        if let Some(d) = &cmp.sigma.diagnostic {
            lines.push(d.clone());
        }
        let report = RunReport { artifacts: vec![table.finish()?], lines };
        let starts_at_zero = cmp.rows.first().is_some_and(|r| r.c == 0.0);
        if !cmp.dollar_utility_nondecreasing()
            || !cmp.token_utility_constant()
            || (starts_at_zero && !cmp.tokens_preferred_at_zero())
        {
            return Err(RunError::Acceptance("c-sweep shape check failed".into()));
        }
        Ok(report)
    }
}

/// Generates traces in parallel chunks and hands them to `visit` in path order.
fn for_each_chunk<F>(sim: &Simulator<'_>, paths: u64, seed: u64, mut visit: F) -> std::io::Result<()>
where
    F: FnMut(&SimulationTrace) -> std::io::Result<()>,
{
    let mut start = 0;
    while start < paths {
        let end = (start + CHUNK).min(paths);
        let traces: Vec<SimulationTrace> = (start..end).into_par_iter().map(|i| sim.path(seed, i)).collect();
        for trace in &traces {
            visit(trace)?;
        }
        start = end;
    }
    Ok(())
}
