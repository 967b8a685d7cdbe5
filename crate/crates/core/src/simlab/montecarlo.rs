use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{egp_innovations, gen_model_5_1, gen_model_5_2, EgpSpec};
use crate::bootstrap::{aligned_residuals, bootstrap_tests, BootstrapConfig, FAILURE_BUDGET};
use crate::crosscorr::{auto_var_order, bandwidth_rule, g_test, l_test, t_test, w_test, BandwidthRule, Variant};
use crate::error::{Error, Result};
use crate::hsic::{Direction, LagConfig};
use crate::kernels::KernelSpec;
use crate::models::{fit_ccc_garch, fit_var, FitResult, QmleOptions, DEFAULT_BURN_IN};
use crate::parallel;
use crate::rng::{self, Purpose};

/// Data-generating process for a Monte Carlo study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dgp {
    /// Two VAR(1) series; working model VAR(1) without intercept.
    Model51,
    /// Two CCC-GARCH(1,1) series; working model CCC-GARCH(1,1).
    Model52,
}

/// A test evaluated in every replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestSpec {
    Hsic { lag: LagConfig },
    G { max_lag: usize, variant: Variant },
    W { rule: BandwidthRule, variant: Variant },
    L { max_lag: usize, variant: Variant },
    T { max_lag: usize, variant: Variant },
}

fn variant_index(v: Variant) -> u8 {
    match v {
        Variant::One => 1,
        Variant::Two => 2,
    }
}

impl TestSpec {
    pub fn label(&self) -> String {
        match *self {
            TestSpec::Hsic { lag } => lag.label(),
            TestSpec::G { max_lag, variant } => format!("G{}({max_lag})", variant_index(variant)),
            TestSpec::W { rule, variant } => format!("W{}({})", variant_index(variant), rule.label()),
            TestSpec::L { max_lag, variant } => format!("L{}({max_lag})", variant_index(variant)),
            TestSpec::T { max_lag, variant } => format!("T{}({max_lag})", variant_index(variant)),
        }
    }
}

impl FromStr for TestSpec {
    type Err = Error;

    /// Parses `s1:0`, `s2:3`, `j1:6`, `g1:3`, `w2:h1`, `l1:3`, `t2:6`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognized test '{s}'"));
        let (head, arg) = s.split_once(':').ok_or_else(bad)?;
        let mut chars = head.chars();
        let family = chars.next().ok_or_else(bad)?.to_ascii_lowercase();
        let variant = match chars.as_str() {
            "1" => 1,
            "2" => 2,
            _ => return Err(bad()),
        };
        let direction = if variant == 1 { Direction::One } else { Direction::Two };
        let kind = if variant == 1 { Variant::One } else { Variant::Two };
        if family == 'w' {
            let rule = match arg {
                "h1" => BandwidthRule::H1,
                "h2" => BandwidthRule::H2,
                "h3" => BandwidthRule::H3,
                _ => return Err(bad()),
            };
            return Ok(TestSpec::W { rule, variant: kind });
        }
        let m: usize = arg.parse().map_err(|_| bad())?;
        Ok(match family {
            's' => TestSpec::Hsic { lag: LagConfig::single(m, direction) },
            'j' => TestSpec::Hsic { lag: LagConfig::joint(m, direction) },
            'g' => TestSpec::G { max_lag: m, variant: kind },
            'l' => TestSpec::L { max_lag: m, variant: kind },
            't' => TestSpec::T { max_lag: m, variant: kind },
            _ => return Err(bad()),
        })
    }
}

impl Dgp {
    /// The test battery reported for this design.
    pub fn default_tests(self) -> Vec<TestSpec> {
        let common = ["s1:0", "s1:3", "s2:3", "j1:3", "j1:6", "j2:3", "j2:6"];
        let rest: &[&str] = match self {
            Dgp::Model51 => &["g1:3", "g1:6", "g1:9", "g2:3", "g2:6", "g2:9", "w1:h1", "w1:h2", "w1:h3", "w2:h1", "w2:h2", "w2:h3"],
            Dgp::Model52 => &["l1:3", "l1:6", "l1:9", "l2:3", "l2:6", "l2:9", "t1:3", "t1:6", "t1:9", "t2:3", "t2:6", "t2:9"],
        };
        common.iter().chain(rest).map(|s| s.parse().expect("built-in test names parse")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub dgp: Dgp,
    pub egp: EgpSpec,
    pub n: usize,
    pub replications: usize,
    pub tests: Vec<TestSpec>,
    pub kernel: KernelSpec,
    /// Bootstrap settings; its `master_seed` is replaced per replication.
    pub bootstrap: BootstrapConfig,
    pub master_seed: u64,
    pub burn_in: usize,
}

impl McConfig {
    pub fn new(dgp: Dgp, egp: EgpSpec, n: usize, replications: usize, tests: Vec<TestSpec>) -> Self {
        Self {
            dgp,
            egp,
            n,
            replications,
            tests,
            kernel: KernelSpec::default(),
            bootstrap: BootstrapConfig::default(),
            master_seed: 0,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.egp.validate()?;
        self.bootstrap.validate()?;
        self.kernel.validate()?;
        if self.replications == 0 {
            return Err(Error::InvalidParameter("at least one replication is required".into()));
        }
        if self.tests.is_empty() {
            return Err(Error::InvalidParameter("no tests requested".into()));
        }
        let presample = match self.dgp {
            Dgp::Model51 => 1,
            Dgp::Model52 => 0,
        };
        let n_res = self.n.saturating_sub(presample);
        for t in &self.tests {
            match *t {
                TestSpec::Hsic { lag } => lag.check_feasible(n_res)?,
                TestSpec::G { max_lag, .. } | TestSpec::L { max_lag, .. } | TestSpec::T { max_lag, .. } => {
                    if max_lag + 1 >= n_res {
                        return Err(Error::LagTooLarge { lag: max_lag, n: n_res });
                    }
                }
                TestSpec::W { .. } => {
                    if self.n < 8 + auto_var_order(self.n) {
                        return Err(Error::InsufficientData { needed: 8 + auto_var_order(self.n), got: self.n });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rejection indicators of one replication, `[test][alpha]`.
pub type ReplicationOutcome = Vec<Vec<bool>>;

/// Rejection frequency of one test at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub test: String,
    pub alpha: f64,
    pub rejection_rate: f64,
    /// Binomial Monte Carlo standard error `sqrt(r (1 - r) / R)`.
    pub mc_se: f64,
    pub rejections: usize,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub rows: Vec<McRow>,
    pub failed_replications: Vec<usize>,
}

impl McSummary {
    pub fn rate(&self, test: &str, alpha: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.test == test && r.alpha == alpha).map(|r| r.rejection_rate)
    }
}

fn fit_pair(cfg: &McConfig, r: usize) -> Result<(FitResult, FitResult, crate::series::MultiSeries, crate::series::MultiSeries)> {
    let mut rng = rng::stream(cfg.master_seed, Purpose::MonteCarloData, r as u64, 0);
    let (eta1, eta2) = egp_innovations(&cfg.egp, cfg.n + cfg.burn_in, &mut rng)?;
    let (y1, y2) = match cfg.dgp {
        Dgp::Model51 => gen_model_5_1(&eta1, &eta2, cfg.burn_in)?,
        Dgp::Model52 => gen_model_5_2(&eta1, &eta2, cfg.burn_in)?,
    };
    let (f1, f2) = match cfg.dgp {
        Dgp::Model51 => (fit_var(&y1, 1, false)?, fit_var(&y2, 1, false)?),
        Dgp::Model52 => {
            let opts = |s| QmleOptions { seed: rng::derive_seed(cfg.master_seed, Purpose::MultiStart, 2 * r as u64 + s), ..QmleOptions::default() };
            (fit_ccc_garch(&y1, &opts(0))?, fit_ccc_garch(&y2, &opts(1))?)
        }
    };
    Ok((f1, f2, y1, y2))
}

fn replicate(cfg: &McConfig, r: usize) -> Result<ReplicationOutcome> {
    let (f1, f2, y1, y2) = fit_pair(cfg, r)?;
    let alphas = &cfg.bootstrap.alphas;

    let hsic: Vec<LagConfig> = cfg
        .tests
        .iter()
        .filter_map(|t| match t {
            TestSpec::Hsic { lag } => Some(*lag),
            _ => None,
        })
        .collect();
    let mut hsic_p = Vec::new();
    if !hsic.is_empty() {
        let boot = BootstrapConfig {
            master_seed: rng::derive_seed(cfg.master_seed, Purpose::MonteCarloBootstrap, r as u64),
            keep_replicates: false,
            ..cfg.bootstrap.clone()
        };
        hsic_p = bootstrap_tests(&f1, &f2, &hsic, &cfg.kernel, &cfg.kernel, &boot)?
            .into_iter()
            .map(|b| b.outcome.p_value)
            .collect();
    }

    let res = aligned_residuals(&f1, &f2)?;
    let mut hsic_iter = hsic_p.into_iter();
    cfg.tests
        .iter()
        .map(|t| {
            let p = match *t {
                TestSpec::Hsic { .. } => hsic_iter.next().expect("one p-value per HSIC test"),
                TestSpec::G { max_lag, variant } => g_test(&res, max_lag, variant)?.p_value,
                TestSpec::L { max_lag, variant } => l_test(&res, max_lag, variant)?.p_value,
                TestSpec::T { max_lag, variant } => t_test(&res, max_lag, variant)?.p_value,
                TestSpec::W { rule, variant } => {
                    let h = bandwidth_rule(rule, cfg.n).max(1);
                    w_test(&y1, &y2, auto_var_order(cfg.n), false, h, variant)?.p_value
                }
            };
            Ok(alphas.iter().map(|&a| p <= a).collect())
        })
        .collect()
}

/// Runs every replication and returns per-replication outcomes in order.
pub fn run_replications(cfg: &McConfig) -> Result<Vec<Result<ReplicationOutcome>>> {
    cfg.validate()?;
    Ok(parallel::map_indexed(cfg.replications, |r| {
        replicate(cfg, r).map_err(|e| Error::Replicate { replicate: r, source: Box::new(e) })
    }))
}

/// Aggregates replication outcomes, dropping failures within the budget.
pub fn summarize(cfg: &McConfig, outcomes: Vec<Result<ReplicationOutcome>>) -> Result<McSummary> {
    let total = outcomes.len();
    let mut failed = Vec::new();
    let mut first = None;
    let mut counts = vec![vec![0usize; cfg.bootstrap.alphas.len()]; cfg.tests.len()];
    for (r, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(ind) => {
                for (c, i) in counts.iter_mut().zip(&ind) {
                    for (cc, &rej) in c.iter_mut().zip(i) {
                        *cc += usize::from(rej);
                    }
                }
            }
            Err(e) => {
                failed.push(r);
                first.get_or_insert(e);
            }
        }
    }
    if failed.len() as f64 > FAILURE_BUDGET * total as f64 {
        return Err(Error::FailureBudget {
            failed: failed.len(),
            total,
            budget_pct: 100.0 * FAILURE_BUDGET,
            first: first.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    let used = total - failed.len();
    let mut rows = Vec::new();
    for (t, c) in cfg.tests.iter().zip(&counts) {
        for (&alpha, &k) in cfg.bootstrap.alphas.iter().zip(c) {
            let rate = k as f64 / used as f64;
            rows.push(McRow {
                test: t.label(),
                alpha,
                rejection_rate: rate,
                mc_se: (rate * (1.0 - rate) / used as f64).sqrt(),
                rejections: k,
                replications: used,
            });
        }
    }
    Ok(McSummary { rows, failed_replications: failed })
}

/// Generates data, fits working models and runs every requested test in each
/// replication, then aggregates rejection frequencies.
pub fn run_monte_carlo(cfg: &McConfig) -> Result<McSummary> {
    summarize(cfg, run_replications(cfg)?)
}
