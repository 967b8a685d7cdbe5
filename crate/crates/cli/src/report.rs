//! JSON report written by every subcommand.

use std::io::Write;
use std::path::Path;

use hsicts::models::FitResult;
use hsicts::outcome::TestOutcome;
use hsicts::simlab::McSummary;
use serde::Serialize;

use crate::failure::Failure;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything needed to replay a run. Thread count is deliberately absent:
/// results do not depend on it.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(seed: u64, config: serde_json::Value) -> Self {
        Self { tool: "hsicts", version: env!("CARGO_PKG_VERSION"), seed, config }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub series: String,
    pub model: String,
    pub n_obs: usize,
    pub presample: usize,
    pub theta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loglik: Option<f64>,
    pub residual_mean: Vec<f64>,
    /// Row-major residual covariance.
    pub residual_cov: Vec<f64>,
}

impl FitSummary {
    pub fn new(series: &str, fit: &FitResult) -> Self {
        let eff = fit.effective_residuals();
        Self {
            series: series.to_owned(),
            model: fit.spec.to_string(),
            n_obs: fit.n_obs(),
            presample: fit.presample,
            theta: fit.theta.clone(),
            loglik: fit.loglik,
            residual_mean: eff.column_means(),
            residual_cov: eff.covariance(),
        }
    }
}

/// One row of a lag scan: a single-lag statistic and its one-sided 95% bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagRow {
    pub test_name: String,
    pub lag: usize,
    pub direction: u8,
    pub statistic: f64,
    pub bound_95: Option<f64>,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tests: Vec<TestOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lagscan: Vec<LagRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McSummary>,
}

impl Report {
    pub fn new(command: &'static str, provenance: Provenance) -> Self {
        Self { schema_version: SCHEMA_VERSION, command, provenance, fits: vec![], tests: vec![], lagscan: vec![], monte_carlo: None }
    }

    /// Rejects reports carrying NaN or infinite statistics.
    pub fn check_finite(&self) -> Result<(), Failure> {
        let bad = |what: &str| Err(Failure::Numerical(anyhow::anyhow!("non-finite value in {what}")));
        for t in &self.tests {
            let cvs = t.critical_values.iter().filter_map(|c| c.value);
            if ![t.statistic, t.scaled, t.p_value].into_iter().chain(cvs).all(f64::is_finite) {
                return bad(&t.test);
            }
        }
        for f in &self.fits {
            if !f.theta.iter().chain(&f.residual_cov).all(|v| v.is_finite()) {
                return bad(&f.series);
            }
        }
        for r in &self.lagscan {
            if !(r.statistic.is_finite() && r.p_value.is_finite() && r.bound_95.is_none_or(f64::is_finite)) {
                return bad(&r.test_name);
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(text: &[u8], path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::data(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text).and_then(|_| out.flush()).map_err(|e| Failure::data(format!("stdout: {e}")))
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Tidy CSV of test outcomes, one row per test.
pub fn tests_csv(tests: &[TestOutcome]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let alphas: Vec<f64> = tests.first().map(|t| t.critical_values.iter().map(|c| c.alpha).collect()).unwrap_or_default();
    let mut header: Vec<String> = ["test", "statistic", "scaled", "p_value", "reference", "n", "n_effective"].map(String::from).to_vec();
    header.extend(alphas.iter().map(|a| format!("critical_{a}")));
    w.write_record(&header)?;
    for t in tests {
        let reference = match &t.reference {
            hsicts::outcome::Reference::Bootstrap { replicates, .. } => format!("bootstrap({replicates})"),
            hsicts::outcome::Reference::ChiSquare { df } => format!("chi2({df})"),
            hsicts::outcome::Reference::StandardNormal => "normal".into(),
        };
        let mut row = vec![
            t.test.clone(),
            t.statistic.to_string(),
            t.scaled.to_string(),
            t.p_value.to_string(),
            reference,
            t.n.to_string(),
            t.n_effective.to_string(),
        ];
        for a in &alphas {
            row.push(fmt_opt(t.critical_values.iter().find(|c| c.alpha == *a).and_then(|c| c.value)));
        }
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

pub fn lagscan_csv(rows: &[LagRow]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lag", "direction", "test_name", "statistic", "bound_95", "p_value"])?;
    for r in rows {
        w.write_record([
            r.lag.to_string(),
            r.direction.to_string(),
            r.test_name.clone(),
            r.statistic.to_string(),
            fmt_opt(r.bound_95),
            r.p_value.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}

pub fn monte_carlo_csv(summary: &McSummary) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["test", "alpha", "rejection_rate", "mc_se", "rejections", "replications"])?;
    for r in &summary.rows {
        w.write_record([
            r.test.clone(),
            r.alpha.to_string(),
            r.rejection_rate.to_string(),
            r.mc_se.to_string(),
            r.rejections.to_string(),
            r.replications.to_string(),
        ])?;
    }
    Ok(w.into_inner()?)
}
