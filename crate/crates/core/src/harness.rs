//! End-to-end runs: curve in, JSON report out.

use crate::abel::stratum1_expansion_check;
use crate::addition::{
    admissible_cells, master_polynomial_check, sigma_expansion_check, genus_two_addition_check, sign_audit, stratum_addition_check,
    AuditEntry, ParityTable,
};
use crate::checks::{derivative_check, quasi_periodicity_check};
use crate::curve::{CurveFile, CurveSpec, C64};
use crate::error::{Error, Result};
use crate::periods::{compute_periods, PeriodData};
use crate::sigma::{calibrate_gamma0, SigmaContext};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Periods,
    Verify,
    Audit,
    Expand,
}

#[derive(Clone, Debug)]
pub enum CurveSource {
    File(PathBuf),
    /// JSON in the curve-file format, or comma-separated real `λ_0, …, λ_{2g}`.
    Inline(String),
    Corpus(PathBuf),
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    pub identity: f64,
    pub quasi_periodicity: f64,
    pub derivative: f64,
    pub asymptotic: f64,
    pub legendre: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-6,
            quasi_periodicity: 1e-8,
            derivative: 1e-5,
            asymptotic: 1e-4,
            legendre: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub source: CurveSource,
    pub trials: usize,
    pub seed: u64,
    pub tol: Tolerances,
    pub output: Option<PathBuf>,
    pub slow_tier: bool,
}

impl RunConfig {
    pub fn new(command: Command, source: CurveSource) -> RunConfig {
        RunConfig {
            command,
            source,
            trials: 20,
            seed: 7,
            tol: Tolerances::default(),
            output: None,
            slow_tier: false,
        }
    }
}

/// A finished run: the report and the invariants that failed, in order.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: Value,
    pub failures: Vec<String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn read_curve_file(path: &Path) -> Result<CurveSpec> {
    let text = std::fs::read_to_string(path)?;
    let file: CurveFile = serde_json::from_str(&text)?;
    file.to_curve()
}

pub fn parse_inline(text: &str) -> Result<CurveSpec> {
    let text = text.trim();
    if text.starts_with('{') {
        let file: CurveFile = serde_json::from_str(text)?;
        return file.to_curve();
    }
    let coeffs: std::result::Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let coeffs = coeffs.map_err(|e| Error::Config(format!("inline curve: {e}")))?;
    CurveSpec::from_real(&coeffs)
}

/// Curve files in a corpus directory, sorted by file name.
pub fn read_corpus(dir: &Path) -> Result<Vec<(String, CurveSpec)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| Ok((stem(p), read_curve_file(p)?)))
        .collect()
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load(source: &CurveSource, slow: bool) -> Result<Vec<(String, CurveSpec)>> {
    let curves = match source {
        CurveSource::File(p) => vec![(stem(p), read_curve_file(p)?)],
        CurveSource::Inline(s) => vec![("inline".to_string(), parse_inline(s)?)],
        CurveSource::Corpus(d) => {
            let all = read_corpus(d)?;
            if all.is_empty() {
                return Err(Error::Config(format!("no curve files in {}", d.display())));
            }
            all.into_iter().filter(|(_, c)| slow || c.genus() <= 3).collect()
        }
    };
    Ok(curves)
}

struct Failures(Vec<String>);

impl Failures {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.0.push(what());
        }
    }
}

fn periods_section(name: &str, pd: &PeriodData, tol: &Tolerances, fails: &mut Failures) -> Value {
    fails.check(pd.legendre_residual <= tol.legendre, || {
        format!("{name}: Legendre residual {:.3e}", pd.legendre_residual)
    });
    fails.check(pd.min_imag_eigenvalue > 0.0, || {
        format!("{name}: Im T not positive definite ({:.3e})", pd.min_imag_eigenvalue)
    });
    serde_json::to_value(pd.to_report()).expect("serializable")
}

fn calibrated(curve: &CurveSpec, pd: &PeriodData) -> Result<(SigmaContext, Value)> {
    let raw = SigmaContext::uncalibrated(pd)?;
    let cal = calibrate_gamma0(&raw, curve)?;
    let ctx = raw.with_gamma0(C64::new(cal.gamma0[0], cal.gamma0[1]));
    Ok((ctx, serde_json::to_value(cal).expect("serializable")))
}

fn expansion_section(name: &str, curve: &CurveSpec, ctx: &SigmaContext, seed: u64, fails: &mut Failures) -> Result<Value> {
    let s1 = stratum1_expansion_check(curve, &[4e-3, 2e-3, 1e-3])?;
    fails.check(s1.pass, || format!("{name}: stratum-1 expansion of x and y"));
    let zeros = sigma_expansion_check(curve, ctx, seed)?;
    for l in &zeros.levels {
        fails.check(l.pass, || format!("{name}: sigma expansion at level {}", l.level));
    }
    Ok(json!({ "stratum1": s1, "sigma_zeros": zeros }))
}

fn verify_curve(name: &str, curve: &CurveSpec, cfg: &RunConfig, fails: &mut Failures) -> Result<Value> {
    let g = curve.genus();
    let tol = &cfg.tol;
    let pd = compute_periods(curve)?;
    let periods = periods_section(name, &pd, tol, fails);
    let (ctx, calibration) = calibrated(curve, &pd)?;
    let mut cells = Vec::new();
    for (m, n) in admissible_cells(g) {
        let rep = stratum_addition_check(curve, &ctx, m, n, cfg.trials, tol.identity, cfg.seed)?;
        fails.check(rep.unanimous, || format!("{name}: cell ({m}, {n}) has a split sign fit"));
        fails.check(rep.verdict, || {
            format!("{name}: cell ({m}, {n}) residual {:.3e}", rep.max_residual)
        });
        cells.push(json!({
            "curve": name,
            "cell": [m, n],
            "trials": rep.trials.iter().map(|t| json!({
                "seed": t.seed,
                "residual": t.residual,
                "sign_fit": t.sign_fit,
            })).collect::<Vec<_>>(),
            "max_residual": rep.max_residual,
            "cell_sign": rep.cell_sign,
            "predicted_signs": rep.predicted_signs,
            "verdict": rep.verdict,
        }));
    }
    let checks_trials = cfg.trials.min(10).max(1);
    let master = if g >= 2 {
        let b = master_polynomial_check(curve, &ctx, checks_trials, tol.identity, cfg.seed)?;
        fails.check(b.verdict, || format!("{name}: master polynomial residual {:.3e}", b.max_residual));
        serde_json::to_value(b).expect("serializable")
    } else {
        Value::Null
    };
    let classical = if g == 2 {
        let c = genus_two_addition_check(curve, &ctx, checks_trials, tol.identity, cfg.seed)?;
        fails.check(c.verdict, || format!("{name}: genus-two classical formula residual {:.3e}", c.max_residual));
        serde_json::to_value(c).expect("serializable")
    } else {
        Value::Null
    };
    let qp = quasi_periodicity_check(curve, &ctx, 10, tol.quasi_periodicity, cfg.seed)?;
    fails.check(qp.verdict, || format!("{name}: quasi-periodicity residual {:.3e}", qp.max_residual));
    let fd = derivative_check(&ctx, 10, tol.derivative, cfg.seed)?;
    fails.check(fd.verdict, || format!("{name}: derivative residual {:.3e}", fd.max_residual));
    let parity = ParityTable::measure(&ctx, cfg.seed)?;
    let expansions = expansion_section(name, curve, &ctx, cfg.seed, fails)?;
    Ok(json!({
        "curve": name,
        "genus": g,
        "lambda": curve.to_file().lambda,
        "periods": {
            "legendre_residual": pd.legendre_residual,
            "min_imag_eigenvalue": pd.min_imag_eigenvalue,
            "full": periods,
        },
        "calibration": calibration,
        "cells": cells,
        "master_polynomial": master,
        "genus_two_addition": classical,
        "quasi_periodicity": qp,
        "derivatives": fd,
        "parity": parity,
        "expansions": expansions,
    }))
}

/// Execute the configured pipeline; the report is returned, not written.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let curves = load(&cfg.source, cfg.slow_tier)?;
    let mut fails = Failures(Vec::new());
    let body = match cfg.command {
        Command::Periods => {
            let mut out = Vec::new();
            for (name, curve) in &curves {
                let pd = compute_periods(curve)?;
                out.push(json!({ "curve": name, "periods": periods_section(name, &pd, &cfg.tol, &mut fails) }));
            }
            json!({ "curves": out })
        }
        Command::Verify => {
            let mut out = Vec::new();
            for (name, curve) in &curves {
                out.push(verify_curve(name, curve, cfg, &mut fails)?);
            }
            json!({ "curves": out })
        }
        Command::Expand => {
            let mut out = Vec::new();
            for (name, curve) in &curves {
                let pd = compute_periods(curve)?;
                let (ctx, _) = calibrated(curve, &pd)?;
                out.push(json!({
                    "curve": name,
                    "expansions": expansion_section(name, curve, &ctx, cfg.seed, &mut fails)?,
                }));
            }
            json!({ "curves": out })
        }
        Command::Audit => {
            let mut contexts = Vec::new();
            for (name, curve) in &curves {
                let pd = compute_periods(curve)?;
                periods_section(name, &pd, &cfg.tol, &mut fails);
                contexts.push((name.clone(), curve, calibrated(curve, &pd)?.0));
            }
            let entries: Vec<AuditEntry> = contexts
                .iter()
                .map(|(name, curve, ctx)| AuditEntry {
                    name: name.clone(),
                    curve,
                    ctx,
                })
                .collect();
            let (table, _) = sign_audit(&entries, cfg.trials, cfg.tol.identity, cfg.seed)?;
            for c in &table.cells {
                fails.check(c.status == "OK", || {
                    format!("{}: cell ({}, {}) {}", c.curve, c.cell.0, c.cell.1, c.status)
                });
            }
            json!({ "sign_audit": table })
        }
    };
    let report = json!({
        "schema": SCHEMA,
        "command": cfg.command,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "tolerances": cfg.tol,
        "result": body,
        "failures": fails.0,
        "verdict": fails.0.is_empty(),
    });
    Ok(RunOutcome {
        report,
        failures: fails.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_forms_agree() {
        let a = parse_inline("0, 9, 0, -10, 0").unwrap();
        let b = parse_inline(r#"{"lambda": [[0,0],[9,0],[0,0],[-10,0],[0,0]]}"#).unwrap();
        assert_eq!(a.coefficients(), b.coefficients());
        assert!(matches!(parse_inline("0, x"), Err(Error::Config(_))));
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        let mut cfg = RunConfig::new(Command::Verify, CurveSource::Inline("0,-1,0".into()));
        cfg.trials = 0;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn periods_report_carries_schema_and_verdict() {
        let cfg = RunConfig::new(Command::Periods, CurveSource::Inline("0,-1,0".into()));
        let out = run(&cfg).unwrap();
        assert!(out.passed());
        assert_eq!(out.report["schema"], SCHEMA);
        assert_eq!(out.report["command"], "periods");
    }

    #[test]
    fn failed_invariants_are_listed_in_order() {
        let mut cfg = RunConfig::new(Command::Verify, CurveSource::Inline("0,-1,0".into()));
        cfg.trials = 2;
        cfg.tol.identity = 0.0;
        cfg.tol.quasi_periodicity = 0.0;
        let out = run(&cfg).unwrap();
        assert!(!out.passed());
        assert!(out.failures[0].contains("cell (1, 1)"));
        assert_eq!(out.report["verdict"], false);
    }
}
