use std::fmt::Write as _;

use factest_core::permute::PermutationPlan;
use factest_core::procedures::{self, Reference};
use factest_core::{Dataset, Error, HypothesisKind, Method, TestResult};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MACHINE_HEADER: &str = "method,statistic,reference,df1,df2,p_value,hypothesis_scale,contrast,alpha,reject";

/// Results of every selected method on `data`.
pub fn analyze(config: &RunConfig, data: &Dataset) -> CliResult<Vec<(TestResult, HypothesisKind)>> {
    let design = data.design();
    let hypothesis = match config.contrast {
        Some(kind) => design.hypothesis(kind).map_err(|e| match e {
            Error::Domain(msg) => CliError::Config(msg),
            other => other.into(),
        })?,
        None => design.default_hypothesis()?,
    };
    let one_way = design.is_one_way();
    let methods: Vec<Method> = if config.methods.is_empty() {
        Method::ALL.into_iter().filter(|m| m.applies_to(one_way)).collect()
    } else {
        config.methods.clone()
    };
    let plan = PermutationPlan::monte_carlo(config.n_perm, config.seed);
    if methods.iter().any(|m| m.is_permutation()) {
        if config.n_perm == 0 {
            return Err(CliError::Config("n_perm must be at least 1 for permutation methods".into()));
        }
        for &a in &config.alphas {
            plan.check_resolution(a);
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let result = procedures::run(m, data, hypothesis.contrast(), &plan)?;
            Ok((result, hypothesis.kind()))
        })
        .collect()
}

fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub fn render_human(results: &[(TestResult, HypothesisKind)], alpha: f64) -> String {
    let mut out = String::new();
    for (r, contrast) in results {
        let df = match r.df() {
            Some((d1, Some(d2))) => format!("({}, {})", short(d1), short(d2)),
            Some((d1, None)) => short(d1),
            None => "-".into(),
        };
        let target = match r.scale {
            factest_core::HypothesisScale::Mean => "C mu = 0",
            factest_core::HypothesisScale::Distribution => "C F = 0",
        };
        let _ = writeln!(
            out,
            "{:<9} statistic = {:<12} df = {:<16} p-value = {:<10} reference = {}  hypothesis = {} ({}, contrast {})  {} at alpha = {}",
            r.method,
            short(r.statistic),
            df,
            short(r.p_value),
            r.reference,
            r.scale,
            target,
            contrast,
            if r.rejects(alpha) { "reject" } else { "retain" },
            alpha
        );
    }
    out
}

pub fn render_machine(results: &[(TestResult, HypothesisKind)], alpha: f64) -> String {
    let mut out = format!("{MACHINE_HEADER}\n");
    for (r, contrast) in results {
        let (df1, df2) = match r.df() {
            Some((d1, d2)) => (d1.to_string(), d2.map(|d| d.to_string()).unwrap_or_default()),
            None => (String::new(), String::new()),
        };
        let reference = match r.reference {
            Reference::Distribution(_) => r.reference.to_string().split('(').next().unwrap_or("").to_string(),
            Reference::Permutation { exact: true, .. } => "permutation-exact".into(),
            Reference::Permutation { .. } => "permutation".into(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.statistic,
            reference,
            df1,
            df2,
            r.p_value,
            r.scale,
            contrast,
            alpha,
            r.rejects(alpha)
        );
    }
    out
}
