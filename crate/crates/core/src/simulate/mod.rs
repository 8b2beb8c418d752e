//! Monte Carlo estimation of type-I error rates over the scenario registry.
//!
//! Every replication draws its dataset from a stream keyed by
//! `(seed, layout, setting, index, m, replication)`, so all methods and
//! significance levels of a scenario are evaluated on the same datasets and
//! results do not depend on the number of worker threads.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::distgen::{derive_key, generate_dataset, RngStream};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::permute::PermutationPlan;
use crate::procedures::{self, HypothesisScale, Method};

mod registry;
mod table;

pub use registry::{build_scenario, registry, ColorClass, Layout, Scenario};
pub use table::{read_csv, write_csv, CSV_HEADER};

/// One (scenario, m, alpha, method) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub scenario: Scenario,
    pub m: usize,
    pub alpha: f64,
    pub method: Method,
    pub n_sim: u64,
    pub n_perm: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rejections: u64,
    pub n_sim: u64,
    pub rate: f64,
    pub mc_se: f64,
    /// `(rate - alpha) * 100`, rounded to ten decimals.
    pub deviation_pct: f64,
}

impl RateEstimate {
    pub fn new(rejections: u64, n_sim: u64, alpha: f64) -> Self {
        let rate = rejections as f64 / n_sim as f64;
        Self {
            rejections,
            n_sim,
            rate,
            mc_se: (rate * (1.0 - rate) / n_sim as f64).sqrt(),
            deviation_pct: deviation_pct(rate, alpha),
        }
    }

    /// Whether `|rate - alpha| <= k * sqrt(alpha (1 - alpha) / n_sim)`.
    pub fn within(&self, alpha: f64, k: f64) -> bool {
        (self.rate - alpha).abs() <= k * (alpha * (1.0 - alpha) / self.n_sim as f64).sqrt()
    }
}

pub fn deviation_pct(rate: f64, alpha: f64) -> f64 {
    ((rate - alpha) * 100.0 * 1e10).round() / 1e10
}

/// Counts `p <= alpha`.
pub fn tally(p_values: &[f64], alpha: f64) -> RateEstimate {
    let rejections = p_values.iter().filter(|&&p| p <= alpha).count() as u64;
    RateEstimate::new(rejections, p_values.len() as u64, alpha)
}

fn contrast_for(layout: Layout, m: usize, scenario: &Scenario) -> Result<Matrix> {
    Ok(scenario.design(m)?.hypothesis(layout.hypothesis())?.contrast().clone())
}

fn method_id(method: Method) -> u64 {
    Method::ALL.iter().position(|&m| m == method).unwrap() as u64
}

/// The dataset of replication `rep`.
pub fn replicate_dataset(scenario: &Scenario, m: usize, rep: u64, seed: u64) -> Result<Dataset> {
    let stream = RngStream::keyed(
        seed,
        &[scenario.layout.id(), scenario.setting as u64, scenario.index as u64, m as u64, rep],
    );
    generate_dataset(scenario, m, &stream)
}

/// p-values of every method on each of `n_sim` replications, indexed
/// `[method][replication]`. A method that fails on a replication gets
/// p = 1, so the failure counts as a non-rejection.
pub fn replicate_pvalues(
    scenario: &Scenario,
    m: usize,
    methods: &[Method],
    n_sim: u64,
    n_perm: u64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n_sim == 0 {
        return Err(Error::Config("n_sim must be at least 1".into()));
    }
    let one_way = scenario.layout == Layout::OneWay;
    if let Some(bad) = methods.iter().find(|m| !m.applies_to(one_way)) {
        return Err(Error::Config(format!(
            "{bad} is defined for one-way layouts only, scenario is {}",
            scenario.layout
        )));
    }
    if n_perm == 0 && methods.iter().any(|m| m.is_permutation()) {
        return Err(Error::Config("n_perm must be at least 1 for permutation methods".into()));
    }
    let contrast = contrast_for(scenario.layout, m, scenario)?;
    let per_rep: Vec<(Vec<f64>, Vec<String>)> = (0..n_sim)
        .into_par_iter()
        .map(|rep| {
            let data = replicate_dataset(scenario, m, rep, seed)?;
            let mut failures = Vec::new();
            let ps = methods
                .iter()
                .map(|&method| {
                    let plan = PermutationPlan::monte_carlo(
                        n_perm,
                        derive_key(&[
                            seed,
                            scenario.layout.id(),
                            scenario.setting as u64,
                            scenario.index as u64,
                            m as u64,
                            rep,
                            method_id(method),
                        ]),
                    );
                    match procedures::run(method, &data, &contrast, &plan) {
                        Ok(r) => r.p_value,
                        Err(e) => {
                            failures.push(format!("{method}: {e}"));
                            1.0
                        }
                    }
                })
                .collect();
            Ok((ps, failures))
        })
        .collect::<Result<_>>()?;
    let failures: Vec<&String> = per_rep.iter().flat_map(|(_, f)| f).collect();
    if let Some(first) = failures.first() {
        log::warn!(
            "{} setting {} scenario {} m={m}: {} method failures counted as non-rejections (first: {first})",
            scenario.layout,
            scenario.setting,
            scenario.index,
            failures.len()
        );
    }
    Ok((0..methods.len())
        .map(|k| per_rep.iter().map(|(ps, _)| ps[k]).collect())
        .collect())
}

/// Rejection rate of one grid cell.
pub fn run_cell(cell: &GridCell, master_seed: u64) -> Result<RateEstimate> {
    validate_alpha(cell.alpha)?;
    if cell.method.is_permutation() {
        PermutationPlan::monte_carlo(cell.n_perm, 0).check_resolution(cell.alpha);
    }
    let ps = replicate_pvalues(&cell.scenario, cell.m, &[cell.method], cell.n_sim, cell.n_perm, master_seed)?;
    Ok(tally(&ps[0], cell.alpha))
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha = {alpha} outside (0, 1)")))
    }
}

/// Selection and scale of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub layouts: Vec<Layout>,
    pub settings: Vec<u8>,
    /// Methods to run; those not applicable to a layout are skipped there.
    pub methods: Vec<Method>,
    pub m_values: Vec<usize>,
    pub alphas: Vec<f64>,
    pub n_sim: u64,
    pub n_perm: u64,
    pub seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
}

impl Default for GridConfig {
    /// Desk scale: every one-way scenario, m in {0, 25}, alpha = 0.05, all
    /// methods, 2,000 replications and 1,999 permutations.
    fn default() -> Self {
        Self {
            layouts: vec![Layout::OneWay],
            settings: vec![1, 2, 3],
            methods: Method::ALL.to_vec(),
            m_values: vec![0, 25],
            alphas: vec![0.05],
            n_sim: 2_000,
            n_perm: 1_999,
            seed: 1,
            workers: 0,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sim == 0 {
            return Err(Error::Config("n_sim must be at least 1".into()));
        }
        for list_empty in [
            (self.layouts.is_empty(), "layouts"),
            (self.settings.is_empty(), "settings"),
            (self.methods.is_empty(), "methods"),
            (self.m_values.is_empty(), "m values"),
            (self.alphas.is_empty(), "alpha levels"),
        ] {
            if list_empty.0 {
                return Err(Error::Config(format!("no {} selected", list_empty.1)));
            }
        }
        if let Some(s) = self.settings.iter().find(|s| !(1..=3).contains(*s)) {
            return Err(Error::Config(format!("setting {s} does not exist, expected 1, 2 or 3")));
        }
        for &a in &self.alphas {
            validate_alpha(a)?;
        }
        if let Some(m) = self
            .methods
            .iter()
            .find(|m| !self.layouts.iter().any(|l| m.applies_to(*l == Layout::OneWay)))
        {
            return Err(Error::Config(format!("{m} applies to none of the selected layouts")));
        }
        if self.methods.iter().any(|m| m.is_permutation()) {
            if self.n_perm == 0 {
                return Err(Error::Config("n_perm must be at least 1 for permutation methods".into()));
            }
            let plan = PermutationPlan::monte_carlo(self.n_perm, 0);
            for &a in &self.alphas {
                plan.check_resolution(a);
            }
        }
        Ok(())
    }

    /// Scenarios in output order.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut layouts = self.layouts.clone();
        layouts.sort();
        layouts.dedup();
        let mut settings = self.settings.clone();
        settings.sort();
        settings.dedup();
        layouts
            .into_iter()
            .flat_map(registry)
            .filter(|s| settings.contains(&s.setting))
            .collect()
    }

    fn sorted_methods(&self, layout: Layout) -> Vec<Method> {
        let mut methods: Vec<Method> = self
            .methods
            .iter()
            .copied()
            .filter(|m| m.applies_to(layout == Layout::OneWay))
            .collect();
        methods.sort();
        methods.dedup();
        methods
    }
}

/// One line of the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub layout: Layout,
    pub setting: u8,
    pub scenario_index: usize,
    pub label: String,
    pub m: usize,
    pub alpha: f64,
    pub method: Method,
    pub hypothesis_scale: HypothesisScale,
    pub h0f_holds: bool,
    pub n_sim: u64,
    /// 0 for methods without resampling.
    pub n_perm: u64,
    pub estimate: RateEstimate,
}

/// Runs the grid. Rows are ordered by scenario, m, alpha and method.
pub fn run_grid(config: &GridConfig) -> Result<Vec<GridRow>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut m_values = config.m_values.clone();
    m_values.sort();
    m_values.dedup();
    let mut alphas = config.alphas.clone();
    alphas.sort_by(|a, b| b.total_cmp(a));
    alphas.dedup();
    let scenarios = config.scenarios();

    pool.install(|| {
        let mut rows = Vec::new();
        for scenario in &scenarios {
            let methods = config.sorted_methods(scenario.layout);
            for &m in &m_values {
                log::info!(
                    "{} setting {} scenario {} m={m}: {} methods x {} replications",
                    scenario.layout,
                    scenario.setting,
                    scenario.index,
                    methods.len(),
                    config.n_sim
                );
                let ps = replicate_pvalues(scenario, m, &methods, config.n_sim, config.n_perm, config.seed)?;
                for &alpha in &alphas {
                    for (method, p) in methods.iter().zip(&ps) {
                        rows.push(GridRow {
                            layout: scenario.layout,
                            setting: scenario.setting,
                            scenario_index: scenario.index,
                            label: scenario.label.clone(),
                            m,
                            alpha,
                            method: *method,
                            hypothesis_scale: method.scale(),
                            h0f_holds: scenario.h0f_holds(),
                            n_sim: config.n_sim,
                            n_perm: if method.is_permutation() { config.n_perm } else { 0 },
                            estimate: tally(p, alpha),
                        });
                    }
                }
            }
        }
        Ok(rows)
    })
}
