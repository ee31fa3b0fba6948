use rayon::prelude::*;
use serde::Serialize;

use super::{
    judge, limiting_gaussian_moments, CellConstants, GaussianMoments, StatisticRegistry, Target,
};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::fmt::{float17, opt_float17};
use crate::gof::{anderson_darling, ks_distance, Moments};
use crate::limits::Verdict;
use crate::models::DomainLabel;
use crate::sampling::{draw_top_k, SeedSpec};

/// Largest tolerated fraction of replicates with a non-finite statistic.
pub const MAX_FAILURE_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub stat: String,
    pub target: Target,
    pub target_var: f64,
    pub count: usize,
    pub mean: f64,
    pub var: Option<f64>,
    pub skew: Option<f64>,
    pub kurt: Option<f64>,
    pub ks: Option<f64>,
    pub ad: Option<f64>,
    /// Replicates whose value was not finite.
    pub failures: usize,
    pub violations: Vec<String>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub n: u64,
    pub k: usize,
    pub constants: CellConstants,
    /// Finite-`(n, k)` moments, for comparison with the limits.
    pub gaussian: Option<GaussianMoments>,
    /// Replicates in which some uniform hit a clamping bound.
    pub clamped: usize,
    pub statistics: Vec<NormalityReport>,
    #[serde(skip)]
    pub samples: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub model: String,
    pub domain: DomainLabel,
    pub cells: Vec<CellReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub master_seed: u64,
    pub replicates: usize,
    pub models: Vec<ModelReport>,
}

pub const CSV_HEADER: &str = "model,n,k,stat,mean,var,skew,kurt,ks,ad,target_var,verdict";

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.reports().all(|(_, _, r)| r.verdict.is_pass())
    }

    pub fn reports(&self) -> impl Iterator<Item = (&str, &CellReport, &NormalityReport)> {
        self.models.iter().flat_map(|m| {
            m.cells
                .iter()
                .flat_map(move |c| c.statistics.iter().map(move |r| (m.model.as_str(), c, r)))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (model, cell, r) in self.reports() {
            let row = [
                csv_field(model),
                cell.n.to_string(),
                cell.k.to_string(),
                r.stat.clone(),
                float17(r.mean),
                opt_float17(r.var),
                opt_float17(r.skew),
                opt_float17(r.kurt),
                opt_float17(r.ks),
                opt_float17(r.ad),
                float17(r.target_var),
                r.verdict.as_str().to_string(),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Raw statistic values, one row per replicate and one column per
    /// statistic.
    pub fn samples_csv(&self) -> String {
        let mut out = String::new();
        let mut header_done = false;
        for m in &self.models {
            for c in &m.cells {
                if !header_done {
                    let mut h = vec!["model", "n", "k", "replicate"];
                    h.extend(c.samples.iter().map(|(id, _)| id.as_str()));
                    out.push_str(&h.join(","));
                    out.push('\n');
                    header_done = true;
                }
                let reps = c.samples.first().map_or(0, |(_, v)| v.len());
                for r in 0..reps {
                    let mut row = vec![
                        csv_field(&m.model),
                        c.n.to_string(),
                        c.k.to_string(),
                        r.to_string(),
                    ];
                    row.extend(c.samples.iter().map(|(_, v)| float17(v[r])));
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Descriptors contain commas, so they are quoted.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn summarize(
    id: &str,
    target: Target,
    bounds: &super::Bounds,
    values: &[f64],
) -> Result<NormalityReport> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let failures = values.len() - finite.len();
    if finite.is_empty() {
        return Err(Error::Numeric(format!("{id}: no finite replicate")));
    }
    let moments = Moments::of(&finite)?;
    let (ks, ad) = match target.cdf() {
        Some(cdf) => (
            Some(ks_distance(&finite, &*cdf)?),
            Some(anderson_darling(&finite, &*cdf)?),
        ),
        None => (None, None),
    };
    let violations = judge(bounds, &moments, ks);
    let verdict = if moments.var.is_none() {
        Verdict::Insufficient
    } else if violations.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(NormalityReport {
        stat: id.to_string(),
        target,
        target_var: target.variance(),
        count: moments.count,
        mean: moments.mean,
        var: moments.var,
        skew: moments.skew,
        kurt: moments.kurt,
        ks,
        ad,
        failures,
        violations,
        verdict,
    })
}

/// Run every `(model, n)` cell of the configuration. `threads = 0` uses
/// all cores; the thread count never changes the results.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    let registry = StatisticRegistry::standard();
    config.validate_simulation(&registry)?;
    let models = config.parse_models()?;
    let stats: Vec<_> = config
        .statistics
        .iter()
        .map(|s| registry.get(s).expect("validated"))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let reps = config.replicates;
    let mut out = Vec::with_capacity(models.len());
    let mut cell_index = 0u32;
    for model in &models {
        let mut cells = Vec::with_capacity(config.n_values.len());
        for &n in &config.n_values {
            let k = config.k_rule.resolve(n)?;
            let cell = CellConstants::new(&**model, n, k)?;
            let this_cell = cell_index;
            cell_index += 1;
            let rows: Vec<(Vec<f64>, bool)> = pool.install(|| {
                (0..reps as u32)
                    .into_par_iter()
                    .map(|r| {
                        let seed = SeedSpec::for_replicate(config.master_seed, this_cell, r);
                        let draw = draw_top_k(seed, n, k, &**model)?;
                        let values = stats.iter().map(|s| s.evaluate(&draw, &cell)).collect();
                        Ok((values, draw.clamped))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let bad = rows
                .iter()
                .filter(|(v, _)| v.iter().any(|x| !x.is_finite()))
                .count();
            if bad as f64 > MAX_FAILURE_FRACTION * reps as f64 {
                return Err(Error::Numeric(format!(
                    "{} n={n}: {bad} of {reps} replicates produced non-finite statistics",
                    model.descriptor()
                )));
            }
            let clamped = rows.iter().filter(|(_, c)| *c).count();
            let mut samples = Vec::with_capacity(stats.len());
            let mut statistics = Vec::with_capacity(stats.len());
            for (j, s) in stats.iter().enumerate() {
                let values: Vec<f64> = rows.iter().map(|(v, _)| v[j]).collect();
                let target = s.target(&cell);
                let bounds = s.bounds(&config.tolerances, &cell);
                statistics.push(summarize(s.id(), target, &bounds, &values)?);
                samples.push((s.id().to_string(), values));
            }
            cells.push(CellReport {
                n,
                k,
                constants: cell,
                gaussian: limiting_gaussian_moments(&**model, n, k).ok(),
                clamped,
                statistics,
                samples,
            });
        }
        out.push(ModelReport {
            model: model.descriptor(),
            domain: model.domain(),
            cells,
        });
    }
    Ok(ExperimentReport {
        master_seed: config.master_seed,
        replicates: reps,
        models: out,
    })
}
