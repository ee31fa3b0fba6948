use rayon::prelude::*;
use serde::Serialize;

use super::{c_beta_estimate, mu_estimate, rho_estimate, sigma2_estimate};
use crate::error::Error;
use crate::fmt::float17;
use crate::limits::SGrid;
use crate::models::{DomainLabel, QuantileModel};
use crate::quadrature::Estimate;

/// One evaluated functional. `flag` carries the reason when the value is
/// only a best estimate (or missing, as NaN).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEntry {
    pub value: f64,
    pub error: f64,
    pub flag: Option<String>,
}

impl TableEntry {
    fn from_result(r: crate::Result<Estimate>, what: &str) -> TableEntry {
        match r {
            Ok(e) => TableEntry {
                value: e.value,
                error: e.error,
                flag: None,
            },
            Err(Error::NonConvergent { estimate, error }) => TableEntry {
                value: estimate,
                error,
                flag: Some(format!("{what}: quadrature did not converge")),
            },
            Err(e) => TableEntry {
                value: f64::NAN,
                error: f64::NAN,
                flag: Some(format!("{what}: {e}")),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalRow {
    pub s: f64,
    pub c: TableEntry,
    pub c_beta: Vec<TableEntry>,
    pub sigma2: TableEntry,
    pub mu: TableEntry,
    pub rho: Option<TableEntry>,
}

impl FunctionalRow {
    fn entries(&self) -> impl Iterator<Item = &TableEntry> {
        std::iter::once(&self.c)
            .chain(self.c_beta.iter())
            .chain([&self.sigma2, &self.mu])
            .chain(self.rho.iter())
    }

    /// Largest per-entry error estimate; NaN when any entry failed outright.
    pub fn err_max(&self) -> f64 {
        self.entries().fold(0.0, |m: f64, e| {
            if e.error.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(e.error)
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalTable {
    pub model: String,
    pub domain: DomainLabel,
    pub grid: SGrid,
    pub betas: Vec<f64>,
    pub rows: Vec<FunctionalRow>,
}

impl FunctionalTable {
    pub fn flags(&self) -> Vec<String> {
        let mut out = Vec::new();
        for row in &self.rows {
            for e in row.entries() {
                if let Some(f) = &e.flag {
                    out.push(format!("s={}: {f}", float17(row.s)));
                }
            }
            if !(row.c.value > 0.0) && row.c.flag.is_none() {
                out.push(format!("s={}: c not positive", float17(row.s)));
            }
        }
        out
    }

    pub fn has_rho(&self) -> bool {
        self.rows.first().is_some_and(|r| r.rho.is_some())
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["s".to_string(), "c".to_string()];
        cols.extend(self.betas.iter().map(|b| format!("c_beta_{b}")));
        cols.extend(["sigma2", "mu", "rho", "err_max"].map(String::from));
        cols.join(",")
    }

    /// CSV with `#` comment rows for warnings ahead of the header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# model {}\n", self.model));
        if self.domain != DomainLabel::Gumbel {
            out.push_str(&format!(
                "# warning: {} is labelled {}, the limits checked here assume the Gumbel domain\n",
                self.model, self.domain
            ));
        }
        for f in self.flags() {
            out.push_str(&format!("# warning: {f}\n"));
        }
        out.push_str(&self.header());
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![float17(row.s), float17(row.c.value)];
            cells.extend(row.c_beta.iter().map(|e| float17(e.value)));
            cells.push(float17(row.sigma2.value));
            cells.push(float17(row.mu.value));
            cells.push(
                row.rho
                    .as_ref()
                    .map(|e| float17(e.value))
                    .unwrap_or_default(),
            );
            cells.push(float17(row.err_max()));
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Evaluate every functional at every grid point. Failures become flagged
/// entries; the table itself is always produced.
pub fn build_functional_table(
    model: &dyn QuantileModel,
    grid: &SGrid,
    betas: &[f64],
) -> FunctionalTable {
    let with_rho = model.r(0.25).is_some();
    let rows = grid
        .points()
        .par_iter()
        .map(|&s| FunctionalRow {
            s,
            c: TableEntry::from_result(c_beta_estimate(model, s, 1.0), "c"),
            c_beta: betas
                .iter()
                .map(|&b| {
                    TableEntry::from_result(c_beta_estimate(model, s, b), &format!("c_beta_{b}"))
                })
                .collect(),
            sigma2: TableEntry::from_result(sigma2_estimate(model, s), "sigma2"),
            mu: TableEntry::from_result(mu_estimate(model, s), "mu"),
            rho: with_rho.then(|| TableEntry::from_result(rho_estimate(model, s), "rho")),
        })
        .collect();
    FunctionalTable {
        model: model.descriptor(),
        domain: model.domain(),
        grid: grid.clone(),
        betas: betas.to_vec(),
        rows,
    }
}
