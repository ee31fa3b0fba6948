//! The lemma suite: each check is a ratio sequence over a shrinking grid,
//! judged at its smallest point.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::Result;
use crate::fmt::float17;
use crate::functionals::{
    c1, c_beta, r_over_c_ratio, lemma3_residual, lemma4_ratio, lemma5_ratio, lemma6_ratio,
    lemma7_ratio, slow_variation_check, DEFAULT_ANCHOR,
};
use crate::limits::{LimitCheckReport, SGrid, Verdict};
use crate::models::{domain_check, QuantileModel, STANDARD_PROBE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LemmaId {
    L1,
    L2,
    L3,
    L4,
    L5,
    L6,
    L7,
    RC,
}

impl LemmaId {
    pub fn all() -> Vec<LemmaId> {
        use LemmaId::*;
        vec![L1, L2, L3, L4, L5, L6, L7, RC]
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LemmaId::L1 => "L1",
            LemmaId::L2 => "L2",
            LemmaId::L3 => "L3",
            LemmaId::L4 => "L4",
            LemmaId::L5 => "L5",
            LemmaId::L6 => "L6",
            LemmaId::L7 => "L7",
            LemmaId::RC => "RC",
        }
    }

    /// Smallest `s` each sequence reaches.
    pub fn grid_end(&self) -> f64 {
        match self {
            LemmaId::L3 | LemmaId::L6 => 1e-4,
            LemmaId::L4 => 1e-8,
            _ => 1e-6,
        }
    }
}

pub const L2_BETAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const L2_LAMBDAS: [f64; 2] = [0.5, 2.0];
pub const L4_X: f64 = 2.0;
pub const L5_BETAS: [f64; 2] = [0.5, 2.0];
pub const L7_N: [u64; 5] = [100, 1_000, 10_000, 100_000, 1_000_000];

/// One check on one model. An evaluation error is a failed check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub lemma: LemmaId,
    pub model: String,
    pub report: Option<LimitCheckReport>,
    pub error: Option<String>,
    pub verdict: Verdict,
}

impl CheckOutcome {
    fn new(
        check: String,
        lemma: LemmaId,
        model: &dyn QuantileModel,
        r: Result<LimitCheckReport>,
    ) -> Self {
        let (report, error, verdict) = match r {
            Ok(rep) => {
                let v = rep.verdict;
                (Some(rep), None, v)
            }
            Err(e) => (None, Some(e.to_string()), Verdict::Fail),
        };
        CheckOutcome {
            check,
            lemma,
            model: model.descriptor(),
            report,
            error,
            verdict,
        }
    }
}

fn report_from(
    label: &str,
    points: &[f64],
    f: impl Fn(f64) -> Result<f64>,
    target: f64,
    tol: f64,
) -> Result<LimitCheckReport> {
    let values = points.iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?;
    LimitCheckReport::new(label, points.to_vec(), values, target, tol)
}

/// Grid parameters for the suite: sequences start at `start` (capped where
/// a check probes points above it) and shrink by `ratio`.
#[derive(Debug, Clone, Copy)]
pub struct SuiteGrid {
    pub start: f64,
    pub ratio: f64,
}

impl SuiteGrid {
    fn down(&self, cap: f64, end: f64) -> Result<SGrid> {
        SGrid::down_to(self.start.min(cap), end, self.ratio)
    }
}

pub fn check_model(
    model: &dyn QuantileModel,
    lemma: LemmaId,
    grid: SuiteGrid,
    tol: &Tolerances,
) -> Vec<CheckOutcome> {
    let end = lemma.grid_end();
    let one = |check: String, r: Result<LimitCheckReport>| {
        vec![CheckOutcome::new(check, lemma, model, r)]
    };
    match lemma {
        LemmaId::L1 => one(
            "L1 probe=(4,1,2,1)".into(),
            grid.down(0.2, end)
                .and_then(|g| domain_check(model, g.points(), STANDARD_PROBE, tol.l1)),
        ),
        LemmaId::L2 => {
            let mut out = Vec::new();
            for beta in L2_BETAS {
                for lambda in L2_LAMBDAS {
                    let f = |s: f64| c_beta(model, s, beta);
                    let r = grid
                        .down(0.25, end)
                        .and_then(|g| slow_variation_check(&f, lambda, &g, tol.l2));
                    out.push(CheckOutcome::new(
                        format!("L2 beta={beta} lambda={lambda}"),
                        lemma,
                        model,
                        r,
                    ));
                }
            }
            out
        }
        LemmaId::L3 => one(
            format!("L3 anchor={DEFAULT_ANCHOR}"),
            grid.down(0.5, end).and_then(|g| {
                report_from(
                    "L3",
                    g.points(),
                    |s| lemma3_residual(model, s, DEFAULT_ANCHOR),
                    0.0,
                    tol.l3,
                )
            }),
        ),
        LemmaId::L4 => one(
            format!("L4 x={L4_X}"),
            grid.down(0.5 / L4_X, end).and_then(|g| {
                report_from(
                    "L4",
                    g.points(),
                    |s| lemma4_ratio(model, s, L4_X),
                    -(L4_X.ln()),
                    tol.l4,
                )
            }),
        ),
        LemmaId::L5 => {
            let t = if model.analytic().c {
                tol.l5_closed_form
            } else {
                tol.l5
            };
            L5_BETAS
                .iter()
                .map(|&beta| {
                    let r = grid.down(0.5, end).and_then(|g| {
                        report_from(
                            "L5",
                            g.points(),
                            |s| lemma5_ratio(model, s, beta),
                            1.0 / beta,
                            t,
                        )
                    });
                    CheckOutcome::new(format!("L5 beta={beta}"), lemma, model, r)
                })
                .collect()
        }
        LemmaId::L6 => one(
            "L6".into(),
            grid.down(0.5, end).and_then(|g| {
                report_from("L6", g.points(), |s| lemma6_ratio(model, s), 1.0, tol.l6)
            }),
        ),
        LemmaId::L7 => {
            let points: Vec<f64> = L7_N.iter().map(|&n| n as f64).collect();
            let r = report_from(
                "L7",
                &points,
                |n| {
                    let l = |s: f64| c1(model, s.min(0.5)).unwrap_or(f64::NAN);
                    lemma7_ratio(&l, 1.0, n.powf(-0.5), n as u64)
                },
                0.0,
                tol.l7,
            );
            one("L7 L=c beta=1 a_n=n^-1/2".into(), r)
        }
        LemmaId::RC => {
            if model.r(0.25).is_none() {
                return Vec::new();
            }
            one(
                "RC".into(),
                grid.down(0.5, end).and_then(|g| {
                    report_from("RC", g.points(), |s| r_over_c_ratio(model, s), 1.0, tol.rc)
                }),
            )
        }
    }
}

pub fn run_lemma_suite(
    models: &[Box<dyn QuantileModel>],
    lemmas: &[LemmaId],
    grid: SuiteGrid,
    tol: &Tolerances,
) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for m in models {
        for &l in lemmas {
            out.extend(check_model(&**m, l, grid, tol));
        }
    }
    out
}

pub const CSV_HEADER: &str = "check,lemma,model,s,value,target,error,tolerance,verdict";

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// One row per grid point; only the last row of a check carries its
/// verdict, earlier rows are marked `trace`.
pub fn suite_csv(outcomes: &[CheckOutcome]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for o in outcomes {
        let head = [
            quoted(&o.check),
            o.lemma.as_str().to_string(),
            quoted(&o.model),
        ];
        match &o.report {
            Some(r) => {
                let last = r.points.len() - 1;
                for (i, (&s, &v)) in r.points.iter().zip(&r.values).enumerate() {
                    let verdict = if i == last {
                        o.verdict.as_str()
                    } else {
                        "trace"
                    };
                    let row = [
                        float17(s),
                        float17(v),
                        float17(r.target),
                        float17((v - r.target).abs()),
                        float17(r.tolerance),
                        verdict.to_string(),
                    ];
                    out.push_str(&head.join(","));
                    out.push(',');
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
            None => {
                out.push_str(&head.join(","));
                out.push_str(",,NaN,,,,");
                out.push_str(o.verdict.as_str());
                out.push('\n');
            }
        }
    }
    out
}
