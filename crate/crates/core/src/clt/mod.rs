//! The three extreme-sum statistics, their companions, and the machinery to
//! run and judge replicated experiments.
//!
//! With `s = k/n`, `q_s = Q(1-s)` and `c = c(s)`, the statistics are
//!
//! * `T1 = (S_k - n μ(s)) / (√k c)`, limit `N(0, 2)`
//! * `T2 = √k (X_{n-k,n} - q_s) / c`, limit `N(0, 1)`
//! * `T3 = (S_k - k X_{n-k,n} - n ρ(s)) / (√k c)`, limit `N(0, 1)`
//!
//! where `S_k` sums the top `k` values. Since `μ(s) = s q_s + s c(s)`, the
//! centering of `T1` is formed as `k q_s + k c` from the upper spacings,
//! which keeps it exact under affine maps of the model.

mod experiment;

pub use experiment::{run_experiment, CellReport, ExperimentReport, ModelReport, NormalityReport};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{c1, rho_or_excess, sigma2};
use crate::gof::{Moments, Neumaier};
use crate::models::normal::std_normal_cdf;
use crate::models::QuantileModel;
use crate::sampling::ReplicateDraw;

/// How `k` follows `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KRule {
    /// `k = ceil(coeff · n^gamma)`
    Power {
        coeff: f64,
        gamma: f64,
    },
    Fixed {
        k: u64,
    },
}

impl KRule {
    pub fn resolve(&self, n: u64) -> Result<usize> {
        let k = match *self {
            KRule::Power { coeff, gamma } => {
                if !(coeff > 0.0 && coeff.is_finite()) || !(gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::Domain(format!(
                        "power rule needs coeff > 0 and gamma in (0, 1), got {coeff}, {gamma}"
                    )));
                }
                let x = coeff * (n as f64).powf(gamma);
                // an exact integer spoiled by powf rounding is not bumped up
                let r = x.round();
                if (x - r).abs() <= 1e-9 * r {
                    r as u64
                } else {
                    x.ceil() as u64
                }
            }
            KRule::Fixed { k } => k,
        };
        if k < 1 || k >= n {
            return Err(Error::Domain(format!("k = {k} outside 1 <= k < n = {n}")));
        }
        Ok(k as usize)
    }
}

/// Model constants shared by every replicate of an `(n, k)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellConstants {
    pub n: u64,
    pub k: usize,
    pub s: f64,
    pub q_s: f64,
    pub c: f64,
    /// `ρ(s)`, or `s c(s)` for models without a closed-form `r`.
    pub rho: f64,
    pub a_n: f64,
    pub b_n: f64,
}

impl CellConstants {
    pub fn new(model: &dyn QuantileModel, n: u64, k: usize) -> Result<CellConstants> {
        if k < 1 || k as u64 >= n {
            return Err(Error::Domain(format!(
                "need 1 <= k < n, got n = {n}, k = {k}"
            )));
        }
        let s = k as f64 / n as f64;
        if s > 0.5 {
            return Err(Error::Domain(format!("k/n = {s} above 1/2")));
        }
        let c = c1(model, s)?;
        if !(c > 0.0) {
            return Err(Error::Numeric(format!("c({s}) = {c} not positive")));
        }
        let (a_n, b_n) = gumbel_norming(model, n)?;
        Ok(CellConstants {
            n,
            k,
            s,
            q_s: model.upper_quantile(s),
            c,
            rho: rho_or_excess(model, s)?,
            a_n,
            b_n,
        })
    }

    fn scale(&self) -> f64 {
        (self.k as f64).sqrt() * self.c
    }
}

/// `Σ (X_{n-i+1,n} - x0)` over the top `k`.
fn excess_sum(draw: &ReplicateDraw, x0: f64) -> f64 {
    let mut acc = Neumaier::default();
    for &x in &draw.top_x {
        acc.add(x - x0);
    }
    acc.sum()
}

fn t1(draw: &ReplicateDraw, cell: &CellConstants) -> f64 {
    let k = cell.k as f64;
    (excess_sum(draw, cell.q_s) - k * cell.c) / cell.scale()
}

fn t2(draw: &ReplicateDraw, cell: &CellConstants) -> f64 {
    (cell.k as f64).sqrt() * (draw.threshold_x - cell.q_s) / cell.c
}

fn t3(draw: &ReplicateDraw, cell: &CellConstants) -> f64 {
    (excess_sum(draw, draw.threshold_x) - cell.n as f64 * cell.rho) / cell.scale()
}

pub fn statistic_t1(draw: &ReplicateDraw, model: &dyn QuantileModel) -> Result<f64> {
    let cell = CellConstants::new(model, draw.n, draw.k)?;
    Ok(t1(draw, &cell))
}

pub fn statistic_t2(draw: &ReplicateDraw, model: &dyn QuantileModel) -> Result<f64> {
    let cell = CellConstants::new(model, draw.n, draw.k)?;
    Ok(t2(draw, &cell))
}

pub fn statistic_t3(draw: &ReplicateDraw, model: &dyn QuantileModel) -> Result<f64> {
    let cell = CellConstants::new(model, draw.n, draw.k)?;
    Ok(t3(draw, &cell))
}

/// `S_k / k - X_{n-k,n}`.
pub fn mean_excess(draw: &ReplicateDraw) -> f64 {
    excess_sum(draw, draw.threshold_x) / draw.k as f64
}

/// `b_n = Q(1 - 1/n)`, `a_n = c(1/n)`, returned as `(a_n, b_n)`.
pub fn gumbel_norming(model: &dyn QuantileModel, n: u64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::Domain(format!("n = {n} below 2")));
    }
    let t = 1.0 / n as f64;
    Ok((c1(model, t)?, model.upper_quantile(t)))
}

/// Finite-`(n, k)` second moments of the Gaussian pair behind `T1` and `T2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMoments {
    pub var_z: f64,
    pub var_y: f64,
    pub cov: f64,
    pub var_diff: f64,
}

pub fn limiting_gaussian_moments(
    model: &dyn QuantileModel,
    n: u64,
    k: usize,
) -> Result<GaussianMoments> {
    if k < 1 || k as u64 >= n {
        return Err(Error::Domain(format!(
            "need 1 <= k < n, got n = {n}, k = {k}"
        )));
    }
    let s = k as f64 / n as f64;
    let c = c1(model, s)?;
    let var_z = sigma2(model, s)? / (s * c * c);
    let var_y = 1.0 - s;
    Ok(GaussianMoments {
        var_z,
        var_y,
        cov: var_y,
        var_diff: var_z - var_y,
    })
}

/// The law a statistic is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum Target {
    Normal {
        var: f64,
    },
    Gumbel,
    /// Concentrates at `at` with spread about `sd`; judged by mean and sd.
    Point {
        at: f64,
        sd: f64,
    },
}

impl Target {
    pub fn variance(&self) -> f64 {
        match *self {
            Target::Normal { var } => var,
            Target::Gumbel => std::f64::consts::PI.powi(2) / 6.0,
            Target::Point { sd, .. } => sd * sd,
        }
    }

    pub fn cdf(&self) -> Option<Box<dyn Fn(f64) -> f64>> {
        match *self {
            Target::Normal { var } => {
                let sd = var.sqrt();
                Some(Box::new(move |x| std_normal_cdf(x / sd)))
            }
            Target::Gumbel => Some(Box::new(|x: f64| (-(-x).exp()).exp())),
            Target::Point { .. } => None,
        }
    }
}

/// Which summaries a statistic is judged on, with their allowed ranges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Bounds {
    pub mean: Option<[f64; 2]>,
    pub var: Option<[f64; 2]>,
    pub sd: Option<[f64; 2]>,
    pub ks: Option<f64>,
}

pub trait Statistic: Send + Sync {
    fn id(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn evaluate(&self, draw: &ReplicateDraw, cell: &CellConstants) -> f64;
    fn target(&self, cell: &CellConstants) -> Target;
    fn bounds(&self, tol: &crate::config::Tolerances, cell: &CellConstants) -> Bounds;
}

struct T1;
struct T2;
struct T3;
struct Max;
struct Bdh;

impl Statistic for T1 {
    fn id(&self) -> &'static str {
        "T1"
    }
    fn describe(&self) -> &'static str {
        "sum of the top k, centered by n μ(k/n), scaled by √k c(k/n)"
    }
    fn evaluate(&self, draw: &ReplicateDraw, cell: &CellConstants) -> f64 {
        t1(draw, cell)
    }
    fn target(&self, _: &CellConstants) -> Target {
        Target::Normal { var: 2.0 }
    }
    fn bounds(&self, tol: &crate::config::Tolerances, _: &CellConstants) -> Bounds {
        Bounds {
            mean: Some([-tol.t1_mean, tol.t1_mean]),
            var: Some(tol.t1_var),
            ks: Some(tol.ks),
            ..Bounds::default()
        }
    }
}

impl Statistic for T2 {
    fn id(&self) -> &'static str {
        "T2"
    }
    fn describe(&self) -> &'static str {
        "threshold order statistic X_{n-k,n} about Q(1-k/n)"
    }
    fn evaluate(&self, draw: &ReplicateDraw, cell: &CellConstants) -> f64 {
        t2(draw, cell)
    }
    fn target(&self, _: &CellConstants) -> Target {
        Target::Normal { var: 1.0 }
    }
    fn bounds(&self, tol: &crate::config::Tolerances, _: &CellConstants) -> Bounds {
        Bounds {
            var: Some(tol.t23_var),
            ks: Some(tol.ks),
            ..Bounds::default()
        }
    }
}

impl Statistic for T3 {
    fn id(&self) -> &'static str {
        "T3"
    }
    fn describe(&self) -> &'static str {
        "excesses over X_{n-k,n}, centered by n ρ(k/n)"
    }
    fn evaluate(&self, draw: &ReplicateDraw, cell: &CellConstants) -> f64 {
        t3(draw, cell)
    }
    fn target(&self, _: &CellConstants) -> Target {
        Target::Normal { var: 1.0 }
    }
    fn bounds(&self, tol: &crate::config::Tolerances, _: &CellConstants) -> Bounds {
        Bounds {
            var: Some(tol.t23_var),
            ks: Some(tol.ks),
            ..Bounds::default()
        }
    }
}

impl Statistic for Max {
    fn id(&self) -> &'static str {
        "MAX"
    }
    fn describe(&self) -> &'static str {
        "sample maximum normalized by a_n = c(1/n), b_n = Q(1-1/n)"
    }
    fn evaluate(&self, draw: &ReplicateDraw, cell: &CellConstants) -> f64 {
        (draw.top_x[0] - cell.b_n) / cell.a_n
    }
    fn target(&self, _: &CellConstants) -> Target {
        Target::Gumbel
    }
    fn bounds(&self, tol: &crate::config::Tolerances, _: &CellConstants) -> Bounds {
        Bounds {
            ks: Some(tol.ks),
            ..Bounds::default()
        }
    }
}

impl Statistic for Bdh {
    fn id(&self) -> &'static str {
        "BDH"
    }
    fn describe(&self) -> &'static str {
        "n (1 - U_{n-k,n}) / k"
    }
    fn evaluate(&self, draw: &ReplicateDraw, _: &CellConstants) -> f64 {
        crate::sampling::balkema_dehaan_stat(draw)
    }
    fn target(&self, cell: &CellConstants) -> Target {
        Target::Point {
            at: 1.0,
            sd: 1.0 / (cell.k as f64).sqrt(),
        }
    }
    fn bounds(&self, tol: &crate::config::Tolerances, cell: &CellConstants) -> Bounds {
        let sd = 1.0 / (cell.k as f64).sqrt();
        Bounds {
            mean: Some([1.0 - tol.bdh_mean, 1.0 + tol.bdh_mean]),
            sd: Some([sd / tol.bdh_sd_factor, sd * tol.bdh_sd_factor]),
            ..Bounds::default()
        }
    }
}

#[derive(Clone, Default)]
pub struct StatisticRegistry {
    stats: BTreeMap<&'static str, Arc<dyn Statistic>>,
}

impl StatisticRegistry {
    pub fn standard() -> StatisticRegistry {
        let mut r = StatisticRegistry::default();
        r.register(Arc::new(T1));
        r.register(Arc::new(T2));
        r.register(Arc::new(T3));
        r.register(Arc::new(Max));
        r.register(Arc::new(Bdh));
        r
    }

    pub fn register(&mut self, stat: Arc<dyn Statistic>) {
        self.stats.insert(stat.id(), stat);
    }

    pub fn get(&self, id: &str) -> Option<Arc<dyn Statistic>> {
        self.stats.get(id).cloned()
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.stats.keys().copied().collect()
    }
}

/// Judge a summary against its bounds; returns the list of violations.
pub fn judge(bounds: &Bounds, moments: &Moments, ks: Option<f64>) -> Vec<String> {
    let mut out = Vec::new();
    let within = |v: f64, [lo, hi]: [f64; 2]| v >= lo && v <= hi;
    if let Some(b) = bounds.mean {
        if !within(moments.mean, b) {
            out.push(format!(
                "mean {} outside [{}, {}]",
                moments.mean, b[0], b[1]
            ));
        }
    }
    if let Some(b) = bounds.var {
        match moments.var {
            Some(v) if within(v, b) => {}
            Some(v) => out.push(format!("variance {v} outside [{}, {}]", b[0], b[1])),
            None => out.push("variance undefined".into()),
        }
    }
    if let Some(b) = bounds.sd {
        match moments.sd() {
            Some(v) if within(v, b) => {}
            Some(v) => out.push(format!("sd {v} outside [{}, {}]", b[0], b[1])),
            None => out.push("sd undefined".into()),
        }
    }
    if let Some(b) = bounds.ks {
        match ks {
            Some(d) if d <= b => {}
            Some(d) => out.push(format!("KS {d} above {b}")),
            None => out.push("KS undefined".into()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::parse_descriptor;
    use crate::sampling::{draw_top_k, SeedSpec};

    fn exp1() -> Box<dyn QuantileModel> {
        parse_descriptor("exponential(1)").unwrap()
    }

    fn hand_draw(n: u64, top_x: Vec<f64>, threshold_x: f64) -> ReplicateDraw {
        let k = top_x.len();
        ReplicateDraw {
            n,
            k,
            top_u: vec![0.9; k],
            top_tail: vec![0.1; k],
            threshold_u: 0.5,
            threshold_tail: 0.5,
            top_x,
            threshold_x,
            clamped: false,
        }
    }

    #[test]
    fn k_rules() {
        let p = KRule::Power {
            coeff: 1.0,
            gamma: 0.4,
        };
        assert_eq!(p.resolve(50000).unwrap(), 76);
        assert_eq!(p.resolve(5000).unwrap(), 31);
        let sq = KRule::Power {
            coeff: 1.0,
            gamma: 0.5,
        };
        assert_eq!(sq.resolve(10_000).unwrap(), 100);
        assert_eq!(sq.resolve(100_000_000).unwrap(), 10_000);
        assert!(KRule::Fixed { k: 4 }.resolve(4).is_err());
        assert!(KRule::Fixed { k: 0 }.resolve(4).is_err());
        assert!(KRule::Power {
            coeff: 1.0,
            gamma: 1.0
        }
        .resolve(100)
        .is_err());
    }

    #[test]
    fn hand_examples() {
        let m = exp1();
        let d = hand_draw(4, vec![3.0, 2.0], 1.5);
        let want = (5.0 - 4.0 * 0.5 * (1.0 + 2f64.ln())) / 2f64.sqrt();
        assert!((statistic_t1(&d, &*m).unwrap() - want).abs() < 1e-12);
        assert!((want - 1.1411).abs() < 1e-4);
        let t2v = statistic_t2(&d, &*m).unwrap();
        assert!((t2v - 2f64.sqrt() * (1.5 - 2f64.ln())).abs() < 1e-12);
        assert!(statistic_t3(&d, &*m).unwrap().abs() < 1e-12);
        assert_eq!(mean_excess(&d), 1.0);
        assert_eq!(mean_excess(&hand_draw(4, vec![1.5, 1.5], 1.5)), 0.0);
    }

    #[test]
    fn centered_cases() {
        let m = exp1();
        let cell = CellConstants::new(&*m, 4, 2).unwrap();
        // S_k equal to n μ(k/n)
        let nmu = 4.0 * 0.5 * (1.0 + 2f64.ln());
        let d = hand_draw(4, vec![nmu / 2.0, nmu / 2.0], cell.q_s);
        assert!(t1(&d, &cell).abs() < 1e-12);
        assert_eq!(t2(&d, &cell), 0.0);
    }

    #[test]
    fn t3_is_t1_minus_t2() {
        let m = parse_descriptor("weibull(2)").unwrap();
        let cell = CellConstants::new(&*m, 50_000, 76).unwrap();
        for r in 0..50 {
            let d = draw_top_k(SeedSpec::new(3, r), 50_000, 76, &*m).unwrap();
            let gap = t3(&d, &cell) - (t1(&d, &cell) - t2(&d, &cell));
            assert!(gap.abs() <= 1e-9, "{gap}");
        }
    }

    #[test]
    fn moment_examples() {
        let m = exp1();
        let g = limiting_gaussian_moments(&*m, 10_000, 100).unwrap();
        assert!((g.var_z - 1.99).abs() < 1e-9);
        assert!((g.var_y - 0.99).abs() < 1e-15 && g.cov == g.var_y);
        // 1.99 - 0.99; the cross term cancels one of the two variances
        assert!((g.var_diff - 1.00).abs() < 1e-9);
        assert!((g.var_diff - (g.var_z + g.var_y - 2.0 * g.cov)).abs() < 1e-15);
        let g = limiting_gaussian_moments(&*m, 100_000_000, 10_000).unwrap();
        assert!((g.var_z - 2.0).abs() < 0.01 && (g.var_diff - 1.0).abs() < 0.01);
        let g = limiting_gaussian_moments(&*m, 100, 50).unwrap();
        assert_eq!(g.var_y, 0.5);
        assert!(limiting_gaussian_moments(&*m, 100, 100).is_err());
    }

    #[test]
    fn var_z_sequence_for_exponential() {
        let m = exp1();
        let mut last = 0.0;
        for j in 2..=8 {
            let n = 10u64.pow(j);
            let k = (n as f64).sqrt().round() as usize;
            let g = limiting_gaussian_moments(&*m, n, k).unwrap();
            let s = k as f64 / n as f64;
            assert!((g.var_z - (2.0 - s)).abs() < 1e-9);
            assert!(g.var_z > last && (g.var_diff - 1.0).abs() <= s + 1e-9);
            last = g.var_z;
        }
    }

    #[test]
    fn gumbel_norming_examples() {
        let m = exp1();
        let (a, b) = gumbel_norming(&*m, 1000).unwrap();
        assert!((a - 1.0).abs() < 1e-10 && (b - 1000f64.ln()).abs() < 1e-12);
        let (a, b) = gumbel_norming(&*m, 10).unwrap();
        assert!((a - 1.0).abs() < 1e-10 && (b - 10f64.ln()).abs() < 1e-12);
        assert!(gumbel_norming(&*m, 1).is_err());
    }

    #[test]
    fn registry_holds_the_five() {
        let r = StatisticRegistry::standard();
        assert_eq!(r.ids(), vec!["BDH", "MAX", "T1", "T2", "T3"]);
        assert!(r.get("T4").is_none());
    }

    #[test]
    fn judge_reports_each_violation() {
        let m = Moments::of(&[0.0, 4.0]).unwrap();
        let b = Bounds {
            mean: Some([-0.1, 0.1]),
            var: Some([1.8, 2.2]),
            sd: None,
            ks: Some(0.05),
        };
        assert_eq!(judge(&b, &m, Some(0.01)).len(), 2);
        let one = Moments::of(&[0.0]).unwrap();
        assert!(judge(&b, &one, None)
            .iter()
            .any(|f| f == "variance undefined"));
    }
}
