//! Distributions presented through their quantile functions.
//!
//! Every model implements [`QuantileModel`] and is registered by family
//! name in [`ModelRegistry`]; the CLI and config files select models with
//! text descriptors such as `weibull(2.0)`.
//!
//! Tail functionals are evaluated in the tail coordinate `t = 1 - u`, so
//! the central method is [`QuantileModel::upper_quantile`], `Q(1 - t)`,
//! which each model computes without forming `1 - t`.
//!
//! A model flagged with a closed-form `r` belongs to the class whose
//! quantile admits `Q(1 - s) = a + ∫_s^1 r(u)/u du` with `r` positive and
//! slowly varying at zero. The exponent of `u` is read as one; that is the
//! only reading under which `r(s)/c(s) → 1`.

mod catalog;
pub mod normal;
mod registry;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::LimitCheckReport;

pub use catalog::{
    Affine, Exponential, Gamma, Gumbel, LogNormal, Normal, Pareto, Uniform, Weibull,
};
pub use registry::{parse_descriptor, Arg, CatalogEntry, ModelRegistry};

/// Extreme-value domain of attraction, as metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainLabel {
    Gumbel,
    Frechet,
    #[serde(rename = "Weibull-domain")]
    WeibullDomain,
    Unknown,
}

impl fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainLabel::Gumbel => "Gumbel",
            DomainLabel::Frechet => "Frechet",
            DomainLabel::WeibullDomain => "Weibull-domain",
            DomainLabel::Unknown => "unknown",
        })
    }
}

/// Which tail functionals a model knows in closed form.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AnalyticFlags {
    pub c: bool,
    pub r: bool,
    pub sigma2: bool,
    pub mu: bool,
}

pub trait QuantileModel: Send + Sync + fmt::Debug {
    fn family(&self) -> &'static str;

    fn params(&self) -> Vec<f64>;

    fn domain(&self) -> DomainLabel;

    /// `Q(1 - t)` for `0 < t < 1`.
    fn upper_quantile(&self, t: f64) -> f64;

    /// `Q(s)` for `0 < s < 1`.
    fn lower_quantile(&self, s: f64) -> f64 {
        self.upper_quantile(1.0 - s)
    }

    /// `Q'(1 - t)`, the density of the Stieltjes measure `dQ` in tail
    /// coordinates.
    fn upper_quantile_density(&self, t: f64) -> f64;

    fn cdf(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Closed-form `r(u) = u Q'(1 - u)`.
    fn r(&self, _u: f64) -> Option<f64> {
        None
    }

    fn closed_c_beta(&self, _s: f64, _beta: f64) -> Option<f64> {
        None
    }

    fn closed_sigma2(&self, _s: f64) -> Option<f64> {
        None
    }

    fn closed_mu(&self, _s: f64) -> Option<f64> {
        None
    }

    /// Closed-form `∫_0^s r(u) du`.
    fn closed_rho(&self, _s: f64) -> Option<f64> {
        None
    }

    fn analytic(&self) -> AnalyticFlags {
        AnalyticFlags {
            c: self.closed_c_beta(0.25, 1.0).is_some(),
            r: self.r(0.25).is_some(),
            sigma2: self.closed_sigma2(0.25).is_some(),
            mu: self.closed_mu(0.25).is_some(),
        }
    }

    fn descriptor(&self) -> String {
        let params: Vec<String> = self.params().iter().map(|p| p.to_string()).collect();
        format!("{}({})", self.family(), params.join(","))
    }
}

fn check_open_unit(name: &str, s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {s} not in (0, 1)")))
    }
}

/// `Q(s) = inf{x : F(x) ≥ s}`.
pub fn quantile(model: &dyn QuantileModel, s: f64) -> Result<f64> {
    check_open_unit("s", s)?;
    Ok(model.lower_quantile(s))
}

/// `Q(1 - t)`.
pub fn upper_quantile(model: &dyn QuantileModel, t: f64) -> Result<f64> {
    check_open_unit("t", t)?;
    Ok(model.upper_quantile(t))
}

/// Closed-form `r(u)` for `0 < u ≤ 1/2`.
pub fn tail_r(model: &dyn QuantileModel, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 0.5) {
        return Err(Error::Domain(format!("u = {u} not in (0, 1/2]")));
    }
    model
        .r(u)
        .ok_or_else(|| Error::Unsupported(format!("{} has no closed-form r", model.descriptor())))
}

/// Scale factors `(x, z, y, w)` of the ratio
/// `(Q(1-sx) - Q(1-sz)) / (Q(1-sy) - Q(1-sw))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub x: f64,
    pub z: f64,
    pub y: f64,
    pub w: f64,
}

impl Probe {
    pub const fn new(x: f64, z: f64, y: f64, w: f64) -> Probe {
        Probe { x, z, y, w }
    }

    /// `(log x - log z) / (log y - log w)`.
    pub fn target(&self) -> f64 {
        (self.x.ln() - self.z.ln()) / (self.y.ln() - self.w.ln())
    }
}

/// Default probe `(4, 1, 2, 1)`; the Gumbel-domain limit is 2.
pub const STANDARD_PROBE: Probe = Probe::new(4.0, 1.0, 2.0, 1.0);

/// Tolerance applied at the smallest grid point by the domain check.
pub const DOMAIN_CHECK_TOLERANCE: f64 = 0.25;

/// Quantile-spacing ratio test for the Gumbel domain of attraction.
///
/// Grid points where the denominator vanishes are dropped and listed in
/// [`LimitCheckReport::excluded`].
pub fn domain_check(
    model: &dyn QuantileModel,
    s_grid: &[f64],
    probe: Probe,
    tolerance: f64,
) -> Result<LimitCheckReport> {
    let Probe { x, z, y, w } = probe;
    if ![x, z, y, w].iter().all(|v| *v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!(
            "probe scales must be positive, got {probe:?}"
        )));
    }
    if y == w {
        return Err(Error::Domain("probe requires y != w".into()));
    }
    if s_grid.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::Domain("grid must be strictly decreasing".into()));
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut excluded = Vec::new();
    for &s in s_grid {
        for scale in [x, z, y, w] {
            check_open_unit("probe point", s * scale)?;
        }
        let den = model.upper_quantile(s * y) - model.upper_quantile(s * w);
        if den == 0.0 || !den.is_finite() {
            excluded.push(s);
            continue;
        }
        let num = model.upper_quantile(s * x) - model.upper_quantile(s * z);
        points.push(s);
        values.push(num / den);
    }
    let mut report = LimitCheckReport::new(
        format!("L1 {}", model.descriptor()),
        points,
        values,
        probe.target(),
        tolerance,
    )?;
    report.excluded = excluded;
    Ok(report)
}
