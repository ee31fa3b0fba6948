use std::sync::Arc;

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use super::{DomainLabel, QuantileModel};
use crate::error::{Error, Result};

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

/// Rate-parameterized exponential; every tail functional is closed form.
#[derive(Debug, Clone)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        Ok(Exponential {
            rate: positive("rate", rate)?,
        })
    }
}

impl QuantileModel for Exponential {
    fn family(&self) -> &'static str {
        "exponential"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.rate]
    }
    fn domain(&self) -> DomainLabel {
        DomainLabel::Gumbel
    }
    fn upper_quantile(&self, t: f64) -> f64 {
        -t.ln() / self.rate
    }
    fn lower_quantile(&self, s: f64) -> f64 {
        -(-s).ln_1p() / self.rate
    }
    fn upper_quantile_density(&self, t: f64) -> f64 {
        1.0 / (self.rate * t)
    }
    fn cdf(&self, x: f64) -> Option<f64> {
        Some(if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        })
    }
    fn r(&self, _u: f64) -> Option<f64> {
        Some(1.0 / self.rate)
    }
    fn closed_c_beta(&self, _s: f64, beta: f64) -> Option<f64> {
        Some(1.0 / (self.rate * beta))
    }
    fn closed_sigma2(&self, s: f64) -> Option<f64> {
        Some((2.0 * s - s * s) / (self.rate * self.rate))
    }
    fn closed_mu(&self, s: f64) -> Option<f64> {
        Some(s * (1.0 - s.ln()) / self.rate)
    }
    fn closed_rho(&self, s: f64) -> Option<f64> {
        Some(s / self.rate)
    }
}

#[derive(Debug, Clone)]
pub struct Gumbel {
    loc: f64,
    scale: f64,
}

impl Gumbel {
    pub fn new(loc: f64, scale: f64) -> Result<Self> {
        Ok(Gumbel {
            loc: finite("loc", loc)?,
            scale: positive("scale", scale)?,
        })
    }
}

impl QuantileModel for Gumbel {
    fn family(&self) -> &'static str {
        "gumbel"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.loc, self.scale]
    }
    fn domain(&self) -> DomainLabel {
        DomainLabel::Gumbel
    }
    fn upper_quantile(&self, t: f64) -> f64 {
        self.loc - self.scale * (-(-t).ln_1p()).ln()
    }
    fn lower_quantile(&self, s: f64) -> f64 {
        self.loc - self.scale * (-s.ln()).ln()
    }
    fn upper_quantile_density(&self, t: f64) -> f64 {
        self.scale / ((1.0 - t) * -(-t).ln_1p())
    }
    fn cdf(&self, x: f64) -> Option<f64> {
        Some((-(-(x - self.loc) / self.scale).exp()).exp())
    }
    fn r(&self, u: f64) -> Option<f64> {
        Some(u * self.upper_quantile_density(u))
    }
}

/// Weibull with unbounded support, `F(x) = 1 - exp(-(x/scale)^shape)`.
#[derive(Debug, Clone)]
pub struct Weibull {
    shape: f64,
    scale: f64,
}

impl Weibull {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        Ok(Weibull {
            shape: positive("shape", shape)?,
            scale: positive("scale", scale)?,
        })
    }
}

impl QuantileModel for Weibull {
    fn family(&self) -> &'static str {
        "weibull"
    }
    fn params(&self) -> Vec<f64> {
        if self.scale == 1.0 {
            vec![self.shape]
        } else {
            vec![self.shape, self.scale]
        }
    }
    fn domain(&self) -> DomainLabel {
        DomainLabel::Gumbel
    }
    fn upper_quantile(&self, t: f64) -> f64 {
        self.scale * (-t.ln()).powf(1.0 / self.shape)
    }
    fn lower_quantile(&self, s: f64) -> f64 {
        self.scale * (-(-s).ln_1p()).powf(1.0 / self.shape)
    }
    fn upper_quantile_density(&self, t: f64) -> f64 {
        self.scale / self.shape * (-t.ln()).powf(1.0 / self.shape - 1.0) / t
    }
    fn cdf(&self, x: f64) -> Option<f64> {
        Some(if x <= 0.0 {
            0.0
        } else {
            -(-(x / self.scale).powf(self.shape)).exp_m1()
        })
    }
    fn r(&self, u: f64) -> Option<f64> {
        Some(self.scale / self.shape * (-u.ln()).powf(1.0 / self.shape - 1.0))
    }
}

#[derive(Debug, Clone)]
pub struct Normal {
    mean: f64,
    sd: f64,
}

impl Normal {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        Ok(Normal {
            mean: finite("mean", mean)?,
            sd: positive("sd", sd)?,
        })
    }
}

impl QuantileModel for Normal {
    fn family(&self) -> &'static str {
        "normal"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.mean, self.sd]
    }
    fn domain(&self) -> DomainLabel {
        DomainLabel::Gumbel
    }
    fn upper_quantile(&self, t: f64) -> f64 {
        self.mean - self.sd * std_normal_quantile(t)
    }
    fn lower_quantile(&self, s: f64) -> f64 {
        self.mean + self.sd * std_normal_quantile(s)
    }
    fn upper_quantile_density(&self, t: f64) -> f64 {
        self.sd / std_normal_pdf(std_normal_quantile(t))
    }
    fn cdf(&self, x: f64) -> Option<f64> {
        Some(std_normal_cdf((x - self.mean) / self.sd))
    }
}

/// `exp(mu + sigma Z)` for standard normal `Z`.
#[derive(Debug, Clone)]
pub struct LogNormal {
    mu: f64,
    sigma: f64,
}

impl LogNormal {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        Ok(LogNormal {
            mu: finite("mu", mu)?,
            sigma: positive("sigma", sigma)?,
        })
    }
}

impl QuantileModel for LogNormal {
    fn family(&self) -> &'static str {
        "lognormal"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.mu, self.sigma]
    }
    fn domain(&self) -> DomainLabel {
        DomainLabel::Gumbel
    }
    fn upper_quantile(&self, t: f64) -> f64 {
        (self.mu - self.sigma * std_normal_quantile(t)).exp()
    }
    fn lower_quantile(&self, s: f64) -> f64 {
        (self.mu + self.sigma * std_normal_quantile(s)).exp()
    }
    fn upper_quantile_density(&self, t: f64) -> f64 {
        let z = -std_normal_quantile(t);
        self.sigma * (self.mu + self.sigma * z).exp() / std_normal_pdf(z)
    }
    fn cdf(&self, x: f64) -> Option<f64> {
        Some(if x <= 0.0 {
            0.0
        } else {
            std_normal_cdf((x.ln() - self.mu) / self.sigma)
        })
    }
}

/// Gamma with shape and rate; the quantile is found by inverting the
/// regularized incomplete gamma function.
#[derive(Debug, Clone)]
pub struct Gamma {
    shape: f64,
    rate: f64,
}

const INVERSION_MAX_ITER: usize = 200;
const INVERSION_ABS_TOL: f64 = 1e-10;

impl Gamma {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        Ok(Gamma {
            shape: positive("shape", shape)?,
            rate: positive("rate", rate)?,
        })
    }

    fn ln_sf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            gamma_ur(self.shape, y).ln()
        }
    }

    fn ln_cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            f64::NEG_INFINITY
        } else {
            gamma_lr(self.shape, y).ln()
        }
    }

    /// Root of an increasing `h` on `[0, ∞)` in the rate-1 scale.
    fn solve<H: Fn(f64) -> f64>(&self, h: H) -> f64 {
        let mut lo = 0.0;
        let mut h_lo = h(lo);
        let mut hi = self.shape.max(1.0);
        let mut h_hi = h(hi);
        while !(h_hi >= 0.0) {
            lo = hi;
            h_lo = h_hi;
            hi *= 2.0;
            h_hi = h(hi);
            if hi > 1e6 {
                break;
            }
        }
        // Illinois variant of regula falsi; bisect whenever an end value
        // is not finite.
        let mut side = 0i8;
        for _ in 0..INVERSION_MAX_ITER {
            if hi - lo <= INVERSION_ABS_TOL.min(4.0 * f64::EPSILON * hi) {
                break;
            }
            let x = if h_lo.is_finite() && h_hi.is_finite() && h_hi != h_lo {
                let x = (lo * h_hi - hi * h_lo) / (h_hi - h_lo);
                if x > lo && x < hi {
                    x
                } else {
                    0.5 * (lo + hi)
                }
            } else {
                0.5 * (lo + hi)
            };
            let hx = h(x);
            if hx == 0.0 {
                return x;
            }
            if hx < 0.0 {
                lo = x;
                h_lo = hx;
                if side == -1 {
                    h_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = x;
                h_hi = hx;
                if side == 1 {
                    h_lo *= 0.5;
                }
                side = 1;
            }
        }
        0.5 * (lo + hi)
    }
}

impl QuantileModel for Gamma {
    fn family(&self) -> &'static str {
        "gamma"
    }
    fn params(&self) -> Vec<f64> {
        if self.rate == 1.0 {
            vec![self.shape]
        } else {
            vec![self.shape, self.rate]
        }
    }
    fn domain(&self) -> DomainLabel {
        DomainLabel::Gumbel
    }
    fn upper_quantile(&self, t: f64) -> f64 {
        let y = if t <= 0.5 {
            let target = t.ln();
            self.solve(|y| target - self.ln_sf(y))
        } else {
            let target = (1.0 - t).ln();
            self.solve(|y| self.ln_cdf(y) - target)
        };
        y / self.rate
    }
    fn lower_quantile(&self, s: f64) -> f64 {
        if s <= 0.5 {
            let target = s.ln();
            self.solve(|y| self.ln_cdf(y) - target) / self.rate
        } else {
            self.upper_quantile(1.0 - s)
        }
    }
    fn upper_quantile_density(&self, t: f64) -> f64 {
        let y = self.upper_quantile(t) * self.rate;
        let ln_pdf = (self.shape - 1.0) * y.ln() - y - ln_gamma(self.shape);
        1.0 / (self.rate * ln_pdf.exp())
    }
    fn cdf(&self, x: f64) -> Option<f64> {
        Some(if x <= 0.0 {
            0.0
        } else {
            gamma_lr(self.shape, self.rate * x)
        })
    }
}

/// Pareto with tail index `a`, `F(x) = 1 - x^{-a}` on `[1, ∞)`; a
/// heavy-tailed negative control.
#[derive(Debug, Clone)]
pub struct Pareto {
    index: f64,
}

impl Pareto {
    pub fn new(index: f64) -> Result<Self> {
        Ok(Pareto {
            index: positive("index", index)?,
        })
    }
}

impl QuantileModel for Pareto {
    fn family(&self) -> &'static str {
        "pareto"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.index]
    }
    fn domain(&self) -> DomainLabel {
        DomainLabel::Frechet
    }
    fn upper_quantile(&self, t: f64) -> f64 {
        t.powf(-1.0 / self.index)
    }
    fn lower_quantile(&self, s: f64) -> f64 {
        (-(-s).ln_1p() / self.index).exp()
    }
    fn upper_quantile_density(&self, t: f64) -> f64 {
        t.powf(-1.0 / self.index - 1.0) / self.index
    }
    fn cdf(&self, x: f64) -> Option<f64> {
        Some(if x <= 1.0 {
            0.0
        } else {
            1.0 - x.powf(-self.index)
        })
    }
    fn closed_c_beta(&self, s: f64, beta: f64) -> Option<f64> {
        let a = self.index;
        (a * beta > 1.0).then(|| s.powf(-1.0 / a) / (a * beta - 1.0))
    }
    fn closed_sigma2(&self, s: f64) -> Option<f64> {
        let p = 1.0 / self.index;
        (p < 0.5).then(|| {
            s.powf(1.0 - 2.0 * p) * 2.0 * p * p / ((1.0 - 2.0 * p) * (1.0 - p))
                - s.powf(2.0 - 2.0 * p) * p * p / ((1.0 - p) * (1.0 - p))
        })
    }
    fn closed_mu(&self, s: f64) -> Option<f64> {
        let p = 1.0 / self.index;
        (p < 1.0).then(|| s.powf(1.0 - p) / (1.0 - p))
    }
}

/// Uniform on `[lo, hi]`; bounded support, a negative control.
#[derive(Debug, Clone)]
pub struct Uniform {
    lo: f64,
    hi: f64,
}

impl Uniform {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let lo = finite("lo", lo)?;
        let hi = finite("hi", hi)?;
        if hi <= lo {
            return Err(Error::InvalidParameter(format!(
                "uniform needs lo < hi, got ({lo}, {hi})"
            )));
        }
        Ok(Uniform { lo, hi })
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl QuantileModel for Uniform {
    fn family(&self) -> &'static str {
        "uniform"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.lo, self.hi]
    }
    fn domain(&self) -> DomainLabel {
        DomainLabel::WeibullDomain
    }
    fn upper_quantile(&self, t: f64) -> f64 {
        self.hi - self.width() * t
    }
    fn lower_quantile(&self, s: f64) -> f64 {
        self.lo + self.width() * s
    }
    fn upper_quantile_density(&self, _t: f64) -> f64 {
        self.width()
    }
    fn cdf(&self, x: f64) -> Option<f64> {
        Some(((x - self.lo) / self.width()).clamp(0.0, 1.0))
    }
    fn closed_c_beta(&self, s: f64, beta: f64) -> Option<f64> {
        Some(self.width() * s / (beta + 1.0))
    }
    fn closed_sigma2(&self, s: f64) -> Option<f64> {
        let w = self.width();
        Some(w * w * (s * s * s / 3.0 - s * s * s * s / 4.0))
    }
    fn closed_mu(&self, s: f64) -> Option<f64> {
        Some(self.hi * s - self.width() * s * s / 2.0)
    }
}

/// `scale · X + shift` for an inner model `X`.
#[derive(Debug, Clone)]
pub struct Affine {
    inner: Arc<dyn QuantileModel>,
    scale: f64,
    shift: f64,
}

impl Affine {
    pub fn new(inner: Arc<dyn QuantileModel>, scale: f64, shift: f64) -> Result<Self> {
        Ok(Affine {
            inner,
            scale: positive("scale", scale)?,
            shift: finite("shift", shift)?,
        })
    }
}

impl QuantileModel for Affine {
    fn family(&self) -> &'static str {
        "affine"
    }
    fn params(&self) -> Vec<f64> {
        vec![self.scale, self.shift]
    }
    fn domain(&self) -> DomainLabel {
        self.inner.domain()
    }
    fn upper_quantile(&self, t: f64) -> f64 {
        self.scale * self.inner.upper_quantile(t) + self.shift
    }
    fn lower_quantile(&self, s: f64) -> f64 {
        self.scale * self.inner.lower_quantile(s) + self.shift
    }
    fn upper_quantile_density(&self, t: f64) -> f64 {
        self.scale * self.inner.upper_quantile_density(t)
    }
    fn cdf(&self, x: f64) -> Option<f64> {
        self.inner.cdf((x - self.shift) / self.scale)
    }
    fn r(&self, u: f64) -> Option<f64> {
        self.inner.r(u).map(|r| self.scale * r)
    }
    fn closed_c_beta(&self, s: f64, beta: f64) -> Option<f64> {
        self.inner.closed_c_beta(s, beta).map(|c| self.scale * c)
    }
    fn closed_sigma2(&self, s: f64) -> Option<f64> {
        self.inner
            .closed_sigma2(s)
            .map(|v| self.scale * self.scale * v)
    }
    fn closed_mu(&self, s: f64) -> Option<f64> {
        self.inner
            .closed_mu(s)
            .map(|m| self.scale * m + self.shift * s)
    }
    fn closed_rho(&self, s: f64) -> Option<f64> {
        self.inner.closed_rho(s).map(|r| self.scale * r)
    }
    fn descriptor(&self) -> String {
        format!(
            "affine({},{},{})",
            self.scale,
            self.shift,
            self.inner.descriptor()
        )
    }
}
