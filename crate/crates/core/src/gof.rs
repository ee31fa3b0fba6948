//! Goodness of fit against fully specified laws, and moment summaries.

use serde::Serialize;

use crate::error::{Error, Result};

/// CDF values are kept this far from 0 and 1 inside the A² logarithms.
pub const AD_EPS: f64 = 1e-12;

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("sample contains NaN".into()));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_R(x) - F(x)|`. The lower envelope uses `F` just below each
/// point, so tied samples and step targets are handled exactly.
pub fn ks_distance(sample: &[f64], cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(sample)?;
    let r = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let above = (i + 1) as f64 / r - cdf(x);
        let below = cdf(x.next_down()) - i as f64 / r;
        d = d.max(above).max(below);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Anderson–Darling `A²`.
pub fn anderson_darling(sample: &[f64], cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(sample)?;
    let n = v.len();
    let f: Vec<f64> = v
        .iter()
        .map(|&x| cdf(x).clamp(AD_EPS, 1.0 - AD_EPS))
        .collect();
    let mut acc = Neumaier::default();
    for i in 0..n {
        let w = (2 * i + 1) as f64;
        acc.add(w * (f[i].ln() + (-f[n - 1 - i]).ln_1p()));
    }
    Ok(-(n as f64) - acc.sum() / n as f64)
}

/// Compensated summation; the result depends only on the order of terms.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

fn sum_of(it: impl Iterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    it.for_each(|x| acc.add(x));
    acc.sum()
}

/// Mean, unbiased variance, skewness and excess kurtosis. Higher moments
/// are `None` for a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub var: Option<f64>,
    pub skew: Option<f64>,
    pub kurt: Option<f64>,
}

impl Moments {
    pub fn of(values: &[f64]) -> Result<Moments> {
        if values.is_empty() {
            return Err(Error::Domain("no values to summarize".into()));
        }
        let n = values.len() as f64;
        let mean = sum_of(values.iter().copied()) / n;
        if values.len() < 2 {
            return Ok(Moments {
                count: values.len(),
                mean,
                var: None,
                skew: None,
                kurt: None,
            });
        }
        let m2 = sum_of(values.iter().map(|x| (x - mean).powi(2))) / n;
        let m3 = sum_of(values.iter().map(|x| (x - mean).powi(3))) / n;
        let m4 = sum_of(values.iter().map(|x| (x - mean).powi(4))) / n;
        let (skew, kurt) = if m2 > 0.0 {
            (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
        } else {
            (None, None)
        };
        Ok(Moments {
            count: values.len(),
            mean,
            var: Some(m2 * n / (n - 1.0)),
            skew,
            kurt,
        })
    }

    pub fn sd(&self) -> Option<f64> {
        self.var.map(f64::sqrt)
    }
}
