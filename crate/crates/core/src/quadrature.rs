//! Globally adaptive Gauss–Legendre quadrature.
//!
//! Each panel is integrated by a fixed 10-point Gauss–Legendre rule on the
//! whole panel and on its two halves; the difference is the panel's error
//! estimate and the sum of the halves is its value. The panel with the
//! largest error is bisected until the summed error meets the tolerance.
//!
//! Integrals over the upper tail `(1 - s, 1)` are taken in the tail
//! coordinate `t = 1 - u` and then substituted `t = s e^{-y}`, which turns
//! the logarithmic and power singularities at `t = 0` into smooth,
//! exponentially decaying integrands on `[0, y_max]`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 10;

/// Smallest tail coordinate ever handed to an integrand.
pub const TAIL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-12,
            abs: 0.0,
            max_panels: 4000,
        }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Tolerance {
            rel,
            ..Default::default()
        }
    }
}

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

/// Legendre nodes by Newton iteration on P_n from the Chebyshev guesses.
fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Rule { nodes, weights }
    })
}

fn gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    let rule = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
        let v = f(mid + half * x);
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "integrand not finite at {:e}",
                mid + half * x
            )));
        }
        sum += w * v;
    }
    Ok(sum * half)
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: Option<f64>) -> Result<Panel> {
        let whole = match whole {
            Some(w) => w,
            None => gauss(f, a, b)?,
        };
        let m = 0.5 * (a + b);
        let left = gauss(f, a, m)?;
        let right = gauss(f, m, b)?;
        // A panel that can no longer be bisected is kept as exact.
        let err = if m <= a || m >= b {
            0.0
        } else {
            (whole - left - right).abs()
        };
        Ok(Panel {
            a,
            b,
            left,
            right,
            err,
        })
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrate `f` over the union of consecutive panels given by `breaks`.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut heap = BinaryHeap::with_capacity(tol.max_panels + breaks.len());
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(Panel::new(&f, w[0], w[1], None)?);
        }
    }
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value(), e + p.err));
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Estimate { value, error });
        }
        if heap.len() >= tol.max_panels {
            return Err(Error::NonConvergent {
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let m = 0.5 * (worst.a + worst.b);
        heap.push(Panel::new(&f, worst.a, m, Some(worst.left))?);
        heap.push(Panel::new(&f, m, worst.b, Some(worst.right))?);
    }
}

/// `∫_a^b f(x) dx` over a finite interval; reversed bounds flip the sign.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    if b < a {
        let e = integrate(f, b, a, tol)?;
        return Ok(Estimate {
            value: -e.value,
            error: e.error,
        });
    }
    integrate_panels(f, &[a, b], tol)
}

/// `∫_a^b f(u) du` for `0 < a, b` under `u = e^v`, one initial panel per
/// unit of `|ln b - ln a|`.
pub fn integrate_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "log-substituted bounds must be positive, got ({a}, {b})"
        )));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (va, vb) = (lo.ln(), hi.ln());
    let pieces = ((vb - va).ceil() as usize).max(1);
    let breaks: Vec<f64> = (0..=pieces)
        .map(|i| {
            if i == pieces {
                vb
            } else {
                va + (vb - va) * i as f64 / pieces as f64
            }
        })
        .collect();
    let e = integrate_panels(
        |v| {
            let u = v.exp();
            f(u) * u
        },
        &breaks,
        tol,
    )?;
    Ok(Estimate {
        value: sign * e.value,
        error: e.error,
    })
}

/// `∫_0^s g(t) dt` with `t = s e^{-y}`, truncated where `t` reaches
/// [`TAIL_FLOOR`].
pub fn tail_integral<G: Fn(f64) -> f64>(g: G, s: f64, tol: Tolerance) -> Result<Estimate> {
    tail_integral_log(|_, t| g(t) * t, s, tol)
}

/// `∫_0^{y_max} h(y, s e^{-y}) dy`, the tail integral already written in
/// the variable `y = ln(s/t)`; `h` receives both coordinates.
///
/// The last initial panel (the far half of the `y` range) must contribute
/// less than the relative tolerance; otherwise the integral is treated as
/// divergent and reported as non-convergent.
pub fn tail_integral_log<H: Fn(f64, f64) -> f64>(h: H, s: f64, tol: Tolerance) -> Result<Estimate> {
    tail_integral_log_floor(h, s, TAIL_FLOOR, tol)
}

/// [`tail_integral_log`] truncated at `t = floor` instead of [`TAIL_FLOOR`].
pub fn tail_integral_log_floor<H: Fn(f64, f64) -> f64>(
    h: H,
    s: f64,
    floor: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if !(s > floor && floor > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!(
            "tail integral upper bound {s:e} out of range"
        )));
    }
    let y_max = (s / floor).ln();
    let mut breaks = vec![0.0, 0.5];
    let mut y = 1.0;
    while y < y_max {
        breaks.push(y);
        y *= 2.0;
    }
    breaks.push(y_max);
    let f = |y: f64| h(y, s * (-y).exp());
    let est = integrate_panels(f, &breaks, tol)?;
    let n = breaks.len();
    let far = gauss(&f, breaks[n - 2], breaks[n - 1])?;
    if far.abs() > tol.abs.max(tol.rel * est.value.abs()) {
        return Err(Error::NonConvergent {
            estimate: est.value,
            error: est.error.max(far.abs()),
        });
    }
    Ok(est)
}
