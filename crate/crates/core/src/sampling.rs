//! Upper order statistics drawn directly, without generating the sample.
//!
//! With `L = -ln U`, the descending records `U_{n,n} = V_1^{1/n}`,
//! `U_{n-j,n} = U_{n-j+1,n} V_{j+1}^{1/(n-j)}` become partial sums
//! `L_{j+1} = L_j + E_{j+1}/(n-j)` of scaled exponentials `E = -ln V`.
//! Tails `1 - U = -expm1(-L)` keep full relative precision however close
//! `U` is to one, and quantiles are read in that tail coordinate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::QuantileModel;

/// Uniforms (and tails) are kept inside `[2^-53, 1 - 2^-53]`.
pub const CLAMP_LO: f64 = 1.0 / 9_007_199_254_740_992.0;
pub const CLAMP_HI: f64 = 1.0 - CLAMP_LO;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> SeedSpec {
        SeedSpec {
            master_seed,
            stream_id,
        }
    }

    /// Stream of replicate `replicate` in experiment cell `cell`.
    pub fn for_replicate(master_seed: u64, cell: u32, replicate: u32) -> SeedSpec {
        SeedSpec::new(master_seed, ((cell as u64) << 32) | replicate as u64)
    }

    /// ChaCha8 keyed on the master seed; the stream id selects one of its
    /// 2^64 independent streams.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Uniform on `(0, 1]`.
fn open_uniform(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateDraw {
    pub n: u64,
    pub k: usize,
    /// `U_{n,n} ≥ … ≥ U_{n-k+1,n}`.
    pub top_u: Vec<f64>,
    /// `1 - top_u`, computed without cancellation.
    pub top_tail: Vec<f64>,
    pub threshold_u: f64,
    pub threshold_tail: f64,
    pub top_x: Vec<f64>,
    pub threshold_x: f64,
    /// Some tail hit a clamping bound.
    pub clamped: bool,
}

fn clamp_tail(t: f64, clamped: &mut bool) -> f64 {
    if t < CLAMP_LO {
        *clamped = true;
        CLAMP_LO
    } else if t > CLAMP_HI {
        *clamped = true;
        CLAMP_HI
    } else {
        t
    }
}

/// Top `k` order statistics and `X_{n-k,n}` from a seeded stream.
pub fn draw_top_k(
    seed: SeedSpec,
    n: u64,
    k: usize,
    model: &dyn QuantileModel,
) -> Result<ReplicateDraw> {
    let mut rng = seed.rng();
    draw_top_k_with(|| open_uniform(&mut rng), n, k, model)
}

/// [`draw_top_k`] fed by an arbitrary source of uniforms on `(0, 1]`.
pub fn draw_top_k_with<V: FnMut() -> f64>(
    mut v: V,
    n: u64,
    k: usize,
    model: &dyn QuantileModel,
) -> Result<ReplicateDraw> {
    if k < 1 || k as u64 >= n {
        return Err(Error::Domain(format!(
            "need 1 <= k < n, got n = {n}, k = {k}"
        )));
    }
    let mut clamped = false;
    let mut log_u = 0.0;
    let mut tails = Vec::with_capacity(k + 1);
    for j in 0..=k {
        log_u += -v().ln() / (n - j as u64) as f64;
        tails.push(clamp_tail(-(-log_u).exp_m1(), &mut clamped));
    }
    let threshold_tail = tails.pop().expect("k + 1 tails");
    let top_x: Vec<f64> = tails.iter().map(|&t| model.upper_quantile(t)).collect();
    Ok(ReplicateDraw {
        n,
        k,
        top_u: tails.iter().map(|t| 1.0 - t).collect(),
        threshold_u: 1.0 - threshold_tail,
        threshold_x: model.upper_quantile(threshold_tail),
        top_tail: tails,
        threshold_tail,
        top_x,
        clamped,
    })
}

/// `n (1 - U_{n-k,n}) / k`.
pub fn balkema_dehaan_stat(draw: &ReplicateDraw) -> f64 {
    draw.n as f64 * draw.threshold_tail / draw.k as f64
}

/// `X_{n,n} = Q(V^{1/n})` for one seeded uniform.
pub fn draw_sample_max(seed: SeedSpec, n: u64, model: &dyn QuantileModel) -> Result<f64> {
    let mut rng = seed.rng();
    draw_sample_max_with(open_uniform(&mut rng), n, model)
}

pub fn draw_sample_max_with(v: f64, n: u64, model: &dyn QuantileModel) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain(format!("uniform {v} not in (0, 1]")));
    }
    let mut clamped = false;
    let t = clamp_tail(-(v.ln() / n as f64).exp_m1(), &mut clamped);
    Ok(model.upper_quantile(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::parse_descriptor;

    fn exp1() -> Box<dyn QuantileModel> {
        parse_descriptor("exponential(1)").unwrap()
    }

    #[test]
    fn draws_are_deterministic() {
        let m = exp1();
        let a = draw_top_k(SeedSpec::new(42, 0), 10, 3, &*m).unwrap();
        let b = draw_top_k(SeedSpec::new(42, 0), 10, 3, &*m).unwrap();
        assert_eq!(a, b);
        let c = draw_top_k(SeedSpec::new(42, 1), 10, 3, &*m).unwrap();
        assert_ne!(a.top_u, c.top_u);
    }

    #[test]
    fn draw_is_ordered() {
        let m = parse_descriptor("normal(0,1)").unwrap();
        let d = draw_top_k(SeedSpec::new(1, 9), 1000, 50, &*m).unwrap();
        assert!(d.top_u.windows(2).all(|w| w[0] >= w[1]));
        assert!(d.top_u[0] < 1.0 && d.threshold_u > 0.0);
        assert!(*d.top_u.last().unwrap() >= d.threshold_u);
        assert!(d.top_x.windows(2).all(|w| w[0] >= w[1]));
        assert!(*d.top_x.last().unwrap() >= d.threshold_x);
        assert!(!d.clamped);
    }

    #[test]
    fn unit_uniforms_are_clamped_and_flagged() {
        let d = draw_top_k_with(|| 1.0, 10, 3, &*exp1()).unwrap();
        assert!(d.clamped);
        assert!(d.top_tail.iter().all(|&t| t == CLAMP_LO));
        assert!(d.top_u.iter().all(|&u| u < 1.0));
        assert!(d.top_x.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn bad_k_is_a_domain_error() {
        let m = exp1();
        assert!(draw_top_k(SeedSpec::new(0, 0), 1, 1, &*m).is_err());
        assert!(draw_top_k(SeedSpec::new(0, 0), 10, 0, &*m).is_err());
        assert!(draw_top_k(SeedSpec::new(0, 0), 10, 10, &*m).is_err());
    }

    #[test]
    fn balkema_dehaan_plug_in() {
        let mut d = draw_top_k(SeedSpec::new(3, 3), 1000, 10, &*exp1()).unwrap();
        d.threshold_tail = 10.0 / 1000.0;
        assert_eq!(balkema_dehaan_stat(&d), 1.0);
        d.threshold_tail = 20.0 / 1000.0;
        assert_eq!(balkema_dehaan_stat(&d), 2.0);
    }

    #[test]
    fn sample_max_identity_at_n_one() {
        let x = draw_sample_max_with(0.5, 1, &*exp1()).unwrap();
        assert!((x - 2f64.ln()).abs() < 1e-15);
        let a = draw_sample_max(SeedSpec::new(5, 5), 100, &*exp1()).unwrap();
        assert_eq!(
            a,
            draw_sample_max(SeedSpec::new(5, 5), 100, &*exp1()).unwrap()
        );
    }
}
