//! Seeded benchmark instances and the heavy-endpoint counterexample family.
//!
//! Every draw category reads its own ChaCha20 stream of the same seed, so
//! adding draws to one category never shifts another. Normal variates come
//! from `rand_distr::Normal` (ziggurat sampling).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::instance::{Instance, Meta};

const SAMPLES_PER_PEAK: usize = 5000;
const SPREADS: [u32; 3] = [8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
enum Stream {
    Peaks = 1,
    Histograms = 2,
    Costs = 3,
    Proportion = 4,
    Delta = 5,
    Spread = 6,
}

fn stream(seed: u64, s: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(s as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n: usize,
    pub seed: u64,
    pub k: u32,
    pub p: f64,
    pub delta: usize,
    /// 1-based peak locations.
    pub peak1: usize,
    pub peak2: usize,
}

fn draw_peak(rng: &mut ChaCha20Rng, mean: f64, sd: f64, n: usize) -> usize {
    let dist = Normal::new(mean, sd).expect("positive spread");
    loop {
        let v = dist.sample(rng).round();
        if v >= 1.0 && v <= n as f64 {
            return v as usize;
        }
    }
}

pub fn generate_params(n: usize, seed: u64) -> Result<GenParams> {
    if n < 4 {
        return Err(invalid(format!("generator needs n >= 4, got {n}")));
    }
    let nf = n as f64;
    let mut peaks = stream(seed, Stream::Peaks);
    let peak1 = draw_peak(&mut peaks, nf / 3.0, nf / 6.0, n);
    let peak2 = draw_peak(&mut peaks, 2.0 * nf / 3.0, nf / 6.0, n);
    let k = SPREADS[stream(seed, Stream::Spread).random_range(0..SPREADS.len())];
    let p = stream(seed, Stream::Proportion).random_range(0.65..0.95);
    let delta = stream(seed, Stream::Delta).random_range(1..=4usize);
    Ok(GenParams { n, seed, k, p, delta, peak1, peak2 })
}

/// Draws an instance; the same `(n, seed)` always gives the same instance.
pub fn generate_instance(n: usize, seed: u64) -> Result<Instance> {
    let params = generate_params(n, seed)?;
    let mut weights = vec![0u64; n];
    let mut hist = stream(seed, Stream::Histograms);
    let sd = n as f64 / (2.0 * params.k as f64);
    for peak in [params.peak1, params.peak2] {
        let dist = Normal::new(peak as f64, sd).expect("positive spread");
        for _ in 0..SAMPLES_PER_PEAK {
            let v = dist.sample(&mut hist).round();
            if v >= 1.0 && v <= n as f64 {
                weights[v as usize - 1] += 1;
            }
        }
    }
    let mut cost_rng = stream(seed, Stream::Costs);
    let costs: Vec<f64> = (0..n).map(|_| cost_rng.random_range(1.0..=6.0)).collect();
    let total: u64 = weights.iter().sum();
    let q = params.p * total as f64;

    let mut extra = serde_json::Map::new();
    if let serde_json::Value::Object(m) = serde_json::to_value(&params).expect("params serialize") {
        for (key, v) in m {
            if key != "seed" {
                extra.insert(key, v);
            }
        }
    }
    Ok(Instance {
        n,
        weights,
        costs,
        q,
        delta: params.delta,
        meta: Meta {
            seed: Some(seed),
            generator: Some("two-peak".to_string()),
            scale: Some(total as f64),
            extra,
        },
    })
}

/// Counterexample family of order `m`: `n = 2m`, heavy endpoints of weight
/// `2m + 1`, unit middles and costs, `q = 4m + 2`, `delta = 2`.
pub fn build_ce(m: usize) -> Result<Instance> {
    if m < 2 {
        return Err(invalid(format!("counterexample family needs m >= 2, got {m}")));
    }
    let n = 2 * m;
    let heavy = (2 * m + 1) as u64;
    let mut weights = vec![1u64; n];
    weights[0] = heavy;
    weights[n - 1] = heavy;
    let mut inst = Instance::new(weights, vec![1.0; n], (4 * m + 2) as f64, 2);
    inst.meta.generator = Some(format!("ce:{m}"));
    Ok(inst)
}
