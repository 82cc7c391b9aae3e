//! Browser bindings for the `dal` crate: an online GLR detector on a
//! Bernoulli stream, regret curves on a piecewise-stationary linear bandit,
//! and the grid cover used for kernel forced exploration.

use dal::dal::{build_cover_kernel, delta_t, CoverMode, CoveringConfig};
use dal::detect::{glr_profile, glr_scan, glr_threshold, GlrConfig, GlrFamily, ObservationBuffer};
use dal::harness::{build_environment, run_trial, ExperimentConfig, RunMode};
use dal::round::Vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

fn msg(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub struct GlrRun {
    stream: Vec<f64>,
    profile: Vec<f64>,
    threshold: f64,
    detected_at: Option<usize>,
    split: Option<usize>,
}

#[wasm_bindgen]
impl GlrRun {
    /// The sampled 0/1 rewards.
    pub fn stream(&self) -> Vec<f64> {
        self.stream.clone()
    }

    /// `GLR_s` for `s = 1..n-1` over the samples seen when scanning stopped.
    pub fn profile(&self) -> Vec<f64> {
        self.profile.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Number of samples seen when the alarm fired, or -1.
    #[wasm_bindgen(getter)]
    pub fn detected_at(&self) -> i32 {
        self.detected_at.map_or(-1, |n| n as i32)
    }

    /// Estimated pre-change length, or -1.
    #[wasm_bindgen(getter)]
    pub fn split(&self) -> i32 {
        self.split.map_or(-1, |s| s as i32)
    }
}

/// Feeds Bernoulli(`pre`) then Bernoulli(`post`) samples to the detector one
/// at a time and stops at the first alarm.
#[wasm_bindgen]
pub fn glr_demo(pre: f64, post: f64, change_at: u32, length: u32, delta_f: f64, seed: u32) -> Result<GlrRun, JsError> {
    glr_demo_impl(pre, post, change_at, length, delta_f, seed).map_err(js)
}

fn glr_demo_impl(pre: f64, post: f64, change_at: u32, length: u32, delta_f: f64, seed: u32) -> Result<GlrRun, String> {
    if !(0.0..=1.0).contains(&pre) || !(0.0..=1.0).contains(&post) {
        return Err(msg("means must lie in [0, 1]"));
    }
    if length < 2 {
        return Err(msg("need at least 2 samples"));
    }
    let config = GlrConfig::new(GlrFamily::Bernoulli, delta_f).map_err(msg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let stream: Vec<f64> = (0..length)
        .map(|i| {
            let p = if i < change_at { pre } else { post };
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();

    let mut buffer = ObservationBuffer::new();
    let mut hit = None;
    for &x in &stream {
        buffer.push(x);
        let res = glr_scan(&buffer, &config).map_err(msg)?;
        if res.detected {
            hit = Some((buffer.len(), res.split_index));
            break;
        }
    }
    let profile = glr_profile(&buffer, config.family).map_err(msg)?;
    Ok(GlrRun {
        threshold: glr_threshold(buffer.len(), delta_f).map_err(msg)?,
        stream,
        profile,
        detected_at: hit.map(|h| h.0),
        split: hit.and_then(|h| h.1),
    })
}

#[wasm_bindgen]
pub struct RegretCurves {
    rounds: Vec<f64>,
    dal: Vec<f64>,
    bare: Vec<f64>,
    oracle: Vec<f64>,
    restarts: Vec<f64>,
    change_points: Vec<f64>,
}

#[wasm_bindgen]
impl RegretCurves {
    pub fn rounds(&self) -> Vec<f64> {
        self.rounds.clone()
    }

    pub fn dal(&self) -> Vec<f64> {
        self.dal.clone()
    }

    pub fn bare(&self) -> Vec<f64> {
        self.bare.clone()
    }

    /// LinUCB restarted at the true change points.
    pub fn oracle(&self) -> Vec<f64> {
        self.oracle.clone()
    }

    pub fn restarts(&self) -> Vec<f64> {
        self.restarts.clone()
    }

    pub fn change_points(&self) -> Vec<f64> {
        self.change_points.clone()
    }
}

const LINEAR_TEMPLATE: &str = r#"
horizon = {horizon}
seed = {seed}
env.changes = {changes}
env.variant = "linear"
env.dim = 5
env.actions = 20
env.noise_var = 0.01
env.schedule = "evenly"
env.change_kind = "sign_flip"
algo.policy = "linucb"
algo.lambda = 1.0
dal.cover = "linear"
"#;

/// One trial each of DAL-LinUCB, plain LinUCB and oracle-restart LinUCB on
/// the same environment seed, thinned to at most `points` samples.
#[wasm_bindgen]
pub fn regret_curves(horizon: u32, changes: u32, seed: u32, points: u32) -> Result<RegretCurves, JsError> {
    regret_curves_impl(horizon, changes, seed, points).map_err(js)
}

fn regret_curves_impl(horizon: u32, changes: u32, seed: u32, points: u32) -> Result<RegretCurves, String> {
    let text = LINEAR_TEMPLATE
        .replace("{horizon}", &horizon.to_string())
        .replace("{seed}", &seed.to_string())
        .replace("{changes}", &changes.to_string());
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(msg)?;

    let mut traces = Vec::with_capacity(3);
    for mode in [RunMode::Dal, RunMode::Bare, RunMode::OracleRestart] {
        cfg.algo.mode = mode;
        traces.push(run_trial(&cfg, cfg.seed).map_err(msg)?);
    }
    let env = build_environment(&cfg, cfg.seed).map_err(msg)?;
    let n = traces[0].len();
    let step = (n / points.max(2) as usize).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(step).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
    Ok(RegretCurves {
        rounds: idx.iter().map(|&i| (i + 1) as f64).collect(),
        dal: pick(&traces[0].cumulative),
        bare: pick(&traces[1].cumulative),
        oracle: pick(&traces[2].cumulative),
        restarts: traces[0].restarts.iter().map(|&t| t as f64).collect(),
        change_points: env.change_points().iter().map(|&t| t as f64).collect(),
    })
}

#[wasm_bindgen]
pub struct CoverDemo {
    xs: Vec<f64>,
    ys: Vec<f64>,
    chosen: Vec<u32>,
    delta: f64,
    per_axis: u32,
}

#[wasm_bindgen]
impl CoverDemo {
    pub fn xs(&self) -> Vec<f64> {
        self.xs.clone()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.ys.clone()
    }

    /// Ids of the actions in the exploration set.
    pub fn chosen(&self) -> Vec<u32> {
        self.chosen.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[wasm_bindgen(getter)]
    pub fn per_axis(&self) -> u32 {
        self.per_axis
    }
}

/// Uniform actions on `[0, 1]^2` and the nearest action to every center of
/// the `delta_T` grid.
#[wasm_bindgen]
pub fn kernel_cover(actions: u32, gamma_t: f64, q: f64, seed: u32) -> Result<CoverDemo, JsError> {
    kernel_cover_impl(actions, gamma_t, q, seed).map_err(js)
}

fn kernel_cover_impl(actions: u32, gamma_t: f64, q: f64, seed: u32) -> Result<CoverDemo, String> {
    if actions == 0 {
        return Err(msg("need at least one action"));
    }
    let mut cfg = CoveringConfig::new(CoverMode::KernelCover);
    cfg.dim = 2;
    cfg.gamma_t = gamma_t;
    cfg.q = q;
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let points: Vec<Vector> = (0..actions)
        .map(|_| Vector::from_vec(vec![rng.random(), rng.random()]))
        .collect();
    let delta = delta_t(&cfg).map_err(msg)?;
    let cover = build_cover_kernel(&points, &cfg).map_err(msg)?;
    let per_axis = (2f64.sqrt() / (2.0 * delta) - 1e-9).ceil().max(1.0) as u32;
    Ok(CoverDemo {
        xs: points.iter().map(|p| p[0]).collect(),
        ys: points.iter().map(|p| p[1]).collect(),
        chosen: cover.ids.iter().map(|&i| i as u32).collect(),
        delta,
        per_axis,
    })
}
