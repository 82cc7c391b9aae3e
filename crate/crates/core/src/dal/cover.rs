use crate::round::Vector;

use super::DalError;

/// How the forced-exploration set is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverMode {
    LinearIndependent,
    KernelCover,
    FullActionSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringConfig {
    pub mode: CoverMode,
    /// Relative tolerance for the linear-independence test.
    pub tol: f64,
    /// Side length `R` of the cube `[0, R]^d` holding the actions.
    pub radius: f64,
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub gamma_t: f64,
}

impl CoveringConfig {
    pub fn new(mode: CoverMode) -> Self {
        Self {
            mode,
            tol: 1e-8,
            radius: 1.0,
            dim: 1,
            p: 0.0,
            q: 0.5,
            c: 1.0,
            gamma_t: 1.0,
        }
    }
}

/// The actions played during forced exploration, in play order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringSet {
    /// Global action ids.
    pub ids: Vec<usize>,
    pub actions: Vec<Vector>,
}

impl CoveringSet {
    fn from_ids(ids: Vec<usize>, all: &[Vector]) -> Self {
        let actions = ids.iter().map(|&i| all[i].clone()).collect();
        Self { ids, actions }
    }

    pub fn full(actions: &[Vector]) -> Self {
        Self::from_ids((0..actions.len()).collect(), actions)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Greedy maximal linearly independent subset, scanned in index order.
///
/// An action is kept when the residual of its projection onto the span of
/// the kept actions exceeds `tol` times its norm. If nothing qualifies the
/// first action is returned alone.
pub fn build_cover_linear(actions: &[Vector], tol: f64) -> CoveringSet {
    assert!(!actions.is_empty(), "covering needs at least one action");
    let dim = actions[0].len();
    let mut basis: Vec<Vector> = Vec::new();
    let mut ids = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        if basis.len() == dim {
            break;
        }
        let norm = a.norm();
        if norm == 0.0 {
            continue;
        }
        let mut r = a.clone();
        // two passes of Gram-Schmidt keep the residual honest
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn > tol * norm {
            basis.push(r / rn);
            ids.push(i);
        }
    }
    if ids.is_empty() {
        log::warn!("all actions are numerically zero; covering set falls back to the first action");
        ids.push(0);
    }
    CoveringSet::from_ids(ids, actions)
}

fn check_kernel(cfg: &CoveringConfig) -> Result<(), DalError> {
    let positive = [("R", cfg.radius), ("C", cfg.c), ("gamma_T", cfg.gamma_t)];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(DalError::Config(format!("{name} must be positive, got {v}")));
        }
    }
    for (name, v) in [("p", cfg.p), ("q", cfg.q)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(DalError::Config(format!("{name} must be nonnegative, got {v}")));
        }
    }
    if cfg.dim == 0 {
        return Err(DalError::Config("dimension must be positive".into()));
    }
    Ok(())
}

/// Cover radius `R d^{1/2 - 2p/d} / (2 (C gamma_T^{2q})^{1/d})`.
pub fn delta_t(cfg: &CoveringConfig) -> Result<f64, DalError> {
    check_kernel(cfg)?;
    let d = cfg.dim as f64;
    let num = cfg.radius * d.powf(0.5 - 2.0 * cfg.p / d);
    let den = 2.0 * (cfg.c * cfg.gamma_t.powf(2.0 * cfg.q)).powf(1.0 / d);
    Ok(num / den)
}

/// Grid points per axis, `ceil(sqrt(d) R / (2 delta))`.
fn per_axis(cfg: &CoveringConfig, delta: f64) -> usize {
    let raw = (cfg.dim as f64).sqrt() * cfg.radius / (2.0 * delta);
    // absorb rounding such as sqrt(2) / (2 sqrt(2) / 20) = 10.000000000000002
    ((raw - 1e-9).ceil().max(1.0)) as usize
}

/// Upper bound `ceil(sqrt(d) R / (2 delta_T))^d` on the cover size.
pub fn cover_size_bound(cfg: &CoveringConfig) -> Result<f64, DalError> {
    let delta = delta_t(cfg)?;
    Ok((per_axis(cfg, delta) as f64).powi(cfg.dim as i32))
}

/// Nearest action to each center of a `delta_T` grid cover of `[0, R]^d`,
/// deduplicated. Falls back to the full set when the grid has more points
/// than there are actions.
pub fn build_cover_kernel(actions: &[Vector], cfg: &CoveringConfig) -> Result<CoveringSet, DalError> {
    assert!(!actions.is_empty(), "covering needs at least one action");
    let delta = delta_t(cfg)?;
    build_grid_cover(actions, cfg, delta)
}

pub(crate) fn build_grid_cover(actions: &[Vector], cfg: &CoveringConfig, delta: f64) -> Result<CoveringSet, DalError> {
    if let Some(a) = actions.iter().find(|a| a.len() != cfg.dim) {
        return Err(DalError::Config(format!(
            "cover dimension {} does not match action dimension {}",
            cfg.dim,
            a.len()
        )));
    }
    let m = per_axis(cfg, delta);
    let cells = (m as f64).powi(cfg.dim as i32);
    if cells > actions.len() as f64 {
        return Ok(CoveringSet::full(actions));
    }
    let step = delta / (cfg.dim as f64).sqrt();
    let mut digits = vec![0usize; cfg.dim];
    let mut ids: Vec<usize> = Vec::new();
    for _ in 0..cells as usize {
        let center = Vector::from_iterator(cfg.dim, digits.iter().map(|&j| step * (2 * j + 1) as f64));
        let nearest = crate::round::argmax(actions.iter().map(|a| -(a - &center).norm_squared()))
            .expect("nonempty actions");
        if !ids.contains(&nearest) {
            ids.push(nearest);
        }
        for digit in digits.iter_mut() {
            *digit += 1;
            if *digit < m {
                break;
            }
            *digit = 0;
        }
    }
    Ok(CoveringSet::from_ids(ids, actions))
}

pub fn build_cover(actions: &[Vector], cfg: &CoveringConfig) -> Result<CoveringSet, DalError> {
    match cfg.mode {
        CoverMode::LinearIndependent => Ok(build_cover_linear(actions, cfg.tol)),
        CoverMode::KernelCover => build_cover_kernel(actions, cfg),
        CoverMode::FullActionSet => Ok(CoveringSet::full(actions)),
    }
}
