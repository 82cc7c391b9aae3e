use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::EnvError;

/// Change points `1 < nu_1 < ... < nu_N <= T`; round `nu_k` is the first
/// round of segment `k`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PsSchedule {
    change_points: Vec<usize>,
}

impl PsSchedule {
    pub fn new(change_points: Vec<usize>, horizon: usize) -> Result<Self, EnvError> {
        let mut prev = 1;
        for &c in &change_points {
            if c <= prev || c > horizon {
                return Err(EnvError::Config(format!(
                    "change points must be strictly increasing within (1, {horizon}], got {change_points:?}"
                )));
            }
            prev = c;
        }
        Ok(Self { change_points })
    }

    /// `count` change points splitting `1..=horizon` into equal segments.
    pub fn evenly_spaced(count: usize, horizon: usize) -> Result<Self, EnvError> {
        let pts = (1..=count).map(|k| 1 + k * horizon / (count + 1)).collect();
        Self::new(pts, horizon)
    }

    pub fn change_points(&self) -> &[usize] {
        &self.change_points
    }

    pub fn len(&self) -> usize {
        self.change_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.change_points.is_empty()
    }

    /// Whether round `t` starts a new segment.
    pub fn is_change(&self, t: usize) -> bool {
        self.change_points.binary_search(&t).is_ok()
    }

    /// Segment index (0-based) containing round `t`.
    pub fn segment_of(&self, t: usize) -> usize {
        self.change_points.partition_point(|&c| c <= t)
    }
}

/// I.i.d. geometric gaps with success probability `T^{-xi}`, accumulated
/// from round 1; points past the horizon are dropped.
pub fn sample_geometric_changepoints<R: Rng + ?Sized>(
    rng: &mut R,
    horizon: usize,
    xi: f64,
) -> Result<PsSchedule, EnvError> {
    if horizon < 2 {
        return Err(EnvError::Config("geometric schedule needs T >= 2".into()));
    }
    if !(0.0..1.0).contains(&xi) {
        return Err(EnvError::Config(format!("xi must lie in [0, 1), got {xi}")));
    }
    let rho = (horizon as f64).powf(-xi);
    let geo = Geometric::new(rho).map_err(|e| EnvError::Config(e.to_string()))?;
    let mut points = Vec::new();
    let mut pos: usize = 1;
    loop {
        let gap = geo.sample(rng).saturating_add(1);
        pos = pos.saturating_add(usize::try_from(gap).unwrap_or(usize::MAX));
        if pos > horizon {
            break;
        }
        points.push(pos);
    }
    PsSchedule::new(points, horizon)
}
