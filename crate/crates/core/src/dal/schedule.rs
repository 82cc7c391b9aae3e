use super::DalError;

/// Forced-exploration rate `sqrt(k |C| N_e) / (2 sqrt(T) ln^2 T)`, clamped
/// into `(0, 1]`.
pub fn alpha_k(k: usize, n_contexts: usize, n_e: usize, horizon: usize) -> Result<f64, DalError> {
    if horizon < 3 {
        return Err(DalError::Config(format!("horizon must be at least 3, got {horizon}")));
    }
    if k == 0 || n_contexts == 0 || n_e == 0 {
        return Err(DalError::Config("k, |C| and N_e must be positive".into()));
    }
    let t = horizon as f64;
    let alpha = ((k * n_contexts * n_e) as f64).sqrt() / (2.0 * t.sqrt() * t.ln().powi(2));
    Ok(alpha.min(1.0))
}

/// What DAL does at a given round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Play the covering action at this (0-based) position.
    Forced(usize),
    Delegate,
}

/// Cycle bookkeeping: each cycle opens with `N_e` forced plays and runs for
/// `ceil(N_e / alpha_k)` rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationScheduler {
    tau: usize,
    k: usize,
    horizon: usize,
    n_e: usize,
    n_contexts: usize,
    alpha: f64,
    cycle_length: usize,
}

impl ExplorationScheduler {
    pub fn new(horizon: usize, n_e: usize, n_contexts: usize) -> Result<Self, DalError> {
        let alpha = alpha_k(1, n_contexts, n_e, horizon)?;
        Ok(Self {
            tau: 0,
            k: 1,
            horizon,
            n_e,
            n_contexts,
            alpha,
            cycle_length: cycle_length(n_e, alpha),
        })
    }

    /// Fixed cycle length, for tests and demonstrations.
    pub fn with_cycle_length(mut self, cycle_length: usize) -> Self {
        self.cycle_length = cycle_length.max(self.n_e);
        self.alpha = self.n_e as f64 / self.cycle_length as f64;
        self
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cycle_length(&self) -> usize {
        self.cycle_length
    }

    pub fn n_e(&self) -> usize {
        self.n_e
    }

    pub fn position(&self, t: usize) -> Slot {
        debug_assert!(t > self.tau, "round {t} precedes the last restart {}", self.tau);
        let c = (t - self.tau - 1) % self.cycle_length;
        if c < self.n_e {
            Slot::Forced(c)
        } else {
            Slot::Delegate
        }
    }

    /// Records a detection at round `t`.
    pub fn restart(&mut self, t: usize) -> Result<(), DalError> {
        self.tau = t;
        self.k += 1;
        self.alpha = alpha_k(self.k, self.n_contexts, self.n_e, self.horizon)?;
        self.cycle_length = cycle_length(self.n_e, self.alpha);
        Ok(())
    }
}

fn cycle_length(n_e: usize, alpha: f64) -> usize {
    let len = (n_e as f64 / alpha).ceil();
    if len >= usize::MAX as f64 {
        usize::MAX
    } else {
        (len as usize).max(n_e)
    }
}
