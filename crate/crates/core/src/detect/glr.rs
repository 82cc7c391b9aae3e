use super::kl::kl_bernoulli_interior;
use super::{DetectError, GlrConfig, GlrFamily, ObservationBuffer};

/// Outcome of one GLR scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub detected: bool,
    /// First split `s` (1-based length of the pre-change segment) whose
    /// statistic reached the threshold.
    pub split_index: Option<usize>,
    pub statistic: Option<f64>,
}

impl DetectionResult {
    pub const NONE: DetectionResult = DetectionResult {
        detected: false,
        split_index: None,
        statistic: None,
    };

    pub fn at(split: usize, statistic: f64) -> Self {
        Self {
            detected: true,
            split_index: Some(split),
            statistic: Some(statistic),
        }
    }
}

/// Detection threshold for a buffer of `n` samples, natural logarithms:
/// `6 ln(1 + ln n) + 5/2 ln(4 n^{3/2} / delta_f) + 11`.
pub fn glr_threshold(n: usize, delta_f: f64) -> Result<f64, DetectError> {
    if n < 2 {
        return Err(DetectError::Domain(format!("threshold needs n >= 2, got {n}")));
    }
    if !(delta_f > 0.0 && delta_f < 1.0) {
        return Err(DetectError::Domain(format!("delta_F must lie in (0, 1), got {delta_f}")));
    }
    let n = n as f64;
    Ok(6.0 * (1.0 + n.ln()).ln() + 2.5 * (4.0 * n.powf(1.5) / delta_f).ln() + 11.0)
}

fn check_bernoulli(buffer: &ObservationBuffer) -> Result<(), DetectError> {
    if let Some((lo, hi)) = buffer.range() {
        if lo < 0.0 || lo.is_nan() {
            return Err(DetectError::OutOfRange(lo));
        }
        if hi > 1.0 || hi.is_nan() {
            return Err(DetectError::OutOfRange(hi));
        }
    }
    Ok(())
}

/// Split statistic for the segment means `(head, tail)` against the pooled mean.
#[inline]
fn split_stat(family: GlrFamily, s: f64, n: f64, head: f64, tail: f64, pooled: f64) -> f64 {
    match family {
        GlrFamily::Bernoulli => {
            let head = head.clamp(0.0, 1.0);
            let tail = tail.clamp(0.0, 1.0);
            s * kl_bernoulli_interior(head, pooled) + (n - s) * kl_bernoulli_interior(tail, pooled)
        }
        GlrFamily::Gaussian { sigma2 } => {
            let a = head - pooled;
            let b = tail - pooled;
            (s * a * a + (n - s) * b * b) / (2.0 * sigma2)
        }
    }
}

/// `GLR_s` for one split of the buffer. Returns 0 for degenerate Bernoulli
/// buffers (all samples equal to 0 or all equal to 1).
pub fn glr_statistic(
    buffer: &ObservationBuffer,
    s: usize,
    family: GlrFamily,
) -> Result<f64, DetectError> {
    let n = buffer.len();
    if s == 0 || s >= n {
        return Err(DetectError::Domain(format!("split {s} outside 1..{n}")));
    }
    if matches!(family, GlrFamily::Bernoulli) {
        check_bernoulli(buffer)?;
    }
    let total = buffer.total();
    let nf = n as f64;
    let pooled = total / nf;
    if matches!(family, GlrFamily::Bernoulli) && (pooled <= 0.0 || pooled >= 1.0) {
        return Ok(0.0);
    }
    let head_sum = buffer.head_sum(s);
    let sf = s as f64;
    Ok(split_stat(
        family,
        sf,
        nf,
        head_sum / sf,
        (total - head_sum) / (nf - sf),
        pooled,
    ))
}

/// All split statistics `GLR_1, ..., GLR_{n-1}`.
pub fn glr_profile(buffer: &ObservationBuffer, family: GlrFamily) -> Result<Vec<f64>, DetectError> {
    (1..buffer.len()).map(|s| glr_statistic(buffer, s, family)).collect()
}

/// Runs the GLR test on the whole buffer and reports the lowest triggering
/// split, if any.
pub fn glr_scan(buffer: &ObservationBuffer, config: &GlrConfig) -> Result<DetectionResult, DetectError> {
    let n = buffer.len();
    if n < 2 {
        return Ok(DetectionResult::NONE);
    }
    let family = config.family;
    let is_bernoulli = matches!(family, GlrFamily::Bernoulli);
    if is_bernoulli {
        check_bernoulli(buffer)?;
    }
    let threshold = glr_threshold(n, config.delta_f)?;
    let nf = n as f64;
    let total = buffer.total();
    let pooled = total / nf;
    if is_bernoulli && (pooled <= 0.0 || pooled >= 1.0) {
        return Ok(DetectionResult::NONE);
    }
    // KL(Ber(x) || Ber(y)) <= chi^2 = (x - y)^2 / (y (1 - y)), so
    // GLR_s <= s (n - s) / n * (head - tail)^2 / (y (1 - y)); splits whose
    // bound stays below the threshold skip the logarithms.
    let chi2_scale = if is_bernoulli {
        1.0 / (nf * pooled * (1.0 - pooled))
    } else {
        0.0
    };
    let prune_below = threshold * (1.0 - 1e-12);
    for s in 1..n {
        let sf = s as f64;
        let head_sum = buffer.head_sum(s);
        let head = head_sum / sf;
        let tail = (total - head_sum) / (nf - sf);
        if is_bernoulli {
            let gap = head - tail;
            if sf * (nf - sf) * gap * gap * chi2_scale < prune_below {
                continue;
            }
        }
        let stat = split_stat(family, sf, nf, head, tail, pooled);
        if stat >= threshold || !stat.is_finite() {
            return Ok(DetectionResult::at(s, stat));
        }
    }
    Ok(DetectionResult::NONE)
}
