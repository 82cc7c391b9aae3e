use rand::Rng;
use rand_distr::StandardNormal;

use super::EnvError;
use crate::policies::{se_kernel, sigmoid};
use crate::round::Vector;

/// Per-action parameters of the contextual reward function.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualArm {
    pub u: Vector,
    pub v: Vector,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextualModel {
    pub arms: Vec<ContextualArm>,
    pub z_sig: f64,
    pub z_sin: f64,
    pub z_xpr: f64,
}

/// `f(x) = sum_i alpha_i k(x, x_i)` with an SE kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub weights: Vec<f64>,
    pub centers: Vec<Vector>,
    pub lengthscale: f64,
}

impl KernelModel {
    pub fn eval(&self, x: &Vector) -> f64 {
        self.weights
            .iter()
            .zip(&self.centers)
            .map(|(w, c)| w * se_kernel(x, c, self.lengthscale))
            .sum()
    }
}

/// Ground-truth mean reward function of one stationary stretch.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardModel {
    /// `<theta, a>`
    Linear { theta: Vector },
    /// `sigmoid(<theta, a>)` observed with Gaussian noise.
    Glm { theta: Vector },
    /// `sigmoid(<theta, a>)` observed as a Bernoulli draw.
    Scb { theta: Vector },
    Kernel(KernelModel),
    Contextual(ContextualModel),
}

impl RewardModel {
    /// Mean reward of action `action` (global id) with features `features`.
    pub fn mean(&self, context: Option<&Vector>, action: usize, features: &Vector) -> f64 {
        match self {
            RewardModel::Linear { theta } => theta.dot(features),
            RewardModel::Glm { theta } | RewardModel::Scb { theta } => sigmoid(theta.dot(features)),
            RewardModel::Kernel(k) => k.eval(features),
            RewardModel::Contextual(m) => {
                let c = context.expect("contextual model needs a context");
                contextual_mean(m, c, action).expect("context dimension checked at construction")
            }
        }
    }

    pub fn theta(&self) -> Option<&Vector> {
        match self {
            RewardModel::Linear { theta } | RewardModel::Glm { theta } | RewardModel::Scb { theta } => {
                Some(theta)
            }
            _ => None,
        }
    }

    pub fn with_theta(&self, theta: Vector) -> RewardModel {
        match self {
            RewardModel::Linear { .. } => RewardModel::Linear { theta },
            RewardModel::Glm { .. } => RewardModel::Glm { theta },
            RewardModel::Scb { .. } => RewardModel::Scb { theta },
            other => other.clone(),
        }
    }

    /// `(1 - w) self + w other`, taken on the parameters for parametric and
    /// contextual models and on the function itself for kernel models.
    pub fn interpolate(&self, other: &RewardModel, w: f64) -> Result<RewardModel, EnvError> {
        let lerp = |a: f64, b: f64| (1.0 - w) * a + w * b;
        match (self, other) {
            (RewardModel::Kernel(a), RewardModel::Kernel(b)) => {
                if a.lengthscale != b.lengthscale {
                    return Err(EnvError::Config("kernel blend needs equal lengthscales".into()));
                }
                let weights = a
                    .weights
                    .iter()
                    .map(|x| (1.0 - w) * x)
                    .chain(b.weights.iter().map(|x| w * x))
                    .collect();
                let centers = a.centers.iter().chain(&b.centers).cloned().collect();
                Ok(RewardModel::Kernel(KernelModel {
                    weights,
                    centers,
                    lengthscale: a.lengthscale,
                }))
            }
            (RewardModel::Contextual(a), RewardModel::Contextual(b)) => {
                if a.arms.len() != b.arms.len() {
                    return Err(EnvError::Dimension("contextual blend needs equal arm counts".into()));
                }
                let arms = a
                    .arms
                    .iter()
                    .zip(&b.arms)
                    .map(|(x, y)| ContextualArm {
                        u: &x.u * (1.0 - w) + &y.u * w,
                        v: &x.v * (1.0 - w) + &y.v * w,
                        b: lerp(x.b, y.b),
                    })
                    .collect();
                Ok(RewardModel::Contextual(ContextualModel {
                    arms,
                    z_sig: lerp(a.z_sig, b.z_sig),
                    z_sin: lerp(a.z_sin, b.z_sin),
                    z_xpr: lerp(a.z_xpr, b.z_xpr),
                }))
            }
            (a, b) => match (a.theta(), b.theta()) {
                (Some(ta), Some(tb)) if std::mem::discriminant(a) == std::mem::discriminant(b) => {
                    if ta.len() != tb.len() {
                        return Err(EnvError::Dimension("parameter blend needs equal dimensions".into()));
                    }
                    Ok(a.with_theta(ta * (1.0 - w) + tb * w))
                }
                _ => Err(EnvError::Config("cannot blend reward models of different kinds".into())),
            },
        }
    }
}

/// Uniform draw from the centered ball of radius `radius` in `dim` dimensions.
pub fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vector {
    loop {
        let g = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 0.0 {
            let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
            return g * (r / n);
        }
    }
}

/// `theta` with coordinates `U[-1, 1]` rescaled to norm exactly `norm_bound`.
pub fn make_parametric_model<R: Rng + ?Sized>(rng: &mut R, dim: usize, norm_bound: f64) -> Vector {
    loop {
        let theta = Vector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        let n = theta.norm();
        if n > 0.0 {
            return theta * (norm_bound / n);
        }
    }
}

/// `M` centers uniform in the ball of radius `radius`, weights `U[-1, 1]`.
pub fn make_kernel_model<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    radius: f64,
    centers: usize,
    lengthscale: f64,
) -> KernelModel {
    let centers: Vec<Vector> = (0..centers).map(|_| sample_in_ball(rng, dim, radius)).collect();
    let weights = centers.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
    KernelModel {
        weights,
        centers,
        lengthscale,
    }
}

pub fn make_contextual_model<R: Rng + ?Sized>(rng: &mut R, actions: usize, context_dim: usize) -> ContextualModel {
    let arms = (0..actions)
        .map(|_| ContextualArm {
            u: Vector::from_fn(context_dim, |_, _| rng.sample::<f64, _>(StandardNormal)),
            v: Vector::from_fn(context_dim, |_, _| rng.sample::<f64, _>(StandardNormal)),
            b: rng.random_range(0.3..=0.7),
        })
        .collect();
    ContextualModel {
        arms,
        z_sig: rng.random_range(0.25..=0.45),
        z_sin: rng.random_range(0.15..=0.35),
        z_xpr: rng.random_range(0.10..=0.25),
    }
}

/// `clip(b_a + z_sig sigmoid(u_a.c) + z_sin sin(v_a.c) + z_xpr c_2 c_3, 0, 1)`
/// with 1-based coordinates `c_2, c_3`.
pub fn contextual_mean(model: &ContextualModel, context: &Vector, action: usize) -> Result<f64, EnvError> {
    let arm = model
        .arms
        .get(action)
        .ok_or_else(|| EnvError::Dimension(format!("action {action} outside {} arms", model.arms.len())))?;
    if context.len() != arm.u.len() || context.len() < 3 {
        return Err(EnvError::Dimension(format!(
            "context has {} entries, model expects {}",
            context.len(),
            arm.u.len()
        )));
    }
    let raw = arm.b
        + model.z_sig * sigmoid(arm.u.dot(context))
        + model.z_sin * arm.v.dot(context).sin()
        + model.z_xpr * context[1] * context[2];
    Ok(raw.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parametric_norm_is_exact() {
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for s in [1.0, 3.0] {
                let theta = make_parametric_model(&mut rng, 10, s);
                assert!((theta.norm() - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parametric_directions_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut acc = Vector::zeros(5);
        let n = 10_000;
        for _ in 0..n {
            acc += make_parametric_model(&mut rng, 5, 1.0);
        }
        assert!((acc / n as f64).norm() < 0.05);
    }

    #[test]
    fn kernel_model_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = make_kernel_model(&mut rng, 3, 3f64.sqrt(), 200, 0.2);
        assert_eq!(model.centers.len(), 200);
        assert!(model.weights.iter().all(|w| (-1.0..=1.0).contains(w)));
        for _ in 0..20 {
            let x = sample_in_ball(&mut rng, 3, 3f64.sqrt());
            let mut direct = 0.0;
            for i in 0..200 {
                let d2: f64 = (0..3).map(|j| (x[j] - model.centers[i][j]).powi(2)).sum();
                direct += model.weights[i] * (-d2 / (2.0 * 0.04)).exp();
            }
            assert!((model.eval(&x) - direct).abs() < 1e-12);
        }
        let c = &model.centers[0];
        assert_eq!(se_kernel(c, c, 0.2), 1.0);
    }

    #[test]
    fn contextual_means_stay_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = make_contextual_model(&mut rng, 20, 10);
        for _ in 0..100_000 {
            let c = sample_in_ball(&mut rng, 10, 3.0);
            let a = rng.random_range(0..20);
            let m = contextual_mean(&model, &c, a).unwrap();
            assert!((0.0..=1.0).contains(&m));
        }
    }

    #[test]
    fn contextual_mean_matches_independent_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = make_contextual_model(&mut rng, 5, 10);
        for _ in 0..200 {
            let c = sample_in_ball(&mut rng, 10, 1.0);
            let a = rng.random_range(0..5);
            let arm = &model.arms[a];
            let mut ud = 0.0;
            let mut vd = 0.0;
            for j in 0..10 {
                ud += arm.u[j] * c[j];
                vd += arm.v[j] * c[j];
            }
            let raw = arm.b + model.z_sig / (1.0 + (-ud).exp()) + model.z_sin * vd.sin() + model.z_xpr * c[1] * c[2];
            let expected = raw.clamp(0.0, 1.0);
            assert!((contextual_mean(&model, &c, a).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coefficients_leave_the_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut model = make_contextual_model(&mut rng, 3, 10);
        model.z_sig = 0.0;
        model.z_sin = 0.0;
        model.z_xpr = 0.0;
        let c = sample_in_ball(&mut rng, 10, 1.0);
        for a in 0..3 {
            assert_eq!(contextual_mean(&model, &c, a).unwrap(), model.arms[a].b);
        }
        assert!(contextual_mean(&model, &Vector::zeros(4), 0).is_err());
    }

    #[test]
    fn blend_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = RewardModel::Linear { theta: make_parametric_model(&mut rng, 4, 1.0) };
        let b = RewardModel::Linear { theta: make_parametric_model(&mut rng, 4, 1.0) };
        assert_eq!(a.interpolate(&b, 0.0).unwrap(), a);
        assert_eq!(a.interpolate(&b, 1.0).unwrap(), b);
        let ka = RewardModel::Kernel(make_kernel_model(&mut rng, 2, 1.0, 10, 0.2));
        let kb = RewardModel::Kernel(make_kernel_model(&mut rng, 2, 1.0, 10, 0.2));
        let mid = ka.interpolate(&kb, 0.3).unwrap();
        let x = sample_in_ball(&mut rng, 2, 1.0);
        let f = |m: &RewardModel| m.mean(None, 0, &x);
        assert!((f(&mid) - (0.7 * f(&ka) + 0.3 * f(&kb))).abs() < 1e-12);
        assert!(a.interpolate(&ka, 0.5).is_err());
    }
}
