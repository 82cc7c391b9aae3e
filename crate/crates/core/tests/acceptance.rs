//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p dal --test acceptance -- --nocapture` to see the
//! report.

use std::time::{Duration, Instant};

use dal::dal::{build_cover_linear, delta_t, CoverMode, CoveringConfig, CoveringSet, Dal, NeverDetector};
use dal::detect::{glr_scan, glr_statistic, glr_threshold, GlrConfig, GlrFamily, ObservationBuffer};
use dal::envs::{sample_geometric_changepoints, Environment, SyntheticConfig, SyntheticEnv, Variant};
use dal::harness::{run_experiment, write_csv, ExperimentConfig};
use dal::policies::{se_kernel, GpUcb, GpUcbConfig, LinUcb, LinUcbConfig, Policy, SquareCb, SquareCbConfig, Width};
use dal::round::{Round, Vector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> f64 {
    f64::from(u8::from(rng.random::<f64>() < p))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn glr_fidelity() -> Outcome {
    let threshold = glr_threshold(100, 0.01).unwrap();
    let buffer: ObservationBuffer = (0..100).map(|i| f64::from(u8::from(i >= 50))).collect();
    let stat = glr_statistic(&buffer, 50, GlrFamily::Bernoulli).unwrap();
    let fired = glr_scan(&buffer, &GlrConfig::new(GlrFamily::Bernoulli, 0.01).unwrap())
        .unwrap()
        .detected;
    let expected = 100.0 * std::f64::consts::LN_2;
    outcome(
        (threshold - 53.590).abs() <= 1e-3 && (stat - expected).abs() <= 1e-9 && fired,
        format!("threshold {threshold:.4}, statistic at s=50 {stat:.6} (100 ln 2 = {expected:.6}), fired {fired}"),
    )
}

/// Index of the first sample after which a sequential scan fires.
fn first_alarm(values: impl Iterator<Item = f64>, cfg: &GlrConfig) -> Option<usize> {
    let mut buffer = ObservationBuffer::new();
    for (i, x) in values.enumerate() {
        buffer.push(x);
        if glr_scan(&buffer, cfg).unwrap().detected {
            return Some(i + 1);
        }
    }
    None
}

fn false_alarms() -> Outcome {
    let cfg = GlrConfig::new(GlrFamily::Bernoulli, 1.0 / 5000.0).unwrap();
    let alarms = (0..200u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            first_alarm((0..5000).map(|_| bernoulli(&mut rng, 0.3)), &cfg).is_some()
        })
        .count();
    outcome(alarms <= 10, format!("{alarms}/200 streams raised an alarm (limit 10)"))
}

fn detection_delay() -> Outcome {
    let cfg = GlrConfig::new(GlrFamily::Bernoulli, 1.0 / 1000.0).unwrap();
    let mut delays = Vec::new();
    let on_time = (0..200u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let stream = (0..700).map(|i| bernoulli(&mut rng, if i < 500 { 0.2 } else { 0.8 }));
            match first_alarm(stream, &cfg) {
                Some(n) if n > 500 => {
                    delays.push(n - 500);
                    true
                }
                _ => false,
            }
        })
        .count();
    let mean = delays.iter().sum::<usize>() as f64 / delays.len().max(1) as f64;
    outcome(
        on_time >= 190,
        format!("{on_time}/200 detected within 200 post-change samples (need 190), mean delay {mean:.1}"),
    )
}

fn covering() -> Outcome {
    let full = (0..100u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let actions: Vec<Vector> = (0..200).map(|_| gaussian_vec(&mut rng, 10)).collect();
            build_cover_linear(&actions, 1e-8).len() == 10
        })
        .count();
    let cfg = CoveringConfig {
        mode: CoverMode::KernelCover,
        tol: 1e-8,
        radius: 1.0,
        dim: 2,
        p: 0.0,
        q: 0.5,
        c: 1.0,
        gamma_t: 100.0,
    };
    let delta = delta_t(&cfg).unwrap();
    let want = 2f64.sqrt() / 20.0;
    outcome(
        full == 100 && (delta - want).abs() < 1e-12,
        format!("{full}/100 seeds gave 10 actions; delta_T {delta:.6} vs sqrt(2)/20 = {want:.6}"),
    )
}

fn ps_config(mode: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        "horizon = 10000\ntrials = 15\nseed = 0\n\
         env.variant = \"linear\"\nenv.dim = 5\nenv.actions = 20\nenv.noise_var = 0.01\n\
         env.schedule = \"evenly\"\nenv.changes = 3\nenv.change_kind = \"sign_flip\"\n\
         algo.policy = \"linucb\"\nalgo.mode = \"{mode}\"\n"
    ))
    .unwrap()
}

fn dal_dominance() -> Outcome {
    let dal = run_experiment(&ps_config("dal")).unwrap().final_mean();
    let bare = run_experiment(&ps_config("bare")).unwrap().final_mean();
    let oracle = run_experiment(&ps_config("oracle_restart")).unwrap().final_mean();
    outcome(
        dal <= 0.8 * bare && dal <= 2.0 * oracle,
        format!(
            "final regret DAL {dal:.1}, never-restart {bare:.1} (ratio {:.3}, need <= 0.8), oracle-restart {oracle:.1} (ratio {:.3}, need <= 2)",
            dal / bare,
            dal / oracle
        ),
    )
}

fn geometric_schedule() -> Outcome {
    let horizon = 50_000;
    let total: usize = (0..1000u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_geometric_changepoints(&mut rng, horizon, 0.6).unwrap().len()
        })
        .sum();
    let mean = total as f64 / 1000.0;
    let target = (horizon as f64).powf(0.4);
    outcome(
        (mean - target).abs() <= 0.1 * target,
        format!("mean change count {mean:.2} vs {target:.2} (tolerance 10%)"),
    )
}

fn drift_monotonicity() -> Outcome {
    let mut rows = Vec::new();
    for delta in [0.001, 0.01, 0.05] {
        let cfg = ExperimentConfig::from_toml(&format!(
            "horizon = 10000\ntrials = 15\nseed = 0\n\
             env.variant = \"linear\"\nenv.dim = 5\nenv.actions = 20\nenv.noise_var = 0.1\n\
             env.schedule = \"random_walk\"\nenv.delta = {delta}\n\
             algo.policy = \"linucb\"\nalgo.mode = \"dal\"\n"
        ))
        .unwrap();
        let res = run_experiment(&cfg).unwrap();
        rows.push((delta, res.final_mean(), res.mean_restarts()));
    }
    let monotone = rows.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].2 >= w[0].2);
    let detail = rows
        .iter()
        .map(|(d, r, k)| format!("delta {d}: regret {r:.1}, restarts {k:.2}"))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(monotone, detail)
}

fn transparency() -> Outcome {
    let mut mismatches = 0;
    let mut delegated_total = 0;
    for seed in 0..5u64 {
        let horizon = 3000;
        let mut scfg = SyntheticConfig::new(Variant::Contextual, horizon, 0, 6);
        scfg.context_pool = 20;
        let features = SyntheticEnv::new(scfg.clone(), seed).unwrap().features().to_vec();
        let cover = CoveringSet::full(&features);
        let n_ctx = scfg.context_pool;
        let policies: [Box<dyn Fn() -> Box<dyn Policy>>; 2] = [
            Box::new(|| Box::new(SquareCb::new(SquareCbConfig::default()).unwrap())),
            Box::new(|| Box::new(LinUcb::new(LinUcbConfig::new(6, 1.0, Width::Fixed(0.5))).unwrap())),
        ];
        for make in &policies {
            let mut wrapped = Dal::new(make(), NeverDetector, cover.clone(), horizon, n_ctx, true)
                .unwrap()
                .with_scheduler(
                    dal::dal::ExplorationScheduler::new(horizon, cover.len(), n_ctx)
                        .unwrap()
                        .with_cycle_length(25),
                );
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut log = Vec::new();
            let mut env = SyntheticEnv::new(scfg.clone(), seed).unwrap();
            for t in 1..=horizon {
                let info = env.advance(t).unwrap();
                let round = Round::new(t, &info.candidates, &features).with_context(info.context_id, info.context.as_ref());
                let choice = wrapped.choose(&round, &mut rng).unwrap();
                let r = env.pull(choice.action);
                wrapped.observe(&round, choice, r).unwrap();
                if choice.forced.is_none() {
                    log.push((info, choice.action, r.unwrap()));
                }
            }
            let mut bare = make();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (info, action, r) in &log {
                let round = Round::new(info.t, &info.candidates, &features).with_context(info.context_id, info.context.as_ref());
                let pos = bare.select(&round, &mut rng).unwrap();
                mismatches += usize::from(info.candidates[pos] != *action);
                bare.update(&round, *action, *r).unwrap();
            }
            delegated_total += log.len();
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches over {delegated_total} delegated decisions (SquareCB and LinUCB, 5 seeds)"),
    )
}

fn determinism() -> Outcome {
    let mut cfg = ps_config("dal");
    cfg.horizon = Some(3000);
    cfg.trials = 8;
    let mut outputs = Vec::new();
    for p in [1, 8] {
        cfg.parallelism = p;
        let res = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&res, &mut buf, 1).unwrap();
        outputs.push(buf);
    }
    outcome(
        outputs[0] == outputs[1],
        format!("CSV bytes with parallelism 1 and 8 identical: {} ({} bytes)", outputs[0] == outputs[1], outputs[0].len()),
    )
}

/// Self-normalized width recomputed from its definition.
fn width_by_hand(noise_sd: f64, s: f64, l: f64, delta: f64, d: usize, lambda: f64, n: usize) -> f64 {
    let d = d as f64;
    noise_sd * (2.0 * (1.0 / delta).ln() + d * (1.0 + n as f64 * l * l / (lambda * d)).ln()).sqrt() + lambda.sqrt() * s
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut lin_err = 0.0f64;
    let mut lin_mismatch = 0;
    for _ in 0..1000 {
        let d = rng.random_range(2..=8);
        let k = rng.random_range(2..=15);
        let lambda = rng.random_range(0.1..3.0);
        let n = rng.random_range(0..60);
        let width = Width::SelfNormalized {
            noise_sd: 0.1,
            param_bound: 1.0,
            action_bound: 1.0,
            delta: 0.01,
        };
        let mut policy = LinUcb::new(LinUcbConfig::new(d, lambda, width)).unwrap();
        let actions: Vec<Vector> = (0..k)
            .map(|_| {
                let a = gaussian_vec(&mut rng, d);
                let norm = a.norm();
                a / norm
            })
            .collect();
        let ids: Vec<usize> = (0..k).collect();
        let mut gram = DMatrix::<f64>::identity(d, d) * lambda;
        let mut moment = Vector::zeros(d);
        for t in 1..=n {
            let a = rng.random_range(0..k);
            let r = rng.random::<f64>();
            policy.update(&Round::new(t, &ids, &actions), a, r).unwrap();
            gram += &actions[a] * actions[a].transpose();
            moment += &actions[a] * r;
        }
        let inv = gram.clone().try_inverse().unwrap();
        let theta = gram.lu().solve(&moment).unwrap();
        let beta = width_by_hand(0.1, 1.0, 1.0, 0.01, d, lambda, n);
        let scores: Vec<f64> = actions
            .iter()
            .map(|a| theta.dot(a) + beta * a.dot(&(&inv * a)).sqrt())
            .collect();
        for (a, want) in actions.iter().zip(&scores) {
            lin_err = lin_err.max((policy.score(a) - want).abs());
        }
        let pos = policy.select(&Round::new(n + 1, &ids, &actions), &mut rng).unwrap();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if scores[pos] < best - 1e-8 {
            lin_mismatch += 1;
        }
    }

    let mut gp_err = 0.0f64;
    for _ in 0..50 {
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=80);
        let cfg = GpUcbConfig {
            lengthscale: rng.random_range(0.2..1.0),
            noise_var: 0.01,
            ..GpUcbConfig::default()
        };
        let mut gp = GpUcb::new(cfg).unwrap();
        let xs: Vec<Vector> = (0..n).map(|_| Vector::from_fn(d, |_, _| rng.random::<f64>())).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        for (x, &y) in xs.iter().zip(&ys) {
            gp.observe(x, y).unwrap();
        }
        let kmat = DMatrix::from_fn(n, n, |i, j| se_kernel(&xs[i], &xs[j], cfg.lengthscale))
            + DMatrix::<f64>::identity(n, n) * cfg.noise_var;
        let lu = kmat.lu();
        let alpha = lu.solve(&nalgebra::DVector::from_vec(ys.clone())).unwrap();
        for _ in 0..20 {
            let q = Vector::from_fn(d, |_, _| rng.random::<f64>());
            let kq = nalgebra::DVector::from_fn(n, |i, _| se_kernel(&xs[i], &q, cfg.lengthscale));
            let mean = kq.dot(&alpha);
            let var = 1.0 - kq.dot(&lu.solve(&kq).unwrap());
            let (m, v) = gp.posterior(&q);
            gp_err = gp_err.max((m - mean).abs()).max((v - var.max(0.0)).abs());
        }
    }
    outcome(
        lin_err <= 1e-8 && lin_mismatch == 0 && gp_err <= 1e-6,
        format!(
            "LinUCB max score error {lin_err:.2e} (limit 1e-8), {lin_mismatch} selection mismatches in 1000 states; GP max posterior error {gp_err:.2e} (limit 1e-6)"
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 10] = [
        ("1 GLR numeric fidelity", glr_fidelity, Duration::from_secs(1)),
        ("2 false-alarm control", false_alarms, Duration::from_secs(60)),
        ("3 detection delay", detection_delay, Duration::from_secs(60)),
        ("4 covering-set correctness", covering, Duration::from_secs(60)),
        ("5 DAL dominance on PS-LB", dal_dominance, Duration::from_secs(300)),
        ("6 geometric schedule statistics", geometric_schedule, Duration::from_secs(10)),
        ("7 drift monotonicity", drift_monotonicity, Duration::from_secs(600)),
        ("8 black-box transparency", transparency, Duration::from_secs(10)),
        ("9 determinism across parallelism", determinism, Duration::from_secs(120)),
        ("10 oracle equivalence", oracle_equivalence, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let pass = out.pass && took <= limit;
        println!(
            "[{}] {name}: {} [{:.2?}, limit {:.0?}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took,
            limit
        );
        if !pass {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
