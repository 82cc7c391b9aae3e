use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{EnvError, Environment, NoiseSpec, RewardKind, RoundInfo};
use crate::round::Vector;

fn one_hot(k: usize) -> Vec<Vector> {
    (0..k)
        .map(|a| {
            let mut e = Vector::zeros(k);
            e[a] = 1.0;
            e
        })
        .collect()
}

fn io_err(path: &Path, source: std::io::Error) -> EnvError {
    EnvError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> EnvError {
    EnvError::Malformed {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>, EnvError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn records(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>, EnvError> {
    let mut out = Vec::new();
    for rec in reader(path)?.into_records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            malformed(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, raw: &str, what: &str) -> Result<T, EnvError> {
    raw.parse()
        .map_err(|_| malformed(path, line, format!("cannot parse {what} from {raw:?}")))
}

/// Environment driven by a `K x T` matrix of mean rewards.
#[derive(Debug, Clone)]
pub struct MatrixReplay {
    means: Vec<Vec<f64>>,
    features: Vec<Vector>,
    candidates: Vec<usize>,
    noise: NoiseSpec,
    rng: ChaCha8Rng,
    t: usize,
}

impl MatrixReplay {
    pub fn new(means: Vec<Vec<f64>>, noise: NoiseSpec, seed: u64) -> Result<Self, EnvError> {
        let k = means.len();
        if k == 0 {
            return Err(EnvError::Dimension("matrix has no arms".into()));
        }
        let horizon = means[0].len();
        if horizon == 0 || means.iter().any(|row| row.len() != horizon) {
            return Err(EnvError::Dimension("matrix rows must share a positive length".into()));
        }
        match noise {
            NoiseSpec::Gaussian { var } if !(var >= 0.0) => {
                return Err(EnvError::Config("noise variance must be nonnegative".into()))
            }
            NoiseSpec::BernoulliOfMean if means.iter().flatten().any(|m| !(0.0..=1.0).contains(m)) => {
                return Err(EnvError::Config("bernoulli replay needs means in [0, 1]".into()))
            }
            _ => {}
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x5EED_0003);
        Ok(Self {
            features: one_hot(k),
            candidates: (0..k).collect(),
            means,
            noise,
            rng,
            t: 0,
        })
    }

    pub fn load(path: &Path, noise: NoiseSpec, seed: u64) -> Result<Self, EnvError> {
        let recs = records(path)?;
        let Some((line, header)) = recs.first() else {
            return Err(malformed(path, 1, "empty file"));
        };
        if header.len() != 2 {
            return Err(malformed(path, *line, "header must be `K,T`"));
        }
        let k: usize = field(path, *line, &header[0], "K")?;
        let horizon: usize = field(path, *line, &header[1], "T")?;
        if recs.len() - 1 != k {
            return Err(EnvError::Dimension(format!(
                "{}: header declares {k} arms but {} rows follow",
                path.display(),
                recs.len() - 1
            )));
        }
        let mut means = Vec::with_capacity(k);
        for (line, rec) in &recs[1..] {
            if rec.len() != horizon {
                return Err(EnvError::Dimension(format!(
                    "{}: line {line} has {} values, header declares T = {horizon}",
                    path.display(),
                    rec.len()
                )));
            }
            let row = rec
                .iter()
                .map(|v| field::<f64>(path, *line, v, "mean"))
                .collect::<Result<Vec<_>, _>>()?;
            means.push(row);
        }
        Self::new(means, noise, seed)
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }
}

impl Environment for MatrixReplay {
    fn horizon(&self) -> usize {
        self.means[0].len()
    }

    fn features(&self) -> &[Vector] {
        &self.features
    }

    fn reward_kind(&self) -> RewardKind {
        match self.noise {
            NoiseSpec::Gaussian { .. } => RewardKind::Gaussian,
            NoiseSpec::BernoulliOfMean => RewardKind::Bernoulli,
        }
    }

    fn noise_var(&self) -> Option<f64> {
        match self.noise {
            NoiseSpec::Gaussian { var } => Some(var),
            NoiseSpec::BernoulliOfMean => None,
        }
    }

    fn advance(&mut self, t: usize) -> Result<RoundInfo, EnvError> {
        if t != self.t + 1 {
            return Err(EnvError::OutOfOrder {
                expected: self.t + 1,
                got: t,
            });
        }
        if t > self.horizon() {
            return Err(EnvError::PastHorizon {
                t,
                horizon: self.horizon(),
            });
        }
        self.t = t;
        Ok(RoundInfo {
            t,
            context_id: 0,
            context: None,
            candidates: self.candidates.clone(),
        })
    }

    fn mean(&self, action: usize) -> f64 {
        self.means[action][self.t.max(1) - 1]
    }

    fn pull(&mut self, action: usize) -> Option<f64> {
        let mean = self.mean(action);
        Some(match self.noise {
            NoiseSpec::Gaussian { var } => mean + var.sqrt() * self.rng.sample::<f64, _>(StandardNormal),
            NoiseSpec::BernoulliOfMean => f64::from(u8::from(self.rng.random::<f64>() < mean)),
        })
    }
}

/// One row of a logged bandit dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedRound {
    pub t: i64,
    pub candidates: Vec<usize>,
    pub displayed: usize,
    pub reward: f64,
}

/// Replay of logged uniform-random data: the outcome is revealed only when
/// the learner picks the displayed id, otherwise the round gives no feedback.
#[derive(Debug, Clone)]
pub struct LoggedReplay {
    rounds: Vec<LoggedRound>,
    features: Vec<Vector>,
    t: usize,
}

impl LoggedReplay {
    pub fn new(rounds: Vec<LoggedRound>) -> Result<Self, EnvError> {
        if rounds.is_empty() {
            return Err(EnvError::Dimension("logged replay has no rounds".into()));
        }
        let k = rounds
            .iter()
            .flat_map(|r| r.candidates.iter().copied())
            .max()
            .map_or(0, |m| m + 1);
        Ok(Self {
            features: one_hot(k),
            rounds,
            t: 0,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        let recs = records(path)?;
        let Some((line, header)) = recs.first() else {
            return Err(malformed(path, 1, "empty file"));
        };
        let expected = ["t", "candidates", "displayed", "reward"];
        if header.iter().ne(expected) {
            return Err(malformed(path, *line, "header must be `t,candidates,displayed,reward`"));
        }
        let mut rounds: Vec<LoggedRound> = Vec::with_capacity(recs.len() - 1);
        for (line, rec) in &recs[1..] {
            let line = *line;
            if rec.len() != 4 {
                return Err(malformed(path, line, format!("expected 4 fields, found {}", rec.len())));
            }
            let t: i64 = field(path, line, &rec[0], "t")?;
            let candidates = rec[1]
                .split(';')
                .map(|c| field::<usize>(path, line, c.trim(), "candidate id"))
                .collect::<Result<Vec<_>, _>>()?;
            let displayed: usize = field(path, line, &rec[2], "displayed id")?;
            let reward = match &rec[3] {
                "0" => 0.0,
                "1" => 1.0,
                other => return Err(malformed(path, line, format!("reward must be 0 or 1, found {other:?}"))),
            };
            if let Some(prev) = rounds.last() {
                if t <= prev.t {
                    return Err(EnvError::NonMonotone {
                        path: path.display().to_string(),
                        line,
                        prev: prev.t,
                        next: t,
                    });
                }
            }
            if !candidates.contains(&displayed) {
                return Err(EnvError::DisplayedNotCandidate {
                    path: path.display().to_string(),
                    line,
                    displayed,
                });
            }
            rounds.push(LoggedRound {
                t,
                candidates,
                displayed,
                reward,
            });
        }
        Self::new(rounds)
    }

    pub fn rounds(&self) -> &[LoggedRound] {
        &self.rounds
    }

    fn current(&self) -> &LoggedRound {
        &self.rounds[self.t.max(1) - 1]
    }
}

impl Environment for LoggedReplay {
    fn horizon(&self) -> usize {
        self.rounds.len()
    }

    fn features(&self) -> &[Vector] {
        &self.features
    }

    fn reward_kind(&self) -> RewardKind {
        RewardKind::Bernoulli
    }

    fn advance(&mut self, t: usize) -> Result<RoundInfo, EnvError> {
        if t != self.t + 1 {
            return Err(EnvError::OutOfOrder {
                expected: self.t + 1,
                got: t,
            });
        }
        if t > self.rounds.len() {
            return Err(EnvError::PastHorizon {
                t,
                horizon: self.rounds.len(),
            });
        }
        self.t = t;
        Ok(RoundInfo {
            t,
            context_id: 0,
            context: None,
            candidates: self.current().candidates.clone(),
        })
    }

    /// Logged data carries no means; this is zero for every action.
    fn mean(&self, _action: usize) -> f64 {
        0.0
    }

    fn pull(&mut self, action: usize) -> Option<f64> {
        let round = self.current();
        (round.displayed == action).then_some(round.reward)
    }

    fn has_means(&self) -> bool {
        false
    }
}

/// Loads a replay file, picking matrix or logged mode from the first line.
pub fn load_replay(path: &Path, noise: NoiseSpec, seed: u64) -> Result<Box<dyn Environment>, EnvError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| io_err(path, e))?;
    if first.trim_start().starts_with("t,") {
        Ok(Box::new(LoggedReplay::load(path)?))
    } else {
        Ok(Box::new(MatrixReplay::load(path, noise, seed)?))
    }
}

pub fn write_matrix_csv(path: &Path, means: &[Vec<f64>]) -> Result<(), EnvError> {
    let horizon = means.first().map_or(0, Vec::len);
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let mut body = format!("{},{}\n", means.len(), horizon);
    for row in means {
        // `{}` on f64 prints the shortest string that parses back to the same bits
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        body.push_str(&line.join(","));
        body.push('\n');
    }
    out.write_all(body.as_bytes()).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

pub fn write_logged_csv(path: &Path, rounds: &[LoggedRound]) -> Result<(), EnvError> {
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    let mut body = String::from("t,candidates,displayed,reward\n");
    for r in rounds {
        let ids: Vec<String> = r.candidates.iter().map(usize::to_string).collect();
        body.push_str(&format!("{},{},{},{}\n", r.t, ids.join(";"), r.displayed, r.reward as u8));
    }
    out.write_all(body.as_bytes()).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}
