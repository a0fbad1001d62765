//! Designers: the policies that pick the next latent vector.
//!
//! * [`Designer::Random`] samples uniformly and ignores the state, the
//!   baseline generator.
//! * [`Designer::Periodic`] replays a fixed action list by step index.
//! * [`Designer::Neural`] is a tanh MLP Gaussian policy trained with
//!   episodic REINFORCE ([`train`]).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent_mdp::{initial_state, run_episode, DesignerState, EpisodeConfig, LatentVector};
use crate::reward_model::RewardModel;
use crate::seed::{derive_seed, rng_from_seed, stream, RandomSource};
use crate::segment_codec::Decoder;

/// Feed-forward policy `n*d -> hidden -> d`, tanh on both layers.
///
/// Parameters live in one flat vector laid out as
/// `[w1 (hidden x input, row-major) | b1 | w2 (output x hidden) | b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNetwork {
    input: usize,
    hidden: usize,
    output: usize,
    params: Vec<f64>,
    sigma: f64,
}

struct Activations {
    hidden: Vec<f64>,
    mean: Vec<f64>,
}

impl PolicyNetwork {
    /// All-zero network.
    pub fn zeros(input: usize, hidden: usize, output: usize, sigma: f64) -> Self {
        let len = hidden * input + hidden + output * hidden + output;
        PolicyNetwork {
            input,
            hidden,
            output,
            params: vec![0.0; len],
            sigma,
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init_random<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        output: usize,
        sigma: f64,
        rng: &mut R,
    ) -> Self {
        let mut net = PolicyNetwork::zeros(input, hidden, output, sigma);
        let (w1, _, w2, _) = net.ranges();
        let b1 = 1.0 / (input as f64).sqrt();
        for p in &mut net.params[w1] {
            *p = rng.random_range(-b1..b1);
        }
        let b2 = 1.0 / (hidden as f64).sqrt();
        for p in &mut net.params[w2] {
            *p = rng.random_range(-b2..b2);
        }
        net
    }

    pub fn from_params(
        input: usize,
        hidden: usize,
        output: usize,
        sigma: f64,
        params: Vec<f64>,
    ) -> Result<Self> {
        let net = PolicyNetwork::zeros(input, hidden, output, sigma);
        Error::check_dim(net.params.len(), params.len())?;
        if params.iter().any(|p| !p.is_finite()) || !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig("non-finite network parameter".into()));
        }
        Ok(PolicyNetwork { params, ..net })
    }

    fn ranges(
        &self,
    ) -> (
        std::ops::Range<usize>,
        std::ops::Range<usize>,
        std::ops::Range<usize>,
        std::ops::Range<usize>,
    ) {
        let a = self.hidden * self.input;
        let b = a + self.hidden;
        let c = b + self.output * self.hidden;
        let e = c + self.output;
        (0..a, a..b, b..c, c..e)
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn output_dim(&self) -> usize {
        self.output
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    fn activations(&self, x: &[f64]) -> Activations {
        let (w1, b1, w2, b2) = self.ranges();
        let (w1, b1) = (&self.params[w1], &self.params[b1]);
        let (w2, b2) = (&self.params[w2], &self.params[b2]);
        let hidden: Vec<f64> = w1
            .chunks_exact(self.input)
            .zip(b1)
            .map(|(row, b)| (b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).tanh())
            .collect();
        let mean = w2
            .chunks_exact(self.hidden)
            .zip(b2)
            .map(|(row, b)| (b + row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>()).tanh())
            .collect();
        Activations { hidden, mean }
    }

    /// Mean action for a flat input vector.
    pub fn forward_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.input, x.len())?;
        Ok(self.activations(x).mean)
    }

    /// Mean action for `state`; every component lies in (-1, 1).
    pub fn forward(&self, state: &DesignerState) -> Result<LatentVector> {
        Ok(LatentVector::clamped(self.forward_raw(&state.flatten())?))
    }
}

/// Free-function form of [`PolicyNetwork::forward`].
pub fn forward(net: &PolicyNetwork, state: &DesignerState) -> Result<LatentVector> {
    net.forward(state)
}

fn check_action(net: &PolicyNetwork, state: &DesignerState, action: &[f64]) -> Result<Vec<f64>> {
    if net.sigma <= 0.0 {
        return Err(Error::Precondition(
            "log-probability needs sigma > 0".into(),
        ));
    }
    Error::check_dim(net.output, action.len())?;
    let x = state.flatten();
    Error::check_dim(net.input, x.len())?;
    Ok(x)
}

/// `log N(action; forward(state), sigma^2 I)`.
pub fn log_prob(net: &PolicyNetwork, state: &DesignerState, action: &[f64]) -> Result<f64> {
    let x = check_action(net, state, action)?;
    let mean = net.activations(&x).mean;
    let var = net.sigma * net.sigma;
    let sq: f64 = action.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum();
    let norm = 0.5 * net.output as f64 * (2.0 * std::f64::consts::PI * var).ln();
    Ok(-sq / (2.0 * var) - norm)
}

/// Gradient of [`log_prob`] with respect to every network parameter.
///
/// `action` is the raw Gaussian sample, before any clamping.
pub fn grad_log_prob(net: &PolicyNetwork, state: &DesignerState, action: &[f64]) -> Result<Vec<f64>> {
    let x = check_action(net, state, action)?;
    let act = net.activations(&x);
    let var = net.sigma * net.sigma;
    let (w1r, b1r, w2r, b2r) = net.ranges();
    let mut grad = vec![0.0; net.params.len()];

    // d log p / d pre-activation of the output layer
    let g_out: Vec<f64> = action
        .iter()
        .zip(&act.mean)
        .map(|(a, m)| (a - m) / var * (1.0 - m * m))
        .collect();
    let w2 = &net.params[w2r.clone()];
    let mut g_hidden = vec![0.0; net.hidden];
    for (j, g) in g_out.iter().enumerate() {
        grad[b2r.start + j] = *g;
        for k in 0..net.hidden {
            grad[w2r.start + j * net.hidden + k] = g * act.hidden[k];
            g_hidden[k] += w2[j * net.hidden + k] * g;
        }
    }
    for k in 0..net.hidden {
        let g = g_hidden[k] * (1.0 - act.hidden[k] * act.hidden[k]);
        grad[b1r.start + k] = g;
        for (i, xi) in x.iter().enumerate() {
            grad[w1r.start + k * net.input + i] = g * xi;
        }
    }
    Ok(grad)
}

/// A level designer.
#[derive(Debug, Clone, PartialEq)]
pub enum Designer {
    /// Uniform latent sampler; ignores the state.
    Random { d: usize },
    /// Emits `actions[step mod period]`.
    Periodic { actions: Vec<LatentVector> },
    /// Gaussian policy around a tanh MLP mean; deterministic when sigma is 0.
    Neural(PolicyNetwork),
}

impl Designer {
    pub fn periodic(actions: Vec<LatentVector>) -> Result<Self> {
        let first = actions
            .first()
            .ok_or_else(|| Error::InvalidConfig("periodic designer needs actions".into()))?;
        for a in &actions {
            Error::check_dim(first.dim(), a.dim())?;
        }
        Ok(Designer::Periodic { actions })
    }

    /// Action dimension.
    pub fn d(&self) -> Option<usize> {
        match self {
            Designer::Random { d } => Some(*d),
            Designer::Periodic { actions } => actions.first().map(|a| a.dim()),
            Designer::Neural(net) => Some(net.output),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            Designer::Random { .. } => false,
            Designer::Periodic { .. } => true,
            Designer::Neural(net) => net.sigma == 0.0,
        }
    }

    /// Picks the action for `state` at 0-based `step`.
    pub fn act(
        &self,
        state: &DesignerState,
        step: usize,
        rng: &mut RandomSource,
    ) -> Result<LatentVector> {
        match self {
            Designer::Random { d } => {
                Error::check_dim(*d, state.d())?;
                Ok(LatentVector::sample_uniform(*d, rng))
            }
            Designer::Periodic { actions } => {
                let a = &actions[step % actions.len()];
                Error::check_dim(a.dim(), state.d())?;
                Ok(a.clone())
            }
            Designer::Neural(net) => {
                let mut mean = net.forward_raw(&state.flatten())?;
                if net.sigma > 0.0 {
                    for m in &mut mean {
                        let eps: f64 = StandardNormal.sample(rng);
                        *m += net.sigma * eps;
                    }
                }
                Ok(LatentVector::clamped(mean))
            }
        }
    }

    /// Checkpoint text: a header block, then the decimal parameter dump.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::new();
        match self {
            Designer::Random { d } => out.push_str(&format!("designer random\nd {d}\n")),
            Designer::Periodic { actions } => {
                out.push_str(&format!(
                    "designer periodic\nd {}\nperiod {}\nactions\n",
                    actions[0].dim(),
                    actions.len()
                ));
                for a in actions {
                    let line: Vec<String> = a.as_slice().iter().map(|x| x.to_string()).collect();
                    out.push_str(&line.join(" "));
                    out.push('\n');
                }
            }
            Designer::Neural(net) => {
                out.push_str(&format!(
                    "designer neural\ninput {}\nhidden {}\noutput {}\nsigma {}\nparams {}\n",
                    net.input,
                    net.hidden,
                    net.output,
                    net.sigma,
                    net.params.len()
                ));
                for p in &net.params {
                    out.push_str(&format!("{p}\n"));
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("checkpoint truncated before {what}")))
        };
        fn value<T: std::str::FromStr>(line: (usize, &str), key: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            let (no, l) = line;
            let rest = l
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| Error::parse(no, format!("expected `{key} <value>`")))?;
            rest.trim().parse::<T>().map_err(|e| Error::parse(no, e.to_string()))
        }
        let kind: String = value(next("header")?, "designer")?;
        let designer = match kind.as_str() {
            "random" => Designer::Random {
                d: value(next("d")?, "d")?,
            },
            "periodic" => {
                let d: usize = value(next("d")?, "d")?;
                let period: usize = value(next("period")?, "period")?;
                let (no, l) = next("actions")?;
                if l != "actions" {
                    return Err(Error::parse(no, "expected `actions`"));
                }
                let mut actions = Vec::with_capacity(period);
                for _ in 0..period {
                    let (no, l) = next("action")?;
                    let comps = l
                        .split_whitespace()
                        .map(|x| x.parse::<f64>().map_err(|e| Error::parse(no, e.to_string())))
                        .collect::<Result<Vec<_>>>()?;
                    if comps.len() != d {
                        return Err(Error::parse(no, format!("expected {d} components")));
                    }
                    actions.push(LatentVector::new(comps).map_err(|e| Error::parse(no, e.to_string()))?);
                }
                Designer::periodic(actions)?
            }
            "neural" => {
                let input = value(next("input")?, "input")?;
                let hidden = value(next("hidden")?, "hidden")?;
                let output = value(next("output")?, "output")?;
                let sigma = value(next("sigma")?, "sigma")?;
                let count: usize = value(next("params")?, "params")?;
                let mut params = Vec::with_capacity(count);
                for _ in 0..count {
                    let (no, l) = next("parameter")?;
                    params.push(l.parse::<f64>().map_err(|e| Error::parse(no, e.to_string()))?);
                }
                Designer::Neural(PolicyNetwork::from_params(input, hidden, output, sigma, params)?)
            }
            other => return Err(Error::parse(1, format!("unknown designer kind {other:?}"))),
        };
        let (no, l) = next("end")?;
        if l != "end" {
            return Err(Error::parse(no, "expected `end`"));
        }
        Ok(designer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    None,
    MeanReturn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Environment steps; rounded up to whole batches of whole episodes.
    pub total_steps: usize,
    pub learning_rate: f64,
    pub baseline: Baseline,
    pub seed: u64,
    /// Episodes per policy update.
    pub batch_episodes: usize,
    /// Exploration std-dev during training.
    pub sigma: f64,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_steps: 20_000,
            learning_rate: 0.01,
            baseline: Baseline::MeanReturn,
            seed: 0,
            batch_episodes: 8,
            sigma: 0.3,
            hidden: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if self.total_steps == 0 || self.batch_episodes == 0 || self.hidden == 0 {
            return fail("total_steps, batch_episodes and hidden must be positive");
        }
        if self.baseline == Baseline::MeanReturn && self.batch_episodes < 2 {
            return fail("a mean-return baseline needs at least 2 episodes per batch");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return fail("training sigma must be positive");
        }
        Ok(())
    }
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The trained network, still carrying the training sigma.
    pub network: PolicyNetwork,
    /// Undiscounted mean per-step reward of every training episode.
    pub curve: Vec<f64>,
}

impl TrainOutcome {
    /// The deterministic (sigma = 0) evaluation designer.
    pub fn eval_designer(&self) -> Designer {
        Designer::Neural(self.network.clone().with_sigma(0.0))
    }
}

struct EpisodeSample {
    states: Vec<DesignerState>,
    samples: Vec<Vec<f64>>,
    rewards: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// Gradient ascent step.
    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p += lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Episodic REINFORCE with discount `episode.gamma`.
///
/// Each update collects `batch_episodes` episodes of `episode.h` steps with
/// exploration noise `net.sigma()`, weights every score-function term by the
/// discounted return-to-go (minus the per-step batch mean return when the
/// mean-return baseline is on), and takes one Adam ascent step. Episodes run in
/// parallel; each has its own seed derived from `(cfg.seed, episode index)` and
/// gradients are summed in episode order, so results are seed-deterministic.
pub fn train<W: RewardModel + ?Sized>(
    net: PolicyNetwork,
    decoder: &Decoder,
    reward: &W,
    episode: &EpisodeConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    episode.validate()?;
    if net.sigma <= 0.0 {
        return Err(Error::Precondition("training needs sigma > 0".into()));
    }
    Error::check_dim(episode.n * episode.d, net.input)?;
    Error::check_dim(episode.d, net.output)?;
    Error::check_dim(episode.d, decoder.d())?;

    let h = episode.h;
    let episodes = cfg.total_steps.div_ceil(h);
    let batches = episodes.div_ceil(cfg.batch_episodes);
    let mut net = net;
    let mut adam = Adam::new(net.params.len());
    let mut curve = Vec::with_capacity(batches * cfg.batch_episodes);

    for batch in 0..batches {
        let first = batch * cfg.batch_episodes;
        let samples = (first..first + cfg.batch_episodes)
            .into_par_iter()
            .map(|ep| {
                let mut rng = rng_from_seed(derive_seed(cfg.seed, &[stream::TRAIN, ep as u64]));
                let start = initial_state(episode, &mut rng);
                let mut states = Vec::with_capacity(h);
                let mut raw = Vec::with_capacity(h);
                let traj = run_episode(start, decoder, reward, h, |state, _| {
                    let mut a = net.forward_raw(&state.flatten())?;
                    for x in &mut a {
                        let eps: f64 = StandardNormal.sample(&mut rng);
                        *x += net.sigma * eps;
                    }
                    states.push(state.clone());
                    raw.push(a.clone());
                    Ok(LatentVector::clamped(a))
                })?;
                Ok(EpisodeSample {
                    states,
                    samples: raw,
                    rewards: traj.rewards,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let returns: Vec<Vec<f64>> = samples
            .iter()
            .map(|s| discounted_returns(&s.rewards, episode.gamma))
            .collect();
        let baseline: Vec<f64> = match cfg.baseline {
            Baseline::None => vec![0.0; h],
            Baseline::MeanReturn => (0..h)
                .map(|t| returns.iter().map(|g| g[t]).sum::<f64>() / returns.len() as f64)
                .collect(),
        };
        let mut grad = vec![0.0; net.params.len()];
        for (s, g) in samples.iter().zip(&returns) {
            for t in 0..h {
                let adv = g[t] - baseline[t];
                if adv == 0.0 {
                    continue;
                }
                let score = grad_log_prob(&net, &s.states[t], &s.samples[t])?;
                for (acc, x) in grad.iter_mut().zip(score) {
                    *acc += adv * x;
                }
            }
        }
        let scale = 1.0 / (samples.len() * h) as f64;
        for g in &mut grad {
            *g *= scale;
        }
        adam.step(&mut net.params, &grad, cfg.learning_rate);
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                episode: first + cfg.batch_episodes,
            });
        }
        curve.extend(
            samples
                .iter()
                .map(|s| s.rewards.iter().sum::<f64>() / s.rewards.len() as f64),
        );
    }
    Ok(TrainOutcome {
        network: net,
        curve,
    })
}

/// Trailing moving average with window `w` (shorter at the start).
pub fn moving_average(values: &[f64], w: usize) -> Vec<f64> {
    let w = w.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        acc += v;
        if i >= w {
            acc -= values[i - w];
        }
        out.push(acc / (i + 1).min(w) as f64);
    }
    out
}
