//! The online-generation MDP.
//!
//! A state is the window of the `n` most recent latent vectors, an action is
//! the next latent vector, and the transition drops the oldest latent and
//! appends the action. Decoding and scoring happen in [`rollout`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::designers::Designer;
use crate::error::{Error, Result};
use crate::reward_model::RewardModel;
use crate::seed::{rng_from_seed, RandomSource};
use crate::segment_codec::{Decoder, Level, Segment};

/// A point of the latent cube `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    /// Wraps `components`, rejecting empty, non-finite or out-of-range input.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidConfig("latent vectors need d >= 1".into()));
        }
        if let Some(x) = components
            .iter()
            .find(|x| !x.is_finite() || !(-1.0..=1.0).contains(*x))
        {
            return Err(Error::InvalidConfig(format!(
                "latent component {x} outside [-1, 1]"
            )));
        }
        Ok(LatentVector(components))
    }

    /// Clamps every component into `[-1, 1]`; NaN maps to 0.
    pub fn clamped(mut components: Vec<f64>) -> Self {
        for x in &mut components {
            *x = if x.is_nan() { 0.0 } else { x.clamp(-1.0, 1.0) };
        }
        LatentVector(components)
    }

    pub fn zeros(d: usize) -> Self {
        LatentVector(vec![0.0; d])
    }

    /// Draws each component i.i.d. uniform on `[-1, 1]`.
    pub fn sample_uniform<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        LatentVector((0..d).map(|_| rng.random_range(-1.0..=1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn squared_distance(&self, other: &LatentVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// The MDP state: the `n` most recent latents, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignerState {
    window: Vec<LatentVector>,
}

impl DesignerState {
    pub fn new(window: Vec<LatentVector>) -> Result<Self> {
        let first = window
            .first()
            .ok_or_else(|| Error::InvalidConfig("state window must be non-empty".into()))?;
        let d = first.dim();
        for z in &window {
            Error::check_dim(d, z.dim())?;
        }
        Ok(DesignerState { window })
    }

    pub fn n(&self) -> usize {
        self.window.len()
    }

    pub fn d(&self) -> usize {
        self.window[0].dim()
    }

    pub fn window(&self) -> &[LatentVector] {
        &self.window
    }

    pub fn newest(&self) -> &LatentVector {
        &self.window[self.window.len() - 1]
    }

    /// Concatenation of the window, length `n * d`.
    pub fn flatten(&self) -> Vec<f64> {
        self.window
            .iter()
            .flat_map(|z| z.as_slice().iter().copied())
            .collect()
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn from_flat(flat: &[f64], n: usize) -> Result<Self> {
        if n == 0 || !flat.len().is_multiple_of(n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: flat.len(),
            });
        }
        let d = flat.len() / n;
        DesignerState::new(
            flat.chunks_exact(d)
                .map(|c| LatentVector::clamped(c.to_vec()))
                .collect(),
        )
    }

    /// Drops the oldest latent and appends `action`.
    pub fn transition(&self, action: &LatentVector) -> Result<Self> {
        Error::check_dim(self.d(), action.dim())?;
        let mut window = Vec::with_capacity(self.window.len());
        window.extend_from_slice(&self.window[1..]);
        window.push(action.clone());
        Ok(DesignerState { window })
    }

    pub fn distance(&self, other: &DesignerState) -> f64 {
        self.window
            .iter()
            .zip(&other.window)
            .map(|(a, b)| a.squared_distance(b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Free-function form of [`DesignerState::transition`].
pub fn transition(state: &DesignerState, action: &LatentVector) -> Result<DesignerState> {
    state.transition(action)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Memory window.
    pub n: usize,
    /// Training horizon.
    pub h: usize,
    /// Evaluation episode length.
    pub eval_steps: usize,
    pub gamma: f64,
    /// Latent dimension.
    pub d: usize,
    pub seed: u64,
}

impl EpisodeConfig {
    /// Config with `eval_steps = 2h`.
    pub fn new(n: usize, h: usize, gamma: f64, d: usize, seed: u64) -> Result<Self> {
        let cfg = EpisodeConfig {
            n,
            h,
            eval_steps: 2 * h,
            gamma,
            d,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n == 0 || self.d == 0 {
            return fail("n and d must be positive");
        }
        if self.n >= self.h {
            return fail("n must be smaller than h");
        }
        if self.eval_steps < self.h {
            return fail("eval_steps must be at least h");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail("gamma must lie in (0, 1]");
        }
        Ok(())
    }
}

/// `n` latents drawn i.i.d. uniform on `[-1, 1]^d`.
pub fn initial_state(config: &EpisodeConfig, rng: &mut RandomSource) -> DesignerState {
    DesignerState {
        window: (0..config.n)
            .map(|_| LatentVector::sample_uniform(config.d, rng))
            .collect(),
    }
}

/// One finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial_latents: Vec<LatentVector>,
    pub actions: Vec<LatentVector>,
    pub rewards: Vec<f64>,
    /// Decoded latents: the `n` initial segments followed by one per action.
    pub segments: Vec<Segment>,
    /// Seed of the rollout's random source, when known.
    pub seed: Option<u64>,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.initial_latents.len()
    }

    pub fn steps(&self) -> usize {
        self.actions.len()
    }

    /// Initial latents followed by actions.
    pub fn latents(&self) -> impl Iterator<Item = &LatentVector> + '_ {
        self.initial_latents.iter().chain(&self.actions)
    }

    pub fn level(&self) -> Level {
        Level::new(self.segments.clone()).expect("trajectory segments share one shape")
    }

    pub fn record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            n: self.n(),
            d: self.initial_latents.first().map_or(0, |z| z.dim()),
            seed: self.seed,
            latents: self.latents().cloned().collect(),
            rewards: self.rewards.clone(),
        }
    }

    /// Rebuilds a trajectory from its record by re-decoding every latent.
    pub fn from_record(record: TrajectoryRecord, decoder: &Decoder) -> Result<Self> {
        let segments = record
            .latents
            .iter()
            .map(|z| decoder.decode(z))
            .collect::<Result<Vec<_>>>()?;
        let mut latents = record.latents;
        let actions = latents.split_off(record.n);
        Ok(Trajectory {
            initial_latents: latents,
            actions,
            rewards: record.rewards,
            segments,
            seed: record.seed,
        })
    }
}

/// Runs `steps` generation steps from `start` with an arbitrary action rule.
///
/// `act` receives the current state and the 0-based step index and returns the
/// action to decode; the action is clamped before use.
pub(crate) fn run_episode<W, F>(
    start: DesignerState,
    decoder: &Decoder,
    reward: &W,
    steps: usize,
    mut act: F,
) -> Result<Trajectory>
where
    W: RewardModel + ?Sized,
    F: FnMut(&DesignerState, usize) -> Result<LatentVector>,
{
    if steps == 0 {
        return Err(Error::Precondition("rollout needs at least one step".into()));
    }
    Error::check_dim(decoder.d(), start.d())?;
    let n = start.n();
    let mut segments = Vec::with_capacity(n + steps);
    for z in start.window() {
        segments.push(decoder.decode(z)?);
    }
    let mut actions = Vec::with_capacity(steps);
    let mut rewards = Vec::with_capacity(steps);
    let mut state = start.clone();
    for step in 0..steps {
        let action = act(&state, step)?;
        Error::check_dim(start.d(), action.dim())?;
        let action = LatentVector::clamped(action.into_inner());
        let segment = decoder.decode(&action)?;
        let history = &segments[segments.len() - n..];
        rewards.push(reward.score(&action, &segment, history)?);
        segments.push(segment);
        state = state.transition(&action)?;
        actions.push(action);
    }
    Ok(Trajectory {
        initial_latents: start.window,
        actions,
        rewards,
        segments,
        seed: None,
    })
}

/// Generates one level: a random initial window followed by `steps` designer actions.
pub fn rollout<W: RewardModel + ?Sized>(
    designer: &Designer,
    decoder: &Decoder,
    reward: &W,
    config: &EpisodeConfig,
    steps: usize,
    rng: &mut RandomSource,
) -> Result<Trajectory> {
    if let Some(d) = designer.d() {
        Error::check_dim(config.d, d)?;
    }
    Error::check_dim(config.d, decoder.d())?;
    let start = initial_state(config, rng);
    run_episode(start, decoder, reward, steps, |state, step| {
        designer.act(state, step, rng)
    })
}

/// [`rollout`] with a fresh random source for `seed`, recorded in the trajectory.
pub fn rollout_seeded<W: RewardModel + ?Sized>(
    designer: &Designer,
    decoder: &Decoder,
    reward: &W,
    config: &EpisodeConfig,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = rng_from_seed(seed);
    let mut traj = rollout(designer, decoder, reward, config, steps, &mut rng)?;
    traj.seed = Some(seed);
    Ok(traj)
}

/// Slides a window of width `n` over the latent sequence.
///
/// The window at index 0 is the all-initial window; the state at index `k`
/// is the observation the designer acted on at step `k`.
pub fn extract_states(trajectory: &Trajectory) -> Vec<(usize, DesignerState)> {
    let n = trajectory.n();
    let latents: Vec<LatentVector> = trajectory.latents().cloned().collect();
    if n == 0 || latents.len() < n {
        return Vec::new();
    }
    latents
        .windows(n)
        .enumerate()
        .map(|(k, w)| {
            (
                k,
                DesignerState {
                    window: w.to_vec(),
                },
            )
        })
        .collect()
}

/// The serialized part of a [`Trajectory`]; segments are recovered by decoding.
///
/// Text form:
///
/// ```text
/// trajectory
/// n 4
/// d 8
/// steps 50
/// seed 1234          (or `seed -`)
/// latents
/// <d space-separated components>     (n + steps lines)
/// rewards
/// <reward>                           (steps lines)
/// end
/// ```
///
/// Numbers are written in Rust's shortest round-trip form, so parsing recovers
/// every value exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub d: usize,
    pub seed: Option<u64>,
    pub latents: Vec<LatentVector>,
    pub rewards: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn steps(&self) -> usize {
        self.latents.len().saturating_sub(self.n)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("trajectory\n");
        out.push_str(&format!("n {}\nd {}\nsteps {}\n", self.n, self.d, self.steps()));
        match self.seed {
            Some(s) => out.push_str(&format!("seed {s}\n")),
            None => out.push_str("seed -\n"),
        }
        out.push_str("latents\n");
        for z in &self.latents {
            let line: Vec<String> = z.as_slice().iter().map(|x| x.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out.push_str("rewards\n");
        for r in &self.rewards {
            out.push_str(&format!("{r}\n"));
        }
        out.push_str("end\n");
        out
    }

    /// Parses every record in `text`.
    pub fn parse_all(text: &str) -> Result<Vec<TrajectoryRecord>> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut records = Vec::new();
        while let Some((line, head)) = lines.next() {
            if head != "trajectory" {
                return Err(Error::parse(line, "expected `trajectory`"));
            }
            let mut field = |name: &str| -> Result<(usize, String)> {
                let (line, l) = lines
                    .next()
                    .ok_or_else(|| Error::parse(line, format!("missing `{name}`")))?;
                let mut parts = l.splitn(2, ' ');
                if parts.next() != Some(name) {
                    return Err(Error::parse(line, format!("expected `{name}`")));
                }
                Ok((line, parts.next().unwrap_or("").trim().to_string()))
            };
            let parse_usize = |(line, v): (usize, String)| {
                v.parse::<usize>().map_err(|e| Error::parse(line, e.to_string()))
            };
            let n = parse_usize(field("n")?)?;
            let d = parse_usize(field("d")?)?;
            let steps = parse_usize(field("steps")?)?;
            let (seed_line, seed) = field("seed")?;
            let seed = match seed.as_str() {
                "-" => None,
                s => Some(s.parse::<u64>().map_err(|e| Error::parse(seed_line, e.to_string()))?),
            };
            let (l, v) = field("latents")?;
            if !v.is_empty() {
                return Err(Error::parse(l, "unexpected text after `latents`"));
            }
            let mut latents = Vec::with_capacity(n + steps);
            for _ in 0..n + steps {
                let (line, l) = lines
                    .next()
                    .ok_or_else(|| Error::parse(l, "truncated latents"))?;
                let comps = l
                    .split_whitespace()
                    .map(|x| x.parse::<f64>().map_err(|e| Error::parse(line, e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                if comps.len() != d {
                    return Err(Error::parse(line, format!("expected {d} components")));
                }
                latents.push(LatentVector::new(comps).map_err(|e| Error::parse(line, e.to_string()))?);
            }
            match lines.next() {
                Some((_, "rewards")) => {}
                Some((line, _)) => return Err(Error::parse(line, "expected `rewards`")),
                None => return Err(Error::parse(l, "missing `rewards`")),
            }
            let mut rewards = Vec::with_capacity(steps);
            for _ in 0..steps {
                let (line, l) = lines
                    .next()
                    .ok_or_else(|| Error::parse(l, "truncated rewards"))?;
                rewards.push(l.parse::<f64>().map_err(|e| Error::parse(line, e.to_string()))?);
            }
            match lines.next() {
                Some((_, "end")) => {}
                Some((line, _)) => return Err(Error::parse(line, "expected `end`")),
                None => return Err(Error::parse(l, "missing `end`")),
            }
            records.push(TrajectoryRecord {
                n,
                d,
                seed,
                latents,
                rewards,
            });
        }
        Ok(records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward_model::RewardConfig;
    use crate::segment_codec::LinearDecoder;

    fn lv(v: &[f64]) -> LatentVector {
        LatentVector::new(v.to_vec()).unwrap()
    }

    fn state(vals: &[f64]) -> DesignerState {
        DesignerState::new(vals.iter().map(|&x| lv(&[x])).collect()).unwrap()
    }

    #[test]
    fn latent_vector_validation() {
        assert!(LatentVector::new(vec![1.5]).is_err());
        assert!(LatentVector::new(vec![f64::NAN]).is_err());
        assert!(LatentVector::new(vec![]).is_err());
        assert_eq!(LatentVector::clamped(vec![2.0, -3.0, f64::NAN]).as_slice(), &[1.0, -1.0, 0.0]);
    }

    #[test]
    fn transition_shifts_window() {
        let s = state(&[0.1, 0.2, 0.3, 0.4]);
        let next = s.transition(&lv(&[0.5])).unwrap();
        assert_eq!(next, state(&[0.2, 0.3, 0.4, 0.5]));
        // input untouched
        assert_eq!(s, state(&[0.1, 0.2, 0.3, 0.4]));
        assert_eq!(state(&[0.1]).transition(&lv(&[0.2])).unwrap(), state(&[0.2]));
        assert!(s.transition(&lv(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn n_transitions_replace_window() {
        let mut s = state(&[-0.9, 0.9, 0.0]);
        for a in [0.1, 0.2, 0.3] {
            s = s.transition(&lv(&[a])).unwrap();
        }
        assert_eq!(s, state(&[0.1, 0.2, 0.3]));
    }

    #[test]
    fn initial_state_is_in_range_and_deterministic() {
        let cfg = EpisodeConfig::new(4, 25, 0.9, 8, 0).unwrap();
        let a = initial_state(&cfg, &mut rng_from_seed(3));
        let b = initial_state(&cfg, &mut rng_from_seed(3));
        assert_eq!(a, b);
        assert_eq!(a.n(), 4);
        assert!(a.flatten().iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn initial_state_golden() {
        // ChaCha8Rng::seed_from_u64(2024), four `random_range(-1.0..=1.0)` draws.
        let cfg = EpisodeConfig::new(2, 25, 0.9, 2, 0).unwrap();
        let s = initial_state(&cfg, &mut rng_from_seed(2024));
        let golden = GOLDEN_INITIAL_STATE;
        assert_eq!(s.flatten(), golden.to_vec());
    }

    const GOLDEN_INITIAL_STATE: [f64; 4] = [
        -0.665961690362634,
        0.9649481526419903,
        0.3714332588342577,
        0.815723472461471,
    ];

    #[test]
    fn config_validation() {
        assert!(EpisodeConfig::new(25, 25, 0.9, 8, 0).is_err());
        assert!(EpisodeConfig::new(4, 25, 0.0, 8, 0).is_err());
        assert!(EpisodeConfig::new(4, 25, 1.0, 8, 0).is_ok());
        let mut c = EpisodeConfig::new(4, 25, 0.9, 8, 0).unwrap();
        c.eval_steps = 10;
        assert!(c.validate().is_err());
    }

    #[test]
    fn extract_states_windows() {
        let traj = Trajectory {
            initial_latents: vec![lv(&[0.1]), lv(&[0.2])],
            actions: vec![lv(&[0.3]), lv(&[0.4]), lv(&[0.5])],
            rewards: vec![0.0; 3],
            segments: vec![],
            seed: None,
        };
        let states = extract_states(&traj);
        let expect = [[0.1, 0.2], [0.2, 0.3], [0.3, 0.4], [0.4, 0.5]];
        assert_eq!(states.len(), 4);
        for (k, (idx, s)) in states.iter().enumerate() {
            assert_eq!(*idx, k);
            assert_eq!(*s, state(&expect[k]));
        }
    }

    #[test]
    fn rollout_counts_and_determinism() {
        let cfg = EpisodeConfig::new(4, 25, 0.9, 8, 0).unwrap();
        let dec = Decoder::Linear(LinearDecoder::new(8, 14, 16, 0).unwrap());
        let reward = RewardConfig::with_window(4);
        let designer = Designer::Random { d: 8 };
        let a = rollout_seeded(&designer, &dec, &reward, &cfg, 50, 9).unwrap();
        let b = rollout_seeded(&designer, &dec, &reward, &cfg, 50, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.segments.len(), 54);
        assert_eq!(a.rewards.len(), 50);
        assert_eq!(extract_states(&a).len(), 51);
        assert!(rollout_seeded(&designer, &dec, &reward, &cfg, 0, 9).is_err());
        let wrong = Designer::Random { d: 3 };
        assert!(rollout_seeded(&wrong, &dec, &reward, &cfg, 5, 9).is_err());
    }

    #[test]
    fn record_round_trip() {
        let cfg = EpisodeConfig::new(2, 5, 0.9, 3, 0).unwrap();
        let dec = Decoder::Linear(LinearDecoder::new(3, 4, 4, 1).unwrap());
        let reward = RewardConfig::with_window(2);
        let traj = rollout_seeded(&Designer::Random { d: 3 }, &dec, &reward, &cfg, 6, 11).unwrap();
        let text = format!("{}{}", traj.record().to_text(), traj.record().to_text());
        let parsed = TrajectoryRecord::parse_all(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        let rebuilt = Trajectory::from_record(parsed[0].clone(), &dec).unwrap();
        assert_eq!(rebuilt, traj);
    }

    #[test]
    fn record_parse_errors() {
        assert!(TrajectoryRecord::parse_all("nope\n").is_err());
        let bad = "trajectory\nn 1\nd 1\nsteps 1\nseed -\nlatents\n0.5\n2.0\nrewards\n1\nend\n";
        assert!(matches!(
            TrajectoryRecord::parse_all(bad),
            Err(Error::Parse { line: 8, .. })
        ));
    }
}
