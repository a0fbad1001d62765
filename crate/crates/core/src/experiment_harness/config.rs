use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::designers::TrainConfig;
use crate::diversity_metrics::DEFAULT_INTERVALS;
use crate::error::{Error, Result};
use crate::latent_mdp::EpisodeConfig;
use crate::reward_model::RewardConfig;
use crate::seed::derive_seed;
use crate::segment_codec::DecoderSpec;
use crate::ssc_analysis::{default_epsilon, DEFAULT_DELTA};

/// Episode parameters shared by every grid cell; `n` and `gamma` come from the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeBlock {
    #[serde(default = "default_h")]
    pub h: usize,
    /// Defaults to `2h`.
    #[serde(default)]
    pub eval_steps: Option<usize>,
    #[serde(default = "default_d")]
    pub d: usize,
}

fn default_h() -> usize {
    25
}

fn default_d() -> usize {
    8
}

impl Default for EpisodeBlock {
    fn default() -> Self {
        EpisodeBlock {
            h: default_h(),
            eval_steps: None,
            d: default_d(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub gamma: Vec<f64>,
    pub n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationBlock {
    pub num_levels: usize,
    pub mnd_repeats: usize,
    pub pair_count: usize,
    pub k: usize,
    pub kmeans_iters: usize,
    /// Coverage radius; defaults to `0.05 * sqrt(n * d)` per cell.
    pub epsilon: Option<f64>,
    pub delta: f64,
    /// 1-indexed inclusive reward intervals for the summary table.
    pub intervals: Vec<(usize, usize)>,
}

impl Default for EvaluationBlock {
    fn default() -> Self {
        EvaluationBlock {
            num_levels: 100,
            mnd_repeats: 30,
            pair_count: 1000,
            k: 10,
            kmeans_iters: 100,
            epsilon: None,
            delta: DEFAULT_DELTA,
            intervals: DEFAULT_INTERVALS.to_vec(),
        }
    }
}

/// The experiment configuration file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub episode: EpisodeBlock,
    #[serde(default)]
    pub decoder: DecoderSpec,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub train: TrainConfig,
    pub grid: GridBlock,
    #[serde(default)]
    pub evaluation: EvaluationBlock,
    /// Directory that relative paths in the file resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = ExperimentConfig::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn eval_steps(&self) -> usize {
        self.episode.eval_steps.unwrap_or(2 * self.episode.h)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.grid.gamma.is_empty() || self.grid.n.is_empty() {
            return fail("the designer grid is empty".into());
        }
        for cell in self.cells() {
            self.episode_config(&cell)?;
            self.reward_config(&cell).validate()?;
        }
        self.train.validate()?;
        let ev = &self.evaluation;
        if ev.num_levels < 2 || ev.mnd_repeats == 0 || ev.pair_count == 0 {
            return fail("evaluation needs num_levels >= 2, mnd_repeats >= 1, pair_count >= 1".into());
        }
        if ev.k == 0 {
            return fail("k must be positive".into());
        }
        if ev.k > ev.num_levels * (self.eval_steps() + 1) {
            return fail("k exceeds the number of generated latents".into());
        }
        if !(ev.delta >= 0.0 && ev.delta < 1.0) {
            return fail("delta must lie in [0, 1)".into());
        }
        if matches!(ev.epsilon, Some(e) if e.is_nan() || e <= 0.0) {
            return fail("epsilon must be positive".into());
        }
        for &(lo, hi) in &ev.intervals {
            if lo == 0 || lo > hi || hi > self.eval_steps() {
                return fail(format!("reward interval [{lo}, {hi}] does not fit the evaluation episode"));
            }
        }
        Ok(())
    }

    /// Every (gamma, n) cell in grid order: gamma-major within each n.
    pub fn cells(&self) -> Vec<Cell> {
        self.grid
            .n
            .iter()
            .flat_map(|&n| self.grid.gamma.iter().map(move |&gamma| Cell { gamma, n }))
            .collect()
    }

    pub fn cell_seed(&self, cell: &Cell) -> u64 {
        derive_seed(self.seed, &[cell.gamma.to_bits(), cell.n as u64])
    }

    pub fn episode_config(&self, cell: &Cell) -> Result<EpisodeConfig> {
        let cfg = EpisodeConfig {
            n: cell.n,
            h: self.episode.h,
            eval_steps: self.eval_steps(),
            gamma: cell.gamma,
            d: self.episode.d,
            seed: self.cell_seed(cell),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn reward_config(&self, cell: &Cell) -> RewardConfig {
        RewardConfig {
            n: cell.n,
            ..self.reward.clone()
        }
    }

    pub fn epsilon(&self, cell: &Cell) -> f64 {
        self.evaluation
            .epsilon
            .unwrap_or_else(|| default_epsilon(cell.n, self.episode.d))
    }
}

/// One designer of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub gamma: f64,
    pub n: usize,
}

impl Cell {
    /// Directory name, e.g. `gamma=0.7_n=4`.
    pub fn name(&self) -> String {
        format!("gamma={}_n={}", self.gamma, self.n)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gamma={},n={}", self.gamma, self.n)
    }
}

impl FromStr for Cell {
    type Err = Error;

    /// Parses `gamma=<v>,n=<v>`.
    fn from_str(s: &str) -> Result<Self> {
        let mut gamma = None;
        let mut n = None;
        for part in s.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("bad cell filter {s:?}")))?;
            let bad = |_| Error::InvalidConfig(format!("bad value in cell filter {s:?}"));
            match key.trim() {
                "gamma" => gamma = Some(value.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "n" => n = Some(value.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?),
                other => return Err(Error::InvalidConfig(format!("unknown cell key {other:?}"))),
            }
        }
        match (gamma, n) {
            (Some(gamma), Some(n)) => Ok(Cell { gamma, n }),
            _ => Err(Error::InvalidConfig(format!("cell filter {s:?} needs gamma and n"))),
        }
    }
}
