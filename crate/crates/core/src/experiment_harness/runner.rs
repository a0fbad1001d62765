use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig};
use super::plot::{plot_curve, plot_scatter};
use super::scatter::{emit_scatter, scatter_csv, Projector};
use crate::designers::{moving_average, train, Designer, PolicyNetwork};
use crate::diversity_metrics::{
    div_score, interval_reward_stats, kmeans, mean_std, per_step_mnd, DivReport,
};
use crate::error::{Error, Result};
use crate::latent_mdp::{extract_states, rollout_seeded, Trajectory, TrajectoryRecord};
use crate::seed::{derive_seed, rng_from_seed, stream};
use crate::segment_codec::{levels_to_text, Decoder};
use crate::ssc_analysis::{assess_continuous, categorize_states, CategorizedStates};

/// Pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Train,
    Generate,
    Analyze,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Train, Stage::Generate, Stage::Analyze, Stage::Report];
}

/// File names inside a cell directory.
pub mod files {
    pub const CHECKPOINT: &str = "designer.ckpt";
    pub const LEARNING_CURVE: &str = "learning_curve.csv";
    pub const TRAJECTORIES: &str = "trajectories.txt";
    pub const LEVELS: &str = "levels.txt";
    pub const BASELINE_TRAJECTORIES: &str = "baseline_trajectories.txt";
    pub const BASELINE_LEVELS: &str = "baseline_levels.txt";
    pub const CLOSURE_REPORT: &str = "closure_report.txt";
    pub const SET_SIZES: &str = "set_sizes.csv";
    pub const REWARD_CURVE: &str = "reward_curve.csv";
    pub const INTERVAL_REWARDS: &str = "interval_rewards.csv";
    pub const MND: &str = "mnd.csv";
    pub const MND_REPEATS: &str = "mnd_repeats.csv";
    pub const DIV: &str = "div.csv";
    pub const SCATTER: &str = "scatter.csv";
    pub const REWARD_PLOT: &str = "reward.svg";
    pub const MND_PLOT: &str = "mnd.svg";
    pub const SCATTER_PLOT: &str = "scatter.svg";
    pub const SUMMARY: &str = "summary.csv";
    pub const STATUS: &str = "status.json";
    pub const CONFIG: &str = "config.toml";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub cell: String,
    pub stage: Stage,
    pub ok: bool,
    pub error: Option<String>,
}

/// Machine-readable run status, `status.json` in the run directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub ok: bool,
    pub entries: Vec<CellStatus>,
}

impl RunStatus {
    fn record(&mut self, cell: &str, stage: Stage, result: &Result<()>) {
        self.entries.retain(|e| !(e.cell == cell && e.stage == stage));
        self.entries.push(CellStatus {
            cell: cell.to_string(),
            stage,
            ok: result.is_ok(),
            error: result.as_ref().err().map(|e| e.to_string()),
        });
        self.ok = self.entries.iter().all(|e| e.ok);
    }

    fn failed(&self, cell: &str) -> bool {
        self.entries.iter().any(|e| e.cell == cell && !e.ok)
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(files::STATUS);
        if !path.exists() {
            return Ok(RunStatus {
                ok: true,
                entries: Vec::new(),
            });
        }
        Ok(serde_json::from_str(&read(&path)?)?)
    }

    fn save(&self, run_dir: &Path) -> Result<()> {
        write(&run_dir.join(files::STATUS), &serde_json::to_string_pretty(self)?)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Creates the next free `run-NNN` directory under `root`.
pub fn allocate_run_dir(root: &Path) -> Result<PathBuf> {
    fs::create_dir_all(root)?;
    for i in 1.. {
        let dir = root.join(format!("run-{i:03}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

/// The highest-numbered `run-NNN` directory under `root`.
pub fn latest_run_dir(root: &Path) -> Result<PathBuf> {
    let mut best: Option<(u32, PathBuf)> = None;
    if root.is_dir() {
        for entry in fs::read_dir(root)? {
            let path = entry?.path();
            let num = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_prefix("run-"))
                .and_then(|n| n.parse::<u32>().ok());
            if let Some(num) = num {
                if best.as_ref().is_none_or(|(b, _)| num > *b) {
                    best = Some((num, path));
                }
            }
        }
    }
    best.map(|(_, p)| p).ok_or_else(|| {
        Error::Precondition(format!("no run-NNN directory under {}", root.display()))
    })
}

pub fn cell_dir(run_dir: &Path, cell: &Cell) -> PathBuf {
    run_dir.join("cells").join(cell.name())
}

/// Everything a cell stage needs.
pub struct CellContext<'a> {
    pub config: &'a ExperimentConfig,
    pub cell: Cell,
    pub dir: PathBuf,
    pub decoder: Decoder,
}

impl<'a> CellContext<'a> {
    pub fn new(config: &'a ExperimentConfig, cell: Cell, run_dir: &Path) -> Result<Self> {
        let decoder = config.decoder.build(config.episode.d, &config.base_dir)?;
        let dir = cell_dir(run_dir, &cell);
        fs::create_dir_all(&dir)?;
        Ok(CellContext {
            config,
            cell,
            dir,
            decoder,
        })
    }

    fn seed(&self) -> u64 {
        self.config.cell_seed(&self.cell)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn load_designer(&self) -> Result<Designer> {
        Designer::from_checkpoint(&read(&self.path(files::CHECKPOINT))?)
    }

    pub fn load_trajectories(&self, name: &str) -> Result<Vec<Trajectory>> {
        TrajectoryRecord::parse_all(&read(&self.path(name))?)?
            .into_iter()
            .map(|r| Trajectory::from_record(r, &self.decoder))
            .collect()
    }

    /// `count` evaluation-length rollouts with seeds `derive(cell_seed, tags ++ [i])`.
    pub fn generate(&self, designer: &Designer, tags: &[u64], count: usize) -> Result<Vec<Trajectory>> {
        let episode = self.config.episode_config(&self.cell)?;
        let reward = self.config.reward_config(&self.cell);
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut t = tags.to_vec();
                t.push(i as u64);
                rollout_seeded(
                    designer,
                    &self.decoder,
                    &reward,
                    &episode,
                    episode.eval_steps,
                    derive_seed(self.seed(), &t),
                )
            })
            .collect()
    }
}

fn write_trajectories(path: &Path, trajs: &[Trajectory]) -> Result<()> {
    let text: String = trajs.iter().map(|t| t.record().to_text()).collect();
    write(path, &text)
}

/// Trains the cell's designer; writes the checkpoint and learning curve.
pub fn train_cell(ctx: &CellContext<'_>) -> Result<()> {
    let cfg = ctx.config;
    let episode = cfg.episode_config(&ctx.cell)?;
    let reward = cfg.reward_config(&ctx.cell);
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = derive_seed(ctx.seed(), &[stream::TRAIN]);
    let net = PolicyNetwork::init_random(
        episode.n * episode.d,
        train_cfg.hidden,
        episode.d,
        train_cfg.sigma,
        &mut rng_from_seed(derive_seed(ctx.seed(), &[stream::INIT])),
    );
    let outcome = train(net, &ctx.decoder, &reward, &episode, &train_cfg)?;
    write(&ctx.path(files::CHECKPOINT), &outcome.eval_designer().to_checkpoint())?;
    let smooth = moving_average(&outcome.curve, 100);
    let mut csv = String::from("episode,mean_reward,moving_average_100\n");
    for (i, (r, m)) in outcome.curve.iter().zip(&smooth).enumerate() {
        let _ = writeln!(csv, "{i},{r},{m}");
    }
    write(&ctx.path(files::LEARNING_CURVE), &csv)
}

/// Generates the evaluation corpus and the random baseline corpus.
pub fn generate_cell(ctx: &CellContext<'_>) -> Result<()> {
    let designer = ctx.load_designer()?;
    let ev = &ctx.config.evaluation;
    let trajs = ctx.generate(&designer, &[stream::EVAL], ev.num_levels)?;
    write_trajectories(&ctx.path(files::TRAJECTORIES), &trajs)?;
    let levels: Vec<_> = trajs.iter().map(Trajectory::level).collect();
    write(&ctx.path(files::LEVELS), &levels_to_text(&levels))?;

    let baseline = Designer::Random {
        d: ctx.config.episode.d,
    };
    let base = ctx.generate(&baseline, &[stream::BASELINE], ev.num_levels)?;
    write_trajectories(&ctx.path(files::BASELINE_TRAJECTORIES), &base)?;
    let base_levels: Vec<_> = base.iter().map(Trajectory::level).collect();
    write(&ctx.path(files::BASELINE_LEVELS), &levels_to_text(&base_levels))
}

fn curve_csv(rows: impl IntoIterator<Item = (usize, f64, f64)>) -> String {
    let mut csv = String::from("step,mean,std\n");
    for (step, mean, std) in rows {
        let _ = writeln!(csv, "{step},{mean},{std}");
    }
    csv
}

/// Closure report, reward and MND curves, interval rewards, Div and scatter data.
pub fn analyze_cell(ctx: &CellContext<'_>) -> Result<()> {
    let cfg = ctx.config;
    let ev = &cfg.evaluation;
    let (n, h) = (ctx.cell.n, cfg.episode.h);
    let trajs = ctx.load_trajectories(files::TRAJECTORIES)?;
    let baseline = ctx.load_trajectories(files::BASELINE_TRAJECTORIES)?;

    // closure
    let mut cats = CategorizedStates::default();
    for t in &trajs {
        cats.extend(categorize_states(&extract_states(t), n, h));
    }
    let report = assess_continuous(&cats, n, h, cfg.epsilon(&ctx.cell), ev.delta)?;
    write(&ctx.path(files::CLOSURE_REPORT), &report.to_text())?;
    write(&ctx.path(files::SET_SIZES), &report.set_sizes_csv())?;

    // rewards
    let steps = cfg.eval_steps();
    let reward_rows = (1..=steps).map(|s| {
        let vals: Vec<f64> = trajs.iter().map(|t| t.rewards[s - 1]).collect();
        let (m, sd) = mean_std(&vals);
        (s, m, sd)
    });
    write(&ctx.path(files::REWARD_CURVE), &curve_csv(reward_rows))?;
    let intervals = interval_reward_stats(&trajs, &ev.intervals)?;
    let mut csv = String::from("lo,hi,mean\n");
    for s in &intervals {
        let _ = writeln!(csv, "{},{},{}", s.lo, s.hi, s.mean);
    }
    write(&ctx.path(files::INTERVAL_REWARDS), &csv)?;

    // MND against k-means references over every latent of the evaluation corpus
    let latents: Vec<Vec<f64>> = trajs
        .iter()
        .flat_map(|t| t.latents().map(|z| z.as_slice().to_vec()))
        .collect();
    let refs = kmeans(
        &latents,
        ev.k,
        ev.kmeans_iters,
        derive_seed(ctx.seed(), &[stream::KMEANS]),
    )?
    .references;
    let designer = ctx.load_designer()?;
    let mut repeats = Vec::with_capacity(ev.mnd_repeats);
    for r in 0..ev.mnd_repeats {
        let batch = ctx.generate(&designer, &[stream::MND, r as u64], ev.num_levels)?;
        repeats.push(per_step_mnd(&batch, &refs)?);
    }
    let mut raw = String::from("repeat,step,mnd\n");
    for (r, row) in repeats.iter().enumerate() {
        for (s, v) in row.iter().enumerate() {
            let _ = writeln!(raw, "{r},{s},{v}");
        }
    }
    write(&ctx.path(files::MND_REPEATS), &raw)?;
    let mnd_rows = (0..=steps).map(|s| {
        let vals: Vec<f64> = repeats.iter().map(|row| row[s]).collect();
        let (m, sd) = mean_std(&vals);
        (s, m, sd)
    });
    write(&ctx.path(files::MND), &curve_csv(mnd_rows))?;

    // diversity
    let levels: Vec<_> = trajs.iter().map(Trajectory::level).collect();
    let base_levels: Vec<_> = baseline.iter().map(Trajectory::level).collect();
    let div = div_score(
        &levels,
        &base_levels,
        n,
        ev.pair_count,
        derive_seed(ctx.seed(), &[stream::DIV]),
    )?;
    write(&ctx.path(files::DIV), &div_csv(&div))?;

    // scatter on axes shared by every cell with the same state dimension
    let projector = Projector::seeded(
        n * cfg.episode.d,
        derive_seed(cfg.seed, &[stream::PROJECTOR, (n * cfg.episode.d) as u64]),
    );
    write(&ctx.path(files::SCATTER), &scatter_csv(&emit_scatter(&cats, &projector)))
}

pub fn div_csv(div: &DivReport) -> String {
    format!(
        "d_m,mean_pairwise,div,pair_count\n{},{},{},{}\n",
        div.d_m, div.mean_pairwise, div.div, div.pair_count
    )
}

/// Plots for one cell.
pub fn report_cell(ctx: &CellContext<'_>) -> Result<()> {
    let h = Some(ctx.config.episode.h as f64);
    let name = ctx.cell.to_string();
    plot_curve(
        &ctx.path(files::REWARD_CURVE),
        &ctx.path(files::REWARD_PLOT),
        &format!("reward ({name})"),
        "reward",
        h,
    )?;
    plot_curve(
        &ctx.path(files::MND),
        &ctx.path(files::MND_PLOT),
        &format!("MND ({name})"),
        "MND",
        h,
    )?;
    plot_scatter(
        &ctx.path(files::SCATTER),
        &ctx.path(files::SCATTER_PLOT),
        &format!("states ({name})"),
    )
}

/// Summary table from the per-cell CSVs: one row per reward interval plus
/// `Div`, one column per cell.
pub fn summary_table(run_dir: &Path, cells: &[Cell]) -> Result<String> {
    let mut columns = Vec::with_capacity(cells.len());
    for cell in cells {
        let dir = cell_dir(run_dir, cell);
        let mut rows: Vec<(String, String)> = Vec::new();
        let mut reader = csv::Reader::from_path(dir.join(files::INTERVAL_REWARDS))?;
        for rec in reader.records() {
            let rec = rec?;
            rows.push((format!("R_{}_{}", &rec[0], &rec[1]), rec[2].to_string()));
        }
        let mut reader = csv::Reader::from_path(dir.join(files::DIV))?;
        let rec = reader
            .records()
            .next()
            .ok_or_else(|| Error::Precondition("empty div.csv".into()))??;
        rows.push(("Div".to_string(), rec[2].to_string()));
        columns.push(rows);
    }
    let mut out = String::from("metric");
    for cell in cells {
        let _ = write!(out, ",{}", cell.name());
    }
    out.push('\n');
    if let Some(first) = columns.first() {
        for (i, (label, _)) in first.iter().enumerate() {
            out.push_str(label);
            for col in &columns {
                let _ = write!(out, ",{}", col.get(i).map_or("", |r| r.1.as_str()));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub status: RunStatus,
}

/// Runs `stages` for every selected cell in `run_dir`.
///
/// A failing stage marks its cell failed in `status.json` and skips the cell's
/// later stages; other cells continue.
pub fn run_stages(
    config: &ExperimentConfig,
    run_dir: &Path,
    stages: &[Stage],
    filter: Option<&Cell>,
) -> Result<RunOutcome> {
    let cells: Vec<Cell> = config
        .cells()
        .into_iter()
        .filter(|c| filter.is_none_or(|f| f == c))
        .collect();
    if cells.is_empty() {
        return Err(Error::InvalidConfig("the cell filter matches no grid cell".into()));
    }
    let config_path = run_dir.join(files::CONFIG);
    if !config_path.exists() {
        write(&config_path, &config.to_toml())?;
    }
    let mut status = RunStatus::load(run_dir)?;
    for &stage in stages {
        for cell in &cells {
            let name = cell.name();
            if status.failed(&name) {
                continue;
            }
            log::info!("{stage:?} {cell}");
            let result = CellContext::new(config, *cell, run_dir).and_then(|ctx| match stage {
                Stage::Train => train_cell(&ctx),
                Stage::Generate => generate_cell(&ctx),
                Stage::Analyze => analyze_cell(&ctx),
                Stage::Report => report_cell(&ctx),
            });
            if let Err(e) = &result {
                log::error!("{stage:?} failed for {cell}: {e}");
            }
            status.record(&name, stage, &result);
            status.save(run_dir)?;
        }
        if stage == Stage::Report {
            let done: Vec<Cell> = config
                .cells()
                .into_iter()
                .filter(|c| cell_dir(run_dir, c).join(files::DIV).exists())
                .collect();
            if !done.is_empty() {
                write(&run_dir.join(files::SUMMARY), &summary_table(run_dir, &done)?)?;
            }
        }
    }
    status.save(run_dir)?;
    Ok(RunOutcome {
        run_dir: run_dir.to_path_buf(),
        status,
    })
}

/// Every stage in a fresh versioned run directory under `out_root`.
pub fn run_all(config: &ExperimentConfig, out_root: &Path, filter: Option<&Cell>) -> Result<RunOutcome> {
    let run_dir = allocate_run_dir(out_root)?;
    run_stages(config, &run_dir, &Stage::ALL, filter)
}
