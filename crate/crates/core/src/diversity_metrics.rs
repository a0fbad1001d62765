//! Quality and diversity measurements.
//!
//! * [`mnd`]: minimal neighbour distance of a sample set to a reference set,
//!   with references from [`kmeans`].
//! * [`dtw_hamming`]: level distance as dynamic time warping over segment
//!   sequences with normalized Hamming cost per segment pair.
//! * [`div_score`]: mean pairwise DTW-Hamming of a corpus relative to that of
//!   a baseline corpus.
//! * [`interval_reward_stats`]: mean per-step reward over step intervals.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::latent_mdp::Trajectory;
use crate::seed::rng_from_seed;
use crate::segment_codec::{Level, Segment};

/// Reference points for [`mnd`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    pub centroids: Vec<Vec<f64>>,
    pub provenance: String,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared(a, b).sqrt()
}

fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean over `samples` of the Euclidean distance to the nearest reference.
pub fn mnd(samples: &[Vec<f64>], references: &ReferenceSet) -> Result<f64> {
    let refs = &references.centroids;
    if samples.is_empty() || refs.is_empty() {
        return Err(Error::Precondition("MND needs non-empty samples and references".into()));
    }
    let dim = refs[0].len();
    let mut total = 0.0;
    for x in samples {
        Error::check_dim(dim, x.len())?;
        let mut best = f64::INFINITY;
        for r in refs {
            Error::check_dim(dim, r.len())?;
            best = best.min(euclidean(x, r));
        }
        total += best;
    }
    Ok(total / samples.len() as f64)
}

/// Output of [`kmeans`].
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub references: ReferenceSet,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centroid, after each assignment pass.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

impl KMeansFit {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points
        .iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centroids.iter().enumerate() {
                let d = squared(p, c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .unzip()
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// The first centre is a uniformly chosen point; each further centre is drawn
/// with probability proportional to the squared distance to the nearest chosen
/// centre (uniformly among unchosen points if all distances are zero). A
/// cluster left empty after assignment is re-seeded at the point farthest from
/// its current centroid. Iteration stops when assignments stop changing or after
/// `max_iters` passes.
pub fn kmeans(points: &[Vec<f64>], k: usize, max_iters: usize, seed: u64) -> Result<KMeansFit> {
    if k == 0 || points.len() < k {
        return Err(Error::Precondition(format!(
            "k-means needs 1 <= k <= |points| (k = {k}, |points| = {})",
            points.len()
        )));
    }
    let dim = points[0].len();
    for p in points {
        Error::check_dim(dim, p.len())?;
    }
    let mut rng = rng_from_seed(seed);
    let mut chosen = vec![rng.random_range(0..points.len())];
    let mut nearest: Vec<f64> = points.iter().map(|p| squared(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = None;
            for (i, w) in nearest.iter().enumerate() {
                if *w > 0.0 {
                    if target < *w {
                        pick = Some(i);
                        break;
                    }
                    target -= w;
                }
            }
            pick.unwrap_or_else(|| nearest.iter().rposition(|w| *w > 0.0).unwrap_or(0))
        } else {
            let free: Vec<usize> = (0..points.len()).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (w, p) in nearest.iter_mut().zip(points) {
            *w = w.min(squared(p, &points[next]));
        }
    }
    let mut centroids: Vec<Vec<f64>> = chosen.iter().map(|&i| points[i].clone()).collect();

    let (mut assignments, mut dists) = assign(points, &centroids);
    let mut trace = vec![dists.iter().sum::<f64>()];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .unwrap_or(0);
                centroids[j] = points[far].clone();
                dists[far] = 0.0;
            }
        }
        let (next, next_dists) = assign(points, &centroids);
        trace.push(next_dists.iter().sum());
        let changed = next != assignments;
        assignments = next;
        dists = next_dists;
        if !changed {
            break;
        }
    }
    Ok(KMeansFit {
        references: ReferenceSet {
            centroids,
            provenance: format!("kmeans k={k} seed={seed}"),
        },
        assignments,
        objective_trace: trace,
        iterations,
    })
}

/// Fraction of cells that differ.
pub fn segment_hamming(a: &Segment, b: &Segment) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch {
            expected: a.height() * a.width(),
            found: b.height() * b.width(),
        });
    }
    let differing = a.tiles().iter().zip(b.tiles()).filter(|(x, y)| x != y).count();
    Ok(differing as f64 / a.tiles().len() as f64)
}

/// Sum of segment Hamming distances at equal positions.
pub fn positional_hamming(a: &Level, b: &Level) -> Result<f64> {
    Error::check_dim(a.len(), b.len())?;
    a.segments()
        .iter()
        .zip(b.segments())
        .map(|(x, y)| segment_hamming(x, y))
        .sum()
}

/// DTW over segment sequences under a Sakoe-Chiba band.
///
/// Steps are `(i+1, j)`, `(i, j+1)` and `(i+1, j+1)`, only cells with
/// `|i - j| <= window` are visited, and the result is the total cost of the
/// cheapest path from the first to the last segment pair (not normalized by
/// path length).
pub fn dtw_hamming(a: &Level, b: &Level, window: usize) -> Result<f64> {
    dtw_with(a.segments(), b.segments(), window, segment_hamming)
}

/// [`dtw_hamming`] with an arbitrary per-pair cost.
pub fn dtw_with<T, F>(a: &[T], b: &[T], window: usize, cost: F) -> Result<f64>
where
    F: Fn(&T, &T) -> Result<f64>,
{
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(Error::Precondition("DTW needs non-empty sequences".into()));
    }
    if window < n.abs_diff(m) {
        return Err(Error::Precondition(format!(
            "DTW band {window} is narrower than the length difference {}",
            n.abs_diff(m)
        )));
    }
    let mut acc = vec![f64::INFINITY; n * m];
    for i in 0..n {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(m - 1);
        for j in lo..=hi {
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 {
                    best = best.min(acc[(i - 1) * m + j]);
                }
                if j > 0 {
                    best = best.min(acc[i * m + j - 1]);
                }
                if i > 0 && j > 0 {
                    best = best.min(acc[(i - 1) * m + j - 1]);
                }
                best
            };
            if prev.is_finite() {
                acc[i * m + j] = prev + cost(&a[i], &b[j])?;
            }
        }
    }
    Ok(acc[n * m - 1])
}

/// Result of [`div_score`].
#[derive(Debug, Clone, PartialEq)]
pub struct DivReport {
    /// Mean pairwise DTW-Hamming of the baseline corpus.
    pub d_m: f64,
    /// Mean pairwise DTW-Hamming of the evaluated corpus.
    pub mean_pairwise: f64,
    pub div: f64,
    pub pair_count: usize,
}

/// `pair_count` distinct unordered index pairs of `0..m`, sampled without
/// replacement (all pairs when fewer exist).
pub fn sample_pairs(m: usize, pair_count: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = m * m.saturating_sub(1) / 2;
    let decode = |mut idx: usize| {
        // Row i holds pairs (i, i+1..m).
        let mut i = 0;
        while idx >= m - 1 - i {
            idx -= m - 1 - i;
            i += 1;
        }
        (i, i + 1 + idx)
    };
    if pair_count >= total {
        return (0..total).map(decode).collect();
    }
    let mut rng = rng_from_seed(seed);
    sample(&mut rng, total, pair_count)
        .into_iter()
        .map(decode)
        .collect()
}

/// Mean DTW-Hamming over the given pairs; pairs are evaluated in parallel and
/// summed in list order.
pub fn mean_pairwise_distance(levels: &[Level], pairs: &[(usize, usize)], window: usize) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Precondition("no level pairs to compare".into()));
    }
    let dists = pairs
        .par_iter()
        .map(|&(i, j)| dtw_hamming(&levels[i], &levels[j], window))
        .collect::<Result<Vec<_>>>()?;
    Ok(dists.iter().sum::<f64>() / dists.len() as f64)
}

/// Diversity of `levels` relative to `baseline`.
///
/// Both means use independent seeded pair lists derived from `seed`.
pub fn div_score(
    levels: &[Level],
    baseline: &[Level],
    window: usize,
    pair_count: usize,
    seed: u64,
) -> Result<DivReport> {
    if levels.len() < 2 || baseline.len() < 2 || pair_count == 0 {
        return Err(Error::Precondition(
            "Div needs at least 2 levels per corpus and pair_count >= 1".into(),
        ));
    }
    let base_pairs = sample_pairs(baseline.len(), pair_count, crate::seed::derive_seed(seed, &[0]));
    let d_m = mean_pairwise_distance(baseline, &base_pairs, window)?;
    if d_m <= 0.0 {
        return Err(Error::DegenerateBaseline);
    }
    let pairs = sample_pairs(levels.len(), pair_count, crate::seed::derive_seed(seed, &[1]));
    let mean_pairwise = mean_pairwise_distance(levels, &pairs, window)?;
    Ok(DivReport {
        d_m,
        mean_pairwise,
        div: mean_pairwise / d_m,
        pair_count: pairs.len(),
    })
}

/// Mean reward over 1-indexed inclusive step interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalStat {
    pub lo: usize,
    pub hi: usize,
    pub mean: f64,
}

/// Reward intervals reported in the summary table.
pub const DEFAULT_INTERVALS: [(usize, usize); 3] = [(1, 10), (11, 25), (26, 50)];

/// Pools per-step rewards of every trajectory over each interval.
pub fn interval_reward_stats(
    trajectories: &[Trajectory],
    intervals: &[(usize, usize)],
) -> Result<Vec<IntervalStat>> {
    if trajectories.is_empty() {
        return Err(Error::Precondition("no trajectories".into()));
    }
    intervals
        .iter()
        .map(|&(lo, hi)| {
            if lo == 0 || lo > hi {
                return Err(Error::InvalidConfig(format!("bad interval [{lo}, {hi}]")));
            }
            let mut sum = 0.0;
            for t in trajectories {
                if t.rewards.len() < hi {
                    return Err(Error::Precondition(format!(
                        "interval [{lo}, {hi}] exceeds a trajectory of {} steps",
                        t.rewards.len()
                    )));
                }
                sum += t.rewards[lo - 1..hi].iter().sum::<f64>();
            }
            Ok(IntervalStat {
                lo,
                hi,
                mean: sum / (trajectories.len() * (hi - lo + 1)) as f64,
            })
        })
        .collect()
}

/// Mean and population std-dev of `values`.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// The latent generated at each step of a trajectory: step 0 is the newest
/// initial latent, step `i >= 1` is action `i`.
pub fn step_latent(trajectory: &Trajectory, step: usize) -> &[f64] {
    if step == 0 {
        trajectory
            .initial_latents
            .last()
            .expect("trajectory has an initial window")
            .as_slice()
    } else {
        trajectory.actions[step - 1].as_slice()
    }
}

/// MND of the latents generated at each step `0..=steps`, pooled over `trajectories`.
pub fn per_step_mnd(trajectories: &[Trajectory], references: &ReferenceSet) -> Result<Vec<f64>> {
    let steps = trajectories
        .iter()
        .map(|t| t.steps())
        .min()
        .ok_or_else(|| Error::Precondition("no trajectories".into()))?;
    (0..=steps)
        .map(|i| {
            let samples: Vec<Vec<f64>> = trajectories
                .iter()
                .map(|t| step_latent(t, i).to_vec())
                .collect();
            mnd(&samples, references)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment_codec::Tile;

    fn refs(points: &[&[f64]]) -> ReferenceSet {
        ReferenceSet {
            centroids: points.iter().map(|p| p.to_vec()).collect(),
            provenance: "test".into(),
        }
    }

    #[test]
    fn mnd_fixtures() {
        let r = refs(&[&[0.0, 0.0]]);
        assert_eq!(mnd(&[vec![3.0, 4.0]], &r).unwrap(), 5.0);
        assert_eq!(mnd(&[vec![0.0, 0.0], vec![6.0, 8.0]], &r).unwrap(), 5.0);
        let r2 = refs(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(mnd(&[vec![3.0, 4.0], vec![1.0, 2.0]], &r2).unwrap(), 0.0);
        assert!(mnd(&[], &r).is_err());
        assert!(mnd(&[vec![1.0]], &r).is_err());
    }

    #[test]
    fn kmeans_k_equals_points() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![5.0, -1.0]];
        let fit = kmeans(&pts, 3, 50, 1).unwrap();
        assert_eq!(fit.objective(), 0.0);
        let mut c = fit.references.centroids.clone();
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(c, pts);
        assert!(kmeans(&pts, 4, 10, 0).is_err());
    }

    #[test]
    fn kmeans_single_cluster_is_mean() {
        let pts = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 1.0]];
        let fit = kmeans(&pts, 1, 10, 9).unwrap();
        let c = &fit.references.centroids[0];
        assert!((c[0] - 3.0).abs() < 1e-12 && (c[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_two_blobs() {
        let mut rng = rng_from_seed(3);
        let mut pts = Vec::new();
        for centre in [0.0, 10.0] {
            for _ in 0..50 {
                pts.push(vec![
                    centre + rng.random_range(-0.5..0.5),
                    centre + rng.random_range(-0.5..0.5),
                ]);
            }
        }
        let mean = |range: std::ops::Range<usize>| {
            let n = range.len() as f64;
            let (sx, sy) = pts[range].iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
            [sx / n, sy / n]
        };
        let (m0, m1) = (mean(0..50), mean(50..100));
        let fit = kmeans(&pts, 2, 100, 4).unwrap();
        for m in [m0, m1] {
            let near = fit
                .references
                .centroids
                .iter()
                .any(|c| (c[0] - m[0]).abs() < 0.1 && (c[1] - m[1]).abs() < 0.1);
            assert!(near);
        }
    }

    #[test]
    fn kmeans_duplicates_do_not_stall() {
        let pts = vec![vec![1.0]; 5];
        let fit = kmeans(&pts, 3, 10, 0).unwrap();
        assert_eq!(fit.objective(), 0.0);
    }

    #[test]
    fn hamming_ratio() {
        let a = Segment::filled(14, 16, Tile::Empty);
        let mut b = a.clone();
        assert_eq!(segment_hamming(&a, &b).unwrap(), 0.0);
        b.set(3, 4, Tile::Coin);
        assert_eq!(segment_hamming(&a, &b).unwrap(), 1.0 / 224.0);
        assert_eq!(segment_hamming(&a, &Segment::filled(14, 16, Tile::Pipe)).unwrap(), 1.0);
        assert!(segment_hamming(&a, &Segment::filled(2, 2, Tile::Empty)).is_err());
    }

    fn letters(s: &str) -> Level {
        let seg = |c| {
            Segment::filled(
                2,
                2,
                match c {
                    'A' => Tile::Empty,
                    'B' => Tile::Ground,
                    _ => Tile::Block,
                },
            )
        };
        Level::new(s.chars().map(seg).collect()).unwrap()
    }

    #[test]
    fn dtw_basic_cases() {
        assert_eq!(dtw_hamming(&letters("ABCABC"), &letters("BCABCA"), 1).unwrap(), 2.0);
        assert_eq!(dtw_hamming(&letters("ABCABC"), &letters("ABCABC"), 4).unwrap(), 0.0);
        assert_eq!(dtw_hamming(&letters("A"), &letters("B"), 0).unwrap(), 1.0);
        assert_eq!(positional_hamming(&letters("ABCABC"), &letters("BCABCA")).unwrap(), 6.0);
        assert!(dtw_hamming(&letters("AB"), &letters("ABCA"), 1).is_err());
        assert_eq!(dtw_hamming(&letters("AB"), &letters("ABBB"), 2).unwrap(), 0.0);
    }

    #[test]
    fn pairs_are_distinct_and_ordered() {
        let pairs = sample_pairs(10, 20, 5);
        assert_eq!(pairs.len(), 20);
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in &pairs {
            assert!(i < j && j < 10);
            assert!(seen.insert((i, j)));
        }
        assert_eq!(sample_pairs(4, 100, 0).len(), 6);
        assert_eq!(sample_pairs(4, 100, 0), vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn div_of_identical_levels_is_zero() {
        let same = vec![letters("ABCA"); 5];
        let base = vec![letters("ABCA"), letters("CBAB"), letters("BBAC"), letters("CCCA")];
        let rep = div_score(&same, &base, 2, 10, 1).unwrap();
        assert_eq!(rep.div, 0.0);
        assert!(matches!(div_score(&base, &same, 2, 10, 1), Err(Error::DegenerateBaseline)));
    }

    fn traj_with_rewards(rewards: Vec<f64>) -> Trajectory {
        use crate::latent_mdp::LatentVector;
        Trajectory {
            initial_latents: vec![LatentVector::zeros(1)],
            actions: vec![LatentVector::zeros(1); rewards.len()],
            rewards,
            segments: vec![],
            seed: None,
        }
    }

    #[test]
    fn interval_stats() {
        let t = traj_with_rewards((1..=50).map(|i| i as f64).collect());
        let s = interval_reward_stats(std::slice::from_ref(&t), &[(1, 3)]).unwrap();
        assert_eq!(s[0].mean, 2.0);
        let ones = traj_with_rewards(vec![1.0; 50]);
        let s = interval_reward_stats(&[ones.clone(), ones], &DEFAULT_INTERVALS).unwrap();
        assert!(s.iter().all(|x| x.mean == 1.0));
        assert!(interval_reward_stats(&[t], &[(40, 51)]).is_err());
    }
}
