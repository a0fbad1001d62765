//! Novelty-plus-playability reward.
//!
//! The reward of a newly generated segment is
//! `w_novelty * novelty + w_play * (+1 if playable else -1)`, where novelty is
//! the mean capped normalized Hamming distance to the `n` latest segments and
//! playability is decided by a rule-based walker over the previous segment
//! joined with the new one.

use serde::{Deserialize, Serialize};

use crate::diversity_metrics::segment_hamming;
use crate::error::{Error, Result};
use crate::latent_mdp::LatentVector;
use crate::segment_codec::Segment;

/// Anything that can score a freshly generated segment.
pub trait RewardModel: Sync {
    /// Scores `new` (decoded from `action`) against `history`, the most recent
    /// segments, oldest first.
    fn score(&self, action: &LatentVector, new: &Segment, history: &[Segment]) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Memory window; only the `n` latest history segments are scored against.
    pub n: usize,
    pub w_novelty: f64,
    pub w_play: f64,
    /// Hamming distance at which novelty saturates.
    pub novelty_cap: f64,
    /// Highest up-step the walker can climb, in tiles.
    pub jump_height: usize,
    /// Widest run of columns the walker can jump over.
    pub max_gap: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            n: 4,
            w_novelty: 1.0,
            w_play: 1.0,
            novelty_cap: 0.6,
            jump_height: 4,
            max_gap: 4,
        }
    }
}

impl RewardConfig {
    pub fn with_window(n: usize) -> Self {
        RewardConfig {
            n,
            ..RewardConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n == 0 {
            return fail("reward window n must be positive");
        }
        if !(self.w_novelty >= 0.0 && self.w_play >= 0.0) {
            return fail("reward weights must be non-negative");
        }
        if self.w_novelty == 0.0 && self.w_play == 0.0 {
            return fail("reward weights must not both be zero");
        }
        if !(self.novelty_cap > 0.0 && self.novelty_cap <= 1.0) {
            return fail("novelty_cap must lie in (0, 1]");
        }
        if self.jump_height == 0 || self.max_gap == 0 {
            return fail("jump_height and max_gap must be positive");
        }
        Ok(())
    }
}

/// Mean over `history` of `min(hamming(new, h), cap) / cap`.
pub fn novelty(new: &Segment, history: &[Segment], cap: f64) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::Precondition("novelty needs a non-empty history".into()));
    }
    let mut total = 0.0;
    for h in history {
        total += segment_hamming(new, h)?.min(cap) / cap;
    }
    Ok(total / history.len() as f64)
}

fn standable(grid: &[&Segment], row: usize, col: usize) -> bool {
    let width = grid[0].width();
    let seg = grid[col / width];
    let c = col % width;
    !seg.get(row, c).is_empty() && (row == 0 || seg.get(row - 1, c).is_empty())
}

/// Whether a walker can cross from any footing in `prev` to the right edge of `new`.
///
/// Footing is a non-empty tile with an empty tile (or the top of the grid)
/// above it. From footing at `(row, col)` the walker reaches footing at
/// `(row', col')` when `col < col' <= col + max_gap + 1` and it climbs at most
/// `jump_height` rows; drops of any height are allowed.
pub fn playable(prev: &Segment, new: &Segment, cfg: &RewardConfig) -> bool {
    if !prev.same_shape(new) {
        return false;
    }
    let grid = [prev, new];
    let height = new.height();
    let width = new.width();
    let total = 2 * width;
    let mut reach = vec![false; height * total];
    for col in 0..total {
        for row in 0..height {
            if !standable(&grid, row, col) {
                continue;
            }
            let ok = col < width
                || (col.saturating_sub(cfg.max_gap + 1)..col).any(|from| {
                    (0..height).any(|r| reach[r * total + from] && row + cfg.jump_height >= r)
                });
            reach[row * total + col] = ok;
        }
    }
    (0..height).any(|r| reach[r * total + total - 1])
}

/// Full reward of `new` against `history` (oldest first).
pub fn reward(new: &Segment, history: &[Segment], cfg: &RewardConfig) -> Result<f64> {
    let last = history
        .last()
        .ok_or_else(|| Error::Precondition("reward needs a non-empty history".into()))?;
    let window = &history[history.len().saturating_sub(cfg.n)..];
    let nov = novelty(new, window, cfg.novelty_cap)?;
    let play = if playable(last, new, cfg) { 1.0 } else { -1.0 };
    Ok(cfg.w_novelty * nov + cfg.w_play * play)
}

impl RewardModel for RewardConfig {
    fn score(&self, _action: &LatentVector, new: &Segment, history: &[Segment]) -> Result<f64> {
        reward(new, history, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment_codec::Tile;
    use proptest::prelude::*;

    fn flat_floor(h: usize, w: usize) -> Segment {
        let mut s = Segment::filled(h, w, Tile::Empty);
        for c in 0..w {
            s.set(h - 1, c, Tile::Ground);
        }
        s
    }

    #[test]
    fn novelty_extremes() {
        let empty = Segment::filled(14, 16, Tile::Empty);
        let ground = Segment::filled(14, 16, Tile::Ground);
        assert_eq!(novelty(&empty, &[empty.clone(), empty.clone()], 1.0).unwrap(), 0.0);
        assert_eq!(novelty(&ground, &[empty.clone(), empty.clone()], 1.0).unwrap(), 1.0);
        assert_eq!(novelty(&ground, &[empty.clone(), ground.clone()], 1.0).unwrap(), 0.5);
        assert_eq!(novelty(&ground, std::slice::from_ref(&empty), 0.6).unwrap(), 1.0);
        assert!(novelty(&ground, &[], 1.0).is_err());
        assert!(novelty(&ground, &[Segment::filled(2, 2, Tile::Empty)], 1.0).is_err());
    }

    #[test]
    fn flat_floor_is_playable_empty_is_not() {
        let cfg = RewardConfig::default();
        let floor = flat_floor(14, 16);
        assert!(playable(&floor, &floor, &cfg));
        assert!(!playable(&floor, &Segment::filled(14, 16, Tile::Empty), &cfg));
    }

    #[test]
    fn gap_width_threshold() {
        let cfg = RewardConfig::default();
        let floor = flat_floor(14, 16);
        let with_gap = |width: usize| {
            let mut s = flat_floor(14, 16);
            for c in 5..5 + width {
                s.set(13, c, Tile::Empty);
            }
            s
        };
        assert!(playable(&floor, &with_gap(cfg.max_gap), &cfg));
        assert!(!playable(&floor, &with_gap(cfg.max_gap + 1), &cfg));
    }

    #[test]
    fn climb_limit() {
        let cfg = RewardConfig::default();
        let floor = flat_floor(14, 16);
        let step_up = |height: usize| {
            let mut s = flat_floor(14, 16);
            for c in 8..16 {
                for r in 13 - height..14 {
                    s.set(r, c, Tile::Block);
                }
            }
            s
        };
        assert!(playable(&floor, &step_up(cfg.jump_height), &cfg));
        assert!(!playable(&floor, &step_up(cfg.jump_height + 1), &cfg));
    }

    #[test]
    fn reward_arithmetic() {
        let floor = flat_floor(14, 16);
        let empty = Segment::filled(14, 16, Tile::Empty);
        let unit = RewardConfig {
            novelty_cap: 1.0,
            ..RewardConfig::default()
        };
        assert_eq!(reward(&floor, std::slice::from_ref(&floor), &unit).unwrap(), 1.0);
        // Empty segment: unplayable, and fully novel against an all-ground history.
        let full = Segment::filled(14, 16, Tile::Ground);
        assert_eq!(reward(&empty, &[full], &unit).unwrap(), 0.0);
        // Half-novel playable segment.
        let mut half = floor.clone();
        for r in 0..7 {
            for c in 0..16 {
                half.set(r, c, Tile::Coin);
            }
        }
        let cfg = RewardConfig {
            w_novelty: 1.0,
            w_play: 0.5,
            novelty_cap: 1.0,
            ..RewardConfig::default()
        };
        assert_eq!(reward(&half, std::slice::from_ref(&floor), &cfg).unwrap(), 1.0);
        assert!(reward(&floor, &[], &cfg).is_err());
    }

    #[test]
    fn reward_uses_latest_window_only() {
        let floor = flat_floor(14, 16);
        let cfg = RewardConfig {
            n: 1,
            novelty_cap: 1.0,
            ..RewardConfig::default()
        };
        let ground = Segment::filled(14, 16, Tile::Block);
        // Only the last history segment counts with n = 1.
        let r = reward(&floor, &[ground, floor.clone()], &cfg).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn validation() {
        assert!(RewardConfig::default().validate().is_ok());
        let zero = RewardConfig {
            w_novelty: 0.0,
            w_play: 0.0,
            ..RewardConfig::default()
        };
        assert!(zero.validate().is_err());
        let cap = RewardConfig {
            novelty_cap: 1.5,
            ..RewardConfig::default()
        };
        assert!(cap.validate().is_err());
    }

    fn arb_segment() -> impl Strategy<Value = Segment> {
        prop::collection::vec(0usize..6, 6 * 8).prop_map(|idx| {
            let tiles = idx.into_iter().map(|i| Tile::ALPHABET[i]).collect();
            Segment::from_tiles(6, 8, tiles).unwrap()
        })
    }

    proptest! {
        #[test]
        fn reward_is_bounded(new in arb_segment(), h1 in arb_segment(), h2 in arb_segment()) {
            let cfg = RewardConfig { n: 2, jump_height: 2, max_gap: 2, ..RewardConfig::default() };
            let r = reward(&new, &[h1, h2], &cfg).unwrap();
            prop_assert!(r >= -cfg.w_play && r <= cfg.w_novelty + cfg.w_play);
        }

        #[test]
        fn novelty_ignores_history_order(new in arb_segment(), h1 in arb_segment(), h2 in arb_segment(), h3 in arb_segment()) {
            let a = novelty(&new, &[h1.clone(), h2.clone(), h3.clone()], 0.6).unwrap();
            let b = novelty(&new, &[h3, h1, h2], 0.6).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn adding_bottom_ground_keeps_playability(
            prev in arb_segment(),
            new in arb_segment(),
            cols in prop::collection::vec(0usize..16, 1..6),
        ) {
            let cfg = RewardConfig { jump_height: 2, max_gap: 1, ..RewardConfig::default() };
            let before = playable(&prev, &new, &cfg);
            let (mut p2, mut n2) = (prev.clone(), new.clone());
            for c in cols {
                let seg = if c < 8 { &mut p2 } else { &mut n2 };
                if seg.get(5, c % 8).is_empty() {
                    seg.set(5, c % 8, Tile::Ground);
                }
            }
            prop_assert!(!before || playable(&p2, &n2, &cfg));
        }
    }
}
