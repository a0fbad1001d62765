//! Latent-to-segment decoders and the level text format.
//!
//! Two deterministic decoders stand in for a trained generator:
//!
//! * [`LinearDecoder`]: a seeded random affine map from the latent space to
//!   per-cell tile logits, followed by a per-cell argmax. Small latent moves
//!   produce small tile changes.
//! * [`BankDecoder`]: nearest-anchor lookup into a finite bank of prototype
//!   segments, giving a decoder with finite image.
//!
//! # Level text format
//!
//! A level is written as `H` tile rows, each row holding the corresponding row
//! of every segment side by side, followed by one marker row. The marker row
//! has `^` in the first column of each segment and `.` elsewhere:
//!
//! ```text
//! --------------------------------
//! ----------------o---------------
//! XXXXXXXXXXXXXXXXXXXXXX--XXXXXXXX
//! ^...............^...............
//! ```
//!
//! A file holding several levels separates them with one blank line.
//!
//! # Bank file format
//!
//! ```text
//! bank <M> <d>
//! anchor <c_1> ... <c_d>      (M lines)
//! <level text holding the M prototypes, in anchor order>
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent_mdp::LatentVector;
use crate::seed::rng_from_seed;

pub const DEFAULT_HEIGHT: usize = 14;
pub const DEFAULT_WIDTH: usize = 16;

const MARKER_START: char = '^';
const MARKER_FILL: char = '.';

/// One tile of a segment. Variant order is the argmax tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Tile {
    Empty = 0,
    Ground = 1,
    Block = 2,
    Coin = 3,
    Enemy = 4,
    Pipe = 5,
}

impl Tile {
    pub const ALPHABET: [Tile; 6] = [
        Tile::Empty,
        Tile::Ground,
        Tile::Block,
        Tile::Coin,
        Tile::Enemy,
        Tile::Pipe,
    ];

    pub const fn to_char(self) -> char {
        match self {
            Tile::Empty => '-',
            Tile::Ground => 'X',
            Tile::Block => '#',
            Tile::Coin => 'o',
            Tile::Enemy => 'E',
            Tile::Pipe => '|',
        }
    }

    pub fn from_char(c: char) -> Option<Tile> {
        Some(match c {
            '-' => Tile::Empty,
            'X' => Tile::Ground,
            '#' => Tile::Block,
            'o' => Tile::Coin,
            'E' => Tile::Enemy,
            '|' => Tile::Pipe,
            _ => return None,
        })
    }

    pub fn is_empty(self) -> bool {
        self == Tile::Empty
    }
}

/// A rectangular tile grid; row 0 is the top row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    height: usize,
    width: usize,
    tiles: Vec<Tile>,
}

impl Segment {
    pub fn filled(height: usize, width: usize, tile: Tile) -> Self {
        Segment {
            height,
            width,
            tiles: vec![tile; height * width],
        }
    }

    pub fn from_tiles(height: usize, width: usize, tiles: Vec<Tile>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidConfig("segment dimensions must be positive".into()));
        }
        Error::check_dim(height * width, tiles.len())?;
        Ok(Segment {
            height,
            width,
            tiles,
        })
    }

    /// Builds a segment from text rows, e.g. `["--", "XX"]`.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().chars().count());
        let mut tiles = Vec::with_capacity(height * width);
        for (line, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() != width {
                return Err(Error::parse(line + 1, "ragged segment rows"));
            }
            for c in row.chars() {
                tiles.push(
                    Tile::from_char(c)
                        .ok_or_else(|| Error::parse(line + 1, format!("unknown tile {c:?}")))?,
                );
            }
        }
        Segment::from_tiles(height, width, tiles)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn get(&self, row: usize, col: usize) -> Tile {
        self.tiles[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, tile: Tile) {
        self.tiles[row * self.width + col] = tile;
    }

    pub fn same_shape(&self, other: &Segment) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn row_string(&self, row: usize) -> String {
        self.tiles[row * self.width..(row + 1) * self.width]
            .iter()
            .map(|t| t.to_char())
            .collect()
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.height {
            writeln!(f, "{}", self.row_string(r))?;
        }
        Ok(())
    }
}

/// An ordered sequence of equally sized segments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Level {
    segments: Vec<Segment>,
}

impl Level {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if let Some(first) = segments.first() {
            if let Some(bad) = segments.iter().find(|s| !s.same_shape(first)) {
                return Err(Error::InvalidConfig(format!(
                    "segment of size {}x{} in a level of {}x{} segments",
                    bad.height, bad.width, first.height, first.width
                )));
            }
        }
        Ok(Level { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn into_segments(self) -> Vec<Segment> {
        self.segments
    }
}

/// Renders a level in the level text format.
pub fn level_to_text(level: &Level) -> String {
    let Some(first) = level.segments.first() else {
        return String::new();
    };
    let (height, width) = (first.height, first.width);
    let mut out = String::with_capacity((height + 1) * (width * level.len() + 1));
    for r in 0..height {
        for seg in &level.segments {
            out.push_str(&seg.row_string(r));
        }
        out.push('\n');
    }
    for _ in &level.segments {
        out.push(MARKER_START);
        out.extend(std::iter::repeat_n(MARKER_FILL, width - 1));
    }
    out.push('\n');
    out
}

/// Parses one level from the level text format.
pub fn text_to_level(text: &str) -> Result<Level> {
    let lines: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .collect::<Vec<_>>();
    let end = lines
        .iter()
        .rposition(|l| !l.is_empty())
        .map_or(0, |p| p + 1);
    parse_level_lines(&lines[..end], 1)
}

fn parse_level_lines(lines: &[&str], first_line: usize) -> Result<Level> {
    let Some((marker, rows)) = lines.split_last() else {
        return Ok(Level::default());
    };
    let marker_line = first_line + rows.len();
    if rows.is_empty() {
        return Err(Error::parse(marker_line, "level has no tile rows"));
    }
    let marker: Vec<char> = marker.chars().collect();
    if marker.first() != Some(&MARKER_START) {
        return Err(Error::parse(marker_line, "marker row must start with '^'"));
    }
    let mut starts = Vec::new();
    for (i, &c) in marker.iter().enumerate() {
        match c {
            MARKER_START => starts.push(i),
            MARKER_FILL => {}
            other => {
                return Err(Error::parse(
                    marker_line,
                    format!("unexpected marker character {other:?}"),
                ))
            }
        }
    }
    let total = marker.len();
    let width = starts.get(1).copied().unwrap_or(total);
    if starts.iter().enumerate().any(|(k, &s)| s != k * width) || starts.len() * width != total {
        return Err(Error::parse(marker_line, "segments must share one width"));
    }
    let height = rows.len();
    let mut grids: Vec<Vec<Tile>> = vec![Vec::with_capacity(height * width); starts.len()];
    for (r, row) in rows.iter().enumerate() {
        let line = first_line + r;
        let chars: Vec<char> = row.chars().collect();
        if chars.len() != total {
            return Err(Error::parse(
                line,
                format!("ragged row: {} columns, expected {total}", chars.len()),
            ));
        }
        for (c, ch) in chars.into_iter().enumerate() {
            let tile =
                Tile::from_char(ch).ok_or_else(|| Error::parse(line, format!("unknown tile {ch:?}")))?;
            grids[c / width].push(tile);
        }
    }
    let segments = grids
        .into_iter()
        .map(|tiles| Segment::from_tiles(height, width, tiles))
        .collect::<Result<Vec<_>>>()?;
    Level::new(segments)
}

/// Renders several levels separated by blank lines.
pub fn levels_to_text(levels: &[Level]) -> String {
    levels
        .iter()
        .map(level_to_text)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses a blank-line separated sequence of levels.
pub fn text_to_levels(text: &str) -> Result<Vec<Level>> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let mut levels = Vec::new();
    let mut start = 0;
    while start < lines.len() {
        if lines[start].is_empty() {
            start += 1;
            continue;
        }
        let end = lines[start..]
            .iter()
            .position(|l| l.is_empty())
            .map_or(lines.len(), |p| start + p);
        levels.push(parse_level_lines(&lines[start..end], start + 1)?);
        start = end;
    }
    Ok(levels)
}

/// Snaps each component to the nearest of `levels` evenly spaced points in [-1, 1].
pub fn quantize(z: &LatentVector, levels: usize) -> Result<LatentVector> {
    if levels < 2 {
        return Err(Error::InvalidConfig("quantization needs at least 2 levels".into()));
    }
    let steps = (levels - 1) as f64;
    let snapped = z
        .as_slice()
        .iter()
        .map(|&x| {
            let k = ((x.clamp(-1.0, 1.0) + 1.0) / 2.0 * steps).round();
            -1.0 + 2.0 * k / steps
        })
        .collect();
    Ok(LatentVector::clamped(snapped))
}

/// Seeded random affine map to tile logits with per-cell argmax.
///
/// Weights are standard normals from `ChaCha8Rng::seed_from_u64(seed)` in
/// (cell, tile, component) order, scaled by `sqrt(3 / d)` so every logit has
/// unit variance under uniform latents. The bias is a fixed tile prior: the
/// bottom [`GROUND_ROWS`] rows lean toward ground, every other row leans
/// toward empty, both by [`TILE_PRIOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDecoder {
    d: usize,
    height: usize,
    width: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

pub const TILE_PRIOR: f64 = 2.0;
pub const GROUND_ROWS: usize = 2;

impl LinearDecoder {
    pub fn new(d: usize, height: usize, width: usize, seed: u64) -> Result<Self> {
        if d == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidConfig(
                "decoder dimensions must be positive".into(),
            ));
        }
        let alphabet = Tile::ALPHABET.len();
        let rows = height * width * alphabet;
        let mut rng = rng_from_seed(seed);
        let scale = (3.0 / d as f64).sqrt();
        let weights = (0..rows * d)
            .map(|_| {
                let w: f64 = StandardNormal.sample(&mut rng);
                scale * w
            })
            .collect();
        let mut bias = vec![0.0; rows];
        for cell in 0..height * width {
            let favoured = if cell / width >= height.saturating_sub(GROUND_ROWS) {
                Tile::Ground
            } else {
                Tile::Empty
            };
            bias[cell * alphabet + favoured as usize] = TILE_PRIOR;
        }
        Ok(LinearDecoder {
            d,
            height,
            width,
            weights,
            bias,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Logits for every (cell, tile), in (cell, tile) order.
    pub fn logits(&self, z: &LatentVector) -> Result<Vec<f64>> {
        Error::check_dim(self.d, z.dim())?;
        let z = z.as_slice();
        Ok(self
            .weights
            .chunks_exact(self.d)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>())
            .collect())
    }

    /// Weight row for `(cell, tile)`.
    pub fn weight_row(&self, cell: usize, tile: Tile) -> &[f64] {
        let r = cell * Tile::ALPHABET.len() + tile as usize;
        &self.weights[r * self.d..(r + 1) * self.d]
    }

    pub fn decode(&self, z: &LatentVector) -> Result<Segment> {
        let logits = self.logits(z)?;
        let tiles = logits
            .chunks_exact(Tile::ALPHABET.len())
            .map(|cell| {
                let mut best = 0;
                for (t, &v) in cell.iter().enumerate().skip(1) {
                    if v > cell[best] {
                        best = t;
                    }
                }
                Tile::ALPHABET[best]
            })
            .collect();
        Segment::from_tiles(self.height, self.width, tiles)
    }
}

/// Nearest-anchor lookup into a bank of prototype segments.
#[derive(Debug, Clone, PartialEq)]
pub struct BankDecoder {
    anchors: Vec<LatentVector>,
    prototypes: Vec<Segment>,
}

impl BankDecoder {
    pub fn new(anchors: Vec<LatentVector>, prototypes: Vec<Segment>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidConfig("empty decoder bank".into()));
        }
        if anchors.len() != prototypes.len() {
            return Err(Error::InvalidConfig(format!(
                "{} anchors for {} prototypes",
                anchors.len(),
                prototypes.len()
            )));
        }
        let d = anchors[0].dim();
        for a in &anchors {
            Error::check_dim(d, a.dim())?;
        }
        for (i, a) in anchors.iter().enumerate() {
            if anchors[..i].contains(a) {
                return Err(Error::InvalidConfig(format!("duplicate bank anchor {i}")));
            }
        }
        Level::new(prototypes.clone())?;
        Ok(BankDecoder {
            anchors,
            prototypes,
        })
    }

    pub fn d(&self) -> usize {
        self.anchors[0].dim()
    }

    pub fn anchors(&self) -> &[LatentVector] {
        &self.anchors
    }

    pub fn prototypes(&self) -> &[Segment] {
        &self.prototypes
    }

    /// Index of the nearest anchor; ties go to the lowest index.
    pub fn nearest(&self, z: &LatentVector) -> Result<usize> {
        Error::check_dim(self.d(), z.dim())?;
        let mut best = (0, f64::INFINITY);
        for (i, a) in self.anchors.iter().enumerate() {
            let dist = a.squared_distance(z);
            if dist < best.1 {
                best = (i, dist);
            }
        }
        Ok(best.0)
    }

    pub fn decode(&self, z: &LatentVector) -> Result<Segment> {
        Ok(self.prototypes[self.nearest(z)?].clone())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("bank {} {}\n", self.anchors.len(), self.d());
        for a in &self.anchors {
            out.push_str("anchor");
            for x in a.as_slice() {
                out.push_str(&format!(" {x}"));
            }
            out.push('\n');
        }
        out.push_str(&level_to_text(&Level {
            segments: self.prototypes.clone(),
        }));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty bank file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (m, d) = match parts.as_slice() {
            ["bank", m, d] => (
                m.parse::<usize>().map_err(|e| Error::parse(1, e.to_string()))?,
                d.parse::<usize>().map_err(|e| Error::parse(1, e.to_string()))?,
            ),
            _ => return Err(Error::parse(1, "expected `bank <M> <d>`")),
        };
        let mut anchors = Vec::with_capacity(m);
        for i in 0..m {
            let line_no = i + 2;
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(line_no, "missing anchor line"))?;
            let mut fields = line.split_whitespace();
            if fields.next() != Some("anchor") {
                return Err(Error::parse(line_no, "expected `anchor ...`"));
            }
            let comps = fields
                .map(|f| f.parse::<f64>().map_err(|e| Error::parse(line_no, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if comps.len() != d {
                return Err(Error::parse(line_no, format!("anchor has {} components, expected {d}", comps.len())));
            }
            anchors.push(LatentVector::new(comps).map_err(|e| Error::parse(line_no, e.to_string()))?);
        }
        let rest: Vec<&str> = lines.collect();
        let end = rest.iter().rposition(|l| !l.is_empty()).map_or(0, |p| p + 1);
        let level = parse_level_lines(&rest[..end], m + 2)?;
        BankDecoder::new(anchors, level.into_segments())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Linear,
    Bank,
}

/// Persisted decoder description (the `[decoder]` config block).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderSpec {
    pub kind: DecoderKind,
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default)]
    pub weights_seed: u64,
    #[serde(default)]
    pub bank_path: Option<PathBuf>,
}

fn default_height() -> usize {
    DEFAULT_HEIGHT
}

fn default_width() -> usize {
    DEFAULT_WIDTH
}

impl Default for DecoderSpec {
    fn default() -> Self {
        DecoderSpec {
            kind: DecoderKind::Linear,
            height: DEFAULT_HEIGHT,
            width: DEFAULT_WIDTH,
            weights_seed: 0,
            bank_path: None,
        }
    }
}

impl DecoderSpec {
    /// Builds the decoder for latent dimension `d`. Relative bank paths
    /// resolve against `base_dir`.
    pub fn build(&self, d: usize, base_dir: &Path) -> Result<Decoder> {
        match self.kind {
            DecoderKind::Linear => Ok(Decoder::Linear(LinearDecoder::new(
                d,
                self.height,
                self.width,
                self.weights_seed,
            )?)),
            DecoderKind::Bank => {
                let rel = self.bank_path.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("bank decoder needs `bank_path`".into())
                })?;
                let path = base_dir.join(rel);
                let text = std::fs::read_to_string(&path).map_err(|source| Error::File {
                    path: path.clone(),
                    source,
                })?;
                let bank = BankDecoder::from_text(&text)?;
                Error::check_dim(d, bank.d())?;
                if bank.prototypes[0].height != self.height || bank.prototypes[0].width != self.width {
                    return Err(Error::InvalidConfig(
                        "bank prototypes do not match the configured segment size".into(),
                    ));
                }
                Ok(Decoder::Bank(bank))
            }
        }
    }
}

/// A latent-to-segment decoder.
#[derive(Debug, Clone, PartialEq)]
pub enum Decoder {
    Linear(LinearDecoder),
    Bank(BankDecoder),
}

impl Decoder {
    pub fn d(&self) -> usize {
        match self {
            Decoder::Linear(dec) => dec.d(),
            Decoder::Bank(dec) => dec.d(),
        }
    }

    pub fn decode(&self, z: &LatentVector) -> Result<Segment> {
        match self {
            Decoder::Linear(dec) => dec.decode(z),
            Decoder::Bank(dec) => dec.decode(z),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: &[f64]) -> LatentVector {
        LatentVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quantize_snaps_to_grid() {
        assert_eq!(quantize(&lv(&[0.3, -0.9]), 2).unwrap(), lv(&[1.0, -1.0]));
        assert_eq!(quantize(&lv(&[0.4]), 3).unwrap(), lv(&[0.0]));
        assert_eq!(quantize(&lv(&[0.6]), 3).unwrap(), lv(&[1.0]));
        assert!(quantize(&lv(&[0.6]), 1).is_err());
    }

    #[test]
    fn quantize_is_idempotent() {
        for levels in 2..8 {
            for i in 0..=40 {
                let z = lv(&[-1.0 + i as f64 * 0.05]);
                let once = quantize(&z, levels).unwrap();
                assert_eq!(quantize(&once, levels).unwrap(), once);
            }
        }
    }

    #[test]
    fn linear_decoder_is_deterministic() {
        let dec = LinearDecoder::new(8, 14, 16, 0).unwrap();
        let z = lv(&[0.1, -0.2, 0.3, 0.9, -1.0, 0.0, 0.5, 0.25]);
        assert_eq!(dec.decode(&z).unwrap(), dec.decode(&z).unwrap());
        assert_eq!(dec, LinearDecoder::new(8, 14, 16, 0).unwrap());
        assert!(dec.decode(&lv(&[0.0; 3])).is_err());
    }

    #[test]
    fn linear_decoder_opposite_corners_differ() {
        let dec = LinearDecoder::new(8, 14, 16, 0).unwrap();
        let a = dec.decode(&lv(&[1.0; 8])).unwrap();
        let b = dec.decode(&lv(&[-1.0; 8])).unwrap();
        let differing = a.tiles().iter().zip(b.tiles()).filter(|(x, y)| x != y).count();
        assert!(differing >= 1);
    }

    #[test]
    fn argmax_ties_pick_lowest_tile() {
        // All-zero logits apart from the prior: z = 0 leaves only the prior.
        let dec = LinearDecoder::new(2, 4, 3, 5).unwrap();
        let seg = dec.decode(&lv(&[0.0, 0.0])).unwrap();
        for r in 0..4 {
            let expect = if r >= 2 { Tile::Ground } else { Tile::Empty };
            assert!((0..3).all(|c| seg.get(r, c) == expect));
        }
    }

    fn bank3() -> BankDecoder {
        let protos = vec![
            Segment::filled(2, 2, Tile::Empty),
            Segment::filled(2, 2, Tile::Ground),
            Segment::filled(2, 2, Tile::Block),
        ];
        BankDecoder::new(vec![lv(&[-1.0]), lv(&[0.0]), lv(&[1.0])], protos).unwrap()
    }

    #[test]
    fn bank_nearest_and_ties() {
        let bank = bank3();
        assert_eq!(bank.decode(&lv(&[0.4])).unwrap().get(0, 0), Tile::Ground);
        assert_eq!(bank.decode(&lv(&[1.0])).unwrap().get(0, 0), Tile::Block);
        // Equidistant between anchors 0 and 1.
        assert_eq!(bank.nearest(&lv(&[-0.5])).unwrap(), 0);
        assert!(BankDecoder::new(vec![], vec![]).is_err());
        assert!(BankDecoder::new(
            vec![lv(&[0.0]), lv(&[0.0])],
            vec![Segment::filled(1, 1, Tile::Empty); 2]
        )
        .is_err());
    }

    #[test]
    fn bank_file_round_trip() {
        let bank = bank3();
        let text = bank.to_text();
        assert_eq!(BankDecoder::from_text(&text).unwrap(), bank);
    }

    #[test]
    fn single_empty_segment_renders_dashes() {
        let level = Level::new(vec![Segment::filled(14, 16, Tile::Empty)]).unwrap();
        let text = level_to_text(&level);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 15);
        assert!(lines[..14].iter().all(|l| *l == "-".repeat(16)));
        assert_eq!(lines[14], format!("^{}", ".".repeat(15)));
    }

    #[test]
    fn text_parse_errors() {
        assert!(matches!(text_to_level("-Q\n^.\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(text_to_level("--\n-\n^.\n"), Err(Error::Parse { line: 2, .. })));
        assert!(text_to_level("---\n^.^\n").is_err());
        assert!(text_to_level("--\n..\n").is_err());
    }

    #[test]
    fn multi_level_text() {
        let a = Level::new(vec![Segment::filled(2, 3, Tile::Coin); 2]).unwrap();
        let b = Level::new(vec![Segment::filled(2, 3, Tile::Pipe)]).unwrap();
        let text = levels_to_text(&[a.clone(), b.clone()]);
        assert_eq!(text_to_levels(&text).unwrap(), vec![a, b]);
    }
}
