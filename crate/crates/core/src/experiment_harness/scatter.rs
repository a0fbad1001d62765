use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};

use crate::latent_mdp::DesignerState;
use crate::seed::rng_from_seed;
use crate::ssc_analysis::{CategorizedStates, StateCategory};

/// Fixed linear map from concatenated states to the plane.
///
/// Entries are standard normals from `ChaCha8Rng::seed_from_u64(seed)`, scaled
/// by `1/sqrt(dim)`, row-major over the 2 x `dim` matrix. Designers sharing a
/// state dimension and seed share axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    dim: usize,
    matrix: Vec<f64>,
}

impl Projector {
    pub fn seeded(dim: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let scale = 1.0 / (dim.max(1) as f64).sqrt();
        let matrix = (0..2 * dim)
            .map(|_| { let v: f64 = StandardNormal.sample(&mut rng); scale * v })
            .collect::<Vec<f64>>();
        Projector { dim, matrix }
    }

    pub fn project(&self, state: &DesignerState) -> (f64, f64) {
        let x = state.flatten();
        let row = |r: usize| {
            self.matrix[r * self.dim..(r + 1) * self.dim]
                .iter()
                .zip(&x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        (row(0), row(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub x: f64,
    pub y: f64,
    pub step: usize,
    pub category: StateCategory,
}

/// One projected row per state, initial then precedent then successor.
pub fn emit_scatter(states: &CategorizedStates, projector: &Projector) -> Vec<ScatterRow> {
    [
        (StateCategory::Initial, &states.initial),
        (StateCategory::Precedent, &states.precedent),
        (StateCategory::Successor, &states.successor),
    ]
    .into_iter()
    .flat_map(|(category, list)| {
        list.iter().map(move |(step, s)| {
            let (x, y) = projector.project(s);
            ScatterRow {
                x,
                y,
                step: *step,
                category,
            }
        })
    })
    .collect()
}

/// `x,y,step,category` CSV.
pub fn scatter_csv(rows: &[ScatterRow]) -> String {
    let mut out = String::from("x,y,step,category\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.x, r.y, r.step, r.category.label());
    }
    out
}
