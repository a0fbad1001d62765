//! State space closure (SSC) diagnostics.
//!
//! For a deterministic policy `pi`, let `S_i` be the set of states reachable
//! at step `i` and `S_{s:e}` the union of `S_s..=S_e`. SSC occurs at `[g, h]`
//! (`g < h`) when `S_h ⊆ S_{g:h-1}`. Because `S_{i+1}` is the image of `S_i`
//! under the one-step map and images preserve inclusion, closure at `[g, h]`
//! implies every later `S_i` stays inside `S_{g:h-1}`.
//!
//! Finite instances (quantized latents) are handled exactly by
//! [`enumerate_state_sets`], [`detect_ssc_finite`] and [`verify_property1`].
//! Continuous instances use [`coverage_statistic`], the fraction of successor
//! states lying within `epsilon` of some precedent state.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::designers::Designer;
use crate::error::{Error, Result};
use crate::latent_mdp::{DesignerState, LatentVector};
use crate::seed::rng_from_seed;
use crate::segment_codec::quantize;

/// A deterministic decision rule, possibly step-indexed.
pub trait DeterministicPolicy: Sync {
    fn act(&self, state: &DesignerState, step: usize) -> Result<LatentVector>;

    /// Whether the action depends on the state only. Closure implies invariance
    /// only for stationary policies.
    fn is_stationary(&self) -> bool {
        true
    }
}

impl DeterministicPolicy for Designer {
    fn act(&self, state: &DesignerState, step: usize) -> Result<LatentVector> {
        if !self.is_deterministic() {
            return Err(Error::Precondition(
                "state-set enumeration needs a deterministic designer".into(),
            ));
        }
        // Deterministic designers never draw from the random source.
        Designer::act(self, state, step, &mut rng_from_seed(0))
    }

    fn is_stationary(&self) -> bool {
        !matches!(self, Designer::Periodic { actions } if actions.len() > 1)
    }
}

impl<F> DeterministicPolicy for F
where
    F: Fn(&DesignerState) -> Result<LatentVector> + Sync,
{
    fn act(&self, state: &DesignerState, _step: usize) -> Result<LatentVector> {
        self(state)
    }
}

/// Exact, hashable identity of a quantized state: the bit patterns of its
/// flattened components (with `-0.0` folded into `0.0`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    n: usize,
    bits: Vec<u64>,
}

impl StateKey {
    pub fn of(state: &DesignerState) -> Self {
        StateKey {
            n: state.n(),
            bits: state
                .flatten()
                .into_iter()
                .map(|x| if x == 0.0 { 0.0f64.to_bits() } else { x.to_bits() })
                .collect(),
        }
    }

    pub fn to_state(&self) -> DesignerState {
        let flat: Vec<f64> = self.bits.iter().map(|b| f64::from_bits(*b)).collect();
        DesignerState::from_flat(&flat, self.n).expect("key built from a valid state")
    }
}

pub type StateSet = BTreeSet<StateKey>;

/// Reachable state sets `S_0, S_1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSetSequence {
    pub per_step: Vec<StateSet>,
}

impl StateSetSequence {
    pub fn max_step(&self) -> usize {
        self.per_step.len() - 1
    }

    /// `S_{s:e}`.
    pub fn union(&self, s: usize, e: usize) -> StateSet {
        self.per_step[s..=e].iter().flatten().cloned().collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.per_step.iter().map(|s| s.len()).collect()
    }
}

/// Quantizes every latent of a state.
pub fn quantize_state(state: &DesignerState, levels: usize) -> Result<DesignerState> {
    DesignerState::new(
        state
            .window()
            .iter()
            .map(|z| quantize(z, levels))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// The one-step map: act, quantize the action, shift the window.
pub fn step_state<P: DeterministicPolicy + ?Sized>(
    policy: &P,
    state: &DesignerState,
    step: usize,
    levels: usize,
) -> Result<DesignerState> {
    let action = quantize(&policy.act(state, step)?, levels)?;
    state.transition(&action)
}

/// Image of a state set under the one-step map at `step`.
pub fn image<P: DeterministicPolicy + ?Sized>(
    policy: &P,
    set: &StateSet,
    step: usize,
    levels: usize,
) -> Result<StateSet> {
    set.iter()
        .map(|k| step_state(policy, &k.to_state(), step, levels).map(|s| StateKey::of(&s)))
        .collect()
}

/// Computes `S_0..=S_max_step` exactly with `S_0 = quantize(initial_set)`.
pub fn enumerate_state_sets<P: DeterministicPolicy + ?Sized>(
    policy: &P,
    levels: usize,
    initial_set: &[DesignerState],
    max_step: usize,
    cap: usize,
) -> Result<StateSetSequence> {
    if initial_set.is_empty() {
        return Err(Error::Precondition("initial state set is empty".into()));
    }
    let first: StateSet = initial_set
        .iter()
        .map(|s| quantize_state(s, levels).map(|q| StateKey::of(&q)))
        .collect::<Result<_>>()?;
    let mut per_step = vec![first];
    for step in 0..max_step {
        let next = image(policy, &per_step[step], step, levels)?;
        if next.len() > cap {
            return Err(Error::StateExplosion {
                step: step + 1,
                size: next.len(),
                cap,
            });
        }
        per_step.push(next);
    }
    Ok(StateSetSequence { per_step })
}

/// Outcome of a closure check at `[g, h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    pub g: usize,
    pub h: usize,
    pub occurred: bool,
    /// `S_{g:h-1}` when closure occurred (finite case).
    pub closure_set: Option<StateSet>,
    /// Coverage of successor by precedent states (continuous case).
    pub coverage: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Per-step set sizes (finite) or distinct sampled state counts (continuous).
    pub set_sizes: Vec<usize>,
}

impl ClosureReport {
    /// Plain `key value` report.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| x.to_string());
        let _ = writeln!(out, "g {}", self.g);
        let _ = writeln!(out, "h {}", self.h);
        let _ = writeln!(out, "occurred {}", self.occurred);
        let _ = writeln!(out, "coverage {}", opt(self.coverage));
        let _ = writeln!(out, "epsilon {}", opt(self.epsilon));
        let _ = writeln!(out, "delta {}", opt(self.delta));
        let _ = writeln!(
            out,
            "closure_size {}",
            self.closure_set.as_ref().map_or("-".to_string(), |s| s.len().to_string())
        );
        let sizes: Vec<String> = self.set_sizes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "set_sizes {}", sizes.join(" "));
        out
    }

    /// `step,size` CSV of the per-step set sizes.
    pub fn set_sizes_csv(&self) -> String {
        let mut out = String::from("step,size\n");
        for (i, s) in self.set_sizes.iter().enumerate() {
            let _ = writeln!(out, "{i},{s}");
        }
        out
    }
}

/// Checks `S_h ⊆ S_{g:h-1}`.
pub fn detect_ssc_finite(seq: &StateSetSequence, g: usize, h: usize) -> Result<ClosureReport> {
    if g >= h {
        return Err(Error::Precondition(format!("need g < h (g = {g}, h = {h})")));
    }
    if h > seq.max_step() {
        return Err(Error::Precondition(format!(
            "sequence ends at step {}, before h = {h}",
            seq.max_step()
        )));
    }
    let past = seq.union(g, h - 1);
    let occurred = seq.per_step[h].is_subset(&past);
    Ok(ClosureReport {
        g,
        h,
        occurred,
        closure_set: occurred.then_some(past),
        coverage: None,
        epsilon: None,
        delta: None,
        set_sizes: seq.sizes(),
    })
}

/// Smallest `h > g` at which closure occurs within the recorded steps.
pub fn first_closure(seq: &StateSetSequence, g: usize) -> Option<ClosureReport> {
    let mut past = StateSet::new();
    for h in g + 1..=seq.max_step() {
        past.extend(seq.per_step[h - 1].iter().cloned());
        if seq.per_step[h].is_subset(&past) {
            return detect_ssc_finite(seq, g, h).ok();
        }
    }
    None
}

/// Outcome of [`verify_property1`].
#[derive(Debug, Clone, PartialEq)]
pub struct Property1Verdict {
    /// `S_{h:H} ⊆ S_{g:h-1}`.
    pub contained: bool,
    /// First `(step, state)` escaping the closure, if any.
    pub witness: Option<(usize, DesignerState)>,
    /// `S_{g:h-1} ⊆ S_{h:H}`; transient states make this fail legitimately.
    pub reverse_contained: bool,
    pub reverse_missing: usize,
    pub horizon: usize,
}

/// Simulates to `H = horizon_multiplier * h` and checks that no state outside
/// `S_{g:h-1}` appears in steps `h..=H`. The reverse inclusion is reported
/// separately.
#[allow(clippy::too_many_arguments)]
pub fn verify_property1<P: DeterministicPolicy + ?Sized>(
    policy: &P,
    levels: usize,
    initial_set: &[DesignerState],
    g: usize,
    h: usize,
    horizon_multiplier: usize,
    cap: usize,
) -> Result<Property1Verdict> {
    let horizon = horizon_multiplier.max(1) * h;
    let seq = enumerate_state_sets(policy, levels, initial_set, horizon.max(h), cap)?;
    let report = detect_ssc_finite(&seq, g, h)?;
    let Some(closure) = report.closure_set else {
        return Err(Error::Precondition(format!("no closure at [{g}, {h}]")));
    };
    let mut witness = None;
    let mut later = StateSet::new();
    for (step, set) in seq.per_step.iter().enumerate().take(horizon + 1).skip(h) {
        if witness.is_none() {
            if let Some(k) = set.iter().find(|k| !closure.contains(k)) {
                witness = Some((step, k.to_state()));
            }
        }
        later.extend(set.iter().cloned());
    }
    let reverse_missing = closure.difference(&later).count();
    Ok(Property1Verdict {
        contained: witness.is_none(),
        witness,
        reverse_contained: reverse_missing == 0,
        reverse_missing,
        horizon,
    })
}

/// Fraction of `successor` states within `epsilon` (Euclidean, raw
/// concatenated latents) of some `precedent` state. An empty successor list
/// gives 1.
pub fn coverage_statistic(
    precedent: &[DesignerState],
    successor: &[DesignerState],
    epsilon: f64,
) -> Result<f64> {
    if precedent.is_empty() {
        return Err(Error::Precondition("coverage needs precedent states".into()));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    if successor.is_empty() {
        return Ok(1.0);
    }
    let pre: Vec<Vec<f64>> = precedent.iter().map(|s| s.flatten()).collect();
    let eps2 = epsilon * epsilon;
    let covered = successor
        .par_iter()
        .filter(|s| {
            let x = s.flatten();
            pre.iter().any(|p| {
                p.len() == x.len()
                    && p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= eps2
            })
        })
        .count();
    Ok(covered as f64 / successor.len() as f64)
}

/// Default coverage radius `0.05 * sqrt(n * d)`.
pub fn default_epsilon(n: usize, d: usize) -> f64 {
    0.05 * ((n * d) as f64).sqrt()
}

pub const DEFAULT_DELTA: f64 = 0.01;

/// Which phase of an evaluation episode a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateCategory {
    /// Steps `[0, n-1]`.
    Initial,
    /// Steps `[n, h-1]`.
    Precedent,
    /// Steps `[h, 2h]`.
    Successor,
}

impl StateCategory {
    pub fn of(step: usize, n: usize, h: usize) -> Option<Self> {
        if step < n {
            Some(StateCategory::Initial)
        } else if step < h {
            Some(StateCategory::Precedent)
        } else if step <= 2 * h {
            Some(StateCategory::Successor)
        } else {
            None
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StateCategory::Initial => "initial",
            StateCategory::Precedent => "precedent",
            StateCategory::Successor => "successor",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategorizedStates {
    pub initial: Vec<(usize, DesignerState)>,
    pub precedent: Vec<(usize, DesignerState)>,
    pub successor: Vec<(usize, DesignerState)>,
}

impl CategorizedStates {
    pub fn states(list: &[(usize, DesignerState)]) -> Vec<DesignerState> {
        list.iter().map(|(_, s)| s.clone()).collect()
    }

    pub fn extend(&mut self, other: CategorizedStates) {
        self.initial.extend(other.initial);
        self.precedent.extend(other.precedent);
        self.successor.extend(other.successor);
    }
}

/// Splits `(step, state)` pairs into the three categories; steps past `2h`
/// are dropped with a warning.
pub fn categorize_states(states: &[(usize, DesignerState)], n: usize, h: usize) -> CategorizedStates {
    let mut out = CategorizedStates::default();
    let mut dropped = 0;
    for (step, s) in states {
        match StateCategory::of(*step, n, h) {
            Some(StateCategory::Initial) => out.initial.push((*step, s.clone())),
            Some(StateCategory::Precedent) => out.precedent.push((*step, s.clone())),
            Some(StateCategory::Successor) => out.successor.push((*step, s.clone())),
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("ignored {dropped} states beyond step 2h = {}", 2 * h);
    }
    out
}

/// Continuous-space closure surrogate: coverage of successor by precedent
/// states at least `1 - delta`, reported at `[g, h] = [n, h]`.
pub fn assess_continuous(
    categorized: &CategorizedStates,
    n: usize,
    h: usize,
    epsilon: f64,
    delta: f64,
) -> Result<ClosureReport> {
    let pre = CategorizedStates::states(&categorized.precedent);
    let succ = CategorizedStates::states(&categorized.successor);
    let coverage = coverage_statistic(&pre, &succ, epsilon)?;
    let mut per_step: Vec<BTreeSet<StateKey>> = Vec::new();
    for (step, s) in categorized
        .initial
        .iter()
        .chain(&categorized.precedent)
        .chain(&categorized.successor)
    {
        if per_step.len() <= *step {
            per_step.resize(step + 1, BTreeSet::new());
        }
        per_step[*step].insert(StateKey::of(s));
    }
    Ok(ClosureReport {
        g: n,
        h,
        occurred: coverage >= 1.0 - delta,
        closure_set: None,
        coverage: Some(coverage),
        epsilon: Some(epsilon),
        delta: Some(delta),
        set_sizes: per_step.iter().map(|s| s.len()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: &[f64]) -> LatentVector {
        LatentVector::new(v.to_vec()).unwrap()
    }

    fn st(v: &[f64]) -> DesignerState {
        DesignerState::new(v.iter().map(|&x| lv(&[x])).collect()).unwrap()
    }

    fn keys(states: &[DesignerState]) -> StateSet {
        states.iter().map(StateKey::of).collect()
    }

    #[test]
    fn periodic_alternates() {
        let d = Designer::periodic(vec![lv(&[1.0]), lv(&[-1.0])]).unwrap();
        let seq = enumerate_state_sets(&d, 3, &[st(&[0.0])], 6, 100).unwrap();
        for i in 1..=6 {
            let expect = if i % 2 == 1 { 1.0 } else { -1.0 };
            assert_eq!(seq.per_step[i], keys(&[st(&[expect])]));
        }
        let rep = detect_ssc_finite(&seq, 1, 3).unwrap();
        assert!(rep.occurred);
        assert_eq!(rep.closure_set.unwrap(), keys(&[st(&[1.0]), st(&[-1.0])]));
    }

    #[test]
    fn constant_policy_fixed_point() {
        let a = lv(&[0.5]);
        let policy = |_: &DesignerState| Ok(a.clone());
        let init = [st(&[-1.0, 1.0]), st(&[0.0, 0.0])];
        let seq = enumerate_state_sets(&policy, 5, &init, 8, 100).unwrap();
        for i in 2..=8 {
            assert_eq!(seq.per_step[i], keys(&[st(&[0.5, 0.5])]));
        }
        let rep = detect_ssc_finite(&seq, 2, 4).unwrap();
        assert!(rep.occurred);
        assert_eq!(rep.closure_set.unwrap().len(), 1);
        let v = verify_property1(&policy, 5, &init, 2, 4, 5, 100).unwrap();
        assert!(v.contained && v.reverse_contained);
    }

    #[test]
    fn injective_progression_never_closes() {
        // Walks the 9-point grid upward one notch per step from -1.
        let policy = |s: &DesignerState| {
            let x = s.newest().as_slice()[0];
            Ok(lv(&[(x + 0.25).min(1.0)]))
        };
        let seq = enumerate_state_sets(&policy, 9, &[st(&[-1.0])], 6, 100).unwrap();
        for h in 1..=6 {
            assert!(!detect_ssc_finite(&seq, 0, h).unwrap().occurred);
        }
        assert!(verify_property1(&policy, 9, &[st(&[-1.0])], 0, 3, 2, 100).is_err());
    }

    #[test]
    fn three_state_cycle() {
        // s0 -> s1 -> s2 -> s1 on the 3-level grid {-1, 0, 1}.
        let policy = |s: &DesignerState| {
            let x = s.newest().as_slice()[0];
            Ok(lv(&[if x == -1.0 { 0.0 } else if x == 0.0 { 1.0 } else { 0.0 }]))
        };
        let init = [st(&[-1.0])];
        let seq = enumerate_state_sets(&policy, 3, &init, 6, 10).unwrap();
        let rep = detect_ssc_finite(&seq, 1, 3).unwrap();
        assert!(rep.occurred);
        assert_eq!(rep.closure_set.unwrap(), keys(&[st(&[0.0]), st(&[1.0])]));
        let v = verify_property1(&policy, 3, &init, 1, 3, 5, 10).unwrap();
        assert!(v.contained && v.reverse_contained);
        // Starting the window at g = 0 keeps s0 in the closure, and s0 is transient.
        let v0 = verify_property1(&policy, 3, &init, 0, 3, 5, 10).unwrap();
        assert!(v0.contained);
        assert!(!v0.reverse_contained);
        assert_eq!(v0.reverse_missing, 1);
    }

    #[test]
    fn step_indexed_policy_can_escape() {
        // Periodic (a, a, b): S_2 ⊆ S_1 yet S_3 = {b} escapes.
        let (a, b) = (lv(&[1.0]), lv(&[-1.0]));
        let d = Designer::periodic(vec![a.clone(), a, b]).unwrap();
        assert!(!DeterministicPolicy::is_stationary(&d));
        let v = verify_property1(&d, 3, &[st(&[0.0])], 1, 2, 2, 10).unwrap();
        assert!(!v.contained);
        assert_eq!(v.witness.unwrap().0, 3);
    }

    #[test]
    fn explosion_guard() {
        let policy = |s: &DesignerState| Ok(s.newest().clone());
        let init: Vec<DesignerState> = [-1.0, 0.0, 1.0].iter().map(|&x| st(&[x])).collect();
        assert!(matches!(
            enumerate_state_sets(&policy, 3, &init, 2, 2),
            Err(Error::StateExplosion { step: 1, size: 3, cap: 2 })
        ));
    }

    #[test]
    fn detect_rejects_bad_interval() {
        let policy = |s: &DesignerState| Ok(s.newest().clone());
        let seq = enumerate_state_sets(&policy, 3, &[st(&[0.0])], 3, 10).unwrap();
        assert!(detect_ssc_finite(&seq, 2, 2).is_err());
        assert!(detect_ssc_finite(&seq, 0, 4).is_err());
    }

    #[test]
    fn coverage_cases() {
        let s = |v: [f64; 2]| DesignerState::new(vec![LatentVector::clamped(v.to_vec())]).unwrap();
        let pre = vec![s([0.0, 0.0]), s([0.5, 0.5])];
        assert_eq!(coverage_statistic(&pre, &pre, 1e-9).unwrap(), 1.0);
        assert_eq!(coverage_statistic(&pre, &[s([1.0, -1.0])], 0.1).unwrap(), 0.0);
        assert!(coverage_statistic(&[], &pre, 1.0).is_err());
    }

    #[test]
    fn coverage_raw_distances() {
        // Distances beyond the latent cube use the raw concatenated vectors.
        let pre = [DesignerState::new(vec![LatentVector::zeros(2)]).unwrap()];
        let a = DesignerState::from_flat(&[0.0, 0.5], 1).unwrap();
        let far = DesignerState::new(vec![LatentVector::zeros(2), LatentVector::zeros(2)]).unwrap();
        let cov = coverage_statistic(&pre, &[a, far], 1.0).unwrap();
        assert_eq!(cov, 0.5);
    }

    #[test]
    fn categories_follow_boundaries() {
        assert_eq!(StateCategory::of(3, 4, 25), Some(StateCategory::Initial));
        assert_eq!(StateCategory::of(4, 4, 25), Some(StateCategory::Precedent));
        assert_eq!(StateCategory::of(10, 4, 25), Some(StateCategory::Precedent));
        assert_eq!(StateCategory::of(25, 4, 25), Some(StateCategory::Successor));
        assert_eq!(StateCategory::of(40, 4, 25), Some(StateCategory::Successor));
        assert_eq!(StateCategory::of(50, 4, 25), Some(StateCategory::Successor));
        assert_eq!(StateCategory::of(51, 4, 25), None);
        let states: Vec<_> = (0..60).map(|i| (i, st(&[0.0]))).collect();
        let c = categorize_states(&states, 4, 25);
        assert_eq!((c.initial.len(), c.precedent.len(), c.successor.len()), (4, 21, 26));
    }

    #[test]
    fn state_key_round_trip() {
        let s = st(&[-0.0, 0.5, -1.0]);
        let k = StateKey::of(&s);
        assert_eq!(k, StateKey::of(&st(&[0.0, 0.5, -1.0])));
        assert_eq!(k.to_state(), st(&[0.0, 0.5, -1.0]));
    }
}
