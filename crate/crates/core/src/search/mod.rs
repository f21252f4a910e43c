//! Design-space search over the finger-by-finger construction process.
//!
//! [`ghs_run`] is the value-guided Graph Heuristic Search; [`mcts_run`] and
//! [`random_search`] are the baselines. All three spend exactly
//! `iterations * candidates` design evaluations.

mod ghs;
mod mcts;
mod random;
mod table;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::design::DesignGraph;
use crate::encoder::{GraphNet, TrainConfig, DEFAULT_HIDDEN, DEFAULT_ROUNDS};
use crate::error::{Error, Result};

pub use ghs::{ghs_run, ghs_run_observed, propose_candidates, ConstructionPath, ValueModel};
pub use mcts::{mcts_run, mcts_run_observed};
pub use random::{random_search, random_search_observed};
pub use table::{construction_ancestors, update_lookup, LookupTable, TableEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub iterations: usize,
    /// Candidates evaluated per iteration.
    pub candidates: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    pub gumbel_scale: f64,
    pub tabu: bool,
    /// Construction attempts per candidate before falling back to a random one.
    pub max_retries: usize,
    pub seed: u64,
    /// Threads used for batch evaluation.
    pub parallelism: usize,
    /// Value-net retraining schedule per iteration.
    pub train: TrainConfig,
    /// Largest number of table entries used for one retraining pass; 0 means all.
    pub replay_cap: usize,
    pub hidden: usize,
    pub rounds: usize,
    pub mcts_exploration: f64,
    /// Palm layouts offered at the MCTS root.
    pub mcts_palms: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 50,
            candidates: 40,
            eps_start: 0.4,
            eps_end: 0.05,
            gumbel_scale: 0.1,
            tabu: true,
            max_retries: 32,
            seed: 0,
            parallelism: 1,
            train: TrainConfig::default(),
            replay_cap: 64,
            hidden: DEFAULT_HIDDEN,
            rounds: DEFAULT_ROUNDS,
            mcts_exploration: std::f64::consts::SQRT_2,
            mcts_palms: 8,
        }
    }
}

impl SearchConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0 <= self.eps_end && self.eps_end <= self.eps_start && self.eps_start <= 1.0) {
            return bad("epsilon schedule must satisfy 0 <= eps_end <= eps_start <= 1");
        }
        if self.candidates == 0 {
            return bad("candidates per iteration must be at least 1");
        }
        if !(self.gumbel_scale >= 0.0 && self.gumbel_scale.is_finite()) {
            return bad("gumbel_scale must be finite and non-negative");
        }
        if !(self.mcts_exploration >= 0.0 && self.mcts_exploration.is_finite()) {
            return bad("mcts_exploration must be finite and non-negative");
        }
        if self.mcts_palms == 0 || self.hidden == 0 || self.max_retries == 0 {
            return bad("mcts_palms, hidden and max_retries must be positive");
        }
        self.train.check()
    }

    /// Design evaluations a run spends.
    pub fn budget(&self) -> usize {
        self.iterations * self.candidates
    }

    /// Fresh value network for a GHS run of this configuration.
    pub fn initial_net(&self) -> GraphNet {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed ^ NET_SEED_SALT);
        GraphNet::random(self.hidden, self.rounds, &mut rng)
    }
}

const NET_SEED_SALT: u64 = 0x6e65_745f_696e_6974;

/// Linear anneal from `eps_start` at iteration 0 to `eps_end` at the last one.
pub fn epsilon_at(iter: usize, config: &SearchConfig) -> Result<f64> {
    if iter >= config.iterations {
        return Err(Error::OutOfRange(format!("iteration {iter} of {}", config.iterations)));
    }
    if config.iterations == 1 {
        return Ok(config.eps_start);
    }
    let t = iter as f64 / (config.iterations - 1) as f64;
    Ok(((1.0 - t) * config.eps_start + t * config.eps_end).clamp(config.eps_end, config.eps_start))
}

/// Standard Gumbel draw by inversion.
pub fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return -(-u.ln()).ln();
        }
    }
}

pub fn gumbel_perturb<R: Rng + ?Sized>(score: f64, scale: f64, rng: &mut R) -> f64 {
    if scale == 0.0 {
        return score;
    }
    score + scale * gumbel(rng)
}

/// One row of search progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Exploration rate; only GHS has one.
    pub eps: Option<f64>,
    pub best_score: f64,
    /// Designs evaluated so far.
    pub evals: usize,
    /// Value-net objective after retraining; only GHS has one.
    pub net_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchHistory {
    pub records: Vec<IterationRecord>,
}

impl SearchHistory {
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].best_score >= w[0].best_score)
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// Receives each iteration record as soon as it is final.
pub type Observer<'a> = dyn FnMut(&IterationRecord) -> Result<()> + 'a;

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: DesignGraph,
    pub best_score: f64,
    pub history: SearchHistory,
    /// GHS only.
    pub table: Option<LookupTable>,
    /// GHS only: the value network after the last retraining.
    pub net: Option<GraphNet>,
}

/// Best-so-far bookkeeping shared by the search loops; the first maximum wins ties.
#[derive(Debug, Default)]
pub(crate) struct Incumbent {
    best: Option<(DesignGraph, f64)>,
    evals: usize,
}

impl Incumbent {
    pub(crate) fn offer(&mut self, design: &DesignGraph, score: f64) {
        self.evals += 1;
        if self.best.as_ref().is_none_or(|(_, s)| score > *s) {
            self.best = Some((design.clone(), score));
        }
    }

    pub(crate) fn record(&self, iteration: usize, eps: Option<f64>, net_loss: Option<f64>) -> IterationRecord {
        IterationRecord {
            iteration,
            eps,
            best_score: self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1),
            evals: self.evals,
            net_loss,
        }
    }

    pub(crate) fn finish(
        self,
        history: SearchHistory,
        table: Option<LookupTable>,
        net: Option<GraphNet>,
    ) -> Result<SearchOutcome> {
        let (best, best_score) = self.best.ok_or(Error::EmptyBudget)?;
        Ok(SearchOutcome { best, best_score, history, table, net })
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::design::{FingertipType, PlacementMode};
    use crate::eval::Evaluator;
    use crate::grammar::GenParams;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Symmetric three-finger hands with three-link fingers, codes 1..=3 and
    /// one fingertip: 729 construction paths.
    pub fn planted_space() -> GenParams {
        GenParams {
            modes: vec![PlacementMode::Symmetric],
            radius_range_m: [0.05, 0.05],
            finger_counts: vec![3],
            joint_counts: vec![3],
            code_range: [1, 3],
            fingertips: vec![FingertipType::Standard],
            ..GenParams::default()
        }
    }

    /// Wraps an evaluator and counts trial evaluations.
    pub struct Counting<E> {
        pub inner: E,
        pub calls: AtomicUsize,
    }

    impl<E: Evaluator> Counting<E> {
        pub fn new(inner: E) -> Self {
            Counting { inner, calls: AtomicUsize::new(0) }
        }

        pub fn calls(&self) -> usize {
            self.calls.load(Ordering::SeqCst)
        }
    }

    impl<E: Evaluator> Evaluator for Counting<E> {
        fn id(&self) -> &str {
            self.inner.id()
        }

        fn trials(&self) -> usize {
            self.inner.trials()
        }

        fn seed(&self) -> u64 {
            self.inner.seed()
        }

        fn trial_score(&self, canonical: &DesignGraph, trial: usize) -> f64 {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.trial_score(canonical, trial)
        }
    }
}
