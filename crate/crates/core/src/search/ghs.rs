use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::table::{construction_ancestors, update_lookup, LookupTable};
use super::{epsilon_at, gumbel_perturb, Incumbent, Observer, SearchConfig, SearchHistory, SearchOutcome};
use crate::design::{canonical_key, DesignGraph, DesignKey};
use crate::encoder::{train_final, Dataset, TrainConfig};
use crate::encoder::GraphNet;
use crate::error::{Error, Result};
use crate::eval::{evaluate_with, Evaluator};
use crate::grammar::{open_design, successor, successor_count, GenParams};

/// Root key of the sampled palm followed by the successor index chosen for
/// each finger in slot order.
pub type ConstructionPath = (DesignKey, Vec<u32>);

/// Anything that can rank partial designs during construction.
pub trait ValueModel {
    fn value(&self, design: &DesignGraph) -> Result<f64>;
}

/// Ranks by the standardized output; Gumbel noise is added in those units.
impl ValueModel for GraphNet {
    fn value(&self, design: &DesignGraph) -> Result<f64> {
        self.predict_standardized(design)
    }
}

impl<F: Fn(&DesignGraph) -> Result<f64>> ValueModel for F {
    fn value(&self, design: &DesignGraph) -> Result<f64> {
        self(design)
    }
}

fn construct<R: Rng + ?Sized>(
    model: &dyn ValueModel,
    config: &SearchConfig,
    gen: &GenParams,
    eps: f64,
    rng: &mut R,
) -> Result<(DesignGraph, ConstructionPath)> {
    let mut design = open_design(gen, rng)?;
    let root = canonical_key(&design)?;
    let options = successor_count(gen);
    let mut choices = Vec::with_capacity(design.finger_count());
    for finger in 0..design.finger_count() {
        let choice = if rng.random::<f64>() < eps {
            rng.random_range(0..options)
        } else {
            let mut best = (f64::NEG_INFINITY, 0);
            for c in 0..options {
                let v = model.value(&successor(&design, finger, c, gen)?)?;
                let v = gumbel_perturb(v, config.gumbel_scale, rng);
                if v > best.0 {
                    best = (v, c);
                }
            }
            best.1
        };
        design = successor(&design, finger, choice, gen)?;
        choices.push(choice as u32);
    }
    Ok((design, (root, choices)))
}

/// Builds `config.candidates` complete designs by epsilon-greedy expansion.
/// Paths already in `tabu` are resampled up to `max_retries` times, after
/// which a purely random construction is accepted.
pub fn propose_candidates<R: Rng + ?Sized>(
    model: &dyn ValueModel,
    config: &SearchConfig,
    gen: &GenParams,
    eps: f64,
    tabu: &mut HashSet<ConstructionPath>,
    rng: &mut R,
) -> Result<Vec<DesignGraph>> {
    let mut out = Vec::with_capacity(config.candidates);
    'candidates: for k in 0..config.candidates {
        for _ in 0..config.max_retries {
            let (design, path) = construct(model, config, gen, eps, rng)?;
            if !config.tabu || tabu.insert(path) {
                out.push(design);
                continue 'candidates;
            }
        }
        log::warn!("candidate {k}: tabu exhausted after {} attempts, accepting a random design", config.max_retries);
        let (design, path) = construct(model, config, gen, 1.0, rng)?;
        tabu.insert(path);
        out.push(design);
    }
    Ok(out)
}

fn replay_set<R: Rng + ?Sized>(table: &LookupTable, cap: usize, rng: &mut R) -> Result<Dataset> {
    let entries: Vec<_> = table.iter().map(|(_, e)| e).collect();
    let mut data = Dataset::default();
    if cap == 0 || entries.len() <= cap {
        for e in entries {
            data.push(&e.design, e.score)?;
        }
    } else {
        let mut picked = index::sample(rng, entries.len(), cap).into_vec();
        picked.sort_unstable();
        for i in picked {
            data.push(&entries[i].design, entries[i].score)?;
        }
    }
    Ok(data)
}

pub fn ghs_run(config: &SearchConfig, gen: &GenParams, evaluator: &dyn Evaluator, net: GraphNet) -> Result<SearchOutcome> {
    ghs_run_observed(config, gen, evaluator, net, &mut |_| Ok(()))
}

/// Graph Heuristic Search. Each iteration proposes candidates, evaluates
/// them, max-updates the lookup table for every candidate and its
/// construction prefixes, then retrains the value net warm on the table.
pub fn ghs_run_observed(
    config: &SearchConfig,
    gen: &GenParams,
    evaluator: &dyn Evaluator,
    mut net: GraphNet,
    observer: &mut Observer,
) -> Result<SearchOutcome> {
    config.check()?;
    gen.check()?;
    if config.budget() == 0 {
        return Err(Error::EmptyBudget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut table = LookupTable::new();
    let mut incumbent = Incumbent::default();
    let mut history = SearchHistory::default();
    for it in 0..config.iterations {
        let eps = epsilon_at(it, config)?;
        let mut tabu = HashSet::new();
        let candidates = propose_candidates(&net, config, gen, eps, &mut tabu, &mut rng)?;
        let records = evaluate_with(&candidates, evaluator, config.parallelism)?;
        for (d, r) in candidates.iter().zip(&records) {
            incumbent.offer(d, r.score);
            update_lookup(&mut table, d, &construction_ancestors(d), r.score)?;
        }
        let data = replay_set(&table, config.replay_cap, &mut rng)?;
        let train_cfg = TrainConfig { seed: config.train.seed ^ config.seed.rotate_left(17) ^ it as u64, ..config.train.clone() };
        let loss = train_final(&mut net, &data, &train_cfg)?;
        let record = incumbent.record(it, Some(eps), Some(loss));
        log::debug!(
            "ghs iteration {it}: eps {eps:.3} best {:.6} table {} loss {:?}",
            record.best_score,
            table.len(),
            record.net_loss
        );
        observer(&record)?;
        history.records.push(record);
    }
    incumbent.finish(history, Some(table), Some(net))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{FingertipType, PlacementMode};
    use crate::eval::{evaluator, synthetic_oracle, OracleEvaluator, ParamVector, RotationEvaluator, SurrogateParams};
    use crate::search::test_support::{planted_space, Counting};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn small_config(seed: u64) -> SearchConfig {
        SearchConfig {
            iterations: 4,
            candidates: 6,
            seed,
            train: TrainConfig { epochs: 5, ..TrainConfig::default() },
            ..SearchConfig::default()
        }
    }

    fn three_option_space() -> GenParams {
        GenParams {
            modes: vec![PlacementMode::Symmetric],
            finger_counts: vec![1],
            joint_counts: vec![2],
            code_range: [4, 4],
            fingertips: vec![FingertipType::Standard, FingertipType::Wedged, FingertipType::Rounded],
            ..GenParams::default()
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let gen = three_option_space();
        let cfg = SearchConfig { candidates: 10_000, tabu: false, ..SearchConfig::default() };
        let net = GraphNet::zeros(4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let out = propose_candidates(&net, &cfg, &gen, 1.0, &mut HashSet::new(), &mut rng).unwrap();
        let mut counts = [0.0f64; 3];
        for d in &out {
            counts[d.fingers[0].fingertip.index()] += 1.0;
        }
        let e = out.len() as f64 / 3.0;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        let p = 1.0 - ChiSquared::new(2.0).unwrap().cdf(chi2);
        assert!(p > 0.01, "counts {counts:?} p {p}");
    }

    #[test]
    fn greedy_picks_higher_value() {
        let gen = GenParams {
            joint_counts: vec![2, 3],
            code_range: [2, 2],
            fingertips: vec![FingertipType::Standard],
            ..three_option_space()
        };
        assert_eq!(successor_count(&gen), 2);
        let planted = ParamVector::of_targets(&[crate::eval::FingerTarget {
            joint_count: 3,
            g1: 2,
            g2: 2,
            fingertip: FingertipType::Standard,
        }])
        .unwrap();
        let model = |d: &DesignGraph| synthetic_oracle(d, &planted, 0.5);
        let cfg = SearchConfig { candidates: 50, tabu: false, gumbel_scale: 0.0, ..SearchConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = propose_candidates(&model, &cfg, &gen, 0.0, &mut HashSet::new(), &mut rng).unwrap();
        assert!(out.iter().all(|d| d.fingers[0].joint_count == 3));
    }

    #[test]
    fn batch_paths_are_unique() {
        let gen = planted_space();
        let cfg = SearchConfig { candidates: 40, ..SearchConfig::default() };
        let net = GraphNet::zeros(4, 1);
        let mut tabu = HashSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = propose_candidates(&net, &cfg, &gen, 0.3, &mut tabu, &mut rng).unwrap();
        assert_eq!(out.len(), 40);
        assert_eq!(tabu.len(), 40);
        assert!(out.iter().all(|d| crate::design::validate_complete(d).is_ok()));
    }

    #[test]
    fn exhausted_tabu_falls_back() {
        let gen = GenParams { fingertips: vec![FingertipType::Standard], ..three_option_space() };
        assert_eq!(successor_count(&gen), 1);
        let cfg = SearchConfig { candidates: 3, max_retries: 2, ..SearchConfig::default() };
        let net = GraphNet::zeros(4, 1);
        let out =
            propose_candidates(&net, &cfg, &gen, 0.0, &mut HashSet::new(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn deterministic_and_monotone() {
        let gen = planted_space();
        let ev = OracleEvaluator::new(&SurrogateParams::default()).unwrap();
        let cfg = small_config(3);
        let a = ghs_run(&cfg, &gen, &ev, cfg.initial_net()).unwrap();
        let b = ghs_run(&cfg, &gen, &ev, cfg.initial_net()).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.best, b.best);
        assert!(a.history.is_monotone());
        assert_eq!(a.history.records.len(), 4);
        assert_eq!(a.history.last().unwrap().evals, 24);
        let table = a.table.unwrap();
        assert_eq!(table.best_complete().unwrap().1, a.best_score);
        assert!(crate::design::validate_complete(&a.best).is_ok());
    }

    #[test]
    fn budget_accounting() {
        let params = SurrogateParams { trials: 3, ..SurrogateParams::default() };
        let ev = Counting::new(RotationEvaluator::new(params));
        let cfg = small_config(1);
        ghs_run(&cfg, &GenParams::default(), &ev, cfg.initial_net()).unwrap();
        assert_eq!(ev.calls(), cfg.iterations * cfg.candidates * 3);
    }

    #[test]
    fn observer_errors_stop_the_run() {
        let gen = planted_space();
        let ev = evaluator("oracle", &SurrogateParams::default()).unwrap();
        let cfg = small_config(2);
        let mut seen = 0;
        let res = ghs_run_observed(&cfg, &gen, ev.as_ref(), cfg.initial_net(), &mut |r| {
            seen += 1;
            if r.iteration == 1 {
                Err(Error::Config("stop".into()))
            } else {
                Ok(())
            }
        });
        assert!(res.is_err());
        assert_eq!(seen, 2);
    }

    #[test]
    fn empty_budget() {
        let ev = evaluator("oracle", &SurrogateParams::default()).unwrap();
        let cfg = SearchConfig { iterations: 0, ..SearchConfig::default() };
        assert!(matches!(ghs_run(&cfg, &planted_space(), ev.as_ref(), cfg.initial_net()), Err(Error::EmptyBudget)));
    }
}
