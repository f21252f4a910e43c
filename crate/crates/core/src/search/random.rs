use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Incumbent, Observer, SearchConfig, SearchHistory, SearchOutcome};
use crate::error::{Error, Result};
use crate::eval::{evaluate_with, Evaluator};
use crate::grammar::{generate_hand, GenParams};

pub fn random_search(config: &SearchConfig, gen: &GenParams, evaluator: &dyn Evaluator) -> Result<SearchOutcome> {
    random_search_observed(config, gen, evaluator, &mut |_| Ok(()))
}

/// Independent samples from the generator, evaluated in batches of
/// `config.candidates`.
pub fn random_search_observed(
    config: &SearchConfig,
    gen: &GenParams,
    evaluator: &dyn Evaluator,
    observer: &mut Observer,
) -> Result<SearchOutcome> {
    config.check()?;
    gen.check()?;
    if config.budget() == 0 {
        return Err(Error::EmptyBudget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut incumbent = Incumbent::default();
    let mut history = SearchHistory::default();
    for it in 0..config.iterations {
        let batch = (0..config.candidates).map(|_| generate_hand(gen, &mut rng)).collect::<Result<Vec<_>>>()?;
        let records = evaluate_with(&batch, evaluator, config.parallelism)?;
        for (d, r) in batch.iter().zip(&records) {
            incumbent.offer(d, r.score);
        }
        let record = incumbent.record(it, None, None);
        observer(&record)?;
        history.records.push(record);
    }
    incumbent.finish(history, None, None)
}
