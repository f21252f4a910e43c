//! Graph Heuristic Search on the rotation surrogate.

use hand_codesign::eval::{evaluator, SurrogateParams};
use hand_codesign::grammar::GenParams;
use hand_codesign::search::{ghs_run, SearchConfig};

fn main() -> hand_codesign::Result<()> {
    let cfg = SearchConfig { iterations: 15, candidates: 16, seed: 3, ..SearchConfig::default() };
    let ev = evaluator("rotation", &SurrogateParams { trials: 16, ..SurrogateParams::default() })?;
    let out = ghs_run(&cfg, &GenParams::default(), ev.as_ref(), cfg.initial_net())?;
    for r in &out.history.records {
        println!(
            "iter {:>2}  eps {:.3}  best {:.4}  evals {:>3}  loss {:.4}",
            r.iteration,
            r.eps.unwrap_or(f64::NAN),
            r.best_score,
            r.evals,
            r.net_loss.unwrap_or(f64::NAN)
        );
    }
    let table = out.table.expect("GHS keeps its table");
    println!("table holds {} keys after {} updates", table.len(), table.updates());
    let codes: Vec<Vec<u8>> = out.best.fingers.iter().map(|f| f.links.iter().map(|l| l.code).collect()).collect();
    println!("best {:.4}: {:?} palm, codes {codes:?}", out.best_score, out.best.palm.mode);
    Ok(())
}
