//! GHS against random search and MCTS at the same evaluation budget.

use hand_codesign::design::{FingertipType, PlacementMode};
use hand_codesign::eval::{evaluator, SurrogateParams};
use hand_codesign::grammar::GenParams;
use hand_codesign::search::{ghs_run, mcts_run, random_search, SearchConfig};

fn main() -> hand_codesign::Result<()> {
    let gen = GenParams {
        modes: vec![PlacementMode::Symmetric],
        radius_range_m: [0.05, 0.05],
        finger_counts: vec![3],
        joint_counts: vec![3],
        code_range: [1, 10],
        fingertips: vec![FingertipType::Standard],
        ..GenParams::default()
    };
    let ev = evaluator("oracle", &SurrogateParams::default())?;
    println!("seed      ghs   random     mcts");
    for seed in 0..5 {
        let cfg = SearchConfig { iterations: 20, candidates: 16, seed, ..SearchConfig::default() };
        let g = ghs_run(&cfg, &gen, ev.as_ref(), cfg.initial_net())?.best_score;
        let r = random_search(&cfg, &gen, ev.as_ref())?.best_score;
        let m = mcts_run(&cfg, &gen, ev.as_ref())?.best_score;
        println!("{seed:>4} {g:>8.4} {r:>8.4} {m:>8.4}");
    }
    Ok(())
}
