//! Score one hand with every registered evaluator, and show that equivalent
//! hands score identically.

use hand_codesign::eval::{evaluate_batch, evaluator, SurrogateParams, EVALUATOR_IDS};
use hand_codesign::grammar::{generate_hand, GenParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hand_codesign::Result<()> {
    let params = SurrogateParams { trials: 16, ..SurrogateParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let hand = generate_hand(&GenParams::default(), &mut rng)?;
    let rotated = hand.with_rotated_palm(0.9);
    for id in EVALUATOR_IDS {
        let ev = evaluator(id, &params)?;
        println!("{id:<9} {:.6}  rotated palm {:.6}", ev.score(&hand)?, ev.score(&rotated)?);
    }

    let batch: Vec<_> = (0..32).map(|_| generate_hand(&GenParams::default(), &mut rng)).collect::<Result<_, _>>()?;
    let serial = evaluate_batch(&batch, "rotation", &params, 1)?;
    let parallel = evaluate_batch(&batch, "rotation", &params, 4)?;
    let same = serial.iter().zip(&parallel).all(|(a, b)| a.score.to_bits() == b.score.to_bits());
    let best = serial.iter().map(|r| r.score).fold(f64::NEG_INFINITY, f64::max);
    println!("batch of {}: best {best:.4}, identical across thread counts: {same}", batch.len());
    Ok(())
}
