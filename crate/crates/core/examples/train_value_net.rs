//! Fit the design value network to surrogate scores and check its gradients.

use hand_codesign::encoder::{grad_check, train, Dataset, GraphNet, TrainConfig};
use hand_codesign::eval::{evaluator, SurrogateParams};
use hand_codesign::grammar::{generate_hand, GenParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hand_codesign::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ev = evaluator("rotation", &SurrogateParams { trials: 8, ..SurrogateParams::default() })?;
    let hands: Vec<_> = (0..64).map(|_| generate_hand(&GenParams::default(), &mut rng)).collect::<Result<_, _>>()?;
    let scores: Vec<f64> = hands.iter().map(|h| ev.score(h)).collect::<Result<_, _>>()?;
    let (fit, held) = hands.split_at(48);
    let data = Dataset::from_designs(fit.iter().zip(scores.iter().copied()))?;

    let mut net = GraphNet::new_default(&mut rng);
    println!("gradient check: max relative error {:.2e}", grad_check(&net, &hands[0], 0.5)?);
    let cfg = TrainConfig { learning_rate: 0.1, epochs: 2000, batch_size: 16, ..TrainConfig::default() };
    let trace = train(&mut net, &data, &cfg)?;
    println!("objective {:.4} -> {:.4}", trace[0], trace[trace.len() - 1]);
    for (h, s) in held.iter().zip(&scores[48..]).take(8) {
        println!("held out: score {s:.4}  predicted {:.4}", net.predict_value(h)?);
    }
    Ok(())
}
