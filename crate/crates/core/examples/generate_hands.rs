//! Sample hands from the grammar and print their structure.

use hand_codesign::design::{action_mask, canonical_key, structured_embedding};
use hand_codesign::grammar::{generate_hand, GenParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hand_codesign::Result<()> {
    let params = GenParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..5 {
        let d = generate_hand(&params, &mut rng)?;
        let key = canonical_key(&d)?;
        println!(
            "hand {i}: {:?} palm r={:.3} m, {} fingers, {} DOF, mask popcount {}, key {} bytes",
            d.palm.mode,
            d.palm.radius_m,
            d.finger_count(),
            d.total_dof(),
            action_mask(&d)?.popcount(),
            key.0.len()
        );
        for f in &d.fingers {
            let codes: Vec<u8> = f.links.iter().map(|l| l.code).collect();
            println!("  slot {:+.3} rad  links {codes:?}  tip {:?}", f.slot_angle_rad, f.fingertip);
        }
        let y = structured_embedding(&d)?;
        println!("  embedding {:?}", &y.values[..7]);
    }
    Ok(())
}
