//! Write a generated hand as a design file and a kinematic tree.

use hand_codesign::grammar::{generate_hand, GenParams};
use hand_codesign::io::{export_kinematic_tree, read_design_file, write_design_file, DesignDocument};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hand_codesign::Result<()> {
    let params = GenParams::default();
    let hand = generate_hand(&params, &mut ChaCha8Rng::seed_from_u64(4))?;
    let dir = std::env::temp_dir().join("hand-codesign-export");
    std::fs::create_dir_all(&dir).map_err(|e| hand_codesign::Error::io(&dir, e))?;
    let path = dir.join("hand.json");
    write_design_file(&path, &DesignDocument::new(&hand).with_generator(&params))?;
    let back = read_design_file(&path)?.to_design()?;
    let (urdf, summary) = export_kinematic_tree(&back)?;
    println!("{} links, {} joints", summary.links, summary.joints);
    println!("{urdf}");
    Ok(())
}
