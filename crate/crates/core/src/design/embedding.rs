use super::{validate, DesignGraph, Violation, ACTION_DIM, ACTUATORS_PER_FINGER, EMBEDDING_DIM, MAX_CODE, MAX_LINKS};
use crate::error::{Error, Result};

/// Fixed-width structured encoding. Per finger slot: presence, then
/// `(code / 10, joint active)` for each of the three link positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphologyEmbedding {
    pub values: [f64; EMBEDDING_DIM],
}

const SLOT_WIDTH: usize = 1 + 2 * MAX_LINKS;

/// Like `validate`, but an empty hand is acceptable here (it embeds to zeros).
fn check(design: &DesignGraph) -> Result<()> {
    let v: Vec<Violation> = validate(design)
        .violations
        .into_iter()
        .filter(|x| *x != Violation::NoFingers)
        .collect();
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidDesign(v))
    }
}

pub fn structured_embedding(design: &DesignGraph) -> Result<MorphologyEmbedding> {
    check(design)?;
    let mut values = [0.0; EMBEDDING_DIM];
    for (i, f) in design.fingers.iter().enumerate() {
        if !f.is_present() {
            continue;
        }
        let slot = &mut values[i * SLOT_WIDTH..(i + 1) * SLOT_WIDTH];
        slot[0] = 1.0;
        for (j, link) in f.links.iter().enumerate() {
            slot[1 + 2 * j] = f64::from(link.code) / f64::from(MAX_CODE);
            slot[2 + 2 * j] = 1.0;
        }
    }
    Ok(MorphologyEmbedding { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionMask {
    pub bits: [bool; ACTION_DIM],
}

impl ActionMask {
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Actuator `k` of finger `i` lives at `4 * i + k`: yaw, then one flexion per joint.
pub fn action_mask(design: &DesignGraph) -> Result<ActionMask> {
    check(design)?;
    let mut bits = [false; ACTION_DIM];
    for (i, f) in design.fingers.iter().enumerate() {
        for k in 0..f.actuator_count() {
            bits[i * ACTUATORS_PER_FINGER + k] = true;
        }
    }
    Ok(ActionMask { bits })
}

/// Elementwise product with the mask; masked entries come out as exactly `0.0`.
pub fn apply_mask(raw_action: &[f64], mask: &ActionMask) -> Result<Vec<f64>> {
    if raw_action.len() != ACTION_DIM {
        return Err(Error::LengthMismatch { expected: ACTION_DIM, actual: raw_action.len() });
    }
    Ok(raw_action
        .iter()
        .zip(mask.bits)
        .map(|(&a, keep)| if keep { a } else { 0.0 })
        .collect())
}
