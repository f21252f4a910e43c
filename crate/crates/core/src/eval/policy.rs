//! Stub control policies and action masking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kinematics::Vec3;
use crate::design::{action_mask, apply_mask, structured_embedding, DesignGraph, MorphologyEmbedding, ACTION_DIM, EMBEDDING_DIM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectPose {
    pub position: Vec3,
    /// Unit quaternion `(w, x, y, z)`.
    pub orientation: [f64; 4],
}

impl Default for ObjectPose {
    fn default() -> Self {
        ObjectPose { position: [0.0; 3], orientation: [1.0, 0.0, 0.0, 0.0] }
    }
}

/// Placeholder for a trained policy: maps `(q, object pose, embedding)` to a
/// raw action of length [`ACTION_DIM`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StubPolicy {
    Zero,
    /// `tanh` of a fixed random affine map of the state.
    SeededRandom { seed: u64 },
}

const STATE_DIM: usize = ACTION_DIM + 7 + EMBEDDING_DIM;

impl StubPolicy {
    pub fn act(&self, q: &[f64], pose: &ObjectPose, y: &MorphologyEmbedding) -> Vec<f64> {
        match *self {
            StubPolicy::Zero => vec![0.0; ACTION_DIM],
            StubPolicy::SeededRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let state: Vec<f64> = q
                    .iter()
                    .chain(&pose.position)
                    .chain(&pose.orientation)
                    .chain(&y.values)
                    .copied()
                    .collect();
                debug_assert_eq!(state.len(), STATE_DIM);
                (0..ACTION_DIM)
                    .map(|_| {
                        let bias: f64 = rng.random_range(-1.0..1.0);
                        let z: f64 = state.iter().map(|s| s * rng.random_range(-1.0..1.0)).sum();
                        (z + bias).tanh()
                    })
                    .collect()
            }
        }
    }
}

/// One control step: the policy's raw action with non-existent actuators zeroed.
pub fn masked_policy_step(q: &[f64], pose: &ObjectPose, design: &DesignGraph, policy: &StubPolicy) -> Result<Vec<f64>> {
    if q.len() != ACTION_DIM {
        return Err(Error::LengthMismatch { expected: ACTION_DIM, actual: q.len() });
    }
    let y = structured_embedding(design)?;
    let raw = policy.act(q, pose, &y);
    apply_mask(&raw, &action_mask(design)?)
}
