//! Deterministic surrogate task evaluators.
//!
//! Every evaluator scores the canonical form of a design, averaged over a
//! fixed ladder of perturbation trials: trial `t` draws from the ChaCha
//! stream `t` of the evaluation seed. Scores are therefore pure functions of
//! `(design, params, seed)` and identical for equivalent designs.

pub mod kinematics;
mod oracle;
mod policy;
mod surrogate;
pub mod wrench;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{canonical_form, canonical_key, validate_complete, DesignGraph, DesignKey, FingertipType};
use crate::error::{Error, Result};

pub use kinematics::{forward_kinematics, joint_limits, reach_interval, SlotPose, Vec3};
pub use oracle::{synthetic_oracle, OracleEvaluator, ParamVector};
pub use policy::{masked_policy_step, ObjectPose, StubPolicy};
pub use surrogate::{grasp_score, rotation_score, trial_scene, GraspEvaluator, RotationEvaluator, Scene};
pub use wrench::{force_closure, force_closure_with, ClosureResult, Contact};

pub const EVALUATOR_IDS: [&str; 3] = ["rotation", "grasp", "oracle"];

/// Planted optimum of the synthetic oracle, one entry per finger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerTarget {
    pub joint_count: u8,
    pub g1: u8,
    pub g2: u8,
    pub fingertip: FingertipType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateParams {
    pub object_radius_m: f64,
    /// Object centre height above the palm centroid.
    pub object_height_m: f64,
    pub friction: f64,
    pub torque_limit_nm: f64,
    pub cone_edges: usize,
    /// Torsional friction radius relative to the contact distance scale.
    pub torsion_ratio: f64,
    pub size_scale: [f64; 2],
    pub mass_scale: [f64; 2],
    pub position_noise_m: f64,
    pub trials: usize,
    /// Base of the per-trial seed ladder.
    pub seed: u64,
    /// Weight of the palm-oversize penalty in the rotation score.
    pub palm_penalty: f64,
    /// Grasp bonus per unit fraction of thin fingertips in contact.
    pub thin_bonus: f64,
    /// Multiplies every link length before kinematic analysis.
    pub link_length_scale: f64,
    pub oracle_target: Vec<FingerTarget>,
    /// Distance multiplier inside the oracle's `exp(-d)`.
    pub oracle_scale: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        let t = |g1, g2| FingerTarget { joint_count: 3, g1, g2, fingertip: FingertipType::Standard };
        SurrogateParams {
            object_radius_m: 0.03,
            object_height_m: 0.05,
            friction: 0.8,
            torque_limit_nm: 0.35,
            cone_edges: 4,
            torsion_ratio: wrench::DEFAULT_TORSION_RATIO,
            size_scale: [0.7, 1.3],
            mass_scale: [0.9, 1.3],
            position_noise_m: 0.01,
            trials: 128,
            seed: 0,
            palm_penalty: 0.5,
            thin_bonus: 0.1,
            link_length_scale: 1.0,
            oracle_target: vec![t(3, 1), t(1, 2), t(2, 3)],
            oracle_scale: 0.5,
        }
    }
}

impl SurrogateParams {
    pub fn check(&self) -> Result<()> {
        let range_ok = |r: [f64; 2]| r[0] > 0.0 && r[0] <= r[1] && r[1].is_finite();
        let ok = self.object_radius_m > 0.0
            && self.object_height_m.is_finite()
            && self.friction > 0.0
            && self.friction.is_finite()
            && self.torque_limit_nm > 0.0
            && self.cone_edges >= 3
            && self.torsion_ratio >= 0.0
            && range_ok(self.size_scale)
            && range_ok(self.mass_scale)
            && self.position_noise_m >= 0.0
            && self.trials > 0
            && self.palm_penalty >= 0.0
            && self.thin_bonus >= 0.0
            && self.link_length_scale > 0.0
            && self.oracle_scale > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("surrogate parameters out of range".into()))
        }
    }

    /// Deterministic generator for trial `trial`.
    pub fn trial_rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }
}

pub(crate) fn sample_range<R: Rng + ?Sized>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub key: DesignKey,
    pub evaluator_id: String,
    pub seed: u64,
    pub score: f64,
}

/// A task score computed from independent trials on the canonical design.
pub trait Evaluator: Send + Sync {
    fn id(&self) -> &str;
    fn trials(&self) -> usize;
    fn seed(&self) -> u64;
    /// Score of one trial for a canonical, complete design.
    fn trial_score(&self, canonical: &DesignGraph, trial: usize) -> f64;

    fn score(&self, design: &DesignGraph) -> Result<f64> {
        validate_complete(design).into_result()?;
        let canon = canonical_form(design);
        let n = self.trials();
        let total: f64 = (0..n).map(|t| self.trial_score(&canon, t)).sum();
        Ok(total / n as f64)
    }
}

pub fn evaluator(id: &str, params: &SurrogateParams) -> Result<Box<dyn Evaluator>> {
    params.check()?;
    match id {
        "rotation" => Ok(Box::new(RotationEvaluator::new(params.clone()))),
        "grasp" => Ok(Box::new(GraspEvaluator::new(params.clone()))),
        "oracle" => Ok(Box::new(OracleEvaluator::new(params)?)),
        other => Err(Error::UnknownEvaluator(other.to_string())),
    }
}

/// Scores `designs` with up to `parallelism` threads; output order matches input.
pub fn evaluate_with(
    designs: &[DesignGraph],
    evaluator: &dyn Evaluator,
    parallelism: usize,
) -> Result<Vec<EvaluationRecord>> {
    let record = |d: &DesignGraph| -> Result<EvaluationRecord> {
        let score = evaluator.score(d)?;
        Ok(EvaluationRecord {
            key: canonical_key(d)?,
            evaluator_id: evaluator.id().to_string(),
            seed: evaluator.seed(),
            score,
        })
    };
    if parallelism <= 1 || designs.len() <= 1 {
        return designs.iter().map(record).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| designs.par_iter().map(record).collect())
}

pub fn evaluate_batch(
    designs: &[DesignGraph],
    evaluator_id: &str,
    params: &SurrogateParams,
    parallelism: usize,
) -> Result<Vec<EvaluationRecord>> {
    let ev = evaluator(evaluator_id, params)?;
    evaluate_with(designs, ev.as_ref(), parallelism)
}
