//! Planted-optimum oracle for validating search.

use super::{Evaluator, FingerTarget, SurrogateParams};
use crate::design::{canonical_form, validate, DesignGraph, FingerSpec, PlacementMode, MAX_FINGERS};
use crate::error::{Error, Result};

/// Per-finger grammar parameters `(joint count, g1, g2, fingertip)`; `None`
/// marks an absent or not yet finalized finger.
type FingerParams = Option<(u8, u8, u8, usize)>;

/// Grammar-parameter vector of a hand, padded to the finger maximum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamVector {
    pub fingers: [FingerParams; MAX_FINGERS],
    pub finger_count: usize,
}

fn finger_params(f: &FingerSpec) -> FingerParams {
    f.is_present().then(|| (f.joint_count, f.g1, f.g2, f.fingertip.index()))
}

impl ParamVector {
    /// Parameters of the canonical form; open fingers count as absent.
    pub fn of_design(design: &DesignGraph) -> ParamVector {
        let canon = canonical_form(design);
        let mut fingers = [None; MAX_FINGERS];
        for (slot, f) in fingers.iter_mut().zip(&canon.fingers) {
            *slot = finger_params(f);
        }
        ParamVector { fingers, finger_count: canon.fingers.len() }
    }

    pub fn of_targets(targets: &[FingerTarget]) -> Result<ParamVector> {
        if targets.is_empty() || targets.len() > MAX_FINGERS {
            return Err(Error::Config(format!("oracle target needs 1..={MAX_FINGERS} fingers")));
        }
        let mut fingers = [None; MAX_FINGERS];
        for (slot, t) in fingers.iter_mut().zip(targets) {
            *slot = (t.joint_count > 0).then_some((t.joint_count, t.g1, t.g2, t.fingertip.index()));
        }
        Ok(ParamVector { fingers, finger_count: targets.len() })
    }

    /// Finger entries sorted the way symmetric canonical forms order fingers.
    fn sorted(&self) -> ParamVector {
        let mut v = self.clone();
        let n = v.finger_count.min(MAX_FINGERS);
        v.fingers[..n].sort_by_key(|f| match f {
            Some(p) => (0, *p),
            None => (1, (0, 0, 0, 0)),
        });
        v
    }

    /// L1 distance over codes, joint counts, presence and finger count, plus
    /// one per fingertip mismatch.
    pub fn distance(&self, other: &ParamVector) -> f64 {
        let d = |a: u8, b: u8| f64::from(a.abs_diff(b));
        let fingers: f64 = self
            .fingers
            .iter()
            .zip(&other.fingers)
            .map(|(a, b)| match (a, b) {
                (None, None) => 0.0,
                (Some((j, g1, g2, _)), None) | (None, Some((j, g1, g2, _))) => 1.0 + f64::from(*j + *g1 + *g2) + 1.0,
                (Some((ja, a1, a2, ta)), Some((jb, b1, b2, tb))) => {
                    d(*ja, *jb) + d(*a1, *b1) + d(*a2, *b2) + f64::from(u8::from(ta != tb))
                }
            })
            .sum();
        fingers + self.finger_count.abs_diff(other.finger_count) as f64
    }
}

/// `exp(-scale * distance)` between the design's parameters and the planted
/// ones; exactly 1 at the planted optimum.
pub fn synthetic_oracle(design: &DesignGraph, planted: &ParamVector, scale: f64) -> Result<f64> {
    validate(design).into_result()?;
    let own = ParamVector::of_design(design);
    let target = if design.palm.mode == PlacementMode::Symmetric { planted.sorted() } else { planted.clone() };
    Ok((-scale * own.distance(&target)).exp())
}

#[derive(Debug, Clone)]
pub struct OracleEvaluator {
    planted: ParamVector,
    scale: f64,
    seed: u64,
}

impl OracleEvaluator {
    pub fn new(params: &SurrogateParams) -> Result<Self> {
        Ok(Self {
            planted: ParamVector::of_targets(&params.oracle_target)?,
            scale: params.oracle_scale,
            seed: params.seed,
        })
    }
}

impl Evaluator for OracleEvaluator {
    fn id(&self) -> &str {
        "oracle"
    }

    fn trials(&self) -> usize {
        1
    }

    fn seed(&self) -> u64 {
        self.seed
    }

    fn trial_score(&self, canonical: &DesignGraph, _trial: usize) -> f64 {
        synthetic_oracle(canonical, &self.planted, self.scale).unwrap_or(0.0)
    }
}
