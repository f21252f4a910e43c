//! Procedural hand generation.
//!
//! Generation runs in two stages driven by one rng stream: the palm layout
//! (finger count, radius, slot angles, grip-point hull) first, then every
//! finger in slot order.

use std::f64::consts::{PI, TAU};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{
    DesignGraph, FingerSpec, FingertipType, PalmLayout, PlacementMode, MAX_CODE, MAX_FINGERS, MIN_CODE,
    PALM_THICKNESS_M,
};
use crate::error::{Error, Result};
use crate::geometry::{self, Point2};

/// Angular span covered by the four clustered slots of an anthropomorphic palm.
pub const ANTHRO_CLUSTER_SPAN_RAD: f64 = 1.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    /// Placement modes to draw from, uniformly.
    pub modes: Vec<PlacementMode>,
    pub radius_range_m: [f64; 2],
    /// Discretization of the palm circle for asymmetric placement.
    pub slot_count: usize,
    pub min_sep_rad: f64,
    pub finger_counts: Vec<usize>,
    pub joint_counts: Vec<u8>,
    pub code_range: [u8; 2],
    pub fingertips: Vec<FingertipType>,
    pub thickness_m: f64,
    /// Half side of the grip-point square around each motor position.
    pub grip_half_size_m: f64,
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            modes: PlacementMode::ALL.to_vec(),
            radius_range_m: [0.04, 0.08],
            slot_count: 12,
            min_sep_rad: 0.4,
            finger_counts: vec![3, 4, 5],
            joint_counts: vec![2, 3],
            code_range: [MIN_CODE, MAX_CODE],
            fingertips: FingertipType::ALL.to_vec(),
            thickness_m: PALM_THICKNESS_M,
            grip_half_size_m: 0.006,
            max_attempts: 1000,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn codes(&self) -> std::ops::RangeInclusive<u8> {
        self.code_range[0]..=self.code_range[1]
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Generation(m.to_string()));
        if self.modes.is_empty() {
            return bad("no placement mode enabled");
        }
        let [lo, hi] = self.radius_range_m;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("radius range must satisfy 0 < lo <= hi");
        }
        if self.finger_counts.is_empty()
            || self.finger_counts.iter().any(|&f| f == 0 || f > MAX_FINGERS)
        {
            return bad("finger counts must be non-empty and within 1..=5");
        }
        if self.joint_counts.is_empty() || self.joint_counts.iter().any(|j| !matches!(j, 2 | 3)) {
            return bad("joint counts must be non-empty and within {2,3}");
        }
        let [c0, c1] = self.code_range;
        if !(MIN_CODE <= c0 && c0 <= c1 && c1 <= MAX_CODE) {
            return bad("code range must lie within [1,10]");
        }
        if self.fingertips.is_empty() {
            return bad("no fingertip enabled");
        }
        if !(self.thickness_m > 0.0) {
            return bad("thickness must be positive");
        }
        if !(self.grip_half_size_m > 0.0) {
            return bad("grip point size must be positive");
        }
        if !(self.min_sep_rad >= 0.0) {
            return bad("minimum separation must be non-negative");
        }
        let max_f = *self.finger_counts.iter().max().unwrap_or(&0);
        if self.min_sep_rad * max_f as f64 > TAU {
            return Err(Error::Generation(format!(
                "minimum slot separation {:.4} rad x {max_f} fingers exceeds 2*pi",
                self.min_sep_rad
            )));
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive");
        }
        Ok(())
    }
}

fn min_circular_gap(sorted: &[f64]) -> f64 {
    if sorted.len() < 2 {
        return TAU;
    }
    let mut gap = sorted[0] + TAU - sorted[sorted.len() - 1];
    for w in sorted.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    gap
}

fn grip_points(radius: f64, slots: &[f64], half: f64) -> Vec<Point2> {
    let mut pts = Vec::with_capacity(4 * slots.len());
    for &a in slots {
        let c = Point2::new(radius * a.cos(), radius * a.sin());
        for (dr, dt) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            let off = Point2::new(half * dr, half * dt).rotated(a);
            pts.push(Point2::new(c.x + off.x, c.y + off.y));
        }
    }
    pts
}

fn separation_error(min_sep: f64, got: f64) -> Error {
    Error::Generation(format!("slot separation {got:.4} rad below minimum {min_sep:.4} rad"))
}

pub fn sample_palm_layout<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Result<PalmLayout> {
    params.check()?;
    let mode = *params.modes.choose(rng).expect("checked non-empty");
    let f = *params.finger_counts.choose(rng).expect("checked non-empty");
    let [lo, hi] = params.radius_range_m;
    let radius = if lo < hi { rng.random_range(lo..=hi) } else { lo };

    let slots: Vec<f64> = match mode {
        PlacementMode::Symmetric => {
            let step = TAU / f as f64;
            if f > 1 && step + 1e-12 < params.min_sep_rad {
                return Err(separation_error(params.min_sep_rad, step));
            }
            (0..f).map(|i| step * i as f64).collect()
        }
        PlacementMode::Asymmetric => {
            if params.slot_count < f {
                return Err(Error::Generation(format!(
                    "{f} fingers do not fit on {} slots",
                    params.slot_count
                )));
            }
            let step = TAU / params.slot_count as f64;
            let mut found = None;
            for _ in 0..params.max_attempts {
                let mut idx = rand::seq::index::sample(rng, params.slot_count, f).into_vec();
                idx.sort_unstable();
                let angles: Vec<f64> = idx.iter().map(|&i| step * i as f64).collect();
                if min_circular_gap(&angles) + 1e-12 >= params.min_sep_rad {
                    found = Some(angles);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Generation(format!(
                    "minimum slot separation {:.4} rad not met after {} attempts",
                    params.min_sep_rad, params.max_attempts
                ))
            })?
        }
        PlacementMode::Anthropomorphic => {
            let cluster = f - 1;
            let mut angles: Vec<f64> = match cluster {
                0 => Vec::new(),
                1 => vec![0.0],
                k => (0..k)
                    .map(|i| -ANTHRO_CLUSTER_SPAN_RAD / 2.0 + ANTHRO_CLUSTER_SPAN_RAD * i as f64 / (k - 1) as f64)
                    .collect(),
            };
            angles.push(PI);
            let mut sorted: Vec<f64> = angles.iter().map(|a| a.rem_euclid(TAU)).collect();
            sorted.sort_by(f64::total_cmp);
            let gap = min_circular_gap(&sorted);
            if gap + 1e-12 < params.min_sep_rad {
                return Err(separation_error(params.min_sep_rad, gap));
            }
            angles
        }
    };

    let grip = grip_points(radius, &slots, params.grip_half_size_m);
    let hull = geometry::convex_hull_2d(&grip)?;
    Ok(PalmLayout {
        mode,
        radius_m: radius,
        slot_angles: slots,
        grip_points: grip,
        hull,
        thickness_m: params.thickness_m,
    })
}

/// Draws one finalized finger at slot angle 0; callers place it on a slot.
pub fn sample_finger<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> FingerSpec {
    let joints = *params.joint_counts.choose(rng).expect("joint set non-empty");
    let g1 = rng.random_range(params.codes());
    let g2 = rng.random_range(params.codes());
    let tip = *params.fingertips.choose(rng).expect("fingertip set non-empty");
    FingerSpec::new(0.0, joints, g1, g2, tip)
}

pub fn generate_hand<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Result<DesignGraph> {
    let palm = sample_palm_layout(params, rng)?;
    let fingers = palm
        .slot_angles
        .iter()
        .map(|&a| FingerSpec { slot_angle_rad: a, ..sample_finger(params, rng) })
        .collect();
    let design = DesignGraph { palm, fingers };
    debug_assert!(crate::design::validate_complete(&design).is_ok());
    Ok(design)
}

/// A freshly sampled palm with every finger left open for the search to expand.
pub fn open_design<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Result<DesignGraph> {
    let palm = sample_palm_layout(params, rng)?;
    let fingers = palm.slot_angles.iter().map(|&a| FingerSpec::open(a)).collect();
    Ok(DesignGraph { palm, fingers })
}

/// Number of successors `enumerate_successors` yields under `params`.
pub fn successor_count(params: &GenParams) -> usize {
    let codes = params.codes().count();
    params.joint_counts.len() * codes * codes * params.fingertips.len()
}

/// Every way of finalizing finger `finger_index`, in (joints, g1, g2, tip) order.
pub fn enumerate_successors(
    partial: &DesignGraph,
    finger_index: usize,
    params: &GenParams,
) -> Result<Vec<DesignGraph>> {
    (0..successor_count(params)).map(|c| successor(partial, finger_index, c, params)).collect()
}

/// The `choice`-th entry of [`enumerate_successors`], built without the others.
pub fn successor(partial: &DesignGraph, finger_index: usize, choice: usize, params: &GenParams) -> Result<DesignGraph> {
    let finger = partial
        .fingers
        .get(finger_index)
        .ok_or_else(|| Error::OutOfRange(format!("finger index {finger_index}")))?;
    if finger.terminal {
        return Err(Error::FingerTerminal(finger_index));
    }
    if choice >= successor_count(params) {
        return Err(Error::OutOfRange(format!("successor {choice} of {}", successor_count(params))));
    }
    let codes = params.codes().count();
    let tips = params.fingertips.len();
    let tip = params.fingertips[choice % tips];
    let rest = choice / tips;
    let g2 = params.code_range[0] + (rest % codes) as u8;
    let rest = rest / codes;
    let g1 = params.code_range[0] + (rest % codes) as u8;
    let j = params.joint_counts[rest / codes];
    let mut d = partial.clone();
    d.fingers[finger_index] = FingerSpec::new(finger.slot_angle_rad, j, g1, g2, tip);
    Ok(d)
}

/// Training family of a generated hand.
pub fn family(design: &DesignGraph) -> (PlacementMode, usize) {
    (design.palm.mode, design.finger_count())
}
