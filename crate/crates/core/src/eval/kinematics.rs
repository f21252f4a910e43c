//! Serial-chain finger kinematics.
//!
//! A finger's base sits at its palm slot. The base yaw turns the finger about
//! the palm normal (+z); each flexion joint then rotates the chain within the
//! finger's sagittal plane, bending from the outward radial direction toward
//! +z. At zero pose the finger lies flat, pointing away from the palm centre.

use crate::design::{FingerSpec, PalmLayout, FLEXION_MAX_RAD, FLEXION_MIN_RAD, YAW_LIMIT_RAD};
use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Grid resolution per flexion joint used by [`reach_interval`].
pub const REACH_GRID: usize = 9;

/// Where a finger is mounted: slot position on the palm plane and the
/// outward heading of its straight-finger axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotPose {
    pub position: Vec3,
    pub heading_rad: f64,
}

impl SlotPose {
    pub fn of(palm: &PalmLayout, slot_angle_rad: f64) -> SlotPose {
        let p = palm.slot_position(slot_angle_rad);
        SlotPose { position: [p.x, p.y, 0.0], heading_rad: slot_angle_rad }
    }
}

/// Joint limits as `(lower, upper)` in the order yaw, flexion 1, flexion 2, ...
pub fn joint_limits(link_count: usize) -> Vec<(f64, f64)> {
    std::iter::once((-YAW_LIMIT_RAD, YAW_LIMIT_RAD))
        .chain(std::iter::repeat_n((FLEXION_MIN_RAD, FLEXION_MAX_RAD), link_count))
        .collect()
}

fn link_lengths(finger: &FingerSpec) -> Vec<f64> {
    finger.links.iter().map(|l| l.length_m()).collect()
}

/// Fingertip position for `angles = [yaw, flexion_1, .., flexion_n]`.
pub fn forward_kinematics(finger: &FingerSpec, slot: &SlotPose, angles: &[f64]) -> Result<Vec3> {
    let lengths = link_lengths(finger);
    if angles.len() != 1 + lengths.len() {
        return Err(Error::LengthMismatch { expected: 1 + lengths.len(), actual: angles.len() });
    }
    for (i, (&a, (lo, hi))) in angles.iter().zip(joint_limits(lengths.len())).enumerate() {
        if !(lo..=hi).contains(&a) {
            return Err(Error::OutOfRange(format!("joint {i} angle {a} outside [{lo}, {hi}]")));
        }
    }
    Ok(chain_tip(slot, &lengths, angles[0], &angles[1..]))
}

fn chain_tip(slot: &SlotPose, lengths: &[f64], yaw: f64, flexions: &[f64]) -> Vec3 {
    let dir = slot.heading_rad + yaw;
    let (dx, dy) = (dir.cos(), dir.sin());
    let (mut radial, mut up, mut theta) = (0.0, 0.0, 0.0);
    for (l, f) in lengths.iter().zip(flexions) {
        theta += f;
        radial += l * theta.cos();
        up += l * theta.sin();
    }
    [slot.position[0] + radial * dx, slot.position[1] + radial * dy, slot.position[2] + up]
}

/// Distance from the base to the tip for the given flexions; yaw does not matter.
fn tip_distance(lengths: &[f64], flexions: &[f64]) -> f64 {
    let (mut x, mut z, mut theta) = (0.0, 0.0, 0.0);
    for (l, f) in lengths.iter().zip(flexions) {
        theta += f;
        x += l * theta.cos();
        z += l * theta.sin();
    }
    x.hypot(z)
}

/// Range of base-to-fingertip distances over the joint box. The maximum is
/// the straight chain; the minimum is taken over a grid of [`REACH_GRID`]
/// values per flexion joint.
pub fn reach_interval(finger: &FingerSpec) -> Result<(f64, f64)> {
    if finger.is_open() {
        return Err(Error::OutOfRange("reach of a non-terminal finger".into()));
    }
    let lengths = link_lengths(finger);
    if lengths.is_empty() {
        return Ok((0.0, 0.0));
    }
    let max = lengths.iter().sum();
    let n = lengths.len();
    let step = (FLEXION_MAX_RAD - FLEXION_MIN_RAD) / (REACH_GRID - 1) as f64;
    let mut idx = vec![0usize; n];
    let mut flex = vec![0.0; n];
    let mut min = f64::INFINITY;
    loop {
        for (f, &i) in flex.iter_mut().zip(&idx) {
            *f = FLEXION_MIN_RAD + step * i as f64;
        }
        min = min.min(tip_distance(&lengths, &flex));
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < REACH_GRID {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    Ok((min, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{FingertipType, LinkSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Mat4 = [[f64; 4]; 4];

    fn mul(a: &Mat4, b: &Mat4) -> Mat4 {
        let mut c = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    }

    fn trans(x: f64, y: f64, z: f64) -> Mat4 {
        [[1.0, 0.0, 0.0, x], [0.0, 1.0, 0.0, y], [0.0, 0.0, 1.0, z], [0.0, 0.0, 0.0, 1.0]]
    }

    fn rot_z(a: f64) -> Mat4 {
        let (s, c) = a.sin_cos();
        [[c, -s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
    }

    fn rot_y(a: f64) -> Mat4 {
        let (s, c) = a.sin_cos();
        [[c, 0.0, s, 0.0], [0.0, 1.0, 0.0, 0.0], [-s, 0.0, c, 0.0], [0.0, 0.0, 0.0, 1.0]]
    }

    /// Homogeneous-transform product; flexing toward +z is a negative rotation about y.
    fn oracle(slot: &SlotPose, lengths: &[f64], angles: &[f64]) -> Vec3 {
        let [x, y, z] = slot.position;
        let mut t = mul(&trans(x, y, z), &rot_z(slot.heading_rad + angles[0]));
        for (l, f) in lengths.iter().zip(&angles[1..]) {
            t = mul(&t, &rot_y(-f));
            t = mul(&t, &trans(*l, 0.0, 0.0));
        }
        [t[0][3], t[1][3], t[2][3]]
    }

    fn finger(codes: &[u8]) -> FingerSpec {
        let mut f = FingerSpec::new(0.0, codes.len() as u8, codes[0], *codes.last().unwrap(), FingertipType::Standard);
        f.links = codes.iter().map(|&c| LinkSpec::new(c)).collect();
        f
    }

    #[test]
    fn zero_pose_is_straight() {
        let f = finger(&[3, 5, 5]);
        let slot = SlotPose { position: [0.05, 0.0, 0.0], heading_rad: 0.0 };
        let tip = forward_kinematics(&f, &slot, &[0.0; 4]).unwrap();
        assert!((tip[0] - (0.05 + f.total_length_m())).abs() < 1e-15);
        assert_eq!(tip[1], 0.0);
        assert_eq!(tip[2], 0.0);
    }

    #[test]
    fn right_angle_single_link() {
        let f = finger(&[4]);
        let slot = SlotPose { position: [0.0, 0.04, 0.0], heading_rad: std::f64::consts::FRAC_PI_2 };
        let tip = forward_kinematics(&f, &slot, &[0.0, std::f64::consts::FRAC_PI_2]).unwrap();
        let l = LinkSpec::new(4).length_m();
        assert!(tip[0].abs() < 1e-15 && (tip[1] - 0.04).abs() < 1e-15 && (tip[2] - l).abs() < 1e-15);
    }

    #[test]
    fn matches_transform_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let n = rng.random_range(1..=3);
            let codes: Vec<u8> = (0..n).map(|_| rng.random_range(1..=10)).collect();
            let f = finger(&codes);
            let slot = SlotPose {
                position: [rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), 0.0],
                heading_rad: rng.random_range(-3.2..3.2),
            };
            let mut angles = vec![rng.random_range(-YAW_LIMIT_RAD..=YAW_LIMIT_RAD)];
            angles.extend((0..n).map(|_| rng.random_range(0.0..=FLEXION_MAX_RAD)));
            let a = forward_kinematics(&f, &slot, &angles).unwrap();
            let b = oracle(&slot, &link_lengths(&f), &angles);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bad_angles() {
        let f = finger(&[1, 1]);
        let slot = SlotPose { position: [0.0; 3], heading_rad: 0.0 };
        assert!(matches!(forward_kinematics(&f, &slot, &[0.0; 2]), Err(Error::LengthMismatch { .. })));
        assert!(forward_kinematics(&f, &slot, &[2.0, 0.0, 0.0]).is_err());
        assert!(forward_kinematics(&f, &slot, &[0.0, -0.1, 0.0]).is_err());
        assert!(forward_kinematics(&f, &slot, &[0.0, 0.0, 2.2]).is_err());
    }

    #[test]
    fn single_link_reach_is_its_length() {
        let f = finger(&[6]);
        let (lo, hi) = reach_interval(&f).unwrap();
        let l = LinkSpec::new(6).length_m();
        assert!((lo - l).abs() < 1e-15 && (hi - l).abs() < 1e-15);
    }

    #[test]
    fn equal_links_fold_to_zero() {
        let (lo, hi) = reach_interval(&finger(&[5, 5, 5])).unwrap();
        assert!(lo < 1e-12);
        assert!((hi - 3.0 * LinkSpec::new(5).length_m()).abs() < 1e-15);
    }

    #[test]
    fn open_finger_rejected() {
        assert!(reach_interval(&FingerSpec::open(0.0)).is_err());
    }

    /// The grid minimum is a feasible distance and sits within the Lipschitz
    /// bound of a dense random-sample estimate of the true minimum.
    #[test]
    fn grid_minimum_against_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for codes in [[1, 10, 10], [10, 1, 1], [4, 7, 7], [2, 2, 2]] {
            let f = finger(&codes);
            let lengths = link_lengths(&f);
            let (grid_min, max) = reach_interval(&f).unwrap();
            let mut sampled = f64::INFINITY;
            for _ in 0..100_000 {
                let flex: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..=FLEXION_MAX_RAD)).collect();
                let d = tip_distance(&lengths, &flex);
                assert!(d <= max + 1e-12);
                sampled = sampled.min(d);
            }
            // |d(a) - d(b)| <= sum_j (sum_{k>=j} L_k) |a_j - b_j|, and grid points are at most h/2 away.
            let h = FLEXION_MAX_RAD / (REACH_GRID - 1) as f64;
            let lip: f64 = (0..3).map(|j| lengths[j..].iter().sum::<f64>()).sum();
            assert!(grid_min <= sampled + lip * h / 2.0 + 1e-9, "{codes:?}: {grid_min} vs {sampled}");
            assert!(grid_min >= 0.0);
        }
    }
}
