//! Effective design keys: one key per class of morphologically equivalent
//! designs.
//!
//! * symmetric palms: any permutation of fingers over the equally spaced slots
//! * anthropomorphic palms: the thumb (the slot farthest from the circular mean
//!   of the others) is normalized to position 0, the rest follow
//!   counter-clockwise; slot angles are compared relative to the thumb
//! * asymmetric palms: list order and absolute slot angles are preserved
//!
//! Palms are compared through quantized rotation-invariant scalars.

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{validate, DesignGraph, FingerSpec, PlacementMode};
use crate::error::Result;

const KEY_VERSION: u8 = 1;
const OPEN_SENTINEL: u8 = 0xFF;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DesignKey(pub Vec<u8>);

impl Serialize for DesignKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for DesignKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(&s).map(DesignKey).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for DesignKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(&self.0))
    }
}

fn quantize(x: f64, scale: f64) -> i64 {
    (x * scale).round() as i64
}

fn angle_q(a: f64) -> i64 {
    let q = quantize(a.rem_euclid(TAU), 1e9);
    if q >= quantize(TAU, 1e9) {
        0
    } else {
        q
    }
}

fn palm_signature(d: &DesignGraph) -> [i64; 6] {
    [
        i64::from(d.palm.mode.tag()),
        d.fingers.len() as i64,
        quantize(d.palm.radius_m, 1e9),
        quantize(d.palm.thickness_m, 1e9),
        quantize(d.palm.area(), 1e12),
        quantize(d.palm.circumradius(), 1e9),
    ]
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Index of the thumb in an anthropomorphic layout: the finger whose slot
/// deviates most from the circular mean of the other slots.
pub fn thumb_index(design: &DesignGraph) -> Option<usize> {
    let n = design.fingers.len();
    if n < 2 {
        return (n == 1).then_some(0);
    }
    let (sx, sy) = design
        .fingers
        .iter()
        .fold((0.0, 0.0), |(x, y), f| (x + f.slot_angle_rad.cos(), y + f.slot_angle_rad.sin()));
    let deviation = |i: usize| {
        let a = design.fingers[i].slot_angle_rad;
        let (ox, oy) = (sx - a.cos(), sy - a.sin());
        if ox.hypot(oy) < 1e-9 {
            std::f64::consts::PI
        } else {
            circular_distance(a, oy.atan2(ox))
        }
    };
    (0..n).max_by(|&i, &j| {
        let (di, dj) = (quantize(deviation(i), 1e9), quantize(deviation(j), 1e9));
        di.cmp(&dj)
            .then_with(|| design.fingers[j].order_key().cmp(&design.fingers[i].order_key()))
            .then_with(|| {
                angle_q(design.fingers[j].slot_angle_rad).cmp(&angle_q(design.fingers[i].slot_angle_rad))
            })
    })
}

fn relative_angle_q(design: &DesignGraph, thumb: usize, i: usize) -> i64 {
    angle_q(design.fingers[i].slot_angle_rad - design.fingers[thumb].slot_angle_rad)
}

/// The representative of the design's equivalence class. Evaluators and
/// exporters work on this form so equivalent designs are treated identically.
pub fn canonical_form(design: &DesignGraph) -> DesignGraph {
    let mut out = design.clone();
    match design.palm.mode {
        PlacementMode::Asymmetric => {}
        PlacementMode::Symmetric => {
            let mut slots = design.palm.slot_angles.clone();
            slots.sort_by_key(|&a| angle_q(a));
            let mut fingers = design.fingers.clone();
            fingers.sort_by_key(|f| f.order_key());
            for (f, &a) in fingers.iter_mut().zip(&slots) {
                f.slot_angle_rad = a;
            }
            out.palm.slot_angles = slots;
            out.fingers = fingers;
        }
        PlacementMode::Anthropomorphic => {
            if let Some(t) = thumb_index(design) {
                let mut order: Vec<usize> = (0..design.fingers.len()).collect();
                order.sort_by(|&i, &j| match (i == t, j == t) {
                    (true, false) => Ordering::Less,
                    (false, true) => Ordering::Greater,
                    _ => relative_angle_q(design, t, i).cmp(&relative_angle_q(design, t, j)),
                });
                out.fingers = order.iter().map(|&i| design.fingers[i].clone()).collect();
                out.palm.slot_angles = out.fingers.iter().map(|f| f.slot_angle_rad).collect();
            }
        }
    }
    out
}

fn push_finger(bytes: &mut Vec<u8>, f: &FingerSpec) {
    if f.is_open() {
        bytes.push(OPEN_SENTINEL);
        return;
    }
    bytes.extend([0, f.joint_count, f.g1, f.g2, f.fingertip.index() as u8, f.links.len() as u8]);
    bytes.extend(f.links.iter().map(|l| l.code));
}

pub fn canonical_key(design: &DesignGraph) -> Result<DesignKey> {
    validate(design).into_result()?;
    let canon = canonical_form(design);
    let mut bytes = vec![KEY_VERSION];
    for x in palm_signature(&canon) {
        bytes.extend(x.to_le_bytes());
    }
    let thumb = match canon.palm.mode {
        PlacementMode::Anthropomorphic => thumb_index(&canon),
        _ => None,
    };
    for (i, f) in canon.fingers.iter().enumerate() {
        match canon.palm.mode {
            PlacementMode::Symmetric => {}
            PlacementMode::Asymmetric => bytes.extend(angle_q(f.slot_angle_rad).to_le_bytes()),
            PlacementMode::Anthropomorphic => {
                let t = thumb.unwrap_or(0);
                bytes.extend(relative_angle_q(&canon, t, i).to_le_bytes());
            }
        }
        push_finger(&mut bytes, f);
    }
    Ok(DesignKey(bytes))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Brute force over every finger permutation admissible for the palm mode.
pub fn is_equivalent(a: &DesignGraph, b: &DesignGraph) -> bool {
    if a.fingers.len() != b.fingers.len() || palm_signature(a) != palm_signature(b) {
        return false;
    }
    let n = a.fingers.len();
    let mode = a.palm.mode;
    let thumbs = (thumb_index(a), thumb_index(b));
    permutations(n).into_iter().any(|sigma| {
        (0..n).all(|i| {
            let (fa, fb) = (&a.fingers[sigma[i]], &b.fingers[i]);
            if !fa.same_parameters(fb) {
                return false;
            }
            match mode {
                PlacementMode::Symmetric => true,
                PlacementMode::Asymmetric => {
                    sigma[i] == i && angle_q(fa.slot_angle_rad) == angle_q(fb.slot_angle_rad)
                }
                PlacementMode::Anthropomorphic => match thumbs {
                    (Some(ta), Some(tb)) => {
                        relative_angle_q(a, ta, sigma[i]) == relative_angle_q(b, tb, i)
                    }
                    _ => true,
                },
            }
        })
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::*;
    use super::*;
    use FingertipType::*;

    #[test]
    fn reversed_symmetric_design_same_key() {
        let d = symmetric(&[(3, 4, 7, Standard), (2, 1, 9, Thin), (3, 5, 5, Rounded)]);
        let mut r = d.clone();
        r.fingers.reverse();
        r.palm.slot_angles.reverse();
        assert_eq!(canonical_key(&d).unwrap(), canonical_key(&r).unwrap());
        assert!(is_equivalent(&d, &r));
    }

    #[test]
    fn fingertip_changes_key() {
        let a = symmetric(&[(3, 4, 7, Standard), (3, 1, 1, Standard), (3, 5, 5, Rounded)]);
        let mut b = a.clone();
        b.fingers[1].fingertip = Wedged;
        assert_ne!(canonical_key(&a).unwrap(), canonical_key(&b).unwrap());
        assert!(!is_equivalent(&a, &b));
    }

    #[test]
    fn swapped_parameters_on_fixed_slots() {
        let a = symmetric(&[(3, 4, 7, Standard), (3, 1, 1, Standard), (2, 5, 5, Rounded)]);
        let mut b = a.clone();
        let (s0, s2) = (b.fingers[0].slot_angle_rad, b.fingers[2].slot_angle_rad);
        b.fingers.swap(0, 2);
        b.fingers[0].slot_angle_rad = s0;
        b.fingers[2].slot_angle_rad = s2;
        assert!(is_equivalent(&a, &b));
        assert_eq!(canonical_key(&a).unwrap(), canonical_key(&b).unwrap());
    }

    #[test]
    fn reflexive_and_cardinality() {
        let a = symmetric(&[(3, 4, 7, Standard), (3, 1, 1, Standard), (2, 5, 5, Rounded)]);
        assert!(is_equivalent(&a, &a));
        let b = symmetric(&[(3, 4, 7, Standard), (3, 1, 1, Standard)]);
        assert!(!is_equivalent(&a, &b));
    }

    #[test]
    fn asymmetric_order_matters() {
        let slots = [0.0, 1.0, 3.0];
        let p = palm(PlacementMode::Asymmetric, 0.05, &slots);
        let fingers: Vec<_> = slots
            .iter()
            .zip([(3, 1, 1), (3, 2, 2), (2, 3, 3)])
            .map(|(&a, (j, g1, g2))| FingerSpec::new(a, j, g1, g2, Standard))
            .collect();
        let a = DesignGraph { palm: p.clone(), fingers: fingers.clone() };
        let mut b = a.clone();
        b.fingers[0] = FingerSpec::new(0.0, 3, 2, 2, Standard);
        b.fingers[1] = FingerSpec::new(1.0, 3, 1, 1, Standard);
        assert!(!is_equivalent(&a, &b));
        assert_ne!(canonical_key(&a).unwrap(), canonical_key(&b).unwrap());
    }

    #[test]
    fn anthropomorphic_thumb_normalized() {
        let slots = [-0.8, -0.8 + 1.6 / 3.0, 0.8 - 1.6 / 3.0, 0.8, std::f64::consts::PI];
        let p = palm(PlacementMode::Anthropomorphic, 0.05, &slots);
        let fingers: Vec<_> = slots
            .iter()
            .enumerate()
            .map(|(i, &a)| FingerSpec::new(a, 3, i as u8 + 1, 2, Standard))
            .collect();
        let a = DesignGraph { palm: p, fingers };
        assert_eq!(thumb_index(&a), Some(4));
        let canon = canonical_form(&a);
        assert_eq!(canon.fingers[0].g1, 5);
        // rotating the whole hand and listing fingers in another order is equivalent
        let mut b = a.with_rotated_palm(0.7);
        b.fingers.rotate_left(2);
        b.palm.slot_angles.rotate_left(2);
        assert!(is_equivalent(&a, &b));
        assert_eq!(canonical_key(&a).unwrap(), canonical_key(&b).unwrap());
    }

    #[test]
    fn open_fingers_use_sentinel() {
        let d = symmetric(&[(3, 4, 7, Standard), (3, 1, 1, Standard), (3, 5, 5, Rounded)]);
        let keys: Vec<_> = (0..=3).map(|k| canonical_key(&d.prefix(k)).unwrap()).collect();
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                assert_ne!(keys[i], keys[j]);
            }
        }
        assert!(keys[0].0.iter().filter(|&&b| b == OPEN_SENTINEL).count() >= 3);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(0).len(), 1);
    }
}
