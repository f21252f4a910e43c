//! Kinematic stand-ins for in-hand rotation and grasping of a sphere held
//! above the palm.

use rand::Rng;

use super::kinematics::{reach_interval, Vec3};
use super::wrench::{force_closure_with, Contact};
use super::{sample_range, Evaluator, SurrogateParams};
use crate::design::{canonical_form, validate_complete, DesignGraph, FingertipType};
use crate::error::Result;

/// Torque that normalizes the rotation moment before the palm penalty is applied.
pub const REFERENCE_TORQUE_NM: f64 = 0.25;
const MIN_LEVER_M: f64 = 1e-6;

/// One perturbed trial: the object sphere in palm coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scene {
    pub center: Vec3,
    pub radius_m: f64,
    pub size_scale: f64,
    pub mass_scale: f64,
}

/// Object placement for `trial`. Position noise is drawn in a frame whose x
/// axis points at the slot of the first canonical finger, so a rigid
/// rotation of the whole hand rotates the noise with it.
pub fn trial_scene(canonical: &DesignGraph, params: &SurrogateParams, trial: usize) -> Scene {
    let mut rng = params.trial_rng(trial);
    let size_scale = sample_range(&mut rng, params.size_scale);
    let mass_scale = sample_range(&mut rng, params.mass_scale);
    let mut offset = [0.0; 3];
    if params.position_noise_m > 0.0 {
        loop {
            let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                offset = v.map(|x| x * params.position_noise_m);
                break;
            }
        }
    }
    let anchor = canonical.fingers.first().map_or(0.0, |f| f.slot_angle_rad);
    let (s, c) = anchor.sin_cos();
    let centroid = canonical.palm.centroid();
    Scene {
        center: [
            centroid.x + c * offset[0] - s * offset[1],
            centroid.y + s * offset[0] + c * offset[1],
            params.object_height_m + offset[2],
        ],
        radius_m: params.object_radius_m * size_scale,
        size_scale,
        mass_scale,
    }
}

/// Per-design quantities shared by all trials.
struct Prepared {
    fingers: Vec<FingerGeometry>,
    circumradius: f64,
}

struct FingerGeometry {
    base: Vec3,
    reach: (f64, f64),
    fingertip: FingertipType,
}

impl Prepared {
    fn new(canonical: &DesignGraph, params: &SurrogateParams) -> Prepared {
        let fingers = canonical
            .fingers
            .iter()
            .filter(|f| f.is_present())
            .map(|f| {
                let p = canonical.palm.slot_position(f.slot_angle_rad);
                let (lo, hi) = reach_interval(f).expect("present fingers are terminal");
                FingerGeometry {
                    base: [p.x, p.y, 0.0],
                    reach: (lo * params.link_length_scale, hi * params.link_length_scale),
                    fingertip: f.fingertip,
                }
            })
            .collect();
        Prepared { fingers, circumradius: canonical.palm.circumradius() }
    }
}

/// Geometry of a finger that can touch the object in a given scene.
struct Touch<'a> {
    finger: &'a FingerGeometry,
    /// Base-to-object-centre vector.
    to_base: Vec3,
    dist: f64,
}

fn touching<'a>(prep: &'a Prepared, scene: &Scene) -> Vec<Touch<'a>> {
    let r = scene.radius_m;
    prep.fingers
        .iter()
        .filter_map(|f| {
            let v = [f.base[0] - scene.center[0], f.base[1] - scene.center[1], f.base[2] - scene.center[2]];
            let dist = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let lever = (dist - r).max(MIN_LEVER_M);
            let (lo, hi) = f.reach;
            (hi >= lever && lo <= dist + r).then_some(Touch { finger: f, to_base: v, dist })
        })
        .collect()
}

/// Zero unless at least three fingers touch the object.
fn rotation_trial(prep: &Prepared, scene: &Scene, params: &SurrogateParams) -> f64 {
    let touches = touching(prep, scene);
    if touches.len() < 3 {
        return 0.0;
    }
    let r = scene.radius_m;
    let torque: f64 = touches
        .iter()
        .map(|t| {
            let arm = r * t.to_base[0].hypot(t.to_base[1]) / t.dist.max(MIN_LEVER_M);
            // the fully stretched chain is the worst-case moment arm at the base joint
            let tip_force = params.torque_limit_nm / t.finger.reach.1.max(MIN_LEVER_M);
            params.friction * tip_force * arm
        })
        .sum();
    let inertia = scene.mass_scale * scene.size_scale.powi(5);
    let oversize = (prep.circumradius - r).max(0.0) / r;
    torque / (REFERENCE_TORQUE_NM * inertia) - params.palm_penalty * oversize
}

/// Fingertips touch the sphere's equator at their slot azimuths.
fn grasp_contacts(touches: &[Touch], scene: &Scene) -> Vec<Contact> {
    touches
        .iter()
        .map(|t| {
            let az = t.to_base[1].atan2(t.to_base[0]);
            let (s, c) = az.sin_cos();
            Contact { point: [scene.radius_m * c, scene.radius_m * s, 0.0], normal: [-c, -s, 0.0] }
        })
        .collect()
}

fn grasp_trial(prep: &Prepared, scene: &Scene, params: &SurrogateParams) -> f64 {
    let touches = touching(prep, scene);
    if touches.len() < 2 {
        return 0.0;
    }
    let contacts = grasp_contacts(&touches, scene);
    match force_closure_with(&contacts, params.friction, params.cone_edges, params.torsion_ratio) {
        Ok(c) if c.closed => {
            let thin = touches.iter().filter(|t| t.finger.fingertip == FingertipType::Thin).count();
            c.margin + params.thin_bonus * thin as f64 / touches.len() as f64
        }
        _ => 0.0,
    }
}

fn mean_over_trials(
    design: &DesignGraph,
    params: &SurrogateParams,
    trial: fn(&Prepared, &Scene, &SurrogateParams) -> f64,
) -> Result<f64> {
    validate_complete(design).into_result()?;
    let canon = canonical_form(design);
    let prep = Prepared::new(&canon, params);
    let total: f64 = (0..params.trials).map(|t| trial(&prep, &trial_scene(&canon, params, t), params)).sum();
    Ok(total / params.trials as f64)
}

#[derive(Debug, Clone)]
pub struct RotationEvaluator {
    params: SurrogateParams,
}

impl RotationEvaluator {
    pub fn new(params: SurrogateParams) -> Self {
        Self { params }
    }
}

impl Evaluator for RotationEvaluator {
    fn id(&self) -> &str {
        "rotation"
    }

    fn trials(&self) -> usize {
        self.params.trials
    }

    fn seed(&self) -> u64 {
        self.params.seed
    }

    fn trial_score(&self, canonical: &DesignGraph, trial: usize) -> f64 {
        let prep = Prepared::new(canonical, &self.params);
        rotation_trial(&prep, &trial_scene(canonical, &self.params, trial), &self.params)
    }

    fn score(&self, design: &DesignGraph) -> Result<f64> {
        mean_over_trials(design, &self.params, rotation_trial)
    }
}

#[derive(Debug, Clone)]
pub struct GraspEvaluator {
    params: SurrogateParams,
}

impl GraspEvaluator {
    pub fn new(params: SurrogateParams) -> Self {
        Self { params }
    }
}

impl Evaluator for GraspEvaluator {
    fn id(&self) -> &str {
        "grasp"
    }

    fn trials(&self) -> usize {
        self.params.trials
    }

    fn seed(&self) -> u64 {
        self.params.seed
    }

    fn trial_score(&self, canonical: &DesignGraph, trial: usize) -> f64 {
        let prep = Prepared::new(canonical, &self.params);
        grasp_trial(&prep, &trial_scene(canonical, &self.params, trial), &self.params)
    }

    fn score(&self, design: &DesignGraph) -> Result<f64> {
        mean_over_trials(design, &self.params, grasp_trial)
    }
}

pub fn rotation_score(design: &DesignGraph, params: &SurrogateParams) -> Result<f64> {
    params.check()?;
    mean_over_trials(design, params, rotation_trial)
}

pub fn grasp_score(design: &DesignGraph, params: &SurrogateParams) -> Result<f64> {
    params.check()?;
    mean_over_trials(design, params, grasp_trial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::test_support::{palm, symmetric};
    use crate::design::{FingerSpec, PlacementMode};
    use crate::eval::wrench::force_closure_with;
    use crate::grammar::{generate_hand, GenParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use FingertipType::*;

    fn symmetric_with_radius(radius: f64, fingers: &[(u8, u8, u8, FingertipType)]) -> DesignGraph {
        let mut d = symmetric(fingers);
        let slots = d.palm.slot_angles.clone();
        d.palm = palm(PlacementMode::Symmetric, radius, &slots);
        d
    }

    #[test]
    fn unreachable_scores_zero() {
        let d = symmetric_with_radius(0.15, &[(3, 1, 1, Standard); 3]);
        assert_eq!(rotation_score(&d, &SurrogateParams::default()).unwrap(), 0.0);
        assert_eq!(grasp_score(&d, &SurrogateParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn link_length_sweep_rises_then_falls() {
        // a palm inside the object's silhouette carries no size penalty
        let params = SurrogateParams { object_height_m: 0.11, ..SurrogateParams::default() };
        let scores: Vec<f64> = (1..=10)
            .map(|c| rotation_score(&symmetric_with_radius(0.02, &[(2, c, c, Standard); 3]), &params).unwrap())
            .collect();
        // code 1 cannot reach the object in any trial
        assert_eq!(scores[0], 0.0);
        let peak = (0..10).max_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
        assert!(0 < peak && peak < 9, "{scores:?}");
        for (i, w) in scores.windows(2).enumerate() {
            if i < peak {
                assert!(w[1] > w[0], "{scores:?}");
            } else {
                assert!(w[1] < w[0], "{scores:?}");
            }
        }
    }

    #[test]
    fn equivalent_designs_equal_scores() {
        let a = symmetric(&[(3, 4, 7, Standard), (2, 1, 9, Thin), (3, 5, 5, Rounded)]);
        let mut b = a.clone();
        b.fingers.reverse();
        b.palm.slot_angles.reverse();
        let p = SurrogateParams { trials: 16, ..SurrogateParams::default() };
        assert_eq!(rotation_score(&a, &p).unwrap(), rotation_score(&b, &p).unwrap());
        assert_eq!(grasp_score(&a, &p).unwrap(), grasp_score(&b, &p).unwrap());
    }

    #[test]
    fn rotation_invariant_under_palm_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = SurrogateParams { trials: 16, ..SurrogateParams::default() };
        for _ in 0..30 {
            let d = generate_hand(&GenParams::default(), &mut rng).unwrap();
            let base = rotation_score(&d, &p).unwrap();
            for angle in [0.3, 1.7, -2.9] {
                let r = rotation_score(&d.with_rotated_palm(angle), &p).unwrap();
                assert!((base - r).abs() < 1e-9, "{base} vs {r}");
            }
        }
    }

    #[test]
    fn antipodal_pair_grasps_with_third_finger_short() {
        let slots = [0.0, PI, PI / 2.0];
        let mut d = DesignGraph {
            palm: palm(PlacementMode::Asymmetric, 0.1, &slots),
            fingers: vec![
                FingerSpec::new(slots[0], 3, 10, 10, Standard),
                FingerSpec::new(slots[1], 3, 10, 10, Standard),
                FingerSpec::new(slots[2], 2, 1, 1, Standard),
            ],
        };
        let p = SurrogateParams {
            trials: 1,
            object_height_m: 0.1,
            size_scale: [1.0, 1.0],
            position_noise_m: 0.0,
            ..SurrogateParams::default()
        };
        let g = grasp_score(&d, &p).unwrap();
        assert!(g > 0.0);
        // the two reaching fingers alone give the same closure margin
        let c = d.palm.centroid();
        let contacts: Vec<Contact> = [(0.1 - c.x, -c.y), (-0.1 - c.x, -c.y)]
            .iter()
            .map(|&(x, y)| {
                let az = f64::atan2(y, x);
                Contact { point: [0.03 * az.cos(), 0.03 * az.sin(), 0.0], normal: [-az.cos(), -az.sin(), 0.0] }
            })
            .collect();
        let direct = force_closure_with(&contacts, p.friction, p.cone_edges, p.torsion_ratio).unwrap();
        assert!((g - direct.margin).abs() < 1e-9, "{g} vs {}", direct.margin);
        // a single reaching finger cannot grasp
        d.fingers[1] = FingerSpec::new(slots[1], 2, 1, 1, Standard);
        assert_eq!(grasp_score(&d, &p).unwrap(), 0.0);
    }

    #[test]
    fn thin_tips_add_bonus() {
        let p = SurrogateParams { trials: 4, size_scale: [1.0, 1.0], position_noise_m: 0.0, ..SurrogateParams::default() };
        let plain = symmetric(&[(3, 6, 6, Standard); 3]);
        let thin = symmetric(&[(3, 6, 6, Thin); 3]);
        let (a, b) = (grasp_score(&plain, &p).unwrap(), grasp_score(&thin, &p).unwrap());
        assert!(a > 0.0);
        assert!((b - a - p.thin_bonus).abs() < 1e-9);
    }

    #[test]
    fn repeated_calls_agree_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = generate_hand(&GenParams::default(), &mut rng).unwrap();
        let p = SurrogateParams { trials: 32, ..SurrogateParams::default() };
        assert_eq!(rotation_score(&d, &p).unwrap().to_bits(), rotation_score(&d, &p).unwrap().to_bits());
        assert_eq!(grasp_score(&d, &p).unwrap().to_bits(), grasp_score(&d, &p).unwrap().to_bits());
        let ev = RotationEvaluator::new(p.clone());
        let canon = canonical_form(&d);
        let manual: f64 = (0..32).map(|t| ev.trial_score(&canon, t)).sum::<f64>() / 32.0;
        assert_eq!(manual, ev.score(&d).unwrap());
    }
}
