//! Hand morphology types and their invariants.
//!
//! A design is a tree rooted at the palm: one branch per finger slot, each
//! branch a serial chain of at most [`MAX_LINKS`] links. Fingers that are not
//! yet finalized (`terminal == false`) only appear as intermediate states of
//! the design search.

mod embedding;
mod key;

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Point2};

pub use embedding::{action_mask, apply_mask, structured_embedding, ActionMask, MorphologyEmbedding};
pub use key::{canonical_form, canonical_key, is_equivalent, thumb_index, DesignKey};

pub const MAX_FINGERS: usize = 5;
pub const MAX_LINKS: usize = 3;
/// Base yaw, base flexion and one flexion per additional link joint.
pub const ACTUATORS_PER_FINGER: usize = 4;
pub const ACTION_DIM: usize = MAX_FINGERS * ACTUATORS_PER_FINGER;
pub const EMBEDDING_DIM: usize = MAX_FINGERS * (1 + 2 * MAX_LINKS);

pub const MIN_CODE: u8 = 1;
pub const MAX_CODE: u8 = 10;
/// Length of a link before any 0.1 inch offset segments are added.
pub const BASE_LINK_LENGTH_M: f64 = 0.030;
pub const LINK_INCREMENT_M: f64 = 0.00254;
pub const PALM_THICKNESS_M: f64 = 0.0381;
pub const PALM_RADIUS_SCALE_M: f64 = 0.08;

pub const YAW_LIMIT_RAD: f64 = FRAC_PI_2;
pub const FLEXION_MIN_RAD: f64 = 0.0;
pub const FLEXION_MAX_RAD: f64 = 2.0 * std::f64::consts::FRAC_PI_3;

/// Slots closer than this are treated as the same slot.
const SLOT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FingertipType {
    Standard,
    Wedged,
    Rounded,
    Thin,
}

impl FingertipType {
    pub const ALL: [FingertipType; 4] = [Self::Standard, Self::Wedged, Self::Rounded, Self::Thin];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementMode {
    Symmetric,
    Asymmetric,
    Anthropomorphic,
}

impl PlacementMode {
    pub const ALL: [PlacementMode; 3] = [Self::Symmetric, Self::Asymmetric, Self::Anthropomorphic];

    pub fn tag(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for PlacementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Symmetric => "symmetric",
            Self::Asymmetric => "asymmetric",
            Self::Anthropomorphic => "anthropomorphic",
        };
        f.write_str(s)
    }
}

/// One modular link; its length grows by 0.1 inch per code step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkSpec {
    pub code: u8,
}

impl LinkSpec {
    pub fn new(code: u8) -> Self {
        Self { code }
    }

    pub fn length_m(self) -> f64 {
        BASE_LINK_LENGTH_M + f64::from(self.code) * LINK_INCREMENT_M
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerSpec {
    pub slot_angle_rad: f64,
    /// Servos beyond the base yaw; 0 marks an absent finger.
    pub joint_count: u8,
    pub g1: u8,
    pub g2: u8,
    pub links: Vec<LinkSpec>,
    pub fingertip: FingertipType,
    pub terminal: bool,
}

impl FingerSpec {
    /// Finalized finger: the proximal link takes `g1`, every distal link `g2`.
    pub fn new(slot_angle_rad: f64, joint_count: u8, g1: u8, g2: u8, fingertip: FingertipType) -> Self {
        let links = (0..joint_count)
            .map(|j| LinkSpec::new(if j == 0 { g1 } else { g2 }))
            .collect();
        Self { slot_angle_rad, joint_count, g1, g2, links, fingertip, terminal: true }
    }

    /// Placeholder for a finger the search has not expanded yet.
    pub fn open(slot_angle_rad: f64) -> Self {
        Self {
            slot_angle_rad,
            joint_count: 0,
            g1: MIN_CODE,
            g2: MIN_CODE,
            links: Vec::new(),
            fingertip: FingertipType::Standard,
            terminal: false,
        }
    }

    pub fn is_open(&self) -> bool {
        !self.terminal
    }

    pub fn is_present(&self) -> bool {
        self.terminal && self.joint_count > 0
    }

    /// Actuated degrees of freedom including the base yaw.
    pub fn actuator_count(&self) -> usize {
        if self.is_present() {
            1 + usize::from(self.joint_count)
        } else {
            0
        }
    }

    pub fn total_length_m(&self) -> f64 {
        self.links.iter().map(|l| l.length_m()).sum()
    }

    /// Total order on grammar parameters used for canonical sorting.
    /// Open fingers sort after every finalized finger.
    pub(crate) fn order_key(&self) -> (u8, u8, u8, u8, usize, Vec<u8>) {
        if self.is_open() {
            (1, 0, 0, 0, 0, Vec::new())
        } else {
            (
                0,
                self.joint_count,
                self.g1,
                self.g2,
                self.fingertip.index(),
                self.links.iter().map(|l| l.code).collect(),
            )
        }
    }

    /// Field-by-field equality of everything except the slot angle.
    pub(crate) fn same_parameters(&self, other: &FingerSpec) -> bool {
        if self.is_open() || other.is_open() {
            return self.is_open() && other.is_open();
        }
        self.joint_count == other.joint_count
            && self.g1 == other.g1
            && self.g2 == other.g2
            && self.fingertip == other.fingertip
            && self.links == other.links
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PalmLayout {
    pub mode: PlacementMode,
    pub radius_m: f64,
    pub slot_angles: Vec<f64>,
    pub grip_points: Vec<Point2>,
    /// Counter-clockwise convex polygon around the grip points.
    pub hull: Vec<Point2>,
    pub thickness_m: f64,
}

impl PalmLayout {
    pub fn slot_position(&self, angle: f64) -> Point2 {
        Point2::new(self.radius_m * angle.cos(), self.radius_m * angle.sin())
    }

    pub fn centroid(&self) -> Point2 {
        geometry::polygon_centroid(&self.hull)
    }

    /// Largest hull-vertex distance from the hull centroid.
    pub fn circumradius(&self) -> f64 {
        let c = self.centroid();
        self.hull.iter().map(|&p| (p - c).norm()).fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        geometry::polygon_area(&self.hull)
    }

    /// The same layout rotated about the palm normal.
    pub fn rotated(&self, angle: f64) -> PalmLayout {
        PalmLayout {
            slot_angles: self.slot_angles.iter().map(|a| a + angle).collect(),
            grip_points: self.grip_points.iter().map(|p| p.rotated(angle)).collect(),
            hull: self.hull.iter().map(|p| p.rotated(angle)).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignGraph {
    pub palm: PalmLayout,
    pub fingers: Vec<FingerSpec>,
}

/// Node of the morphology tree view. Node 0 is the palm root.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub finger: Option<usize>,
    /// 0 for the palm, 1 for a finger's proximal link.
    pub depth: usize,
    pub length_m: f64,
    pub fingertip: Option<FingertipType>,
    pub open: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub parent: usize,
    pub child: usize,
    /// True for the two-axis base joint at the palm, false for a link hinge.
    pub base_joint: bool,
}

impl DesignGraph {
    pub fn finger_count(&self) -> usize {
        self.fingers.len()
    }

    pub fn is_complete(&self) -> bool {
        self.fingers.iter().all(|f| f.terminal)
    }

    pub fn total_dof(&self) -> usize {
        self.fingers.iter().map(FingerSpec::actuator_count).sum()
    }

    pub fn with_rotated_palm(&self, angle: f64) -> DesignGraph {
        DesignGraph {
            palm: self.palm.rotated(angle),
            fingers: self
                .fingers
                .iter()
                .map(|f| FingerSpec { slot_angle_rad: f.slot_angle_rad + angle, ..f.clone() })
                .collect(),
        }
    }

    /// Copy with fingers `from..` reopened; the construction prefix of length `from`.
    pub fn prefix(&self, from: usize) -> DesignGraph {
        let mut d = self.clone();
        for f in d.fingers.iter_mut().skip(from) {
            *f = FingerSpec::open(f.slot_angle_rad);
        }
        d
    }

    /// Tree view `(V, E)`: palm root, one chain per present finger, and a
    /// single sentinel node for every open finger.
    pub fn nodes_and_edges(&self) -> (Vec<GraphNode>, Vec<GraphEdge>) {
        let mut nodes = vec![GraphNode {
            finger: None,
            depth: 0,
            length_m: self.palm.radius_m,
            fingertip: None,
            open: false,
        }];
        let mut edges = Vec::new();
        for (i, f) in self.fingers.iter().enumerate() {
            if f.is_open() {
                nodes.push(GraphNode { finger: Some(i), depth: 1, length_m: 0.0, fingertip: None, open: true });
                edges.push(GraphEdge { parent: 0, child: nodes.len() - 1, base_joint: true });
                continue;
            }
            let mut parent = 0;
            for (j, link) in f.links.iter().enumerate() {
                let distal = j + 1 == f.links.len();
                nodes.push(GraphNode {
                    finger: Some(i),
                    depth: j + 1,
                    length_m: link.length_m(),
                    fingertip: distal.then_some(f.fingertip),
                    open: false,
                });
                let child = nodes.len() - 1;
                edges.push(GraphEdge { parent, child, base_joint: j == 0 });
                parent = child;
            }
        }
        (nodes, edges)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoFingers,
    TooManyFingers(usize),
    JointCount { finger: usize, joint_count: u8 },
    LinkCount { finger: usize, links: usize, joint_count: u8 },
    CodeOutOfRange { finger: usize, code: u8 },
    LinkCodeMismatch { finger: usize },
    SlotMismatch { finger: usize },
    SlotsTooClose { a: usize, b: usize },
    UnequalSpacing,
    NonPositiveThickness,
    NonPositiveRadius,
    HullNotConvex,
    GripPointOutsideHull(usize),
    Incomplete { finger: usize },
    NonFinite,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoFingers => write!(f, "finger count < 1"),
            Self::TooManyFingers(n) => write!(f, "finger count > {MAX_FINGERS} (got {n})"),
            Self::JointCount { finger, joint_count } => {
                write!(f, "finger {finger}: joint_count ∉ {{0,2,3}} (got {joint_count})")
            }
            Self::LinkCount { finger, links, joint_count } => write!(
                f,
                "finger {finger}: {links} links for joint_count {joint_count} (at most {MAX_LINKS})"
            ),
            Self::CodeOutOfRange { finger, code } => {
                write!(f, "finger {finger}: code {code} outside [{MIN_CODE},{MAX_CODE}]")
            }
            Self::LinkCodeMismatch { finger } => {
                write!(f, "finger {finger}: link codes disagree with g1/g2")
            }
            Self::SlotMismatch { finger } => write!(f, "finger {finger}: slot angle not on the palm"),
            Self::SlotsTooClose { a, b } => write!(f, "slots {a} and {b} coincide"),
            Self::UnequalSpacing => write!(f, "symmetric palm slots are not equally spaced"),
            Self::NonPositiveThickness => write!(f, "palm thickness must be positive"),
            Self::NonPositiveRadius => write!(f, "palm radius must be positive"),
            Self::HullNotConvex => write!(f, "palm hull is not a convex CCW polygon"),
            Self::GripPointOutsideHull(i) => write!(f, "grip point {i} outside palm hull"),
            Self::Incomplete { finger } => write!(f, "finger {finger} is not terminal"),
            Self::NonFinite => write!(f, "non-finite geometry"),
        }
    }
}

/// Outcome of [`validate`]: an empty list means the design is valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidDesign(self.violations))
        }
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Checks every structural invariant. Partial designs (open fingers) are valid.
pub fn validate(design: &DesignGraph) -> Validation {
    let mut v = Vec::new();
    let palm = &design.palm;
    let n = design.fingers.len();

    if n == 0 {
        v.push(Violation::NoFingers);
    }
    if n > MAX_FINGERS {
        v.push(Violation::TooManyFingers(n));
    }

    let finite = palm.radius_m.is_finite()
        && palm.thickness_m.is_finite()
        && palm.slot_angles.iter().all(|a| a.is_finite())
        && palm.hull.iter().chain(&palm.grip_points).all(|p| p.x.is_finite() && p.y.is_finite())
        && design.fingers.iter().all(|f| f.slot_angle_rad.is_finite());
    if !finite {
        v.push(Violation::NonFinite);
        return Validation { violations: v };
    }

    for (i, f) in design.fingers.iter().enumerate() {
        if !palm.slot_angles.iter().any(|&a| angle_gap(a, f.slot_angle_rad) < SLOT_EPS) {
            v.push(Violation::SlotMismatch { finger: i });
        }
        if f.is_open() {
            continue;
        }
        if !matches!(f.joint_count, 0 | 2 | 3) {
            v.push(Violation::JointCount { finger: i, joint_count: f.joint_count });
        }
        if f.links.len() > MAX_LINKS || f.links.len() != usize::from(f.joint_count) {
            v.push(Violation::LinkCount { finger: i, links: f.links.len(), joint_count: f.joint_count });
        }
        for code in [f.g1, f.g2].into_iter().chain(f.links.iter().map(|l| l.code)) {
            if !(MIN_CODE..=MAX_CODE).contains(&code) {
                v.push(Violation::CodeOutOfRange { finger: i, code });
            }
        }
        let consistent = f
            .links
            .iter()
            .enumerate()
            .all(|(j, l)| l.code == if j == 0 { f.g1 } else { f.g2 });
        if !consistent {
            v.push(Violation::LinkCodeMismatch { finger: i });
        }
    }

    if palm.slot_angles.len() != n {
        v.push(Violation::SlotMismatch { finger: n.min(palm.slot_angles.len()) });
    }
    for a in 0..palm.slot_angles.len() {
        for b in a + 1..palm.slot_angles.len() {
            if angle_gap(palm.slot_angles[a], palm.slot_angles[b]) < SLOT_EPS {
                v.push(Violation::SlotsTooClose { a, b });
            }
        }
    }
    if palm.mode == PlacementMode::Symmetric && palm.slot_angles.len() > 1 {
        let mut s: Vec<f64> = palm.slot_angles.iter().map(|a| a.rem_euclid(TAU)).collect();
        s.sort_by(f64::total_cmp);
        let step = TAU / s.len() as f64;
        let equal = (0..s.len()).all(|i| {
            let next = if i + 1 < s.len() { s[i + 1] } else { s[0] + TAU };
            (next - s[i] - step).abs() < 1e-6
        });
        if !equal {
            v.push(Violation::UnequalSpacing);
        }
    }

    if palm.thickness_m <= 0.0 {
        v.push(Violation::NonPositiveThickness);
    }
    if palm.radius_m <= 0.0 {
        v.push(Violation::NonPositiveRadius);
    }
    if !geometry::is_strictly_convex_ccw(&palm.hull) {
        v.push(Violation::HullNotConvex);
    } else {
        for (i, &p) in palm.grip_points.iter().enumerate() {
            if !geometry::convex_contains(&palm.hull, p, 1e-12) {
                v.push(Violation::GripPointOutsideHull(i));
            }
        }
    }
    Validation { violations: v }
}

/// Validation plus the requirement that every finger is finalized.
pub fn validate_complete(design: &DesignGraph) -> Validation {
    let mut v = validate(design);
    for (i, f) in design.fingers.iter().enumerate() {
        if f.is_open() {
            v.violations.push(Violation::Incomplete { finger: i });
        }
    }
    v
}
