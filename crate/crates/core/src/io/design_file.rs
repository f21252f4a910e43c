//! JSON design documents.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design::{validate, DesignGraph, FingerSpec, FingertipType, LinkSpec, PalmLayout, PlacementMode};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::grammar::GenParams;

pub const DESIGN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PalmDocument {
    pub mode: PlacementMode,
    pub radius_m: f64,
    pub thickness_m: f64,
    pub slot_angles_rad: Vec<f64>,
    pub grip_points: Vec<[f64; 2]>,
    /// Counter-clockwise hull vertices.
    pub hull: Vec<[f64; 2]>,
}

fn is_true(b: &bool) -> bool {
    *b
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerDocument {
    pub slot_angle_rad: f64,
    pub joint_count: u8,
    pub g1: u8,
    pub g2: u8,
    pub link_codes: Vec<u8>,
    pub fingertip: FingertipType,
    /// Omitted for finalized fingers.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDocument {
    pub schema_version: u32,
    /// Generator settings the design was drawn with, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GenParams>,
    pub palm: PalmDocument,
    pub fingers: Vec<FingerDocument>,
    /// Scores keyed by evaluator id.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scores: BTreeMap<String, f64>,
}

fn pair(p: &Point2) -> [f64; 2] {
    [p.x, p.y]
}

impl DesignDocument {
    pub fn new(design: &DesignGraph) -> Self {
        let palm = &design.palm;
        DesignDocument {
            schema_version: DESIGN_SCHEMA_VERSION,
            generator: None,
            palm: PalmDocument {
                mode: palm.mode,
                radius_m: palm.radius_m,
                thickness_m: palm.thickness_m,
                slot_angles_rad: palm.slot_angles.clone(),
                grip_points: palm.grip_points.iter().map(pair).collect(),
                hull: palm.hull.iter().map(pair).collect(),
            },
            fingers: design
                .fingers
                .iter()
                .map(|f| FingerDocument {
                    slot_angle_rad: f.slot_angle_rad,
                    joint_count: f.joint_count,
                    g1: f.g1,
                    g2: f.g2,
                    link_codes: f.links.iter().map(|l| l.code).collect(),
                    fingertip: f.fingertip,
                    terminal: f.terminal,
                })
                .collect(),
            scores: BTreeMap::new(),
        }
    }

    pub fn with_generator(mut self, gen: &GenParams) -> Self {
        self.generator = Some(gen.clone());
        self
    }

    pub fn with_score(mut self, evaluator: &str, score: f64) -> Self {
        self.scores.insert(evaluator.to_string(), score);
        self
    }

    /// The design this document describes, checked against every structural invariant.
    pub fn to_design(&self) -> Result<DesignGraph> {
        let point = |p: &[f64; 2]| Point2::new(p[0], p[1]);
        let p = &self.palm;
        let design = DesignGraph {
            palm: PalmLayout {
                mode: p.mode,
                radius_m: p.radius_m,
                slot_angles: p.slot_angles_rad.clone(),
                grip_points: p.grip_points.iter().map(point).collect(),
                hull: p.hull.iter().map(point).collect(),
                thickness_m: p.thickness_m,
            },
            fingers: self
                .fingers
                .iter()
                .map(|f| FingerSpec {
                    slot_angle_rad: f.slot_angle_rad,
                    joint_count: f.joint_count,
                    g1: f.g1,
                    g2: f.g2,
                    links: f.link_codes.iter().map(|&c| LinkSpec::new(c)).collect(),
                    fingertip: f.fingertip,
                    terminal: f.terminal,
                })
                .collect(),
        };
        validate(&design).into_result()?;
        Ok(design)
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

fn parse_error(source: &str, err: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = err.path().to_string();
    let inner = err.into_inner();
    Error::Parse {
        path: format!("{source}:{}:{} ({path})", inner.line(), inner.column()),
        message: inner.to_string(),
    }
}

/// Parses a design document; `source` names the input in diagnostics.
pub fn parse_design_document(text: &str, source: &str) -> Result<DesignDocument> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: format!("{source}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    match probe.schema_version {
        Some(DESIGN_SCHEMA_VERSION) => {}
        Some(found) => return Err(Error::SchemaVersion { expected: DESIGN_SCHEMA_VERSION, found }),
        None => {
            return Err(Error::Parse { path: format!("{source} (schema_version)"), message: "missing field".into() })
        }
    }
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| parse_error(source, e))
}

/// Pretty JSON with fields in declaration order and shortest round-trip floats.
pub fn serialize_document(doc: &DesignDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("design documents always serialize");
    s.push('\n');
    s
}

pub fn serialize_design(design: &DesignGraph) -> String {
    serialize_document(&DesignDocument::new(design))
}

pub fn deserialize_design(text: &str) -> Result<DesignGraph> {
    parse_design_document(text, "<input>")?.to_design()
}

pub fn write_design_file(path: &Path, doc: &DesignDocument) -> Result<()> {
    fs::write(path, serialize_document(doc)).map_err(|e| Error::io(path, e))
}

pub fn read_design_file(path: &Path) -> Result<DesignDocument> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_design_document(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::is_equivalent;
    use crate::grammar::generate_hand;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> DesignGraph {
        generate_hand(&GenParams::default(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let d = sample();
        let text = serialize_design(&d);
        let back = deserialize_design(&text).unwrap();
        assert_eq!(back, d);
        assert!(is_equivalent(&back, &d));
        assert_eq!(serialize_design(&back), text);
    }

    #[test]
    fn partial_designs_keep_open_fingers() {
        let d = sample().prefix(1);
        let text = serialize_design(&d);
        assert!(text.contains("\"terminal\": false"));
        assert_eq!(deserialize_design(&text).unwrap(), d);
    }

    #[test]
    fn unknown_fingertip_names_the_field() {
        let text = serialize_design(&sample()).replacen("\"fingertip\": \"", "\"fingertip\": \"spiky", 1);
        let err = deserialize_design(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("fingers[0].fingertip"), "{msg}");
        assert!(msg.contains("spiky"), "{msg}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = serialize_design(&sample()).replacen("\"palm\": {", "\"palm\": {\n    \"color\": 3,", 1);
        let msg = deserialize_design(&text).unwrap_err().to_string();
        assert!(msg.contains("color"), "{msg}");
    }

    #[test]
    fn schema_version_checked() {
        let text = serialize_design(&sample()).replacen("\"schema_version\": 1", "\"schema_version\": 7", 1);
        assert!(matches!(deserialize_design(&text), Err(Error::SchemaVersion { expected: 1, found: 7 })));
    }

    #[test]
    fn invalid_geometry_rejected() {
        let mut doc = DesignDocument::new(&sample());
        doc.fingers[0].g1 = 11;
        doc.fingers[0].link_codes[0] = 11;
        let text = serialize_document(&doc);
        assert!(matches!(deserialize_design(&text), Err(Error::InvalidDesign(_))));
    }

    #[test]
    fn malformed_text_reports_position() {
        let msg = deserialize_design("{\"schema_version\": 1,\n  \"palm\": [").unwrap_err().to_string();
        assert!(msg.contains("<input>:2:"), "{msg}");
    }

    #[test]
    fn annotations_survive() {
        let doc = DesignDocument::new(&sample()).with_generator(&GenParams::default()).with_score("rotation", 1.25);
        let back = parse_design_document(&serialize_document(&doc), "t").unwrap();
        assert_eq!(back, doc);
    }
}
