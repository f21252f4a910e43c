//! Robot-description export: links, joints, origins and limits only.

use std::fmt::Write;

use crate::design::{action_mask, canonical_form, validate_complete, DesignGraph};
use crate::error::Result;
use crate::eval::joint_limits;

/// Counts of what [`export_kinematic_tree`] emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExportSummary {
    pub links: usize,
    pub joints: usize,
}

/// Describes the canonical form of a complete design as a link/joint tree.
/// Each present finger gets a yaw joint into a zero-length base link, then
/// one flexion joint per link; absent fingers are skipped.
pub fn export_kinematic_tree(design: &DesignGraph) -> Result<(String, ExportSummary)> {
    validate_complete(design).into_result()?;
    let d = canonical_form(design);
    let mut out = String::new();
    let mut links = 1;
    let mut joints = 0;
    let w = &mut out;
    writeln!(w, "<robot name=\"hand\">").unwrap();
    writeln!(w, "  <link name=\"palm\">").unwrap();
    writeln!(w, "    <geometry>").unwrap();
    writeln!(w, "      <prism thickness=\"{}\">", d.palm.thickness_m).unwrap();
    for p in &d.palm.hull {
        writeln!(w, "        <vertex x=\"{}\" y=\"{}\"/>", p.x, p.y).unwrap();
    }
    writeln!(w, "      </prism>").unwrap();
    writeln!(w, "    </geometry>").unwrap();
    writeln!(w, "  </link>").unwrap();
    for (i, f) in d.fingers.iter().enumerate().filter(|(_, f)| f.is_present()) {
        let limits = joint_limits(f.links.len());
        let pos = d.palm.slot_position(f.slot_angle_rad);
        let base = format!("finger{i}_base");
        writeln!(w, "  <link name=\"{base}\"/>").unwrap();
        writeln!(w, "  <joint name=\"finger{i}_yaw\" type=\"revolute\">").unwrap();
        writeln!(w, "    <parent link=\"palm\"/>").unwrap();
        writeln!(w, "    <child link=\"{base}\"/>").unwrap();
        writeln!(w, "    <origin xyz=\"{} {} 0\" rpy=\"0 0 {}\"/>", pos.x, pos.y, f.slot_angle_rad).unwrap();
        writeln!(w, "    <axis xyz=\"0 0 1\"/>").unwrap();
        writeln!(w, "    <limit lower=\"{}\" upper=\"{}\"/>", limits[0].0, limits[0].1).unwrap();
        writeln!(w, "  </joint>").unwrap();
        links += 1;
        joints += 1;
        let mut parent = base;
        let mut offset = 0.0;
        for (j, link) in f.links.iter().enumerate() {
            let name = format!("finger{i}_link{j}");
            let len = link.length_m();
            let distal = j + 1 == f.links.len();
            if distal {
                writeln!(w, "  <link name=\"{name}\" fingertip=\"{}\">", format!("{:?}", f.fingertip).to_lowercase()).unwrap();
            } else {
                writeln!(w, "  <link name=\"{name}\">").unwrap();
            }
            writeln!(w, "    <geometry><segment length=\"{len}\" code=\"{}\"/></geometry>", link.code).unwrap();
            writeln!(w, "  </link>").unwrap();
            writeln!(w, "  <joint name=\"finger{i}_flex{j}\" type=\"revolute\">").unwrap();
            writeln!(w, "    <parent link=\"{parent}\"/>").unwrap();
            writeln!(w, "    <child link=\"{name}\"/>").unwrap();
            writeln!(w, "    <origin xyz=\"{offset} 0 0\" rpy=\"0 0 0\"/>").unwrap();
            // positive flexion lifts the chain from the palm plane toward +z
            writeln!(w, "    <axis xyz=\"0 -1 0\"/>").unwrap();
            writeln!(w, "    <limit lower=\"{}\" upper=\"{}\"/>", limits[j + 1].0, limits[j + 1].1).unwrap();
            writeln!(w, "  </joint>").unwrap();
            links += 1;
            joints += 1;
            parent = name;
            offset = len;
        }
    }
    writeln!(w, "</robot>").unwrap();
    debug_assert_eq!(joints, action_mask(&d)?.popcount());
    Ok((out, ExportSummary { links, joints }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::test_support::symmetric;
    use crate::design::FingertipType::*;
    use crate::design::{FLEXION_MAX_RAD, YAW_LIMIT_RAD};

    #[test]
    fn three_by_three_counts() {
        let d = symmetric(&[(3, 2, 5, Standard), (3, 1, 1, Thin), (3, 9, 4, Rounded)]);
        let (text, s) = export_kinematic_tree(&d).unwrap();
        assert_eq!(s, ExportSummary { links: 13, joints: 12 });
        assert_eq!(text.matches("<link ").count(), 13);
        assert_eq!(text.matches("<joint ").count(), 12);
        assert_eq!(s.joints, action_mask(&d).unwrap().popcount());
    }

    #[test]
    fn limits_are_the_kinematic_limits() {
        let d = symmetric(&[(2, 2, 2, Standard); 3]);
        let (text, _) = export_kinematic_tree(&d).unwrap();
        let yaw = format!("lower=\"{}\" upper=\"{}\"", -YAW_LIMIT_RAD, YAW_LIMIT_RAD);
        let flex = format!("lower=\"0\" upper=\"{}\"", FLEXION_MAX_RAD);
        assert_eq!(text.matches(&yaw).count(), 3);
        assert_eq!(text.matches(&flex).count(), 6);
    }

    #[test]
    fn equivalent_designs_export_identically() {
        let a = symmetric(&[(3, 4, 7, Standard), (2, 1, 9, Thin), (3, 5, 5, Rounded)]);
        let b = symmetric(&[(2, 1, 9, Thin), (3, 5, 5, Rounded), (3, 4, 7, Standard)]);
        assert_eq!(export_kinematic_tree(&a).unwrap().0, export_kinematic_tree(&b).unwrap().0);
    }

    #[test]
    fn partial_design_rejected() {
        let d = symmetric(&[(3, 4, 7, Standard); 3]).prefix(1);
        assert!(export_kinematic_tree(&d).is_err());
    }

    #[test]
    fn absent_fingers_are_skipped() {
        let d = symmetric(&[(3, 1, 1, Standard), (0, 1, 1, Standard), (2, 3, 3, Wedged)]);
        let (_, s) = export_kinematic_tree(&d).unwrap();
        assert_eq!(s, ExportSummary { links: 1 + 4 + 3, joints: 7 });
    }
}
