//! Contact wrench spaces and force closure.
//!
//! Each contact contributes the edges of a linearized friction cone,
//! `f_k = n + mu (cos a_k t1 + sin a_k t2)`, as wrenches `(f_k, p x f_k / L)`
//! with `L` the largest contact distance from the object centre. Two more
//! wrenches per contact bound the torsional friction a soft fingertip can
//! transmit about its normal. Closure is decided on the convex hull of all
//! wrenches in six dimensions; the margin is the origin's distance to the
//! nearest hull facet.

use std::collections::HashMap;

use nalgebra::{Matrix6xX, SMatrix, SVector};

use super::kinematics::Vec3;
use crate::error::{Error, Result};

pub const WRENCH_DIM: usize = 6;
pub type Wrench = SVector<f64, WRENCH_DIM>;

/// Torsional friction radius relative to the torque normalization length.
pub const DEFAULT_TORSION_RATIO: f64 = 0.2;

/// Relative size of the deterministic perturbation applied before hulling.
const JOGGLE: f64 = 1e-6;
/// Margins at or below this (relative to the wrench scale) do not count as closure.
const CLOSURE_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    /// Position relative to the object centre.
    pub point: Vec3,
    /// Unit normal pointing into the object.
    pub normal: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureResult {
    pub closed: bool,
    pub margin: f64,
}

fn v3(a: Vec3) -> nalgebra::Vector3<f64> {
    nalgebra::Vector3::new(a[0], a[1], a[2])
}

fn tangent_basis(n: &nalgebra::Vector3<f64>) -> (nalgebra::Vector3<f64>, nalgebra::Vector3<f64>) {
    let a = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        nalgebra::Vector3::x()
    } else if n.y.abs() <= n.z.abs() {
        nalgebra::Vector3::y()
    } else {
        nalgebra::Vector3::z()
    };
    let t1 = n.cross(&a).normalize();
    (t1, n.cross(&t1))
}

fn check_contacts(contacts: &[Contact]) -> Result<()> {
    if contacts.len() < 2 {
        return Err(Error::Degenerate(format!("{} contacts, need at least 2", contacts.len())));
    }
    for (i, c) in contacts.iter().enumerate() {
        let n = v3(c.normal).norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-6 || !c.point.iter().all(|x| x.is_finite()) {
            return Err(Error::Degenerate(format!("contact {i}: normal must be a finite unit vector")));
        }
        for (j, d) in contacts.iter().enumerate().skip(i + 1) {
            if (v3(c.point) - v3(d.point)).norm() < 1e-12 {
                return Err(Error::Degenerate(format!("contacts {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

/// All primitive wrenches of the contact set.
pub fn contact_wrenches(contacts: &[Contact], mu: f64, edges: usize, torsion_ratio: f64) -> Result<Vec<Wrench>> {
    check_contacts(contacts)?;
    if !(mu > 0.0 && mu.is_finite()) || edges < 3 {
        return Err(Error::OutOfRange(format!("friction {mu} with {edges} cone edges")));
    }
    let scale = contacts.iter().map(|c| v3(c.point).norm()).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut out = Vec::with_capacity(contacts.len() * (edges + 2));
    for c in contacts {
        let (p, n) = (v3(c.point), v3(c.normal));
        let (t1, t2) = tangent_basis(&n);
        let wrench = |f: nalgebra::Vector3<f64>, tau: nalgebra::Vector3<f64>| {
            Wrench::from_iterator(f.iter().chain(tau.iter()).copied())
        };
        for k in 0..edges {
            let a = std::f64::consts::TAU * k as f64 / edges as f64;
            let f = n + mu * (a.cos() * t1 + a.sin() * t2);
            out.push(wrench(f, p.cross(&f) / scale));
        }
        if torsion_ratio > 0.0 {
            let base = p.cross(&n) / scale;
            for s in [1.0, -1.0] {
                out.push(wrench(n, base + s * torsion_ratio * mu * n));
            }
        }
    }
    Ok(out)
}

/// `force_closure_with` using the default torsional friction ratio.
pub fn force_closure(contacts: &[Contact], mu: f64, edges: usize) -> Result<ClosureResult> {
    force_closure_with(contacts, mu, edges, DEFAULT_TORSION_RATIO)
}

pub fn force_closure_with(contacts: &[Contact], mu: f64, edges: usize, torsion_ratio: f64) -> Result<ClosureResult> {
    let w = contact_wrenches(contacts, mu, edges, torsion_ratio)?;
    let margin = hull_margin(&w);
    Ok(ClosureResult { closed: margin > 0.0, margin })
}

/// Largest radius of an origin-centred ball inside `conv(points)`, or 0 when
/// the origin is not strictly interior.
pub fn hull_margin(points: &[Wrench]) -> f64 {
    if points.len() <= WRENCH_DIM {
        return 0.0;
    }
    let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let m = Matrix6xX::from_columns(points);
    let sv = m.singular_values();
    if sv.iter().filter(|&&s| s > 1e-9 * scale).count() < WRENCH_DIM {
        return 0.0;
    }
    let joggled: Vec<Wrench> = points
        .iter()
        .enumerate()
        .map(|(i, p)| p + Wrench::from_fn(|k, _| JOGGLE * scale * jitter(i, k)))
        .collect();
    match Hull::build(&joggled) {
        Some(h) => {
            let margin = h.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
            if margin > CLOSURE_TOL * scale {
                margin
            } else {
                0.0
            }
        }
        None => 0.0,
    }
}

/// Deterministic value in [-1, 1] per (point, coordinate).
fn jitter(i: usize, k: usize) -> f64 {
    let mut x = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (k as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 31;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 29;
    (x >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

#[derive(Debug, Clone)]
struct Facet {
    verts: [usize; WRENCH_DIM],
    normal: Wrench,
    /// `normal . x = offset` on the facet; the interior has `normal . x < offset`.
    offset: f64,
}

struct Hull<'a> {
    points: &'a [Wrench],
    interior: Wrench,
    facets: Vec<Facet>,
}

impl<'a> Hull<'a> {
    /// Incremental beneath-beyond construction; `None` when the points do
    /// not span a full-dimensional simplex.
    fn build(points: &'a [Wrench]) -> Option<Hull<'a>> {
        let simplex = initial_simplex(points)?;
        let interior = simplex.iter().map(|&i| points[i]).sum::<Wrench>() / simplex.len() as f64;
        let mut hull = Hull { points, interior, facets: Vec::new() };
        for drop in 0..simplex.len() {
            let verts: Vec<usize> = simplex.iter().enumerate().filter(|&(k, _)| k != drop).map(|(_, &v)| v).collect();
            hull.facets.push(hull.facet(verts.try_into().ok()?)?);
        }
        let eps = 1e-12 * points.iter().map(|p| p.amax()).fold(0.0, f64::max);
        for (i, p) in points.iter().enumerate() {
            if simplex.contains(&i) {
                continue;
            }
            let visible: Vec<bool> = hull.facets.iter().map(|f| f.normal.dot(p) - f.offset > eps).collect();
            if !visible.iter().any(|&v| v) {
                continue;
            }
            let mut ridges: HashMap<[usize; WRENCH_DIM - 1], usize> = HashMap::new();
            for (f, _) in hull.facets.iter().zip(&visible).filter(|(_, &v)| v) {
                for drop in 0..WRENCH_DIM {
                    let mut r = [0usize; WRENCH_DIM - 1];
                    let mut k = 0;
                    for (j, &v) in f.verts.iter().enumerate() {
                        if j != drop {
                            r[k] = v;
                            k += 1;
                        }
                    }
                    r.sort_unstable();
                    *ridges.entry(r).or_insert(0) += 1;
                }
            }
            let mut kept: Vec<Facet> =
                hull.facets.drain(..).zip(visible).filter(|(_, v)| !v).map(|(f, _)| f).collect();
            let mut horizon: Vec<_> = ridges.into_iter().filter(|&(_, c)| c == 1).map(|(r, _)| r).collect();
            horizon.sort_unstable();
            for r in horizon {
                let mut verts = [i; WRENCH_DIM];
                verts[..WRENCH_DIM - 1].copy_from_slice(&r);
                if let Some(f) = hull.facet(verts) {
                    kept.push(f);
                }
            }
            hull.facets = kept;
        }
        Some(hull)
    }

    fn facet(&self, verts: [usize; WRENCH_DIM]) -> Option<Facet> {
        let base = self.points[verts[0]];
        let rows = SMatrix::<f64, { WRENCH_DIM - 1 }, WRENCH_DIM>::from_fn(|r, c| {
            self.points[verts[r + 1]][c] - base[c]
        });
        // generalized cross product of the edge vectors
        let mut normal = Wrench::zeros();
        for c in 0..WRENCH_DIM {
            let minor = SMatrix::<f64, { WRENCH_DIM - 1 }, { WRENCH_DIM - 1 }>::from_fn(|r, k| {
                rows[(r, if k < c { k } else { k + 1 })]
            });
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            normal[c] = sign * minor.determinant();
        }
        let len = normal.norm();
        if !(len > 0.0 && len.is_finite()) {
            return None;
        }
        normal /= len;
        let mut offset = normal.dot(&base);
        if normal.dot(&self.interior) > offset {
            normal = -normal;
            offset = -offset;
        }
        Some(Facet { verts, normal, offset })
    }
}

/// Indices of `WRENCH_DIM + 1` affinely independent points, chosen greedily
/// by distance from the affine span of those already picked.
fn initial_simplex(points: &[Wrench]) -> Option<Vec<usize>> {
    let centroid = points.iter().sum::<Wrench>() / points.len() as f64;
    let first = (0..points.len()).max_by(|&a, &b| {
        (points[a] - centroid).norm().total_cmp(&(points[b] - centroid).norm())
    })?;
    let mut chosen = vec![first];
    let mut basis: Vec<Wrench> = Vec::new();
    let residual = |p: &Wrench, basis: &[Wrench]| {
        let mut r = p - points[first];
        for b in basis {
            r -= b * b.dot(&r);
        }
        r
    };
    while chosen.len() <= WRENCH_DIM {
        let (idx, r) = (0..points.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| (i, residual(&points[i], &basis)))
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
        let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max);
        if r.norm() <= 1e-12 * scale {
            return None;
        }
        basis.push(r.normalize());
        chosen.push(idx);
    }
    Some(chosen)
}

/// Support function `max_i u . w_i`.
pub fn support(points: &[Wrench], u: &Wrench) -> f64 {
    points.iter().map(|w| w.dot(u)).fold(f64::NEG_INFINITY, f64::max)
}
