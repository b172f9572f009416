//! Coincidence planes of four particles in H-type Jacobi coordinates and the
//! spherical-triangle geometry of each ordering sector.
//!
//! Relative coordinates (in units where `mω/ħ` factors are absorbed):
//!
//! * `z1 = √μ12 (x1 - x2)`
//! * `z2 = √μ34 (x3 - x4)`
//! * `z3 = √μ(12,34) (X12 - X34)`
//!
//! with `X12`, `X34` the pair centres of mass. In this frame `Z12` is the
//! plane `z1 = 0` and `Z34` the plane `z2 = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mass::MassSequence;

pub type Vec3 = Vector3<f64>;

/// Index of the unordered pair `{i, j}` (zero-based particles) in `0..6`.
fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => panic!("invalid particle pair ({i}, {j})"),
    }
}

/// A particle ordering `x_{p1} <= x_{p2} <= x_{p3} <= x_{p4}`, stored
/// zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParticleOrder(pub [usize; 4]);

impl ParticleOrder {
    pub const IDENTITY: ParticleOrder = ParticleOrder([0, 1, 2, 3]);

    /// Parse 1-based labels such as `[1, 3, 4, 2]`.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        let bad = || Error::InvalidOrdering(labels.to_vec());
        if labels.len() != 4 {
            return Err(bad());
        }
        let mut out = [0; 4];
        for (slot, &l) in out.iter_mut().zip(labels) {
            *slot = l.checked_sub(1).ok_or_else(bad)?;
        }
        if !crate::mass::is_permutation(&out, 4) {
            return Err(bad());
        }
        Ok(Self(out))
    }

    pub fn one_based(&self) -> [usize; 4] {
        self.0.map(|i| i + 1)
    }

    pub fn reversed(&self) -> Self {
        let [a, b, c, d] = self.0;
        Self([d, c, b, a])
    }

    /// All 24 orderings in lexicographic order.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(24);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        if crate::mass::is_permutation(&p, 4) {
                            out.push(Self(p));
                        }
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for ParticleOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.one_based();
        write!(f, "{a}{b}{c}{d}")
    }
}

impl FromStr for ParticleOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels: Vec<usize> = if s.contains(',') {
            s.split(',')
                .map(|p| p.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidOrdering(vec![]))?
        } else {
            s.trim()
                .chars()
                .map(|c| c.to_digit(10).map(|d| d as usize))
                .collect::<Option<_>>()
                .ok_or(Error::InvalidOrdering(vec![]))?
        };
        Self::from_one_based(&labels)
    }
}

/// The six coincidence-plane normals of four particles.
#[derive(Clone, Debug)]
pub struct PlaneSet {
    masses: [f64; 4],
    /// `x_i = position_forms[i] · z + X_cm`.
    position_forms: [Vec3; 4],
    normals: [Vec3; 6],
}

impl PlaneSet {
    pub fn masses(&self) -> [f64; 4] {
        self.masses
    }

    /// Unit normal of `Z_ij`, signed as in the H-type plane equations:
    /// `Z12 = +z1`, `Z34 = +z2`, positive `z3` component for `Z13`, `Z14`,
    /// negative for `Z23`, `Z24`.
    pub fn normal(&self, i: usize, j: usize) -> Vec3 {
        self.normals[pair_index(i, j)]
    }

    /// Unnormalised gradient of `x_i - x_j` with respect to `z`.
    pub fn difference_form(&self, i: usize, j: usize) -> Vec3 {
        self.position_forms[i] - self.position_forms[j]
    }

    /// Unit normal pointing into the half-space `x_lower < x_upper`.
    pub fn ordered_normal(&self, lower: usize, upper: usize) -> Vec3 {
        self.difference_form(upper, lower).normalize()
    }

    /// Relative Jacobi coordinates of particle positions `x`.
    pub fn relative_coordinates(&self, x: [f64; 4]) -> Vec3 {
        let [m1, m2, m3, m4] = self.masses;
        let (m12, m34) = (m1 + m2, m3 + m4);
        let mu12 = m1 * m2 / m12;
        let mu34 = m3 * m4 / m34;
        let mu = m12 * m34 / (m12 + m34);
        let x12 = (m1 * x[0] + m2 * x[1]) / m12;
        let x34 = (m3 * x[2] + m4 * x[3]) / m34;
        Vec3::new(
            mu12.sqrt() * (x[0] - x[1]),
            mu34.sqrt() * (x[2] - x[3]),
            mu.sqrt() * (x12 - x34),
        )
    }

    /// Inward normals of the ordering sector `p`: faces `Z_{p1p2}`,
    /// `Z_{p2p3}`, `Z_{p3p4}` in that order.
    pub fn sector_normals(&self, p: ParticleOrder) -> [Vec3; 3] {
        let [a, b, c, d] = p.0;
        [
            self.ordered_normal(a, b),
            self.ordered_normal(b, c),
            self.ordered_normal(c, d),
        ]
    }
}

/// Plane normals of four particles in the H-type Jacobi frame.
pub fn coincidence_normals(masses: &MassSequence) -> Result<PlaneSet> {
    if masses.len() != 4 {
        return Err(Error::MassCount {
            expected: 4,
            got: masses.len(),
        });
    }
    let m = masses.masses();
    let (m1, m2, m3, m4) = (m[0], m[1], m[2], m[3]);
    let (m12, m34) = (m1 + m2, m3 + m4);
    let total = m12 + m34;
    let s12 = (m1 * m2 / m12).sqrt();
    let s34 = (m3 * m4 / m34).sqrt();
    let s = (m12 * m34 / total).sqrt();
    let position_forms = [
        Vec3::new(m2 / m12 / s12, 0.0, m34 / total / s),
        Vec3::new(-m1 / m12 / s12, 0.0, m34 / total / s),
        Vec3::new(0.0, m4 / m34 / s34, -m12 / total / s),
        Vec3::new(0.0, -m3 / m34 / s34, -m12 / total / s),
    ];
    let diff = |i: usize, j: usize| (position_forms[i] - position_forms[j]).normalize();
    let normals = [diff(0, 1), diff(0, 2), diff(0, 3), diff(2, 1), diff(3, 1), diff(2, 3)];
    Ok(PlaneSet {
        masses: [m1, m2, m3, m4],
        position_forms,
        normals,
    })
}

/// A spherical triangle cut out by three great circles.
///
/// Faces are ordered `(first, middle, last)`; for an ordering sector they are
/// `Z_{p1p2}`, `Z_{p2p3}`, `Z_{p3p4}`. Corner `a` joins the first and middle
/// faces, `b` the middle and last, `c` the first and last.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorGeometry {
    pub ordering: Option<ParticleOrder>,
    /// Unit normals pointing into the sector.
    pub bounding_normals: [[f64; 3]; 3],
    /// Corner directions `[a, b, c]`.
    pub vertices: [[f64; 3]; 3],
    /// Interior dihedral angles `(ω_a, ω_b, ω_c)` at the corners.
    pub dihedral_angles: [f64; 3],
    /// Central angles of the sides opposite corners `a`, `b`, `c`.
    pub vertex_angles: [f64; 3],
    /// Area on the unit sphere (steradians).
    pub area: f64,
    /// Boundary length on the unit sphere.
    pub perimeter: f64,
}

impl SectorGeometry {
    /// Build the triangle `{z : n_k · z >= 0}` from its inward face normals.
    pub fn from_inward_normals(normals: [Vec3; 3]) -> Result<Self> {
        let n: Vec<Vec3> = normals.iter().map(|v| v.normalize()).collect();
        let interior = |k: usize, l: usize| (-n[k].dot(&n[l])).clamp(-1.0, 1.0).acos();
        let dihedral = [interior(0, 1), interior(1, 2), interior(0, 2)];

        let corner = |k: usize, l: usize, m: usize| -> Result<Vec3> {
            let v = n[k].cross(&n[l]);
            let norm = v.norm();
            if norm < 1e-12 {
                return Err(Error::DegenerateGeometry(format!("faces {k} and {l} are parallel")));
            }
            let v = v / norm;
            let side = n[m].dot(&v);
            if side.abs() < 1e-12 {
                return Err(Error::DegenerateGeometry("all three faces share a line".into()));
            }
            Ok(if side > 0.0 { v } else { -v })
        };
        let vertices = [corner(0, 1, 2)?, corner(1, 2, 0)?, corner(0, 2, 1)?];

        let area = dihedral.iter().sum::<f64>() - PI;
        if area <= 1e-12 {
            return Err(Error::DegenerateGeometry(format!("non-positive area {area:e}")));
        }
        let side = |a: f64, b: f64, c: f64| {
            ((a.cos() + b.cos() * c.cos()) / (b.sin() * c.sin()))
                .clamp(-1.0, 1.0)
                .acos()
        };
        let [wa, wb, wc] = dihedral;
        let vertex_angles = [side(wa, wb, wc), side(wb, wc, wa), side(wc, wa, wb)];
        Ok(Self {
            ordering: None,
            bounding_normals: [n[0].into(), n[1].into(), n[2].into()],
            vertices: vertices.map(Into::into),
            dihedral_angles: dihedral,
            vertex_angles,
            area,
            perimeter: vertex_angles.iter().sum(),
        })
    }

    pub fn normals(&self) -> [Vec3; 3] {
        self.bounding_normals.map(Vec3::from)
    }

    pub fn corner_directions(&self) -> [Vec3; 3] {
        self.vertices.map(Vec3::from)
    }

    /// Normalised sum of the corner directions.
    pub fn centroid_direction(&self) -> Vec3 {
        self.corner_directions().iter().sum::<Vec3>().normalize()
    }

    /// Direction equidistant from the three corners.
    pub fn circumcenter_direction(&self) -> Vec3 {
        let v = self.corner_directions();
        let c = (v[1] - v[0]).cross(&(v[2] - v[0])).normalize();
        if c.dot(&v[0]) < 0.0 {
            -c
        } else {
            c
        }
    }

    /// True when `z` lies in the closed sector (up to `tol`).
    pub fn contains(&self, z: &Vec3, tol: f64) -> bool {
        self.normals().iter().all(|n| n.dot(z) >= -tol)
    }
}

/// Geometry of the ordering sector `p`.
pub fn sector_geometry(planes: &PlaneSet, p: ParticleOrder) -> Result<SectorGeometry> {
    let mut geometry = SectorGeometry::from_inward_normals(planes.sector_normals(p))?;
    geometry.ordering = Some(p);
    Ok(geometry)
}
