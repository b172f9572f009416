//! Finite reflection groups in three dimensions, generated from simple roots.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{coincidence_normals, ParticleOrder};
use crate::mass::{CoxeterSpec, MassSequence};
use crate::polynomial::HomogeneousPolynomial;

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Frobenius distance below which two group elements are identified.
pub const ELEMENT_TOLERANCE: f64 = 1e-9;
const ROOT_ANGLE_TOLERANCE: f64 = 1e-8;
const LARGEST_RANK3_ORDER: usize = 120;

#[derive(Clone, Debug)]
pub struct OrthogonalElement {
    pub matrix: Mat3,
    pub det: i8,
    /// Rotation angle in `[0, π]`; for improper elements the angle of the
    /// rotoreflection `σ_h C(φ)`.
    pub rotation_angle: f64,
    /// `+1` for even products of reflections, equal to `det`.
    pub parity: i8,
}

impl OrthogonalElement {
    pub fn new(matrix: Mat3) -> Self {
        let det = if matrix.determinant() > 0.0 { 1 } else { -1 };
        let trace = matrix.trace();
        let cos = if det == 1 {
            (trace - 1.0) / 2.0
        } else {
            (trace + 1.0) / 2.0
        };
        Self {
            matrix,
            det,
            rotation_angle: cos.clamp(-1.0, 1.0).acos(),
            parity: det,
        }
    }

    pub fn reflection(normal: &Vec3) -> Self {
        let n = normal.normalize();
        Self::new(Mat3::identity() - 2.0 * n * n.transpose())
    }

    pub fn is_reflection(&self) -> bool {
        self.det == -1 && (self.matrix.trace() - 1.0).abs() < ELEMENT_TOLERANCE
    }

    /// Smallest `k >= 1` with `g^k = 1`, searching up to `limit`.
    pub fn order(&self, limit: u32) -> Option<u32> {
        let mut power = self.matrix;
        for k in 1..=limit {
            if (power - Mat3::identity()).norm() < ELEMENT_TOLERANCE {
                return Some(k);
            }
            power *= self.matrix;
        }
        None
    }

    /// Unit rotation axis of a proper rotation by an angle in `(0, π)`.
    pub fn rotation_axis(&self) -> Option<Vec3> {
        let m = &self.matrix;
        let v = Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
        let n = v.norm();
        (self.det == 1 && n > 1e-8).then(|| v / n)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjugacyClass {
    pub angle: f64,
    pub parity: i8,
    pub size: usize,
    pub element_order: u32,
    #[serde(skip)]
    pub members: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ReflectionGroup {
    pub spec: CoxeterSpec,
    pub elements: Vec<OrthogonalElement>,
    pub simple_roots: [Vec3; 3],
    /// Indices into `elements`.
    pub reflections: Vec<usize>,
    pub classes: Vec<ConjugacyClass>,
    /// `elements[i] = generator(words[i].1) · elements[words[i].0]`; the
    /// identity (index 0) points at itself.
    words: Vec<(usize, usize)>,
}

/// Serializable overview of a group.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub element_count: usize,
    pub reflection_count: usize,
    pub classes: Vec<ConjugacyClass>,
}

impl ReflectionGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> [OrthogonalElement; 3] {
        self.simple_roots.map(|r| OrthogonalElement::reflection(&r))
    }

    /// For element `i`: the index of `parent` and generator `k` with
    /// `g_i = s_k g_parent`. `None` for the identity.
    pub fn word_step(&self, i: usize) -> Option<(usize, usize)> {
        (i != 0).then(|| self.words[i])
    }

    /// Unit normals of all reflections, in element order.
    pub fn reflection_normals(&self) -> Vec<Vec3> {
        self.reflections
            .iter()
            .map(|&i| {
                // (I - R)/2 = n nᵀ; its largest column is a multiple of n.
                let p = (Mat3::identity() - self.elements[i].matrix) / 2.0;
                let col = (0..3)
                    .map(|j| p.column(j).into_owned())
                    .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                    .expect("three columns");
                col.normalize()
            })
            .collect()
    }

    pub fn summary(&self) -> GroupSummary {
        GroupSummary {
            group: self.spec.name(),
            element_count: self.order(),
            reflection_count: self.reflections.len(),
            classes: self.classes.clone(),
        }
    }
}

fn find(elements: &[OrthogonalElement], m: &Mat3) -> Option<usize> {
    elements.iter().position(|e| (e.matrix - m).norm() < ELEMENT_TOLERANCE)
}

/// Identify the rank-3 Coxeter group whose simple roots have these pairwise
/// angles.
fn identify(roots: &[Vec3; 3]) -> Result<CoxeterSpec> {
    let mut qs = Vec::new();
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let angle = roots[i].dot(&roots[j]).abs().min(1.0).acos();
        if angle < 1e-6 {
            return Err(Error::NonCoxeterRoots(format!("roots {i} and {j} are parallel")));
        }
        let q = (PI / angle).round();
        if (angle - PI / q).abs() > ROOT_ANGLE_TOLERANCE {
            return Err(Error::NonCoxeterRoots(format!(
                "angle {angle} between roots {i} and {j} is not pi/q for an integer q"
            )));
        }
        qs.push(q as u32);
    }
    let mut bracket: Vec<u32> = qs.iter().copied().filter(|&q| q != 2).collect();
    bracket.sort_unstable();
    match (qs.iter().filter(|&&q| q == 2).count(), bracket.as_slice()) {
        (1, [3, 3]) => Ok(CoxeterSpec::a3()),
        (1, [3, 4]) => Ok(CoxeterSpec::c3()),
        (1, [3, 5]) => Ok(CoxeterSpec::h3()),
        _ => Err(Error::NonCoxeterRoots(format!(
            "pairwise root brackets {qs:?} match none of A3, C3, H3"
        ))),
    }
}

/// Close the three simple reflections under multiplication.
pub fn generate_group(simple_roots: [Vec3; 3]) -> Result<ReflectionGroup> {
    for (k, r) in simple_roots.iter().enumerate() {
        if (r.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::NonCoxeterRoots(format!("root {k} has norm {}", r.norm())));
        }
    }
    let spec = identify(&simple_roots)?;
    let generators = simple_roots.map(|r| OrthogonalElement::reflection(&r).matrix);

    let cap = 2 * LARGEST_RANK3_ORDER;
    let mut elements = vec![OrthogonalElement::new(Mat3::identity())];
    let mut words = vec![(0, 0)];
    let mut frontier = 0;
    while frontier < elements.len() {
        let current = elements[frontier].matrix;
        for (k, s) in generators.iter().enumerate() {
            let product = s * current;
            if find(&elements, &product).is_none() {
                elements.push(OrthogonalElement::new(product));
                words.push((frontier, k));
                if elements.len() > cap {
                    return Err(Error::NonCoxeterRoots(format!("closure exceeded {cap} elements")));
                }
            }
        }
        frontier += 1;
    }
    if elements.len() as u64 != spec.order {
        return Err(Error::NonCoxeterRoots(format!(
            "closure has {} elements, {} needs {}",
            elements.len(),
            spec.name(),
            spec.order
        )));
    }

    let reflections: Vec<usize> = (0..elements.len()).filter(|&i| elements[i].is_reflection()).collect();
    let mut group = ReflectionGroup {
        spec,
        elements,
        simple_roots,
        reflections,
        classes: Vec::new(),
        words,
    };
    group.classes = conjugacy_classes(&group);
    Ok(group)
}

/// The group generated by the faces of the identity-ordering sector.
pub fn group_for_masses(masses: &MassSequence) -> Result<ReflectionGroup> {
    let planes = coincidence_normals(masses)?;
    generate_group(planes.sector_normals(ParticleOrder::IDENTITY))
}

/// Partition the group into conjugation orbits, sorted by parity (even
/// first) and then rotation angle.
pub fn conjugacy_classes(group: &ReflectionGroup) -> Vec<ConjugacyClass> {
    let n = group.elements.len();
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for g in 0..n {
        if assigned[g] {
            continue;
        }
        let m = group.elements[g].matrix;
        let mut members = Vec::new();
        for h in &group.elements {
            let conj = h.matrix * m * h.matrix.transpose();
            let idx = find(&group.elements, &conj).expect("group is closed under conjugation");
            if !assigned[idx] {
                assigned[idx] = true;
                members.push(idx);
            }
        }
        members.sort_unstable();
        let rep = &group.elements[g];
        classes.push(ConjugacyClass {
            angle: rep.rotation_angle,
            parity: rep.parity,
            size: members.len(),
            element_order: rep.order(2 * LARGEST_RANK3_ORDER as u32).expect("finite group element"),
            members,
        });
    }
    classes.sort_by(|a, b| b.parity.cmp(&a.parity).then(a.angle.total_cmp(&b.angle)));
    classes
}

/// `χ^λ = Σ_{μ=-λ}^{λ} cos(μφ) π^{λ-μ}` for rotation angle `φ` and parity `π`.
pub fn character_value(lambda: u32, angle: f64, parity: i8) -> f64 {
    let l = lambda as i64;
    (-l..=l)
        .map(|mu| {
            let sign = if parity < 0 && (l - mu) % 2 != 0 { -1.0 } else { 1.0 };
            sign * (mu as f64 * angle).cos()
        })
        .sum()
}

/// Character of the O(3) irrep `λ` on a conjugacy class.
pub fn o3_character(lambda: u32, class: &ConjugacyClass) -> f64 {
    character_value(lambda, class.angle, class.parity)
}

/// Multiplicity of the anti-invariant irrep in the O(3) irrep `λ`.
pub fn degeneracy(lambda: u32, group: &ReflectionGroup) -> Result<u32> {
    let total: f64 = group
        .classes
        .iter()
        .map(|c| c.size as f64 * c.parity as f64 * o3_character(lambda, c))
        .sum();
    let value = total / group.order() as f64;
    let rounded = value.round();
    if (value - rounded).abs() > 1e-6 || rounded < 0.0 {
        return Err(Error::CharacterInconsistency { lambda, value });
    }
    Ok(rounded as u32)
}

/// Allowed `λ ≤ lambda_max` with multiplicities, from the ladder
/// `λ = λ0 + a n1 + b n2` (or `q(n1 + 1)` for dihedral groups).
pub fn lambda_spectrum(spec: &CoxeterSpec, lambda_max: u64) -> Result<BTreeMap<u64, usize>> {
    let steps = spec.ladder_steps()?;
    let mut out = BTreeMap::new();
    for (lambda, _) in ladder_labels(spec.lambda0, &steps, lambda_max) {
        *out.entry(lambda).or_insert(0) += 1;
    }
    Ok(out)
}

/// Every `(λ, [n1, n2, ...])` with `λ ≤ lambda_max`, in enumeration order.
pub(crate) fn ladder_labels(lambda0: u64, steps: &[u64], lambda_max: u64) -> Vec<(u64, Vec<u64>)> {
    let mut out = Vec::new();
    let mut labels = vec![0u64; steps.len()];
    fn recurse(
        depth: usize,
        base: u64,
        steps: &[u64],
        max: u64,
        labels: &mut Vec<u64>,
        out: &mut Vec<(u64, Vec<u64>)>,
    ) {
        if depth == steps.len() {
            out.push((base, labels.clone()));
            return;
        }
        let mut n = 0;
        while base + n * steps[depth] <= max {
            labels[depth] = n;
            recurse(depth + 1, base + n * steps[depth], steps, max, labels, out);
            n += 1;
        }
        labels[depth] = 0;
    }
    if lambda0 <= lambda_max {
        recurse(0, lambda0, steps, lambda_max, &mut labels, &mut out);
    }
    out
}

/// Axis power sums `q_m(z) = Σ_σ (σ · z)^m` over the orbit of a principal
/// rotation axis (5-fold for H3, 4-fold for C3, 3-fold for A3), for the
/// three basic invariant degrees. Unnormalised.
pub fn invariant_polynomials(group: &ReflectionGroup) -> Result<Vec<HomogeneousPolynomial>> {
    let (fold, degrees): (u32, [u32; 3]) = match group.spec.bracket.iter().max() {
        Some(5) => (5, [2, 6, 10]),
        Some(4) => (4, [2, 4, 6]),
        Some(3) => (3, [2, 3, 4]),
        _ => return Err(Error::Unsupported(format!("no axis construction for {}", group.spec))),
    };
    let seed = group
        .elements
        .iter()
        .filter(|e| e.det == 1 && e.order(fold) == Some(fold))
        .find_map(|e| e.rotation_axis())
        .ok_or_else(|| Error::Unsupported(format!("{} has no {fold}-fold rotation", group.spec)))?;

    // Orbit of the axis, keeping one vector of each antipodal pair.
    let mut axes: Vec<Vec3> = Vec::new();
    for g in &group.elements {
        let v = g.matrix * seed;
        if !axes.iter().any(|a| (a - v).norm() < 1e-8 || (a + v).norm() < 1e-8) {
            axes.push(v);
        }
    }
    Ok(degrees
        .iter()
        .map(|&m| {
            axes.iter().fold(HomogeneousPolynomial::zero(m), |acc, a| {
                acc.add(&HomogeneousPolynomial::linear(a).pow(m))
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mass::{coincident_mass_ratios, generate_family};
    use approx::assert_abs_diff_eq;

    fn group(spec: CoxeterSpec, m1: f64, m2: f64) -> ReflectionGroup {
        group_for_masses(&generate_family(&spec, m1, m2).unwrap()).unwrap()
    }

    fn h3() -> ReflectionGroup {
        let spec = CoxeterSpec::h3();
        let (ratio, _, _) = coincident_mass_ratios(&spec)[0];
        group(spec, 1.0, ratio)
    }

    #[test]
    fn orders_and_reflection_counts() {
        let a3 = group_for_masses(&MassSequence::new(vec![1.0; 4]).unwrap()).unwrap();
        assert_eq!((a3.order(), a3.reflections.len()), (24, 6));
        let c3 = group_for_masses(&MassSequence::new(vec![3.0, 1.0, 2.0, 6.0]).unwrap()).unwrap();
        assert_eq!((c3.order(), c3.reflections.len()), (48, 9));
        let h3 = h3();
        assert_eq!((h3.order(), h3.reflections.len()), (120, 15));
        assert_eq!(h3.spec, CoxeterSpec::h3());
    }

    #[test]
    fn closure_and_inverses() {
        let g = h3();
        for a in &g.elements {
            assert!((a.matrix.transpose() * a.matrix - Mat3::identity()).norm() < 1e-12);
            assert!(find(&g.elements, &a.matrix.transpose()).is_some());
            for b in g.elements.iter().step_by(7) {
                assert!(find(&g.elements, &(a.matrix * b.matrix)).is_some());
            }
        }
        assert!(find(&g.elements, &Mat3::identity()).is_some());
    }

    #[test]
    fn words_reproduce_elements() {
        let g = h3();
        let gens = g.generators();
        for i in 1..g.order() {
            let (parent, k) = g.word_step(i).unwrap();
            let m = gens[k].matrix * g.elements[parent].matrix;
            assert!((m - g.elements[i].matrix).norm() < 1e-12);
        }
    }

    #[test]
    fn h3_class_table() {
        let g = h3();
        let mut rows: Vec<(i64, i8, u32, usize)> = g
            .classes
            .iter()
            .map(|c| ((c.angle / PI * 30.0).round() as i64, c.parity, c.element_order, c.size))
            .collect();
        rows.sort();
        // Angles in units of π/30.
        let mut want = vec![
            (0, 1, 1, 1),
            (12, 1, 5, 12),
            (24, 1, 5, 12),
            (20, 1, 3, 20),
            (30, 1, 2, 15),
            (30, -1, 2, 1),
            (6, -1, 10, 12),
            (18, -1, 10, 12),
            (10, -1, 6, 20),
            (0, -1, 2, 15),
        ];
        want.sort();
        assert_eq!(rows, want);
        assert_eq!(g.classes.iter().map(|c| c.size).sum::<usize>(), 120);
    }

    #[test]
    fn a3_identity_class() {
        let g = group_for_masses(&MassSequence::new(vec![1.0; 4]).unwrap()).unwrap();
        let first = &g.classes[0];
        assert_eq!((first.size, first.parity, first.element_order), (1, 1, 1));
        assert_abs_diff_eq!(first.angle, 0.0);
    }

    #[test]
    fn character_examples() {
        for lambda in 0..20 {
            assert_abs_diff_eq!(character_value(lambda, 0.0, -1), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                character_value(lambda, PI, -1),
                (2 * lambda + 1) as f64 * if lambda % 2 == 0 { 1.0 } else { -1.0 },
                epsilon = 1e-9
            );
        }
        assert_abs_diff_eq!(character_value(1, 0.0, 1), 3.0);
        // Dirichlet kernel for proper rotations.
        for (lambda, phi) in [(3, 0.7), (10, 2.0), (15, 1.2566)] {
            let kernel = ((lambda as f64 + 0.5) * phi).sin() / (phi / 2.0).sin();
            assert_abs_diff_eq!(character_value(lambda, phi, 1), kernel, epsilon = 1e-10);
        }
    }

    #[test]
    fn character_matches_trace_of_reflection_action() {
        // The reflection z3 -> -z3 acts on Y_λμ with sign (-1)^(λ+μ).
        for lambda in 0..8u32 {
            let trace: f64 = (-(lambda as i32)..=lambda as i32)
                .map(|mu| if (lambda as i32 + mu) % 2 == 0 { 1.0 } else { -1.0 })
                .sum();
            assert_abs_diff_eq!(character_value(lambda, 0.0, -1), trace);
        }
    }

    #[test]
    fn anti_invariant_character_is_normalised() {
        for g in [h3(), group(CoxeterSpec::c3(), 3.0, 1.0)] {
            let norm: f64 = g.classes.iter().map(|c| c.size as f64).sum::<f64>() / g.order() as f64;
            assert_abs_diff_eq!(norm, 1.0);
        }
    }

    #[test]
    fn degeneracy_examples() {
        let g = h3();
        assert_eq!(degeneracy(15, &g).unwrap(), 1);
        assert_eq!(degeneracy(45, &g).unwrap(), 2);
        assert_eq!(degeneracy(14, &g).unwrap(), 0);
    }

    #[test]
    fn spectrum_examples() {
        let h = lambda_spectrum(&CoxeterSpec::h3(), 35).unwrap();
        assert_eq!(
            h.into_iter().collect::<Vec<_>>(),
            vec![(15, 1), (21, 1), (25, 1), (27, 1), (31, 1), (33, 1), (35, 1)]
        );
        let a = lambda_spectrum(&CoxeterSpec::a3(), 14).unwrap();
        assert_eq!(
            a.into_iter().collect::<Vec<_>>(),
            vec![(6, 1), (9, 1), (10, 1), (12, 1), (13, 1), (14, 1)]
        );
        let c = lambda_spectrum(&CoxeterSpec::c3(), 9).unwrap();
        assert_eq!(c.into_iter().collect::<Vec<_>>(), vec![(9, 1)]);
        let i7 = lambda_spectrum(&CoxeterSpec::dihedral(7).unwrap(), 30).unwrap();
        assert_eq!(i7.keys().copied().collect::<Vec<_>>(), vec![7, 14, 21, 28]);
    }

    #[test]
    fn invariants_are_invariant() {
        for g in [
            h3(),
            group(CoxeterSpec::c3(), 3.0, 1.0),
            group(CoxeterSpec::a3(), 1.0, 1.0),
        ] {
            let qs = invariant_polynomials(&g).unwrap();
            for q in &qs {
                assert!(!q.is_zero(), "{} degree {}", g.spec, q.degree());
                for e in &g.elements {
                    let rotated = q.compose_linear(&e.matrix);
                    assert!(rotated.relative_distance(q) < 1e-10, "{} degree {}", g.spec, q.degree());
                }
            }
            assert!(qs[0]
                .proportionality(&HomogeneousPolynomial::radius_power(1), 1e-10)
                .is_some());
            if qs[1].degree().is_multiple_of(2) {
                assert!(qs[1].proportionality(&qs[0].pow(qs[1].degree() / 2), 1e-6).is_none());
            }
        }
    }

    #[test]
    fn h3_uses_six_axes_and_q6_is_independent() {
        let g = h3();
        let qs = invariant_polynomials(&g).unwrap();
        assert_eq!(qs.iter().map(|q| q.degree()).collect::<Vec<_>>(), vec![2, 6, 10]);
        // Σ over six unit axes of (a·z)^2 = 2 r^2 for an icosahedral star.
        assert!(qs[0]
            .proportionality(&HomogeneousPolynomial::radius_power(1), 1e-12)
            .is_some());
        assert_abs_diff_eq!(qs[0].coefficient([2, 0, 0]), 2.0, epsilon = 1e-12);
        assert!(qs[1].proportionality(&qs[0].pow(3), 1e-6).is_none());
    }

    #[test]
    fn non_coxeter_roots_rejected() {
        let bad = [Vec3::x(), Vec3::new(0.3, 1.0, 0.0).normalize(), Vec3::z()];
        assert!(matches!(generate_group(bad), Err(Error::NonCoxeterRoots(_))));
        // A1 x A1 x A1: valid angles, but reducible.
        assert!(generate_group([Vec3::x(), Vec3::y(), Vec3::z()]).is_err());
    }
}
