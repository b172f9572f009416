//! Exact hyperangular eigenstates of Coxeter sectors and the energy ladder.
//!
//! Anti-invariant harmonics of degree `λ` are found by projecting real
//! spherical harmonics onto the sign representation of the group. Two
//! routes are provided: direct polynomial composition `Y(O(g) z)` (used for
//! single projections), and a representation-matrix route in the `Y_λμ`
//! coefficient basis (used for the orthonormal excited basis, where the
//! monomial basis is too ill-conditioned at large `λ`).

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::group::{degeneracy, ladder_labels, ReflectionGroup};
use crate::harmonics::{real_harmonics_at, real_spherical_harmonic};
use crate::mass::CoxeterSpec;
use crate::polynomial::HomogeneousPolynomial;
use crate::quadrature::sphere_rule;

/// Relative coefficient size below which a projection counts as zero.
const PROJECTION_ZERO: f64 = 1e-10;
/// Gram–Schmidt drop threshold relative to the unit input norm.
const RANK_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperangularState {
    pub lambda: u32,
    pub polynomial: HomogeneousPolynomial,
    /// Sphere L² norm of `polynomial`.
    pub norm: f64,
}

impl HyperangularState {
    fn normalized(lambda: u32, p: HomogeneousPolynomial) -> Self {
        let polynomial = p.normalized();
        let norm = polynomial.sphere_norm();
        Self {
            lambda,
            polynomial,
            norm,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    pub n: u64,
    pub nu: u64,
    pub n1: u64,
    pub n2: u64,
    pub lambda: u64,
    /// In units of `ħω`.
    pub energy: f64,
}

/// A point strictly inside the chamber `{r_k · z > 0}` of the simple roots.
fn chamber_point(group: &ReflectionGroup) -> Vector3<f64> {
    let r = &group.simple_roots;
    let m = nalgebra::Matrix3::from_rows(&[r[0].transpose(), r[1].transpose(), r[2].transpose()]);
    m.try_inverse()
        .map(|inv| inv * Vector3::new(1.0, 1.0, 1.0))
        .unwrap_or_else(|| r[0] + r[1] + r[2])
}

/// The product of all reflection linear forms, unit-normalised on the
/// sphere and positive inside the simple-root chamber.
pub fn ground_state(group: &ReflectionGroup) -> HyperangularState {
    let product = group
        .reflection_normals()
        .iter()
        .fold(HomogeneousPolynomial::one(), |acc, n| {
            acc.mul(&HomogeneousPolynomial::linear(n))
        });
    let sign = if product.evaluate(&chamber_point(group)) < 0.0 {
        -1.0
    } else {
        1.0
    };
    HyperangularState::normalized(group.spec.lambda0 as u32, product.scale(sign))
}

/// `(1/G) Σ_g det(g) · ρ^λ Y_λμ(O(g) z)` by polynomial composition. Returns
/// the zero polynomial when the projection vanishes to rounding.
pub fn project_anti_invariant(lambda: u32, mu: i32, group: &ReflectionGroup) -> HomogeneousPolynomial {
    let y = real_spherical_harmonic(lambda, mu);
    let scale = y.max_abs_coefficient();
    let g = group.order() as f64;
    let sum = group
        .elements
        .iter()
        .fold(HomogeneousPolynomial::zero(lambda), |acc, e| {
            acc.add_scaled(&y.compose_linear(&e.matrix), e.det as f64 / g)
        });
    if sum.max_abs_coefficient() < PROJECTION_ZERO * scale {
        HomogeneousPolynomial::zero(lambda)
    } else {
        sum.pruned(1e-14)
    }
}

/// Matrix of `z ↦ Y(O z)` in the real-harmonic basis:
/// `Y_μ(O z) = Σ_ν D[ν, μ] Y_ν(z)`.
fn representation_matrix(lambda: u32, o: &nalgebra::Matrix3<f64>) -> DMatrix<f64> {
    let n = 2 * lambda as usize + 1;
    let rule = sphere_rule(2 * lambda as usize);
    let npts = rule.weights.len();
    let mut plain = DMatrix::zeros(npts, n);
    let mut moved = DMatrix::zeros(npts, n);
    for (k, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let z = Vector3::from(*p);
        let a = real_harmonics_at(lambda, &z);
        let b = real_harmonics_at(lambda, &(o * z));
        for j in 0..n {
            plain[(k, j)] = w * a[j];
            moved[(k, j)] = b[j];
        }
    }
    plain.transpose() * moved
}

/// The anti-invariant projector `P^A` in the real-harmonic basis of degree
/// `λ`; column `μ + λ` holds the coefficients of `P^A Y_λμ`.
pub fn anti_invariant_projector(lambda: u32, group: &ReflectionGroup) -> DMatrix<f64> {
    let n = 2 * lambda as usize + 1;
    let generators = group.generators().map(|s| representation_matrix(lambda, &s.matrix));
    let mut reps: Vec<DMatrix<f64>> = Vec::with_capacity(group.order());
    reps.push(DMatrix::identity(n, n));
    let mut projector = DMatrix::identity(n, n);
    for i in 1..group.order() {
        let (parent, k) = group.word_step(i).expect("non-identity element");
        // O_i = S_k O_parent, so Y(O_i z) expands as D_parent · D_k.
        let d = &reps[parent] * &generators[k];
        projector += &d * group.elements[i].det as f64;
        reps.push(d);
    }
    projector / group.order() as f64
}

/// Order in which harmonics are projected: `μ = 0, +1, -1, +2, -2, ...`.
fn sweep_order(lambda: u32) -> impl Iterator<Item = i32> {
    std::iter::once(0).chain((1..=lambda as i32).flat_map(|m| [m, -m]))
}

/// Orthonormal anti-invariant coefficient vectors (real-harmonic basis).
pub fn excited_coefficients(lambda: u32, group: &ReflectionGroup) -> Result<Vec<DVector<f64>>> {
    let expected = degeneracy(lambda, group)? as usize;
    let projector = anti_invariant_projector(lambda, group);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for mu in sweep_order(lambda) {
        let mut v = projector.column((mu + lambda as i32) as usize).into_owned();
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dot(&v);
                v.axpy(-overlap, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > RANK_THRESHOLD {
            basis.push(v / norm);
        }
    }
    if basis.len() != expected {
        return Err(Error::RankDeficiency {
            lambda,
            found: basis.len(),
            expected,
        });
    }
    Ok(basis)
}

/// Expand `Σ_μ c_μ ρ^λ Y_λμ` into monomials.
pub fn harmonic_combination(lambda: u32, coefficients: &DVector<f64>) -> HomogeneousPolynomial {
    sweep_order(lambda).fold(HomogeneousPolynomial::zero(lambda), |acc, mu| {
        let c = coefficients[(mu + lambda as i32) as usize];
        if c.abs() < 1e-14 {
            acc
        } else {
            acc.add_scaled(&real_spherical_harmonic(lambda, mu), c)
        }
    })
}

/// `a_λ` orthonormal anti-invariant harmonic states of degree `λ`.
pub fn excited_basis(lambda: u32, group: &ReflectionGroup) -> Result<Vec<HyperangularState>> {
    Ok(excited_coefficients(lambda, group)?
        .iter()
        .map(|c| HyperangularState::normalized(lambda, harmonic_combination(lambda, c)))
        .collect())
}

/// Generalised Laguerre polynomial `L_ν^α(x)` by upward recurrence.
pub fn laguerre(nu: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if nu == 0 {
        return prev;
    }
    let mut current = 1.0 + alpha - x;
    for k in 1..nu {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * current - (k + alpha) * prev) / (k + 1.0);
        prev = current;
        current = next;
    }
    current
}

/// Hyperradial factor `A ρ^λ L_ν^{λ+(N-3)/2}(ρ²) e^{-ρ²/2}` of the
/// `(N-1)`-dimensional oscillator, normalised with measure `ρ^{N-2} dρ`.
pub fn radial_wavefunction(nu: u32, lambda: f64, rho: f64, particles: u32) -> f64 {
    let n = particles as f64;
    let alpha = lambda + (n - 3.0) / 2.0;
    let ln_a2 = 2f64.ln() + ln_gamma(nu as f64 + 1.0) - ln_gamma(nu as f64 + lambda + (n - 1.0) / 2.0);
    (0.5 * ln_a2).exp() * rho.powf(lambda) * laguerre(nu, alpha, rho * rho) * (-rho * rho / 2.0).exp()
}

/// All levels `E = n + 2ν + λ + N/2 ≤ e_max` for the group's ladder, sorted
/// by energy and then by `(n, ν, n1, n2)`.
pub fn energy_levels(spec: &CoxeterSpec, e_max: f64, particles: u32) -> Result<Vec<EnergyLevel>> {
    if particles as usize != spec.particles() {
        return Err(Error::InvalidParameter(format!(
            "{} describes {} particles, not {particles}",
            spec.name(),
            spec.particles()
        )));
    }
    let steps = spec.ladder_steps()?;
    let offset = particles as f64 / 2.0;
    let lambda_max = (e_max - offset).floor();
    if lambda_max < spec.lambda0 as f64 {
        return Ok(Vec::new());
    }
    let mut levels = Vec::new();
    for (lambda, labels) in ladder_labels(spec.lambda0, &steps, lambda_max as u64) {
        let base = lambda as f64 + offset;
        let mut nu = 0;
        while base + 2.0 * nu as f64 <= e_max {
            let mut n = 0;
            while base + (2 * nu + n) as f64 <= e_max {
                levels.push(EnergyLevel {
                    n,
                    nu,
                    n1: labels[0],
                    n2: labels.get(1).copied().unwrap_or(0),
                    lambda,
                    energy: base + (2 * nu + n) as f64,
                });
                n += 1;
            }
            nu += 1;
        }
    }
    levels.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then((a.n, a.nu, a.n1, a.n2).cmp(&(b.n, b.nu, b.n1, b.n2)))
    });
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::group_for_masses;
    use crate::mass::{coincident_mass_ratios, generate_family, MassSequence};
    use crate::quadrature::gauss_legendre;
    use approx::assert_abs_diff_eq;

    fn a3() -> ReflectionGroup {
        group_for_masses(&MassSequence::new(vec![1.0; 4]).unwrap()).unwrap()
    }

    fn c3() -> ReflectionGroup {
        group_for_masses(&MassSequence::new(vec![3.0, 1.0, 2.0, 6.0]).unwrap()).unwrap()
    }

    fn h3() -> ReflectionGroup {
        let spec = CoxeterSpec::h3();
        let (ratio, _, _) = coincident_mass_ratios(&spec)[0];
        group_for_masses(&generate_family(&spec, 1.0, ratio).unwrap()).unwrap()
    }

    fn assert_anti_invariant(p: &HomogeneousPolynomial, group: &ReflectionGroup) {
        for e in &group.elements {
            let moved = p.compose_linear(&e.matrix).scale(e.det as f64);
            assert!(moved.relative_distance(p) < 1e-9);
        }
    }

    #[test]
    fn ground_state_properties() {
        for (group, degree) in [(a3(), 6), (c3(), 9), (h3(), 15)] {
            let state = ground_state(&group);
            assert_eq!(state.polynomial.degree(), degree);
            assert_abs_diff_eq!(state.norm, 1.0, epsilon = 1e-12);
            let p = &state.polynomial;
            assert!(p.laplacian().max_abs_coefficient() < 1e-9 * p.max_abs_coefficient());
            let gens = group.generators();
            let flipped = p.compose_linear(&gens[0].matrix);
            assert!(flipped.add(p).max_abs_coefficient() < 1e-10 * p.max_abs_coefficient());
            for n in group.reflection_normals() {
                // Vanishes on each mirror: test a point in the plane.
                let t = n.cross(&Vector3::new(0.3, -0.7, 0.2)).normalize();
                assert!(p.evaluate(&t).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ground_state_positive_in_chamber() {
        let group = h3();
        let state = ground_state(&group);
        let r = group.simple_roots;
        let m = nalgebra::Matrix3::from_rows(&[r[0].transpose(), r[1].transpose(), r[2].transpose()]);
        let inv = m.try_inverse().unwrap();
        // Points with all root coordinates positive lie inside the chamber.
        for i in 1..10 {
            for j in 1..10 {
                let z = inv * Vector3::new(i as f64 / 10.0, j as f64 / 10.0, 0.5);
                assert!(state.polynomial.evaluate(&z) > 0.0);
            }
        }
    }

    #[test]
    fn projection_at_lambda0_matches_ground_state() {
        for group in [a3(), c3()] {
            let lambda = group.spec.lambda0 as u32;
            let ground = ground_state(&group).polynomial;
            let projected = sweep_order(lambda)
                .map(|mu| project_anti_invariant(lambda, mu, &group))
                .find(|p| !p.is_zero())
                .expect("some mu projects");
            assert!(projected.normalized().proportionality(&ground, 1e-8).is_some());
        }
    }

    #[test]
    fn forbidden_degree_projects_to_zero() {
        let group = a3();
        for mu in -7..=7 {
            assert!(project_anti_invariant(7, mu, &group).is_zero());
        }
    }

    #[test]
    fn projector_is_idempotent_with_trace_a_lambda() {
        let group = c3();
        for lambda in [9, 13, 17] {
            let p = anti_invariant_projector(lambda, &group);
            assert!((&p * &p - &p).norm() < 1e-10);
            assert!((p.transpose() - &p).norm() < 1e-10);
            assert_abs_diff_eq!(p.trace(), degeneracy(lambda, &group).unwrap() as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn excited_basis_examples() {
        let a = a3();
        let states = excited_basis(16, &a).unwrap();
        assert_eq!(states.len(), 1);
        assert_anti_invariant(&states[0].polynomial, &a);
        assert!(excited_basis(7, &a).unwrap().is_empty());
    }

    #[test]
    fn energy_ladder() {
        let h = energy_levels(&CoxeterSpec::h3(), 30.0, 4).unwrap();
        assert_eq!(h[0].energy, 17.0);
        assert_eq!((h[0].n, h[0].nu, h[0].n1, h[0].n2), (0, 0, 0, 0));
        let a = energy_levels(&CoxeterSpec::a3(), 8.0, 4).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].energy, 8.0);
        assert!(energy_levels(&CoxeterSpec::a3(), 8.0, 3).is_err());
        let i5 = energy_levels(&CoxeterSpec::dihedral(7).unwrap(), 20.0, 3).unwrap();
        assert_eq!(i5[0].lambda, 7);
        assert_eq!(i5[0].energy, 8.5);
        for w in h.windows(2) {
            assert!(w[0].energy <= w[1].energy);
        }
    }

    fn radial_integral(f: impl Fn(f64) -> f64) -> f64 {
        // Gauss–Legendre on [0, 12] is ample for Gaussian decay.
        let (x, w) = gauss_legendre(200);
        x.iter().zip(&w).map(|(x, w)| 6.0 * w * f(6.0 * (x + 1.0))).sum()
    }

    #[test]
    fn radial_closed_form_and_normalisation() {
        for rho in [0.1, 0.8, 2.5] {
            let want = (2.0 / std::f64::consts::PI.sqrt()).sqrt() * (-rho * rho / 2.0f64).exp();
            assert_abs_diff_eq!(radial_wavefunction(0, 0.0, rho, 2), want, epsilon = 1e-14);
        }
        for nu in 0..3 {
            for lambda in [0.0, 15.0] {
                let norm = radial_integral(|r| radial_wavefunction(nu, lambda, r, 4).powi(2) * r * r);
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
            }
        }
        let overlap =
            radial_integral(|r| radial_wavefunction(0, 15.0, r, 4) * radial_wavefunction(1, 15.0, r, 4) * r * r);
        assert_abs_diff_eq!(overlap, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn laguerre_values() {
        // L_2^a(x) = (x² - 2(a+2)x + (a+1)(a+2)) / 2.
        let (a, x) = (1.5, 0.7);
        assert_abs_diff_eq!(
            laguerre(2, a, x),
            (x * x - 2.0 * (a + 2.0) * x + (a + 1.0) * (a + 2.0)) / 2.0,
            epsilon = 1e-14
        );
    }
}
