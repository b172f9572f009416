//! Property-based checks of the invariants that hold for every input.

use std::f64::consts::PI;

use proptest::prelude::*;

use kaleido_core::geometry::{coincidence_normals, sector_geometry, ParticleOrder};
use kaleido_core::io::{format_number, round_significant};
use kaleido_core::mass::{classify, feasible_ratio_limit, generate_family, sector_angle, CoxeterSpec, MassSequence};
use kaleido_core::stats::{ks_distance, poisson_cdf, spacing_histogram_from, wigner_cdf};

fn specs() -> Vec<CoxeterSpec> {
    let mut out = vec![CoxeterSpec::a3(), CoxeterSpec::c3(), CoxeterSpec::h3()];
    for rank in 4..=5 {
        out.push(CoxeterSpec::a(rank).unwrap());
        out.push(CoxeterSpec::c(rank).unwrap());
    }
    out
}

fn family_member(spec_index: usize, fraction: f64, m1: f64) -> (CoxeterSpec, MassSequence) {
    let spec = specs()[spec_index].clone();
    let r = fraction * feasible_ratio_limit(&spec);
    let masses = generate_family(&spec, m1, r * m1).unwrap();
    (spec, masses)
}

fn masses4() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.1f64..10.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_closes_every_kaleidoscope_angle(i in 0usize..7, f in 0.02f64..0.98, m1 in 0.1f64..10.0) {
        let (spec, m) = family_member(i, f, m1);
        for (k, &q) in spec.bracket.iter().enumerate() {
            let w = m.masses();
            let angle = sector_angle(w[k], w[k + 1], w[k + 2]).unwrap();
            prop_assert!((angle - PI / q as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn family_is_scale_covariant(i in 0usize..7, f in 0.02f64..0.98, c in 0.01f64..100.0) {
        let (spec, m) = family_member(i, f, 1.0);
        let scaled = generate_family(&spec, c, c * m.masses()[1]).unwrap();
        for (a, b) in m.masses().iter().zip(scaled.masses()) {
            prop_assert!((c * a - b).abs() <= 1e-12 * b.abs());
        }
        for (a, b) in m.fractions().iter().zip(scaled.fractions()) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn family_members_classify_as_their_group(i in 0usize..7, f in 0.02f64..0.98) {
        let (spec, m) = family_member(i, f, 1.0);
        let c = classify(&m).unwrap();
        prop_assert_eq!(&c.best, &spec);
        prop_assert!(c.max_deviation < 1e-12);
        prop_assert!(c.is_integrable());
    }

    #[test]
    fn reversed_orderings_are_congruent(m in masses4(), perm in 0usize..24) {
        let planes = coincidence_normals(&MassSequence::new(m.to_vec()).unwrap()).unwrap();
        let p = ParticleOrder::all()[perm];
        let a = sector_geometry(&planes, p).unwrap();
        let b = sector_geometry(&planes, p.reversed()).unwrap();
        prop_assert!((a.area - b.area).abs() < 1e-12);
        let mut x = a.dihedral_angles;
        let mut y = b.dihedral_angles;
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);
        for (u, v) in x.iter().zip(&y) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    /// The six sectors in which particle `l` is leftmost and the other three
    /// are adjacent meet along the line where those three coincide; their
    /// corner angles there fill the full turn.
    #[test]
    fn corner_angles_around_a_triple_line_sum_to_two_pi(m in masses4(), l in 0usize..4) {
        let planes = coincidence_normals(&MassSequence::new(m.to_vec()).unwrap()).unwrap();
        let mut total = 0.0;
        for p in ParticleOrder::all() {
            if p.0[0] == l {
                // Faces (Z_la, Z_ab, Z_bc): the middle and last faces meet
                // on the triple line.
                total += sector_geometry(&planes, p).unwrap().dihedral_angles[1];
            }
        }
        prop_assert!((total - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn disjoint_pairs_meet_at_right_angles(m in masses4(), perm in 0usize..24) {
        let planes = coincidence_normals(&MassSequence::new(m.to_vec()).unwrap()).unwrap();
        let g = sector_geometry(&planes, ParticleOrder::all()[perm]).unwrap();
        // Corner c joins Z_{p1p2} and Z_{p3p4}.
        prop_assert!((g.dihedral_angles[2] - PI / 2.0).abs() < 1e-12);
        let p = ParticleOrder::all()[perm].0;
        let w = |i: usize| m[p[i]];
        prop_assert!((g.dihedral_angles[0] - sector_angle(w(0), w(1), w(2)).unwrap()).abs() < 1e-12);
        prop_assert!((g.dihedral_angles[1] - sector_angle(w(1), w(2), w(3)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn histogram_has_unit_mass(spacings in prop::collection::vec(0.0f64..5.0, 60..300), bins in 4usize..40) {
        let h = spacing_histogram_from(&spacings, bins).unwrap();
        let mass: f64 = h.rows().map(|(l, r, d)| (r - l) * d).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&h.ks_poisson));
        prop_assert!((0.0..=1.0).contains(&h.ks_wigner));
    }

    #[test]
    fn ks_distance_is_bounded(samples in prop::collection::vec(0.0f64..6.0, 1..200)) {
        for d in [ks_distance(&samples, poisson_cdf), ks_distance(&samples, wigner_cdf)] {
            prop_assert!(d > 0.0 && d <= 1.0);
        }
    }

    #[test]
    fn number_formatting_round_trips(x in prop::num::f64::NORMAL) {
        let parsed: f64 = format_number(x).parse().unwrap();
        prop_assert_eq!(parsed, round_significant(x, 12));
        prop_assert!((parsed - x).abs() <= 5e-12 * x.abs());
    }
}
