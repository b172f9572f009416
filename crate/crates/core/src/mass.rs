//! Mass sequences, kaleidoscope angles and the one-parameter integrable
//! mass families attached to connected, non-branching Coxeter brackets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deviation below which an ordered mass sequence counts as an exact
/// kaleidoscope.
pub const INTEGRABLE_TOLERANCE: f64 = 1e-10;

/// Ordered particle masses together with their fractions of the total mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSequence {
    masses: Vec<f64>,
    fractions: Vec<f64>,
}

impl MassSequence {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.len() < 3 {
            return Err(Error::MassCount {
                expected: 3,
                got: masses.len(),
            });
        }
        for (index, &value) in masses.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidMass { index, value });
            }
        }
        let total: f64 = masses.iter().sum();
        let fractions = masses.iter().map(|m| m / total).collect();
        Ok(Self { masses, fractions })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Mass fractions `m_i / M`.
    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Same masses, rescaled so they sum to one.
    pub fn normalized(&self) -> Self {
        Self {
            masses: self.fractions.clone(),
            fractions: self.fractions.clone(),
        }
    }

    pub fn reversed(&self) -> Self {
        let masses: Vec<f64> = self.masses.iter().rev().copied().collect();
        let fractions = self.fractions.iter().rev().copied().collect();
        Self { masses, fractions }
    }

    /// Masses listed in the order `order` (zero-based particle indices).
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        if !is_permutation(order, self.len()) {
            return Err(Error::InvalidOrdering(order.iter().map(|i| i + 1).collect()));
        }
        Self::new(order.iter().map(|&i| self.masses[i]).collect())
    }

    /// The N-2 kaleidoscope angles `ω_{i,i+1,i+2}` of the ordering sector
    /// `1 2 ... N`.
    pub fn kaleidoscope_angles(&self) -> Vec<f64> {
        self.masses
            .windows(3)
            .map(|w| angle_unchecked(w[0], w[1], w[2]))
            .collect()
    }
}

pub(crate) fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

fn angle_unchecked(mi: f64, mj: f64, mk: f64) -> f64 {
    (mj * (mi + mj + mk) / (mi * mk)).sqrt().atan()
}

/// Angle between the coincidence planes `Z_ij` and `Z_jk` inside the sector
/// where particle `j` sits between `i` and `k`.
pub fn sector_angle(mi: f64, mj: f64, mk: f64) -> Result<f64> {
    for (index, value) in [mi, mj, mk].into_iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidMass { index, value });
        }
    }
    Ok(angle_unchecked(mi, mj, mk))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoxeterFamily {
    A,
    C,
    H,
    F,
    /// Dihedral `I2(q)` for q > 5 (q = 3, 4, 5 are reported as A2, C2, H2).
    I,
}

/// One row of the table of connected, non-branching finite Coxeter groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoxeterSpec {
    pub family: CoxeterFamily,
    pub rank: usize,
    pub bracket: Vec<u32>,
    /// Number of reflections; also the ground-state degree.
    pub lambda0: u64,
    /// Group order, i.e. the number of sectors tiling the sphere.
    pub order: u64,
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

impl CoxeterSpec {
    /// Dihedral group `I2(q)`, the rank-2 row used for three particles.
    pub fn dihedral(q: u32) -> Result<Self> {
        if q < 3 {
            return Err(Error::InvalidParameter(format!(
                "dihedral bracket must be at least 3, got {q}"
            )));
        }
        let family = match q {
            3 => CoxeterFamily::A,
            4 => CoxeterFamily::C,
            5 => CoxeterFamily::H,
            _ => CoxeterFamily::I,
        };
        Ok(Self {
            family,
            rank: 2,
            bracket: vec![q],
            lambda0: q as u64,
            order: 2 * q as u64,
        })
    }

    pub fn a(rank: usize) -> Result<Self> {
        if rank < 2 {
            return Err(Error::InvalidParameter(format!("A_m needs rank >= 2, got {rank}")));
        }
        if rank == 2 {
            return Self::dihedral(3);
        }
        let m = rank as u64;
        Ok(Self {
            family: CoxeterFamily::A,
            rank,
            bracket: vec![3; rank - 1],
            lambda0: m * (m + 1) / 2,
            order: factorial(m + 1),
        })
    }

    pub fn c(rank: usize) -> Result<Self> {
        if rank < 2 {
            return Err(Error::InvalidParameter(format!("C_m needs rank >= 2, got {rank}")));
        }
        if rank == 2 {
            return Self::dihedral(4);
        }
        let m = rank as u64;
        let mut bracket = vec![3; rank - 1];
        bracket[0] = 4;
        Ok(Self {
            family: CoxeterFamily::C,
            rank,
            bracket,
            lambda0: m * m,
            order: (1u64 << m) * factorial(m),
        })
    }

    pub fn h(rank: usize) -> Result<Self> {
        match rank {
            2 => Self::dihedral(5),
            3 => Ok(Self {
                family: CoxeterFamily::H,
                rank,
                bracket: vec![5, 3],
                lambda0: 15,
                order: 120,
            }),
            4 => Ok(Self {
                family: CoxeterFamily::H,
                rank,
                bracket: vec![5, 3, 3],
                lambda0: 60,
                order: 14400,
            }),
            _ => Err(Error::InvalidParameter(format!(
                "H_m exists only for rank 2..=4, got {rank}"
            ))),
        }
    }

    pub fn f4() -> Self {
        Self {
            family: CoxeterFamily::F,
            rank: 4,
            bracket: vec![3, 4, 3],
            lambda0: 24,
            order: 1152,
        }
    }

    pub fn a3() -> Self {
        Self::a(3).expect("rank 3")
    }

    pub fn c3() -> Self {
        Self::c(3).expect("rank 3")
    }

    pub fn h3() -> Self {
        Self::h(3).expect("rank 3")
    }

    /// Connected, non-branching brackets of the given rank (rank >= 3).
    pub fn candidates(rank: usize) -> Vec<Self> {
        let mut out = Vec::new();
        if rank < 3 {
            return out;
        }
        out.push(Self::a(rank).expect("rank >= 3"));
        out.push(Self::c(rank).expect("rank >= 3"));
        if rank <= 4 {
            out.push(Self::h(rank).expect("rank 3 or 4"));
        }
        if rank == 4 {
            out.push(Self::f4());
        }
        out
    }

    /// Number of particles whose ordering sectors this group tiles.
    pub fn particles(&self) -> usize {
        self.rank + 1
    }

    pub fn name(&self) -> String {
        match (self.family, self.rank) {
            (CoxeterFamily::I, _) => format!("I2({})", self.bracket[0]),
            (CoxeterFamily::A, r) => format!("A{r}"),
            (CoxeterFamily::C, r) => format!("C{r}"),
            (CoxeterFamily::H, r) => format!("H{r}"),
            (CoxeterFamily::F, r) => format!("F{r}"),
        }
    }

    /// Kaleidoscope angles `π/q_i`.
    pub fn target_angles(&self) -> Vec<f64> {
        self.bracket.iter().map(|&q| PI / q as f64).collect()
    }

    /// Steps `(a, b)` of the hyperangular ladder `λ = λ0 + a n1 + b n2`:
    /// the degrees of the non-quadratic basic invariants. Rank 2 has a single
    /// step `q`.
    pub fn ladder_steps(&self) -> Result<Vec<u64>> {
        match (self.rank, self.bracket.as_slice()) {
            (2, [q]) => Ok(vec![*q as u64]),
            (3, [3, 3]) => Ok(vec![3, 4]),
            (3, [4, 3]) | (3, [3, 4]) => Ok(vec![4, 6]),
            (3, [5, 3]) | (3, [3, 5]) => Ok(vec![6, 10]),
            _ => Err(Error::Unsupported(format!(
                "the exact ladder is implemented for rank 2 and rank 3 only, not {}",
                self.name()
            ))),
        }
    }
}

impl fmt::Display for CoxeterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for CoxeterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().to_ascii_uppercase();
        let unknown = || Error::UnknownGroup(s.to_string());
        if let Some(rest) = name.strip_prefix("I2") {
            let q = rest
                .trim_start_matches(['(', ':', '_'])
                .trim_end_matches(')')
                .parse::<u32>()
                .map_err(|_| unknown())?;
            return Self::dihedral(q);
        }
        let (head, digits) = name.split_at(1);
        let rank: usize = digits.parse().map_err(|_| unknown())?;
        match head {
            "A" => Self::a(rank),
            "B" | "C" => Self::c(rank),
            "H" => Self::h(rank),
            "F" if rank == 4 => Ok(Self::f4()),
            _ => Err(unknown()),
        }
    }
}

fn tan_squared(q: u32) -> f64 {
    let t = (PI / q as f64).tan();
    t * t
}

/// Masses of the integrable family of `spec` seeded with the first two
/// masses. Each new mass closes the kaleidoscope angle `π/q_i` exactly.
pub fn generate_family(spec: &CoxeterSpec, m1: f64, m2: f64) -> Result<MassSequence> {
    for (index, value) in [m1, m2].into_iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidMass { index, value });
        }
    }
    let mut masses = Vec::with_capacity(spec.particles());
    masses.push(m1);
    masses.push(m2);
    for (step, &q) in spec.bracket.iter().enumerate() {
        let (a, b) = (masses[step], masses[step + 1]);
        let denominator = tan_squared(q) * a - b;
        if denominator <= 0.0 {
            return Err(Error::InfeasibleParameter {
                group: spec.name(),
                ratio: m2 / m1,
                step: step + 1,
                denominator,
                upper: feasible_ratio_limit(spec),
            });
        }
        masses.push(b * (a + b) / denominator);
    }
    MassSequence::new(masses)
}

/// Supremum of the feasible ratios `r = m2/m1` of a family: every ratio in
/// `(0, limit)` yields positive masses, nothing above it does.
///
/// Successive ratios `ρ_i = m_{i+1}/m_i` obey `ρ_{i+1} = (1 + ρ_i)/(t_i - ρ_i)`
/// with `t_i = tan²(π/q_i)`, which is increasing in `ρ_i`; the bound is
/// propagated backwards from the last step.
pub fn feasible_ratio_limit(spec: &CoxeterSpec) -> f64 {
    let t: Vec<f64> = spec.bracket.iter().map(|&q| tan_squared(q)).collect();
    let mut bound = *t.last().expect("non-empty bracket");
    for i in (0..t.len() - 1).rev() {
        bound = (bound * t[i] - 1.0) / (1.0 + bound);
    }
    bound.max(0.0)
}

/// One feasible point of a family curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub ratio: f64,
    pub sequence: MassSequence,
}

impl FamilyPoint {
    /// Fraction of the last particle, the abscissa of the family plots.
    pub fn mu_last(&self) -> f64 {
        *self.sequence.fractions().last().expect("non-empty")
    }
}

/// Sampled family curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyCurve {
    pub group: CoxeterSpec,
    pub points: Vec<FamilyPoint>,
    /// Grid ratios that left the positivity domain.
    pub infeasible: Vec<f64>,
    /// Open feasibility interval `(0, upper)` of the ratio.
    pub upper: f64,
}

pub fn family_curve(spec: &CoxeterSpec, ratio_grid: &[f64]) -> Result<FamilyCurve> {
    let mut points = Vec::new();
    let mut infeasible = Vec::new();
    for &ratio in ratio_grid {
        if !(ratio.is_finite() && ratio > 0.0) {
            infeasible.push(ratio);
            continue;
        }
        match generate_family(spec, 1.0, ratio) {
            Ok(seq) => points.push(FamilyPoint {
                ratio,
                sequence: seq.normalized(),
            }),
            Err(Error::InfeasibleParameter { .. }) => infeasible.push(ratio),
            Err(e) => return Err(e),
        }
    }
    let upper = feasible_ratio_limit(spec);
    if points.is_empty() {
        return Err(Error::EmptyFamily {
            group: spec.name(),
            upper,
        });
    }
    Ok(FamilyCurve {
        group: spec.clone(),
        points,
        infeasible,
        upper,
    })
}

/// Uniform grid of `count` ratios strictly inside the feasibility interval.
pub fn ratio_grid(spec: &CoxeterSpec, count: usize) -> Vec<f64> {
    let upper = feasible_ratio_limit(spec);
    (1..=count).map(|k| upper * k as f64 / (count + 1) as f64).collect()
}

/// Ratios at which two particles of the family carry the same mass, located
/// by sign changes on a fine grid refined with bisection. Returned as
/// `(ratio, i, j)` with zero-based particle indices `i < j`.
pub fn coincident_mass_ratios(spec: &CoxeterSpec) -> Vec<(f64, usize, usize)> {
    let n = spec.particles();
    let grid = ratio_grid(spec, 4000);
    let masses = |r: f64| generate_family(spec, 1.0, r).map(|s| s.masses().to_vec());
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let diff = |r: f64| masses(r).map(|m| m[i] - m[j]);
            for w in grid.windows(2) {
                let (Ok(fa), Ok(fb)) = (diff(w[0]), diff(w[1])) else {
                    continue;
                };
                if fa == 0.0 {
                    out.push((w[0], i, j));
                    continue;
                }
                if fa.signum() == fb.signum() {
                    continue;
                }
                let (mut lo, mut hi, mut flo) = (w[0], w[1], fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = diff(mid).expect("inside feasible interval");
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= f64::EPSILON * hi {
                        break;
                    }
                }
                out.push((0.5 * (lo + hi), i, j));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Nearest Coxeter kaleidoscope for an ordered mass sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub best: CoxeterSpec,
    /// The match is against the reversed bracket (the mirror-image family).
    pub reversed: bool,
    pub measured_angles: Vec<f64>,
    pub target_angles: Vec<f64>,
    /// Chebyshev distance between measured and target angles, radians.
    pub max_deviation: f64,
    /// For three particles: the continuous fit `π/ω`.
    pub fitted_q: Option<f64>,
}

impl ClassificationResult {
    pub fn is_integrable(&self) -> bool {
        self.max_deviation < INTEGRABLE_TOLERANCE
    }
}

fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Compare the kaleidoscope angles of `masses` with every bracket of the
/// matching rank and return the closest one.
pub fn classify(masses: &MassSequence) -> Result<ClassificationResult> {
    let measured = masses.kaleidoscope_angles();
    if masses.len() == 3 {
        let omega = measured[0];
        let fitted = PI / omega;
        let q = (fitted.round() as u32).max(3);
        let best = CoxeterSpec::dihedral(q)?;
        let target = best.target_angles();
        return Ok(ClassificationResult {
            max_deviation: chebyshev(&measured, &target),
            best,
            reversed: false,
            measured_angles: measured,
            target_angles: target,
            fitted_q: Some(fitted),
        });
    }

    let mut best: Option<ClassificationResult> = None;
    for spec in CoxeterSpec::candidates(masses.len() - 1) {
        let forward = spec.target_angles();
        let backward: Vec<f64> = forward.iter().rev().copied().collect();
        for (reversed, target) in [(false, forward), (true, backward)] {
            if reversed && target.iter().eq(spec.target_angles().iter()) {
                continue;
            }
            let deviation = chebyshev(&measured, &target);
            if best.as_ref().is_none_or(|b| deviation < b.max_deviation) {
                best = Some(ClassificationResult {
                    best: spec.clone(),
                    reversed,
                    measured_angles: measured.clone(),
                    target_angles: target,
                    max_deviation: deviation,
                    fitted_q: None,
                });
            }
        }
    }
    Ok(best.expect("at least the A and C series are candidates"))
}
