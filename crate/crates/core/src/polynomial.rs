//! Homogeneous polynomials in three variables with exact sphere moments.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Exponent triple `[a, b, c]` for `z1^a z2^b z3^c`.
pub type Exponents = [u32; 3];

/// A homogeneous polynomial in `(z1, z2, z3)`.
///
/// Every stored exponent triple sums to `degree`, and exact zeros are never
/// stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPolynomial {
    degree: u32,
    coefficients: BTreeMap<Exponents, f64>,
}

/// One JSON record of a serialized polynomial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Term {
    pub exponents: Exponents,
    pub coefficient: f64,
}

impl HomogeneousPolynomial {
    pub fn zero(degree: u32) -> Self {
        Self {
            degree,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::monomial([0, 0, 0], 1.0)
    }

    pub fn monomial(exponents: Exponents, coefficient: f64) -> Self {
        let mut p = Self::zero(exponents.iter().sum());
        p.add_term(exponents, coefficient);
        p
    }

    /// The linear form `v · z`.
    pub fn linear(v: &Vector3<f64>) -> Self {
        let mut p = Self::zero(1);
        p.add_term([1, 0, 0], v[0]);
        p.add_term([0, 1, 0], v[1]);
        p.add_term([0, 0, 1], v[2]);
        p
    }

    /// `(z1² + z2² + z3²)^k`.
    pub fn radius_power(k: u32) -> Self {
        let mut r2 = Self::zero(2);
        r2.add_term([2, 0, 0], 1.0);
        r2.add_term([0, 2, 0], 1.0);
        r2.add_term([0, 0, 2], 1.0);
        r2.pow(k)
    }

    /// Build from terms; panics if any term has the wrong degree.
    pub fn from_terms(degree: u32, terms: impl IntoIterator<Item = (Exponents, f64)>) -> Self {
        let mut p = Self::zero(degree);
        for (e, c) in terms {
            assert_eq!(e.iter().sum::<u32>(), degree, "term {e:?} is not of degree {degree}");
            p.add_term(e, c);
        }
        p
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn num_vars(&self) -> usize {
        3
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn coefficient(&self, e: Exponents) -> f64 {
        self.coefficients.get(&e).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Exponents, f64)> + '_ {
        self.coefficients.iter().map(|(e, c)| (*e, *c))
    }

    pub fn to_terms(&self) -> Vec<Term> {
        self.terms()
            .map(|(exponents, coefficient)| Term { exponents, coefficient })
            .collect()
    }

    fn add_term(&mut self, e: Exponents, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.coefficients.entry(e).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coefficients.remove(&e);
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drop coefficients below `tol` times the largest one.
    pub fn pruned(mut self, tol: f64) -> Self {
        let cut = tol * self.max_abs_coefficient();
        self.coefficients.retain(|_, c| c.abs() > cut);
        self
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut p = Self::zero(self.degree);
        for (e, c) in self.terms() {
            p.add_term(e, c * factor);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, -1.0)
    }

    /// `self + factor · other`. Adding the zero polynomial of any degree is
    /// allowed; otherwise degrees must agree.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.scale(factor);
        }
        assert_eq!(self.degree, other.degree, "adding polynomials of different degree");
        let mut p = self.clone();
        for (e, c) in other.terms() {
            p.add_term(e, factor * c);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = Self::zero(self.degree + other.degree);
        for (e, c) in self.terms() {
            for (f, d) in other.terms() {
                p.add_term([e[0] + f[0], e[1] + f[1], e[2] + f[2]], c * d);
            }
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn evaluate(&self, z: &Vector3<f64>) -> f64 {
        let d = self.degree as usize;
        let mut powers = [vec![1.0; d + 1], vec![1.0; d + 1], vec![1.0; d + 1]];
        for (axis, table) in powers.iter_mut().enumerate() {
            for k in 1..=d {
                table[k] = table[k - 1] * z[axis];
            }
        }
        self.terms()
            .map(|(e, c)| c * powers[0][e[0] as usize] * powers[1][e[1] as usize] * powers[2][e[2] as usize])
            .sum()
    }

    /// The substituted polynomial `z ↦ p(M z)`.
    pub fn compose_linear(&self, m: &Matrix3<f64>) -> Self {
        let d = self.degree;
        let rows: Vec<Self> = (0..3)
            .map(|i| Self::linear(&Vector3::new(m[(i, 0)], m[(i, 1)], m[(i, 2)])))
            .collect();
        let powers: Vec<Vec<Self>> = rows
            .iter()
            .map(|row| {
                let mut table = vec![Self::one()];
                for k in 1..=d as usize {
                    let next = table[k - 1].mul(row);
                    table.push(next);
                }
                table
            })
            .collect();
        // Cache products of the first two row powers keyed by (a, b).
        let mut head: BTreeMap<(u32, u32), Self> = BTreeMap::new();
        let mut out = Self::zero(d);
        for (e, c) in self.terms() {
            let ab = head
                .entry((e[0], e[1]))
                .or_insert_with(|| powers[0][e[0] as usize].mul(&powers[1][e[1] as usize]));
            let term = ab.mul(&powers[2][e[2] as usize]);
            out = out.add_scaled(&term, c);
        }
        out
    }

    pub fn derivative(&self, axis: usize) -> Self {
        if self.degree == 0 {
            return Self::zero(0);
        }
        let mut p = Self::zero(self.degree - 1);
        for (mut e, c) in self.terms() {
            if e[axis] > 0 {
                let k = e[axis] as f64;
                e[axis] -= 1;
                p.add_term(e, c * k);
            }
        }
        p
    }

    pub fn laplacian(&self) -> Self {
        let mut p = Self::zero(self.degree.saturating_sub(2));
        for axis in 0..3 {
            p = p.add(&self.derivative(axis).derivative(axis));
        }
        p
    }

    /// `∫_{S²} p q dΩ` from the closed-form monomial moments.
    pub fn sphere_inner(&self, other: &Self) -> f64 {
        let mut sum = 0.0;
        for (e, c) in self.terms() {
            for (f, d) in other.terms() {
                sum += c * d * sphere_moment([e[0] + f[0], e[1] + f[1], e[2] + f[2]]);
            }
        }
        sum
    }

    pub fn sphere_norm(&self) -> f64 {
        self.sphere_inner(self).max(0.0).sqrt()
    }

    /// Rescaled to unit sphere L² norm. The zero polynomial is returned as is.
    pub fn normalized(&self) -> Self {
        let n = self.sphere_norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scale(1.0 / n)
        }
    }

    /// Largest coefficient difference relative to the largest coefficient of
    /// either operand.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let scale = self.max_abs_coefficient().max(other.max_abs_coefficient());
        if scale == 0.0 {
            return 0.0;
        }
        self.sub(other).max_abs_coefficient() / scale
    }

    /// If `self ≈ c · other` coefficient-wise within `tol` (relative), the
    /// factor `c`.
    pub fn proportionality(&self, other: &Self, tol: f64) -> Option<f64> {
        if self.is_zero() || other.is_zero() || self.degree != other.degree {
            return None;
        }
        let (lead, lead_value) = other
            .terms()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-zero polynomial");
        let factor = self.coefficient(lead) / lead_value;
        if factor == 0.0 {
            return None;
        }
        (self.relative_distance(&other.scale(factor)) < tol).then_some(factor)
    }
}

/// `ln(k!!)` indexed by `k`.
fn ln_double_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0f64; 2048];
        for k in 2..t.len() {
            t[k] = t[k - 2] + (k as f64).ln();
        }
        t
    })
}

/// `k!!` indexed by `k`, small enough to stay finite.
fn double_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![1.0f64; 200];
        for k in 2..t.len() {
            t[k] = t[k - 2] * k as f64;
        }
        t
    })
}

fn odd_double_factorial_ratio(a: u32, b: u32, c: u32) -> f64 {
    // (a-1)!! (b-1)!! (c-1)!! / (a+b+c+1)!!, exponents even.
    let top = (a + b + c + 1) as usize;
    let idx = |k: u32| (k as usize).saturating_sub(1);
    if top < double_factorials().len() {
        let t = double_factorials();
        t[idx(a)] * t[idx(b)] * t[idx(c)] / t[top]
    } else {
        let t = ln_double_factorials();
        (t[idx(a)] + t[idx(b)] + t[idx(c)] - t[top]).exp()
    }
}

/// `∫_{S²} z1^a z2^b z3^c dΩ`.
pub fn sphere_moment(e: Exponents) -> f64 {
    if e.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    4.0 * PI * odd_double_factorial_ratio(e[0], e[1], e[2])
}
