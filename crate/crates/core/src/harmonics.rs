//! Real spherical harmonics, both as homogeneous polynomials `ρ^λ Y_λμ(ẑ)`
//! and as point values from stable recurrences.
//!
//! Convention: `Y_λμ = √2 N_λ|μ| P_λ^|μ|(cos θ) cos(μφ)` for `μ > 0`, the zonal
//! `N_λ0 P_λ(cos θ)` for `μ = 0`, and `sin(|μ|φ)` for `μ < 0`. The associated
//! Legendre functions carry the Condon–Shortley phase `(-1)^m`.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::polynomial::HomogeneousPolynomial;

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `N_λm = √((2λ+1)/4π · (λ-m)!/(λ+m)!)`.
pub fn normalization(lambda: u32, m: u32) -> f64 {
    let ratio = (ln_factorial(lambda - m) - ln_factorial(lambda + m)).exp();
    ((2 * lambda + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

/// Coefficients of `d^m/dx^m P_λ(x)` as `(power, coefficient)` pairs.
fn legendre_derivative_coefficients(lambda: u32, m: u32) -> Vec<(u32, f64)> {
    // P_λ(x) = Σ_k a_k x^{λ-2k}, a_0 = C(2λ, λ) / 2^λ and
    // a_k / a_{k-1} = -(λ-2k+2)(λ-2k+1) / (2k (2λ-2k+1)).
    let l = lambda as f64;
    let mut a = (ln_factorial(2 * lambda) - 2.0 * ln_factorial(lambda) - l * 2f64.ln()).exp();
    let mut out = Vec::new();
    for k in 0..=lambda / 2 {
        if k > 0 {
            let kf = k as f64;
            a *= -(l - 2.0 * kf + 2.0) * (l - 2.0 * kf + 1.0) / (2.0 * kf * (2.0 * l - 2.0 * kf + 1.0));
        }
        let power = lambda - 2 * k;
        if power < m {
            break;
        }
        // Falling factorial power!/(power-m)!.
        let falling: f64 = (power - m + 1..=power).map(|j| j as f64).product();
        out.push((power - m, a * falling));
    }
    out
}

fn binomial(n: u32, k: u32) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp().round()
}

/// `ρ^λ Y_λμ(ẑ)` as an exact homogeneous polynomial of degree `λ`, with unit
/// sphere L² norm.
///
/// # Panics
/// If `|μ| > λ`.
pub fn real_spherical_harmonic(lambda: u32, mu: i32) -> HomogeneousPolynomial {
    let m = mu.unsigned_abs();
    assert!(m <= lambda, "|mu| = {m} exceeds lambda = {lambda}");

    // Legendre part: ρ^{λ-m} P_λ^{(m)}(z3/ρ) = Σ c_j z3^j ρ^{λ-m-j}.
    let mut legendre = HomogeneousPolynomial::zero(lambda - m);
    let mut r2 = HomogeneousPolynomial::one();
    let mut current_k = 0;
    // Powers of z3 arrive in descending order, so powers of ρ² ascend.
    for (power, c) in legendre_derivative_coefficients(lambda, m) {
        let k = (lambda - m - power) / 2;
        while current_k < k {
            r2 = r2.mul(&HomogeneousPolynomial::radius_power(1));
            current_k += 1;
        }
        let term = HomogeneousPolynomial::monomial([0, 0, power], c).mul(&r2);
        legendre = legendre.add(&term);
    }

    // Azimuthal part: Re or Im of (z1 + i z2)^m.
    let mut azimuthal = HomogeneousPolynomial::zero(m);
    for k in 0..=m {
        let phase = match (mu >= 0, k % 4) {
            (true, 0) => 1.0,
            (true, 2) => -1.0,
            (false, 1) => 1.0,
            (false, 3) => -1.0,
            _ => 0.0,
        };
        if phase != 0.0 {
            azimuthal = azimuthal.add(&HomogeneousPolynomial::monomial([m - k, k, 0], phase * binomial(m, k)));
        }
    }

    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let weight = if m == 0 { 1.0 } else { 2f64.sqrt() };
    legendre.mul(&azimuthal).scale(sign * weight * normalization(lambda, m))
}

/// Values `Y_λμ(ẑ)` for `μ = -λ..=λ` (index `μ + λ`) at the direction of `z`.
pub fn real_harmonics_at(lambda: u32, z: &Vector3<f64>) -> Vec<f64> {
    let l = lambda as usize;
    let u = z.normalize();
    let (x, y, c) = (u[0], u[1], u[2]);
    let mut out = vec![0.0; 2 * l + 1];

    // p̃_m^m = P̄_m^m / sin^m θ, normalised Legendre values without the sin
    // factor, which is carried by (x + iy)^m instead.
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    let (mut re, mut im) = (1.0, 0.0);
    for m in 0..=l {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            let next_re = re * x - im * y;
            im = re * y + im * x;
            re = next_re;
        }
        // Upward in degree at fixed order m.
        let mut p_prev = 0.0;
        let mut p = pmm;
        for deg in m + 1..=l {
            let a = (((4 * deg * deg - 1) as f64) / ((deg * deg - m * m) as f64)).sqrt();
            let a_prev = if deg - 1 > m {
                (((4 * (deg - 1) * (deg - 1) - 1) as f64) / (((deg - 1) * (deg - 1) - m * m) as f64)).sqrt()
            } else {
                f64::INFINITY
            };
            let next = a * (c * p - p_prev / a_prev);
            p_prev = p;
            p = next;
        }
        if m == 0 {
            out[l] = p;
        } else {
            out[l + m] = 2f64.sqrt() * p * re;
            out[l - m] = 2f64.sqrt() * p * im;
        }
    }
    out
}
