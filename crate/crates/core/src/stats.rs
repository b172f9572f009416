//! Weyl counting, unfolding and nearest-neighbour spacing statistics.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::billiard::EigenSpectrum;
use crate::error::{Error, Result};
use crate::geometry::{ParticleOrder, SectorGeometry};
use crate::mass::MassSequence;

/// Minimum number of levels (and spacings) for statistics to be meaningful.
pub const MIN_LEVELS: usize = 50;

/// Two-term Weyl estimate `N(Ẽ) = (A Ẽ - ℓ √Ẽ) / 4π` for the Dirichlet
/// Laplacian on a unit-sphere domain of area `A` and perimeter `ℓ`.
pub fn weyl_count(e: f64, geometry: &SectorGeometry) -> f64 {
    weyl_from_parts(e, geometry.area, geometry.perimeter)
}

fn weyl_from_parts(e: f64, area: f64, perimeter: f64) -> f64 {
    let e = e.max(0.0);
    (area * e - perimeter * e.sqrt()) / (4.0 * PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnfoldingMethod {
    Weyl,
    Polynomial { degree: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnfoldedSpectrum {
    pub epsilon: Vec<f64>,
    pub mean_spacing: f64,
    pub method: UnfoldingMethod,
    /// Number of source levels the window was cut from.
    pub source_levels: usize,
}

impl UnfoldedSpectrum {
    fn from_epsilon(epsilon: Vec<f64>, method: UnfoldingMethod, source_levels: usize) -> Self {
        let mean_spacing = if epsilon.len() > 1 {
            (epsilon[epsilon.len() - 1] - epsilon[0]) / (epsilon.len() - 1) as f64
        } else {
            f64::NAN
        };
        Self {
            epsilon,
            mean_spacing,
            method,
            source_levels,
        }
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.epsilon.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Unfold the converged window of a solved spectrum with the Weyl staircase.
pub fn unfold(spectrum: &EigenSpectrum, geometry: &SectorGeometry) -> Result<UnfoldedSpectrum> {
    let window = spectrum.converged_values();
    if window.len() < MIN_LEVELS {
        return Err(Error::InsufficientData(format!(
            "{} converged levels, at least {MIN_LEVELS} required",
            window.len()
        )));
    }
    let mut u = unfold_levels(window, geometry);
    u.source_levels = spectrum.len();
    Ok(u)
}

/// Weyl unfolding of an explicit level list, with no window check.
pub fn unfold_levels(levels: &[f64], geometry: &SectorGeometry) -> UnfoldedSpectrum {
    let epsilon = levels.iter().map(|&e| weyl_count(e, geometry)).collect();
    UnfoldedSpectrum::from_epsilon(epsilon, UnfoldingMethod::Weyl, levels.len())
}

/// Cross-check unfolding: least-squares polynomial fit of the staircase
/// `N(Ẽ_i) = i + 1/2` in a rescaled energy variable.
pub fn unfold_polynomial(levels: &[f64], degree: usize) -> Result<UnfoldedSpectrum> {
    if levels.len() < MIN_LEVELS.max(degree + 2) {
        return Err(Error::InsufficientData(format!(
            "{} levels for a degree-{degree} staircase fit",
            levels.len()
        )));
    }
    let (lo, hi) = (levels[0], levels[levels.len() - 1]);
    let scale = |e: f64| 2.0 * (e - lo) / (hi - lo).max(f64::MIN_POSITIVE) - 1.0;
    let n = levels.len();
    let design = DMatrix::from_fn(n, degree + 1, |i, j| scale(levels[i]).powi(j as i32));
    let target = DVector::from_fn(n, |i, _| i as f64 + 0.5);
    let coeffs = design
        .svd(true, true)
        .solve(&target, 1e-12)
        .map_err(|e| Error::InvalidParameter(format!("staircase fit failed: {e}")))?;
    let epsilon = levels
        .iter()
        .map(|&e| {
            let x = scale(e);
            coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
        })
        .collect();
    Ok(UnfoldedSpectrum::from_epsilon(
        epsilon,
        UnfoldingMethod::Polynomial { degree },
        n,
    ))
}

pub fn poisson_density(s: f64) -> f64 {
    (-s).exp()
}

pub fn wigner_density(s: f64) -> f64 {
    PI / 2.0 * s * (-PI * s * s / 4.0).exp()
}

pub fn poisson_cdf(s: f64) -> f64 {
    1.0 - (-s.max(0.0)).exp()
}

pub fn wigner_cdf(s: f64) -> f64 {
    let s = s.max(0.0);
    1.0 - (-PI * s * s / 4.0).exp()
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and a
/// reference CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpacingHistogram {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub n_spacings: usize,
    pub mean_spacing: f64,
    pub ks_poisson: f64,
    pub ks_wigner: f64,
    pub chi2_poisson: f64,
    pub chi2_wigner: f64,
}

impl SpacingHistogram {
    /// `(left, right, density)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.bin_edges
            .windows(2)
            .zip(&self.densities)
            .map(|(e, &d)| (e[0], e[1], d))
    }

    /// True when the KS distance to Poisson is the smaller one.
    pub fn closer_to_poisson(&self) -> bool {
        self.ks_poisson < self.ks_wigner
    }
}

fn chi_squared(counts: &[usize], edges: &[f64], n: usize, cdf: impl Fn(f64) -> f64) -> f64 {
    let last = counts.len() - 1;
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            // The last bin absorbs the reference tail.
            let upper = if i == last { 1.0 } else { cdf(edges[i + 1]) };
            let expected = n as f64 * (upper - cdf(edges[i]));
            if expected > 1e-12 {
                (c as f64 - expected).powi(2) / expected
            } else {
                0.0
            }
        })
        .sum()
}

/// Density histogram of `s_i = ε_{i+1} - ε_i` on `[0, s_max]`, where
/// `s_max` is the largest spacing rounded up to a multiple of 1/2 and at
/// least 3.
pub fn spacing_histogram(unfolded: &UnfoldedSpectrum, bins: usize) -> Result<SpacingHistogram> {
    spacing_histogram_from(&unfolded.spacings(), bins)
}

pub fn spacing_histogram_from(spacings: &[f64], bins: usize) -> Result<SpacingHistogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be positive".into()));
    }
    if spacings.len() < MIN_LEVELS {
        return Err(Error::InsufficientData(format!(
            "{} spacings, at least {MIN_LEVELS} required",
            spacings.len()
        )));
    }
    let max = spacings.iter().cloned().fold(0.0, f64::max);
    let s_max = ((max * 2.0).ceil() / 2.0).max(3.0);
    let width = s_max / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &s in spacings {
        let idx = ((s.max(0.0) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let n = spacings.len();
    let densities = counts.iter().map(|&c| c as f64 / (n as f64 * width)).collect();
    Ok(SpacingHistogram {
        chi2_poisson: chi_squared(&counts, &bin_edges, n, poisson_cdf),
        chi2_wigner: chi_squared(&counts, &bin_edges, n, wigner_cdf),
        bin_edges,
        densities,
        n_spacings: n,
        mean_spacing: spacings.iter().sum::<f64>() / n as f64,
        ks_poisson: ks_distance(spacings, poisson_cdf),
        ks_wigner: ks_distance(spacings, wigner_cdf),
    })
}

/// `(s, Poisson, Wigner)` samples on `[0, s_max]`.
pub fn reference_curves(s_max: f64, points: usize) -> Vec<(f64, f64, f64)> {
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let s = s_max * i as f64 / (points - 1) as f64;
            (s, poisson_density(s), wigner_density(s))
        })
        .collect()
}

/// Staircase `N(Ẽ)` against the Weyl estimate at each level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeylResidual {
    pub energies: Vec<f64>,
    /// Number of levels `<= Ẽ_i`, counting degeneracies.
    pub staircase: Vec<f64>,
    pub weyl: Vec<f64>,
    /// `staircase - weyl`.
    pub residual: Vec<f64>,
    /// Sign changes of `N(Ẽ) - Weyl(Ẽ)` sampled just below and at each level.
    pub zero_crossings: usize,
    /// `max |residual| / √Ẽ`.
    pub max_relative: f64,
}

pub fn weyl_residual(levels: &[f64], geometry: &SectorGeometry) -> WeylResidual {
    let mut staircase = Vec::with_capacity(levels.len());
    for (i, &e) in levels.iter().enumerate() {
        let count = i + 1 + levels[i + 1..].iter().take_while(|&&x| x <= e).count();
        staircase.push(count as f64);
    }
    let weyl: Vec<f64> = levels.iter().map(|&e| weyl_count(e, geometry)).collect();
    let residual: Vec<f64> = staircase.iter().zip(&weyl).map(|(n, w)| n - w).collect();

    // The staircase jumps at each level, so sample its value on both sides.
    let mut samples = Vec::with_capacity(2 * levels.len());
    let mut below = 0.0;
    for i in 0..levels.len() {
        samples.push(below - weyl[i]);
        samples.push(residual[i]);
        below = staircase[i];
    }
    let zero_crossings = samples
        .windows(2)
        .filter(|w| w[0] != 0.0 && w[1] != 0.0 && (w[0] < 0.0) != (w[1] < 0.0))
        .count();
    let max_relative = levels
        .iter()
        .zip(&samples.chunks(2).collect::<Vec<_>>())
        .filter(|(e, _)| **e > 0.0)
        .map(|(e, pair)| pair[0].abs().max(pair[1].abs()) / e.sqrt())
        .fold(0.0, f64::max);
    WeylResidual {
        energies: levels.to_vec(),
        staircase,
        weyl,
        residual,
        zero_crossings,
        max_relative,
    }
}

/// Orderings grouped into congruence classes. A sector's shape depends only
/// on the masses read along its ordering, up to reversal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorClass {
    pub representative: ParticleOrder,
    pub members: Vec<ParticleOrder>,
}

pub fn distinct_sectors(masses: &MassSequence, rel_tol: f64) -> Vec<SectorClass> {
    let m = masses.masses();
    let key = |p: &ParticleOrder| -> [f64; 4] {
        let fwd = p.0.map(|i| m[i]);
        let mut rev = fwd;
        rev.reverse();
        if fwd.partial_cmp(&rev) == Some(std::cmp::Ordering::Greater) {
            rev
        } else {
            fwd
        }
    };
    let close = |a: &[f64; 4], b: &[f64; 4]| {
        a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= rel_tol * x.abs().max(y.abs()))
    };
    let mut classes: Vec<([f64; 4], SectorClass)> = Vec::new();
    for p in ParticleOrder::all() {
        let k = key(&p);
        // Also compare against the reversed key so near-equal masses that
        // sort differently still land in one class.
        let mut krev = k;
        krev.reverse();
        match classes.iter_mut().find(|(c, _)| close(c, &k) || close(c, &krev)) {
            Some((_, class)) => class.members.push(p),
            None => classes.push((
                k,
                SectorClass {
                    representative: p,
                    members: vec![p],
                },
            )),
        }
    }
    classes.into_iter().map(|(_, c)| c).collect()
}
