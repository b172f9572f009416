//! CSV and JSON renderings of results. Numbers carry 12 significant digits
//! and nothing time-dependent is written, so identical inputs give
//! byte-identical output.

use serde::Serialize;
use serde_json::Value;

use crate::billiard::EigenSpectrum;
use crate::error::{Error, Result};
use crate::exact::EnergyLevel;
use crate::mass::FamilyCurve;
use crate::polynomial::HomogeneousPolynomial;
use crate::stats::{SpacingHistogram, WeylResidual};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Round to `digits` significant digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Shortest decimal text of `x` rounded to 12 significant digits.
pub fn format_number(x: f64) -> String {
    let r = round_significant(x, SIGNIFICANT_DIGITS);
    if r == 0.0 {
        // Also folds -0 into 0.
        "0".to_string()
    } else {
        format!("{r}")
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            // Adding zero folds -0 into 0.
            let x = round_significant(n.as_f64().unwrap_or(f64::NAN), SIGNIFICANT_DIGITS) + 0.0;
            serde_json::Number::from_f64(x)
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

fn json_error(e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("serialization failed: {e}"))
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(json_error)?;
    let mut s = serde_json::to_string_pretty(&round_value(v)).map_err(json_error)?;
    s.push('\n');
    Ok(s)
}

fn csv_table<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(json_error)?;
    for row in rows {
        w.write_record(&row).map_err(json_error)?;
    }
    let bytes = w.into_inner().map_err(json_error)?;
    String::from_utf8(bytes).map_err(json_error)
}

/// Columns `r, mu1, …, muN`.
pub fn family_csv(curve: &FamilyCurve) -> Result<String> {
    let n = curve
        .points
        .first()
        .map_or(curve.group.particles(), |p| p.sequence.len());
    let names: Vec<String> = std::iter::once("r".to_string())
        .chain((1..=n).map(|i| format!("mu{i}")))
        .collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    csv_table(
        &header,
        curve.points.iter().map(|p| {
            std::iter::once(format_number(p.ratio))
                .chain(p.sequence.fractions().iter().map(|&m| format_number(m)))
                .collect()
        }),
    )
}

/// Columns `n,nu,n1,n2,lambda,energy`.
pub fn energy_levels_csv(levels: &[EnergyLevel]) -> Result<String> {
    csv_table(
        &["n", "nu", "n1", "n2", "lambda", "energy"],
        levels.iter().map(|l| {
            vec![
                l.n.to_string(),
                l.nu.to_string(),
                l.n1.to_string(),
                l.n2.to_string(),
                l.lambda.to_string(),
                format_number(l.energy),
            ]
        }),
    )
}

/// Columns `k, eigenvalue, lambda_eff, delta_last_refinement`; the delta is
/// empty when no refinement was run.
pub fn spectrum_csv(spectrum: &EigenSpectrum) -> Result<String> {
    csv_table(
        &["k", "eigenvalue", "lambda_eff", "delta_last_refinement"],
        spectrum.values.iter().enumerate().map(|(k, &e)| {
            let delta = spectrum
                .last_delta
                .as_ref()
                .and_then(|d| d.get(k))
                .map(|&d| format_number(d))
                .unwrap_or_default();
            vec![
                (k + 1).to_string(),
                format_number(e),
                format_number(spectrum.effective_lambda[k]),
                delta,
            ]
        }),
    )
}

/// Columns `bin_left, bin_right, density`.
pub fn histogram_csv(histogram: &SpacingHistogram) -> Result<String> {
    csv_table(
        &["bin_left", "bin_right", "density"],
        histogram
            .rows()
            .map(|(l, r, d)| vec![format_number(l), format_number(r), format_number(d)]),
    )
}

/// Columns `s, poisson, wigner`.
pub fn reference_csv(curves: &[(f64, f64, f64)]) -> Result<String> {
    csv_table(
        &["s", "poisson", "wigner"],
        curves
            .iter()
            .map(|&(s, p, w)| vec![format_number(s), format_number(p), format_number(w)]),
    )
}

/// Columns `eigenvalue, staircase, weyl, residual`.
pub fn weyl_residual_csv(residual: &WeylResidual) -> Result<String> {
    csv_table(
        &["eigenvalue", "staircase", "weyl", "residual"],
        (0..residual.energies.len()).map(|i| {
            vec![
                format_number(residual.energies[i]),
                format_number(residual.staircase[i]),
                format_number(residual.weyl[i]),
                format_number(residual.residual[i]),
            ]
        }),
    )
}

/// JSON list of `{exponents, coefficient}` records.
pub fn polynomial_json(p: &HomogeneousPolynomial) -> Result<String> {
    to_json(&p.to_terms())
}

/// Headline numbers of a spacing analysis.
#[derive(Clone, Debug, Serialize)]
pub struct SpacingSummary {
    pub n_levels: usize,
    pub mean_spacing: f64,
    pub ks_poisson: f64,
    pub ks_wigner: f64,
    pub chi2_poisson: f64,
    pub chi2_wigner: f64,
}

impl SpacingSummary {
    pub fn new(histogram: &SpacingHistogram) -> Self {
        Self {
            n_levels: histogram.n_spacings + 1,
            mean_spacing: histogram.mean_spacing,
            ks_poisson: histogram.ks_poisson,
            ks_wigner: histogram.ks_wigner,
            chi2_poisson: histogram.chi2_poisson,
            chi2_wigner: histogram.chi2_wigner,
        }
    }
}
