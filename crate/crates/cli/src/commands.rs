//! One function per subcommand. Each validates its settings, runs the
//! library pipeline and returns the documents to write.

use kaleido_core::billiard::{
    convergence_study, default_quadrature_order, flatten_sector_with, sector_spectrum, ChartCenter, EigenSpectrum,
};
use kaleido_core::exact::energy_levels;
use kaleido_core::geometry::{coincidence_normals, sector_geometry, ParticleOrder};
use kaleido_core::group::{group_for_masses, lambda_spectrum};
use kaleido_core::io::{self, format_number, SpacingSummary};
use kaleido_core::mass::{classify, family_curve, generate_family, ratio_grid, CoxeterSpec, MassSequence};
use kaleido_core::stats::{distinct_sectors, reference_curves, spacing_histogram, unfold, weyl_count, weyl_residual};
use rayon::prelude::*;
use serde_json::json;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::{Artifact, RunResult};

const DEFAULT_N_MAX: u32 = 40;
const DEFAULT_K: usize = 50;
const DEFAULT_STATS_K: usize = 400;
const DEFAULT_BINS: usize = 24;
const DEFAULT_GRID: usize = 200;
const DEFAULT_E_MAX: f64 = 30.0;
const DEFAULT_TOLERANCE: f64 = 0.02;

pub fn dispatch(command: &str, s: &Settings) -> Result<RunResult, CliError> {
    match command {
        "classify" => classify_cmd(s),
        "family" => family_cmd(s),
        "geometry" => geometry_cmd(s),
        "group" => group_cmd(s),
        "exact" => exact_cmd(s),
        "billiard" => billiard_cmd(s),
        "stats" => stats_cmd(s),
        "weyl" => weyl_cmd(s),
        other => Err(CliError::Validation(format!("unknown command `{other}`"))),
    }
}

fn missing(field: &str) -> CliError {
    CliError::Validation(format!("missing required setting `{field}`"))
}

fn masses(s: &Settings) -> Result<MassSequence, CliError> {
    let m = s.masses.clone().ok_or_else(|| missing("masses"))?;
    Ok(MassSequence::new(m)?)
}

fn four_masses(s: &Settings) -> Result<MassSequence, CliError> {
    let m = masses(s)?;
    if m.len() != 4 {
        return Err(CliError::Validation(format!("expected 4 masses, got {}", m.len())));
    }
    Ok(m)
}

fn ordering(s: &Settings) -> Result<ParticleOrder, CliError> {
    match &s.ordering {
        Some(text) => Ok(text.parse()?),
        None => Ok(ParticleOrder::IDENTITY),
    }
}

fn spec(s: &Settings) -> Result<CoxeterSpec, CliError> {
    Ok(s.spec.as_deref().ok_or_else(|| missing("spec"))?.parse()?)
}

fn chart(s: &Settings, default: ChartCenter) -> Result<ChartCenter, CliError> {
    s.chart.as_deref().map_or(Ok(default), |c| Ok(c.parse()?))
}

#[derive(PartialEq)]
enum Format {
    Csv,
    Json,
}

fn format(s: &Settings, default: Format) -> Result<Format, CliError> {
    match s.format.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None => Ok(default),
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        Some(other) => Err(CliError::Validation(format!("unknown format `{other}`"))),
    }
}

fn single(content: String, summary: Option<String>, meta: serde_json::Value) -> RunResult {
    RunResult {
        artifacts: vec![Artifact { name: None, content }],
        summary,
        meta,
        failure: None,
    }
}

fn classify_cmd(s: &Settings) -> Result<RunResult, CliError> {
    let m = masses(s)?;
    let c = classify(&m)?;
    let line = format!(
        "{}{} deviation {} integrable {}",
        c.best.name(),
        if c.reversed { " (reversed bracket)" } else { "" },
        format_number(c.max_deviation),
        c.is_integrable()
    );
    Ok(single(io::to_json(&c)?, Some(line), json!({ "masses": m.masses() })))
}

fn family_cmd(s: &Settings) -> Result<RunResult, CliError> {
    let g = spec(s)?;
    let count = s.grid.unwrap_or(DEFAULT_GRID);
    if count == 0 {
        return Err(CliError::Validation("grid must be positive".into()));
    }
    // The equal-end-mass points are where family curves cross; include them
    // so the sampled curve hits them exactly.
    let mut grid = ratio_grid(&g, count);
    grid.extend(kaleido_core::mass::coincident_mass_ratios(&g).iter().map(|c| c.0));
    grid.sort_by(f64::total_cmp);
    let curve = family_curve(&g, &grid)?;
    let content = match format(s, Format::Csv)? {
        Format::Csv => io::family_csv(&curve)?,
        Format::Json => io::to_json(&curve)?,
    };
    Ok(single(content, None, json!({ "spec": g.name(), "grid": count })))
}

fn geometry_cmd(s: &Settings) -> Result<RunResult, CliError> {
    let m = four_masses(s)?;
    let p = ordering(s)?;
    let g = sector_geometry(&coincidence_normals(&m)?, p)?;
    Ok(single(
        io::to_json(&g)?,
        None,
        json!({ "masses": m.masses(), "ordering": p.to_string() }),
    ))
}

fn group_cmd(s: &Settings) -> Result<RunResult, CliError> {
    let m = match (&s.spec, &s.masses) {
        (Some(_), _) => {
            let g = spec(s)?;
            let ratio = ratio_grid(&g, 1)[0];
            generate_family(&g, 1.0, ratio)?
        }
        (None, Some(_)) => four_masses(s)?,
        (None, None) => return Err(missing("spec or masses")),
    };
    let group = group_for_masses(&m)?;
    Ok(single(
        io::to_json(&group.summary())?,
        None,
        json!({ "masses": m.masses() }),
    ))
}

fn exact_cmd(s: &Settings) -> Result<RunResult, CliError> {
    let g = spec(s)?;
    if let Some(lambda_max) = s.lambda_max {
        let spectrum = lambda_spectrum(&g, lambda_max)?;
        let mut content = String::from("lambda,degeneracy\n");
        for (l, d) in &spectrum {
            content.push_str(&format!("{l},{d}\n"));
        }
        return Ok(single(
            content,
            None,
            json!({ "spec": g.name(), "lambda_max": lambda_max }),
        ));
    }
    let e_max = s.e_max.unwrap_or(DEFAULT_E_MAX);
    let levels = energy_levels(&g, e_max, g.particles() as u32)?;
    let content = match format(s, Format::Csv)? {
        Format::Csv => io::energy_levels_csv(&levels)?,
        Format::Json => io::to_json(&levels)?,
    };
    Ok(single(content, None, json!({ "spec": g.name(), "e_max": e_max })))
}

struct BilliardParams {
    n_max: u32,
    refine_from: Option<u32>,
    quadrature_order: usize,
    k: usize,
    tolerance: f64,
}

fn billiard_params(s: &Settings, k_default: usize, refine_default: Option<u32>) -> Result<BilliardParams, CliError> {
    let n_max = s.n_max.unwrap_or(DEFAULT_N_MAX);
    if n_max < 2 {
        return Err(CliError::Validation("n_max must be at least 2".into()));
    }
    let quadrature_order = s.quadrature_order.unwrap_or_else(|| default_quadrature_order(n_max));
    if quadrature_order < default_quadrature_order(n_max) {
        return Err(CliError::Validation(format!(
            "quadrature order {quadrature_order} is below 3·n_max = {}",
            default_quadrature_order(n_max)
        )));
    }
    let refine_from = s.refine_from.or(refine_default);
    if let Some(r) = refine_from {
        if r < 2 || r >= n_max {
            return Err(CliError::Validation(format!(
                "refine_from must lie in [2, n_max), got {r}"
            )));
        }
    }
    Ok(BilliardParams {
        n_max,
        refine_from,
        quadrature_order,
        k: s.k_levels.unwrap_or(k_default),
        tolerance: s.tolerance.unwrap_or(DEFAULT_TOLERANCE),
    })
}

fn solve(
    m: &MassSequence,
    p: ParticleOrder,
    center: ChartCenter,
    params: &BilliardParams,
) -> Result<(EigenSpectrum, kaleido_core::billiard::FlattenedSector), kaleido_core::Error> {
    let sector = flatten_sector_with(m, p, center)?;
    let spectrum = match params.refine_from {
        Some(coarse) if uses_default_quadrature(params) => {
            convergence_study(&sector, &[coarse, params.n_max], params.k)?.final_spectrum(params.tolerance)
        }
        Some(coarse) => {
            let fine = sector_spectrum(&sector, params.n_max, Some(params.quadrature_order), params.k)?;
            let rough = sector_spectrum(&sector, coarse, None, params.k)?;
            with_refinement(fine, &rough, params.tolerance)
        }
        None => sector_spectrum(&sector, params.n_max, Some(params.quadrature_order), params.k)?,
    };
    Ok((spectrum, sector))
}

fn uses_default_quadrature(params: &BilliardParams) -> bool {
    params.quadrature_order == default_quadrature_order(params.n_max)
}

/// Attach per-level changes against a coarser solve.
fn with_refinement(mut fine: EigenSpectrum, rough: &EigenSpectrum, tolerance: f64) -> EigenSpectrum {
    let n = fine.len().min(rough.len());
    let delta: Vec<f64> = (0..n)
        .map(|i| (fine.effective_lambda[i] - rough.effective_lambda[i]).abs())
        .collect();
    fine.converged_count = delta.iter().take_while(|&&d| d < tolerance).count();
    fine.last_delta = Some(delta);
    fine
}

fn billiard_cmd(s: &Settings) -> Result<RunResult, CliError> {
    let m = four_masses(s)?;
    let p = ordering(s)?;
    let params = billiard_params(s, DEFAULT_K, None)?;
    let center = chart(s, ChartCenter::Canonical)?;
    let (spectrum, _) = solve(&m, p, center, &params)?;
    let content = match format(s, Format::Csv)? {
        Format::Csv => io::spectrum_csv(&spectrum)?,
        Format::Json => io::to_json(&spectrum)?,
    };
    Ok(single(
        content,
        None,
        json!({
            "masses": m.masses(),
            "ordering": p.to_string(),
            "n_max": params.n_max,
            "refine_from": params.refine_from,
            "quadrature_order": params.quadrature_order,
            "k_levels": params.k,
            "chart": center,
            "converged_count": spectrum.converged_count,
        }),
    ))
}

fn stats_cmd(s: &Settings) -> Result<RunResult, CliError> {
    let m = four_masses(s)?;
    let n_max = s.n_max.unwrap_or(DEFAULT_N_MAX);
    let params = billiard_params(s, DEFAULT_STATS_K, Some(n_max.saturating_sub(10).max(2)))?;
    let bins = s.bins.unwrap_or(DEFAULT_BINS);
    if bins == 0 {
        return Err(CliError::Validation("bins must be positive".into()));
    }
    let center = chart(s, ChartCenter::Circumcenter)?;
    let classes = distinct_sectors(&m, 1e-9);

    let outcomes: Vec<_> = classes
        .par_iter()
        .map(
            |class| -> Result<(Vec<Artifact>, serde_json::Value), kaleido_core::Error> {
                let p = class.representative;
                let (spectrum, sector) = solve(&m, p, center, &params)?;
                let geometry = &sector.geometry;
                let tag = format!("sector_{p}");
                let mut files = vec![Artifact {
                    name: Some(format!("{tag}_spectrum.csv")),
                    content: io::spectrum_csv(&spectrum)?,
                }];
                let residual = weyl_residual(spectrum.converged_values(), geometry);
                files.push(Artifact {
                    name: Some(format!("{tag}_weyl.csv")),
                    content: io::weyl_residual_csv(&residual)?,
                });
                let histogram = spacing_histogram(&unfold(&spectrum, geometry)?, bins)?;
                files.push(Artifact {
                    name: Some(format!("{tag}_histogram.csv")),
                    content: io::histogram_csv(&histogram)?,
                });
                let summary = json!({
                    "ordering": p.to_string(),
                    "members": class.members.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "dihedral_angles": geometry.dihedral_angles,
                    "area": geometry.area,
                    "perimeter": geometry.perimeter,
                    "converged_count": spectrum.converged_count,
                    "weyl_max_relative_residual": residual.max_relative,
                    "weyl_zero_crossings": residual.zero_crossings,
                    "spacing": SpacingSummary::new(&histogram),
                });
                Ok((files, summary))
            },
        )
        .collect();

    let mut artifacts = Vec::new();
    let mut sectors = Vec::new();
    let mut failures = Vec::new();
    for (class, outcome) in classes.iter().zip(outcomes) {
        match outcome {
            Ok((files, summary)) => {
                artifacts.extend(files);
                sectors.push(summary);
            }
            Err(e) => {
                sectors.push(json!({ "ordering": class.representative.to_string(), "error": e.to_string() }));
                failures.push(format!("sector {}: {e}", class.representative));
            }
        }
    }
    let s_max = 4.0;
    artifacts.push(Artifact {
        name: Some("reference_curves.csv".into()),
        content: io::reference_csv(&reference_curves(s_max, 201))?,
    });
    artifacts.push(Artifact {
        name: Some("summary.json".into()),
        content: io::to_json(&json!({ "sectors": sectors }))?,
    });
    Ok(RunResult {
        artifacts,
        summary: Some(format!("{} distinct sectors, {} failed", classes.len(), failures.len())),
        meta: json!({
            "masses": m.masses(),
            "n_max": params.n_max,
            "refine_from": params.refine_from,
            "quadrature_order": params.quadrature_order,
            "k_levels": params.k,
            "tolerance": params.tolerance,
            "bins": bins,
            "chart": center,
        }),
        failure: (!failures.is_empty()).then(|| CliError::Numerical(failures.join("; "))),
    })
}

fn weyl_cmd(s: &Settings) -> Result<RunResult, CliError> {
    let m = four_masses(s)?;
    let p = ordering(s)?;
    let e_max = s.e_max.unwrap_or(10_000.0);
    let points = s.points.unwrap_or(101).max(2);
    if e_max.is_nan() || e_max <= 0.0 {
        return Err(CliError::Validation("e_max must be positive".into()));
    }
    let g = sector_geometry(&coincidence_normals(&m)?, p)?;
    let mut content = String::from("eigenvalue,weyl_count\n");
    for i in 0..points {
        let e = e_max * i as f64 / (points - 1) as f64;
        content.push_str(&format!("{},{}\n", format_number(e), format_number(weyl_count(e, &g))));
    }
    Ok(single(
        content,
        None,
        json!({ "masses": m.masses(), "ordering": p.to_string(), "area": g.area, "perimeter": g.perimeter }),
    ))
}
