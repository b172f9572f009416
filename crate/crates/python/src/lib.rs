//! Python bindings for the kaleido-core crate.
//!
//! Build with `cargo build --release -p kaleido-py --features extension-module`
//! and copy `libkaleido_py.so` to `kaleido.so` somewhere on `sys.path`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use kaleido_core::billiard::{self, ChartCenter};
use kaleido_core::geometry::{self, ParticleOrder};
use kaleido_core::mass::{self, CoxeterSpec, MassSequence};
use kaleido_core::{exact, group, stats};

fn py_err(e: kaleido_core::Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn masses(values: Vec<f64>) -> PyResult<MassSequence> {
    MassSequence::new(values).map_err(py_err)
}

fn spec(name: &str) -> PyResult<CoxeterSpec> {
    name.parse::<CoxeterSpec>().map_err(py_err)
}

fn ordering(text: &str) -> PyResult<ParticleOrder> {
    text.parse::<ParticleOrder>().map_err(py_err)
}

/// Nearest Coxeter kaleidoscope of an ordered mass sequence.
#[pyclass(frozen, get_all, skip_from_py_object, module = "kaleido")]
#[derive(Clone)]
pub struct Classification {
    pub name: String,
    pub reversed: bool,
    pub measured_angles: Vec<f64>,
    pub target_angles: Vec<f64>,
    pub max_deviation: f64,
    pub integrable: bool,
}

#[pymethods]
impl Classification {
    fn __repr__(&self) -> String {
        format!(
            "Classification(name={:?}, reversed={}, max_deviation={:.3e})",
            self.name, self.reversed, self.max_deviation
        )
    }
}

/// Spherical triangle of one ordering sector.
#[pyclass(frozen, get_all, skip_from_py_object, module = "kaleido")]
#[derive(Clone)]
pub struct Geometry {
    pub ordering: String,
    pub normals: Vec<[f64; 3]>,
    pub vertices: Vec<[f64; 3]>,
    pub dihedral_angles: [f64; 3],
    pub area: f64,
    pub perimeter: f64,
}

#[pymethods]
impl Geometry {
    fn __repr__(&self) -> String {
        format!("Geometry(ordering={:?}, area={:.6})", self.ordering, self.area)
    }
}

/// Dirichlet eigenvalues of a sector billiard.
#[pyclass(frozen, get_all, skip_from_py_object, module = "kaleido")]
#[derive(Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub effective_lambda: Vec<f64>,
    /// Leading levels that moved less than the tolerance between the last
    /// two truncations; equals `len(eigenvalues)` for a single solve.
    pub converged_count: usize,
    pub n_max: u32,
}

#[pymethods]
impl Spectrum {
    fn __len__(&self) -> usize {
        self.eigenvalues.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Spectrum(levels={}, converged={}, n_max={})",
            self.eigenvalues.len(),
            self.converged_count,
            self.n_max
        )
    }
}

/// Spacing distribution summary.
#[pyclass(frozen, get_all, skip_from_py_object, module = "kaleido")]
#[derive(Clone)]
pub struct SpacingStats {
    pub spacings: Vec<f64>,
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
    pub ks_poisson: f64,
    pub ks_wigner: f64,
}

#[pymethods]
impl SpacingStats {
    fn closer_to_poisson(&self) -> bool {
        self.ks_poisson < self.ks_wigner
    }
}

#[pyfunction]
fn classify(values: Vec<f64>) -> PyResult<Classification> {
    let c = mass::classify(&masses(values)?).map_err(py_err)?;
    Ok(Classification {
        name: c.best.name(),
        reversed: c.reversed,
        integrable: c.is_integrable(),
        measured_angles: c.measured_angles,
        target_angles: c.target_angles,
        max_deviation: c.max_deviation,
    })
}

/// Masses of the family member with `m1 = 1` and `m2 = ratio`.
#[pyfunction]
fn family_member(group_name: &str, ratio: f64) -> PyResult<Vec<f64>> {
    let m = mass::generate_family(&spec(group_name)?, 1.0, ratio).map_err(py_err)?;
    Ok(m.masses().to_vec())
}

/// Ratios `m2/m1` at which two masses of the family coincide, as
/// `(ratio, i, j)` with zero-based particle indices.
#[pyfunction]
fn coincident_ratios(group_name: &str) -> PyResult<Vec<(f64, usize, usize)>> {
    Ok(mass::coincident_mass_ratios(&spec(group_name)?))
}

#[pyfunction]
#[pyo3(signature = (values, order = "1234"))]
fn sector_geometry(values: Vec<f64>, order: &str) -> PyResult<Geometry> {
    let m = masses(values)?;
    let planes = geometry::coincidence_normals(&m).map_err(py_err)?;
    let g = geometry::sector_geometry(&planes, ordering(order)?).map_err(py_err)?;
    Ok(Geometry {
        ordering: order.to_string(),
        normals: g.bounding_normals.to_vec(),
        vertices: g.vertices.to_vec(),
        dihedral_angles: g.dihedral_angles,
        area: g.area,
        perimeter: g.perimeter,
    })
}

/// Order and number of reflections of the group generated by the walls of
/// the identity sector.
#[pyfunction]
fn group_order(values: Vec<f64>) -> PyResult<(usize, usize)> {
    let g = group::group_for_masses(&masses(values)?).map_err(py_err)?;
    let s = g.summary();
    Ok((s.element_count, s.reflection_count))
}

/// Allowed hyperangular λ with their degeneracies.
#[pyfunction]
fn lambda_spectrum(group_name: &str, lambda_max: u64) -> PyResult<BTreeMap<u64, usize>> {
    group::lambda_spectrum(&spec(group_name)?, lambda_max).map_err(py_err)
}

/// Exact levels as `(n, nu, lambda, energy)` tuples, energy in units of ħω.
#[pyfunction]
#[pyo3(signature = (group_name, e_max, particles = 4))]
fn energy_levels(group_name: &str, e_max: f64, particles: u32) -> PyResult<Vec<(u64, u64, u64, f64)>> {
    let levels = exact::energy_levels(&spec(group_name)?, e_max, particles).map_err(py_err)?;
    Ok(levels.into_iter().map(|l| (l.n, l.nu, l.lambda, l.energy)).collect())
}

/// Numerical billiard spectrum. With `refine_from` the sector is solved at
/// both truncations and only the leading run of levels whose effective λ
/// moved less than `tolerance` is counted as converged.
#[pyfunction]
#[pyo3(signature = (values, order = "1234", n_max = 40, k = 50, refine_from = None, tolerance = 0.02, chart = "canonical"))]
#[allow(clippy::too_many_arguments)]
fn billiard_spectrum(
    py: Python<'_>,
    values: Vec<f64>,
    order: &str,
    n_max: u32,
    k: usize,
    refine_from: Option<u32>,
    tolerance: f64,
    chart: &str,
) -> PyResult<Spectrum> {
    let m = masses(values)?;
    let p = ordering(order)?;
    let center: ChartCenter = chart.parse().map_err(py_err)?;
    let sector = billiard::flatten_sector_with(&m, p, center).map_err(py_err)?;
    let spectrum = py
        .detach(|| match refine_from {
            Some(coarse) => {
                billiard::convergence_study(&sector, &[coarse, n_max], k).map(|s| s.final_spectrum(tolerance))
            }
            None => billiard::sector_spectrum(&sector, n_max, None, k),
        })
        .map_err(py_err)?;
    Ok(Spectrum {
        converged_count: spectrum.converged_count,
        eigenvalues: spectrum.values,
        effective_lambda: spectrum.effective_lambda,
        n_max,
    })
}

/// Two-term Weyl estimate of the number of levels below `e`.
#[pyfunction]
#[pyo3(signature = (values, e, order = "1234"))]
fn weyl_count(values: Vec<f64>, e: f64, order: &str) -> PyResult<f64> {
    let m = masses(values)?;
    let planes = geometry::coincidence_normals(&m).map_err(py_err)?;
    let g = geometry::sector_geometry(&planes, ordering(order)?).map_err(py_err)?;
    Ok(stats::weyl_count(e, &g))
}

/// Weyl-unfold `levels` for the given sector and histogram the spacings.
#[pyfunction]
#[pyo3(signature = (values, levels, order = "1234", bins = 24))]
fn spacing_stats(values: Vec<f64>, levels: Vec<f64>, order: &str, bins: usize) -> PyResult<SpacingStats> {
    let m = masses(values)?;
    let planes = geometry::coincidence_normals(&m).map_err(py_err)?;
    let g = geometry::sector_geometry(&planes, ordering(order)?).map_err(py_err)?;
    let unfolded = stats::unfold_levels(&levels, &g);
    let h = stats::spacing_histogram(&unfolded, bins).map_err(py_err)?;
    Ok(SpacingStats {
        spacings: unfolded.spacings(),
        bin_edges: h.bin_edges,
        densities: h.densities,
        ks_poisson: h.ks_poisson,
        ks_wigner: h.ks_wigner,
    })
}

#[pymodule]
#[pyo3(name = "kaleido")]
fn kaleido_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Classification>()?;
    m.add_class::<Geometry>()?;
    m.add_class::<Spectrum>()?;
    m.add_class::<SpacingStats>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(family_member, m)?)?;
    m.add_function(wrap_pyfunction!(coincident_ratios, m)?)?;
    m.add_function(wrap_pyfunction!(sector_geometry, m)?)?;
    m.add_function(wrap_pyfunction!(group_order, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(energy_levels, m)?)?;
    m.add_function(wrap_pyfunction!(billiard_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(weyl_count, m)?)?;
    m.add_function(wrap_pyfunction!(spacing_stats, m)?)?;
    Ok(())
}
