//! Dirichlet spectrum of the spherical Laplacian on a spherical triangle.
//!
//! The triangle is flattened by a gnomonic chart `(u, v)` and an affine map
//! onto the reference triangle with corners `(-1,-1)`, `(-1,1)`, `(1,-1)`,
//! where the Dirichlet eigenfunctions of the flat right isosceles triangle
//! serve as a spectral Galerkin basis. The weak form uses the spherical
//! measure, so the discrete problem `A x = Ẽ B x` is symmetric-definite and
//! its eigenvalues are variational upper bounds.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{coincidence_normals, sector_geometry, ParticleOrder, SectorGeometry, Vec3};
use crate::mass::MassSequence;
use crate::quadrature::triangle_rule;

/// Quadrature points processed per assembly block.
const CHUNK: usize = 1024;

/// A spherical triangle mapped onto the reference triangle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlattenedSector {
    /// `(a, b, c, d)` of the canonical plane equations
    /// `u = 0`, `1 - a u + b v = 0`, `1 - c u - d v = 0`; absent for sectors
    /// built from explicit normals.
    pub abcd: Option<[f64; 4]>,
    /// `(s, t) = affine · (u, v) + offset`.
    pub affine: [[f64; 2]; 2],
    pub offset: [f64; 2],
    /// `|det ∂(u,v)/∂(s,t)|`.
    pub jacobian_const: f64,
    /// New (zero-based) label of each original particle.
    pub relabeling: Option<[usize; 4]>,
    /// Chart centre `e` and tangent axes `f1`, `f2`: the chart point `(u, v)`
    /// is the direction of `e + u f1 + v f2`.
    pub frame: [[f64; 3]; 3],
    /// Geometry of the sector being solved.
    pub geometry: SectorGeometry,
}

/// `(a, b, c, d)` for the sector bounded by `Z34`, `Z13`, `Z24`.
pub fn canonical_constants(m: [f64; 4]) -> [f64; 4] {
    let [m1, m2, m3, m4] = m;
    let total = m1 + m2 + m3 + m4;
    [
        ((m1 + m2) * m1 * m4 / ((m3 + m4) * m3 * m2)).sqrt(),
        (total * m1 / ((m3 + m4) * m2)).sqrt(),
        ((m1 + m2) * m2 * m3 / ((m3 + m4) * m1 * m4)).sqrt(),
        (total * m2 / ((m3 + m4) * m1)).sqrt(),
    ]
}

impl FlattenedSector {
    fn affine_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.affine[0][0],
            self.affine[0][1],
            self.affine[1][0],
            self.affine[1][1],
        )
    }

    pub fn to_st(&self, u: f64, v: f64) -> (f64, f64) {
        let st = self.affine_matrix() * Vector2::new(u, v) + Vector2::from(self.offset);
        (st[0], st[1])
    }

    pub fn to_uv(&self, s: f64, t: f64) -> (f64, f64) {
        let inv = self.affine_matrix().try_inverse().expect("affine map is invertible");
        let uv = inv * (Vector2::new(s, t) - Vector2::from(self.offset));
        (uv[0], uv[1])
    }

    /// Unnormalised space vector `e + u f1 + v f2` of a reference point.
    pub fn chart_vector(&self, s: f64, t: f64) -> Vec3 {
        let (u, v) = self.to_uv(s, t);
        let [e, f1, f2] = self.frame.map(Vec3::from);
        e + u * f1 + v * f2
    }

    /// Spherical measure density with respect to `ds dt`.
    pub fn measure_density(&self, s: f64, t: f64) -> f64 {
        let (u, v) = self.to_uv(s, t);
        (1.0 + u * u + v * v).powf(-1.5) * self.jacobian_const
    }

    pub fn area(&self) -> f64 {
        self.geometry.area
    }

    pub fn perimeter(&self) -> f64 {
        self.geometry.perimeter
    }
}

/// True for points strictly inside the reference triangle.
pub fn inside_reference(s: f64, t: f64) -> bool {
    s > -1.0 && t > -1.0 && s + t < 0.0
}

fn orthonormal_frame(e: Vec3) -> [Vec3; 3] {
    let e = e.normalize();
    let helper = if e.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let f1 = (helper - e * e.dot(&helper)).normalize();
    let f2 = e.cross(&f1);
    [e, f1, f2]
}

fn chart_point(frame: &[Vec3; 3], z: &Vec3) -> Result<Vector2<f64>> {
    let cos = frame[0].dot(z) / z.norm();
    if cos <= 1e-9 {
        return Err(Error::ProjectionDomain { cos_theta: cos });
    }
    let w = frame[0].dot(z);
    Ok(Vector2::new(frame[1].dot(z) / w, frame[2].dot(z) / w))
}

/// Affine map sending chart corners `(c_a, c_b, c_c)` to `(-1,1)`, `(1,-1)`,
/// `(-1,-1)`.
fn corner_affine(w: [Vector2<f64>; 3]) -> Result<(Matrix2<f64>, Vector2<f64>)> {
    let d = Matrix2::from_columns(&[w[0] - w[2], w[1] - w[2]]);
    let inv = d
        .try_inverse()
        .ok_or_else(|| Error::DegenerateGeometry("flattened corners are collinear".into()))?;
    let p = Matrix2::new(0.0, 2.0, 2.0, 0.0) * inv;
    let q = Vector2::new(-1.0, -1.0) - p * w[2];
    Ok((p, q))
}

fn build(
    frame: [Vec3; 3],
    p: Matrix2<f64>,
    q: Vector2<f64>,
    geometry: SectorGeometry,
    abcd: Option<[f64; 4]>,
    relabeling: Option<[usize; 4]>,
) -> Result<FlattenedSector> {
    let det = p.determinant();
    if !det.is_finite() || det.abs() < 1e-300 {
        return Err(Error::DegenerateGeometry(format!("affine determinant {det:e}")));
    }
    Ok(FlattenedSector {
        abcd,
        affine: [[p[(0, 0)], p[(0, 1)]], [p[(1, 0)], p[(1, 1)]]],
        offset: [q[0], q[1]],
        jacobian_const: 1.0 / det.abs(),
        relabeling,
        frame: frame.map(Into::into),
        geometry,
    })
}

/// Flatten an arbitrary spherical triangle using a gnomonic chart centred on
/// the normalised sum of its corners.
pub fn flatten_geometry(geometry: &SectorGeometry) -> Result<FlattenedSector> {
    flatten_geometry_about(geometry, geometry.centroid_direction())
}

/// Flatten with the gnomonic chart centred on `center`.
pub fn flatten_geometry_about(geometry: &SectorGeometry, center: Vec3) -> Result<FlattenedSector> {
    let frame = orthonormal_frame(center);
    let v = geometry.corner_directions();
    let w = [
        chart_point(&frame, &v[0])?,
        chart_point(&frame, &v[1])?,
        chart_point(&frame, &v[2])?,
    ];
    let (p, q) = corner_affine(w)?;
    build(frame, p, q, geometry.clone(), None, None)
}

/// Flatten the ordering sector `p` by relabelling particles so that its
/// faces become `Z13`, `Z34`, `Z42` and applying the canonical constants.
pub fn flatten_sector(masses: &MassSequence, p: ParticleOrder) -> Result<FlattenedSector> {
    if masses.len() != 4 {
        return Err(Error::MassCount {
            expected: 4,
            got: masses.len(),
        });
    }
    let m = masses.masses();
    let [p1, p2, p3, p4] = p.0;
    let mut relabeling = [0; 4];
    relabeling[p1] = 0;
    relabeling[p2] = 2;
    relabeling[p3] = 3;
    relabeling[p4] = 1;
    let relabeled = [m[p1], m[p4], m[p2], m[p3]];
    let [a, b, c, d] = canonical_constants(relabeled);
    if ![a, b, c, d].iter().all(|x| x.is_finite() && *x > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "constants a,b,c,d = {a}, {b}, {c}, {d}"
        )));
    }

    let planes = coincidence_normals(&MassSequence::new(relabeled.to_vec())?)?;
    let geometry = sector_geometry(&planes, ParticleOrder([0, 2, 3, 1]))?;
    // The chart z ↦ (z2/z1, z3/z1) is even under z ↦ -z, so it flattens the
    // sector and its antipode alike; every corner must avoid z1 = 0.
    for v in geometry.corner_directions() {
        if v.x.abs() <= 1e-9 {
            return Err(Error::ProjectionDomain { cos_theta: v.x.abs() });
        }
    }
    let sum = b + d;
    let affine = Matrix2::new(
        -2.0 * a * d / sum,
        2.0 * b * d / sum,
        -2.0 * b * c / sum,
        -2.0 * b * d / sum,
    );
    let offset = Vector2::new(-(b - d) / sum, (b - d) / sum);
    let frame = [Vec3::x(), Vec3::y(), Vec3::z()];
    let flat = build(frame, affine, offset, geometry, Some([a, b, c, d]), Some(relabeling))?;

    // Corners must land on the reference corners.
    let targets = [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];
    for (v, (ts, tt)) in flat.geometry.corner_directions().iter().zip(targets) {
        let (u, w) = (v.y / v.x, v.z / v.x);
        let (s, t) = flat.to_st(u, w);
        let err = (s - ts).abs().max((t - tt).abs());
        if err.is_nan() || err >= 1e-8 {
            return Err(Error::DegenerateGeometry(format!(
                "corner maps to ({s}, {t}) instead of ({ts}, {tt})"
            )));
        }
    }
    Ok(flat)
}

/// Centre of the gnomonic chart used to flatten an ordering sector.
///
/// Every choice yields the same continuum spectrum; they differ in how fast
/// the truncated basis converges. On sectors with very unequal corners the
/// circumcentre chart typically converges noticeably more levels than the
/// canonical one for the same `n_max`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartCenter {
    /// The relabelled frame axis `z1` with the closed-form constants.
    #[default]
    Canonical,
    /// The point equidistant from the three corners.
    Circumcenter,
    /// The normalised sum of the corner directions.
    Centroid,
}

impl std::str::FromStr for ChartCenter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "canonical" => Ok(Self::Canonical),
            "circumcenter" | "circumcentre" => Ok(Self::Circumcenter),
            "centroid" => Ok(Self::Centroid),
            other => Err(Error::InvalidParameter(format!("unknown chart centre `{other}`"))),
        }
    }
}

/// Flatten an ordering sector with the chosen chart centre.
pub fn flatten_sector_with(masses: &MassSequence, p: ParticleOrder, center: ChartCenter) -> Result<FlattenedSector> {
    let canonical = flatten_sector(masses, p)?;
    let direction = match center {
        ChartCenter::Canonical => return Ok(canonical),
        ChartCenter::Circumcenter => canonical.geometry.circumcenter_direction(),
        ChartCenter::Centroid => canonical.geometry.centroid_direction(),
    };
    let mut flat = flatten_geometry_about(&canonical.geometry, direction)?;
    flat.relabeling = canonical.relabeling;
    Ok(flat)
}

/// Coefficients of `Δ = g^ss ∂ss + 2 g^st ∂st + g^tt ∂tt + b^s ∂s + b^t ∂t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorCoefficients {
    pub g_ss: f64,
    pub g_st: f64,
    pub g_tt: f64,
    pub b_s: f64,
    pub b_t: f64,
}

/// Chart-space coefficients at `(u, v)`.
pub fn chart_coefficients(u: f64, v: f64) -> OperatorCoefficients {
    let s = 1.0 + u * u + v * v;
    OperatorCoefficients {
        g_ss: s * (1.0 + u * u),
        g_st: s * u * v,
        g_tt: s * (1.0 + v * v),
        b_s: 2.0 * s * u,
        b_t: 2.0 * s * v,
    }
}

/// The spherical Laplacian pushed forward to reference coordinates.
pub fn operator_coefficients(sector: &FlattenedSector, s: f64, t: f64) -> Result<OperatorCoefficients> {
    if !inside_reference(s, t) {
        return Err(Error::OutsideTriangle { s, t });
    }
    let (u, v) = sector.to_uv(s, t);
    let c = chart_coefficients(u, v);
    let p = sector.affine_matrix();
    let g = p * Matrix2::new(c.g_ss, c.g_st, c.g_st, c.g_tt) * p.transpose();
    let b = p * Vector2::new(c.b_s, c.b_t);
    Ok(OperatorCoefficients {
        g_ss: g[(0, 0)],
        g_st: g[(0, 1)],
        g_tt: g[(1, 1)],
        b_s: b[0],
        b_t: b[1],
    })
}

/// Dirichlet eigenfunction of the reference triangle,
/// `sin(nα) sin(mβ) - sin(mα) sin(nβ)` with `α = π(s+1)/2`, `β = π(t-1)/2`.
/// Unit L² norm under the flat measure.
pub fn basis_function(n: u32, m: u32, s: f64, t: f64) -> f64 {
    let a = PI * (s + 1.0) / 2.0;
    let b = PI * (t - 1.0) / 2.0;
    let (n, m) = (n as f64, m as f64);
    (n * a).sin() * (m * b).sin() - (m * a).sin() * (n * b).sin()
}

/// `(∂s, ∂t)` of [`basis_function`].
pub fn basis_gradient(n: u32, m: u32, s: f64, t: f64) -> (f64, f64) {
    let a = PI * (s + 1.0) / 2.0;
    let b = PI * (t - 1.0) / 2.0;
    let (n, m) = (n as f64, m as f64);
    let ds = n * (n * a).cos() * (m * b).sin() - m * (m * a).cos() * (n * b).sin();
    let dt = m * (n * a).sin() * (m * b).cos() - n * (m * a).sin() * (n * b).cos();
    (PI / 2.0 * ds, PI / 2.0 * dt)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisTruncation {
    pub n_max: u32,
    pub index_pairs: Vec<(u32, u32)>,
}

impl BasisTruncation {
    /// All pairs `1 <= n < m <= n_max`, ordered by `m` and then `n`, so a
    /// smaller truncation is a prefix of a larger one.
    pub fn new(n_max: u32) -> Self {
        let index_pairs = (2..=n_max).flat_map(|m| (1..m).map(move |n| (n, m))).collect();
        Self { n_max, index_pairs }
    }

    pub fn len(&self) -> usize {
        self.index_pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_pairs.is_empty()
    }
}

/// Default quadrature order for a truncation.
pub fn default_quadrature_order(n_max: u32) -> usize {
    3 * n_max as usize
}

/// Basis values and gradients on a block of points, one column per point
/// and one row per basis function.
struct BlockValues {
    h: DMatrix<f64>,
    hs: DMatrix<f64>,
    ht: DMatrix<f64>,
}

fn evaluate_block(trunc: &BasisTruncation, s: &[f64], t: &[f64]) -> BlockValues {
    let points = s.len();
    let nb = trunc.len();
    let n_max = trunc.n_max as usize;
    let mut out = BlockValues {
        h: DMatrix::zeros(nb, points),
        hs: DMatrix::zeros(nb, points),
        ht: DMatrix::zeros(nb, points),
    };
    let mut sa = vec![0.0; n_max + 1];
    let mut ca = vec![0.0; n_max + 1];
    let mut sb = vec![0.0; n_max + 1];
    let mut cb = vec![0.0; n_max + 1];
    let half_pi = PI / 2.0;
    for r in 0..points {
        let a = half_pi * (s[r] + 1.0);
        let b = half_pi * (t[r] - 1.0);
        for k in 0..=n_max {
            (sa[k], ca[k]) = (k as f64 * a).sin_cos();
            (sb[k], cb[k]) = (k as f64 * b).sin_cos();
        }
        let mut h = out.h.column_mut(r);
        for (row, &(n, m)) in trunc.index_pairs.iter().enumerate() {
            let (n, m) = (n as usize, m as usize);
            h[row] = sa[n] * sb[m] - sa[m] * sb[n];
        }
        let mut hs = out.hs.column_mut(r);
        for (row, &(n, m)) in trunc.index_pairs.iter().enumerate() {
            let (n, m) = (n as usize, m as usize);
            hs[row] = half_pi * (n as f64 * ca[n] * sb[m] - m as f64 * ca[m] * sb[n]);
        }
        let mut ht = out.ht.column_mut(r);
        for (row, &(n, m)) in trunc.index_pairs.iter().enumerate() {
            let (n, m) = (n as usize, m as usize);
            ht[row] = half_pi * (m as f64 * sa[n] * cb[m] - n as f64 * sa[m] * cb[n]);
        }
    }
    out
}

/// Stiffness `A_ij = ∫ ∇h_i·G∇h_j dμ` and overlap `B_ij = ∫ h_i h_j dμ` with
/// the spherical measure `dμ`.
pub fn assemble(
    sector: &FlattenedSector,
    trunc: &BasisTruncation,
    quadrature_order: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if quadrature_order < 2 {
        return Err(Error::InvalidParameter("quadrature order must be at least 2".into()));
    }
    let rule = triangle_rule(quadrature_order);
    let p = sector.affine_matrix();
    let nb = trunc.len();
    let indices: Vec<usize> = (0..rule.len()).collect();

    let (mut a, mut b) = indices
        .par_chunks(CHUNK)
        .fold(
            || (DMatrix::<f64>::zeros(nb, nb), DMatrix::<f64>::zeros(nb, nb)),
            |(mut a, mut b), chunk| {
                let s: Vec<f64> = chunk.iter().map(|&k| rule.s[k]).collect();
                let t: Vec<f64> = chunk.iter().map(|&k| rule.t[k]).collect();
                let vals = evaluate_block(trunc, &s, &t);
                let c = chunk.len();
                // With the weighted metric factored as L Lᵀ, the stiffness
                // contribution is R Rᵀ for R = [Lᵀ∇h] stacked over points.
                let mut r = DMatrix::<f64>::zeros(nb, 2 * c);
                let mut hw = vals.h;
                for (col, &k) in chunk.iter().enumerate() {
                    let (u, v) = sector.to_uv(rule.s[k], rule.t[k]);
                    let big_s = 1.0 + u * u + v * v;
                    let w = rule.weights[k] * sector.jacobian_const;
                    let metric = p * Matrix2::new(1.0 + u * u, u * v, u * v, 1.0 + v * v) * p.transpose();
                    let ws = w / big_s.sqrt();
                    let l11 = (ws * metric[(0, 0)]).sqrt();
                    let l21 = ws * metric[(0, 1)] / l11;
                    let l22 = (ws * metric[(1, 1)] - l21 * l21).max(0.0).sqrt();
                    let (gs, gt) = (vals.hs.column(col), vals.ht.column(col));
                    for row in 0..nb {
                        r[(row, col)] = l11 * gs[row] + l21 * gt[row];
                        r[(row, c + col)] = l22 * gt[row];
                    }
                    hw.column_mut(col).scale_mut((w * big_s.powf(-1.5)).sqrt());
                }
                rank_update_lower(&mut a, &r);
                rank_update_lower(&mut b, &hw);
                (a, b)
            },
        )
        .reduce(
            || (DMatrix::zeros(nb, nb), DMatrix::zeros(nb, nb)),
            |(a1, b1), (a2, b2)| (a1 + a2, b1 + b2),
        );
    a.fill_upper_triangle_with_lower_triangle();
    b.fill_upper_triangle_with_lower_triangle();
    Ok((a, b))
}

/// Lower triangle of `c += x xᵀ`, by blocks so that each product runs
/// through the blocked matrix kernel.
fn rank_update_lower(c: &mut DMatrix<f64>, x: &DMatrix<f64>) {
    const BLOCK: usize = 256;
    let n = x.nrows();
    let xt = x.transpose();
    for i0 in (0..n).step_by(BLOCK) {
        let ib = BLOCK.min(n - i0);
        for j0 in (0..=i0).step_by(BLOCK) {
            let jb = BLOCK.min(n - j0);
            c.view_mut((i0, j0), (ib, jb))
                .gemm(1.0, &x.rows(i0, ib), &xt.columns(j0, jb), 1.0);
        }
    }
}

/// `λ` with `λ(λ+1) = Ẽ`.
pub fn effective_lambda(eigenvalue: f64) -> f64 {
    (-1.0 + (1.0 + 4.0 * eigenvalue).sqrt()) / 2.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenSpectrum {
    /// Ascending eigenvalues `Ẽ_k` of `-Δ_Ω`.
    pub values: Vec<f64>,
    pub effective_lambda: Vec<f64>,
    pub truncation: Option<BasisTruncation>,
    pub quadrature_order: Option<usize>,
    /// Number of leading levels deemed converged; all levels until a
    /// convergence study says otherwise.
    pub converged_count: usize,
    /// `|Δλ|` of each level against the previous refinement, when known.
    pub last_delta: Option<Vec<f64>>,
}

impl EigenSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn converged_values(&self) -> &[f64] {
        &self.values[..self.converged_count.min(self.values.len())]
    }
}

/// Lowest `k` eigenvalues of `A x = Ẽ B x` via Cholesky reduction.
pub fn solve_spectrum(a: &DMatrix<f64>, b: &DMatrix<f64>, k: usize) -> Result<EigenSpectrum> {
    let n = a.nrows();
    if a.shape() != b.shape() || a.ncols() != n {
        return Err(Error::InvalidParameter(
            "A and B must be square and of equal size".into(),
        ));
    }
    let diag_ratio = {
        let d: Vec<f64> = b.diagonal().iter().copied().collect();
        let max = d.iter().cloned().fold(f64::MIN, f64::max);
        let min = d.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    let chol = b.clone().cholesky().ok_or(Error::QuadratureResolution { order: 0 })?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ.
    let x = l
        .solve_lower_triangular(a)
        .ok_or(Error::EigenSolver { condition: diag_ratio })?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::EigenSolver { condition: diag_ratio })?;
    let c = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenSolver { condition: diag_ratio });
    }
    values.sort_by(f64::total_cmp);
    values.truncate(k);
    let effective = values.iter().map(|&v| effective_lambda(v)).collect();
    Ok(EigenSpectrum {
        converged_count: values.len(),
        values,
        effective_lambda: effective,
        truncation: None,
        quadrature_order: None,
        last_delta: None,
    })
}

/// Assemble and solve one truncation of a flattened sector.
pub fn sector_spectrum(
    sector: &FlattenedSector,
    n_max: u32,
    quadrature_order: Option<usize>,
    k: usize,
) -> Result<EigenSpectrum> {
    let trunc = BasisTruncation::new(n_max);
    let order = quadrature_order.unwrap_or_else(|| default_quadrature_order(n_max));
    let (a, b) = assemble(sector, &trunc, order)?;
    let mut spectrum = solve_spectrum(&a, &b, k).map_err(|e| match e {
        Error::QuadratureResolution { .. } => Error::QuadratureResolution { order },
        other => other,
    })?;
    spectrum.truncation = Some(trunc);
    spectrum.quadrature_order = Some(order);
    Ok(spectrum)
}

/// Spectra on an ascending `n_max` grid with per-level changes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub n_max_grid: Vec<u32>,
    pub spectra: Vec<EigenSpectrum>,
    /// `eigenvalue_deltas[j][k] = |Ẽ_k(grid[j+1]) - Ẽ_k(grid[j])|`.
    pub eigenvalue_deltas: Vec<Vec<f64>>,
    /// The same in effective `λ`.
    pub lambda_deltas: Vec<Vec<f64>>,
}

impl ConvergenceStudy {
    /// Length of the leading run of levels whose effective `λ` moved by less
    /// than `tolerance` in the last refinement.
    pub fn converged_count(&self, tolerance: f64) -> usize {
        self.lambda_deltas
            .last()
            .map(|d| d.iter().take_while(|&&x| x < tolerance).count())
            .unwrap_or(0)
    }

    /// The finest spectrum, annotated with the last refinement's deltas and
    /// the converged count at `tolerance`.
    pub fn final_spectrum(&self, tolerance: f64) -> EigenSpectrum {
        let mut s = self.spectra.last().expect("non-empty grid").clone();
        s.converged_count = self.converged_count(tolerance);
        s.last_delta = self.lambda_deltas.last().cloned();
        s
    }
}

pub fn convergence_study(sector: &FlattenedSector, n_max_grid: &[u32], k: usize) -> Result<ConvergenceStudy> {
    if n_max_grid.len() < 2 || n_max_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "convergence grid needs at least two ascending n_max values".into(),
        ));
    }
    let spectra = n_max_grid
        .iter()
        .map(|&n| sector_spectrum(sector, n, None, k))
        .collect::<Result<Vec<_>>>()?;
    let mut eigenvalue_deltas = Vec::new();
    let mut lambda_deltas = Vec::new();
    for w in spectra.windows(2) {
        let len = w[0].len().min(w[1].len());
        eigenvalue_deltas.push((0..len).map(|i| (w[1].values[i] - w[0].values[i]).abs()).collect());
        lambda_deltas.push(
            (0..len)
                .map(|i| (w[1].effective_lambda[i] - w[0].effective_lambda[i]).abs())
                .collect(),
        );
    }
    Ok(ConvergenceStudy {
        n_max_grid: n_max_grid.to_vec(),
        spectra,
        eigenvalue_deltas,
        lambda_deltas,
    })
}

/// Unit direction on the sphere of a reference point.
pub fn sphere_point(sector: &FlattenedSector, s: f64, t: f64) -> Vector3<f64> {
    sector.chart_vector(s, t).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SectorGeometry;
    use crate::polynomial::HomogeneousPolynomial;
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix3;

    fn octant() -> FlattenedSector {
        let g = SectorGeometry::from_inward_normals([Vec3::x(), Vec3::y(), Vec3::z()]).unwrap();
        flatten_geometry(&g).unwrap()
    }

    #[test]
    fn truncation_counts() {
        let t = BasisTruncation::new(3);
        assert_eq!(t.index_pairs, vec![(1, 2), (1, 3), (2, 3)]);
        assert!(BasisTruncation::new(10).index_pairs.iter().all(|(n, m)| n < m));
        assert_eq!(BasisTruncation::new(40).len(), 780);
    }

    #[test]
    fn basis_vanishes_on_edges_and_simplifies() {
        for (n, m) in [(1, 2), (2, 5), (3, 7)] {
            for k in 0..10 {
                let x = -1.0 + 2.0 * k as f64 / 9.0;
                assert!(basis_function(n, m, -1.0, x).abs() < 1e-12);
                assert!(basis_function(n, m, x, -1.0).abs() < 1e-12);
                assert!(basis_function(n, m, x, -x).abs() < 1e-12);
            }
            assert_abs_diff_eq!(
                basis_function(n, m, 0.1, -0.4),
                -basis_function(m, n, 0.1, -0.4),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn basis_matches_exponential_form() {
        use std::f64::consts::FRAC_PI_2;
        let (n, m, s, t) = (2.0f64, 5.0f64, -0.3f64, -0.2f64);
        let e = |x: f64| x.cos(); // real part; the imaginary parts cancel
        let val = 0.25
            * (e(FRAC_PI_2 * (-n * (s + 1.0) + m * (t - 1.0))) - e(FRAC_PI_2 * (-n * (s + 1.0) - m * (t - 1.0)))
                + e(FRAC_PI_2 * (n * (s + 1.0) - m * (t - 1.0)))
                - e(FRAC_PI_2 * (n * (s + 1.0) + m * (t - 1.0)))
                - e(FRAC_PI_2 * (-m * (s + 1.0) + n * (t - 1.0)))
                + e(FRAC_PI_2 * (-m * (s + 1.0) - n * (t - 1.0)))
                - e(FRAC_PI_2 * (m * (s + 1.0) - n * (t - 1.0)))
                + e(FRAC_PI_2 * (m * (s + 1.0) + n * (t - 1.0))));
        assert_abs_diff_eq!(val, basis_function(2, 5, s, t), epsilon = 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-6;
        let (s, t) = (-0.35, -0.2);
        let (gs, gt) = basis_gradient(3, 8, s, t);
        let fs = (basis_function(3, 8, s + h, t) - basis_function(3, 8, s - h, t)) / (2.0 * h);
        let ft = (basis_function(3, 8, s, t + h) - basis_function(3, 8, s, t - h)) / (2.0 * h);
        assert_abs_diff_eq!(gs, fs, epsilon = 1e-7);
        assert_abs_diff_eq!(gt, ft, epsilon = 1e-7);
    }

    #[test]
    fn flat_orthonormality() {
        let rule = triangle_rule(30);
        let inner = |a: (u32, u32), b: (u32, u32)| -> f64 {
            (0..rule.len())
                .map(|k| {
                    rule.weights[k]
                        * basis_function(a.0, a.1, rule.s[k], rule.t[k])
                        * basis_function(b.0, b.1, rule.s[k], rule.t[k])
                })
                .sum()
        };
        assert_abs_diff_eq!(inner((1, 2), (1, 3)), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inner((1, 2), (1, 2)), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inner((2, 5), (2, 5)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chart_coefficients_at_origin() {
        let c = chart_coefficients(0.0, 0.0);
        assert_eq!((c.g_ss, c.g_st, c.g_tt, c.b_s, c.b_t), (1.0, 0.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn outside_points_rejected() {
        assert!(matches!(
            operator_coefficients(&octant(), 0.5, 0.5),
            Err(Error::OutsideTriangle { .. })
        ));
    }

    #[test]
    fn octant_measure_and_ground_state() {
        let sector = octant();
        let rule = triangle_rule(40);
        let area: f64 = (0..rule.len())
            .map(|k| rule.weights[k] * sector.measure_density(rule.s[k], rule.t[k]))
            .sum();
        assert_abs_diff_eq!(area, PI / 2.0, epsilon = 1e-10);
        // Convergence is algebraic in n_max; at 24 the ground level sits a
        // few 1e-4 above the exact 12 and must never fall below it.
        let spectrum = sector_spectrum(&sector, 24, None, 3).unwrap();
        assert!(spectrum.values[0] > 12.0 - 1e-9);
        assert_abs_diff_eq!(spectrum.values[0], 12.0, epsilon = 1e-3);
        assert_abs_diff_eq!(spectrum.effective_lambda[0], 3.0, epsilon = 2e-4);
    }

    fn h3_sector(order: &str, center: ChartCenter) -> FlattenedSector {
        use crate::mass::{coincident_mass_ratios, generate_family, CoxeterSpec};
        let h3 = CoxeterSpec::h3();
        let m = generate_family(&h3, 1.0, coincident_mass_ratios(&h3)[0].0).unwrap();
        flatten_sector_with(&m, order.parse().unwrap(), center).unwrap()
    }

    /// Value, gradient and Hessian in `(s, t)` of `Y(z/|z|)` for a harmonic
    /// polynomial `Y`, by the chain rule through `Y(w)|w|^-λ`.
    fn pulled_back_jet(
        sector: &FlattenedSector,
        y: &HomogeneousPolynomial,
        s: f64,
        t: f64,
    ) -> (f64, [f64; 2], [[f64; 3]; 1]) {
        let lambda = y.degree() as f64;
        let w = sector.chart_vector(s, t);
        let r2 = w.norm_squared();
        let grad_y = Vec3::from_fn(|i, _| y.derivative(i).evaluate(&w));
        let hess_y = Matrix3::from_fn(|i, j| y.derivative(i).derivative(j).evaluate(&w));
        let g = r2.powf(-lambda / 2.0);
        let grad_g = -lambda * g / r2 * w;
        let hess_g = -lambda * g / r2 * (Matrix3::identity() - (lambda + 2.0) / r2 * w * w.transpose());
        let yv = y.evaluate(&w);
        let grad = grad_y * g + yv * grad_g;
        let hess = hess_y * g + grad_y * grad_g.transpose() + grad_g * grad_y.transpose() + yv * hess_g;
        let inv = sector.affine_matrix().try_inverse().unwrap();
        let [_, f1, f2] = sector.frame.map(Vec3::from);
        let ws = inv[(0, 0)] * f1 + inv[(1, 0)] * f2;
        let wt = inv[(0, 1)] * f1 + inv[(1, 1)] * f2;
        let second = [[ws.dot(&(hess * ws)), ws.dot(&(hess * wt)), wt.dot(&(hess * wt))]];
        (yv * g, [grad.dot(&ws), grad.dot(&wt)], second)
    }

    fn apply(c: &OperatorCoefficients, d1: [f64; 2], d2: [f64; 3]) -> f64 {
        c.g_ss * d2[0] + 2.0 * c.g_st * d2[1] + c.g_tt * d2[2] + c.b_s * d1[0] + c.b_t * d1[1]
    }

    fn test_sectors() -> Vec<FlattenedSector> {
        vec![
            octant(),
            h3_sector("1243", ChartCenter::Canonical),
            h3_sector("1342", ChartCenter::Circumcenter),
        ]
    }

    fn interior_points(count: usize, seed: u64) -> Vec<(f64, f64)> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < count {
            let (s, t) = (rng.random_range(-0.95..0.95), rng.random_range(-0.95..0.95));
            if s + t < -0.05 {
                out.push((s, t));
            }
        }
        out
    }

    /// Spherical harmonics pulled back to the reference triangle are
    /// eigenfunctions of the transformed operator.
    #[test]
    fn operator_reproduces_harmonic_eigenvalues() {
        use crate::harmonics::real_spherical_harmonic;
        for sector in &test_sectors() {
            for (lambda, mu) in [(2, 0), (3, -2), (5, 3), (8, -7)] {
                let y = real_spherical_harmonic(lambda, mu);
                let expected_factor = -((lambda * (lambda + 1)) as f64);
                for (s, t) in interior_points(20, lambda as u64) {
                    let c = operator_coefficients(sector, s, t).unwrap();
                    let (f, d1, [d2]) = pulled_back_jet(sector, &y, s, t);
                    let lap = apply(&c, d1, d2);
                    let scale = f.abs().max(y.max_abs_coefficient() * 1e-3);
                    assert!(
                        (lap - expected_factor * f).abs() < 1e-8 * (lambda * (lambda + 1)) as f64 * scale,
                        "λ={lambda} μ={mu} at ({s},{t}): {lap} vs {}",
                        expected_factor * f
                    );
                }
            }
        }
    }

    #[test]
    fn operator_matches_five_point_stencils() {
        use crate::harmonics::real_spherical_harmonic;
        let h = 1e-4;
        let d1 = |g: &dyn Fn(f64) -> f64| (g(-2.0 * h) - 8.0 * g(-h) + 8.0 * g(h) - g(2.0 * h)) / (12.0 * h);
        let d2 = |g: &dyn Fn(f64) -> f64| {
            (-g(-2.0 * h) + 16.0 * g(-h) - 30.0 * g(0.0) + 16.0 * g(h) - g(2.0 * h)) / (12.0 * h * h)
        };
        for sector in &test_sectors() {
            let y = real_spherical_harmonic(4, 1);
            let f = |s: f64, t: f64| y.evaluate(&sector.chart_vector(s, t).normalize());
            for (s, t) in interior_points(8, 99) {
                let c = operator_coefficients(sector, s, t).unwrap();
                let first = [d1(&|e| f(s + e, t)), d1(&|e| f(s, t + e))];
                // Mixed derivative from the 5-point stencil along t of the
                // 5-point derivative along s.
                let fst = d1(&|e| d1(&|g| f(s + g, t + e)));
                let second = [d2(&|e| f(s + e, t)), fst, d2(&|e| f(s, t + e))];
                let (_, exact1, [exact2]) = pulled_back_jet(sector, &y, s, t);
                let fd = apply(&c, first, second);
                let exact = apply(&c, exact1, exact2);
                assert!((fd - exact).abs() < 1e-5 * exact.abs().max(1.0), "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn smallest_truncation_and_symmetry() {
        let (a, b) = assemble(&octant(), &BasisTruncation::new(3), 9).unwrap();
        assert_eq!(a.shape(), (3, 3));
        assert_eq!(b.shape(), (3, 3));
        assert_eq!(a, a.transpose());
        assert!(b.clone().cholesky().is_some());
    }

    #[test]
    fn overlap_insensitive_to_doubled_quadrature() {
        let sector = h3_sector("1243", ChartCenter::Canonical);
        let trunc = BasisTruncation::new(20);
        let order = default_quadrature_order(20);
        let (_, b1) = assemble(&sector, &trunc, order).unwrap();
        let (_, b2) = assemble(&sector, &trunc, 2 * order).unwrap();
        assert!((b1.trace() - b2.trace()).abs() < 1e-6 * b2.trace());
        assert!((&b1 - b1.transpose()).norm() < 1e-10 * b1.norm());
    }

    #[test]
    fn ritz_values_decrease_with_basis() {
        let sector = h3_sector("1342", ChartCenter::Canonical);
        let coarse = sector_spectrum(&sector, 14, Some(60), 20).unwrap();
        let fine = sector_spectrum(&sector, 20, Some(60), 20).unwrap();
        for (c, f) in coarse.values.iter().zip(&fine.values) {
            assert!(f <= &(c + 1e-9 * c), "{f} > {c}");
        }
    }

    #[test]
    fn chart_choice_does_not_change_the_spectrum() {
        let canonical = sector_spectrum(&h3_sector("1243", ChartCenter::Canonical), 30, None, 5).unwrap();
        let circum = sector_spectrum(&h3_sector("1243", ChartCenter::Circumcenter), 30, None, 5).unwrap();
        for (x, y) in canonical.values.iter().zip(&circum.values) {
            assert_abs_diff_eq!(x, y, epsilon = 2e-3 * x);
        }
    }

    #[test]
    fn sector_measure_is_girard_area() {
        let sector = h3_sector("1342", ChartCenter::Canonical);
        let rule = triangle_rule(60);
        let area: f64 = (0..rule.len())
            .map(|k| rule.weights[k] * sector.measure_density(rule.s[k], rule.t[k]))
            .sum();
        let [a, b, c] = sector.geometry.dihedral_angles;
        assert_abs_diff_eq!(area, a + b + c - PI, epsilon = 1e-8);
    }

    #[test]
    fn equal_mass_ground_state() {
        let m = MassSequence::new(vec![1.0; 4]).unwrap();
        let sector = flatten_sector(&m, ParticleOrder([0, 1, 2, 3])).unwrap();
        let spectrum = sector_spectrum(&sector, 24, None, 1).unwrap();
        assert_abs_diff_eq!(spectrum.effective_lambda[0], 6.0, epsilon = 1e-3);
    }
}
