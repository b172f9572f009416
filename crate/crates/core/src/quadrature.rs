//! Quadrature rules: Gauss–Legendre on an interval, a collapsed (Duffy)
//! tensor rule on the reference right triangle, and a product rule on the
//! unit sphere.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    if order == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let rule = GaussLegendre::new(order.max(2)).expect("order >= 2");
    let mut pairs = rule.into_node_weight_pairs();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// A point rule in the plane: `(s, t, weight)`.
#[derive(Clone, Debug)]
pub struct PlanarRule {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PlanarRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Tensor Gauss rule on the triangle with corners `(-1,-1)`, `(1,-1)`,
/// `(-1,1)`, collapsing the unit square onto the right-angle corner:
/// `s = -1 + 2ξ(1-η)`, `t = -1 + 2ξη`, Jacobian `4ξ`.
pub fn triangle_rule(order: usize) -> PlanarRule {
    let (x, w) = gauss_legendre(order);
    let n = order * order;
    let mut rule = PlanarRule {
        s: Vec::with_capacity(n),
        t: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
    };
    for (xi, wi) in x.iter().zip(&w) {
        let xi = 0.5 * (xi + 1.0);
        for (eta, we) in x.iter().zip(&w) {
            let eta = 0.5 * (eta + 1.0);
            rule.s.push(-1.0 + 2.0 * xi * (1.0 - eta));
            rule.t.push(-1.0 + 2.0 * xi * eta);
            // 0.25 from mapping both Gauss intervals onto [0, 1].
            rule.weights.push(0.25 * wi * we * 4.0 * xi);
        }
    }
    rule
}

/// Points and weights on the unit sphere, exact for polynomials of total
/// degree `degree`: Gauss–Legendre in `cos θ` times the trapezoid rule in `φ`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

pub fn sphere_rule(degree: usize) -> SphereRule {
    let n_theta = degree / 2 + 1;
    let n_phi = degree + 1;
    let (x, w) = gauss_legendre(n_theta);
    let mut points = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (cos_theta, wt) in x.iter().zip(&w) {
        let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
        for k in 0..n_phi {
            let phi = 2.0 * PI * k as f64 / n_phi as f64;
            points.push([sin_theta * phi.cos(), sin_theta * phi.sin(), *cos_theta]);
            weights.push(wt * 2.0 * PI / n_phi as f64);
        }
    }
    SphereRule { points, weights }
}
