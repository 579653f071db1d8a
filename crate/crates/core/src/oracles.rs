//! Independent reference solutions used to validate the lattice solver.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::unit_sphere_area;
use crate::solver::{Field, LinearOperator, OperatorSpec};

/// Largest system the dense oracle will factor.
pub const DENSE_DOF_LIMIT: usize = 10_000;

/// How the inner flux datum `g1` is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FluxNormalization {
    /// `∮_{∂B} ∂_r v = g1` (total flux, the corrector's convention).
    #[default]
    Total,
    /// `⨏_{∂B} ∂_r v = g1` (mean normal derivative).
    Average,
}

/// Radial screened problem on the annulus `inner_radius < r < r_out`:
///
/// ```text
/// (1/T) v − r^{1−d} (r^{d−1} v')' = g2,
/// flux of v' through the inner sphere = g1,   v'(r_out) = −v(r_out)/√T.
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProblem {
    pub d: usize,
    pub t: f64,
    pub inner_radius: f64,
    pub r_out: f64,
    pub g1: f64,
    pub g2: f64,
    pub nodes: usize,
    pub flux: FluxNormalization,
}

impl RadialProblem {
    pub fn new(d: usize, t: f64, r_out: f64, g1: f64, g2: f64, nodes: usize) -> Self {
        Self { d, t, inner_radius: 1.0, r_out, g1, g2, nodes, flux: FluxNormalization::Total }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub problem: RadialProblem,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Max-norm residual of the discrete system relative to its data.
    pub residual: f64,
}

impl RadialProfile {
    /// Value on the inclusion (continuous with the annulus at the inner
    /// radius).
    pub fn core_value(&self) -> f64 {
        self.values[0]
    }

    /// Piecewise-linear interpolation; clamps outside the node range.
    pub fn value_at(&self, r: f64) -> f64 {
        let rs = &self.radii;
        if r <= rs[0] {
            return self.values[0];
        }
        if r >= rs[rs.len() - 1] {
            return self.values[rs.len() - 1];
        }
        let j = rs.partition_point(|&x| x <= r) - 1;
        let s = (r - rs[j]) / (rs[j + 1] - rs[j]);
        self.values[j] * (1.0 - s) + self.values[j + 1] * s
    }
}

/// Finite-volume discretization on a geometrically graded grid with a
/// tridiagonal solve.
pub fn radial_massive_solve(p: &RadialProblem) -> Result<RadialProfile> {
    if p.d < 2 {
        return Err(invalid("radial oracle needs d >= 2"));
    }
    if !(p.t > 0.0) {
        return Err(invalid("T must be positive"));
    }
    if !(p.inner_radius > 0.0 && p.r_out > p.inner_radius) {
        return Err(invalid(format!("need 0 < inner radius < r_out, got {} and {}", p.inner_radius, p.r_out)));
    }
    if p.nodes < 100 {
        return Err(invalid(format!("at least 100 nodes required, got {}", p.nodes)));
    }
    let m = p.nodes;
    let d = p.d as i32;
    let omega = unit_sphere_area(p.d);
    let area = |r: f64| omega * r.powi(d - 1);
    let ball = |r: f64| omega * r.powi(d) / d as f64;

    let q = (p.r_out / p.inner_radius).powf(1.0 / (m - 1) as f64);
    let mut r: Vec<f64> = (0..m).map(|j| p.inner_radius * q.powi(j as i32)).collect();
    r[m - 1] = p.r_out;
    let faces: Vec<f64> = (0..=m)
        .map(|j| match j {
            0 => p.inner_radius,
            j if j == m => p.r_out,
            j => 0.5 * (r[j - 1] + r[j]),
        })
        .collect();
    let inv_t = if p.t.is_finite() { 1.0 / p.t } else { 0.0 };
    let flux_in = match p.flux {
        FluxNormalization::Total => p.g1,
        FluxNormalization::Average => area(p.inner_radius) * p.g1,
    };

    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for j in 0..m {
        let vol = ball(faces[j + 1]) - ball(faces[j]);
        diag[j] = inv_t * vol;
        rhs[j] = p.g2 * vol;
        if j + 1 < m {
            let c = area(faces[j + 1]) / (r[j + 1] - r[j]);
            diag[j] += c;
            upper[j] = -c;
        } else {
            diag[j] += area(p.r_out) * p.t.sqrt().recip();
        }
        if j > 0 {
            let c = area(faces[j]) / (r[j] - r[j - 1]);
            diag[j] += c;
            lower[j] = -c;
        } else {
            rhs[j] -= flux_in;
        }
    }
    if diag.iter().any(|&x| x == 0.0) {
        return Err(Error::Singular("radial system has a zero pivot".into()));
    }
    let values = thomas(&lower, &diag, &upper, &rhs)?;

    let mut worst: f64 = 0.0;
    let scale = rhs.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(
        (0..m)
            .map(|j| diag[j].abs() * values[j].abs())
            .fold(0.0, f64::max),
    );
    for j in 0..m {
        let mut ax = diag[j] * values[j];
        if j > 0 {
            ax += lower[j] * values[j - 1];
        }
        if j + 1 < m {
            ax += upper[j] * values[j + 1];
        }
        worst = worst.max((ax - rhs[j]).abs());
    }
    let residual = if scale > 0.0 { worst / scale } else { 0.0 };
    Ok(RadialProfile { problem: *p, radii: r, values, residual })
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Singular("zero pivot".into()));
    }
    c[0] = upper[0] / denom;
    y[0] = rhs[0] / denom;
    for j in 1..m {
        denom = diag[j] - lower[j] * c[j - 1];
        if denom == 0.0 {
            return Err(Error::Singular("zero pivot".into()));
        }
        c[j] = upper[j] / denom;
        y[j] = (rhs[j] - lower[j] * y[j - 1]) / denom;
    }
    for j in (0..m - 1).rev() {
        y[j] -= c[j] * y[j + 1];
    }
    Ok(y)
}

/// Closed-form unscreened radial profile with zero trace on the unit sphere:
///
/// `v(r) = −g2 r²/(2d) + (−g1 + g2/d)(2−d) r^{2−d} + g2/(2d) + (d−2)(−g1 + g2/d)`.
///
/// It solves `−Δv = g2` with `v(1) = 0`, but its normal derivative on the
/// unit sphere is `−g1` in d = 3 rather than `+g1`. Kept for comparison
/// only; the finite-volume solve is the reference.
pub fn closed_form_annulus_profile(d: usize, g1: f64, g2: f64, r: f64) -> f64 {
    let df = d as f64;
    let a = -g1 + g2 / df;
    -g2 * r * r / (2.0 * df) + a * (2.0 - df) * r.powf(2.0 - df) + g2 / (2.0 * df) + (df - 2.0) * a
}

/// Radial profile of the whole-space massive Green's function
/// `(1/T − Δ) G = δ`, sampled on `[r_min, 8√T]`.
pub fn whole_space_green_profile(d: usize, t: f64, r_min: f64, nodes: usize) -> Result<RadialProfile> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("numeric Green's function needs finite positive T"));
    }
    let r_out = (8.0 * t.sqrt()).max(16.0 * r_min);
    radial_massive_solve(&RadialProblem {
        d,
        t,
        inner_radius: r_min,
        r_out,
        g1: -1.0,
        g2: 0.0,
        nodes,
        flux: FluxNormalization::Total,
    })
}

/// `G_T(r)`: closed form `e^{−r/√T}/(4πr)` in d = 3 (T may be infinite),
/// numeric radial solve otherwise.
pub fn whole_space_green(d: usize, t: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Err(Error::Singular("Green's function is singular at r = 0".into()));
    }
    if !(r > 0.0) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    if !(t > 0.0) {
        return Err(invalid("T must be positive"));
    }
    if d == 3 {
        let decay = if t.is_finite() { (-r / t.sqrt()).exp() } else { 1.0 };
        return Ok(decay / (4.0 * std::f64::consts::PI * r));
    }
    let profile = whole_space_green_profile(d, t, r / 8.0, 4000)?;
    Ok(profile.value_at(r))
}

/// Dense matrix of the operator, assembled column by column.
pub fn assemble_dense(spec: &OperatorSpec) -> Result<DMatrix<f64>> {
    let n = spec.dofs();
    if n > DENSE_DOF_LIMIT {
        return Err(Error::DofBudget { dofs: n, max: DENSE_DOF_LIMIT });
    }
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        spec.apply(&e, &mut col);
        e[j] = 0.0;
        a.column_mut(j).copy_from_slice(&col);
    }
    Ok(a)
}

/// Cholesky solve of the assembled system.
pub fn dense_direct_solve(spec: &OperatorSpec, rhs: &Field) -> Result<Field> {
    let n = spec.dofs();
    if rhs.values.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: rhs.values.len() });
    }
    let a = assemble_dense(spec)?;
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Singular("operator matrix is not positive definite".into()))?;
    let x = chol.solve(&DVector::from_column_slice(&rhs.values));
    Ok(Field::from_values(x.as_slice().to_vec(), rhs.n_fluid))
}
