//! Massive corrector problem outside the inclusions.
//!
//! The field is constant on each inclusion (one merged unknown) and the net
//! boundary flux condition enters through the right-hand side of the weak
//! form: fluid cells carry `ḡ_θ h^d` and inclusion `i` carries `−ḡ Vol_i`,
//! with `ḡ_θ = ḡ θ_h / (1 − θ_h)` so that the right-hand side sums to zero.

pub mod cg;
mod green;
mod operator;

use serde::{Deserialize, Serialize};

pub use cg::{conjugate_gradient, CgOutcome, LinearOperator};
pub use green::{find_green_source, green_function, shell_average, ShellAverage};
pub use operator::OperatorSpec;

use crate::error::{Error, Result};
use crate::lattice::Geometry;
use crate::parallel;

/// DOF vector: fluid cells in row-major order, then one value per inclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub n_fluid: usize,
}

impl Field {
    pub fn zeros(n_fluid: usize, inclusions: usize) -> Self {
        Self { values: vec![0.0; n_fluid + inclusions], n_fluid }
    }

    pub fn from_values(values: Vec<f64>, n_fluid: usize) -> Self {
        Self { values, n_fluid }
    }

    pub fn fluid(&self) -> &[f64] {
        &self.values[..self.n_fluid]
    }

    pub fn inclusions(&self) -> &[f64] {
        &self.values[self.n_fluid..]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub maxit: usize,
    pub jacobi: bool,
}

impl SolveOptions {
    /// Tolerance `1e-10` and `50·n` iterations.
    pub fn for_grid(n: usize) -> Self {
        Self { tol: 1e-10, maxit: 50 * n, jacobi: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: Field,
    pub inclusion_values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub energy_massive: f64,
    pub energy_dirichlet: f64,
}

impl SolveResult {
    /// `a(u, u)`
    pub fn energy(&self) -> f64 {
        self.energy_massive + self.energy_dirichlet
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub energy_massive: f64,
    pub energy_dirichlet: f64,
    pub u_bar_box: Option<f64>,
}

/// Realized neutrality constant `ḡ θ_h / (1 − θ_h)`.
pub fn neutral_fluid_source(geometry: &Geometry, gbar: f64) -> Result<f64> {
    let theta = geometry.theta_h;
    if theta >= 1.0 {
        return Err(Error::DegenerateGeometry("volume fraction is 1".into()));
    }
    Ok(gbar * theta / (1.0 - theta))
}

pub fn assemble_rhs(spec: &OperatorSpec, gbar: f64) -> Result<Field> {
    let geometry = spec.geometry();
    let g_theta = neutral_fluid_source(geometry, gbar)?;
    let cv = spec.grid.cell_volume();
    let mut rhs = spec.zero_field();
    rhs.values[..spec.fluid_dofs()].fill(g_theta * cv);
    for (slot, vol) in rhs.values[spec.fluid_dofs()..].iter_mut().zip(&geometry.inclusion_volume) {
        *slot = -gbar * vol;
    }
    Ok(rhs)
}

pub fn solve_corrector(spec: &OperatorSpec, gbar: f64, opts: SolveOptions) -> Result<SolveResult> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tolerance must lie in (0, 1), got {}", opts.tol)));
    }
    let rhs = assemble_rhs(spec, gbar)?;
    solve_with_rhs(spec, &rhs, opts)
}

/// CG solve of `a(u, ·) = rhs`.
pub fn solve_with_rhs(spec: &OperatorSpec, rhs: &Field, opts: SolveOptions) -> Result<SolveResult> {
    if rhs.values.len() != spec.dofs() {
        return Err(Error::ShapeMismatch { expected: spec.dofs(), got: rhs.values.len() });
    }
    let inv_diag: Option<Vec<f64>> = opts.jacobi.then(|| spec.diagonal().iter().map(|d| 1.0 / d).collect());
    let out = conjugate_gradient(spec, &rhs.values, opts.tol, opts.maxit, inv_diag.as_deref());
    let u = Field::from_values(out.x, spec.fluid_dofs());
    let (energy_massive, energy_dirichlet) = spec.energies(&u)?;
    let result = SolveResult {
        inclusion_values: u.inclusions().to_vec(),
        u,
        iterations: out.iterations,
        residual: out.residual,
        energy_massive,
        energy_dirichlet,
    };
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            residual: out.residual,
            partial: Box::new(result),
        });
    }
    Ok(result)
}

/// Defects of the two exact discrete identities of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityDefects {
    /// `Σ_fluid u h^d`
    pub fluid_mass: f64,
    /// `|Σ_fluid u h^d| / (‖u‖_{L²(fluid)} · |fluid|^{1/2})`
    pub fluid_mass_rel: f64,
    /// `a(u, u) + ḡ Σ_i u_i Vol_i`
    pub energy: f64,
    /// `|a(u, u) + ḡ Σ_i u_i Vol_i| / a(u, u)`
    pub energy_rel: f64,
}

pub fn identity_defects(spec: &OperatorSpec, res: &SolveResult, gbar: f64) -> IdentityDefects {
    let cv = spec.grid.cell_volume();
    let fluid = res.u.fluid();
    let fluid_mass = parallel::sum(fluid) * cv;
    let l2 = (parallel::dot(fluid, fluid) * cv).sqrt();
    let vol = fluid.len() as f64 * cv;
    let flux_work: f64 = res
        .inclusion_values
        .iter()
        .zip(&spec.geometry().inclusion_volume)
        .map(|(u, v)| u * v)
        .sum();
    let energy = res.energy() + gbar * flux_work;
    let scale = l2 * vol.sqrt();
    IdentityDefects {
        fluid_mass,
        fluid_mass_rel: if scale > 0.0 { fluid_mass.abs() / scale } else { 0.0 },
        energy,
        energy_rel: if res.energy() > 0.0 { energy.abs() / res.energy() } else { energy.abs() },
    }
}

/// Volume-weighted mean of the inclusion values.
pub fn effective_field_box(res: &SolveResult, geometry: &Geometry) -> Result<f64> {
    let total = geometry.total_inclusion_volume();
    if geometry.inclusions() == 0 || total == 0.0 {
        return Err(Error::UndefinedStatistic("effective field needs at least one inclusion".into()));
    }
    let s: f64 = res.inclusion_values.iter().zip(&geometry.inclusion_volume).map(|(u, v)| u * v).sum();
    Ok(s / total)
}

/// The same statistic through the energy identity, `−a(u,u) / (ḡ Σ Vol_i)`.
pub fn effective_field_from_energy(res: &SolveResult, geometry: &Geometry, gbar: f64) -> Result<f64> {
    let total = geometry.total_inclusion_volume();
    if geometry.inclusions() == 0 || total == 0.0 {
        return Err(Error::UndefinedStatistic("effective field needs at least one inclusion".into()));
    }
    if gbar == 0.0 {
        return Err(Error::UndefinedStatistic("energy route is undefined for zero buoyancy".into()));
    }
    Ok(-res.energy() / (gbar * total))
}

pub fn report(spec: &OperatorSpec, res: &SolveResult) -> SolveReport {
    SolveReport {
        iterations: res.iterations,
        residual: res.residual,
        energy_massive: res.energy_massive,
        energy_dirichlet: res.energy_dirichlet,
        u_bar_box: effective_field_box(res, spec.geometry()).ok(),
    }
}
