//! Spectral solvers for the linearized models on the periodic lattice.
//!
//! Both models invert `1/T − Δ_h`, where `Δ_h` is the same 2d+1-point
//! Laplacian used by the corrector solver, so the Fourier symbol is
//! `σ(k) = (4/h²) Σ_j sin²(π k_j / n)` rather than `|k|²`.
//!
//! * indicator model: `(1/T − Δ_h) v = 1_B − θ_h`
//! * divergence model: `(1/T − Δ_h) w = ∇⁺·(1_B e)` with forward differences

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft::FftNd;
use crate::lattice::{Geometry, Grid, FLUID};

/// Cell-indexed field on the full lattice (no merged unknowns).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl SpectralField {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearModel {
    Indicator,
    /// Divergence-form source along the given axis.
    Divergence { axis: usize },
}

/// Box averages of `(1/T) v²` and `|∇⁺v|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoulombEnergy {
    pub massive: f64,
    pub dirichlet: f64,
}

/// One-axis factor `(4/h²) sin²(π k / n)` of the symbol.
pub fn symbol_table(grid: &Grid) -> Vec<f64> {
    let n = grid.n;
    let c = 4.0 / (grid.h * grid.h);
    (0..n)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
            c * s * s
        })
        .collect()
}

fn for_each_symbol(grid: &Grid, mut f: impl FnMut(usize, f64)) {
    let table = symbol_table(grid);
    let n = grid.n;
    let d = grid.dim;
    let mut idx = vec![0usize; d];
    let mut partial = vec![0.0; d + 1];
    for c in 0..grid.cells() {
        // odometer update of idx with running prefix sums of the symbol
        let axis = if c == 0 {
            0
        } else {
            let mut axis = d - 1;
            loop {
                idx[axis] += 1;
                if idx[axis] < n {
                    break axis;
                }
                idx[axis] = 0;
                axis -= 1;
            }
        };
        for a in axis..d {
            partial[a + 1] = partial[a] + table[idx[a]];
        }
        f(c, partial[d]);
    }
}

fn check_geometry(grid: &Grid, geometry: &Geometry) -> Result<()> {
    if geometry.grid != *grid {
        return Err(Error::ShapeMismatch { expected: grid.cells(), got: geometry.grid.cells() });
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("T must be positive and finite, got {t}")));
    }
    Ok(())
}

fn indicator(geometry: &Geometry) -> impl Iterator<Item = f64> + '_ {
    geometry.labels.iter().map(|&l| if l == FLUID { 0.0 } else { 1.0 })
}

/// Source of the given model as a complex buffer.
pub fn model_source(grid: &Grid, geometry: &Geometry, model: LinearModel) -> Result<Vec<Complex64>> {
    check_geometry(grid, geometry)?;
    match model {
        LinearModel::Indicator => {
            let theta = geometry.theta_h;
            Ok(indicator(geometry).map(|x| Complex64::new(x - theta, 0.0)).collect())
        }
        LinearModel::Divergence { axis } => {
            if axis >= grid.dim {
                return Err(invalid(format!("direction {axis} out of range for d = {}", grid.dim)));
            }
            let chi: Vec<f64> = indicator(geometry).collect();
            let inv_h = 1.0 / grid.h;
            Ok((0..grid.cells())
                .map(|c| Complex64::new((chi[grid.neighbor(c, axis, true)] - chi[c]) * inv_h, 0.0))
                .collect())
        }
    }
}

/// Applies `(1/T + σ)^{-1}` in Fourier space. `zero_mean` discards mode 0.
fn screened_divide(grid: &Grid, t: f64, spectrum: &mut [Complex64], zero_mean: bool) {
    let inv_t = 1.0 / t;
    for_each_symbol(grid, |c, sigma| {
        spectrum[c] /= inv_t + sigma;
    });
    if zero_mean {
        spectrum[0] = Complex64::default();
    }
}

fn solve_model(grid: &Grid, geometry: &Geometry, t: f64, model: LinearModel) -> Result<SpectralField> {
    check_t(t)?;
    let mut data = model_source(grid, geometry, model)?;
    let fft = FftNd::new(grid.dim, grid.n);
    fft.forward(&mut data);
    screened_divide(grid, t, &mut data, true);
    fft.inverse(&mut data);
    Ok(SpectralField { grid: *grid, values: data.iter().map(|z| z.re).collect() })
}

/// Indicator model `(1/T − Δ_h) v = 1_B − θ_h`.
pub fn solve_linearized_fft(grid: &Grid, geometry: &Geometry, t: f64) -> Result<SpectralField> {
    solve_model(grid, geometry, t, LinearModel::Indicator)
}

/// Divergence model `(1/T − Δ_h) w = ∇⁺·(1_B e_axis)`.
pub fn solve_divform_fft(grid: &Grid, geometry: &Geometry, t: f64, axis: usize) -> Result<SpectralField> {
    solve_model(grid, geometry, t, LinearModel::Divergence { axis })
}

/// Periodic solve of `(1/T − Δ_h) u = f` for an arbitrary cell source,
/// keeping the mean mode (`û(0) = T f̂(0)`).
pub fn screened_periodic_solve(grid: &Grid, t: f64, source: &[f64]) -> Result<SpectralField> {
    check_t(t)?;
    if source.len() != grid.cells() {
        return Err(Error::ShapeMismatch { expected: grid.cells(), got: source.len() });
    }
    let mut data: Vec<Complex64> = source.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let fft = FftNd::new(grid.dim, grid.n);
    fft.forward(&mut data);
    screened_divide(grid, t, &mut data, false);
    fft.inverse(&mut data);
    Ok(SpectralField { grid: *grid, values: data.iter().map(|z| z.re).collect() })
}

pub fn coulomb_energy(v: &SpectralField, t: f64) -> CoulombEnergy {
    let grid = v.grid;
    let n_cells = v.values.len() as f64;
    let inv_h = 1.0 / grid.h;
    let mut grad = 0.0;
    for c in 0..grid.cells() {
        for axis in 0..grid.dim {
            let dv = (v.values[grid.neighbor(c, axis, true)] - v.values[c]) * inv_h;
            grad += dv * dv;
        }
    }
    CoulombEnergy { massive: v.mean_square() / t, dirichlet: grad / n_cells }
}

/// Box statistics of a linearized solution computed on the Fourier side
/// from a single forward transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    /// Box average of `v²`.
    pub mean_square: f64,
    /// Box average of `|∇⁺v|²`.
    pub gradient_energy: f64,
    /// Box average of `(1/T) v²`.
    pub massive_energy: f64,
    /// Mean of `v` over inclusion cells (`NaN` without inclusions).
    pub inclusion_mean: f64,
}

pub fn spectral_statistics(grid: &Grid, geometry: &Geometry, t: f64, model: LinearModel) -> Result<SpectralStats> {
    check_t(t)?;
    let mut data = model_source(grid, geometry, model)?;
    let fft = FftNd::new(grid.dim, grid.n);
    fft.forward(&mut data);
    let inv_t = 1.0 / t;
    let theta = geometry.theta_h;
    let n = grid.cells() as f64;
    let mut sq = 0.0;
    let mut grad = 0.0;
    let mut cross = 0.0;
    // χ̂ for the inclusion mean: equal to the indicator-model source off mode 0
    let chi_hat = match model {
        LinearModel::Indicator => None,
        LinearModel::Divergence { .. } => {
            let mut chi: Vec<Complex64> = indicator(geometry).map(|x| Complex64::new(x, 0.0)).collect();
            fft.forward(&mut chi);
            Some(chi)
        }
    };
    for_each_symbol(grid, |c, sigma| {
        if c == 0 {
            return;
        }
        let v = data[c] / (inv_t + sigma);
        let p = v.norm_sqr();
        sq += p;
        grad += sigma * p;
        let chi = match &chi_hat {
            Some(x) => x[c],
            None => data[c],
        };
        cross += (v * chi.conj()).re;
    });
    let mean_square = sq / (n * n);
    let incl_cells = theta * n;
    Ok(SpectralStats {
        mean_square,
        gradient_energy: grad / (n * n),
        massive_energy: mean_square * inv_t,
        inclusion_mean: if incl_cells > 0.0 { cross / n / incl_cells } else { f64::NAN },
    })
}
