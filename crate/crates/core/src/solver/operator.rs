//! Discrete bilinear form of the massive corrector problem.
//!
//! Degrees of freedom are the fluid cells (row-major) followed by one merged
//! unknown per inclusion. The form is
//!
//! ```text
//! a(u, v) = (1/T) Σ_fluid u_c v_c h^d + Σ_edges (u_c' − u_c)(v_c' − v_c) h^{d−2}
//! ```
//!
//! over the periodic nearest-neighbour edges. Edges inside one inclusion join
//! a DOF to itself and drop out.

use rayon::prelude::*;

use super::cg::LinearOperator;
use super::Field;
use crate::error::{invalid, Error, Result};
use crate::lattice::{Geometry, Grid, FLUID};

#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub grid: Grid,
    pub t: f64,
    geometry: Geometry,
    n_fluid: usize,
    /// Cell → DOF.
    dof_map: Vec<u32>,
    /// Fluid DOF → cell.
    fluid_cells: Vec<u32>,
    /// `2d` neighbour DOFs per fluid DOF.
    fluid_nbrs: Vec<u32>,
    /// Per inclusion: outside neighbour DOFs with edge multiplicity.
    incl_nbrs: Vec<Vec<(u32, u32)>>,
    mass: f64,
    weight: f64,
}

impl OperatorSpec {
    pub fn new(geometry: Geometry, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("screening parameter T must be positive and finite, got {t}")));
        }
        let grid = geometry.grid;
        if let Some(i) = geometry.inclusion_cells.iter().position(|&c| c == 0) {
            return Err(Error::Geometry(format!("inclusion {i} covers no cells and cannot carry a DOF")));
        }
        let cells = grid.cells();
        let fluid_cells: Vec<u32> = (0..cells as u32).filter(|&c| geometry.labels[c as usize] == FLUID).collect();
        let n_fluid = fluid_cells.len();
        if n_fluid == 0 {
            return Err(Error::DegenerateGeometry("no fluid cells".into()));
        }
        let mut dof_map = vec![0u32; cells];
        for (k, &c) in fluid_cells.iter().enumerate() {
            dof_map[c as usize] = k as u32;
        }
        for (c, &lab) in geometry.labels.iter().enumerate() {
            if lab != FLUID {
                dof_map[c] = (n_fluid + lab as usize) as u32;
            }
        }

        let d = grid.dim;
        let mut fluid_nbrs = vec![0u32; n_fluid * 2 * d];
        fluid_nbrs.par_chunks_mut(2 * d).zip(fluid_cells.par_iter()).for_each(|(slot, &c)| {
            for axis in 0..d {
                slot[2 * axis] = dof_map[grid.neighbor(c as usize, axis, false)];
                slot[2 * axis + 1] = dof_map[grid.neighbor(c as usize, axis, true)];
            }
        });

        let mut incl_nbrs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); geometry.inclusions()];
        for (c, &lab) in geometry.labels.iter().enumerate() {
            if lab == FLUID {
                continue;
            }
            for axis in 0..d {
                for fwd in [false, true] {
                    let nb = grid.neighbor(c, axis, fwd);
                    if geometry.labels[nb] != lab {
                        incl_nbrs[lab as usize].push((dof_map[nb], 1));
                    }
                }
            }
        }
        for list in &mut incl_nbrs {
            list.sort_unstable();
            let mut merged: Vec<(u32, u32)> = Vec::with_capacity(list.len());
            for &(dof, _) in list.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == dof => last.1 += 1,
                    _ => merged.push((dof, 1)),
                }
            }
            *list = merged;
        }

        Ok(Self {
            grid,
            t,
            mass: grid.cell_volume() / t,
            weight: grid.h.powi(d as i32 - 2),
            geometry,
            n_fluid,
            dof_map,
            fluid_cells,
            fluid_nbrs,
            incl_nbrs,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dofs(&self) -> usize {
        self.n_fluid + self.incl_nbrs.len()
    }

    pub fn fluid_dofs(&self) -> usize {
        self.n_fluid
    }

    pub fn inclusions(&self) -> usize {
        self.incl_nbrs.len()
    }

    pub fn dof_of_cell(&self, cell: usize) -> usize {
        self.dof_map[cell] as usize
    }

    pub fn cell_of_fluid_dof(&self, k: usize) -> usize {
        self.fluid_cells[k] as usize
    }

    /// Mass weight `h^d / T` of a fluid cell.
    pub fn mass_weight(&self) -> f64 {
        self.mass
    }

    /// Edge weight `h^{d−2}`.
    pub fn edge_weight(&self) -> f64 {
        self.weight
    }

    pub fn zero_field(&self) -> Field {
        Field::zeros(self.n_fluid, self.inclusions())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let d = self.grid.dim;
        let mut diag = vec![self.mass + 2.0 * d as f64 * self.weight; self.n_fluid];
        diag.extend(
            self.incl_nbrs
                .iter()
                .map(|l| l.iter().map(|&(_, m)| m as f64).sum::<f64>() * self.weight),
        );
        diag
    }

    /// Riesz vector of `a(u, ·)`.
    pub fn apply_operator(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let mut out = self.zero_field();
        self.apply(&u.values, &mut out.values);
        Ok(out)
    }

    /// `a(u, v)`
    pub fn bilinear(&self, u: &Field, v: &Field) -> Result<f64> {
        let au = self.apply_operator(u)?;
        self.check(v)?;
        Ok(crate::parallel::dot(&au.values, &v.values))
    }

    /// `((1/T) Σ_fluid u² h^d, Σ_edges (Δu)² h^{d−2})`
    pub fn energies(&self, u: &Field) -> Result<(f64, f64)> {
        self.check(u)?;
        let x = &u.values;
        let nf = self.n_fluid;
        let d2 = 2 * self.grid.dim;
        let massive = self.mass * crate::parallel::dot(&x[..nf], &x[..nf]);
        // Each edge is seen from both endpoints, hence the factor one half.
        let fluid_part: Vec<f64> = x[..nf]
            .par_chunks(4096)
            .zip(self.fluid_nbrs.par_chunks(4096 * d2))
            .map(|(xs, nbrs)| {
                xs.iter()
                    .zip(nbrs.chunks_exact(d2))
                    .map(|(&xi, nb)| nb.iter().map(|&j| (xi - x[j as usize]).powi(2)).sum::<f64>())
                    .sum::<f64>()
            })
            .collect();
        let incl_part: f64 = self
            .incl_nbrs
            .iter()
            .enumerate()
            .map(|(i, list)| {
                let ui = x[nf + i];
                list.iter().map(|&(j, m)| m as f64 * (ui - x[j as usize]).powi(2)).sum::<f64>()
            })
            .sum();
        let dirichlet = 0.5 * self.weight * (fluid_part.iter().sum::<f64>() + incl_part);
        Ok((massive, dirichlet))
    }

    fn check(&self, u: &Field) -> Result<()> {
        if u.values.len() != self.dofs() || u.n_fluid != self.n_fluid {
            return Err(Error::ShapeMismatch { expected: self.dofs(), got: u.values.len() });
        }
        Ok(())
    }

    /// Cell-indexed view of a DOF vector (inclusion cells take their merged
    /// value).
    pub fn to_cells(&self, u: &Field) -> Vec<f64> {
        self.dof_map.iter().map(|&k| u.values[k as usize]).collect()
    }
}

impl LinearOperator for OperatorSpec {
    fn dim(&self) -> usize {
        self.dofs()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nf = self.n_fluid;
        let d2 = 2 * self.grid.dim;
        let (mass, w) = (self.mass, self.weight);
        let (yf, yi) = y.split_at_mut(nf);
        yf.par_chunks_mut(4096)
            .zip(x[..nf].par_chunks(4096))
            .zip(self.fluid_nbrs.par_chunks(4096 * d2))
            .for_each(|((ys, xs), nbrs)| {
                for ((yk, &xk), nb) in ys.iter_mut().zip(xs).zip(nbrs.chunks_exact(d2)) {
                    let s: f64 = nb.iter().map(|&j| x[j as usize]).sum();
                    *yk = mass * xk + w * (d2 as f64 * xk - s);
                }
            });
        yi.par_iter_mut().zip(self.incl_nbrs.par_iter()).enumerate().for_each(|(i, (yk, list))| {
            let ui = x[nf + i];
            *yk = w * list.iter().map(|&(j, m)| m as f64 * (ui - x[j as usize])).sum::<f64>();
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Grid;

    fn single_mode(grid: Grid) -> Vec<f64> {
        let l = grid.side();
        (0..grid.cells())
            .map(|c| (2.0 * std::f64::consts::PI * grid.center(c)[0] / l).cos())
            .collect()
    }

    #[test]
    fn constant_field_sees_only_mass() {
        let grid = Grid::new(3, 6, 0.5).unwrap();
        let spec = OperatorSpec::new(Geometry::all_fluid(grid), 7.0).unwrap();
        let u = Field::from_values(vec![2.0; grid.cells()], grid.cells());
        let au = spec.apply_operator(&u).unwrap();
        for v in &au.values {
            assert!((v - 2.0 / 7.0 * 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn cosine_is_eigenvector() {
        let grid = Grid::new(2, 12, 0.3).unwrap();
        let t = 5.0;
        let spec = OperatorSpec::new(Geometry::all_fluid(grid), t).unwrap();
        let u = Field::from_values(single_mode(grid), grid.cells());
        let au = spec.apply_operator(&u).unwrap();
        let h = grid.h;
        let s = (std::f64::consts::PI * h / grid.side()).sin();
        let lambda = (1.0 / t + 4.0 / (h * h) * s * s) * h * h;
        for (a, b) in au.values.iter().zip(&u.values) {
            assert!((a - lambda * b).abs() < 1e-13);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let grid = Grid::new(2, 4, 1.0).unwrap();
        let spec = OperatorSpec::new(Geometry::all_fluid(grid), 1.0).unwrap();
        let u = Field::from_values(vec![0.0; 3], 3);
        assert!(matches!(spec.apply_operator(&u), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn rejects_bad_screening() {
        let grid = Grid::new(2, 4, 1.0).unwrap();
        assert!(OperatorSpec::new(Geometry::all_fluid(grid), 0.0).is_err());
        assert!(OperatorSpec::new(Geometry::all_fluid(grid), f64::INFINITY).is_err());
    }
}
