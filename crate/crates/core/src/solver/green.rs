//! Obstacle Green's function: unit point source in the fluid, zero net flux
//! through every inclusion, field constant on each inclusion.

use serde::{Deserialize, Serialize};

use super::{solve_with_rhs, Field, OperatorSpec, SolveOptions};
use crate::error::{Error, Result};
use crate::lattice::{periodic_distance, FLUID};

/// Minimum distance between the source and any inclusion center.
pub const SOURCE_CLEARANCE: f64 = 2.0;

fn clearance(spec: &OperatorSpec, cell: usize) -> f64 {
    let geom = spec.geometry();
    let grid = spec.grid;
    let x = grid.center(cell);
    let l = grid.side();
    if geom.centers.is_empty() && geom.inclusions() > 0 {
        // explicit labelling: measure to inclusion cells, widened by the radius
        return geom
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &lab)| lab != FLUID)
            .map(|(c, _)| periodic_distance(&x, &grid.center(c), l) + geom.radius)
            .fold(f64::INFINITY, f64::min);
    }
    geom.centers
        .chunks_exact(grid.dim)
        .map(|p| periodic_distance(&x, p, l))
        .fold(f64::INFINITY, f64::min)
}

/// Solves `a(G, v) = v(source)` for all `v`, i.e. a discrete source of
/// strength `1/h^d` on the source cell.
pub fn green_function(spec: &OperatorSpec, source_cell: usize, opts: SolveOptions) -> Result<Field> {
    let grid = spec.grid;
    if source_cell >= grid.cells() {
        return Err(Error::Precondition(format!("source cell {source_cell} outside the grid")));
    }
    if spec.geometry().labels[source_cell] != FLUID {
        return Err(Error::Precondition("source cell lies inside an inclusion".into()));
    }
    let gap = clearance(spec, source_cell);
    if gap < SOURCE_CLEARANCE {
        return Err(Error::Precondition(format!(
            "source at distance {gap:.3} from an inclusion center (needs {SOURCE_CLEARANCE})"
        )));
    }
    let mut rhs = spec.zero_field();
    rhs.values[spec.dof_of_cell(source_cell)] = 1.0;
    Ok(solve_with_rhs(spec, &rhs, opts)?.u)
}

/// A fluid cell satisfying the source clearance, searched outward from the
/// box center. `None` if no cell qualifies.
pub fn find_green_source(spec: &OperatorSpec) -> Option<usize> {
    let grid = spec.grid;
    let mid = grid.side() / 2.0;
    let mut order: Vec<(f64, usize)> = (0..grid.cells())
        .filter(|&c| spec.geometry().labels[c] == FLUID)
        .map(|c| {
            let r2: f64 = grid.center(c).iter().map(|x| (x - mid).powi(2)).sum();
            (r2, c)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().map(|(_, c)| c).find(|&c| clearance(spec, c) >= SOURCE_CLEARANCE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellAverage {
    /// Shell mid radii.
    pub radius: Vec<f64>,
    /// Mean of `|G|` over the cells of each shell.
    pub mean_abs: Vec<f64>,
    pub count: Vec<usize>,
}

/// Averages `|field|` over spherical shells of width `width` around the
/// source cell, out to `r_max` (clipped to half the box side).
pub fn shell_average(spec: &OperatorSpec, field: &Field, source_cell: usize, width: f64, r_max: f64) -> ShellAverage {
    let grid = spec.grid;
    let r_max = r_max.min(grid.side() / 2.0);
    let bins = (r_max / width).floor() as usize;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    let mut src = vec![0usize; grid.dim];
    let mut idx = vec![0usize; grid.dim];
    grid.coords(source_cell, &mut src);
    let n = grid.n as i64;
    for c in 0..grid.cells() {
        grid.coords(c, &mut idx);
        let r2: f64 = idx
            .iter()
            .zip(&src)
            .map(|(&a, &b)| {
                let mut k = (a as i64 - b as i64).abs();
                if 2 * k > n {
                    k = n - k;
                }
                (k as f64 * grid.h).powi(2)
            })
            .sum();
        let b = (r2.sqrt() / width) as usize;
        if b < bins {
            sum[b] += field.values[spec.dof_of_cell(c)].abs();
            count[b] += 1;
        }
    }
    let mut out = ShellAverage { radius: Vec::new(), mean_abs: Vec::new(), count: Vec::new() };
    for b in 0..bins {
        if count[b] > 0 {
            out.radius.push((b as f64 + 0.5) * width);
            out.mean_abs.push(sum[b] / count[b] as f64);
            out.count.push(count[b]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{rasterize, Geometry, Grid, RasterPolicy};
    use crate::pointgen::PointSet;

    #[test]
    fn source_inside_or_near_inclusion_rejected() {
        let grid = Grid::new(3, 24, 0.25).unwrap();
        let ps = PointSet::from_points(3, 6.0, 3.0, &[vec![3.0, 3.0, 3.0]]).unwrap();
        let geom = rasterize(&ps, grid, RasterPolicy::Strict).unwrap();
        let spec = OperatorSpec::new(geom, 10.0).unwrap();
        let opts = SolveOptions::for_grid(24);
        let inside = grid.index(&[12, 12, 12]);
        assert!(matches!(green_function(&spec, inside, opts), Err(Error::Precondition(_))));
        let near = grid.index(&[12, 12, 17]);
        assert!(matches!(green_function(&spec, near, opts), Err(Error::Precondition(_))));
        let far = grid.index(&[0, 0, 0]);
        assert!(green_function(&spec, far, opts).is_ok());
        let found = find_green_source(&spec).unwrap();
        assert!(clearance(&spec, found) >= SOURCE_CLEARANCE);
    }

    #[test]
    fn shell_average_of_constant() {
        let grid = Grid::new(2, 16, 1.0).unwrap();
        let spec = OperatorSpec::new(Geometry::all_fluid(grid), 10.0).unwrap();
        let f = Field::from_values(vec![-3.0; grid.cells()], grid.cells());
        let s = shell_average(&spec, &f, 0, 1.0, 8.0);
        assert!(s.mean_abs.iter().all(|&v| v == 3.0));
        assert_eq!(s.count[0], 1);
        assert_eq!(s.radius[0], 0.5);
    }
}
