//! Periodic lattice bookkeeping and rasterization of unit-volume inclusions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pointgen::PointSet;

/// Cell label for the fluid region.
pub const FLUID: u32 = u32::MAX;

/// Periodic cubic lattice with `n` cells of width `h` per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, h: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("grid dimension must be at least 1"));
        }
        if n < 2 {
            return Err(invalid(format!("grid needs at least 2 cells per side, got {n}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("grid spacing must be positive, got {h}")));
        }
        match n.checked_pow(dim as u32) {
            Some(c) if c < FLUID as usize => Ok(Self { dim, n, h }),
            _ => Err(Error::Resource(format!("{n}^{dim} cells exceed the addressable range"))),
        }
    }

    /// Grid of spacing `h` whose side is exactly `box_side`.
    pub fn with_side(dim: usize, box_side: f64, h: f64) -> Result<Self> {
        let n = (box_side / h).round();
        if (n * h - box_side).abs() > 1e-9 * box_side {
            return Err(invalid(format!("box side {box_side} is not a multiple of h = {h}")));
        }
        Self::new(dim, n as usize, h)
    }

    pub fn side(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Row-major index; the first axis varies slowest.
    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn coords(&self, mut c: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = c % self.n;
            c /= self.n;
        }
    }

    pub fn center(&self, c: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim];
        self.coords(c, &mut idx);
        idx.iter().map(|&i| (i as f64 + 0.5) * self.h).collect()
    }

    /// Stride of `axis` in the row-major layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Neighbour of cell `c` one step along `axis` in direction `forward`,
    /// with periodic wrap.
    #[inline]
    pub fn neighbor(&self, c: usize, axis: usize, forward: bool) -> usize {
        let s = self.stride(axis);
        let i = (c / s) % self.n;
        if forward {
            if i + 1 == self.n {
                c + s - self.n * s
            } else {
                c + s
            }
        } else if i == 0 {
            c + (self.n - 1) * s
        } else {
            c - s
        }
    }
}

/// Volume of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half_integer_plus_one(d)
}

/// `Γ(d/2 + 1)` by the recursion from `Γ(1)` or `Γ(1/2)`.
fn gamma_half_integer_plus_one(d: usize) -> f64 {
    let (mut x, mut g) = if d % 2 == 0 { (1.0, 1.0) } else { (0.5, std::f64::consts::PI.sqrt()) };
    let target = d as f64 / 2.0 + 1.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Radius of the ball of unit volume, `(Γ(d/2+1)/π^{d/2})^{1/d}`.
pub fn unit_ball_radius(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(invalid("dimension must be at least 1"));
    }
    Ok(unit_ball_volume(d).powf(-1.0 / d as f64))
}

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// Squared Euclidean distance under the coordinate-wise minimal image.
#[inline]
pub fn periodic_distance2(x: &[f64], y: &[f64], l: f64) -> f64 {
    let half = 0.5 * l;
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let mut d = (a - b).abs();
            if d > half {
                d = l - d;
            }
            d * d
        })
        .sum()
}

pub fn periodic_distance(x: &[f64], y: &[f64], l: f64) -> f64 {
    periodic_distance2(x, y, l).sqrt()
}

/// How strictly [`rasterize`] enforces its resolution preconditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RasterPolicy {
    /// `ρ ≥ √d + 1`, `h ≤ r_d / 2`, every inclusion nonempty and no two
    /// inclusions face-adjacent.
    #[default]
    Strict,
    /// Only overlap is an error. Used for coarse grids where inclusions are
    /// indicator sources and may cover zero or few cells.
    Relaxed,
}

/// Lattice rasterization of the inclusions of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub grid: Grid,
    /// Per cell: [`FLUID`] or the inclusion index.
    pub labels: Vec<u32>,
    pub inclusion_cells: Vec<usize>,
    pub inclusion_volume: Vec<f64>,
    pub theta_h: f64,
    pub radius: f64,
    /// Inclusion centers, `dim` coordinates each.
    pub centers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub d: usize,
    pub n: usize,
    pub h: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub inclusions: usize,
    pub theta_h: f64,
}

impl Geometry {
    pub fn all_fluid(grid: Grid) -> Self {
        Self {
            grid,
            labels: vec![FLUID; grid.cells()],
            inclusion_cells: Vec::new(),
            inclusion_volume: Vec::new(),
            theta_h: 0.0,
            radius: unit_ball_radius(grid.dim).unwrap_or(0.5),
            centers: Vec::new(),
        }
    }

    /// Geometry from an explicit labelling. Inclusion indices must be dense
    /// in `0..count`. Centers are left empty.
    pub fn from_labels(grid: Grid, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != grid.cells() {
            return Err(Error::ShapeMismatch { expected: grid.cells(), got: labels.len() });
        }
        let count = labels.iter().filter(|&&l| l != FLUID).map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut cells = vec![0usize; count];
        for &l in labels.iter().filter(|&&l| l != FLUID) {
            cells[l as usize] += 1;
        }
        if let Some(i) = cells.iter().position(|&c| c == 0) {
            return Err(Error::Geometry(format!("inclusion {i} has no cells")));
        }
        let mut g = Self::all_fluid(grid);
        g.labels = labels;
        g.finish_volumes(cells);
        Ok(g)
    }

    fn finish_volumes(&mut self, cells: Vec<usize>) {
        let cv = self.grid.cell_volume();
        self.inclusion_volume = cells.iter().map(|&c| c as f64 * cv).collect();
        let total: usize = cells.iter().sum();
        self.theta_h = total as f64 * cv / self.grid.volume();
        self.inclusion_cells = cells;
    }

    pub fn inclusions(&self) -> usize {
        self.inclusion_cells.len()
    }

    pub fn fluid_cells(&self) -> usize {
        self.grid.cells() - self.inclusion_cells.iter().sum::<usize>()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        let d = self.grid.dim;
        &self.centers[i * d..(i + 1) * d]
    }

    pub fn total_inclusion_volume(&self) -> f64 {
        self.inclusion_volume.iter().sum()
    }

    pub fn summary(&self) -> GeometrySummary {
        GeometrySummary {
            d: self.grid.dim,
            n: self.grid.n,
            h: self.grid.h,
            l: self.grid.side(),
            inclusions: self.inclusions(),
            theta_h: self.theta_h,
        }
    }

    /// Pairs of face-adjacent cells carrying different inclusion labels.
    pub fn touching_pairs(&self) -> usize {
        let g = &self.grid;
        let mut count = 0;
        for c in 0..g.cells() {
            let a = self.labels[c];
            if a == FLUID {
                continue;
            }
            for axis in 0..g.dim {
                let b = self.labels[g.neighbor(c, axis, true)];
                if b != FLUID && b != a {
                    count += 1;
                }
            }
        }
        count
    }

    /// Whether every inclusion's cells form one face-connected set.
    pub fn inclusions_connected(&self) -> bool {
        let g = &self.grid;
        let mut seen = vec![false; g.cells()];
        let mut components = vec![0usize; self.inclusions()];
        let mut stack = Vec::new();
        for c in 0..g.cells() {
            let lab = self.labels[c];
            if lab == FLUID || seen[c] {
                continue;
            }
            components[lab as usize] += 1;
            seen[c] = true;
            stack.push(c);
            while let Some(x) = stack.pop() {
                for axis in 0..g.dim {
                    for fwd in [false, true] {
                        let y = g.neighbor(x, axis, fwd);
                        if !seen[y] && self.labels[y] == lab {
                            seen[y] = true;
                            stack.push(y);
                        }
                    }
                }
            }
        }
        components.iter().all(|&k| k == 1)
    }
}

/// Labels every cell whose center lies within periodic distance `r_d` of a
/// point as belonging to that point's inclusion.
pub fn rasterize(ps: &PointSet, grid: Grid, policy: RasterPolicy) -> Result<Geometry> {
    if ps.dim != grid.dim {
        return Err(Error::ShapeMismatch { expected: grid.dim, got: ps.dim });
    }
    if (ps.box_side - grid.side()).abs() > 1e-9 * grid.side() {
        return Err(invalid(format!(
            "point set box {} does not match grid side {}",
            ps.box_side,
            grid.side()
        )));
    }
    let d = grid.dim;
    let r = unit_ball_radius(d)?;
    if policy == RasterPolicy::Strict {
        let rho_min = (d as f64).sqrt() + 1.0;
        if ps.rho < rho_min - 1e-12 {
            return Err(Error::Precondition(format!("rho = {} below sqrt(d)+1 = {rho_min:.4}", ps.rho)));
        }
        if grid.h > r / 2.0 + 1e-12 {
            return Err(Error::Precondition(format!(
                "h = {} exceeds r_d/2 = {:.4}; use the relaxed policy for coarse grids",
                grid.h,
                r / 2.0
            )));
        }
    }
    if 2.0 * r >= grid.side() {
        return Err(Error::Geometry("box too small for a single inclusion".into()));
    }

    let n = grid.n as i64;
    let h = grid.h;
    let r2 = r * r;
    let mut labels = vec![FLUID; grid.cells()];
    let mut cells = vec![0usize; ps.len()];
    let mut lo = vec![0i64; d];
    let mut span = vec![0i64; d];
    let mut idx = vec![0i64; d];
    for (i, x) in ps.points().enumerate() {
        for k in 0..d {
            lo[k] = ((x[k] - r) / h - 0.5).floor() as i64;
            span[k] = ((x[k] + r) / h - 0.5).ceil() as i64 - lo[k] + 1;
        }
        let total: i64 = span.iter().product();
        for flat in 0..total {
            let mut rem = flat;
            let mut dist2 = 0.0;
            for k in (0..d).rev() {
                idx[k] = lo[k] + rem % span[k];
                rem /= span[k];
                let dx = (idx[k] as f64 + 0.5) * h - x[k];
                dist2 += dx * dx;
            }
            if dist2 > r2 {
                continue;
            }
            let c = idx.iter().fold(0usize, |acc, &j| acc * grid.n + j.rem_euclid(n) as usize);
            match labels[c] {
                FLUID => {
                    labels[c] = i as u32;
                    cells[i] += 1;
                }
                other if other as usize != i => {
                    return Err(Error::Geometry(format!("inclusions {other} and {i} overlap")));
                }
                _ => {}
            }
        }
    }

    let mut geom = Geometry {
        grid,
        labels,
        inclusion_cells: Vec::new(),
        inclusion_volume: Vec::new(),
        theta_h: 0.0,
        radius: r,
        centers: ps.points().flatten().copied().collect(),
    };
    if policy == RasterPolicy::Strict {
        if let Some(i) = cells.iter().position(|&c| c == 0) {
            return Err(Error::Geometry(format!("inclusion {i} covers no cell center")));
        }
    }
    geom.finish_volumes(cells);
    if policy == RasterPolicy::Strict && geom.touching_pairs() > 0 {
        return Err(Error::Geometry("rasterized inclusions touch".into()));
    }
    Ok(geom)
}
