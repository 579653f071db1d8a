use sedlab::lattice::{rasterize, Geometry, Grid, RasterPolicy, FLUID};
use sedlab::linearized::{
    coulomb_energy, model_source, screened_periodic_solve, solve_divform_fft, solve_linearized_fft, LinearModel,
};
use sedlab::oracles::whole_space_green;
use sedlab::pointgen::sample_hardcore_poisson;
use sedlab::solver::{solve_with_rhs, OperatorSpec, SolveOptions};

fn geometry(d: usize, n: usize, h: f64, seed: u64) -> (Grid, Geometry) {
    let grid = Grid::new(d, n, h).unwrap();
    let ps = sample_hardcore_poisson(d, grid.side(), (d as f64).sqrt() + 1.0, 1.0, seed).unwrap();
    (grid, rasterize(&ps, grid, RasterPolicy::Relaxed).unwrap())
}

/// The spectral solve against CG on the same stencil with no inclusions.
fn cg_reference(grid: &Grid, t: f64, source: &[f64]) -> Vec<f64> {
    let spec = OperatorSpec::new(Geometry::all_fluid(*grid), t).unwrap();
    let mut rhs = spec.zero_field();
    let cv = grid.cell_volume();
    for (c, s) in source.iter().enumerate() {
        rhs.values[spec.dof_of_cell(c)] = s * cv;
    }
    let res = solve_with_rhs(&spec, &rhs, SolveOptions { tol: 1e-13, maxit: 20_000, jacobi: false }).unwrap();
    spec.to_cells(&res.u)
}

#[test]
fn fft_matches_cg_for_both_models() {
    let (grid, geom) = geometry(3, 20, 0.5, 6);
    let t = 37.0;
    for model in [LinearModel::Indicator, LinearModel::Divergence { axis: 1 }] {
        let src: Vec<f64> = model_source(&grid, &geom, model).unwrap().iter().map(|z| z.re).collect();
        let fft = match model {
            LinearModel::Indicator => solve_linearized_fft(&grid, &geom, t).unwrap(),
            LinearModel::Divergence { axis } => solve_divform_fft(&grid, &geom, t, axis).unwrap(),
        };
        let cg = cg_reference(&grid, t, &src);
        let scale = cg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = fft.values.iter().zip(&cg).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-9 * scale, "{model:?}: {err} vs {scale}");
    }
}

#[test]
fn indicator_source_is_mean_zero() {
    let (grid, geom) = geometry(2, 32, 0.5, 1);
    let src = model_source(&grid, &geom, LinearModel::Indicator).unwrap();
    let s: f64 = src.iter().map(|z| z.re).sum();
    assert!(s.abs() < 1e-10, "{s}");
    let v = solve_linearized_fft(&grid, &geom, 100.0).unwrap();
    assert!(v.mean().abs() < 1e-12);
}

/// Testing against the source: `(1/T)⟨v²⟩ + ⟨|∇⁺v|²⟩ = ⟨v s⟩`.
#[test]
fn energy_balance() {
    let (grid, geom) = geometry(3, 16, 1.0, 3);
    let t = 12.0;
    let v = solve_linearized_fft(&grid, &geom, t).unwrap();
    let e = coulomb_energy(&v, t);
    let src = model_source(&grid, &geom, LinearModel::Indicator).unwrap();
    let work = v.values.iter().zip(&src).map(|(a, b)| a * b.re).sum::<f64>() / grid.cells() as f64;
    assert!((e.massive + e.dirichlet - work).abs() <= 1e-10 * work);
}

/// Periodic lattice Green's function far from the lattice scale and well
/// inside the screening length approaches `e^{−r/√T}/(4πr)`.
#[test]
fn lattice_green_approaches_whole_space_kernel() {
    let n = 64;
    let h = 0.5;
    let t = 4.0;
    let grid = Grid::new(3, n, h).unwrap();
    let mut src = vec![0.0; grid.cells()];
    src[0] = 1.0 / grid.cell_volume();
    let g = screened_periodic_solve(&grid, t, &src).unwrap();
    for k in [6usize, 8, 10] {
        let r = k as f64 * h;
        let lattice = g.values[grid.index(&[k, 0, 0])];
        let exact = whole_space_green(3, t, r).unwrap();
        assert!((lattice - exact).abs() <= 0.03 * exact, "r = {r}: {lattice} vs {exact}");
    }
}

#[test]
fn divergence_source_sums_to_zero_per_line() {
    let (grid, geom) = geometry(2, 24, 0.5, 4);
    let src = model_source(&grid, &geom, LinearModel::Divergence { axis: 0 }).unwrap();
    let stride = grid.stride(0);
    for j in 0..grid.n {
        let s: f64 = (0..grid.n).map(|i| src[i * stride + j].re).sum();
        assert!(s.abs() < 1e-12);
    }
    let inside = geom.labels.iter().filter(|&&l| l != FLUID).count();
    assert!(inside > 0);
}
