use proptest::prelude::*;

use sedlab::lattice::{rasterize, Geometry, Grid, RasterPolicy, FLUID};
use sedlab::oracles::{assemble_dense, dense_direct_solve};
use sedlab::pointgen::{sample_hardcore_poisson, PointSet};
use sedlab::solver::{
    assemble_rhs, effective_field_box, effective_field_from_energy, green_function, identity_defects,
    solve_corrector, solve_with_rhs, Field, OperatorSpec, SolveOptions,
};

fn tight(maxit: usize) -> SolveOptions {
    SolveOptions { tol: 1e-12, maxit, jacobi: false }
}

fn random_labels(grid: Grid, seed: u64) -> Geometry {
    // blocks of cells on a coarse sub-lattice, separated by fluid
    let mut labels = vec![FLUID; grid.cells()];
    let mut s = seed;
    let mut next = 0u32;
    let mut idx = vec![0usize; grid.dim];
    for c in 0..grid.cells() {
        grid.coords(c, &mut idx);
        if idx.iter().all(|&i| i % 4 == 1) {
            s = sedlab::rng::mix64(s);
            if s % 3 != 0 {
                labels[c] = next;
                let east = grid.neighbor(c, 0, true);
                if s % 2 == 0 {
                    labels[east] = next;
                }
                next += 1;
            }
        }
    }
    Geometry::from_labels(grid, labels).unwrap()
}

#[test]
fn cg_matches_dense_direct_solve() {
    for seed in 0..4 {
        let grid = Grid::new(2, 12, 0.5).unwrap();
        let spec = OperatorSpec::new(random_labels(grid, seed), 5.0).unwrap();
        let rhs = assemble_rhs(&spec, 1.0).unwrap();
        let cg = solve_with_rhs(&spec, &rhs, tight(5000)).unwrap();
        let dense = dense_direct_solve(&spec, &rhs).unwrap();
        let err: f64 = cg.u.values.iter().zip(&dense.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = dense.values.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(err <= 1e-9 * norm, "seed {seed}: {err} vs {norm}");
    }
}

#[test]
fn dense_matrix_is_symmetric_positive_definite() {
    let grid = Grid::new(3, 6, 0.5).unwrap();
    let spec = OperatorSpec::new(random_labels(grid, 3), 2.0).unwrap();
    let a = assemble_dense(&spec).unwrap();
    assert!((&a - a.transpose()).amax() <= 1e-14 * a.amax());
    let eig = a.symmetric_eigenvalues();
    assert!(eig.min() > 0.0, "smallest eigenvalue {}", eig.min());
}

#[test]
fn green_function_is_symmetric() {
    let grid = Grid::new(3, 24, 0.25).unwrap();
    let ps = PointSet::from_points(3, 6.0, 3.0, &[vec![3.0, 3.0, 3.0]]).unwrap();
    let geom = rasterize(&ps, grid, RasterPolicy::Strict).unwrap();
    let spec = OperatorSpec::new(geom, 10.0).unwrap();
    let a = grid.index(&[0, 0, 0]);
    let b = grid.index(&[0, 12, 23]);
    let ga = green_function(&spec, a, tight(5000)).unwrap();
    let gb = green_function(&spec, b, tight(5000)).unwrap();
    let (x, y) = (ga.values[spec.dof_of_cell(b)], gb.values[spec.dof_of_cell(a)]);
    assert!((x - y).abs() <= 1e-9 * x.abs(), "{x} {y}");
    assert!(x > 0.0);
}

#[test]
fn solution_is_linear_in_buoyancy() {
    let grid = Grid::new(3, 32, 0.25).unwrap();
    let ps = sample_hardcore_poisson(3, grid.side(), 3.0, 1.0, 8).unwrap();
    let spec = OperatorSpec::new(rasterize(&ps, grid, RasterPolicy::Strict).unwrap(), 30.0).unwrap();
    let one = solve_corrector(&spec, 1.0, tight(5000)).unwrap();
    let two = solve_corrector(&spec, -2.5, tight(5000)).unwrap();
    for (a, b) in one.u.values.iter().zip(&two.u.values) {
        assert!((b + 2.5 * a).abs() <= 1e-9 * one.u.max_abs());
    }
}

/// Frozen values for one small realization: effective field through both
/// routes and the energy split.
#[test]
fn effective_field_routes_agree_and_sign() {
    let grid = Grid::new(3, 48, 0.25).unwrap();
    let ps = sample_hardcore_poisson(3, grid.side(), 3.0, 1.0, 21).unwrap();
    let spec = OperatorSpec::new(rasterize(&ps, grid, RasterPolicy::Strict).unwrap(), 64.0).unwrap();
    let res = solve_corrector(&spec, 1.0, SolveOptions { tol: 1e-11, maxit: 5000, jacobi: true }).unwrap();
    let a = effective_field_box(&res, spec.geometry()).unwrap();
    let b = effective_field_from_energy(&res, spec.geometry(), 1.0).unwrap();
    assert!(a < 0.0);
    assert!((a - b).abs() <= 1e-8 * a.abs());
    let def = identity_defects(&spec, &res, 1.0);
    assert!(def.fluid_mass_rel < 1e-9 && def.energy_rel < 1e-9, "{def:?}");
    assert!(res.energy_dirichlet > 10.0 * res.energy_massive);
}

fn small_spec(seed: u64, t: f64) -> OperatorSpec {
    let grid = Grid::new(2, 10, 0.5).unwrap();
    OperatorSpec::new(random_labels(grid, seed), t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_is_symmetric(seed in any::<u64>(), t in 0.5f64..1e4,
                             v in prop::collection::vec(-1.0f64..1.0, 100), w in prop::collection::vec(-1.0f64..1.0, 100)) {
        let spec = small_spec(seed, t);
        let n = spec.dofs();
        let fv = Field::from_values(v[..n].to_vec(), spec.fluid_dofs());
        let fw = Field::from_values(w[..n].to_vec(), spec.fluid_dofs());
        let av = spec.apply_operator(&fv).unwrap();
        let aw = spec.apply_operator(&fw).unwrap();
        let lhs: f64 = av.values.iter().zip(&fw.values).map(|(a, b)| a * b).sum();
        let rhs: f64 = fv.values.iter().zip(&aw.values).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn operator_is_positive(seed in any::<u64>(), t in 0.5f64..1e4, v in prop::collection::vec(-1.0f64..1.0, 100)) {
        let spec = small_spec(seed, t);
        let n = spec.dofs();
        let fv = Field::from_values(v[..n].to_vec(), spec.fluid_dofs());
        let e = spec.bilinear(&fv, &fv).unwrap();
        let (m, d) = spec.energies(&fv).unwrap();
        prop_assert!(e > 0.0 || fv.max_abs() == 0.0);
        prop_assert!((m + d - e).abs() <= 1e-12 * e.max(1e-300));
    }

    #[test]
    fn rhs_is_neutral_for_any_geometry(seed in any::<u64>(), gbar in -3.0f64..3.0) {
        let spec = small_spec(seed, 10.0);
        let rhs = assemble_rhs(&spec, gbar).unwrap();
        let s: f64 = rhs.values.iter().sum();
        let l1: f64 = rhs.values.iter().map(|x| x.abs()).sum();
        prop_assert!(s.abs() <= 1e-13 * l1.max(1e-300));
    }
}
