use std::fs;

use serde_json::{json, Value};

use sedlab::config::parse_list;
use sedlab::ensemble::{fit_scaling, green_decay, run_ensemble, sweep_grid, sweep_t, FitKind, Mode, RunConfig};
use sedlab::io::{write_field, write_points_csv, write_profile_csv, write_realizations_csv, write_sweep_csv};
use sedlab::lattice::{rasterize, unit_ball_radius};
use sedlab::linearized::{coulomb_energy, solve_divform_fft, solve_linearized_fft};
use sedlab::oracles::{dense_direct_solve, radial_massive_solve, FluxNormalization, RadialProblem};
use sedlab::parallel::with_threads;
use sedlab::pointgen::min_pairwise_distance;
use sedlab::rng::derive_seed;
use sedlab::solver::{
    assemble_rhs, identity_defects, report, solve_corrector, solve_with_rhs, OperatorSpec,
};
use sedlab::{Error, Grid, Result};

use crate::manifest::Manifest;
use crate::Invocation;

pub enum Task {
    Sample { box_side: f64 },
    Solve { grid: Grid },
    Green { grid: Grid },
    Ensemble { grid: Grid },
    Sweep { t_list: Vec<f64>, fit: FitKind },
    Radial { problem: RadialProblem },
    Dense { grid: Grid },
}

pub struct Plan {
    inv: Invocation,
    task: Task,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn box_side(cfg: &RunConfig) -> Result<f64> {
    let l = match (cfg.l, cfg.n) {
        (Some(l), _) => l,
        (None, Some(n)) => n as f64 * cfg.h,
        (None, None) => return Err(bad("either L or n must be given")),
    };
    if !(l > 0.0 && l.is_finite()) {
        return Err(bad(format!("box side must be positive, got {l}")));
    }
    Ok(l)
}

fn checked_grid(cfg: &RunConfig) -> Result<Grid> {
    let grid = cfg.grid()?;
    cfg.validate_for(&grid)?;
    with_threads(cfg.threads, || cfg.check_memory(&grid))?;
    Ok(grid)
}

/// Validates everything that can be checked without computing.
pub fn prepare(mut inv: Invocation) -> Result<Plan> {
    inv.settings.extra::<bool>("dump_field")?;
    let cfg = &mut inv.settings.run;
    let task = match inv.command.as_str() {
        "sample" => {
            if cfg.d == 0 {
                return Err(bad("d must be at least 1"));
            }
            if !(cfg.lambda >= 0.0) || !(cfg.rho() > 0.0) {
                return Err(bad("sampling needs lambda >= 0 and rho > 0"));
            }
            Task::Sample { box_side: box_side(cfg)? }
        }
        "solve" => {
            cfg.mode = Mode::Nonlinear;
            Task::Solve { grid: checked_grid(cfg)? }
        }
        "green" => {
            cfg.mode = Mode::Green;
            Task::Green { grid: checked_grid(cfg)? }
        }
        "linearized" => {
            if cfg.mode != Mode::Divform {
                cfg.mode = Mode::Linearized;
            }
            Task::Ensemble { grid: checked_grid(cfg)? }
        }
        "ensemble" => Task::Ensemble { grid: checked_grid(cfg)? },
        "sweep" => {
            let raw = inv.settings.extra.get("t_list").ok_or_else(|| bad("sweep needs t_list"))?;
            let t_list = parse_list("t_list", raw)?;
            if t_list.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(bad("t_list must be strictly increasing"));
            }
            for &t in &t_list {
                let c = RunConfig { t, ..cfg.clone() };
                let grid = if t_list.len() == 1 { c.grid()? } else { sweep_grid(&c, t)? };
                c.validate_for(&grid)?;
                with_threads(c.threads, || c.check_memory(&grid))?;
            }
            let fit = match inv.settings.extra.get("fit").map(String::as_str) {
                None => {
                    if cfg.d == 4 {
                        FitKind::Logarithmic
                    } else {
                        FitKind::Power
                    }
                }
                Some("power") => FitKind::Power,
                Some("logarithmic") => FitKind::Logarithmic,
                Some(other) => return Err(bad(format!("fit must be power or logarithmic, got '{other}'"))),
            };
            Task::Sweep { t_list, fit }
        }
        "oracle" => match inv.settings.extra.get("check").map(String::as_str).unwrap_or("radial") {
            "radial" => {
                let s = &inv.settings;
                let c = &s.run;
                let t = c.t;
                let default_out = if t.is_finite() { (8.0 * t.sqrt()).max(16.0) } else { 64.0 };
                let flux = match s.extra.get("flux").map(String::as_str).unwrap_or("total") {
                    "total" => FluxNormalization::Total,
                    "average" => FluxNormalization::Average,
                    other => return Err(bad(format!("flux must be total or average, got '{other}'"))),
                };
                let mut problem = RadialProblem::new(
                    c.d,
                    t,
                    s.extra("r_out")?.unwrap_or(default_out),
                    s.extra("g1")?.unwrap_or(c.gbar),
                    s.extra("g2")?.unwrap_or(0.0),
                    s.extra("nodes")?.unwrap_or(2000),
                );
                problem.flux = flux;
                if c.d < 2 || !(t > 0.0) || !(problem.r_out > 1.0) || problem.nodes < 100 {
                    return Err(bad("radial oracle needs d >= 2, T > 0, r_out > 1 and nodes >= 100"));
                }
                Task::Radial { problem }
            }
            "dense" => {
                cfg.mode = Mode::Nonlinear;
                let grid = checked_grid(cfg)?;
                if grid.cells() > sedlab::oracles::DENSE_DOF_LIMIT {
                    return Err(Error::DofBudget { dofs: grid.cells(), max: sedlab::oracles::DENSE_DOF_LIMIT });
                }
                Task::Dense { grid }
            }
            other => return Err(bad(format!("check must be radial or dense, got '{other}'"))),
        },
        other => return Err(bad(format!("unknown command '{other}'"))),
    };
    Ok(Plan { inv, task })
}

fn csv<F>(f: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn dump(m: &mut Manifest, dim: usize, n: usize, values: &[f64]) -> Result<()> {
    let mut buf = Vec::new();
    write_field(&mut buf, dim, n, values)?;
    m.write("field.bin", &buf)
}

pub fn execute(plan: Plan) -> Result<Value> {
    let Plan { inv, task } = plan;
    fs::create_dir_all(&inv.out)?;
    let settings = inv.settings;
    let cfg = settings.run.clone();
    let dump_field = settings.extra::<bool>("dump_field")?.unwrap_or(false);
    let mut m = Manifest::new(&inv.out, &inv.command, settings.to_pairs());
    let threads = cfg.threads;
    with_threads(threads, move || -> Result<Value> {
        match task {
            Task::Sample { box_side } => {
                let ps = m.time("sample", || cfg.sample(box_side, cfg.master_seed))?;
                m.write("points.csv", &csv(|b| write_points_csv(b, &ps))?)?;
                m.result("point_set", serde_json::to_value(ps.manifest())?);
                m.result("min_distance", json!(min_pairwise_distance(&ps)));
                m.result("intensity", json!(ps.intensity()));
            }
            Task::Solve { grid } => {
                let seed = derive_seed(cfg.master_seed, 0, 0);
                let ps = m.time("sample", || cfg.sample(grid.side(), seed))?;
                let geom = m.time("rasterize", || rasterize(&ps, grid, cfg.raster))?;
                m.result("geometry", serde_json::to_value(geom.summary())?);
                let spec = OperatorSpec::new(geom, cfg.t)?;
                let res = m.time("solve", || solve_corrector(&spec, cfg.gbar, cfg.solve_options(&grid)))?;
                m.result("solve_report", serde_json::to_value(report(&spec, &res))?);
                m.result("identities", serde_json::to_value(identity_defects(&spec, &res, cfg.gbar))?);
                m.result("max_abs_u", json!(res.u.max_abs()));
                m.result("seed", json!(seed));
                if spec.inclusions() == 0 {
                    m.warn("no inclusions: the solution vanishes identically");
                }
                if dump_field {
                    dump(&mut m, grid.dim, grid.n, &res.u.values)?;
                }
            }
            Task::Green { grid } => {
                let seed = derive_seed(cfg.master_seed, 0, 0);
                let ps = m.time("sample", || cfg.sample(grid.side(), seed))?;
                let geom = m.time("rasterize", || rasterize(&ps, grid, cfg.raster))?;
                let decay = m.time("solve", || green_decay(&cfg, &grid, geom))?;
                let mut buf = b"r,mean_abs_g\n".to_vec();
                for (r, g) in decay.radius.iter().zip(&decay.mean_abs) {
                    buf.extend_from_slice(format!("{r},{g}\n").as_bytes());
                }
                m.write("shells.csv", &buf)?;
                m.result("source_cell", json!(decay.source_cell));
                m.result("decay_slope", json!(decay.slope));
                m.result("decay_r2", json!(decay.r2));
                m.result("fit_window", json!([cfg.green_r_min, cfg.green_r_max]));
            }
            Task::Ensemble { grid } => {
                let stats = m.time("ensemble", || run_ensemble(&cfg))?;
                for w in &stats.warnings {
                    m.warn(w.clone());
                }
                let rows = vec![sedlab::ensemble::SweepRow { t: cfg.t, stats }];
                m.write("ensemble.csv", &csv(|b| write_sweep_csv(b, &rows))?)?;
                m.write("realizations.csv", &csv(|b| write_realizations_csv(b, &rows))?)?;
                let mut stats = serde_json::to_value(&rows[0].stats)?;
                if let Some(obj) = stats.as_object_mut() {
                    obj.remove("records");
                }
                m.result("stats", stats);
                if dump_field && matches!(cfg.mode, Mode::Linearized | Mode::Divform) {
                    let seed = derive_seed(cfg.master_seed, 0, 0);
                    let geom = rasterize(&cfg.sample(grid.side(), seed)?, grid, cfg.raster)?;
                    let v = if cfg.mode == Mode::Linearized {
                        solve_linearized_fft(&grid, &geom, cfg.t)?
                    } else {
                        solve_divform_fft(&grid, &geom, cfg.t, cfg.direction)?
                    };
                    m.result("coulomb_energy_realization0", serde_json::to_value(coulomb_energy(&v, cfg.t))?);
                    dump(&mut m, grid.dim, grid.n, &v.values)?;
                }
            }
            Task::Sweep { t_list, fit } => {
                let rows = m.time("sweep", || sweep_t(&cfg, &t_list))?;
                for row in &rows {
                    for w in &row.stats.warnings {
                        m.warn(format!("T = {}: {w}", row.t));
                    }
                }
                m.write("sweep.csv", &csv(|b| write_sweep_csv(b, &rows))?)?;
                m.write("realizations.csv", &csv(|b| write_realizations_csv(b, &rows))?)?;
                let (statistic, points): (&str, Vec<(f64, f64)>) = match cfg.mode {
                    Mode::Divform => ("energy_dirichlet", rows.iter().map(|r| (r.t, r.stats.mean_energy_dirichlet)).collect()),
                    Mode::Green => ("decay_slope", Vec::new()),
                    _ => ("var_ui", rows.iter().map(|r| (r.t, r.stats.var_ui.mean)).collect()),
                };
                if points.len() >= 3 {
                    let f = fit_scaling(&points, fit)?;
                    let mut v = serde_json::to_value(&f)?;
                    v["statistic"] = json!(statistic);
                    if cfg.mode == Mode::Nonlinear {
                        v["label"] = json!("consistency check: only an upper bound is proven for this model");
                    }
                    m.result("fit", v);
                } else {
                    m.warn(format!("no scaling fit: statistic {statistic} with {} points", points.len()));
                }
            }
            Task::Radial { problem } => {
                let profile = m.time("solve", || radial_massive_solve(&problem))?;
                m.write("profile.csv", &csv(|b| write_profile_csv(b, &profile))?)?;
                m.result("problem", serde_json::to_value(problem)?);
                m.result("core_value", json!(profile.core_value()));
                m.result("residual", json!(profile.residual));
            }
            Task::Dense { grid } => {
                let seed = derive_seed(cfg.master_seed, 0, 0);
                let geom = rasterize(&cfg.sample(grid.side(), seed)?, grid, cfg.raster)?;
                let spec = OperatorSpec::new(geom, cfg.t)?;
                let rhs = assemble_rhs(&spec, cfg.gbar)?;
                let cg = m.time("cg", || solve_with_rhs(&spec, &rhs, cfg.solve_options(&grid)))?;
                let dense = m.time("dense", || dense_direct_solve(&spec, &rhs))?;
                let diff: f64 = cg.u.values.iter().zip(&dense.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let norm: f64 = dense.values.iter().map(|b| b * b).sum::<f64>().sqrt();
                m.result("dofs", json!(spec.dofs()));
                m.result("relative_error", json!(if norm > 0.0 { diff / norm } else { diff }));
                m.result("inclusion_radius", json!(unit_ball_radius(grid.dim)?));
            }
        }
        let path = m.finish()?;
        Ok(json!({ "manifest": path.display().to_string() }))
    })
}
