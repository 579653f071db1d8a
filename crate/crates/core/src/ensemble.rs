//! Monte Carlo driver: realizations, aggregation, T-sweeps and scaling fits.
//!
//! Realization `r` of experiment cell `s` draws its point set from
//! `derive_seed(master_seed, s, r)`; `run_ensemble` is cell 0 and a sweep
//! uses the position of T in its list. Realizations run on the rayon pool,
//! their summaries are collected by index and reduced sequentially, so the
//! statistics do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{rasterize, Geometry, Grid, RasterPolicy};
use crate::linearized::{spectral_statistics, LinearModel};
use crate::pointgen::{sample_hardcore_poisson, sample_random_parking, PointSet, SaturationRule};
use crate::rng::derive_seed;
use crate::solver::{
    effective_field_box, find_green_source, green_function, identity_defects, shell_average, solve_corrector,
    OperatorSpec, SolveOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Nonlinear,
    Linearized,
    Green,
    Divform,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonlinear" => Ok(Mode::Nonlinear),
            "linearized" => Ok(Mode::Linearized),
            "green" => Ok(Mode::Green),
            "divform" => Ok(Mode::Divform),
            other => Err(invalid(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub d: usize,
    /// Cells per axis. When absent, derived from `L` and `h`.
    pub n: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub h: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// Defaults to `√d + 1`.
    pub rho: Option<f64>,
    pub lambda: f64,
    pub parking: bool,
    pub gbar: f64,
    pub realizations: usize,
    pub master_seed: u64,
    pub cg_tol: f64,
    /// Defaults to `50·n`.
    pub cg_maxit: Option<usize>,
    /// Minimum `L/√T` when `scaling_claim` is set.
    pub box_rule: f64,
    pub mode: Mode,
    pub scaling_claim: bool,
    pub jacobi: bool,
    pub raster: RasterPolicy,
    /// Axis of the divergence-form source.
    pub direction: usize,
    /// Worker threads; `None` uses the ambient pool.
    pub threads: Option<usize>,
    pub memory_budget_mb: f64,
    /// Shell fit window for Green runs.
    pub green_r_min: f64,
    pub green_r_max: f64,
    pub shell_width: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 3,
            n: None,
            l: None,
            h: 0.25,
            t: 64.0,
            rho: None,
            lambda: 1.0,
            parking: false,
            gbar: 1.0,
            realizations: 1,
            master_seed: 0,
            cg_tol: 1e-10,
            cg_maxit: None,
            box_rule: 8.0,
            mode: Mode::Nonlinear,
            scaling_claim: false,
            jacobi: false,
            raster: RasterPolicy::Strict,
            direction: 0,
            threads: None,
            memory_budget_mb: 4096.0,
            green_r_min: 4.0,
            green_r_max: 24.0,
            shell_width: 1.0,
        }
    }
}

impl RunConfig {
    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or((self.d as f64).sqrt() + 1.0)
    }

    pub fn grid(&self) -> Result<Grid> {
        match (self.n, self.l) {
            (Some(n), Some(l)) => Grid::new(self.d, n, l / n as f64),
            (Some(n), None) => Grid::new(self.d, n, self.h),
            (None, Some(l)) => Grid::with_side(self.d, l, self.h),
            (None, None) => Err(invalid("either n or L must be given")),
        }
    }

    pub fn solve_options(&self, grid: &Grid) -> SolveOptions {
        SolveOptions {
            tol: self.cg_tol,
            maxit: self.cg_maxit.unwrap_or(50 * grid.n),
            jacobi: self.jacobi,
        }
    }

    /// Config invariants that do not depend on the grid.
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(invalid(format!("d must be at least 2, got {}", self.d)));
        }
        if !(self.t > 0.0) || self.t.is_nan() {
            return Err(invalid(format!("T must be positive, got {}", self.t)));
        }
        if self.mode != Mode::Nonlinear && !self.t.is_finite() {
            return Err(invalid("T must be finite"));
        }
        if self.realizations == 0 {
            return Err(invalid("realizations must be at least 1"));
        }
        if !(self.lambda >= 0.0) {
            return Err(invalid(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if !(self.rho() > 0.0) {
            return Err(invalid("rho must be positive"));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(invalid(format!("cg_tol must lie in (0, 1), got {}", self.cg_tol)));
        }
        if !(self.h > 0.0) {
            return Err(invalid("h must be positive"));
        }
        if !(self.box_rule > 0.0) {
            return Err(invalid("box_rule must be positive"));
        }
        if self.mode == Mode::Divform && self.direction >= self.d {
            return Err(invalid(format!("direction {} out of range for d = {}", self.direction, self.d)));
        }
        if self.mode == Mode::Green && !(self.shell_width > 0.0 && self.green_r_max > self.green_r_min) {
            return Err(invalid("green fit window needs shell_width > 0 and green_r_max > green_r_min"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be at least 1"));
        }
        Ok(())
    }

    /// Full validation for one ensemble on `grid`, including the box rule.
    pub fn validate_for(&self, grid: &Grid) -> Result<()> {
        self.validate()?;
        if self.scaling_claim && self.t.is_finite() {
            let need = self.box_rule * self.t.sqrt();
            if grid.side() < need * (1.0 - 1e-12) {
                return Err(invalid(format!(
                    "scaling claim needs L >= {:.4} (box_rule * sqrt(T)), got L = {}",
                    need,
                    grid.side()
                )));
            }
        }
        Ok(())
    }

    pub fn sample(&self, box_side: f64, seed: u64) -> Result<PointSet> {
        if self.parking {
            let rho = self.rho();
            sample_random_parking(self.d, box_side, rho, seed, SaturationRule::default_for(self.d, box_side, rho))
        } else {
            sample_hardcore_poisson(self.d, box_side, self.rho(), self.lambda, seed)
        }
    }

    /// Rough peak memory of one realization in bytes.
    pub fn realization_bytes(&self, grid: &Grid) -> f64 {
        let cells = grid.cells() as f64;
        let per_cell = match self.mode {
            // labels, dof maps, neighbor table, CG work vectors
            Mode::Nonlinear | Mode::Green => 4.0 * 3.0 + 8.0 * grid.dim as f64 + 8.0 * 7.0,
            // labels and one or two complex buffers
            Mode::Linearized => 4.0 + 16.0,
            Mode::Divform => 4.0 + 32.0,
        };
        cells * per_cell
    }

    /// Resource error when concurrent realizations on `grid` exceed the budget.
    pub fn check_memory(&self, grid: &Grid) -> Result<()> {
        let workers = rayon::current_num_threads().min(self.realizations).max(1) as f64;
        let mb = self.realization_bytes(grid) * workers / (1024.0 * 1024.0);
        if mb > self.memory_budget_mb {
            return Err(Error::Resource(format!(
                "grid n = {} in d = {} needs about {mb:.0} MB with {workers} concurrent realizations, budget {} MB",
                grid.n, grid.dim, self.memory_budget_mb
            )));
        }
        Ok(())
    }
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// `NaN` when fewer than two realizations contribute.
    pub se: f64,
}

impl Estimate {
    /// Mean of independent samples with `sd/√R`.
    pub fn of_samples(xs: &[f64]) -> Self {
        let r = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / r;
        let se = if xs.len() > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
            (var / r).sqrt()
        } else {
            f64::NAN
        };
        Self { mean, se }
    }
}

/// Count, mean and centered sum of squares of one group of samples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        Self { count: xs.len(), mean, m2 }
    }

    /// Chan's pairwise combination.
    pub fn merge(self, o: Self) -> Self {
        if self.count == 0 {
            return o;
        }
        if o.count == 0 {
            return self;
        }
        let n = (self.count + o.count) as f64;
        let delta = o.mean - self.mean;
        Self {
            count: self.count + o.count,
            mean: self.mean + delta * o.count as f64 / n,
            m2: self.m2 + o.m2 + delta * delta * self.count as f64 * o.count as f64 / n,
        }
    }

    /// Population variance of the merged samples.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.m2 / self.count as f64
        }
    }
}

/// Pooled variance over groups with a delete-one-group jackknife error.
pub fn pooled_variance(groups: &[Moments]) -> Estimate {
    let all = groups.iter().fold(Moments::default(), |a, &g| a.merge(g));
    let mean = all.variance();
    let r = groups.len();
    if r < 2 {
        return Estimate { mean, se: f64::NAN };
    }
    let leave_out: Vec<f64> = (0..r)
        .map(|skip| {
            groups
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .fold(Moments::default(), |a, (_, &g)| a.merge(g))
                .variance()
        })
        .collect();
    let bar = leave_out.iter().sum::<f64>() / r as f64;
    let ss: f64 = leave_out.iter().map(|x| (x - bar).powi(2)).sum();
    Estimate { mean, se: ((r as f64 - 1.0) / r as f64 * ss).sqrt() }
}

/// Summary of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: usize,
    pub seed: u64,
    pub points: usize,
    pub inclusions: usize,
    pub theta_h: f64,
    /// Per-box effective field (nonlinear) or inclusion mean of `v`
    /// (linearized); `None` without inclusions.
    pub u_bar: Option<f64>,
    /// Moments of the inclusion values (nonlinear) or of the single box
    /// statistic `⟨v²⟩` (linearized).
    pub moments: Moments,
    /// Box averages.
    pub energy_dirichlet: f64,
    pub energy_massive: f64,
    pub identity_mean0: f64,
    pub identity_energy: f64,
    pub iterations: usize,
    pub decay_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mode: Mode,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub n: usize,
    pub u_bar: Estimate,
    /// Nonlinear: pooled variance of `u_i`. Linearized modes: mean of the
    /// box average of `v²` over realizations.
    pub var_ui: Estimate,
    pub mean_energy_dirichlet: f64,
    pub mean_energy_massive: f64,
    /// Worst relative defect over realizations.
    pub identity_mean0: f64,
    pub identity_energy: f64,
    pub realizations_used: usize,
    pub degenerate: usize,
    pub decay_slope: Option<Estimate>,
    pub warnings: Vec<String>,
    pub records: Vec<RealizationRecord>,
}

/// Least-squares line `y = a + b x` with `r²` (1 for an exact fit).
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

fn realization(cfg: &RunConfig, grid: &Grid, index: usize, seed: u64) -> Result<RealizationRecord> {
    let ps = cfg.sample(grid.side(), seed)?;
    let geom = rasterize(&ps, *grid, cfg.raster)?;
    let mut rec = RealizationRecord {
        index,
        seed,
        points: ps.len(),
        inclusions: geom.inclusions(),
        theta_h: geom.theta_h,
        u_bar: None,
        moments: Moments::default(),
        energy_dirichlet: 0.0,
        energy_massive: 0.0,
        identity_mean0: 0.0,
        identity_energy: 0.0,
        iterations: 0,
        decay_slope: None,
    };
    let has_inclusions = geom.inclusions() > 0 && geom.total_inclusion_volume() > 0.0;
    match cfg.mode {
        Mode::Nonlinear => {
            let spec = OperatorSpec::new(geom, cfg.t)?;
            let res = solve_corrector(&spec, cfg.gbar, cfg.solve_options(grid))?;
            let def = identity_defects(&spec, &res, cfg.gbar);
            let vol = grid.volume();
            rec.energy_dirichlet = res.energy_dirichlet / vol;
            rec.energy_massive = res.energy_massive / vol;
            rec.identity_mean0 = def.fluid_mass_rel;
            rec.identity_energy = def.energy_rel;
            rec.iterations = res.iterations;
            if has_inclusions {
                rec.u_bar = Some(effective_field_box(&res, spec.geometry())?);
                rec.moments = Moments::of(&res.inclusion_values);
            }
        }
        Mode::Linearized | Mode::Divform => {
            let model = if cfg.mode == Mode::Linearized {
                LinearModel::Indicator
            } else {
                LinearModel::Divergence { axis: cfg.direction }
            };
            let s = spectral_statistics(grid, &geom, cfg.t, model)?;
            rec.energy_dirichlet = s.gradient_energy;
            rec.energy_massive = s.massive_energy;
            rec.moments = Moments { count: 1, mean: s.mean_square, m2: 0.0 };
            if has_inclusions {
                rec.u_bar = Some(s.inclusion_mean);
            }
        }
        Mode::Green => {
            rec.decay_slope = Some(green_decay(cfg, grid, geom)?.slope);
        }
    }
    Ok(rec)
}

/// Shell profile of the obstacle Green's function and its log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenDecay {
    pub source_cell: usize,
    pub radius: Vec<f64>,
    pub mean_abs: Vec<f64>,
    pub slope: f64,
    pub r2: f64,
}

pub fn green_decay(cfg: &RunConfig, grid: &Grid, geom: Geometry) -> Result<GreenDecay> {
    let spec = OperatorSpec::new(geom, cfg.t)?;
    let source = find_green_source(&spec)
        .ok_or_else(|| Error::Precondition("no fluid cell satisfies the source clearance".into()))?;
    let g = green_function(&spec, source, cfg.solve_options(grid))?;
    let shells = shell_average(&spec, &g, source, cfg.shell_width, cfg.green_r_max);
    let (x, y): (Vec<f64>, Vec<f64>) = shells
        .radius
        .iter()
        .zip(&shells.mean_abs)
        .filter(|&(&r, &v)| r >= cfg.green_r_min && r <= cfg.green_r_max && v > 0.0)
        .map(|(&r, &v)| (r.ln(), v.ln()))
        .unzip();
    if x.len() < 3 {
        return Err(Error::UndefinedStatistic(format!(
            "only {} shells inside the fit window [{}, {}]",
            x.len(),
            cfg.green_r_min,
            cfg.green_r_max
        )));
    }
    let (slope, _, r2) = least_squares(&x, &y);
    Ok(GreenDecay {
        source_cell: source,
        radius: shells.radius,
        mean_abs: shells.mean_abs,
        slope,
        r2,
    })
}

fn ensemble_on(cfg: &RunConfig, grid: &Grid, stream: u64) -> Result<EnsembleStats> {
    let seeds: Vec<u64> = (0..cfg.realizations).map(|r| derive_seed(cfg.master_seed, stream, r as u64)).collect();
    let outcomes: Vec<Result<RealizationRecord>> = crate::parallel::with_threads(cfg.threads, || {
        seeds.par_iter().enumerate().map(|(r, &seed)| realization(cfg, grid, r, seed)).collect()
    });
    let mut records = Vec::with_capacity(outcomes.len());
    for (out, &seed) in outcomes.into_iter().zip(&seeds) {
        records.push(out.map_err(|e| Error::Realization { seed, source: Box::new(e) })?);
    }
    aggregate(cfg, grid, records)
}

fn aggregate(cfg: &RunConfig, grid: &Grid, records: Vec<RealizationRecord>) -> Result<EnsembleStats> {
    let used: Vec<&RealizationRecord> = records.iter().filter(|r| r.u_bar.is_some()).collect();
    let degenerate = records.len() - used.len();
    let mut warnings = Vec::new();
    if degenerate > 0 && cfg.mode != Mode::Green {
        warnings.push(format!("{degenerate} of {} realizations had no inclusions and were excluded", records.len()));
    }
    let r = records.len() as f64;
    let mean_energy_dirichlet = records.iter().map(|x| x.energy_dirichlet).sum::<f64>() / r;
    let mean_energy_massive = records.iter().map(|x| x.energy_massive).sum::<f64>() / r;
    let identity_mean0 = records.iter().map(|x| x.identity_mean0).fold(0.0, f64::max);
    let identity_energy = records.iter().map(|x| x.identity_energy).fold(0.0, f64::max);
    let nan = Estimate { mean: f64::NAN, se: f64::NAN };

    let (u_bar, var_ui, decay_slope) = match cfg.mode {
        Mode::Green => {
            let slopes: Vec<f64> = records.iter().filter_map(|x| x.decay_slope).collect();
            (nan, nan, Some(Estimate::of_samples(&slopes)))
        }
        _ => {
            if used.is_empty() {
                return Err(Error::UndefinedStatistic(format!(
                    "all {} realizations are free of inclusions",
                    records.len()
                )));
            }
            let ubars: Vec<f64> = used.iter().filter_map(|x| x.u_bar).collect();
            let var = match cfg.mode {
                Mode::Nonlinear => {
                    let groups: Vec<Moments> = used.iter().map(|x| x.moments).collect();
                    pooled_variance(&groups)
                }
                _ => {
                    let box_sq: Vec<f64> = used.iter().map(|x| x.moments.mean).collect();
                    Estimate::of_samples(&box_sq)
                }
            };
            (Estimate::of_samples(&ubars), var, None)
        }
    };
    if cfg.mode == Mode::Nonlinear && cfg.gbar * u_bar.mean > 0.0 {
        warnings.push(format!("gbar * u_bar = {} is positive", cfg.gbar * u_bar.mean));
    }
    Ok(EnsembleStats {
        mode: cfg.mode,
        t: cfg.t,
        l: grid.side(),
        n: grid.n,
        u_bar,
        var_ui,
        mean_energy_dirichlet,
        mean_energy_massive,
        identity_mean0,
        identity_energy,
        realizations_used: if cfg.mode == Mode::Green { records.len() } else { used.len() },
        degenerate,
        decay_slope,
        warnings,
        records,
    })
}

pub fn run_ensemble(cfg: &RunConfig) -> Result<EnsembleStats> {
    let grid = cfg.grid()?;
    cfg.validate_for(&grid)?;
    crate::parallel::with_threads(cfg.threads, || cfg.check_memory(&grid))?;
    ensemble_on(cfg, &grid, 0)
}

/// One row of a T-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub stats: EnsembleStats,
}

/// Grid used for `t` in a sweep: the base grid, enlarged at fixed `h` until
/// `L ≥ box_rule·√T`.
pub fn sweep_grid(cfg: &RunConfig, t: f64) -> Result<Grid> {
    let base = cfg.grid()?;
    let need = (cfg.box_rule * t.sqrt() / base.h * (1.0 - 1e-12)).ceil() as usize;
    Grid::new(cfg.d, base.n.max(need), base.h)
}

pub fn sweep_t(cfg: &RunConfig, t_list: &[f64]) -> Result<Vec<SweepRow>> {
    if t_list.is_empty() {
        return Err(invalid("T list is empty"));
    }
    if t_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("T list must be strictly increasing"));
    }
    let mut plan = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let c = RunConfig { t, ..cfg.clone() };
        let grid = if t_list.len() == 1 { c.grid()? } else { sweep_grid(&c, t)? };
        c.validate_for(&grid)?;
        crate::parallel::with_threads(cfg.threads, || c.check_memory(&grid))?;
        plan.push((c, grid));
    }
    plan.into_iter()
        .enumerate()
        .map(|(i, (c, grid))| Ok(SweepRow { t: c.t, stats: ensemble_on(&c, &grid, i as u64)? }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    Power,
    Logarithmic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub inputs: Vec<(f64, f64)>,
    pub requested: FitKind,
    /// Slope of `log y` against `log T`.
    pub exponent: f64,
    pub power_r2: f64,
    /// Fit of `y` against `log T`.
    pub log_slope: f64,
    pub log_intercept: f64,
    pub log_fit_r2: f64,
    /// `Logarithmic` when `exponent ≤ 0.15` and `log_fit_r2 ≥ 0.9`.
    pub which: FitKind,
}

pub const LOG_EXPONENT_MAX: f64 = 0.15;
pub const LOG_R2_MIN: f64 = 0.9;

pub fn fit_scaling(points: &[(f64, f64)], kind: FitKind) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(invalid(format!("scaling fit needs at least 3 points, got {}", points.len())));
    }
    if let Some(&(t, y)) = points.iter().find(|&&(t, y)| !(t > 0.0 && y > 0.0 && t.is_finite() && y.is_finite())) {
        return Err(invalid(format!("scaling fit needs positive finite data, got ({t}, {y})")));
    }
    let log_t: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let log_y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (exponent, _, power_r2) = least_squares(&log_t, &log_y);
    let (log_slope, log_intercept, log_fit_r2) = least_squares(&log_t, &y);
    if !exponent.is_finite() {
        return Err(invalid("scaling fit needs at least two distinct T values"));
    }
    let which = if exponent <= LOG_EXPONENT_MAX && log_fit_r2 >= LOG_R2_MIN {
        FitKind::Logarithmic
    } else {
        FitKind::Power
    };
    Ok(ScalingFit {
        inputs: points.to_vec(),
        requested: kind,
        exponent,
        power_r2,
        log_slope,
        log_intercept,
        log_fit_r2,
        which,
    })
}
