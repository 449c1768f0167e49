//! Parameter sweeps: tonic-spiking maps over `(kappa, epsilon)` with the
//! escape threshold per amplitude panel, and initial-condition grids compared
//! against the singular-limit predictions.
//!
//! Every cell is an independent simulation. Cells run on the rayon pool and
//! are collected by index, so results do not depend on scheduling.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frozen;
use crate::integrator::IntegratorConfig;
use crate::model::{Drive, Params, State};
use crate::sim::{simulate_spikes, SpikeLevels};
use crate::singular;

/// Placeholder `epsilon` for parameter sets used only by the frozen and
/// singular analyses, which do not depend on it.
const ANALYSIS_EPSILON: f64 = 0.1;

/// Tolerance on `c` for the threshold reported with each panel.
const THRESHOLD_TOL: f64 = 1e-10;

/// Inclusive arithmetic range `min, min + step, ..` up to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Range {
    pub fn new(min: f64, max: f64, step: f64) -> Self {
        Range { min, max, step }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(Error::invalid(key, "range bounds and step must be finite"));
        }
        if self.step <= 0.0 {
            return Err(Error::invalid(key, format!("step must be positive, got {}", self.step)));
        }
        if self.max < self.min {
            return Err(Error::invalid(key, format!("empty range [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }

    /// Grid values, computed as `min + i step` to avoid drift.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IcPolicy {
    /// `(0, w_e(1))`, which always fires once.
    AtZeroWe1,
    Explicit { v: f64, w: f64 },
}

impl IcPolicy {
    pub fn state(&self, p: &Params) -> Result<State> {
        match *self {
            IcPolicy::AtZeroWe1 => Ok(State::new(0.0, frozen::equilibrium(p, 1.0)?.w_e)),
            IcPolicy::Explicit { v, w } => Ok(State::new(v, w)),
        }
    }
}

/// Settings for the `(kappa, epsilon)` sweep, with `eta = kappa epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub amplitude_list: Vec<(f64, f64)>,
    pub kappa_range: Range,
    pub epsilon_range: Range,
    pub t_final: f64,
    pub ic_policy: IcPolicy,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

impl SweepSpec {
    /// Eight panels `A = B in {0.15, .., 0.5}`, `kappa in [0.2, 12]` step 0.2,
    /// `epsilon in [0.005, 0.205]` step 0.005, `T = 2000`.
    pub fn paper() -> Self {
        SweepSpec {
            amplitude_list: (0..8).map(|i| 0.15 + 0.05 * i as f64).map(|a| (a, a)).collect(),
            kappa_range: Range::new(0.2, 12.0, 0.2),
            epsilon_range: Range::new(0.005, 0.205, 0.005),
            t_final: 2000.0,
            ic_policy: IcPolicy::AtZeroWe1,
            beta: 0.8,
            gamma: 0.5,
            integrator: IntegratorConfig::default(),
        }
    }

    /// [`SweepSpec::paper`] with both steps multiplied by 4 and `T` halved.
    pub fn desk() -> Self {
        SweepSpec {
            kappa_range: Range::new(0.2, 12.0, 0.8),
            epsilon_range: Range::new(0.005, 0.205, 0.02),
            t_final: 1000.0,
            ..SweepSpec::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitude_list.is_empty() {
            return Err(Error::invalid("amplitude_list", "must not be empty"));
        }
        self.kappa_range.validate("kappa_range")?;
        self.epsilon_range.validate("epsilon_range")?;
        if self.kappa_range.min <= 0.0 {
            return Err(Error::invalid("kappa_range", "values must be positive"));
        }
        if self.epsilon_range.min <= 0.0 {
            return Err(Error::invalid("epsilon_range", "values must be positive"));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::invalid("t_final", "must be a positive finite time"));
        }
        self.integrator.validate()?;
        for &(a, b) in &self.amplitude_list {
            Params::new(a, b, self.beta, self.gamma, ANALYSIS_EPSILON)?;
        }
        Ok(())
    }
}

/// Outcome of one simulation cell. `spike_count` is `None` when the
/// integration failed; `error` then holds the message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub spike_count: Option<usize>,
    pub tonic: bool,
    pub error: Option<String>,
}

impl Cell {
    fn from_result(r: Result<usize>) -> Self {
        match r {
            Ok(n) => Cell {
                spike_count: Some(n),
                tonic: n >= 2,
                error: None,
            },
            Err(e) => Cell {
                spike_count: None,
                tonic: false,
                error: Some(e.to_string()),
            },
        }
    }
}

fn spike_count(p: &Params, drive: &Drive, ic: State, t_final: f64, cfg: &IntegratorConfig) -> Result<usize> {
    simulate_spikes(p, drive, ic, t_final, cfg, SpikeLevels::default_for(p)).map(|r| r.count)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub gamma: f64,
    pub in_e_0: bool,
    /// Escape threshold; absent when `(A, B)` is outside `E_0`.
    pub kappa_star: Option<f64>,
    pub kappas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// `grid[i][j]` is the cell at `kappas[i]`, `epsilons[j]`.
    pub grid: Vec<Vec<Cell>>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

impl SweepResult {
    pub fn tonic_cells(&self) -> usize {
        self.grid.iter().flatten().filter(|c| c.tonic).count()
    }

    pub fn failed_cells(&self) -> usize {
        self.grid.iter().flatten().filter(|c| c.spike_count.is_none()).count()
    }

    /// Tonic/non-tonic boundary in `kappa` for column `j`: midpoint between
    /// the first tonic `kappa` and its predecessor (the first `kappa` itself
    /// when the row starts tonic). `None` when the row has no tonic cell.
    pub fn tonic_boundary(&self, j: usize) -> Option<f64> {
        let i = (0..self.kappas.len()).find(|&i| self.grid[i][j].tonic)?;
        Some(if i == 0 {
            self.kappas[0]
        } else {
            0.5 * (self.kappas[i - 1] + self.kappas[i])
        })
    }
}

/// Runs every panel of the sweep. Cells that fail to integrate are recorded,
/// not propagated; panels outside `E_0` carry a warning and no threshold.
pub fn run_experiment1(spec: &SweepSpec) -> Result<Vec<SweepResult>> {
    spec.validate()?;
    let kappas = spec.kappa_range.values();
    let epsilons = spec.epsilon_range.values();
    spec.amplitude_list
        .iter()
        .map(|&(a, b)| {
            let started = Instant::now();
            let base = Params::new(a, b, spec.beta, spec.gamma, ANALYSIS_EPSILON)?;
            let in_e_0 = frozen::classify_region(&base, frozen::DEFAULT_C_GRID)?.in_e_0;
            let mut warnings = Vec::new();
            let kappa_star = if in_e_0 {
                Some(singular::kappa_threshold(&base, THRESHOLD_TOL)?.kappa_star)
            } else {
                warnings.push(format!("(A, B) = ({a}, {b}) is outside E_0; no threshold reported"));
                None
            };
            let ic = spec.ic_policy.state(&base)?;
            let nk = kappas.len();
            let ne = epsilons.len();
            let flat: Vec<Cell> = (0..nk * ne)
                .into_par_iter()
                .map(|idx| {
                    let (i, j) = (idx / ne, idx % ne);
                    let eps = epsilons[j];
                    let drive = Drive::AveragedCosine { eta: kappas[i] * eps };
                    let r = base
                        .with_epsilon(eps)
                        .and_then(|p| spike_count(&p, &drive, ic, spec.t_final, &spec.integrator));
                    Cell::from_result(r)
                })
                .collect();
            let mut rows = flat.into_iter();
            let grid = (0..nk).map(|_| rows.by_ref().take(ne).collect()).collect();
            Ok(SweepResult {
                a,
                b,
                beta: spec.beta,
                gamma: spec.gamma,
                in_e_0,
                kappa_star,
                kappas: kappas.clone(),
                epsilons: epsilons.clone(),
                grid,
                warnings,
                wall_time_s: started.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// One initial-condition grid experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub t_final: f64,
    /// Points per axis.
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    /// Half-width of the square `[-extent, extent]^2`.
    #[serde(default = "default_extent")]
    pub extent: f64,
}

fn default_grid_n() -> usize {
    21
}

fn default_extent() -> f64 {
    2.0
}

impl GridSettings {
    pub fn new(a: f64, b: f64, beta: f64, gamma: f64, kappa: f64, epsilon: f64, t_final: f64) -> Self {
        GridSettings {
            a,
            b,
            beta,
            gamma,
            kappa,
            epsilon,
            t_final,
            grid_n: default_grid_n(),
            extent: default_extent(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Params::new(self.a, self.b, self.beta, self.gamma, self.epsilon)?;
        for (key, x) in [("kappa", self.kappa), ("t_final", self.t_final), ("extent", self.extent)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::invalid(key, format!("must be positive, got {x}")));
            }
        }
        if self.grid_n < 2 {
            return Err(Error::invalid("grid_n", "must be at least 2"));
        }
        Ok(())
    }

    /// Evenly spaced axis values on `[-extent, extent]`.
    pub fn axis(&self) -> Vec<f64> {
        let n = self.grid_n;
        (0..n)
            .map(|i| -self.extent + 2.0 * self.extent * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn label(&self) -> String {
        format!(
            "A{}_B{}_beta{}_gamma{}_kappa{}_eps{}",
            self.a, self.b, self.beta, self.gamma, self.kappa, self.epsilon
        )
    }
}

/// Six amplitude/shape/`kappa` cases times four `epsilon` values, each on a
/// 21 x 21 grid of `[-2, 2]^2` with `T = 1000`.
pub fn grid_preset_paper() -> Vec<GridSettings> {
    grid_preset(&[0.02, 0.04, 0.06, 0.1])
}

/// [`grid_preset_paper`] restricted to `epsilon in {0.02, 0.1}`.
pub fn grid_preset_desk() -> Vec<GridSettings> {
    grid_preset(&[0.02, 0.1])
}

fn grid_preset(epsilons: &[f64]) -> Vec<GridSettings> {
    let mut out = Vec::new();
    for (gamma, beta) in [(0.5, 0.8), (0.6, 0.7)] {
        for kappa in [1.0, 2.0, 2.5] {
            for &eps in epsilons {
                out.push(GridSettings::new(0.3, 0.3, beta, gamma, kappa, eps, 1000.0));
            }
        }
    }
    out
}

/// Singular-limit verdict attached to a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Prediction {
    /// The `X_up` arc from rest reaches `C_1` first.
    #[serde(rename = "NoTonic(Theorem3)")]
    NoTonic,
    /// The two-leg construction lands on an escaping fold point.
    #[serde(rename = "TonicHeuristic(AssumptionE)")]
    TonicHeuristic,
    Indeterminate,
}

/// Prediction from the singular limit: no tonic spiking when the arc from
/// rest reaches `C_1`, tonic spiking when the escaping construction holds,
/// otherwise indeterminate (also outside `E_0`).
pub fn predict(p: &Params, kappa: f64) -> Result<Prediction> {
    if !frozen::classify_region(p, frozen::DEFAULT_C_GRID)?.in_e_0 {
        return Ok(Prediction::Indeterminate);
    }
    if singular::check_theorem3(p, kappa)? {
        return Ok(Prediction::NoTonic);
    }
    if singular::check_assumption_e(p, kappa)?.holds {
        return Ok(Prediction::TonicHeuristic);
    }
    Ok(Prediction::Indeterminate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ICGridResult {
    pub settings: GridSettings,
    pub prediction: Prediction,
    /// Axis values shared by `v0` and `w0`.
    pub axis: Vec<f64>,
    /// `grid[i][j]` starts at `(axis[i], axis[j])`.
    pub grid: Vec<Vec<Cell>>,
    pub wall_time_s: f64,
}

impl ICGridResult {
    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.grid.iter().flatten()
    }

    pub fn max_count(&self) -> Option<usize> {
        self.cells().filter_map(|c| c.spike_count).max()
    }

    pub fn tonic_fraction(&self) -> f64 {
        let n = self.cells().count();
        self.cells().filter(|c| c.tonic).count() as f64 / n as f64
    }
}

pub fn run_grid(settings: &GridSettings, cfg: &IntegratorConfig) -> Result<ICGridResult> {
    settings.validate()?;
    cfg.validate()?;
    let started = Instant::now();
    let p = Params::new(settings.a, settings.b, settings.beta, settings.gamma, settings.epsilon)?;
    let prediction = predict(&p, settings.kappa)?;
    let axis = settings.axis();
    let n = axis.len();
    let drive = Drive::AveragedCosine {
        eta: settings.kappa * settings.epsilon,
    };
    let flat: Vec<Cell> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let ic = State::new(axis[idx / n], axis[idx % n]);
            Cell::from_result(spike_count(&p, &drive, ic, settings.t_final, cfg))
        })
        .collect();
    let mut rows = flat.into_iter();
    let grid = (0..n).map(|_| rows.by_ref().take(n).collect()).collect();
    Ok(ICGridResult {
        settings: *settings,
        prediction,
        axis,
        grid,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

pub fn run_experiment2(settings: &[GridSettings], cfg: &IntegratorConfig) -> Result<Vec<ICGridResult>> {
    settings.iter().map(|s| run_grid(s, cfg)).collect()
}

fn count_field(c: &Cell) -> String {
    c.spike_count.map_or_else(String::new, |n| n.to_string())
}

fn error_field(c: &Cell) -> String {
    c.error.as_deref().map_or_else(String::new, |e| format!("\"{}\"", e.replace('"', "'")))
}

#[derive(Serialize)]
struct PanelSummary<'a> {
    file: String,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
    in_e_0: bool,
    kappa_star: Option<f64>,
    tonic_cells: usize,
    failed_cells: usize,
    warnings: &'a [String],
    wall_time_s: f64,
}

#[derive(Serialize)]
struct Manifest<'a, S: Serialize, P: Serialize> {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    spec: &'a S,
    panels: Vec<P>,
    wall_time_s: f64,
}

/// Writes `panel_<A>_<B>.csv`, `matrix_<A>_<B>.dat` (gnuplot nonuniform
/// matrix of spike counts, rows by `epsilon`, `-1` for failed cells),
/// `redline.txt` and `manifest.json` into `dir`.
pub fn write_experiment1(dir: &Path, spec: &SweepSpec, results: &[SweepResult], wall_time_s: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut redline = fs::File::create(dir.join("redline.txt"))?;
    writeln!(redline, "# A B kappa_star")?;
    let mut panels = Vec::new();
    for res in results {
        let stem = format!("{}_{}", res.a, res.b);
        let file = format!("panel_{stem}.csv");
        let mut out = std::io::BufWriter::new(fs::File::create(dir.join(&file))?);
        writeln!(out, "A,B,beta,gamma,t_final,kappa,epsilon,eta,spike_count,tonic,error")?;
        for (i, &kappa) in res.kappas.iter().enumerate() {
            for (j, &eps) in res.epsilons.iter().enumerate() {
                let c = &res.grid[i][j];
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    res.a,
                    res.b,
                    res.beta,
                    res.gamma,
                    spec.t_final,
                    kappa,
                    eps,
                    kappa * eps,
                    count_field(c),
                    c.tonic,
                    error_field(c)
                )?;
            }
        }
        out.flush()?;

        let mut m = std::io::BufWriter::new(fs::File::create(dir.join(format!("matrix_{stem}.dat")))?);
        write!(m, "{}", res.kappas.len())?;
        for k in &res.kappas {
            write!(m, " {k}")?;
        }
        writeln!(m)?;
        for (j, eps) in res.epsilons.iter().enumerate() {
            write!(m, "{eps}")?;
            for i in 0..res.kappas.len() {
                let n = res.grid[i][j].spike_count.map_or(-1, |n| n as i64);
                write!(m, " {n}")?;
            }
            writeln!(m)?;
        }
        m.flush()?;

        match res.kappa_star {
            Some(k) => writeln!(redline, "{} {} {}", res.a, res.b, k)?,
            None => writeln!(redline, "{} {} nan", res.a, res.b)?,
        }
        panels.push(PanelSummary {
            file,
            a: res.a,
            b: res.b,
            in_e_0: res.in_e_0,
            kappa_star: res.kappa_star,
            tonic_cells: res.tonic_cells(),
            failed_cells: res.failed_cells(),
            warnings: &res.warnings,
            wall_time_s: res.wall_time_s,
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: "kappa_epsilon_sweep",
        spec,
        panels,
        wall_time_s,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).map_err(io_err)?)?;
    Ok(())
}

#[derive(Serialize)]
struct GridSummary {
    file: String,
    settings: GridSettings,
    prediction: Prediction,
    max_count: Option<usize>,
    tonic_fraction: f64,
    wall_time_s: f64,
}

/// Writes one `grid_<label>.csv` per setting plus `manifest.json`.
pub fn write_experiment2(dir: &Path, cfg: &IntegratorConfig, results: &[ICGridResult], wall_time_s: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut summaries = Vec::new();
    for res in results {
        let s = &res.settings;
        let file = format!("grid_{}.csv", s.label());
        let mut out = std::io::BufWriter::new(fs::File::create(dir.join(&file))?);
        writeln!(out, "A,B,beta,gamma,kappa,epsilon,t_final,v0,w0,spike_count,tonic,error")?;
        for (i, v0) in res.axis.iter().enumerate() {
            for (j, w0) in res.axis.iter().enumerate() {
                let c = &res.grid[i][j];
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    s.a,
                    s.b,
                    s.beta,
                    s.gamma,
                    s.kappa,
                    s.epsilon,
                    s.t_final,
                    v0,
                    w0,
                    count_field(c),
                    c.tonic,
                    error_field(c)
                )?;
            }
        }
        out.flush()?;
        summaries.push(GridSummary {
            file,
            settings: *s,
            prediction: res.prediction,
            max_count: res.max_count(),
            tonic_fraction: res.tonic_fraction(),
            wall_time_s: res.wall_time_s,
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: "initial_condition_grid",
        spec: cfg,
        panels: summaries,
        wall_time_s,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).map_err(io_err)?)?;
    Ok(())
}

fn io_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}
