//! Command-line front end. [`run`] parses arguments, merges them over an
//! optional JSON config and returns the process exit status: 0 on success,
//! 2 on validation errors, 1 on runtime errors.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ParamsSection, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{self, SweepSpec};
use crate::frozen;
use crate::integrator::IntegratorConfig;
use crate::model::{Drive, Params, State};
use crate::sim::{self, SpikeLevels};
use crate::singular;

/// `epsilon` used when an analysis that does not depend on it is run
/// without one.
const ANALYSIS_EPSILON: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(
    name = "tis-fhn",
    version,
    about = "FitzHugh-Nagumo neuron under two interfering high-frequency carriers",
    long_about = "FitzHugh-Nagumo neuron under two interfering high-frequency carriers.\n\
                  Time is dimensionless (fast time t of the averaged system); \
                  frequencies are in radians per unit t."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct ParamArgs {
    /// JSON run configuration; flags override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Carrier amplitude A (dimensionless, > 0)
    #[arg(long = "A", visible_alias = "a", value_name = "A", allow_hyphen_values = true)]
    a: Option<f64>,
    /// Carrier amplitude B (dimensionless, > 0)
    #[arg(long = "B", visible_alias = "b", value_name = "B", allow_hyphen_values = true)]
    b: Option<f64>,
    /// Recovery offset beta (dimensionless, > 0)
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Recovery damping gamma (dimensionless, > 0)
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Timescale ratio epsilon between v and w (dimensionless, > 0)
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
}

impl ParamArgs {
    fn section(&self) -> ParamsSection {
        ParamsSection {
            a: self.a,
            b: self.b,
            beta: self.beta,
            gamma: self.gamma,
            epsilon: self.epsilon,
        }
    }

    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.params = cfg.params.overlay(self.section());
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DriveKind {
    AveragedCosine,
    SignCosine,
    FrozenConstant,
    RawInterference,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodKind {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
    Desk,
}

#[derive(Debug, Args, Clone, Default)]
struct IntegratorArgs {
    /// Integration method; defaults to the config, else rk45
    #[arg(long, value_enum)]
    method: Option<MethodKind>,
    /// Fixed step for rk4 (time units)
    #[arg(long)]
    dt: Option<f64>,
    /// Relative tolerance for rk45 (dimensionless)
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute tolerance for rk45 (state units)
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Largest rk45 step (time units)
    #[arg(long)]
    max_dt: Option<f64>,
    /// Keep every N-th accepted step (count)
    #[arg(long, value_name = "N")]
    stride: Option<usize>,
}

impl IntegratorArgs {
    fn resolve(&self, base: Option<IntegratorConfig>) -> Result<IntegratorConfig> {
        let base = base.unwrap_or_default();
        let mut cfg = match self.method {
            None => base,
            Some(MethodKind::Rk4) => IntegratorConfig::fixed(
                self.dt.ok_or_else(|| Error::invalid("dt", "required with --method rk4"))?,
            ),
            Some(MethodKind::Rk45) => IntegratorConfig::default(),
        };
        cfg.sample_stride = base.sample_stride;
        match &mut cfg.method {
            crate::integrator::Method::FixedRk4 { dt } => {
                if let Some(x) = self.dt {
                    *dt = x;
                }
                if self.rel_tol.or(self.abs_tol).or(self.max_dt).is_some() {
                    return Err(Error::invalid("method", "tolerances apply to rk45 only"));
                }
            }
            crate::integrator::Method::AdaptiveRk45 {
                rel_tol,
                abs_tol,
                max_dt,
            } => {
                if self.dt.is_some() {
                    return Err(Error::invalid("dt", "applies to rk4 only; use --max-dt"));
                }
                *rel_tol = self.rel_tol.unwrap_or(*rel_tol);
                *abs_tol = self.abs_tol.unwrap_or(*abs_tol);
                *max_dt = self.max_dt.unwrap_or(*max_dt);
            }
        }
        if let Some(s) = self.stride {
            cfg.sample_stride = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Region membership and geometric spiking conditions of the frozen system
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        /// Points of the uniform grid on c in [-1, 1] (count)
        #[arg(long, default_value_t = frozen::DEFAULT_C_GRID, value_name = "N")]
        c_grid: usize,
        /// Write the per-c nullcline table (c, r, v_m, w_m, v_e, w_e, unique, les) as CSV
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Integrate the neuron and count action potentials
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        /// Envelope family; defaults to the config's drive
        #[arg(long, value_enum)]
        drive: Option<DriveKind>,
        /// Beat frequency eta of the cosine envelopes (radians per time unit)
        #[arg(long)]
        eta: Option<f64>,
        /// Frozen envelope value c (dimensionless, in [-1, 1])
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        /// Lower carrier frequency omega1 (radians per time unit)
        #[arg(long)]
        omega1: Option<f64>,
        /// Upper carrier frequency omega2 (radians per time unit)
        #[arg(long)]
        omega2: Option<f64>,
        /// Initial membrane potential (state units); default v = 0
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<f64>,
        /// Initial recovery variable (state units); default w_e(1)
        #[arg(long, allow_hyphen_values = true)]
        w0: Option<f64>,
        /// Final time (time units)
        #[arg(long)]
        t_final: Option<f64>,
        #[command(flatten)]
        integrator: IntegratorArgs,
        /// Re-arm level of the spike detector (state units); default v_e(-1)/2
        #[arg(long, allow_hyphen_values = true)]
        arm_level: Option<f64>,
        /// Firing level of the spike detector (state units); default 0
        #[arg(long, allow_hyphen_values = true)]
        fire_level: Option<f64>,
        /// Write every N-th stored sample to the trajectory CSV (count)
        #[arg(long, value_name = "N")]
        decimate: Option<usize>,
        /// Trajectory CSV (t, v, w); omitted means no trajectory is stored
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Spike report JSON; printed to stdout when omitted
        #[arg(long, value_name = "PATH")]
        spikes: Option<PathBuf>,
    },
    /// Singular-limit verdicts at a given carrier ratio kappa
    SingularCheck {
        #[command(flatten)]
        params: ParamArgs,
        /// Ratio kappa = eta / epsilon (dimensionless, > 0)
        #[arg(long)]
        kappa: Option<f64>,
        /// Directory for arc CSVs (s, v, w, c) with s in slow time units
        #[arg(long, value_name = "DIR")]
        dump_dir: Option<PathBuf>,
    },
    /// Escape threshold kappa* and its minimiser c*
    KappaThreshold {
        #[command(flatten)]
        params: ParamArgs,
        /// Bracket width in c at which the search stops (dimensionless)
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Tonic-spiking map over (kappa, epsilon) for each amplitude panel
    SweepExp1 {
        /// JSON run configuration; its `sweep` section replaces the preset
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Grid scale
        #[arg(long, value_enum, default_value = "desk")]
        preset: Preset,
        /// Output directory
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Override the horizon (time units)
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Initial-condition grids against the singular-limit predictions
    GridExp2 {
        /// JSON run configuration; its `grid` section replaces the preset
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Set of experiments
        #[arg(long, value_enum, default_value = "desk")]
        preset: Preset,
        /// Output directory
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Override the horizon (time units)
        #[arg(long)]
        t_final: Option<f64>,
    },
}

/// Exit status for an error: 2 for bad input, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. }
        | Error::UnsupportedDrive(_)
        | Error::Domain(_)
        | Error::RegionPrecondition(_)
        | Error::InvalidStart(_)
        | Error::EmptyInput(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Classify { params, c_grid, csv } => {
            let cfg = params.load()?;
            let p = cfg.params.resolve(Some(ANALYSIS_EPSILON))?;
            classify(&p, c_grid, csv.as_deref(), out)
        }
        Command::Simulate {
            params,
            drive,
            eta,
            c,
            omega1,
            omega2,
            v0,
            w0,
            t_final,
            integrator,
            arm_level,
            fire_level,
            decimate,
            out: traj_path,
            spikes,
        } => {
            let cfg = params.load()?;
            let p = cfg.params.resolve(None)?;
            let drive = match drive {
                None => {
                    if eta.or(c).or(omega1).or(omega2).is_some() {
                        return Err(Error::invalid("drive", "--drive is required with drive flags"));
                    }
                    cfg.drive.clone().ok_or_else(|| Error::invalid("drive", "missing required key"))?
                }
                Some(kind) => {
                    let need = |key: &str, v: Option<f64>| v.ok_or_else(|| Error::invalid(key, "missing required key"));
                    match kind {
                        DriveKind::AveragedCosine => Drive::AveragedCosine { eta: need("eta", eta)? },
                        DriveKind::SignCosine => Drive::SignCosine { eta: need("eta", eta)? },
                        DriveKind::FrozenConstant => Drive::FrozenConstant { c: need("c", c)? },
                        DriveKind::RawInterference => Drive::RawInterference {
                            omega1: need("omega1", omega1)?,
                            omega2: need("omega2", omega2)?,
                        },
                    }
                }
            };
            drive.validate()?;
            let section = cfg.simulate.unwrap_or_default();
            let ic = match (v0, w0, section.ic) {
                (Some(v), Some(w), _) => State::new(v, w),
                (None, None, Some(ic)) => State::new(ic.v, ic.w),
                (None, None, None) => State::new(0.0, frozen::equilibrium(&p, 1.0)?.w_e),
                _ => return Err(Error::invalid("v0", "--v0 and --w0 must be given together")),
            };
            let t_final = t_final
                .or(section.t_final)
                .ok_or_else(|| Error::invalid("t_final", "missing required key"))?;
            let icfg = integrator.resolve(cfg.integrator)?;
            let defaults = SpikeLevels::default_for(&p);
            let levels = SpikeLevels::new(
                arm_level.or(section.arm_level).unwrap_or(defaults.arm),
                fire_level.or(section.fire_level).unwrap_or(defaults.fire),
            )?;
            let decimate = decimate.or(section.decimate).unwrap_or(1);
            if decimate == 0 {
                return Err(Error::invalid("decimate", "must be at least 1"));
            }
            let report = match traj_path {
                Some(path) => {
                    let traj = sim::simulate(&p, &drive, ic, t_final, &icfg)?;
                    traj.write_csv(BufWriter::new(create(&path)?), decimate)?;
                    sim::count_spikes(&traj, levels.arm, levels.fire)?
                }
                None => sim::simulate_spikes(&p, &drive, ic, t_final, &icfg, levels)?,
            };
            let json = to_json(&report)?;
            match spikes {
                Some(path) => fs::write(path, json + "\n")?,
                None => writeln!(out, "{json}")?,
            }
            Ok(())
        }
        Command::SingularCheck {
            params,
            kappa,
            dump_dir,
        } => {
            let cfg = params.load()?;
            let p = cfg.params.resolve(Some(ANALYSIS_EPSILON))?;
            let kappa = kappa
                .or(cfg.singular.and_then(|s| s.kappa))
                .ok_or_else(|| Error::invalid("kappa", "missing required key"))?;
            if !(kappa.is_finite() && kappa > 0.0) {
                return Err(Error::invalid("kappa", format!("must be > 0, got {kappa}")));
            }
            singular_check(&p, kappa, dump_dir.as_deref(), out)
        }
        Command::KappaThreshold { params, tol } => {
            let cfg = params.load()?;
            let p = cfg.params.resolve(Some(ANALYSIS_EPSILON))?;
            let tol = tol.or(cfg.singular.and_then(|s| s.tol)).unwrap_or(1e-10);
            let th = singular::kappa_threshold(&p, tol)?;
            writeln!(out, "kappa_star: {}", th.kappa_star)?;
            writeln!(out, "c_star: {}", th.c_star)?;
            writeln!(out, "degenerate: {}", yes_no(th.degenerate))?;
            Ok(())
        }
        Command::SweepExp1 {
            config,
            preset,
            out: dir,
            t_final,
        } => {
            let cfg = load_optional(config.as_deref())?;
            let mut spec = cfg.sweep.unwrap_or_else(|| match preset {
                Preset::Paper => SweepSpec::paper(),
                Preset::Desk => SweepSpec::desk(),
            });
            if let Some(t) = t_final {
                spec.t_final = t;
            }
            let started = Instant::now();
            let results = experiments::run_experiment1(&spec)?;
            for r in &results {
                for w in &r.warnings {
                    writeln!(err, "warning: {w}")?;
                }
            }
            experiments::write_experiment1(&dir, &spec, &results, started.elapsed().as_secs_f64())?;
            for r in &results {
                let ks = r.kappa_star.map_or_else(|| "nan".to_string(), |k| k.to_string());
                writeln!(
                    out,
                    "A={} B={} kappa_star={} tonic_cells={} failed_cells={}",
                    r.a,
                    r.b,
                    ks,
                    r.tonic_cells(),
                    r.failed_cells()
                )?;
            }
            Ok(())
        }
        Command::GridExp2 {
            config,
            preset,
            out: dir,
            t_final,
        } => {
            let cfg = load_optional(config.as_deref())?;
            let mut settings = match cfg.grid {
                Some(g) => g.settings,
                None => match preset {
                    Preset::Paper => experiments::grid_preset_paper(),
                    Preset::Desk => experiments::grid_preset_desk(),
                },
            };
            if settings.is_empty() {
                return Err(Error::invalid("settings", "must not be empty"));
            }
            if let Some(t) = t_final {
                for s in &mut settings {
                    s.t_final = t;
                }
            }
            let icfg = cfg.integrator.unwrap_or_default();
            let started = Instant::now();
            let results = experiments::run_experiment2(&settings, &icfg)?;
            experiments::write_experiment2(&dir, &icfg, &results, started.elapsed().as_secs_f64())?;
            for r in &results {
                let s = &r.settings;
                let max = r.max_count().map_or_else(|| "nan".to_string(), |n| n.to_string());
                writeln!(
                    out,
                    "A={} B={} beta={} gamma={} kappa={} epsilon={} prediction={} max_count={} tonic_fraction={}",
                    s.a,
                    s.b,
                    s.beta,
                    s.gamma,
                    s.kappa,
                    s.epsilon,
                    to_json(&r.prediction)?.trim_matches('"'),
                    max,
                    r.tonic_fraction()
                )?;
            }
            Ok(())
        }
    }
}

fn load_optional(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Io(e.to_string()))
}

fn classify(p: &Params, c_grid: usize, csv: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let class = frozen::classify_region(p, c_grid)?;
    let no_spiking = if class.in_e_0 {
        yes_no(frozen::no_spiking_condition(p)?)
    } else {
        "n/a"
    };
    writeln!(
        out,
        "E_unique: {}  E_LES_sufficient: {}  E_0: {}  E_GES_small_eps: {}  no_spiking_condition: {}  piecewise_spiking_condition: {}",
        yes_no(class.in_e_unique),
        yes_no(class.in_e_les_sufficient),
        yes_no(class.in_e_0),
        yes_no(class.in_e_ges_small_eps),
        no_spiking,
        yes_no(frozen::piecewise_spiking_condition(p)),
    )?;
    if let Some(path) = csv {
        let mut f = BufWriter::new(create(path)?);
        writeln!(f, "c,r,v_m,w_m,v_e,w_e,unique,les")?;
        for row in frozen::nullcline_table(p, c_grid)? {
            writeln!(
                f,
                "{},{},{},{},{},{},{},{}",
                row.c, row.r, row.v_m, row.w_m, row.v_e, row.w_e, row.unique, row.les
            )?;
        }
        f.flush()?;
    }
    Ok(())
}

fn singular_check(p: &Params, kappa: f64, dump: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let th = singular::kappa_threshold(p, 1e-10)?;
    let arc = singular::theorem3_arc(p, kappa, &singular::default_arc_config(kappa))?;
    let no_tonic = matches!(arc.terminal, singular::Terminal::ReachedC1 { .. });
    let e = singular::check_assumption_e(p, kappa)?;
    writeln!(out, "kappa: {kappa}")?;
    writeln!(out, "kappa_star: {}", th.kappa_star)?;
    writeln!(
        out,
        "x_up_from_rest: {} (terminal {} at s = {})",
        if no_tonic { "reaches C_1, no tonic spiking" } else { "does not reach C_1" },
        arc.terminal.name(),
        arc.terminal.s()
    )?;
    writeln!(out, "escaping_construction: {}", if e.holds { "holds" } else { "fails" })?;
    if let Some((s, c)) = e.landing {
        writeln!(out, "landing: s = {s}, c = {c}")?;
    }
    if let Some(d) = &e.diagnostic {
        writeln!(out, "diagnostic: {d}")?;
    }
    if let Some(dir) = dump {
        fs::create_dir_all(dir)?;
        arc.write_csv(BufWriter::new(create(&dir.join("x_up_from_rest.csv"))?))?;
        e.down.write_csv(BufWriter::new(create(&dir.join("x_down_leg.csv"))?))?;
        if let Some(up) = &e.up {
            up.write_csv(BufWriter::new(create(&dir.join("x_up_leg.csv"))?))?;
        }
    }
    Ok(())
}
