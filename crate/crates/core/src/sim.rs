//! Time-domain integration of the averaged, frozen, piecewise-constant and
//! full systems, spike detection and the absorbing box.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frozen;
use crate::integrator::{self, IntegratorConfig, Method};
use crate::model::{averaged_field, envelope, rhs_full, sign_right, Drive, Params, State};

/// Carrier samples per period required for the full system.
const CARRIER_SAMPLES: f64 = 20.0;

/// Sampled solution. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    drive: Drive,
    params: Params,
}

impl Trajectory {
    /// Builds a trajectory from externally produced samples. Times must be
    /// strictly increasing and all arrays of equal length.
    pub fn from_samples(params: Params, drive: Drive, t: Vec<f64>, v: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() || t.len() != w.len() {
            return Err(Error::invalid(
                "samples",
                format!("length mismatch: t {}, v {}, w {}", t.len(), v.len(), w.len()),
            ));
        }
        if let Some(i) = t.windows(2).position(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("t", format!("not strictly increasing at index {}", i + 1)));
        }
        Ok(Trajectory { t, v, w, drive, params })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> Option<(f64, State)> {
        let i = self.t.len().checked_sub(1)?;
        Some((self.t[i], State::new(self.v[i], self.w[i])))
    }

    pub fn states(&self) -> impl Iterator<Item = (f64, State)> + '_ {
        (0..self.t.len()).map(|i| (self.t[i], State::new(self.v[i], self.w[i])))
    }

    /// CSV with header `t,v,w`, keeping every `decimate`-th row and the last.
    pub fn write_csv<W: Write>(&self, mut out: W, decimate: usize) -> Result<()> {
        let decimate = decimate.max(1);
        writeln!(out, "t,v,w")?;
        let n = self.t.len();
        for i in 0..n {
            if i % decimate == 0 || i + 1 == n {
                writeln!(out, "{},{},{}", self.t[i], self.v[i], self.w[i])?;
            }
        }
        Ok(())
    }
}

/// Detected action potentials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpikeReport {
    pub spike_times: Vec<f64>,
    pub count: usize,
    pub tonic: bool,
}

/// Threshold pair for the hysteresis detector; `arm < fire`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpikeLevels {
    pub arm: f64,
    pub fire: f64,
}

impl SpikeLevels {
    pub fn new(arm: f64, fire: f64) -> Result<Self> {
        if !arm.is_finite() || !fire.is_finite() {
            return Err(Error::invalid("arm_level", "levels must be finite"));
        }
        if arm >= fire {
            return Err(Error::invalid(
                "arm_level",
                format!("must be below fire_level ({fire}), got {arm}"),
            ));
        }
        Ok(SpikeLevels { arm, fire })
    }

    /// Fire at `v = 0`, re-arm at half the resting potential `v_e(-1)`.
    pub fn default_for(p: &Params) -> Self {
        let v_e = frozen::equilibrium_from_r(p, -1.0, frozen::r_unchecked(p, -1.0)).v_e;
        SpikeLevels {
            arm: 0.5 * v_e,
            fire: 0.0,
        }
    }
}

/// Online hysteresis spike counter. Starts armed; a spike is recorded at the
/// first sample with `v >= fire` while armed, after which the detector waits
/// for `v < arm`.
#[derive(Debug, Clone)]
pub struct SpikeDetector {
    levels: SpikeLevels,
    armed: bool,
    prev: Option<(f64, f64)>,
    times: Vec<f64>,
}

impl SpikeDetector {
    pub fn new(levels: SpikeLevels) -> Self {
        SpikeDetector {
            levels,
            armed: true,
            prev: None,
            times: Vec::new(),
        }
    }

    pub fn feed(&mut self, t: f64, v: f64) {
        if self.armed && v >= self.levels.fire {
            // crossing time by linear interpolation within the last step
            let at = match self.prev {
                Some((t0, v0)) if v0 < self.levels.fire => t0 + (t - t0) * (self.levels.fire - v0) / (v - v0),
                _ => t,
            };
            self.times.push(at);
            self.armed = false;
        } else if !self.armed && v < self.levels.arm {
            self.armed = true;
        }
        self.prev = Some((t, v));
    }

    pub fn count(&self) -> usize {
        self.times.len()
    }

    pub fn finish(self) -> SpikeReport {
        let count = self.times.len();
        SpikeReport {
            spike_times: self.times,
            count,
            tonic: count >= 2,
        }
    }
}

pub fn count_spikes(traj: &Trajectory, arm_level: f64, fire_level: f64) -> Result<SpikeReport> {
    if traj.is_empty() {
        return Err(Error::EmptyInput("trajectory has no samples"));
    }
    let mut det = SpikeDetector::new(SpikeLevels::new(arm_level, fire_level)?);
    for (t, v) in traj.t.iter().zip(&traj.v) {
        det.feed(*t, *v);
    }
    Ok(det.finish())
}

/// [`count_spikes`] with [`SpikeLevels::default_for`] the trajectory's parameters.
pub fn count_spikes_default(traj: &Trajectory) -> Result<SpikeReport> {
    let lv = SpikeLevels::default_for(&traj.params);
    count_spikes(traj, lv.arm, lv.fire)
}

/// Slow component `v = V - A sin(omega1 t) - B sin(omega2 t)` of a
/// full-system trajectory, comparable with the averaged system. Other drives
/// are returned unchanged.
pub fn demodulate(traj: &Trajectory) -> Trajectory {
    let Drive::RawInterference { omega1, omega2 } = traj.drive else {
        return traj.clone();
    };
    let (a, b) = (traj.params.a(), traj.params.b());
    let v = traj
        .t
        .iter()
        .zip(&traj.v)
        .map(|(&t, &v)| v - a * (omega1 * t).sin() - b * (omega2 * t).sin())
        .collect();
    Trajectory { v, ..traj.clone() }
}

/// Half-widths `(L, S)` of the absorbing box `[-L, L] x [-S, S]`: `L` is
/// the first power of two with
/// `L (1 - A^2/2 - B^2/2 + A B) - L^3/3 + (L + beta)/gamma + 1 <= 0`, and
/// `S = (L + beta)/gamma + 1`.
pub fn invariant_box(p: &Params) -> (f64, f64) {
    let g = p.base_gain() + p.ab();
    let excess = |l: f64| l * g - l * l * l / 3.0 + (l + p.beta()) / p.gamma() + 1.0;
    let mut l = 1.0;
    while excess(l) > 0.0 {
        l *= 2.0;
    }
    (l, (l + p.beta()) / p.gamma() + 1.0)
}

/// Right-hand side on one smooth segment of the drive.
enum Segment<'a> {
    Averaged { p: &'a Params, drive: &'a Drive },
    Constant { p: &'a Params, f: f64 },
    Full { p: &'a Params, omega1: f64, omega2: f64 },
}

impl Segment<'_> {
    #[inline]
    fn eval(&self, t: f64, y: &[f64; 2]) -> [f64; 2] {
        let s = State::new(y[0], y[1]);
        let (dv, dw) = match *self {
            Segment::Averaged { p, drive } => {
                let f = match drive {
                    Drive::AveragedCosine { eta } => (eta * t).cos(),
                    other => envelope(other, t).expect("bounded drive"),
                };
                averaged_field(p, f, s)
            }
            Segment::Constant { p, f } => averaged_field(p, f, s),
            Segment::Full { p, omega1, omega2 } => rhs_full(p, omega1, omega2, t, s),
        };
        [dv, dw]
    }
}

fn segment<'a>(p: &'a Params, drive: &'a Drive, t0: f64, t1: f64) -> Segment<'a> {
    match drive {
        Drive::SignCosine { eta } => Segment::Constant {
            p,
            f: sign_right((eta * 0.5 * (t0 + t1)).cos()),
        },
        Drive::FrozenConstant { c } => Segment::Constant { p, f: *c },
        Drive::RawInterference { omega1, omega2 } => Segment::Full {
            p,
            omega1: *omega1,
            omega2: *omega2,
        },
        _ => Segment::Averaged { p, drive },
    }
}

/// Effective configuration: the full system resolves its faster carrier.
fn effective_config(drive: &Drive, cfg: &IntegratorConfig) -> IntegratorConfig {
    match drive {
        Drive::RawInterference { omega2, .. } => cfg.capped(2.0 * PI / omega2 / CARRIER_SAMPLES),
        _ => *cfg,
    }
}

fn check_inputs(p: &Params, drive: &Drive, ic: State, t_final: f64, cfg: &IntegratorConfig) -> Result<()> {
    let _ = p;
    drive.validate()?;
    cfg.validate()?;
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::invalid("t_final", format!("must be a positive finite time, got {t_final}")));
    }
    if !ic.is_finite() {
        return Err(Error::invalid("ic", "initial state must be finite"));
    }
    Ok(())
}

/// Integrates from `t = 0` to `t_final`, calling `observe` at `t = 0` and
/// after every accepted step. Steps never straddle a switching time of the
/// drive.
pub fn integrate_observed<F>(
    p: &Params,
    drive: &Drive,
    ic: State,
    t_final: f64,
    cfg: &IntegratorConfig,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(f64, State),
{
    check_inputs(p, drive, ic, t_final, cfg)?;
    let cfg = effective_config(drive, cfg);
    let mut t = 0.0;
    let mut y = [ic.v, ic.w];
    observe(t, ic);
    let mut h_carry = initial_step(&cfg);
    while t < t_final {
        let mut end = t_final;
        if let Some(mut ts) = drive.next_switch(t) {
            // skip switch times that coincide with t up to rounding
            while ts - t <= 1e-12 * t.abs().max(1.0) {
                ts = drive.next_switch(ts).expect("periodic switches");
            }
            end = end.min(ts);
        }
        let seg = segment(p, drive, t, end);
        match cfg.method {
            Method::FixedRk4 { dt } => fixed_segment(&seg, &mut t, &mut y, end, dt, &mut observe)?,
            Method::AdaptiveRk45 {
                rel_tol,
                abs_tol,
                max_dt,
            } => adaptive_segment(
                &seg,
                &mut t,
                &mut y,
                end,
                (rel_tol, abs_tol, max_dt),
                &mut h_carry,
                &mut observe,
            )?,
        }
    }
    Ok(())
}

fn initial_step(cfg: &IntegratorConfig) -> f64 {
    cfg.max_step().min(1e-2)
}

type Infallible = std::convert::Infallible;

fn infallible<T>(r: std::result::Result<T, Infallible>) -> T {
    match r {
        Ok(v) => v,
        Err(never) => match never {},
    }
}

fn fixed_segment<F: FnMut(f64, State)>(
    seg: &Segment,
    t: &mut f64,
    y: &mut [f64; 2],
    end: f64,
    dt: f64,
    observe: &mut F,
) -> Result<()> {
    let t0 = *t;
    let n = ((end - t0) / dt * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    let h = (end - t0) / n as f64;
    let mut f = |t: f64, y: &[f64; 2]| -> std::result::Result<[f64; 2], Infallible> { Ok(seg.eval(t, y)) };
    for i in 0..n {
        let ti = t0 + i as f64 * h;
        let next = infallible(integrator::rk4_step(&mut f, ti, y, h));
        let tn = if i + 1 == n { end } else { t0 + (i + 1) as f64 * h };
        if !(next[0].is_finite() && next[1].is_finite()) {
            return Err(Error::Divergence { t: ti, v: y[0], w: y[1] });
        }
        *y = next;
        *t = tn;
        observe(tn, State::new(y[0], y[1]));
    }
    Ok(())
}

fn adaptive_segment<F: FnMut(f64, State)>(
    seg: &Segment,
    t: &mut f64,
    y: &mut [f64; 2],
    end: f64,
    (rel_tol, abs_tol, max_dt): (f64, f64, f64),
    h_carry: &mut f64,
    observe: &mut F,
) -> Result<()> {
    let mut f = |t: f64, y: &[f64; 2]| -> std::result::Result<[f64; 2], Infallible> { Ok(seg.eval(t, y)) };
    let mut k1 = infallible(f(*t, y));
    let mut h = h_carry.min(max_dt);
    loop {
        let remaining = end - *t;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining * (1.0 - 1e-12);
        let step_h = if last { remaining } else { h };
        let step = infallible(integrator::dp45_step(&mut f, *t, y, &k1, step_h));
        let err = integrator::scaled_error(y, &step, rel_tol, abs_tol);
        let factor = integrator::step_factor(err);
        if err <= 1.0 && step.y.iter().all(|x| x.is_finite()) {
            *t = if last { end } else { *t + step_h };
            *y = step.y;
            k1 = step.k_end;
            observe(*t, State::new(y[0], y[1]));
            // keep the controller's proposal, not the truncated final step
            h = if last { h.max(step_h * factor) } else { step_h * factor }.min(max_dt);
            if last {
                break;
            }
        } else {
            h = step_h * factor.min(0.9);
            if h < 1e-13 * t.abs().max(1.0) {
                return Err(Error::Divergence { t: *t, v: y[0], w: y[1] });
            }
        }
    }
    *h_carry = h;
    Ok(())
}

/// Samples every `cfg.sample_stride`-th accepted step (plus the final one).
pub fn simulate(p: &Params, drive: &Drive, ic: State, t_final: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let stride = cfg.sample_stride.max(1);
    let (mut ts, mut vs, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    let mut pending: Option<(f64, State)> = None;
    let mut k = 0usize;
    integrate_observed(p, drive, ic, t_final, cfg, |t, s| {
        if k.is_multiple_of(stride) {
            ts.push(t);
            vs.push(s.v);
            ws.push(s.w);
            pending = None;
        } else {
            pending = Some((t, s));
        }
        k += 1;
    })?;
    if let Some((t, s)) = pending {
        ts.push(t);
        vs.push(s.v);
        ws.push(s.w);
    }
    Trajectory::from_samples(*p, drive.clone(), ts, vs, ws)
}

/// Runs the detector on every accepted step without storing samples.
pub fn simulate_spikes(
    p: &Params,
    drive: &Drive,
    ic: State,
    t_final: f64,
    cfg: &IntegratorConfig,
    levels: SpikeLevels,
) -> Result<SpikeReport> {
    let mut det = SpikeDetector::new(levels);
    integrate_observed(p, drive, ic, t_final, cfg, |t, s| det.feed(t, s.v))?;
    Ok(det.finish())
}
