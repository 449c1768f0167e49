//! Singular limit `epsilon -> 0` with beat `eta = kappa epsilon`, in slow
//! time `s = epsilon t`:
//!
//! ```text
//! 0  = r(cos(kappa s)) v - v^3/3 - w
//! w' = v - gamma w + beta
//! ```
//!
//! Regular solutions are transported along the cubic family. They follow
//! `X_down` while the cosine decreases (phase in `(0, pi)` mod `2 pi`) and
//! `X_up` while it increases, and stop near the fold curve `J_m`.
//!
//! Arcs are integrated in the phase `theta = kappa s`: `w` solves
//! `dw/dtheta = (v - gamma w + beta) / kappa` and `v` is recovered at every
//! stage from the cubic constraint on the branch the arc started on. This
//! keeps `c(v, w) = cos(theta)` to rounding error.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frozen::{self, ensure_e0, fold_from_r, r_unchecked};
use crate::integrator::{self, IntegratorConfig, Method};
use crate::model::Params;

/// Fold proximity threshold on `|r(c) - v^2|`.
pub const TOL_DENOM: f64 = 1e-6;
/// Arcs with `|v|` below this are stopped: the cubic coordinate is undefined
/// on the `v = 0` axis.
pub const TOL_ORIGIN: f64 = 1e-9;
/// On-cubic residual accepted for start points.
pub const TOL_ON_CUBIC: f64 = 1e-9;

/// Maximum phase advance per step used by the checker defaults.
const DEFAULT_PHASE_STEP: f64 = 5e-3;

fn require_ab(p: &Params) -> Result<f64> {
    let ab = p.ab();
    if ab > 0.0 {
        Ok(ab)
    } else {
        Err(Error::invalid("A", "the singular limit needs A B > 0"))
    }
}

#[inline]
fn cubic_residual(r: f64, v: f64, w: f64) -> f64 {
    r * v - v * v * v / 3.0 - w
}

/// Value of the cubic coordinate, flagged when it falls outside `[-1, 1]`
/// by more than rounding (the point then lies on no admissible cubic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicCoordinate {
    pub value: f64,
    pub admissible: bool,
}

/// The `c` for which `(v, w)` lies on `C_c`.
pub fn c_of_point(p: &Params, v: f64, w: f64) -> Result<CubicCoordinate> {
    let ab = require_ab(p)?;
    if v == 0.0 || !v.is_finite() {
        return Err(Error::UndefinedCoordinate(v));
    }
    let value = (-w + v * p.base_gain() - v * v * v / 3.0) / (v * ab);
    Ok(CubicCoordinate {
        value,
        admissible: value.abs() <= 1.0 + 1e-12,
    })
}

/// A point on the cubic `C_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicPoint {
    pub v: f64,
    pub w: f64,
    pub c: f64,
}

impl CubicPoint {
    /// The point of `C_c` with abscissa `v`.
    pub fn on_cubic(p: &Params, c: f64, v: f64) -> Result<Self> {
        let r = frozen::r_of_c(p, c)?;
        if v == 0.0 {
            return Err(Error::UndefinedCoordinate(v));
        }
        Ok(CubicPoint {
            v,
            w: r * v - v * v * v / 3.0,
            c,
        })
    }

    /// Locates `(v, w)` on its cubic; fails if no admissible `c` exists.
    pub fn locate(p: &Params, v: f64, w: f64) -> Result<Self> {
        let c = c_of_point(p, v, w)?;
        if !c.admissible {
            return Err(Error::Domain(c.value));
        }
        Ok(CubicPoint { v, w, c: c.value.clamp(-1.0, 1.0) })
    }
}

/// Outer or middle branch of a cubic `C_c` (split at `v = +-sqrt(r)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicBranch {
    Left,
    Middle,
    Right,
}

fn branch_of(r: f64, v: f64) -> CubicBranch {
    let sr = r.max(0.0).sqrt();
    if v < -sr {
        CubicBranch::Left
    } else if v > sr {
        CubicBranch::Right
    } else {
        CubicBranch::Middle
    }
}

/// Root of `r v - v^3/3 = w` on `branch`, by Newton safeguarded with
/// bisection. `None` when the branch does not reach level `w`.
fn solve_on_branch(r: f64, w: f64, branch: CubicBranch, guess: f64) -> Option<f64> {
    if r <= 0.0 {
        return None;
    }
    let sr = r.sqrt();
    let w_m = -2.0 / 3.0 * r * sr;
    let g = |v: f64| cubic_residual(r, v, w);
    // bracket [lo, hi] with the sign of g at lo recorded in `g_lo_pos`
    let (mut lo, mut hi, g_lo_pos) = match branch {
        CubicBranch::Left => {
            if w < w_m {
                return None;
            }
            let hi = -sr;
            let mut span = 1.0;
            while g(hi - span) <= 0.0 {
                span *= 2.0;
                if span > 1e12 {
                    return None;
                }
            }
            (hi - span, hi, true)
        }
        CubicBranch::Middle => {
            if w < w_m || w > -w_m {
                return None;
            }
            (-sr, sr, false)
        }
        CubicBranch::Right => {
            if w > -w_m {
                return None;
            }
            let lo = sr;
            let mut span = 1.0;
            while g(lo + span) >= 0.0 {
                span *= 2.0;
                if span > 1e12 {
                    return None;
                }
            }
            (lo, lo + span, true)
        }
    };
    let mut x = if guess.is_finite() && guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return Some(x);
        }
        // shrink the bracket around the root
        if (gx > 0.0) == g_lo_pos {
            lo = x;
        } else {
            hi = x;
        }
        let dg = r - x * x;
        let newton = x - gx / dg;
        let next = if dg != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-3) || hi - lo <= f64::EPSILON * x.abs() {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

fn x_field(p: &Params, kappa: f64, v: f64, w: f64, up: bool) -> Result<(f64, f64)> {
    let ab = require_ab(p)?;
    let c = c_of_point(p, v, w)?;
    if !c.admissible {
        return Err(Error::Domain(c.value));
    }
    let c = c.value.clamp(-1.0, 1.0);
    let denom = r_unchecked(p, c) - v * v;
    if denom.abs() < TOL_DENOM {
        return Err(Error::NearFold { v, w, c });
    }
    let dw = v - p.gamma() * w + p.beta();
    let twist = kappa * ab * v * (1.0 - c * c).max(0.0).sqrt();
    let num = if up { dw + twist } else { dw - twist };
    Ok((num / denom, dw))
}

/// `X_up`, the field followed while the envelope cosine increases.
pub fn x_up(p: &Params, kappa: f64, v: f64, w: f64) -> Result<(f64, f64)> {
    x_field(p, kappa, v, w, true)
}

/// `X_down`, the field followed while the envelope cosine decreases.
pub fn x_down(p: &Params, kappa: f64, v: f64, w: f64) -> Result<(f64, f64)> {
    x_field(p, kappa, v, w, false)
}

/// Fast escape at the fold point of `C_c` on an increasing-cosine leg:
/// `|v_m| A B kappa sqrt(1 - c^2) > v_m - gamma w_m + beta`.
pub fn escaping_at_c(p: &Params, kappa: f64, c: f64) -> Result<bool> {
    let ab = require_ab(p)?;
    if c.abs() == 1.0 {
        return Err(Error::Boundary(c));
    }
    let fold = frozen::fold_point(p, c)?;
    Ok(escape_margin(p, ab, kappa, c, fold.v_m, fold.w_m) > 0.0)
}

#[inline]
fn escape_margin(p: &Params, ab: f64, kappa: f64, c: f64, v_m: f64, w_m: f64) -> f64 {
    v_m.abs() * ab * kappa * (1.0 - c * c).sqrt() - (v_m - p.gamma() * w_m + p.beta())
}

/// Smallest `kappa` for which some fold point escapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaThreshold {
    pub kappa_star: f64,
    /// Minimiser of the per-`c` threshold.
    pub c_star: f64,
    /// Set when `v_m - gamma w_m + beta <= 0` somewhere (then `kappa* = 0`).
    pub degenerate: bool,
}

/// Per-`c` escape threshold `(v_m - gamma w_m + beta) / (|v_m| A B sqrt(1 - c^2))`.
fn kappa_of_c(p: &Params, ab: f64, c: f64) -> (f64, f64) {
    let r = r_unchecked(p, c);
    let sr = r.sqrt();
    let (v_m, w_m) = (-sr, -2.0 / 3.0 * r * sr);
    let num = v_m - p.gamma() * w_m + p.beta();
    (num, num / (sr * ab * (1.0 - c * c).sqrt()))
}

/// Minimises the per-`c` threshold over `(-1, 1)` by a grid scan refined by
/// golden-section search until the bracket in `c` is narrower than `tol`.
/// Requires `(A, B)` in `E_0`.
pub fn kappa_threshold(p: &Params, tol: f64) -> Result<KappaThreshold> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be positive, got {tol}")));
    }
    ensure_e0(p)?;
    let ab = require_ab(p)?;
    let n = 2001;
    let h = 2.0 / (n + 1) as f64;
    let mut best = (f64::INFINITY, 0usize);
    for i in 1..=n {
        let c = -1.0 + i as f64 * h;
        let (num, k) = kappa_of_c(p, ab, c);
        if num <= 0.0 {
            return Ok(KappaThreshold {
                kappa_star: 0.0,
                c_star: c,
                degenerate: true,
            });
        }
        if k < best.0 {
            best = (k, i);
        }
    }
    let f = |c: f64| kappa_of_c(p, ab, c).1;
    let mut a = -1.0 + (best.1 - 1) as f64 * h;
    let mut b = -1.0 + (best.1 + 1) as f64 * h;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let c_star = 0.5 * (a + b);
    let kappa_star = f(c_star).min(best.0);
    Ok(KappaThreshold {
        kappa_star,
        c_star: if f(c_star) <= best.0 { c_star } else { -1.0 + best.1 as f64 * h },
        degenerate: false,
    })
}

/// One sample of a singular arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcSample {
    pub s: f64,
    pub v: f64,
    pub w: f64,
    pub c: f64,
}

/// Why an arc stopped. `s` is slow time since the arc's start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    /// Within [`TOL_DENOM`] of the fold curve. `escaping` is the fold
    /// verdict at `c`, and is false on decreasing-cosine legs.
    ReachedJm { s: f64, c: f64, escaping: bool },
    /// Completed an increasing-cosine leg on the left branch.
    ReachedC1 { s: f64 },
    ReachedHorizon { s: f64 },
    /// Hit the `v = 0` axis, the upper fold `-J_m`, or a cubic with
    /// `r(c) <= 0`.
    LeftDomain { s: f64 },
}

impl Terminal {
    pub fn s(&self) -> f64 {
        match *self {
            Terminal::ReachedJm { s, .. }
            | Terminal::ReachedC1 { s }
            | Terminal::ReachedHorizon { s }
            | Terminal::LeftDomain { s } => s,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Terminal::ReachedJm { .. } => "reached_jm",
            Terminal::ReachedC1 { .. } => "reached_c1",
            Terminal::ReachedHorizon { .. } => "reached_horizon",
            Terminal::LeftDomain { .. } => "left_domain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularArc {
    pub kappa: f64,
    pub start_phase: f64,
    pub branch: CubicBranch,
    pub samples: Vec<ArcSample>,
    pub terminal: Terminal,
}

impl SingularArc {
    pub fn last(&self) -> &ArcSample {
        self.samples.last().expect("arcs hold their start sample")
    }

    /// CSV with header `s,v,w,c`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "s,v,w,c")?;
        for x in &self.samples {
            writeln!(out, "{},{},{},{}", x.s, x.v, x.w, x.c)?;
        }
        Ok(())
    }
}

/// Integrator defaults for arcs at a given `kappa`: adaptive with the phase
/// advance capped at 5e-3 rad per step.
pub fn default_arc_config(kappa: f64) -> IntegratorConfig {
    IntegratorConfig::adaptive(1e-10, 1e-12, DEFAULT_PHASE_STEP / kappa)
}

/// Stage evaluation failed: the branch no longer reaches the requested level.
struct OffBranch;

/// Snaps `x` to the nearest multiple of `pi` when within rounding of it.
fn snap_to_pi(x: f64) -> f64 {
    let k = (x / PI).round();
    if (x - k * PI).abs() <= 1e-12 * x.abs().max(1.0) {
        k * PI
    } else {
        x
    }
}

/// Integrates a regular solution from `start` at phase `start_phase` for at
/// most `horizon` units of slow time. Step sizes in `cfg` are slow-time
/// units.
pub fn integrate_singular(
    p: &Params,
    kappa: f64,
    start_phase: f64,
    start: CubicPoint,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<SingularArc> {
    let ab = require_ab(p)?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon", format!("must be a positive finite time, got {horizon}")));
    }
    if !start_phase.is_finite() {
        return Err(Error::invalid("start_phase", "must be finite"));
    }
    cfg.validate()?;
    let c0 = start_phase.cos();
    let r0 = r_unchecked(p, c0);
    let residual = cubic_residual(r0, start.v, start.w);
    if !(residual.abs() < TOL_ON_CUBIC) {
        return Err(Error::InvalidStart(format!(
            "({}, {}) is off the cubic for c = cos({start_phase}) = {c0}: residual {residual}",
            start.v, start.w
        )));
    }
    if start.v.abs() < TOL_ORIGIN {
        return Err(Error::InvalidStart(format!("v = {} is on the v = 0 axis", start.v)));
    }
    if r0 <= 0.0 || (r0 - start.v * start.v).abs() < TOL_DENOM {
        return Err(Error::InvalidStart(format!(
            "({}, {}) is at a fold of C_{c0}",
            start.v, start.w
        )));
    }
    let branch = branch_of(r0, start.v);

    let (gamma, beta) = (p.gamma(), p.beta());
    let theta_end = snap_to_pi(start_phase + kappa * horizon);
    let s_of = |theta: f64| (theta - start_phase) / kappa;
    let (max_phase, fixed) = match cfg.method {
        Method::FixedRk4 { dt } => (kappa * dt, true),
        Method::AdaptiveRk45 { max_dt, .. } => (kappa * max_dt, false),
    };

    let mut theta = start_phase;
    let mut w = start.w;
    let mut v = start.v;
    let mut samples = vec![ArcSample {
        s: 0.0,
        v,
        w,
        c: c0,
    }];
    let mut h = if fixed { max_phase } else { max_phase.min(1e-3) };

    let guess = std::cell::Cell::new(v);
    let mut field = |th: f64, y: &[f64; 1]| -> std::result::Result<[f64; 1], OffBranch> {
        let r = r_unchecked(p, th.cos());
        let vv = solve_on_branch(r, y[0], branch, guess.get()).ok_or(OffBranch)?;
        guess.set(vv);
        Ok([(vv - gamma * y[0] + beta) / kappa])
    };

    let terminal = loop {
        // leg [k pi, (k + 1) pi]; odd k means the cosine increases
        let k = ((theta + 1e-12 * theta.abs().max(1.0)) / PI).floor();
        let leg_end = (k + 1.0) * PI;
        let up = (k as i64).rem_euclid(2) == 1;
        let stop = leg_end.min(theta_end);
        let remaining = stop - theta;
        let clipped = h >= remaining * (1.0 - 1e-12);
        let step_h = if clipped { remaining } else { h };

        let attempt: std::result::Result<(f64, f64), OffBranch> = if fixed {
            integrator::rk4_step(&mut field, theta, &[w], step_h).map(|y| (y[0], 0.0))
        } else {
            let (rel_tol, abs_tol) = match cfg.method {
                Method::AdaptiveRk45 { rel_tol, abs_tol, .. } => (rel_tol, abs_tol),
                Method::FixedRk4 { .. } => unreachable!(),
            };
            field(theta, &[w]).and_then(|k1| {
                integrator::dp45_step(&mut field, theta, &[w], &k1, step_h)
                    .map(|st| (st.y[0], integrator::scaled_error(&[w], &st, rel_tol, abs_tol)))
            })
        };

        let theta_new = if clipped { stop } else { theta + step_h };
        let c_new = theta_new.cos();
        let r_new = r_unchecked(p, c_new);
        let accepted = match attempt {
            Ok((w_new, err)) if err <= 1.0 && w_new.is_finite() => {
                solve_on_branch(r_new, w_new, branch, v).map(|v_new| (w_new, v_new, err))
            }
            _ => None,
        };

        let Some((w_new, v_new, err)) = accepted else {
            // shrink towards the fold (or the error target)
            let factor = match attempt {
                Ok((_, err)) if err.is_finite() && err > 1.0 => integrator::step_factor(err).min(0.5),
                _ => 0.5,
            };
            h = step_h * factor;
            if h < 1e-14 * theta.abs().max(1.0) {
                break fold_terminal(p, ab, kappa, s_of(theta), theta.cos(), v, up);
            }
            continue;
        };

        theta = theta_new;
        w = w_new;
        v = v_new;
        guess.set(v);
        let s = s_of(theta);
        samples.push(ArcSample { s, v, w, c: c_new });
        if !fixed {
            h = (step_h * integrator::step_factor(err)).min(max_phase);
            if clipped {
                h = h.max(step_h.min(max_phase));
            }
        }

        if r_new <= 0.0 || v.abs() < TOL_ORIGIN {
            break Terminal::LeftDomain { s };
        }
        if (r_new - v * v).abs() < TOL_DENOM {
            break fold_terminal(p, ab, kappa, s, c_new, v, up);
        }
        if clipped && theta == leg_end && up && branch == CubicBranch::Left {
            break Terminal::ReachedC1 { s };
        }
        if clipped && theta == theta_end {
            break Terminal::ReachedHorizon { s };
        }
    };

    Ok(SingularArc {
        kappa,
        start_phase,
        branch,
        samples,
        terminal,
    })
}

fn fold_terminal(p: &Params, ab: f64, kappa: f64, s: f64, c: f64, v: f64, up: bool) -> Terminal {
    if v > 0.0 {
        return Terminal::LeftDomain { s };
    }
    let escaping = up
        && c.abs() < 1.0
        && fold_from_r(c, r_unchecked(p, c))
            .map(|f| escape_margin(p, ab, kappa, c, f.v_m, f.w_m) > 0.0)
            .unwrap_or(false);
    Terminal::ReachedJm { s, c, escaping }
}

/// `X_up` arc from the resting point `(v_e(-1), w_e(-1))` over one
/// increasing half-period.
pub fn theorem3_arc(p: &Params, kappa: f64, cfg: &IntegratorConfig) -> Result<SingularArc> {
    ensure_e0(p)?;
    let eq = frozen::equilibrium(p, -1.0)?;
    let start = CubicPoint {
        v: eq.v_e,
        w: eq.w_e,
        c: -1.0,
    };
    integrate_singular(p, kappa, PI, start, PI / kappa, cfg)
}

/// True iff the `X_up` arc from `(v_e(-1), w_e(-1))` reaches `C_1` before
/// `J_m`, which predicts no tonic spiking for small `epsilon` with
/// `eta = kappa epsilon`. Requires `(A, B)` in `E_0`.
pub fn check_theorem3(p: &Params, kappa: f64) -> Result<bool> {
    let arc = theorem3_arc(p, kappa, &default_arc_config(kappa))?;
    Ok(matches!(arc.terminal, Terminal::ReachedC1 { .. }))
}

/// Outcome of the two-leg construction behind the tonic-spiking heuristic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionE {
    pub holds: bool,
    /// End point on `C_{-1}` of the `X_down` leg from `(v_e(1), w_e(1))`.
    #[serde(rename = "P")]
    pub p: Option<CubicPoint>,
    /// `(s, c)` of the `J_m` hit on the `X_up` leg from `P`.
    pub landing: Option<(f64, f64)>,
    pub diagnostic: Option<String>,
    pub down: SingularArc,
    pub up: Option<SingularArc>,
}

pub fn check_assumption_e(p: &Params, kappa: f64) -> Result<AssumptionE> {
    assumption_e_with(p, kappa, &default_arc_config(kappa))
}

/// `X_down` from `(v_e(1), w_e(1))` over phase `0 -> pi` gives `P`; `X_up`
/// from `P` over `pi -> 2 pi` must then hit `J_m` at an escaping fold point.
/// Requires `(A, B)` in `E_0`.
pub fn assumption_e_with(p: &Params, kappa: f64, cfg: &IntegratorConfig) -> Result<AssumptionE> {
    ensure_e0(p)?;
    let eq = frozen::equilibrium(p, 1.0)?;
    let start = CubicPoint {
        v: eq.v_e,
        w: eq.w_e,
        c: 1.0,
    };
    let down = integrate_singular(p, kappa, 0.0, start, PI / kappa, cfg)?;
    if !matches!(down.terminal, Terminal::ReachedHorizon { .. }) {
        let diagnostic = format!(
            "X_down leg from (v_e(1), w_e(1)) stopped early ({}) at s = {}, c = {}",
            down.terminal.name(),
            down.terminal.s(),
            down.last().c
        );
        return Ok(AssumptionE {
            holds: false,
            p: None,
            landing: None,
            diagnostic: Some(diagnostic),
            down,
            up: None,
        });
    }
    let end = down.last();
    let p_point = CubicPoint {
        v: end.v,
        w: end.w,
        c: -1.0,
    };
    let up = integrate_singular(p, kappa, PI, p_point, PI / kappa, cfg)?;
    let (holds, landing, diagnostic) = match up.terminal {
        Terminal::ReachedJm { s, c, escaping } => (
            escaping,
            Some((s, c)),
            (!escaping).then(|| format!("X_up leg reached J_m at a non-escaping point c = {c}")),
        ),
        other => (false, None, Some(format!("X_up leg from P ended with {}", other.name()))),
    };
    Ok(AssumptionE {
        holds,
        p: Some(p_point),
        landing,
        diagnostic,
        down,
        up: Some(up),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn standard(a: f64) -> Params {
        Params::new(a, a, 0.8, 0.5, 0.1).unwrap()
    }

    #[test]
    fn coordinate_inverts_cubics() {
        let p = standard(0.3);
        for c in [-1.0, -0.4, 0.0, 0.7, 1.0] {
            let f = frozen::fold_point(&p, c).unwrap();
            assert_abs_diff_eq!(c_of_point(&p, f.v_m, f.w_m).unwrap().value, c, epsilon = 1e-12);
            let e = frozen::equilibrium(&p, c).unwrap();
            assert_abs_diff_eq!(c_of_point(&p, e.v_e, e.w_e).unwrap().value, c, epsilon = 1e-12);
            for v in [-2.0, -0.3, 0.5, 1.7] {
                let q = CubicPoint::on_cubic(&p, c, v).unwrap();
                assert_abs_diff_eq!(c_of_point(&p, q.v, q.w).unwrap().value, c, epsilon = 1e-12);
            }
        }
        let at = c_of_point(&p, -1.0, -2.0 / 3.0).unwrap();
        assert_abs_diff_eq!(at.value, -1.0, epsilon = 1e-12);
        assert!(at.admissible);
        assert!(!c_of_point(&p, -1.0, 5.0).unwrap().admissible);
        assert!(matches!(c_of_point(&p, 0.0, 1.0), Err(Error::UndefinedCoordinate(_))));
    }

    #[test]
    fn branch_solver_recovers_points() {
        for r in [0.3, 0.82, 1.0] {
            for (v, b) in [(-2.5, CubicBranch::Left), (-0.2, CubicBranch::Middle), (1.9, CubicBranch::Right)] {
                let w = r * v - v * v * v / 3.0;
                let got = solve_on_branch(r, w, b, f64::NAN).unwrap();
                assert_abs_diff_eq!(got, v, epsilon = 1e-12);
            }
            let w_m = -2.0 / 3.0 * r * r.sqrt();
            assert!(solve_on_branch(r, w_m - 1e-6, CubicBranch::Left, -2.0).is_none());
            assert!(solve_on_branch(r, -w_m + 1e-6, CubicBranch::Right, 2.0).is_none());
        }
    }

    #[test]
    fn fields_on_j_e_are_horizontal() {
        let p = standard(0.3);
        for c in [-0.8, -0.3, 0.2, 0.9] {
            let e = frozen::equilibrium(&p, c).unwrap();
            let (dvu, dwu) = x_up(&p, 1.3, e.v_e, e.w_e).unwrap();
            let (dvd, dwd) = x_down(&p, 1.3, e.v_e, e.w_e).unwrap();
            assert!(dwu.abs() < 1e-12 && dwd.abs() < 1e-12);
            // the twist term over the negative denominator sets the direction
            assert!(dvu > 0.0, "c={c}: {dvu}");
            assert!(dvd < 0.0, "c={c}: {dvd}");
        }
    }

    #[test]
    fn fields_agree_at_extreme_cubics() {
        let p = standard(0.3);
        for c in [-1.0, 1.0] {
            let q = CubicPoint::on_cubic(&p, c, -1.6).unwrap();
            let (a, b) = (x_up(&p, 2.0, q.v, q.w).unwrap(), x_down(&p, 2.0, q.v, q.w).unwrap());
            // sqrt(1 - c^2) amplifies the rounding in c near the ends
            assert_abs_diff_eq!(a.0, b.0, epsilon = 1e-6);
            assert_eq!(a.1, b.1);
        }
        let q = CubicPoint::on_cubic(&p, 0.3, -1.6).unwrap();
        assert_eq!(x_up(&p, 2.0, q.v, q.w).unwrap().1, x_down(&p, 2.0, q.v, q.w).unwrap().1);
    }

    #[test]
    fn w_component_follows_line() {
        let p = standard(0.3);
        // below Lambda the recovery variable increases
        let q = CubicPoint::on_cubic(&p, 0.0, -0.5).unwrap();
        assert!(q.v - 0.5 * q.w + 0.8 > 0.0);
        assert!(x_up(&p, 1.0, q.v, q.w).unwrap().1 > 0.0);
        assert!(x_down(&p, 1.0, q.v, q.w).unwrap().1 > 0.0);
    }

    #[test]
    fn near_fold_is_rejected() {
        let p = standard(0.3);
        let f = frozen::fold_point(&p, 0.2).unwrap();
        assert!(matches!(x_up(&p, 1.0, f.v_m, f.w_m), Err(Error::NearFold { .. })));
    }

    #[test]
    fn up_field_sign_matches_escaping_near_fold() {
        let p = standard(0.3);
        let mut seen = [false; 2];
        for kappa in [0.8, 1.6, 2.5, 4.0] {
            for i in 1..40 {
                let c = -1.0 + i as f64 * 0.05;
                let f = frozen::fold_point(&p, c).unwrap();
                let margin = escape_margin(&p, p.ab(), kappa, c, f.v_m, f.w_m);
                if margin.abs() < 1e-2 {
                    continue;
                }
                let q = CubicPoint::on_cubic(&p, c, f.v_m - 1e-4).unwrap();
                let (dv, _) = x_up(&p, kappa, q.v, q.w).unwrap();
                let esc = escaping_at_c(&p, kappa, c).unwrap();
                assert_eq!(dv > 0.0, esc, "kappa={kappa} c={c}");
                seen[esc as usize] = true;
            }
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn escaping_examples() {
        let p = standard(0.3);
        assert!(matches!(escaping_at_c(&p, 1.0, 1.0), Err(Error::Boundary(_))));
        let grid = |kappa: f64| (1..10001).map(move |i| -1.0 + 2.0 * i as f64 / 10001.0).map(move |c| (kappa, c));
        assert!(grid(3.0).any(|(k, c)| escaping_at_c(&p, k, c).unwrap()));
        assert!(!grid(0.5).any(|(k, c)| escaping_at_c(&p, k, c).unwrap()));
        assert!(!grid(1e-6).any(|(k, c)| escaping_at_c(&p, k, c).unwrap()));
    }

    #[test]
    fn threshold_is_consistent() {
        let p = standard(0.3);
        let th = kappa_threshold(&p, 1e-10).unwrap();
        assert!(!th.degenerate);
        assert!(th.kappa_star > 0.5 && th.kappa_star < 3.0);
        assert!(escaping_at_c(&p, th.kappa_star * 1.01, th.c_star).unwrap());
        for i in 1..2000 {
            let c = -1.0 + i as f64 / 1000.0;
            assert!(!escaping_at_c(&p, th.kappa_star * 0.99, c).unwrap());
        }
        assert!(kappa_threshold(&p, 0.0).is_err());
        assert!(matches!(
            kappa_threshold(&standard(1.0), 1e-8),
            Err(Error::RegionPrecondition(_))
        ));
    }

    #[test]
    fn threshold_decreases_with_amplitude() {
        let ks: Vec<f64> = [0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]
            .iter()
            .map(|a| kappa_threshold(&standard(*a), 1e-9).unwrap().kappa_star)
            .collect();
        assert!(ks.windows(2).all(|w| w[1] < w[0]), "{ks:?}");
    }

    #[test]
    fn start_validation() {
        let p = standard(0.3);
        let eq = frozen::equilibrium(&p, -1.0).unwrap();
        let bad = CubicPoint {
            v: eq.v_e,
            w: eq.w_e + 1e-3,
            c: -1.0,
        };
        let cfg = default_arc_config(1.0);
        assert!(matches!(
            integrate_singular(&p, 1.0, PI, bad, 1.0, &cfg),
            Err(Error::InvalidStart(_))
        ));
        let f = frozen::fold_point(&p, -1.0).unwrap();
        let on_fold = CubicPoint {
            v: f.v_m,
            w: f.w_m,
            c: -1.0,
        };
        assert!(integrate_singular(&p, 1.0, PI, on_fold, 1.0, &cfg).is_err());
    }

    #[test]
    fn starts_with_zero_w_rate_on_j_e() {
        let p = standard(0.3);
        let phase: f64 = 2.0;
        let eq = frozen::equilibrium(&p, phase.cos()).unwrap();
        let start = CubicPoint {
            v: eq.v_e,
            w: eq.w_e,
            c: phase.cos(),
        };
        let arc = integrate_singular(&p, 1.0, phase, start, 0.5, &default_arc_config(1.0)).unwrap();
        let a = arc.samples[0];
        assert!((a.v - 0.5 * a.w + 0.8).abs() < 1e-12);
        let b = arc.last();
        assert!((b.v - 0.5 * b.w + 0.8).abs() > 1e-6);
        assert!(matches!(arc.terminal, Terminal::ReachedHorizon { .. }));
    }

    #[test]
    fn no_spike_check_small_kappa() {
        let p = standard(0.3);
        assert!(check_theorem3(&p, 0.5).unwrap());
        assert!(check_theorem3(&p, 1.0).unwrap());
        let arc = theorem3_arc(&p, 0.5, &default_arc_config(0.5)).unwrap();
        assert_abs_diff_eq!(arc.terminal.s(), PI / 0.5, epsilon = 1e-9);
    }

    #[test]
    fn assumption_e_examples() {
        let p = standard(0.3);
        let e = check_assumption_e(&p, 3.0).unwrap();
        assert!(e.holds, "{:?}", e.diagnostic);
        assert!(e.landing.is_some());
        assert_eq!(e.p.unwrap().c, -1.0);
        assert!(matches!(e.up.as_ref().unwrap().terminal, Terminal::ReachedJm { escaping: true, .. }));
        assert!(!check_assumption_e(&p, 1.0).unwrap().holds);
    }
}
