//! Parameter set, drive signals and right-hand sides.
//!
//! Three planar systems share the parameters `(A, B, beta, gamma, epsilon)`:
//!
//! * the full two-tone system, driven by
//!   `I(t) = A w1 cos(w1 t) + B w2 cos(w2 t)`;
//! * the averaged system, where the carriers are replaced by their effect on
//!   the cubic, `v' = v (1 - A^2/2 - B^2/2 - A B f(t)) - v^3/3 - w`;
//! * the frozen system, the averaged one with `f` held constant.
//!
//! The recovery equation `w' = epsilon (v - gamma w + beta)` is common to all.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model parameters. All fields are strictly positive unless the value was
/// built with [`Params::without_stimulus`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    a: f64,
    b: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
    below_fold_bound: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.a, raw.b, raw.beta, raw.gamma, raw.epsilon)
    }
}

impl From<Params> for RawParams {
    fn from(p: Params) -> Self {
        RawParams {
            a: p.a,
            b: p.b,
            beta: p.beta,
            gamma: p.gamma,
            epsilon: p.epsilon,
        }
    }
}

fn check_positive(key: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::invalid(key, format!("must be finite, got {value}")));
    }
    if value <= 0.0 {
        return Err(Error::invalid(key, format!("must be > 0, got {value}")));
    }
    Ok(())
}

impl Params {
    pub fn new(a: f64, b: f64, beta: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        check_positive("A", a)?;
        check_positive("B", b)?;
        check_positive("beta", beta)?;
        check_positive("gamma", gamma)?;
        check_positive("epsilon", epsilon)?;
        Ok(Self::assemble(a, b, beta, gamma, epsilon))
    }

    /// Unstimulated neuron (`A = B = 0`). Operations that divide by `A B`
    /// reject such values.
    pub fn without_stimulus(beta: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("gamma", gamma)?;
        check_positive("epsilon", epsilon)?;
        Ok(Self::assemble(0.0, 0.0, beta, gamma, epsilon))
    }

    fn assemble(a: f64, b: f64, beta: f64, gamma: f64, epsilon: f64) -> Self {
        Params {
            a,
            b,
            beta,
            gamma,
            epsilon,
            below_fold_bound: a + b < std::f64::consts::SQRT_2,
        }
    }

    /// Same amplitudes and shape parameters with a different timescale ratio.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        Ok(Self::assemble(self.a, self.b, self.beta, self.gamma, epsilon))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Whether `A + B < sqrt(2)`, which keeps `r(c) > 0` on all of `[-1, 1]`.
    pub fn below_fold_bound(&self) -> bool {
        self.below_fold_bound
    }

    /// `1 - A^2/2 - B^2/2`, the part of `r(c)` independent of the envelope.
    pub(crate) fn base_gain(&self) -> f64 {
        1.0 - 0.5 * self.a * self.a - 0.5 * self.b * self.b
    }

    pub(crate) fn ab(&self) -> f64 {
        self.a * self.b
    }
}

/// Input envelope family. The first three variants (and `CustomSampled`)
/// take values in `[-1, 1]`; `RawInterference` drives the full system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Drive {
    AveragedCosine { eta: f64 },
    SignCosine { eta: f64 },
    FrozenConstant { c: f64 },
    RawInterference { omega1: f64, omega2: f64 },
    /// Uniformly sampled envelope, linearly interpolated and held at the last
    /// sample. Not accepted by the singular-limit checkers.
    CustomSampled { dt: f64, samples: Vec<f64> },
}

impl Drive {
    pub fn validate(&self) -> Result<()> {
        match self {
            Drive::AveragedCosine { eta } | Drive::SignCosine { eta } => {
                check_positive("eta", *eta)
            }
            Drive::FrozenConstant { c } => {
                if !(-1.0..=1.0).contains(c) {
                    return Err(Error::invalid("c", format!("must lie in [-1, 1], got {c}")));
                }
                Ok(())
            }
            Drive::RawInterference { omega1, omega2 } => {
                check_positive("omega1", *omega1)?;
                check_positive("omega2", *omega2)?;
                if omega2 <= omega1 {
                    return Err(Error::invalid(
                        "omega2",
                        format!("must exceed omega1 ({omega1}), got {omega2}"),
                    ));
                }
                Ok(())
            }
            Drive::CustomSampled { dt, samples } => {
                check_positive("dt", *dt)?;
                if samples.is_empty() {
                    return Err(Error::invalid("samples", "must not be empty"));
                }
                if let Some(bad) = samples.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
                    return Err(Error::invalid(
                        "samples",
                        format!("values must lie in [-1, 1], got {bad}"),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Drive::AveragedCosine { .. } => "averaged_cosine",
            Drive::SignCosine { .. } => "sign_cosine",
            Drive::FrozenConstant { .. } => "frozen_constant",
            Drive::RawInterference { .. } => "raw_interference",
            Drive::CustomSampled { .. } => "custom_sampled",
        }
    }

    /// Beat frequency, when the drive has one.
    pub fn beat(&self) -> Option<f64> {
        match self {
            Drive::AveragedCosine { eta } | Drive::SignCosine { eta } => Some(*eta),
            Drive::RawInterference { omega1, omega2 } => Some(omega2 - omega1),
            _ => None,
        }
    }

    /// First discontinuity of the envelope strictly after `t`. Only
    /// `SignCosine` has any: `t_k = (k + 1/2) pi / eta`.
    pub fn next_switch(&self, t: f64) -> Option<f64> {
        match self {
            Drive::SignCosine { eta } => {
                let k = (t * eta / PI - 0.5).floor() + 1.0;
                let mut tk = (k + 0.5) * PI / eta;
                if tk <= t {
                    tk = (k + 1.5) * PI / eta;
                }
                Some(tk)
            }
            _ => None,
        }
    }
}

/// `sign` with `sign(0) = +1`.
pub(crate) fn sign_right(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Envelope value `f(t)` in `[-1, 1]`.
pub fn envelope(drive: &Drive, t: f64) -> Result<f64> {
    match drive {
        Drive::AveragedCosine { eta } => Ok((eta * t).cos()),
        Drive::SignCosine { eta } => Ok(sign_right((eta * t).cos())),
        Drive::FrozenConstant { c } => Ok(*c),
        Drive::RawInterference { .. } => Err(Error::UnsupportedDrive("raw_interference")),
        Drive::CustomSampled { dt, samples } => Ok(sampled_envelope(*dt, samples, t)),
    }
}

fn sampled_envelope(dt: f64, samples: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return samples[0];
    }
    let x = t / dt;
    let i = x.floor() as usize;
    if i + 1 >= samples.len() {
        return *samples.last().expect("validated non-empty");
    }
    let frac = x - i as f64;
    samples[i] * (1.0 - frac) + samples[i + 1] * frac
}

/// Membrane-potential-like variable `v` and recovery variable `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub v: f64,
    pub w: f64,
}

impl State {
    pub fn new(v: f64, w: f64) -> Self {
        State { v, w }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.w.is_finite()
    }
}

impl From<(f64, f64)> for State {
    fn from((v, w): (f64, f64)) -> Self {
        State { v, w }
    }
}

/// Averaged vector field for a given envelope value.
#[inline]
pub(crate) fn averaged_field(p: &Params, f: f64, s: State) -> (f64, f64) {
    let gain = p.base_gain() - p.ab() * f;
    let dv = s.v * gain - s.v * s.v * s.v / 3.0 - s.w;
    let dw = p.epsilon * (s.v - p.gamma * s.w + p.beta);
    (dv, dw)
}

pub fn rhs_averaged(p: &Params, drive: &Drive, t: f64, s: State) -> Result<(f64, f64)> {
    let f = envelope(drive, t)?;
    Ok(averaged_field(p, f, s))
}

/// Full system driven by the two carriers.
pub fn rhs_full(p: &Params, omega1: f64, omega2: f64, t: f64, s: State) -> (f64, f64) {
    let input = p.a * omega1 * (omega1 * t).cos() + p.b * omega2 * (omega2 * t).cos();
    let dv = s.v - s.v * s.v * s.v / 3.0 - s.w + input;
    let dw = p.epsilon * (s.v - p.gamma * s.w + p.beta);
    (dv, dw)
}

/// Amplitudes `(A~, B~)` for replacing a cosine envelope by a sign-cosine
/// one: `R = |(A, B)|`, `theta = asin(pi/8 * A B / (A^2 + B^2)) / 2`,
/// `(A~, B~) = (R cos theta, R sin theta)`.
///
/// Note that `A~ B~ = (pi/16) A B` with this angle, although the Fourier
/// argument behind the substitution calls for `(pi/4) A B`; see
/// [`effective_amplitudes_quarter_pi`].
pub fn effective_amplitudes(a: f64, b: f64) -> (f64, f64) {
    rotate_amplitudes(a, b, PI / 8.0)
}

/// Variant of [`effective_amplitudes`] whose angle yields
/// `A~ B~ = (pi/4) A B` exactly, for comparison. Returns `None` when the
/// required `asin` argument exceeds 1 (`A B / (A^2 + B^2) > 2/pi` never
/// happens since that ratio is at most 1/2).
pub fn effective_amplitudes_quarter_pi(a: f64, b: f64) -> Option<(f64, f64)> {
    let arg = FRAC_PI_2 * a * b / (a * a + b * b);
    (arg <= 1.0).then(|| rotate_amplitudes(a, b, FRAC_PI_2))
}

fn rotate_amplitudes(a: f64, b: f64, factor: f64) -> (f64, f64) {
    let r2 = a * a + b * b;
    let radius = r2.sqrt();
    let theta = 0.5 * (factor * a * b / r2).asin();
    (radius * theta.cos(), radius * theta.sin())
}
