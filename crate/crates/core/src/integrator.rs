//! Explicit Runge-Kutta steppers shared by the time-domain simulator and the
//! singular-limit integrator.
//!
//! Steppers work on fixed-size arrays and take a fallible right-hand side so
//! that callers can abort a step when the vector field is undefined (for
//! instance when an implicit solve for `v` has no root).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with constant step `dt`.
    FixedRk4 { dt: f64 },
    /// Dormand-Prince 5(4) with per-step error control.
    AdaptiveRk45 {
        rel_tol: f64,
        abs_tol: f64,
        max_dt: f64,
    },
}

/// Serialized as a flat object: `{"method": "fixed_rk4", "dt": ..}` or
/// `{"method": "adaptive_rk45", "rel_tol": .., "abs_tol": .., "max_dt": ..}`,
/// each with an optional `sample_stride`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct IntegratorConfig {
    pub method: Method,
    /// Keep every `sample_stride`-th accepted step in the output.
    pub sample_stride: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    method: MethodName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_dt: Option<f64>,
    #[serde(default = "default_stride")]
    sample_stride: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MethodName {
    FixedRk4,
    AdaptiveRk45,
}

fn default_stride() -> usize {
    1
}

impl TryFrom<RawConfig> for IntegratorConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let defaults = IntegratorConfig::default();
        let method = match raw.method {
            MethodName::FixedRk4 => {
                if raw.rel_tol.is_some() || raw.abs_tol.is_some() || raw.max_dt.is_some() {
                    return Err(Error::invalid("method", "fixed_rk4 takes only `dt`"));
                }
                Method::FixedRk4 {
                    dt: raw.dt.ok_or_else(|| Error::invalid("dt", "required for fixed_rk4"))?,
                }
            }
            MethodName::AdaptiveRk45 => {
                if raw.dt.is_some() {
                    return Err(Error::invalid("dt", "not used by adaptive_rk45; set max_dt"));
                }
                let Method::AdaptiveRk45 {
                    rel_tol,
                    abs_tol,
                    max_dt,
                } = defaults.method
                else {
                    unreachable!()
                };
                Method::AdaptiveRk45 {
                    rel_tol: raw.rel_tol.unwrap_or(rel_tol),
                    abs_tol: raw.abs_tol.unwrap_or(abs_tol),
                    max_dt: raw.max_dt.unwrap_or(max_dt),
                }
            }
        };
        let cfg = IntegratorConfig {
            method,
            sample_stride: raw.sample_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<IntegratorConfig> for RawConfig {
    fn from(cfg: IntegratorConfig) -> Self {
        let mut raw = RawConfig {
            method: MethodName::FixedRk4,
            dt: None,
            rel_tol: None,
            abs_tol: None,
            max_dt: None,
            sample_stride: cfg.sample_stride,
        };
        match cfg.method {
            Method::FixedRk4 { dt } => raw.dt = Some(dt),
            Method::AdaptiveRk45 {
                rel_tol,
                abs_tol,
                max_dt,
            } => {
                raw.method = MethodName::AdaptiveRk45;
                raw.rel_tol = Some(rel_tol);
                raw.abs_tol = Some(abs_tol);
                raw.max_dt = Some(max_dt);
            }
        }
        raw
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::AdaptiveRk45 {
                rel_tol: 1e-8,
                abs_tol: 1e-8,
                max_dt: 0.5,
            },
            sample_stride: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(dt: f64) -> Self {
        IntegratorConfig {
            method: Method::FixedRk4 { dt },
            sample_stride: 1,
        }
    }

    pub fn adaptive(rel_tol: f64, abs_tol: f64, max_dt: f64) -> Self {
        IntegratorConfig {
            method: Method::AdaptiveRk45 {
                rel_tol,
                abs_tol,
                max_dt,
            },
            sample_stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(key, format!("must be a positive finite number, got {x}")))
            }
        };
        match self.method {
            Method::FixedRk4 { dt } => positive("dt", dt)?,
            Method::AdaptiveRk45 {
                rel_tol,
                abs_tol,
                max_dt,
            } => {
                positive("rel_tol", rel_tol)?;
                positive("abs_tol", abs_tol)?;
                positive("max_dt", max_dt)?;
            }
        }
        if self.sample_stride == 0 {
            return Err(Error::invalid("sample_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Largest step the configuration allows.
    pub fn max_step(&self) -> f64 {
        match self.method {
            Method::FixedRk4 { dt } => dt,
            Method::AdaptiveRk45 { max_dt, .. } => max_dt,
        }
    }

    /// Copy with the maximum step reduced to `cap` (never increased).
    pub fn capped(&self, cap: f64) -> Self {
        let mut out = *self;
        match &mut out.method {
            Method::FixedRk4 { dt } => *dt = dt.min(cap),
            Method::AdaptiveRk45 { max_dt, .. } => *max_dt = max_dt.min(cap),
        }
        out
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// One classical RK4 step.
pub fn rk4_step<const N: usize, E, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> std::result::Result<[f64; N], E>
where
    F: FnMut(f64, &[f64; N]) -> std::result::Result<[f64; N], E>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    Ok(std::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Result of one Dormand-Prince attempt.
pub struct Dp45Step<const N: usize> {
    pub y: [f64; N],
    /// Local error estimate (difference of the embedded pair).
    pub err: [f64; N],
    /// Derivative at the new point (first stage of the next step).
    pub k_end: [f64; N],
}

pub fn dp45_step<const N: usize, E, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> std::result::Result<Dp45Step<N>, E>
where
    F: FnMut(f64, &[f64; N]) -> std::result::Result<[f64; N], E>,
{
    let k2 = f(t + C2 * h, &axpy(y, h * A21, k1))?;
    let y3: [f64; N] = std::array::from_fn(|i| y[i] + h * (A31 * k1[i] + A32 * k2[i]));
    let k3 = f(t + C3 * h, &y3)?;
    let y4: [f64; N] = std::array::from_fn(|i| y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]));
    let k4 = f(t + C4 * h, &y4)?;
    let y5: [f64; N] = std::array::from_fn(|i| {
        y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    });
    let k5 = f(t + C5 * h, &y5)?;
    let y6: [f64; N] = std::array::from_fn(|i| {
        y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
    });
    let k6 = f(t + h, &y6)?;
    let ynew: [f64; N] = std::array::from_fn(|i| {
        y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
    });
    let k7 = f(t + h, &ynew)?;
    let err = std::array::from_fn(|i| {
        h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
    });
    Ok(Dp45Step {
        y: ynew,
        err,
        k_end: k7,
    })
}

/// Max-norm of the error scaled by `abs_tol + rel_tol * max(|y|, |y_new|)`.
pub fn scaled_error<const N: usize>(y: &[f64; N], step: &Dp45Step<N>, rel_tol: f64, abs_tol: f64) -> f64 {
    (0..N)
        .map(|i| {
            let scale = abs_tol + rel_tol * y[i].abs().max(step.y[i].abs());
            (step.err[i] / scale).abs()
        })
        .fold(0.0, f64::max)
}

/// Step-size factor from a scaled error (I-controller, order 5).
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else if !err.is_finite() {
        0.2
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    }
}
