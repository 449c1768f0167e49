//! Closed-form analysis of the frozen system (envelope held at a constant
//! `c`): nullclines, fold points, equilibria and their stability, and the
//! region classifiers built on top of them.
//!
//! With `r(c) = 1 - A^2/2 - B^2/2 - c A B` the `v`-nullcline is the cubic
//! `C_c: w = r(c) v - v^3/3` and the `w`-nullcline is the line
//! `w = (v + beta) / gamma`.

use serde::Serialize;

use crate::cubic;
use crate::error::{Error, Result};
use crate::model::Params;

/// Default resolution of the uniform `c`-grid used for the `E_0` test.
pub const DEFAULT_C_GRID: usize = 1001;

fn check_c(c: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::Domain(c))
    }
}

#[inline]
pub(crate) fn r_unchecked(p: &Params, c: f64) -> f64 {
    p.base_gain() - c * p.ab()
}

pub fn r_of_c(p: &Params, c: f64) -> Result<f64> {
    check_c(c)?;
    Ok(r_unchecked(p, c))
}

/// Local minimum of the cubic nullcline `C_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldPoint {
    pub c: f64,
    pub v_m: f64,
    pub w_m: f64,
}

pub fn fold_point(p: &Params, c: f64) -> Result<FoldPoint> {
    let r = r_of_c(p, c)?;
    fold_from_r(c, r)
}

pub(crate) fn fold_from_r(c: f64, r: f64) -> Result<FoldPoint> {
    if r <= 0.0 {
        return Err(Error::FoldUndefined { c, r });
    }
    let sr = r.sqrt();
    Ok(FoldPoint {
        c,
        v_m: -sr,
        w_m: -2.0 / 3.0 * r * sr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumInfo {
    pub c: f64,
    pub v_e: f64,
    pub w_e: f64,
    /// No other equilibrium exists in the plane.
    pub unique: bool,
    /// Locally exponentially stable for the given `epsilon`.
    pub les: bool,
    /// Unique and `r(c) < v_e^2`: globally exponentially stable once
    /// `epsilon` is small enough.
    pub ges_small_eps: bool,
}

/// Leftmost (and only negative) root of
/// `v^3 - 3 (r(c) - 1/gamma) v + 3 beta / gamma = 0`.
fn equilibrium_v(p: &Params, r: f64) -> f64 {
    let cp = -3.0 * (r - 1.0 / p.gamma());
    let cq = 3.0 * p.beta() / p.gamma();
    cubic::leftmost_real_root(cp, cq)
}

fn unique_from_r(p: &Params, r: f64) -> bool {
    let lhs = (r - 1.0 / p.gamma()).powi(3);
    let rhs = 2.25 * p.beta() * p.beta() / (p.gamma() * p.gamma());
    lhs < rhs
}

fn les_from(p: &Params, r: f64, v_e: f64) -> bool {
    r - v_e * v_e < (p.epsilon() * p.gamma()).min(1.0 / p.gamma())
}

pub fn equilibrium(p: &Params, c: f64) -> Result<EquilibriumInfo> {
    let r = r_of_c(p, c)?;
    Ok(equilibrium_from_r(p, c, r))
}

pub(crate) fn equilibrium_from_r(p: &Params, c: f64, r: f64) -> EquilibriumInfo {
    let v_e = equilibrium_v(p, r);
    let w_e = (v_e + p.beta()) / p.gamma();
    let unique = unique_from_r(p, r);
    EquilibriumInfo {
        c,
        v_e,
        w_e,
        unique,
        les: les_from(p, r, v_e),
        ges_small_eps: unique && r - v_e * v_e < 0.0,
    }
}

pub fn is_unique(p: &Params, c: f64) -> Result<bool> {
    Ok(unique_from_r(p, r_of_c(p, c)?))
}

pub fn is_les(p: &Params, c: f64) -> Result<bool> {
    Ok(equilibrium(p, c)?.les)
}

/// Membership flags for the parameter sets of the frozen analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegionClass {
    pub in_e_unique: bool,
    /// Sufficient (not necessary) condition for `E_LES`.
    pub in_e_les_sufficient: bool,
    pub in_e_0: bool,
    pub in_e_ges_small_eps: bool,
}

/// Uniform grid of `n` points on `[-1, 1]`.
pub(crate) fn c_grid(n: usize) -> impl Iterator<Item = f64> {
    let h = 2.0 / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { 1.0 } else { -1.0 + i as f64 * h })
}

pub fn classify_region(p: &Params, c_grid_size: usize) -> Result<RegionClass> {
    if c_grid_size < 3 {
        return Err(Error::invalid(
            "c_grid_size",
            format!("must be at least 3, got {c_grid_size}"),
        ));
    }
    let (a, b, beta, gamma) = (p.a(), p.b(), p.beta(), p.gamma());
    let k = (2.25 * beta * beta / (gamma * gamma)).cbrt();
    let in_e_unique = (a - b).powi(2) > 2.0 * (1.0 - 1.0 / gamma - k);

    let r_minus = r_unchecked(p, -1.0);
    let v_e_plus = equilibrium_v(p, r_unchecked(p, 1.0));
    let in_e_les_sufficient = in_e_unique
        && r_minus < v_e_plus * v_e_plus + (p.epsilon() * gamma).min(1.0 / gamma);

    let in_e_0 = in_e_unique && p.below_fold_bound() && equilibria_left_of_folds(p, c_grid_size);

    Ok(RegionClass {
        in_e_unique,
        in_e_les_sufficient,
        in_e_0,
        in_e_ges_small_eps: in_e_0,
    })
}

/// `v_e(c) < v_m(c)` on the grid, with the gap exceeding ten grid spacings
/// times the largest observed slope of the gap.
fn equilibria_left_of_folds(p: &Params, n: usize) -> bool {
    let h = 2.0 / (n - 1) as f64;
    let mut gaps = Vec::with_capacity(n);
    for c in c_grid(n) {
        let r = r_unchecked(p, c);
        if r <= 0.0 {
            return false;
        }
        let gap = -r.sqrt() - equilibrium_v(p, r);
        if gap <= 0.0 {
            return false;
        }
        gaps.push(gap);
    }
    let max_slope = gaps
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / h)
        .fold(0.0, f64::max);
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    min_gap > 10.0 * h * max_slope
}

fn require_e0(p: &Params) -> Result<()> {
    if classify_region(p, DEFAULT_C_GRID)?.in_e_0 {
        Ok(())
    } else {
        Err(Error::RegionPrecondition(format!(
            "(A, B) = ({}, {}) is not in E_0 for beta = {}, gamma = {}",
            p.a(),
            p.b(),
            p.beta(),
            p.gamma()
        )))
    }
}

pub(crate) fn ensure_e0(p: &Params) -> Result<()> {
    require_e0(p)
}

/// `w_e(-1) > w_m(1)`: predicts absence of tonic spiking for small
/// `epsilon` under any bounded envelope. Requires `(A, B)` in `E_0`.
pub fn no_spiking_condition(p: &Params) -> Result<bool> {
    require_e0(p)?;
    let w_e = equilibrium(p, -1.0)?.w_e;
    let w_m = fold_point(p, 1.0)?.w_m;
    Ok(w_e > w_m)
}

/// Premises (unique equilibria, `A + B < sqrt 2`, `v_e(-1) < v_m(-1)`) and
/// `w_e(-1) < w_m(1)`: predicts tonic spiking under the sign-cosine
/// envelope for small `epsilon` and then small `eta`.
pub fn piecewise_spiking_condition(p: &Params) -> bool {
    let Ok(class) = classify_region(p, DEFAULT_C_GRID) else {
        return false;
    };
    if !class.in_e_unique || !p.below_fold_bound() {
        return false;
    }
    let (Ok(eq_minus), Ok(fold_minus), Ok(fold_plus)) =
        (equilibrium(p, -1.0), fold_point(p, -1.0), fold_point(p, 1.0))
    else {
        return false;
    };
    eq_minus.v_e < fold_minus.v_m && eq_minus.w_e < fold_plus.w_m
}

/// One row of the per-`c` nullcline table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullclineRow {
    pub c: f64,
    pub r: f64,
    pub v_m: f64,
    pub w_m: f64,
    pub v_e: f64,
    pub w_e: f64,
    pub unique: bool,
    pub les: bool,
}

/// Nullcline data on a uniform `c`-grid. Fold coordinates are NaN where
/// `r(c) <= 0`.
pub fn nullcline_table(p: &Params, n: usize) -> Result<Vec<NullclineRow>> {
    if n < 2 {
        return Err(Error::invalid("grid", format!("must be at least 2, got {n}")));
    }
    Ok(c_grid(n)
        .map(|c| {
            let r = r_unchecked(p, c);
            let eq = equilibrium_from_r(p, c, r);
            let (v_m, w_m) = fold_from_r(c, r).map_or((f64::NAN, f64::NAN), |f| (f.v_m, f.w_m));
            NullclineRow {
                c,
                r,
                v_m,
                w_m,
                v_e: eq.v_e,
                w_e: eq.w_e,
                unique: eq.unique,
                les: eq.les,
            }
        })
        .collect())
}
