//! Real roots of the depressed cubic `x^3 + p x + q = 0`.

use std::f64::consts::PI;

/// All real roots in ascending order (one or three, repeated roots listed
/// once per multiplicity as returned by the trigonometric branch).
pub fn depressed_real_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    let mut roots = if disc > 0.0 || p >= 0.0 {
        vec![cardano_single(p, q)]
    } else {
        trigonometric(p, q).to_vec()
    };
    for r in roots.iter_mut() {
        *r = polish(p, q, *r);
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Leftmost real root, polished by Newton.
pub fn leftmost_real_root(p: f64, q: f64) -> f64 {
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    let x = if disc > 0.0 || p >= 0.0 {
        cardano_single(p, q)
    } else {
        let [a, b, c] = trigonometric(p, q);
        a.min(b).min(c)
    };
    polish(p, q, x)
}

fn cardano_single(p: f64, q: f64) -> f64 {
    let s = (0.25 * q * q + p * p * p / 27.0).max(0.0).sqrt();
    // pick the cube-root argument of larger magnitude to avoid cancellation
    let big = if q >= 0.0 { -0.5 * q - s } else { -0.5 * q + s };
    let t = big.cbrt();
    if t == 0.0 {
        return 0.0;
    }
    t - p / (3.0 * t)
}

fn trigonometric(p: f64, q: f64) -> [f64; 3] {
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = (1.5 * q / p * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
    let theta = arg.acos() / 3.0;
    [
        m * theta.cos(),
        m * (theta - 2.0 * PI / 3.0).cos(),
        m * (theta - 4.0 * PI / 3.0).cos(),
    ]
}

fn polish(p: f64, q: f64, mut x: f64) -> f64 {
    for _ in 0..8 {
        let f = x * x * x + p * x + q;
        let df = 3.0 * x * x + p;
        if df == 0.0 {
            break;
        }
        let step = f / df;
        x -= step;
        if step.abs() <= 1e-12 * x.abs().max(1.0) {
            break;
        }
    }
    x
}
