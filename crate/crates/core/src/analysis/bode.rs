//! Numerical Bode sensitivity integrals with the closed-form right-hand
//! side they are compared against.
//!
//! Continuous, for a strictly proper loop `L`:
//!
//! ```text
//! int_0^inf ln|S(jw)| dw = pi * sum Re(p_u) - (pi/2) lim_{s->inf} s L(s)
//! ```
//!
//! Discrete, for a proper loop:
//!
//! ```text
//! int_{-pi}^{pi} ln|S(e^{jt})| dt = 2 pi * sum ln|p_u| - 2 pi ln|1 + L(inf)|
//! ```
//!
//! where `p_u` are the open-loop poles outside the stability region. Both
//! identities need a stable closed loop; the report says whether that holds.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate_log_singular, LogSingularity, Tolerance};
use crate::tf::{classify_poles, Domain, TransferFunction, STABILITY_TOL};

/// Open-loop poles this close to the stability boundary are treated as
/// lying on it (they produce integrable log singularities in `ln|S|`).
const BOUNDARY_POLE_TOL: f64 = 1e-7;
/// Boundary angles this close to 0 or pi are snapped onto the endpoint.
const ANGLE_SNAP: f64 = 1e-6;
/// Largest contribution allowed for each analytic end-patch.
const PATCH_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodeIntegralReport {
    /// The integral, computed numerically.
    pub value: f64,
    /// Continuous: sum of `Re p` over unstable open-loop poles.
    /// Discrete: sum of `ln|p|` over open-loop poles outside the unit circle.
    pub rhp_pole_sum: f64,
    /// Continuous: `lim s L(s)`. Discrete: `ln|1 + L(inf)|`.
    pub limit_term: f64,
    /// Right-hand side assembled from the two terms above.
    pub predicted: f64,
    /// Closed loop is stable, so the identity applies.
    pub admissible: bool,
    pub error_estimate: f64,
}

/// `ln|1 + L|` written as `log1p` so it stays accurate when `|L|` is tiny.
fn ln_abs_one_plus(v: Complex64) -> f64 {
    0.5 * (2.0 * v.re + v.norm_sqr()).ln_1p()
}

pub fn bode_integral(loop_tf: &TransferFunction) -> Result<BodeIntegralReport> {
    if !loop_tf.is_proper() {
        return Err(Error::ImproperLoop);
    }
    let closed = loop_tf.characteristic().roots()?;
    let admissible = classify_poles(loop_tf.domain(), &closed).is_stable();
    let open_poles = loop_tf.poles()?;
    match loop_tf.domain() {
        Domain::Continuous => continuous(loop_tf, &open_poles, &closed, admissible),
        Domain::Discrete { .. } => discrete(loop_tf, &open_poles, admissible),
    }
}

fn continuous(
    l: &TransferFunction,
    open_poles: &[Complex64],
    closed: &[Complex64],
    admissible: bool,
) -> Result<BodeIntegralReport> {
    let limit_term = match l.relative_degree() {
        1 => l.num().leading() / l.den().leading(),
        d if d >= 2 => 0.0,
        _ => return Err(Error::ImproperLoop),
    };
    let rhp_pole_sum: f64 = open_poles.iter().filter(|p| p.re > STABILITY_TOL).map(|p| p.re).sum();

    let zeros = l.zeros()?;
    let scale =
        closed.iter().chain(open_poles).chain(&zeros).map(|p| p.norm()).filter(|&m| m > 0.0).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };

    // w = scale * tan(phi) maps [0, inf) onto [0, pi/2).
    let integrand = |phi: f64| -> f64 {
        let w = scale * phi.tan();
        let c = phi.cos();
        match l.eval(Complex64::new(0.0, w)) {
            Ok(v) => -ln_abs_one_plus(v) * scale / (c * c),
            Err(_) => f64::NAN,
        }
    };
    let singularities: Vec<LogSingularity> = open_poles
        .iter()
        .filter(|p| p.re.abs() <= BOUNDARY_POLE_TOL * p.norm().max(1.0) && p.im >= 0.0)
        .map(|p| {
            let phi = (p.im / scale).atan();
            let phi = if phi < ANGLE_SNAP { 0.0 } else { phi };
            let c = phi.cos();
            LogSingularity { at: phi, weight: scale / (c * c) }
        })
        .collect();

    let est = integrate_log_singular(integrand, 0.0, FRAC_PI_2, &singularities, Tolerance::default(), PATCH_TOL)?;
    Ok(BodeIntegralReport {
        value: est.value,
        rhp_pole_sum,
        limit_term,
        predicted: PI * rhp_pole_sum - FRAC_PI_2 * limit_term,
        admissible,
        error_estimate: est.error,
    })
}

fn discrete(l: &TransferFunction, open_poles: &[Complex64], admissible: bool) -> Result<BodeIntegralReport> {
    let at_inf = l.value_at_infinity().ok_or(Error::ImproperLoop)?;
    let limit_term = ln_abs_one_plus(Complex64::new(at_inf, 0.0));
    let rhp_pole_sum: f64 = open_poles.iter().filter(|p| p.norm() > 1.0 + STABILITY_TOL).map(|p| p.norm().ln()).sum();

    let integrand = |theta: f64| -> f64 {
        match l.eval(Complex64::from_polar(1.0, theta)) {
            Ok(v) => -ln_abs_one_plus(v),
            Err(_) => f64::NAN,
        }
    };
    let singularities: Vec<LogSingularity> = open_poles
        .iter()
        .filter(|p| (p.norm() - 1.0).abs() <= BOUNDARY_POLE_TOL && p.im >= 0.0)
        .map(|p| {
            let t = p.arg().abs();
            let at = if t < ANGLE_SNAP {
                0.0
            } else if PI - t < ANGLE_SNAP {
                PI
            } else {
                t
            };
            LogSingularity { at, weight: 1.0 }
        })
        .collect();
    // A pole pair split by rounding (e.g. a double pole at z = 1 found as
    // 1 +- 1e-8 j) lands on one side of the real axis only once; count both.
    let singularities = fold_conjugates(open_poles, singularities);

    let half = integrate_log_singular(integrand, 0.0, PI, &singularities, Tolerance::default(), PATCH_TOL)?;
    Ok(BodeIntegralReport {
        value: 2.0 * half.value,
        rhp_pole_sum,
        limit_term,
        predicted: 2.0 * PI * (rhp_pole_sum - limit_term),
        admissible,
        error_estimate: 2.0 * half.error,
    })
}

/// Real-axis boundary poles (angle 0 or pi) whose conjugate partner was
/// filtered out by `im >= 0` must still count once each.
fn fold_conjugates(open_poles: &[Complex64], mut found: Vec<LogSingularity>) -> Vec<LogSingularity> {
    let missing = open_poles
        .iter()
        .filter(|p| (p.norm() - 1.0).abs() <= BOUNDARY_POLE_TOL && p.im < 0.0)
        .filter(|p| {
            let t = p.arg().abs();
            t < ANGLE_SNAP || PI - t < ANGLE_SNAP
        })
        .map(|p| LogSingularity { at: if p.arg().abs() < ANGLE_SNAP { 0.0 } else { PI }, weight: 1.0 });
    found.extend(missing);
    found
}
