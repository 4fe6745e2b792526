use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tf::{Domain, TransferFunction};

/// Number of points in the coarse search grid.
pub const PEAK_GRID: usize = 4096;

const GOLDEN_ITERS: usize = 200;
const REFINE_GAIN: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    /// Frequency of the maximum in rad/s. `f64::INFINITY` when the
    /// supremum is the high-frequency asymptote of a continuous system.
    pub omega: f64,
    pub value: f64,
}

/// Maximum of `|tf|` on the stability boundary.
///
/// Discrete systems are scanned on `[0, pi/ts]` with both endpoints
/// evaluated exactly at `z = 1` and `z = -1`; continuous systems on a
/// logarithmic grid spanning three decades beyond the pole/zero moduli,
/// plus the DC value and the high-frequency limit. The best grid point is
/// refined by golden-section search over its two neighbouring intervals.
pub fn sensitivity_peak(tf: &TransferFunction) -> Result<Peak> {
    if !tf.stability()?.is_stable() {
        return Err(Error::UnstableSystem);
    }
    match tf.domain() {
        Domain::Discrete { ts } => discrete_peak(tf, ts),
        Domain::Continuous => continuous_peak(tf),
    }
}

fn discrete_peak(tf: &TransferFunction, ts: f64) -> Result<Peak> {
    let nyq = PI / ts;
    let last = PEAK_GRID - 1;
    let mag_at_index = |i: usize| -> Result<f64> {
        let z = match i {
            0 => Complex64::new(1.0, 0.0),
            i if i == last => Complex64::new(-1.0, 0.0),
            i => Complex64::from_polar(1.0, PI * i as f64 / last as f64),
        };
        Ok(tf.eval(z)?.norm())
    };
    let omegas: Vec<f64> = (0..PEAK_GRID).map(|i| if i == last { nyq } else { nyq * i as f64 / last as f64 }).collect();
    let mags = (0..PEAK_GRID).map(mag_at_index).collect::<Result<Vec<_>>>()?;
    let theta_mag = |w: f64| tf.eval(Complex64::from_polar(1.0, w * ts)).map(|v| v.norm());
    refine(&omegas, &mags, theta_mag)
}

fn continuous_peak(tf: &TransferFunction) -> Result<Peak> {
    let mut scales: Vec<f64> =
        tf.poles()?.into_iter().chain(tf.zeros()?).map(|p| p.norm()).filter(|&m| m > 0.0).collect();
    scales.sort_by(f64::total_cmp);
    let lo = scales.first().copied().unwrap_or(1.0) * 1e-3;
    let hi = scales.last().copied().unwrap_or(1.0) * 1e3;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let last = PEAK_GRID - 1;
    let omegas: Vec<f64> = (0..PEAK_GRID)
        .map(|i| match i {
            0 => lo,
            i if i == last => hi,
            i => (llo + (lhi - llo) * i as f64 / last as f64).exp(),
        })
        .collect();
    let mag = |w: f64| tf.eval_at_frequency(w).map(|v| v.norm());
    let mags = omegas.iter().map(|&w| mag(w)).collect::<Result<Vec<_>>>()?;
    // Search in log-frequency so the bracket is scale free.
    let log_omegas: Vec<f64> = omegas.iter().map(|w| w.ln()).collect();
    let mut best = refine(&log_omegas, &mags, |lw| mag(lw.exp()))?;
    best.omega = best.omega.exp();

    let dc = tf.eval(Complex64::new(0.0, 0.0))?.norm();
    if dc > best.value {
        best = Peak { omega: 0.0, value: dc };
    }
    if let Some(limit) = tf.value_at_infinity() {
        if limit.abs() >= best.value {
            best = Peak { omega: f64::INFINITY, value: limit.abs() };
        }
    }
    Ok(best)
}

/// Golden-section refinement around the grid maximum. Returns the grid
/// point itself when refinement does not improve on it.
fn refine<F: Fn(f64) -> Result<f64>>(xs: &[f64], ys: &[f64], f: F) -> Result<Peak> {
    let (imax, &ymax) = ys.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("grid is non-empty");
    let mut best = Peak { omega: xs[imax], value: ymax };
    let mut a = xs[imax.saturating_sub(1)];
    let mut b = xs[(imax + 1).min(xs.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..GOLDEN_ITERS {
        if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    // Refinement only replaces the grid point on a gain above rounding
    // level, so an exactly evaluated endpoint maximum is kept.
    for (x, y) in [(c, fc), (d, fd)] {
        if y > best.value * (1.0 + REFINE_GAIN) {
            best = Peak { omega: x, value: y };
        }
    }
    Ok(best)
}
