//! Globally adaptive 15-point Gauss-Kronrod quadrature, with an analytic
//! end-patch for integrable logarithmic singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    /// Relative to the integral of `|f|`.
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-11, max_intervals: 20_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub abs_value: f64,
}

/// `f ~ weight * ln|x - at| + smooth` near `at`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSingularity {
    pub at: f64,
    pub weight: f64,
}

struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for i in 0..7 {
        let dx = h * XGK[i];
        let (f1, f2) = (f(c - dx), f(c + dx));
        k += WGK[i] * (f1 + f2);
        abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    Estimate { value: k * h, error: ((k - g) * h).abs(), abs_value: abs * h.abs() }
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the total error meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, abs_value: 0.0 });
    }
    let first = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, est: first });
    let mut total = first;
    loop {
        let target = tol.abs.max(tol.rel * total.abs_value);
        if !total.value.is_finite() || !total.error.is_finite() {
            return Err(Error::QuadratureNonConvergence { achieved: f64::INFINITY, requested: target });
        }
        if total.error <= target {
            return Ok(total);
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::QuadratureNonConvergence { achieved: total.error, requested: target });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(Error::QuadratureNonConvergence { achieved: total.error, requested: target });
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        total.abs_value += left.abs_value + right.abs_value - worst.est.abs_value;
        heap.push(Segment { a: worst.a, b: mid, est: left });
        heap.push(Segment { a: mid, b: worst.b, est: right });
        // Re-sum occasionally so running corrections do not drift.
        if heap.len() % 256 == 0 {
            total = heap.iter().fold(Estimate { value: 0.0, error: 0.0, abs_value: 0.0 }, |acc, s| Estimate {
                value: acc.value + s.est.value,
                error: acc.error + s.est.error,
                abs_value: acc.abs_value + s.est.abs_value,
            });
        }
    }
}

/// Local contribution `int_0^delta (w ln t + c0) dt` with `c0` fitted so the
/// form matches `f` at distance `delta` from the singularity.
fn end_patch(f_at_delta: f64, weight: f64, delta: f64) -> f64 {
    delta * f_at_delta - weight * delta
}

/// Shrinks the analytic patch until its contribution is below
/// `patch_tol`, returning `(delta, contribution)`.
fn choose_patch<F: Fn(f64) -> f64>(f: &F, at: f64, dir: f64, weight: f64, span: f64, patch_tol: f64) -> (f64, f64) {
    let mut delta = span * 1e-3;
    loop {
        let contrib = end_patch(f(at + dir * delta), weight, delta);
        if contrib.abs() < patch_tol || delta < span * 1e-14 {
            return (delta, contrib);
        }
        delta *= 0.5;
    }
}

/// Integrates `f` over `[a, b]` where `f` has logarithmic singularities at
/// the listed points. The interval is split at each singularity, a short
/// end-interval next to each singular point is integrated in closed form
/// from the `weight * ln|x - at|` asymptote, and the rest goes through
/// [`integrate`].
pub fn integrate_log_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    singularities: &[LogSingularity],
    tol: Tolerance,
    patch_tol: f64,
) -> Result<Estimate> {
    let mut pts: Vec<LogSingularity> = singularities.iter().copied().filter(|s| s.at >= a && s.at <= b).collect();
    pts.sort_by(|x, y| x.at.total_cmp(&y.at));
    pts.dedup_by(|x, y| {
        if x.at == y.at {
            y.weight += x.weight;
            true
        } else {
            false
        }
    });

    let weight_at = |x: f64| pts.iter().find(|s| s.at == x).map(|s| s.weight);
    let mut breaks = vec![a];
    breaks.extend(pts.iter().map(|s| s.at).filter(|&x| x > a && x < b));
    breaks.push(b);

    let mut total = Estimate { value: 0.0, error: 0.0, abs_value: 0.0 };
    let pieces = (breaks.len() - 1) as f64;
    let piece_tol = Tolerance { abs: tol.abs / pieces, ..tol };
    for w in breaks.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        if let Some(weight) = weight_at(lo) {
            let (d, c) = choose_patch(&f, lo, 1.0, weight, span, patch_tol);
            lo += d;
            total.value += c;
            total.abs_value += c.abs();
            total.error += c.abs() * 1e-6;
        }
        if let Some(weight) = weight_at(hi) {
            let (d, c) = choose_patch(&f, hi, -1.0, weight, span, patch_tol);
            hi -= d;
            total.value += c;
            total.abs_value += c.abs();
            total.error += c.abs() * 1e-6;
        }
        let est = integrate(&f, lo, hi, piece_tol)?;
        total.value += est.value;
        total.error += est.error;
        total.abs_value += est.abs_value;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x, 0.0, 3.0, Tolerance::default()).unwrap();
        assert!((r.value - 9.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_oscillatory() {
        let r = integrate(|x| x.sin(), 0.0, PI, Tolerance::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn plain_log_endpoint() {
        // int_0^1 ln x dx = -1, handled by bisection alone
        let r = integrate(|x| x.ln(), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-9);
    }

    #[test]
    fn patched_interior_singularity() {
        // int_0^2 ln|x - 1| dx = -2
        let f = |x: f64| (x - 1.0).abs().ln();
        let s = [LogSingularity { at: 1.0, weight: 1.0 }];
        let r = integrate_log_singular(f, 0.0, 2.0, &s, Tolerance::default(), 1e-9).unwrap();
        assert!((r.value + 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn patched_log_with_offset() {
        // int_0^pi ln|2 sin(t/2)| dt = 0, singular at t = 0 with weight 1
        let f = |t: f64| (2.0 * (t / 2.0).sin()).abs().ln();
        let s = [LogSingularity { at: 0.0, weight: 1.0 }];
        let r = integrate_log_singular(f, 0.0, PI, &s, Tolerance::default(), 1e-9).unwrap();
        assert!(r.value.abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn non_convergence_is_reported() {
        let tight = Tolerance { abs: 1e-30, rel: 0.0, max_intervals: 4 };
        let e = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, tight).unwrap_err();
        assert!(matches!(e, Error::QuadratureNonConvergence { .. }));
    }
}
