#![allow(dead_code)]

use doblab_core::Complex64;

/// Durand-Kerner (Weierstrass) simultaneous iteration, independent of the
/// library's eigenvalue-based root finder. `coeffs` is highest degree
/// first with a nonzero leading term.
pub fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let lead = coeffs[0];
    let a: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let n = a.len() - 1;
    let bound = 1.0 + a[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::from_polar(1.0, 0.4);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * (0.5 * bound)).collect();
    let eval = |x: Complex64| a.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c);
    for _ in 0..5000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            moved = moved.max(step.norm() / z[i].norm().max(1e-300));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Largest distance from each expected root to its nearest match in
/// `got`, with each match used once.
pub fn match_roots(expected: &[Complex64], got: &[Complex64]) -> f64 {
    assert_eq!(expected.len(), got.len(), "root count");
    let mut used = vec![false; got.len()];
    let mut worst = 0.0f64;
    for e in expected {
        let (j, d) = got
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, g)| (j, (g - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Plain coefficient convolution, highest degree first.
pub fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let pad = |v: &[f64]| {
        let mut p = vec![0.0; n - v.len()];
        p.extend_from_slice(v);
        p
    };
    pad(a).iter().zip(pad(b)).map(|(x, y)| x + y).collect()
}

/// Characteristic polynomial of the sampled PD + DOb position loop,
/// expanded by hand from its blocks.
pub fn outer_dt_characteristic(alpha: f64, g: f64, kp: f64, kd: f64, ts: f64) -> Vec<f64> {
    let c = alpha * g * ts;
    let pd = [kp + kd / ts, -kd / ts];
    let ci = [alpha * (1.0 + g * ts), -alpha];
    let gp = [ts * ts / 2.0, ts * ts / 2.0];
    let num = conv(&conv(&pd, &ci), &gp);
    let den = conv(&conv(&[1.0, 0.0], &[1.0, -(1.0 - c)]), &[1.0, -2.0, 1.0]);
    add(&den, &num)
}

/// Same for the continuous loop with an ideal velocity measurement:
/// `s^3 + alpha (g s^2 + (s + g)(K_D s + K_P))`.
pub fn outer_ct_characteristic(alpha: f64, g: f64, kp: f64, kd: f64) -> Vec<f64> {
    vec![1.0, alpha * (g + kd), alpha * (kp + g * kd), alpha * g * kp]
}
