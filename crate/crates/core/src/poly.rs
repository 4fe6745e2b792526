//! Real-coefficient polynomials with exact arithmetic on coefficient vectors
//! and root extraction through the companion matrix.
//!
//! Coefficients are stored highest degree first, so `[1, -2, 1]` is
//! `z^2 - 2z + 1`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;
const POLISH_STEPS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from coefficients, highest degree first. Leading
    /// exact zeros are dropped; an empty or all-zero vector gives the zero
    /// polynomial.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        let first = coeffs.iter().position(|&c| c != 0.0);
        match first {
            Some(0) => {}
            Some(i) => {
                coeffs.drain(..i);
            }
            None => coeffs = vec![0.0],
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Monic polynomial with the given roots. Complex roots must come in
    /// conjugate pairs for the result to be real; imaginary residue left by
    /// rounding is discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            acc = next;
        }
        Polynomial::new(acc.into_iter().map(|c| c.re).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Sum of `|c_k| |z|^k`, the natural scale for rounding error in
    /// [`Polynomial::eval_complex`].
    pub fn eval_abs_bound(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Polynomial::zero();
        }
        Polynomial::new(self.coeffs[..n].iter().enumerate().map(|(i, &c)| c * (n - i) as f64).collect::<Vec<_>>())
    }

    /// Coefficients in reverse order: `z^n p(1/z)`.
    pub fn reversed(&self) -> Vec<f64> {
        self.coeffs.iter().rev().copied().collect()
    }

    pub fn scale(&self, k: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Polynomial::one(), |acc, _| &acc * self)
    }

    /// All complex roots, counted with multiplicity, sorted by real then
    /// imaginary part. A nonzero constant has no roots.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::UndefinedRoots);
        }
        if !self.is_finite() {
            return Err(Error::NonFiniteCoefficient);
        }
        let trailing = self.coeffs.iter().rev().take_while(|&&c| c == 0.0).count();
        let core = &self.coeffs[..self.coeffs.len() - trailing];
        let mut roots = vec![Complex64::new(0.0, 0.0); trailing];
        roots.extend(match core.len() - 1 {
            0 => Vec::new(),
            1 => vec![Complex64::new(-core[1] / core[0], 0.0)],
            2 => quadratic_roots(core[0], core[1], core[2]),
            _ => {
                let p = Polynomial::new(core.to_vec());
                companion_roots(&p)?.into_iter().map(|r| polish(&p, r)).collect()
            }
        });
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        // Citardauq form avoids cancellation in the smaller root.
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        vec![Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn companion_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    let n = p.degree();
    let lead = p.leading();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (j, &c) in p.coeffs()[1..].iter().enumerate() {
        m[(0, j)] = -c / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    balance(&mut m);
    let schur = Schur::try_new(m, f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenNonConvergence { degree: n })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable. Leaves eigenvalues unchanged, bit for bit.
fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= inv;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// A few Newton steps on the original polynomial, keeping whichever
/// iterate has the smallest residual.
fn polish(p: &Polynomial, mut root: Complex64) -> Complex64 {
    let dp = p.derivative();
    let mut best = root;
    let mut best_res = p.eval_complex(root).norm();
    for _ in 0..POLISH_STEPS {
        if best_res == 0.0 {
            break;
        }
        let d = dp.eval_complex(root);
        if d.norm() == 0.0 {
            break;
        }
        root -= p.eval_complex(root) / d;
        if !(root.re.is_finite() && root.im.is_finite()) {
            break;
        }
        let res = p.eval_complex(root).norm();
        if res < best_res {
            best = root;
            best_res = res;
        } else {
            break;
        }
    }
    best
}

fn zip_add(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, &c) in a.iter().enumerate() {
        out[n - a.len() + i] += c;
    }
    for (i, &c) in b.iter().enumerate() {
        out[n - b.len() + i] += sign * c;
    }
    out
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::new(zip_add(&self.coeffs, &rhs.coeffs, 1.0))
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::new(zip_add(&self.coeffs, &rhs.coeffs, -1.0))
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect::<Vec<_>>())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.degree();
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| match n - i {
                0 => format!("{c}"),
                1 => format!("{c}·x"),
                k => format!("{c}·x^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}
