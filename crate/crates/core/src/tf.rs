//! Rational transfer functions in the continuous (`s`) or discrete (`z`)
//! domain.
//!
//! Values are never reduced implicitly: a pole-zero pair that cancels in
//! exact arithmetic stays in the stored form until [`TransferFunction::reduce`]
//! is called. Evaluation, frequency response and stability classification
//! give the same answer for the reduced and unreduced forms away from the
//! cancelled point.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Boundary band for stability classification (`|Re p|` or `||p| - 1|`).
pub const STABILITY_TOL: f64 = 1e-9;

/// Multiple of machine epsilon below which a denominator value is treated
/// as an exact zero relative to its rounding bound.
const POLE_HIT_ULPS: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Continuous,
    Discrete { ts: f64 },
}

impl Domain {
    pub fn discrete(ts: f64) -> Result<Self> {
        if !(ts.is_finite() && ts > 0.0) {
            return Err(Error::invalid(format!("sampling period must be > 0, got {ts}")));
        }
        Ok(Domain::Discrete { ts })
    }

    pub fn sampling_period(&self) -> Option<f64> {
        match *self {
            Domain::Continuous => None,
            Domain::Discrete { ts } => Some(ts),
        }
    }

    /// `pi / ts` for discrete domains.
    pub fn nyquist(&self) -> Option<f64> {
        self.sampling_period().map(|ts| PI / ts)
    }

    /// The complex point on the stability boundary at frequency `omega`.
    pub fn boundary_point(&self, omega: f64) -> Complex64 {
        match *self {
            Domain::Continuous => Complex64::new(0.0, omega),
            Domain::Discrete { ts } => Complex64::from_polar(1.0, omega * ts),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connection {
    Series,
    Parallel,
    NegativeFeedback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub class: Stability,
    /// Pole with the largest real part (continuous) or modulus (discrete).
    /// `None` when the denominator is constant.
    pub worst_pole: Option<Complex64>,
}

impl StabilityVerdict {
    /// Marginal counts as not stable.
    pub fn is_stable(&self) -> bool {
        self.class == Stability::Stable
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyResponse {
    pub points: Vec<(f64, Complex64)>,
}

impl FrequencyResponse {
    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1.norm())
    }

    pub fn phases(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1.arg())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
    domain: Domain,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial, domain: Domain) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if let Domain::Discrete { ts } = domain {
            Domain::discrete(ts)?;
        }
        Ok(TransferFunction { num, den, domain })
    }

    pub fn continuous(num: impl Into<Vec<f64>>, den: impl Into<Vec<f64>>) -> Result<Self> {
        Self::new(Polynomial::new(num), Polynomial::new(den), Domain::Continuous)
    }

    pub fn discrete(num: impl Into<Vec<f64>>, den: impl Into<Vec<f64>>, ts: f64) -> Result<Self> {
        Self::new(Polynomial::new(num), Polynomial::new(den), Domain::discrete(ts)?)
    }

    pub fn gain(k: f64, domain: Domain) -> Result<Self> {
        Self::new(Polynomial::constant(k), Polynomial::one(), domain)
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn relative_degree(&self) -> isize {
        if self.num.is_zero() {
            return isize::MAX;
        }
        self.den.degree() as isize - self.num.degree() as isize
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree() >= 0
    }

    /// `lim L(p)` as `|p| -> infinity`; `None` for improper functions.
    pub fn value_at_infinity(&self) -> Option<f64> {
        match self.relative_degree() {
            0 => Some(self.num.leading() / self.den.leading()),
            d if d > 0 => Some(0.0),
            _ => None,
        }
    }

    /// Closed-loop characteristic polynomial `den + num` of `1 + L = 0`.
    pub fn characteristic(&self) -> Polynomial {
        &self.den + &self.num
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num.is_zero() {
            return Ok(Vec::new());
        }
        self.num.roots()
    }

    /// `num(p) / den(p)` by Horner evaluation. Points outside the unit
    /// circle are evaluated through the reversed polynomials in `1/p`, which
    /// keeps large-|p| evaluation free of overflow and cancellation.
    pub fn eval(&self, p: Complex64) -> Result<Complex64> {
        let (n, d, d_bound) = if p.norm() <= 1.0 {
            (self.num.eval_complex(p), self.den.eval_complex(p), self.den.eval_abs_bound(p))
        } else {
            let w = p.inv();
            let n = eval_ascending(self.num.coeffs(), w);
            let d = eval_ascending(self.den.coeffs(), w);
            let bound = self.den.coeffs().iter().rev().fold(0.0, |acc, &c| acc * w.norm() + c.abs());
            let shift = self.num.degree() as i32 - self.den.degree() as i32;
            (n * p.powi(shift), d, bound)
        };
        if d.norm() <= POLE_HIT_ULPS * f64::EPSILON * d_bound {
            return Err(Error::EvaluationAtPole { re: p.re, im: p.im });
        }
        Ok(n / d)
    }

    /// Value on the stability boundary: `s = j omega` or `z = e^{j omega ts}`.
    pub fn eval_at_frequency(&self, omega: f64) -> Result<Complex64> {
        self.eval(self.domain.boundary_point(omega)).map_err(|_| Error::FrequencyAtPole { omega })
    }

    pub fn freq_response(&self, grid: &[f64]) -> Result<FrequencyResponse> {
        check_grid(self.domain, grid)?;
        let points = grid.iter().map(|&w| self.eval_at_frequency(w).map(|v| (w, v))).collect::<Result<Vec<_>>>()?;
        Ok(FrequencyResponse { points })
    }

    pub fn connect(&self, other: &TransferFunction, mode: Connection) -> Result<TransferFunction> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch(format!("{:?} vs {:?}", self.domain, other.domain)));
        }
        let (num, den) = match mode {
            Connection::Series => (&self.num * &other.num, &self.den * &other.den),
            Connection::Parallel if self.den == other.den => (&self.num + &other.num, self.den.clone()),
            Connection::Parallel => (&(&self.num * &other.den) + &(&other.num * &self.den), &self.den * &other.den),
            Connection::NegativeFeedback => {
                (&self.num * &other.den, &(&self.den * &other.den) + &(&self.num * &other.num))
            }
        };
        TransferFunction::new(num, den, self.domain)
    }

    pub fn series(&self, other: &TransferFunction) -> Result<TransferFunction> {
        self.connect(other, Connection::Series)
    }

    pub fn parallel(&self, other: &TransferFunction) -> Result<TransferFunction> {
        self.connect(other, Connection::Parallel)
    }

    pub fn feedback(&self, other: &TransferFunction) -> Result<TransferFunction> {
        self.connect(other, Connection::NegativeFeedback)
    }

    /// Cancels numerator/denominator root pairs closer than
    /// `tolerance * max(1, |pole|)`. Never called by the analysis paths.
    pub fn reduce(&self, tolerance: f64) -> Result<TransferFunction> {
        if self.num.is_zero() {
            return TransferFunction::new(Polynomial::zero(), Polynomial::one(), self.domain);
        }
        let mut zeros = self.num.roots()?;
        let mut poles = Vec::new();
        for p in self.den.roots()? {
            let hit = zeros
                .iter()
                .enumerate()
                .filter(|(_, z)| (**z - p).norm() <= tolerance * p.norm().max(1.0))
                .min_by(|a, b| (*a.1 - p).norm().total_cmp(&(*b.1 - p).norm()))
                .map(|(i, _)| i);
            match hit {
                Some(i) => {
                    zeros.swap_remove(i);
                }
                None => poles.push(p),
            }
        }
        let num = Polynomial::from_roots(&zeros).scale(self.num.leading());
        let den = Polynomial::from_roots(&poles).scale(self.den.leading());
        TransferFunction::new(num, den, self.domain)
    }

    pub fn stability(&self) -> Result<StabilityVerdict> {
        Ok(classify_poles(self.domain, &self.poles()?))
    }

    pub fn is_stable(&self) -> Result<StabilityVerdict> {
        self.stability()
    }

    /// Runs a discrete transfer function as a direct-form I difference
    /// equation from rest. Sums and the output history are carried in
    /// double-double arithmetic, so poles on the unit circle (integrators)
    /// do not amplify rounding over long runs.
    pub fn filter(&self, input: &[f64]) -> Result<Vec<f64>> {
        if !matches!(self.domain, Domain::Discrete { .. }) {
            return Err(Error::DomainMismatch("filter needs a discrete transfer function".into()));
        }
        if !self.is_proper() {
            return Err(Error::invalid("filter needs a proper transfer function"));
        }
        let n = self.den.degree();
        let a = self.den.coeffs();
        let mut b = vec![0.0; n + 1 - self.num.coeffs().len()];
        b.extend_from_slice(self.num.coeffs());
        let mut hist: Vec<Dd> = Vec::with_capacity(input.len());
        for k in 0..input.len() {
            let mut acc = Dd::ZERO;
            for (i, &bi) in b.iter().enumerate().take(k + 1) {
                acc = acc.add_prod(bi, Dd::from(input[k - i]));
            }
            for (i, &ai) in a.iter().enumerate().skip(1).take(k) {
                acc = acc.add_prod(-ai, hist[k - i]);
            }
            hist.push(acc.div(a[0]));
        }
        Ok(hist.into_iter().map(|v| v.hi).collect())
    }

    /// `(num(p), den(p))` scaled by a common factor: `p^{-m}` with `m` the
    /// larger degree when `|p| > 1`, otherwise unscaled. Their ratio is the
    /// transfer function's value.
    pub fn eval_parts(&self, p: Complex64) -> (Complex64, Complex64) {
        if p.norm() <= 1.0 {
            (self.num.eval_complex(p), self.den.eval_complex(p))
        } else {
            let w = p.inv();
            let m = self.num.degree().max(self.den.degree());
            let n = eval_ascending(self.num.coeffs(), w) * w.powi((m - self.num.degree()) as i32);
            let d = eval_ascending(self.den.coeffs(), w) * w.powi((m - self.den.degree()) as i32);
            (n, d)
        }
    }
}

/// Rejects grids that are not strictly increasing or run past Nyquist.
pub(crate) fn check_grid(domain: Domain, grid: &[f64]) -> Result<()> {
    if let Some(index) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::GridNotIncreasing { index: index + 1 });
    }
    if let Some(nyq) = domain.nyquist() {
        if let Some(&omega) = grid.iter().find(|&&w| w > nyq * (1.0 + 1e-12)) {
            return Err(Error::AboveNyquist { omega, nyquist: nyq });
        }
    }
    Ok(())
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    /// `self + c * x`.
    fn add_prod(self, c: f64, x: Dd) -> Dd {
        let p = c * x.hi;
        let p_err = c.mul_add(x.hi, -p);
        let s = Dd::two_sum(self.hi, p);
        let lo = s.lo + self.lo + p_err + c * x.lo;
        Dd::two_sum(s.hi, lo)
    }

    fn div(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let r = (-q1).mul_add(d, self.hi) + self.lo;
        Dd::two_sum(q1, r / d)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
}

/// Stable iff every pole is strictly inside the stability region by more
/// than [`STABILITY_TOL`]; poles within the band are marginal.
pub fn classify_poles(domain: Domain, poles: &[Complex64]) -> StabilityVerdict {
    let key = |p: &Complex64| match domain {
        Domain::Continuous => p.re,
        Domain::Discrete { .. } => p.norm() - 1.0,
    };
    let worst = poles.iter().copied().max_by(|a, b| key(a).total_cmp(&key(b)));
    let class = match worst.as_ref().map(key) {
        None => Stability::Stable,
        Some(m) if m < -STABILITY_TOL => Stability::Stable,
        Some(m) if m <= STABILITY_TOL => Stability::Marginal,
        Some(_) => Stability::Unstable,
    };
    StabilityVerdict { class, worst_pole: worst }
}

/// `sum c_i w^i` for coefficients `c` stored highest-degree first, i.e. the
/// reversed polynomial evaluated at `w`.
fn eval_ascending(coeffs: &[f64], w: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * w + c)
}
