//! Inner- and outer-loop transfer functions of a velocity-measurement
//! disturbance observer (DOb) with a PD position controller.
//!
//! `alpha` is the aggregate nominal-to-actual plant ratio
//! `(J_n K_t) / (J_m K_tn)`: `alpha = 1` is a perfect model, and raising the
//! nominal inertia (or lowering the nominal torque constant) raises `alpha`.
//!
//! Continuous-time loops:
//!
//! ```text
//! L_i(s) = alpha g_dob / s                                  (g_v infinite)
//! L_i(s) = alpha g_v g_dob / (s (s + g_v))                  (g_v finite)
//! L_o(s) = L_i(s) + alpha (s + g_dob)(K_D s + K_P) / s^3
//! ```
//!
//! The outer-loop form is the sum of the inner-loop gain and the
//! PD/compensator path; expanding it over the common denominator
//! `s^3 (s + g_v)` gives `alpha [g_v g_dob s^2 + (s + g_v)(s + g_dob)(K_D s + K_P)]`.
//!
//! Discrete-time loops use `L_i(z) = alpha g_dob ts / (z - 1)` and
//! `L_o(z) = C(z) C_i(z) G_p(z)`.

use std::fmt;
use std::str::FromStr;

use crate::discretize::{backward_euler_pd, zoh_double_integrator};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::{check_grid, Domain, TransferFunction};
use num_complex::Complex64;

/// Half-width of the band around `1 / (1 + g_dob ts)` classified as neutral.
pub const NEUTRAL_BAND: f64 = 1e-12;

/// Bandwidth of the velocity-measurement low-pass filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cutoff {
    Finite(f64),
    Infinite,
}

impl Cutoff {
    pub fn finite(self) -> Option<f64> {
        match self {
            Cutoff::Finite(g) => Some(g),
            Cutoff::Infinite => None,
        }
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinite" | "infinity" | "+inf") {
            return Ok(Cutoff::Infinite);
        }
        let v: f64 = t.parse().map_err(|_| Error::invalid(format!("g_v: cannot parse {t:?}")))?;
        if v.is_infinite() && v > 0.0 {
            return Ok(Cutoff::Infinite);
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("g_v must be > 0 or inf, got {t}")));
        }
        Ok(Cutoff::Finite(v))
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Finite(g) => write!(f, "{g}"),
            Cutoff::Infinite => write!(f, "inf"),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(format!("{name} must be > 0, got {v}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DObParams {
    alpha: f64,
    g_dob: f64,
    g_v: Cutoff,
    ts: Option<f64>,
}

impl DObParams {
    /// Continuous-only parameters with ideal velocity measurement.
    pub fn new(alpha: f64, g_dob: f64) -> Result<Self> {
        Ok(DObParams {
            alpha: positive("alpha", alpha)?,
            g_dob: positive("g_dob", g_dob)?,
            g_v: Cutoff::Infinite,
            ts: None,
        })
    }

    pub fn with_gv(mut self, g_v: Cutoff) -> Result<Self> {
        if let Cutoff::Finite(g) = g_v {
            positive("g_v", g)?;
        }
        self.g_v = g_v;
        Ok(self)
    }

    pub fn with_ts(mut self, ts: f64) -> Result<Self> {
        self.ts = Some(positive("ts", ts)?);
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = positive("alpha", alpha)?;
        Ok(self)
    }

    pub fn with_g_dob(mut self, g_dob: f64) -> Result<Self> {
        self.g_dob = positive("g_dob", g_dob)?;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn g_dob(&self) -> f64 {
        self.g_dob
    }

    pub fn g_v(&self) -> Cutoff {
        self.g_v
    }

    pub fn ts(&self) -> Option<f64> {
        self.ts
    }

    pub fn require_ts(&self) -> Result<f64> {
        self.ts.ok_or_else(|| Error::invalid("sampling period ts is required for discrete blocks"))
    }

    /// `alpha * g_dob * ts`, the quantity every discrete constraint bounds.
    pub fn alpha_g_ts(&self) -> Result<f64> {
        Ok(self.alpha * self.g_dob * self.require_ts()?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuterGains {
    pub kp: f64,
    pub kd: f64,
}

impl OuterGains {
    pub fn new(kp: f64, kd: f64) -> Result<Self> {
        if !(kp.is_finite() && kp > 0.0) {
            return Err(Error::invalid(format!("kP must be > 0, got {kp}")));
        }
        if !(kd.is_finite() && kd >= 0.0) {
            return Err(Error::invalid(format!("kD must be >= 0, got {kd}")));
        }
        Ok(OuterGains { kp, kd })
    }
}

/// Open loop `L` with its sensitivity `S = 1/(1+L)` and complementary
/// sensitivity `T = L/(1+L)`, sharing the denominator `den(L) + num(L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopSet {
    pub l: TransferFunction,
    pub s: TransferFunction,
    pub t: TransferFunction,
}

impl LoopSet {
    pub fn from_open_loop(l: TransferFunction) -> Result<Self> {
        let char_poly = l.characteristic();
        let s = TransferFunction::new(l.den().clone(), char_poly.clone(), l.domain())?;
        let t = TransferFunction::new(l.num().clone(), char_poly, l.domain())?;
        Ok(LoopSet { l, s, t })
    }

    /// `(S, T)` at one boundary frequency, formed as `d / (d + n)` and
    /// `n / (d + n)` from the open loop's numerator and denominator values.
    /// Unlike evaluating `s` and `t` separately this never touches the
    /// rounded closed-loop coefficients, and `S + T = 1` to rounding.
    pub fn eval_at_frequency(&self, omega: f64) -> Result<(Complex64, Complex64)> {
        let (n, d) = self.l.eval_parts(self.l.domain().boundary_point(omega));
        let c = n + d;
        if c.norm() <= CLOSED_LOOP_POLE_ULPS * f64::EPSILON * (n.norm() + d.norm()) {
            return Err(Error::FrequencyAtPole { omega });
        }
        Ok((d / c, n / c))
    }

    /// [`LoopSet::eval_at_frequency`] over a strictly increasing grid.
    pub fn freq_response(&self, grid: &[f64]) -> Result<Vec<(f64, Complex64, Complex64)>> {
        check_grid(self.l.domain(), grid)?;
        grid.iter().map(|&w| self.eval_at_frequency(w).map(|(s, t)| (w, s, t))).collect()
    }
}

const CLOSED_LOOP_POLE_ULPS: f64 = 64.0;

pub fn inner_open_loop_ct(p: &DObParams) -> Result<TransferFunction> {
    match p.g_v {
        Cutoff::Infinite => TransferFunction::continuous(vec![p.alpha * p.g_dob], vec![1.0, 0.0]),
        Cutoff::Finite(gv) => TransferFunction::continuous(vec![p.alpha * gv * p.g_dob], vec![1.0, gv, 0.0]),
    }
}

pub fn inner_loop_ct(p: &DObParams) -> Result<LoopSet> {
    LoopSet::from_open_loop(inner_open_loop_ct(p)?)
}

pub fn inner_open_loop_dt(p: &DObParams) -> Result<TransferFunction> {
    let ts = p.require_ts()?;
    TransferFunction::discrete(vec![p.alpha * p.g_dob * ts], vec![1.0, -1.0], ts)
}

/// `S_i = (z-1)/(z-(1-c))`, `T_i = c/(z-(1-c))` with `c = alpha g_dob ts`.
pub fn inner_loop_dt(p: &DObParams) -> Result<LoopSet> {
    LoopSet::from_open_loop(inner_open_loop_dt(p)?)
}

pub fn outer_open_loop_ct(p: &DObParams, g: &OuterGains) -> Result<TransferFunction> {
    let pd = Polynomial::new(vec![g.kd, g.kp]);
    let s_plus_g = Polynomial::new(vec![1.0, p.g_dob]);
    let (bracket, den) = match p.g_v {
        Cutoff::Infinite => {
            (&Polynomial::new(vec![p.g_dob, 0.0, 0.0]) + &(&s_plus_g * &pd), Polynomial::new(vec![1.0, 0.0, 0.0, 0.0]))
        }
        Cutoff::Finite(gv) => {
            let s_plus_gv = Polynomial::new(vec![1.0, gv]);
            (
                &Polynomial::new(vec![gv * p.g_dob, 0.0, 0.0]) + &(&(&s_plus_gv * &s_plus_g) * &pd),
                Polynomial::new(vec![1.0, gv, 0.0, 0.0, 0.0]),
            )
        }
    };
    TransferFunction::new(bracket.scale(p.alpha), den, Domain::Continuous)
}

pub fn outer_loop_ct(p: &DObParams, g: &OuterGains) -> Result<LoopSet> {
    LoopSet::from_open_loop(outer_open_loop_ct(p, g)?)
}

fn ci_tf(p: &DObParams) -> Result<TransferFunction> {
    let ts = p.require_ts()?;
    TransferFunction::discrete(
        vec![p.alpha * (1.0 + p.g_dob * ts), -p.alpha],
        vec![1.0, -(1.0 - p.alpha * p.g_dob * ts)],
        ts,
    )
}

/// `L_o(z) = C(z) C_i(z) G_p(z)`.
pub fn outer_open_loop_dt(p: &DObParams, g: &OuterGains) -> Result<TransferFunction> {
    let ts = p.require_ts()?;
    let c = backward_euler_pd(*g, ts)?;
    let gp = zoh_double_integrator(1.0, ts)?;
    c.series(&ci_tf(p)?)?.series(&gp)
}

pub fn outer_loop_dt(p: &DObParams, g: &OuterGains) -> Result<LoopSet> {
    LoopSet::from_open_loop(outer_open_loop_dt(p, g)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompensatorCharacter {
    PhaseLead,
    PhaseLag,
    Neutral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Compensator {
    pub tf: TransferFunction,
    pub character: CompensatorCharacter,
}

/// `C_i(z) = alpha ((1 + g_dob ts) z - 1) / (z - (1 - alpha g_dob ts))`,
/// classified against the threshold `alpha = 1 / (1 + g_dob ts)`.
pub fn ci_compensator_dt(p: &DObParams) -> Result<Compensator> {
    let ts = p.require_ts()?;
    let threshold = 1.0 / (1.0 + p.g_dob * ts);
    let diff = p.alpha - threshold;
    let character = if diff.abs() <= NEUTRAL_BAND {
        CompensatorCharacter::Neutral
    } else if diff > 0.0 {
        CompensatorCharacter::PhaseLead
    } else {
        CompensatorCharacter::PhaseLag
    };
    Ok(Compensator { tf: ci_tf(p)?, character })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::Stability;
    use num_complex::Complex64;

    fn dt(alpha: f64, g: f64, ts: f64) -> DObParams {
        DObParams::new(alpha, g).unwrap().with_ts(ts).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(DObParams::new(0.0, 100.0).is_err());
        assert!(DObParams::new(1.0, -1.0).is_err());
        assert!(DObParams::new(f64::NAN, 1.0).is_err());
        assert!(DObParams::new(1.0, 1.0).unwrap().with_ts(0.0).is_err());
        assert!(DObParams::new(1.0, 1.0).unwrap().with_gv(Cutoff::Finite(0.0)).is_err());
        assert!(OuterGains::new(0.0, 0.0).is_err());
        assert!(OuterGains::new(1.0, -1.0).is_err());
        assert!(OuterGains::new(1.0, 0.0).is_ok());
        assert!(inner_loop_dt(&DObParams::new(1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn cutoff_parsing() {
        assert_eq!("inf".parse::<Cutoff>().unwrap(), Cutoff::Infinite);
        assert_eq!("Infinity".parse::<Cutoff>().unwrap(), Cutoff::Infinite);
        assert_eq!("1000".parse::<Cutoff>().unwrap(), Cutoff::Finite(1000.0));
        assert!("-3".parse::<Cutoff>().is_err());
        assert!("nan".parse::<Cutoff>().is_err());
        assert!("abc".parse::<Cutoff>().is_err());
    }

    #[test]
    fn ideal_inner_loop_has_no_peak() {
        let ls = inner_loop_ct(&DObParams::new(1.0, 100.0).unwrap()).unwrap();
        assert_eq!(ls.l.num().coeffs(), &[100.0]);
        assert_eq!(ls.l.den().coeffs(), &[1.0, 0.0]);
        for w in [1e-3, 1.0, 50.0, 100.0, 1e3, 1e6] {
            let s = ls.s.eval_at_frequency(w).unwrap().norm();
            let expect = w / (w * w + 100.0 * 100.0).sqrt();
            assert!((s - expect).abs() < 1e-15);
            assert!(s < 1.0);
        }
    }

    #[test]
    fn filtered_inner_loop_has_relative_degree_two() {
        let p = DObParams::new(1.0, 100.0).unwrap().with_gv(Cutoff::Finite(1000.0)).unwrap();
        assert_eq!(inner_loop_ct(&p).unwrap().l.relative_degree(), 2);
    }

    #[test]
    fn discrete_inner_pole() {
        let ls = inner_loop_dt(&dt(1.0, 500.0, 0.001)).unwrap();
        assert_eq!(ls.s.den().coeffs(), &[1.0, -0.5]);
        assert_eq!(ls.s.num().coeffs(), &[1.0, -1.0]);
        assert_eq!(ls.t.num().coeffs(), &[0.5]);

        let unstable = inner_loop_dt(&dt(1.0, 2500.0, 0.001)).unwrap();
        assert_eq!(unstable.s.stability().unwrap().class, Stability::Unstable);

        let ringing = inner_loop_dt(&dt(1.2, 1000.0, 0.001)).unwrap();
        let v = ringing.s.stability().unwrap();
        assert_eq!(v.class, Stability::Stable);
        let pole = v.worst_pole.unwrap();
        assert!(pole.re < 0.0 && pole.im == 0.0);
    }

    #[test]
    fn lead_lag_classification() {
        let c = |a: f64| ci_compensator_dt(&dt(a, 500.0, 0.001)).unwrap().character;
        assert_eq!(c(1.0), CompensatorCharacter::PhaseLead);
        assert_eq!(c(0.5), CompensatorCharacter::PhaseLag);
        assert_eq!(c(1.0 / (1.0 + 500.0 * 0.001)), CompensatorCharacter::Neutral);
    }

    #[test]
    fn compensator_has_unit_dc_gain() {
        let ci = ci_compensator_dt(&dt(0.3, 750.0, 0.001)).unwrap().tf;
        let dc = ci.eval(Complex64::new(1.0, 0.0)).unwrap();
        assert!((dc.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outer_ct_expansion() {
        // alpha [(g + KD) s^2 + (KP + g KD) s + g KP] / s^3
        let p = DObParams::new(0.5, 750.0).unwrap();
        let g = OuterGains::new(1000.0, 250.0).unwrap();
        let l = outer_open_loop_ct(&p, &g).unwrap();
        let expect = [0.5 * 1000.0, 0.5 * (1000.0 + 750.0 * 250.0), 0.5 * 750.0 * 1000.0];
        assert_eq!(l.num().coeffs(), &expect);
        assert_eq!(l.den().coeffs(), &[1.0, 0.0, 0.0, 0.0]);
    }
}
