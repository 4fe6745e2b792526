//! Continuous-to-discrete maps: the exact zero-order-hold model of a double
//! integrator, the Backward-Euler PD controller, and generic Euler/Tustin
//! substitutions.

use crate::dob::OuterGains;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::{Domain, TransferFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubstitutionRule {
    /// `s = (z - 1) / ts`
    ForwardEuler,
    /// `s = (z - 1) / (ts z)`
    BackwardEuler,
    /// `s = (2 / ts) (z - 1) / (z + 1)`
    Tustin,
}

fn check_period(ts: f64) -> Result<Domain> {
    Domain::discrete(ts)
}

/// `gain * (ts^2 / 2) (z + 1) / (z - 1)^2`.
pub fn zoh_double_integrator(gain: f64, ts: f64) -> Result<TransferFunction> {
    let domain = check_period(ts)?;
    let b = gain * ts * ts / 2.0;
    TransferFunction::new(Polynomial::new(vec![b, b]), Polynomial::new(vec![1.0, -2.0, 1.0]), domain)
}

/// `C(z) = K_P + K_D (z - 1) / (ts z)` as `((K_P + K_D/ts) z - K_D/ts) / z`.
pub fn backward_euler_pd(gains: OuterGains, ts: f64) -> Result<TransferFunction> {
    let domain = check_period(ts)?;
    let d = gains.kd / ts;
    TransferFunction::new(Polynomial::new(vec![gains.kp + d, -d]), Polynomial::new(vec![1.0, 0.0]), domain)
}

/// Replaces `s` by the rule's rational function of `z` and clears the
/// fractions by multiplying through with `D(z)^m`, where `m` is the larger
/// of the numerator and denominator degrees. Coefficients are left
/// unnormalized.
pub fn substitute(tf_s: &TransferFunction, ts: f64, rule: SubstitutionRule) -> Result<TransferFunction> {
    if tf_s.domain() != Domain::Continuous {
        return Err(Error::DomainMismatch("substitution needs a continuous transfer function".into()));
    }
    let domain = check_period(ts)?;
    let (n, d) = match rule {
        SubstitutionRule::ForwardEuler => (Polynomial::new(vec![1.0, -1.0]), Polynomial::constant(ts)),
        SubstitutionRule::BackwardEuler => (Polynomial::new(vec![1.0, -1.0]), Polynomial::new(vec![ts, 0.0])),
        SubstitutionRule::Tustin => (Polynomial::new(vec![2.0, -2.0]), Polynomial::new(vec![ts, ts])),
    };
    let m = tf_s.num().degree().max(tf_s.den().degree()) as u32;
    let clear = |p: &Polynomial| -> Polynomial {
        let deg = p.degree() as u32;
        p.coeffs().iter().enumerate().fold(Polynomial::zero(), |acc, (i, &a)| {
            if a == 0.0 {
                return acc;
            }
            let k = deg - i as u32;
            let term = &n.pow(k) * &d.pow(m - k);
            &acc + &term.scale(a)
        })
    };
    TransferFunction::new(clear(tf_s.num()), clear(tf_s.den()), domain)
}
