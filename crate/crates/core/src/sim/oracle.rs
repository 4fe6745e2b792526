//! Transfer-function oracles for the simulator's inner loop, realised as
//! direct-form difference equations from rest.

use crate::dob::{inner_loop_dt, DObParams};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tf::TransferFunction;

/// Acceleration response to a sampled load torque series through
/// `-(1/J_m) S_i(z)`.
pub fn inner_loop_disturbance_oracle(p: &DObParams, jm: f64, disturbance: &[f64]) -> Result<Vec<f64>> {
    if !(jm.is_finite() && jm > 0.0) {
        return Err(Error::invalid(format!("jm must be > 0, got {jm}")));
    }
    let s = inner_loop_dt(p)?.s;
    Ok(s.filter(disturbance)?.into_iter().map(|y| -y / jm).collect())
}

/// Acceleration response to velocity-measurement noise through
/// `-((z-1)/ts) T_i(z)`.
pub fn noise_channel_oracle(p: &DObParams, noise: &[f64]) -> Result<Vec<f64>> {
    noise_channel(p)?.filter(noise)
}

/// `-((z-1)/ts) T_i(z)` as a transfer function.
pub fn noise_channel(p: &DObParams) -> Result<TransferFunction> {
    let ts = p.require_ts()?;
    let t = inner_loop_dt(p)?.t;
    let num = &(-t.num()) * &Polynomial::new(vec![1.0, -1.0]);
    let den = t.den().scale(ts);
    TransferFunction::new(num, den, t.domain())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn params(c: f64) -> DObParams {
        DObParams::new(1.0, c / 1e-3).unwrap().with_ts(1e-3).unwrap()
    }

    #[test]
    fn zero_in_zero_out() {
        let p = params(0.5);
        assert!(inner_loop_disturbance_oracle(&p, 0.003, &[0.0; 16]).unwrap().iter().all(|&y| y == 0.0));
        assert!(noise_channel_oracle(&p, &[0.0; 16]).unwrap().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn step_load_decays_geometrically() {
        let y = inner_loop_disturbance_oracle(&params(0.5), 1.0, &[1.0; 20]).unwrap();
        assert_eq!(y[0], -1.0);
        for w in y.windows(2) {
            assert_eq!(w[1], 0.5 * w[0]);
        }
    }

    #[test]
    fn noise_channel_blocks_dc() {
        let h = noise_channel(&params(0.7)).unwrap();
        assert_eq!(h.eval(Complex64::new(1.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let y = noise_channel_oracle(&params(0.7), &[0.3; 400]).unwrap();
        assert!(y.last().unwrap().abs() < 1e-100);
    }
}
