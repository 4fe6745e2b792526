//! Analytic design constraints on `alpha * g_dob * ts` and on the
//! continuous-time PD/DOb combination.
//!
//! With peak budgets `|S_i| <= 1/Gamma_S` and `|T_i| <= 1/Gamma_T`, the
//! Nyquist-frequency peaks `2/|c - 2|` and `c/|c - 2|` (with
//! `c = alpha g_dob ts`) bound `c` by `2 (1 - Gamma_S)` and `2/(1 + Gamma_T)`.

use crate::dob::{outer_loop_ct, DObParams, OuterGains};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakSpec {
    gamma_s: f64,
    gamma_t: f64,
}

impl PeakSpec {
    pub fn new(gamma_s: f64, gamma_t: f64) -> Result<Self> {
        for (name, g) in [("gammaS", gamma_s), ("gammaT", gamma_t)] {
            if !(g > 0.0 && g < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {g}")));
            }
        }
        Ok(PeakSpec { gamma_s, gamma_t })
    }

    pub fn gamma_s(&self) -> f64 {
        self.gamma_s
    }

    pub fn gamma_t(&self) -> f64 {
        self.gamma_t
    }

    /// Largest `alpha g_dob ts` meeting the sensitivity peak budget.
    pub fn sensitivity_bound(&self) -> f64 {
        2.0 * (1.0 - self.gamma_s)
    }

    /// Largest `alpha g_dob ts` meeting the complementary peak budget.
    pub fn complementary_bound(&self) -> f64 {
        2.0 / (1.0 + self.gamma_t)
    }
}

/// Signed slack of each constraint; positive (or zero, for the
/// non-strict ones) means satisfied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Margins {
    pub inner_stable: f64,
    pub no_ringing: f64,
    pub sensitivity_peak: f64,
    pub complementary_peak: f64,
    pub continuous_stability: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintReport {
    /// `alpha g_dob ts < 2`
    pub inner_stable: bool,
    /// `alpha g_dob ts <= 1`
    pub no_ringing: bool,
    /// `alpha g_dob ts <= 2 (1 - Gamma_S)`
    pub sensitivity_peak_ok: bool,
    /// `alpha g_dob ts <= 2 / (1 + Gamma_T)`
    pub complementary_peak_ok: bool,
    /// Closed-form continuous-time stability predicate
    /// `1/alpha < 1 + g_dob (K_D/K_P + K_D/g_dob + K_D^2/K_P)`.
    pub continuous_stability_ok: bool,
    pub margins: Margins,
    /// Continuous outer loop stability from its closed-loop roots.
    pub continuous_roots_stable: bool,
    /// Predicate and root test disagree.
    pub continuous_disagreement: bool,
}

/// Right-hand side of the closed-form continuous stability predicate,
/// taken verbatim. The `K_D/g_dob` and `K_D^2/K_P` terms are not
/// dimensionally consistent with the others, so the result is audited
/// against the root test in [`check_constraints`].
pub fn continuous_stability_bound(g_dob: f64, gains: &OuterGains) -> f64 {
    let (kp, kd) = (gains.kp, gains.kd);
    1.0 + g_dob * (kd / kp + kd / g_dob + kd * kd / kp)
}

pub fn check_constraints(p: &DObParams, g: &OuterGains, spec: &PeakSpec) -> Result<ConstraintReport> {
    let c = p.alpha_g_ts()?;
    let margins = Margins {
        inner_stable: 2.0 - c,
        no_ringing: 1.0 - c,
        sensitivity_peak: spec.sensitivity_bound() - c,
        complementary_peak: spec.complementary_bound() - c,
        continuous_stability: continuous_stability_bound(p.g_dob(), g) - 1.0 / p.alpha(),
    };
    let continuous_stability_ok = margins.continuous_stability > 0.0;
    let continuous_roots_stable = outer_loop_ct(p, g)?.s.stability()?.is_stable();
    Ok(ConstraintReport {
        inner_stable: margins.inner_stable > 0.0,
        no_ringing: margins.no_ringing >= 0.0,
        sensitivity_peak_ok: margins.sensitivity_peak >= 0.0,
        complementary_peak_ok: margins.complementary_peak >= 0.0,
        continuous_stability_ok,
        margins,
        continuous_roots_stable,
        continuous_disagreement: continuous_stability_ok != continuous_roots_stable,
    })
}

/// Largest DOb bandwidth satisfying both peak budgets:
/// `min(2 (1 - Gamma_S), 2 / (1 + Gamma_T)) / (alpha ts)`.
pub fn max_bandwidth(alpha: f64, ts: f64, spec: &PeakSpec) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be > 0, got {alpha}")));
    }
    if !(ts.is_finite() && ts > 0.0) {
        return Err(Error::invalid(format!("ts must be > 0, got {ts}")));
    }
    Ok(spec.sensitivity_bound().min(spec.complementary_bound()) / (alpha * ts))
}
