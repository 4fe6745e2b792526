//! Fixed-step closed-loop simulation of a digital DOb-based position
//! controller driving a single-inertia servo.
//!
//! Per control period `ts`:
//!
//! 1. sample position `q_k` and measured velocity `v_k + eta_k`
//!    (optionally through a Backward-Euler low-pass of bandwidth `g_v`);
//! 2. PD on position error, Backward-Euler derivative:
//!    `a_des = K_P e_k + K_D (e_k - e_{k-1}) / ts`;
//! 3. DOb update with the backward-difference acceleration
//!    `a_k = (v_k - v_{k-1}) / ts`:
//!    `tau_hat_k = tau_hat_{k-1} + g_dob ts J_n (a_des - a_k)`, which is the
//!    Backward-Euler low-pass `g/(s+g)` of `u_k - J_n a_k` with the
//!    algebraic loop through `u_k` solved;
//! 4. torque command `u_k = J_n a_des + tau_hat_k`, motor current
//!    `u_k / K_tn`, held by a zero-order hold;
//! 5. exact plant update over the period with the load torque held.
//!
//! The resulting sampled loop is `C(z) C_i(z) G_p(z)` with the inner loop
//! `-(1/J_m) S_i(z)` from load torque to acceleration and
//! `-((z-1)/ts) T_i(z)` from velocity noise to acceleration.

mod config;
mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dob::{Cutoff, DObParams, OuterGains};
use crate::error::{Error, Result};

pub use config::{
    load_scenario, parse_scenario, parse_trajectory_csv, write_trace_csv, ReferenceKind, ScenarioFile, TRACE_HEADER,
};
pub use oracle::{inner_loop_disturbance_oracle, noise_channel, noise_channel_oracle};

/// Position magnitude (rad) beyond which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Piecewise-constant load torque: each `(t_start, torque)` holds until the
/// next entry. Zero before the first entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadSchedule {
    steps: Vec<(f64, f64)>,
}

impl LoadSchedule {
    pub fn new(mut steps: Vec<(f64, f64)>) -> Result<Self> {
        if steps.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::invalid("load schedule entries must be finite"));
        }
        steps.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(LoadSchedule { steps })
    }

    pub fn none() -> Self {
        LoadSchedule::default()
    }

    pub fn step(at: f64, torque: f64) -> Result<Self> {
        Self::new(vec![(at, torque)])
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self.steps.partition_point(|(start, _)| *start <= t) {
            0 => 0.0,
            i => self.steps[i - 1].1,
        }
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantParams {
    /// Actual inertia, kg m^2.
    pub jm: f64,
    /// Actual torque constant, N m per unit input.
    pub kt: f64,
    /// Viscous friction, N m s / rad.
    pub viscous: f64,
    pub load: LoadSchedule,
}

impl PlantParams {
    pub fn new(jm: f64, kt: f64) -> Result<Self> {
        let p = PlantParams { jm, kt, viscous: 0.0, load: LoadSchedule::none() };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.jm.is_finite() && self.jm > 0.0) {
            return Err(Error::invalid(format!("jm must be > 0, got {}", self.jm)));
        }
        if !(self.kt.is_finite() && self.kt > 0.0) {
            return Err(Error::invalid(format!("kt must be > 0, got {}", self.kt)));
        }
        if !(self.viscous.is_finite() && self.viscous >= 0.0) {
            return Err(Error::invalid(format!("viscous must be >= 0, got {}", self.viscous)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    /// Constant position target from `t = 0`, rad.
    Step(f64),
    /// One sample per control period, rad.
    Trajectory(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OuterLoop {
    Closed,
    /// Desired acceleration held at zero; isolates the DOb inner loop.
    Open,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    plant: PlantParams,
    dob: DObParams,
    gains: OuterGains,
    reference: Reference,
    duration: f64,
    steps: usize,
    ktn: f64,
    noise_seed: u64,
    noise_amplitude: f64,
    log_substeps: usize,
    outer_loop: OuterLoop,
}

impl Scenario {
    /// `dob` must carry a sampling period. The nominal torque constant
    /// defaults to the actual one, so the nominal inertia is `alpha * jm`.
    pub fn new(
        plant: PlantParams,
        dob: DObParams,
        gains: OuterGains,
        reference: Reference,
        duration: f64,
    ) -> Result<Self> {
        plant.validate()?;
        let ts = dob.require_ts()?;
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid(format!("duration must be > 0, got {duration}")));
        }
        let ratio = duration / ts;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::invalid(format!("duration {duration} is not a whole number of sampling periods {ts}")));
        }
        if steps > 1e9 {
            return Err(Error::invalid("duration / ts exceeds 1e9 steps"));
        }
        let steps = steps as usize;
        match &reference {
            Reference::Step(a) if !a.is_finite() => {
                return Err(Error::invalid("step amplitude must be finite"));
            }
            Reference::Trajectory(r) if r.len() != steps => {
                return Err(Error::invalid(format!("trajectory has {} samples, duration/ts needs {steps}", r.len())));
            }
            Reference::Trajectory(r) if r.iter().any(|v| !v.is_finite()) => {
                return Err(Error::invalid("trajectory samples must be finite"));
            }
            _ => {}
        }
        let kt = plant.kt;
        Ok(Scenario {
            plant,
            dob,
            gains,
            reference,
            duration,
            steps,
            ktn: kt,
            noise_seed: 0,
            noise_amplitude: 0.0,
            log_substeps: 1,
            outer_loop: OuterLoop::Closed,
        })
    }

    pub fn with_noise(mut self, seed: u64, amplitude: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid(format!("noise amplitude must be >= 0, got {amplitude}")));
        }
        self.noise_seed = seed;
        self.noise_amplitude = amplitude;
        Ok(self)
    }

    pub fn with_log_substeps(mut self, n: usize) -> Result<Self> {
        if n == 0 || n > 1_000 {
            return Err(Error::invalid("log_substeps must be in 1..=1000"));
        }
        self.log_substeps = n;
        Ok(self)
    }

    pub fn with_outer_loop(mut self, mode: OuterLoop) -> Self {
        self.outer_loop = mode;
        self
    }

    /// Sets the nominal torque constant used by the controller; `alpha`
    /// is kept, so the nominal inertia becomes `alpha * jm * ktn / kt`.
    pub fn with_nominal_torque_constant(mut self, ktn: f64) -> Result<Self> {
        if !(ktn.is_finite() && ktn > 0.0) {
            return Err(Error::invalid(format!("ktn must be > 0, got {ktn}")));
        }
        self.ktn = ktn;
        Ok(self)
    }

    pub fn plant(&self) -> &PlantParams {
        &self.plant
    }

    pub fn dob(&self) -> &DObParams {
        &self.dob
    }

    pub fn gains(&self) -> &OuterGains {
        &self.gains
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn ts(&self) -> f64 {
        self.dob.ts().expect("validated on construction")
    }

    /// `(J_n, K_tn)` implied by `alpha = (J_n K_t) / (J_m K_tn)`.
    pub fn nominal(&self) -> (f64, f64) {
        (self.dob.alpha() * self.plant.jm * self.ktn / self.plant.kt, self.ktn)
    }
}

/// `alpha = (J_n K_t) / (J_m K_tn)`.
pub fn alpha_from_nominal(jm: f64, kt: f64, jn: f64, ktn: f64) -> Result<f64> {
    let alpha = jn * kt / (jm * ktn);
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("nominal and actual plant parameters must be > 0"));
    }
    Ok(alpha)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub q_ref: f64,
    pub q: f64,
    pub qdot: f64,
    /// Plant acceleration over the interval starting at `t`.
    pub qddot: f64,
    /// Motor current command `u / K_tn`.
    pub u: f64,
    pub tau_d: f64,
    pub tau_d_hat: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub ts: f64,
    pub log_substeps: usize,
    pub records: Vec<TraceRecord>,
    /// First record index whose position exceeded [`DIVERGENCE_LIMIT`] or
    /// became non-finite. Records from there on hold NaN states.
    pub diverged_at: Option<usize>,
}

impl SimTrace {
    /// Records at control instants only.
    pub fn samples(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().step_by(self.log_substeps)
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

/// `(1 - e^{-x}) / x` and `(x - 1 + e^{-x}) / x^2`, accurate near `x = 0`.
fn viscous_factors(x: f64) -> (f64, f64) {
    if x < 1e-4 {
        (1.0 - x / 2.0 + x * x / 6.0, 0.5 - x / 6.0 + x * x / 24.0)
    } else {
        let em = -(-x).exp_m1();
        (em / x, (x - em) / (x * x))
    }
}

/// Exact state transfer over `h` under constant force `force`.
fn plant_step(plant: &PlantParams, q: f64, v: f64, force: f64, h: f64) -> (f64, f64, f64) {
    if plant.viscous == 0.0 {
        let acc = force / plant.jm;
        (q + h * v + h * h / 2.0 * acc, v + h * acc, acc)
    } else {
        let x = plant.viscous / plant.jm * h;
        let (g1, g2) = viscous_factors(x);
        let f = force / plant.jm;
        let q1 = q + v * h * g1 + f * h * h * g2;
        let v1 = v * (-x).exp() + f * h * g1;
        (q1, v1, f - plant.viscous / plant.jm * v)
    }
}

pub fn simulate(sc: &Scenario) -> SimTrace {
    let ts = sc.ts();
    let m = sc.log_substeps;
    let h = ts / m as f64;
    let (jn, ktn) = sc.nominal();
    let g_dob = sc.dob.g_dob();
    let lpf = match sc.dob.g_v() {
        Cutoff::Finite(gv) => Some(gv * ts),
        Cutoff::Infinite => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sc.noise_seed);
    let amp = sc.noise_amplitude;

    let mut records = Vec::with_capacity(sc.steps * m);
    let (mut q, mut v) = (0.0, 0.0);
    let (mut prev_e, mut prev_vf, mut tau_hat) = (0.0, 0.0, 0.0);
    let mut diverged_at = None;

    for k in 0..sc.steps {
        let t = k as f64 * ts;
        let q_ref = match &sc.reference {
            Reference::Step(a) => *a,
            Reference::Trajectory(r) => r[k],
        };
        if diverged_at.is_some() {
            for j in 0..m {
                records.push(diverged_record(t + j as f64 * h, q_ref));
            }
            continue;
        }

        let noise = if amp > 0.0 { rng.random_range(-amp..=amp) } else { 0.0 };
        let v_meas = v + noise;
        let vf = match lpf {
            Some(c) => (prev_vf + c * v_meas) / (1.0 + c),
            None => v_meas,
        };
        let acc_est = (vf - prev_vf) / ts;
        prev_vf = vf;

        let e = q_ref - q;
        let a_des = match sc.outer_loop {
            OuterLoop::Closed => sc.gains.kp * e + sc.gains.kd * (e - prev_e) / ts,
            OuterLoop::Open => 0.0,
        };
        prev_e = e;

        tau_hat += g_dob * ts * jn * (a_des - acc_est);
        let torque_cmd = jn * a_des + tau_hat;
        let current = torque_cmd / ktn;
        let tau_d = sc.plant.load.value_at(t);
        let force = sc.plant.kt * current - tau_d;

        for j in 0..m {
            let (q1, v1, acc) = plant_step(&sc.plant, q, v, force, h);
            records.push(TraceRecord {
                t: t + j as f64 * h,
                q_ref,
                q,
                qdot: v,
                qddot: acc,
                u: current,
                tau_d,
                tau_d_hat: tau_hat,
            });
            q = q1;
            v = v1;
        }
        let bad = |x: f64| !x.is_finite() || x.abs() > DIVERGENCE_LIMIT;
        if records[k * m..].iter().any(|r| bad(r.q)) || bad(q) {
            let first = records[k * m..].iter().position(|r| bad(r.q)).map_or(records.len(), |i| k * m + i);
            diverged_at = Some(first);
            for (i, r) in records.iter_mut().enumerate().skip(first) {
                *r = diverged_record(r.t, r.q_ref);
                debug_assert!(i >= first);
            }
        }
    }
    SimTrace { ts, log_substeps: m, records, diverged_at }
}

fn diverged_record(t: f64, q_ref: f64) -> TraceRecord {
    TraceRecord {
        t,
        q_ref,
        q: f64::NAN,
        qdot: f64::NAN,
        qddot: f64::NAN,
        u: f64::NAN,
        tau_d: f64::NAN,
        tau_d_hat: f64::NAN,
    }
}
