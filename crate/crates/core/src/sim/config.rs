//! Scenario files, trajectory CSV input and trace CSV output.
//!
//! Scenario files are flat `key = value` lines; `#` starts a comment.
//!
//! | key               | unit          | default   |
//! |-------------------|---------------|-----------|
//! | `jm`              | kg m^2        | required  |
//! | `kt`              | N m / unit    | required  |
//! | `viscous`         | N m s / rad   | 0         |
//! | `load`            | `t_s:N m, ...`| none      |
//! | `alpha`           | -             | see below |
//! | `jn`, `ktn`       | kg m^2, N m   | see below |
//! | `gdob`            | rad/s         | required  |
//! | `gv`              | rad/s or inf  | inf       |
//! | `ts`              | s             | required  |
//! | `kp`              | 1/s^2         | required  |
//! | `kd`              | 1/s           | required  |
//! | `reference`       | step/trajectory | step    |
//! | `step_amplitude`  | rad           | 1         |
//! | `trajectory_file` | path          | -         |
//! | `duration`        | s             | required  |
//! | `noise_amplitude` | rad/s         | 0         |
//! | `noise_seed`      | -             | 0         |
//! | `log_substeps`    | -             | 1         |
//! | `outer_loop`      | closed/open   | closed    |
//!
//! Give either `alpha` or `jn` (with optional `ktn`, defaulting to `kt`).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::{alpha_from_nominal, LoadSchedule, OuterLoop, PlantParams, Reference, Scenario, SimTrace};
use crate::dob::{Cutoff, DObParams, OuterGains};
use crate::error::{Error, Result};
use crate::fmt::num;

const KEYS: &[&str] = &[
    "jm",
    "kt",
    "viscous",
    "load",
    "alpha",
    "jn",
    "ktn",
    "gdob",
    "gv",
    "ts",
    "kp",
    "kd",
    "reference",
    "step_amplitude",
    "trajectory_file",
    "duration",
    "noise_amplitude",
    "noise_seed",
    "log_substeps",
    "outer_loop",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    Step,
    Trajectory,
}

/// Parsed scenario file before the trajectory (if any) is attached.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioFile {
    pub plant: PlantParams,
    pub alpha: f64,
    pub ktn: f64,
    pub g_dob: f64,
    pub g_v: Cutoff,
    pub ts: f64,
    pub kp: f64,
    pub kd: f64,
    pub reference: ReferenceKind,
    pub step_amplitude: f64,
    pub trajectory_file: Option<String>,
    pub duration: f64,
    pub noise_amplitude: f64,
    pub noise_seed: u64,
    pub log_substeps: usize,
    pub outer_loop: OuterLoop,
}

struct Entries {
    map: BTreeMap<&'static str, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|(line, v)| {
                let x: f64 = v.parse().map_err(|_| Error::parse(line, format!("{key}: not a number: {v:?}")))?;
                if !x.is_finite() {
                    return Err(Error::parse(line, format!("{key}: must be finite")));
                }
                Ok(x)
            })
            .transpose()
    }

    fn required(&mut self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| Error::parse(0, format!("missing required key {key:?}")))
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(line_no, "expected `key = value`"))?;
        let k = k.trim();
        let key = KEYS
            .iter()
            .find(|&&known| known == k)
            .ok_or_else(|| Error::parse(line_no, format!("unknown key {k:?}")))?;
        if map.insert(*key, (line_no, v.trim().to_string())).is_some() {
            return Err(Error::parse(line_no, format!("duplicate key {k:?}")));
        }
    }
    let mut e = Entries { map };

    let jm = e.required("jm")?;
    let kt = e.required("kt")?;
    let mut plant = PlantParams::new(jm, kt)?;
    if let Some(b) = e.f64("viscous")? {
        plant.viscous = b;
        plant.validate()?;
    }
    if let Some((line, v)) = e.take("load") {
        plant.load = parse_load(&v).map_err(|m| Error::parse(line, m))?;
    }

    let alpha_direct = e.f64("alpha")?;
    let jn = e.f64("jn")?;
    let ktn = e.f64("ktn")?.unwrap_or(kt);
    let alpha = match (alpha_direct, jn) {
        (Some(_), Some(_)) => return Err(Error::invalid("give either alpha or jn, not both")),
        (Some(a), None) => a,
        (None, Some(jn)) => alpha_from_nominal(jm, kt, jn, ktn)?,
        (None, None) => return Err(Error::parse(0, "missing required key \"alpha\" (or \"jn\")")),
    };

    let g_dob = e.required("gdob")?;
    let g_v = match e.take("gv") {
        Some((line, v)) => v.parse::<Cutoff>().map_err(|err| Error::parse(line, format!("gv: {err}")))?,
        None => Cutoff::Infinite,
    };
    let ts = e.required("ts")?;
    let kp = e.required("kp")?;
    let kd = e.required("kd")?;
    let reference = match e.take("reference") {
        None => ReferenceKind::Step,
        Some((_, v)) if v == "step" => ReferenceKind::Step,
        Some((_, v)) if v == "trajectory" => ReferenceKind::Trajectory,
        Some((line, v)) => return Err(Error::parse(line, format!("reference must be step or trajectory, got {v:?}"))),
    };
    let step_amplitude = e.f64("step_amplitude")?.unwrap_or(1.0);
    let trajectory_file = e.take("trajectory_file").map(|(_, v)| v);
    if reference == ReferenceKind::Trajectory && trajectory_file.is_none() {
        return Err(Error::parse(0, "reference = trajectory needs trajectory_file"));
    }
    let duration = e.required("duration")?;
    let noise_amplitude = e.f64("noise_amplitude")?.unwrap_or(0.0);
    let noise_seed = match e.take("noise_seed") {
        Some((line, v)) => {
            v.parse().map_err(|_| Error::parse(line, format!("noise_seed: not an unsigned integer: {v:?}")))?
        }
        None => 0,
    };
    let log_substeps = match e.take("log_substeps") {
        Some((line, v)) => {
            v.parse().map_err(|_| Error::parse(line, format!("log_substeps: not an unsigned integer: {v:?}")))?
        }
        None => 1,
    };
    let outer_loop = match e.take("outer_loop") {
        None => OuterLoop::Closed,
        Some((_, v)) if v == "closed" => OuterLoop::Closed,
        Some((_, v)) if v == "open" => OuterLoop::Open,
        Some((line, v)) => return Err(Error::parse(line, format!("outer_loop must be closed or open, got {v:?}"))),
    };

    let file = ScenarioFile {
        plant,
        alpha,
        ktn,
        g_dob,
        g_v,
        ts,
        kp,
        kd,
        reference,
        step_amplitude,
        trajectory_file,
        duration,
        noise_amplitude,
        noise_seed,
        log_substeps,
        outer_loop,
    };
    // Validate everything except the trajectory contents.
    let probe = match file.reference {
        ReferenceKind::Step => None,
        ReferenceKind::Trajectory => {
            let n = (file.duration / file.ts).round();
            if !(n.is_finite() && (1.0..=1e9).contains(&n)) {
                return Err(Error::invalid("duration / ts out of range"));
            }
            Some(vec![0.0; n as usize])
        }
    };
    file.build(probe)?;
    Ok(file)
}

fn parse_load(v: &str) -> std::result::Result<LoadSchedule, String> {
    let mut steps = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (t, tau) = item.split_once(':').ok_or_else(|| format!("load entry {item:?} is not `time:torque`"))?;
        let t: f64 = t.trim().parse().map_err(|_| format!("load time {t:?} is not a number"))?;
        let tau: f64 = tau.trim().parse().map_err(|_| format!("load torque {tau:?} is not a number"))?;
        steps.push((t, tau));
    }
    LoadSchedule::new(steps).map_err(|e| e.to_string())
}

impl ScenarioFile {
    /// `trajectory` is required iff the reference kind is a trajectory.
    pub fn build(&self, trajectory: Option<Vec<f64>>) -> Result<Scenario> {
        let dob = DObParams::new(self.alpha, self.g_dob)?.with_gv(self.g_v)?.with_ts(self.ts)?;
        let gains = OuterGains::new(self.kp, self.kd)?;
        let reference = match (self.reference, trajectory) {
            (ReferenceKind::Step, None) => Reference::Step(self.step_amplitude),
            (ReferenceKind::Trajectory, Some(r)) => Reference::Trajectory(r),
            (ReferenceKind::Step, Some(_)) => return Err(Error::invalid("step reference takes no trajectory")),
            (ReferenceKind::Trajectory, None) => return Err(Error::invalid("trajectory reference needs samples")),
        };
        Scenario::new(self.plant.clone(), dob, gains, reference, self.duration)?
            .with_noise(self.noise_seed, self.noise_amplitude)?
            .with_log_substeps(self.log_substeps)?
            .with_nominal_torque_constant(self.ktn)
            .map(|s| s.with_outer_loop(self.outer_loop))
    }
}

/// Reads a scenario file; a trajectory file path is resolved relative to
/// the scenario's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let file = parse_scenario(&text)?;
    let trajectory = match &file.trajectory_file {
        Some(rel) if file.reference == ReferenceKind::Trajectory => {
            let p = path.parent().unwrap_or(Path::new(".")).join(rel);
            let csv = std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            Some(parse_trajectory_csv(&csv, file.ts)?)
        }
        _ => None,
    };
    file.build(trajectory)
}

/// Parses `t,q_ref` rows; `t` must step by `ts` from zero (to within
/// `1e-6 ts`). Returns the `q_ref` samples.
pub fn parse_trajectory_csv(text: &str, ts: f64) -> Result<Vec<f64>> {
    if !(ts.is_finite() && ts > 0.0) {
        return Err(Error::invalid(format!("ts must be > 0, got {ts}")));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "q_ref" {
        return Err(Error::parse(1, "header must be `t,q_ref`"));
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = rec.as_ref().ok().and_then(|r| r.position()).map_or(k + 2, |p| p.line() as usize);
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::parse(line, "expected two columns"));
        }
        let field = |i: usize| -> Result<f64> {
            let x: f64 = rec[i].parse().map_err(|_| Error::parse(line, format!("not a number: {:?}", &rec[i])))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::parse(line, "value must be finite"))
            }
        };
        let (t, q) = (field(0)?, field(1)?);
        if (t - k as f64 * ts).abs() > 1e-6 * ts {
            return Err(Error::parse(line, format!("t = {t} is not sample {k} of period {ts}")));
        }
        out.push(q);
    }
    if out.is_empty() {
        return Err(Error::parse(1, "no samples"));
    }
    Ok(out)
}

pub const TRACE_HEADER: [&str; 7] = ["t", "q_ref", "q", "qdot", "u", "tau_d", "tau_d_hat"];

pub fn write_trace_csv<W: Write>(trace: &SimTrace, w: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TRACE_HEADER).map_err(io)?;
    for r in &trace.records {
        wtr.write_record([r.t, r.q_ref, r.q, r.qdot, r.u, r.tau_d, r.tau_d_hat].map(num)).map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::Io(e.to_string()))
}
