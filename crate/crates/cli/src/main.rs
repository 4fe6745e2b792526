use std::f64::consts::PI;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use doblab_core::analysis::{
    bode_integral, check_constraints, critical_parameter, max_bandwidth, root_locus, LoopBuilder, LoopKind, PeakSpec,
    Spacing, Sweep, SweptParam,
};
use doblab_core::dob::{
    inner_loop_ct, inner_loop_dt, outer_loop_ct, outer_loop_dt, Cutoff, DObParams, LoopSet, OuterGains,
};
use doblab_core::fmt::num;
use doblab_core::sim::{load_scenario, simulate, write_trace_csv};

#[derive(Parser)]
#[command(name = "doblab", version, about = "Disturbance-observer loop analysis and servo simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frequency response of S and T.
    Freq(FreqArgs),
    /// Closed-loop poles over an alpha or g_dob sweep.
    Rootlocus(RootLocusArgs),
    /// Pass/fail and margin for each design constraint.
    Constraints(ConstraintArgs),
    /// Sensitivity integral of a loop against its analytic value.
    BodeIntegral(LoopArgs),
    /// Largest DOb bandwidth meeting the peak budgets.
    Tune(TuneArgs),
    /// Time-domain run of a scenario file; trace CSV on stdout.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    S,
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoopArg {
    Inner,
    Outer,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    Lin,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    Alpha,
    Gdob,
}

#[derive(Args)]
struct LoopArgs {
    #[arg(long, value_enum, default_value = "z")]
    domain: DomainArg,
    #[arg(long = "loop", value_enum, default_value = "inner")]
    loop_: LoopArg,
    #[arg(long)]
    alpha: f64,
    /// DOb bandwidth, rad/s.
    #[arg(long)]
    gdob: f64,
    /// Velocity filter bandwidth, rad/s, or `inf`.
    #[arg(long, default_value = "inf")]
    gv: Cutoff,
    /// Sampling period, s. Required for `--domain z`.
    #[arg(long)]
    ts: Option<f64>,
    #[arg(long, default_value_t = 1000.0)]
    kp: f64,
    #[arg(long, default_value_t = 250.0)]
    kd: f64,
}

impl LoopArgs {
    fn params(&self) -> Result<DObParams> {
        let mut p = DObParams::new(self.alpha, self.gdob)?.with_gv(self.gv)?;
        if let Some(ts) = self.ts {
            p = p.with_ts(ts)?;
        } else if matches!(self.domain, DomainArg::Z) {
            bail!("--domain z needs --ts");
        }
        Ok(p)
    }

    fn gains(&self) -> Result<OuterGains> {
        Ok(OuterGains::new(self.kp, self.kd)?)
    }

    fn kind(&self) -> LoopKind {
        match (self.domain, self.loop_) {
            (DomainArg::S, LoopArg::Inner) => LoopKind::InnerContinuous,
            (DomainArg::Z, LoopArg::Inner) => LoopKind::InnerDiscrete,
            (DomainArg::S, LoopArg::Outer) => LoopKind::OuterContinuous,
            (DomainArg::Z, LoopArg::Outer) => LoopKind::OuterDiscrete,
        }
    }

    fn loop_set(&self) -> Result<LoopSet> {
        let (p, g) = (self.params()?, self.gains()?);
        Ok(match self.kind() {
            LoopKind::InnerContinuous => inner_loop_ct(&p)?,
            LoopKind::InnerDiscrete => inner_loop_dt(&p)?,
            LoopKind::OuterContinuous => outer_loop_ct(&p, &g)?,
            LoopKind::OuterDiscrete => outer_loop_dt(&p, &g)?,
        })
    }
}

#[derive(Args)]
struct FreqArgs {
    #[command(flatten)]
    common: LoopArgs,
    #[arg(long, default_value_t = 512)]
    points: usize,
    /// Grid spacing; defaults to `lin` for z and `log` for s.
    #[arg(long, value_enum)]
    spacing: Option<SpacingArg>,
    /// Lowest frequency, rad/s.
    #[arg(long)]
    wmin: Option<f64>,
    /// Highest frequency, rad/s (continuous only; discrete grids end at pi/ts).
    #[arg(long)]
    wmax: Option<f64>,
}

#[derive(Args)]
struct RootLocusArgs {
    #[command(flatten)]
    common: LoopArgs,
    /// Swept parameter; its fixed flag value is ignored.
    #[arg(long, value_enum, default_value = "alpha")]
    param: ParamArg,
    #[arg(long)]
    start: f64,
    #[arg(long)]
    end: f64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, value_enum, default_value = "log")]
    spacing: SpacingArg,
    /// Also bisect the stability boundary between two sweep rows that
    /// disagree and report it on stderr.
    #[arg(long)]
    critical: bool,
}

#[derive(Args)]
struct ConstraintArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    gdob: f64,
    #[arg(long)]
    ts: f64,
    #[arg(long = "gammaS")]
    gamma_s: f64,
    #[arg(long = "gammaT")]
    gamma_t: f64,
    #[arg(long, default_value_t = 1000.0)]
    kp: f64,
    #[arg(long, default_value_t = 250.0)]
    kd: f64,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    ts: f64,
    #[arg(long = "gammaS")]
    gamma_s: f64,
    #[arg(long = "gammaT")]
    gamma_t: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("DOBLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("DOBLAB_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.cmd {
        Command::Freq(a) => freq(&a, &mut out)?,
        Command::Rootlocus(a) => rootlocus(&a, &mut out)?,
        Command::Constraints(a) => constraints(&a, &mut out)?,
        Command::BodeIntegral(a) => bode(&a, &mut out)?,
        Command::Tune(a) => {
            let spec = PeakSpec::new(a.gamma_s, a.gamma_t)?;
            writeln!(out, "g_max")?;
            writeln!(out, "{}", num(max_bandwidth(a.alpha, a.ts, &spec)?))?;
        }
        Command::Simulate(a) => {
            let sc = load_scenario(&a.scenario)?;
            let trace = simulate(&sc);
            if let Some(i) = trace.diverged_at {
                eprintln!("warning: diverged at record {i} (t = {}); remaining rows are NaN", trace.records[i].t);
            }
            write_trace_csv(&trace, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn row(out: &mut impl Write, fields: &[f64]) -> io::Result<()> {
    let line: Vec<String> = fields.iter().map(|&x| num(x)).collect();
    writeln!(out, "{}", line.join(","))
}

fn freq_grid(a: &FreqArgs) -> Result<Vec<f64>> {
    let n = a.points;
    if n < 2 {
        bail!("--points must be at least 2");
    }
    let (lo, hi, spacing) = match (a.common.domain, a.common.ts) {
        (DomainArg::Z, Some(ts)) => {
            let nyq = PI / ts;
            if a.wmax.is_some() {
                bail!("--wmax applies to --domain s only");
            }
            let spacing = a.spacing.unwrap_or(SpacingArg::Lin);
            let lo = a.wmin.unwrap_or(match spacing {
                SpacingArg::Lin => nyq / n as f64,
                SpacingArg::Log => nyq * 1e-4,
            });
            (lo, nyq, spacing)
        }
        _ => (a.wmin.unwrap_or(1e-1), a.wmax.unwrap_or(1e5), a.spacing.unwrap_or(SpacingArg::Log)),
    };
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        bail!("frequency range must satisfy 0 < wmin < wmax");
    }
    let last = n - 1;
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                return lo;
            }
            if i == last {
                return hi;
            }
            let f = i as f64 / last as f64;
            match spacing {
                SpacingArg::Lin => lo + (hi - lo) * f,
                SpacingArg::Log => (lo.ln() + (hi.ln() - lo.ln()) * f).exp(),
            }
        })
        .collect())
}

fn freq(a: &FreqArgs, out: &mut impl Write) -> Result<()> {
    let set = a.common.loop_set()?;
    let grid = freq_grid(a)?;
    writeln!(out, "omega_rad_s,mag_S,phase_S_rad,mag_T,phase_T_rad")?;
    for (w, s, t) in set.freq_response(&grid)? {
        row(out, &[w, s.norm(), s.arg(), t.norm(), t.arg()])?;
    }
    Ok(())
}

fn rootlocus(a: &RootLocusArgs, out: &mut impl Write) -> Result<()> {
    let builder = LoopBuilder::new(a.common.kind(), a.common.params()?, a.common.gains()?);
    let param = match a.param {
        ParamArg::Alpha => SweptParam::Alpha,
        ParamArg::Gdob => SweptParam::GDob,
    };
    let sweep = Sweep {
        param,
        start: a.start,
        end: a.end,
        count: a.count,
        spacing: match a.spacing {
            SpacingArg::Lin => Spacing::Linear,
            SpacingArg::Log => Spacing::Log,
        },
    };
    let table = root_locus(&builder, &sweep)?;
    let n = table.rows.first().map_or(0, |r| r.roots.len());
    let mut header = vec!["param".to_string()];
    for i in 1..=n {
        header.push(format!("re_pole_{i}"));
        header.push(format!("im_pole_{i}"));
    }
    header.push("stable".into());
    writeln!(out, "{}", header.join(","))?;
    for r in &table.rows {
        let mut fields = vec![num(r.param)];
        for z in &r.roots {
            fields.push(num(z.re));
            fields.push(num(z.im));
        }
        fields.push(if r.stable { "1" } else { "0" }.into());
        writeln!(out, "{}", fields.join(","))?;
    }
    if a.critical {
        for i in table.stability_flips() {
            let (lo, hi) = (table.rows[i].param, table.rows[i + 1].param);
            let c = critical_parameter(&builder, param, (lo, hi))?;
            eprintln!("stability boundary between {lo} and {hi}: {}", num(c));
        }
    }
    Ok(())
}

fn constraints(a: &ConstraintArgs, out: &mut impl Write) -> Result<()> {
    let p = DObParams::new(a.alpha, a.gdob)?.with_ts(a.ts)?;
    let g = OuterGains::new(a.kp, a.kd)?;
    let spec = PeakSpec::new(a.gamma_s, a.gamma_t).context("invalid peak budget")?;
    let r = check_constraints(&p, &g, &spec)?;
    let m = r.margins;
    writeln!(out, "constraint,pass,margin")?;
    for (name, pass, margin) in [
        ("inner_stable", r.inner_stable, m.inner_stable),
        ("no_ringing", r.no_ringing, m.no_ringing),
        ("sensitivity_peak", r.sensitivity_peak_ok, m.sensitivity_peak),
        ("complementary_peak", r.complementary_peak_ok, m.complementary_peak),
        ("continuous_stability", r.continuous_stability_ok, m.continuous_stability),
    ] {
        writeln!(out, "{name},{},{}", if pass { "pass" } else { "fail" }, num(margin))?;
    }
    if r.continuous_disagreement {
        eprintln!(
            "warning: closed-form continuous stability predicate says {}, closed-loop roots say {}",
            verdict(r.continuous_stability_ok),
            verdict(r.continuous_roots_stable)
        );
    }
    Ok(())
}

fn verdict(stable: bool) -> &'static str {
    if stable {
        "stable"
    } else {
        "unstable"
    }
}

fn bode(a: &LoopArgs, out: &mut impl Write) -> Result<()> {
    let set = a.loop_set()?;
    let r = bode_integral(&set.l)?;
    writeln!(out, "quantity,value")?;
    for (k, v) in [
        ("integral", r.value),
        ("predicted", r.predicted),
        ("unstable_pole_term", r.rhp_pole_sum),
        ("limit_term", r.limit_term),
        ("error_estimate", r.error_estimate),
    ] {
        writeln!(out, "{k},{}", num(v))?;
    }
    if !r.admissible {
        eprintln!("warning: closed loop is unstable; the predicted value does not apply");
    }
    Ok(())
}
